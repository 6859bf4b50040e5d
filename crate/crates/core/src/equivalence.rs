//! Decision procedures for asymptotic equivalence, asymptotic commuting,
//! asymptotic quasinilpotent equivalence, and asymptotic quasinilpotence.

use serde_json::{json, Value};

use crate::bracket::{bracket_sequence, root_limit, BracketSequence, RootLimit};
use crate::error::{Error, Result};
use crate::family::{default_vanish_tol, scalar_trace, tail_limsup, FamilySpec, HGrid, TailEstimate, Trend};
use crate::linalg::norm2;
use crate::report::json_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictKind {
    AsymptoticEquiv,
    AsymptoticCommuting,
    QuasinilpotentEquiv,
    QuasinilpotentSingle,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::AsymptoticEquiv => "asymptotic_equiv",
            VerdictKind::AsymptoticCommuting => "asymptotic_commuting",
            VerdictKind::QuasinilpotentEquiv => "quasinilpotent_equiv",
            VerdictKind::QuasinilpotentSingle => "quasinilpotent_single",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Holds => "holds",
            Outcome::Fails => "fails",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Evidence {
    Tail {
        estimate: TailEstimate,
        tol: f64,
    },
    Brackets {
        forward: BracketSequence,
        forward_limit: RootLimit,
        backward: BracketSequence,
        backward_limit: RootLimit,
    },
}

#[derive(Clone, Debug)]
pub struct EquivalenceVerdict {
    pub kind: VerdictKind,
    pub result: Outcome,
    pub evidence: Evidence,
    pub both_directions: bool,
}

impl EquivalenceVerdict {
    pub fn holds(&self) -> bool {
        self.result == Outcome::Holds
    }

    /// `{kind, result, evidence_summary, both_directions}`.
    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind.as_str(),
            "result": self.result.as_str(),
            "evidence_summary": evidence_json(&self.evidence),
            "both_directions": self.both_directions,
        })
    }
}

fn tail_json(t: &TailEstimate) -> Value {
    json!({
        "value": json_f64(t.value),
        "trend": t.trend.as_str(),
        "window_values": t.window_values.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
    })
}

fn limit_json(l: RootLimit) -> Value {
    match l {
        RootLimit::Zero => json!({"class": "zero"}),
        RootLimit::Positive(r) => json!({"class": "positive", "estimate": json_f64(r)}),
        RootLimit::Inconclusive => json!({"class": "inconclusive"}),
    }
}

fn sequence_json(seq: &BracketSequence, limit: RootLimit) -> Value {
    json!({
        "n_max": seq.n_max,
        "a_n": seq.norms.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
        "roots": seq.roots.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
        "limit": limit_json(limit),
    })
}

fn evidence_json(e: &Evidence) -> Value {
    match e {
        Evidence::Tail { estimate, tol } => json!({
            "tail": tail_json(estimate),
            "tol": json_f64(*tol),
        }),
        Evidence::Brackets {
            forward,
            forward_limit,
            backward,
            backward_limit,
        } => json!({
            "forward": sequence_json(forward, *forward_limit),
            "backward": sequence_json(backward, *backward_limit),
        }),
    }
}

fn check_dims(sf: &FamilySpec, tf: &FamilySpec) -> Result<()> {
    if sf.dim() != tf.dim() {
        return Err(Error::DimensionMismatch {
            left: sf.dim(),
            right: tf.dim(),
        });
    }
    Ok(())
}

fn tail_verdict(kind: VerdictKind, values: &[f64], grid: &HGrid, tol: Option<f64>) -> Result<EquivalenceVerdict> {
    let tol = tol.unwrap_or_else(|| default_vanish_tol(values));
    let estimate = tail_limsup(values, grid)?;
    let result = if estimate.value > tol {
        Outcome::Fails
    } else if estimate.trend == Trend::Increasing {
        Outcome::Inconclusive
    } else {
        Outcome::Holds
    };
    Ok(EquivalenceVerdict {
        kind,
        result,
        evidence: Evidence::Tail { estimate, tol },
        both_directions: true,
    })
}

/// `||S_h - T_h|| -> 0`. `tol = None` uses the scale-aware default.
pub fn asymptotic_equiv(
    sf: &FamilySpec,
    tf: &FamilySpec,
    grid: &HGrid,
    tol: Option<f64>,
) -> Result<EquivalenceVerdict> {
    check_dims(sf, tf)?;
    let values = scalar_trace(|h| Ok(norm2(&sf.eval(h)?.sub(&tf.eval(h)?)?)), grid)?;
    tail_verdict(VerdictKind::AsymptoticEquiv, &values, grid, tol)
}

/// `||S_h T_h - T_h S_h|| -> 0`.
pub fn asymptotic_commuting(
    sf: &FamilySpec,
    tf: &FamilySpec,
    grid: &HGrid,
    tol: Option<f64>,
) -> Result<EquivalenceVerdict> {
    check_dims(sf, tf)?;
    let values = scalar_trace(
        |h| {
            let s = sf.eval(h)?;
            let t = tf.eval(h)?;
            Ok(norm2(&s.mul(&t)?.sub(&t.mul(&s)?)?))
        },
        grid,
    )?;
    tail_verdict(VerdictKind::AsymptoticCommuting, &values, grid, tol)
}

fn combine(forward: RootLimit, backward: RootLimit) -> Outcome {
    match (forward, backward) {
        (RootLimit::Zero, RootLimit::Zero) => Outcome::Holds,
        (RootLimit::Positive(_), _) | (_, RootLimit::Positive(_)) => Outcome::Fails,
        _ => Outcome::Inconclusive,
    }
}

/// Both `lim_n (lim sup_h ||(S_h-T_h)^[n]||)^(1/n)` and its mirror vanish.
pub fn quasinilpotent_equiv(
    sf: &FamilySpec,
    tf: &FamilySpec,
    grid: &HGrid,
    n_max: usize,
    tol: f64,
) -> Result<EquivalenceVerdict> {
    check_dims(sf, tf)?;
    let (forward, backward) = crate::parallel::install(|| {
        rayon::join(
            || bracket_sequence(sf, tf, grid, n_max),
            || bracket_sequence(tf, sf, grid, n_max),
        )
    });
    let (forward, backward) = (forward?, backward?);
    let forward_limit = root_limit(&forward, tol);
    let backward_limit = root_limit(&backward, tol);
    Ok(EquivalenceVerdict {
        kind: VerdictKind::QuasinilpotentEquiv,
        result: combine(forward_limit, backward_limit),
        evidence: Evidence::Brackets {
            forward,
            forward_limit,
            backward,
            backward_limit,
        },
        both_directions: true,
    })
}

/// `lim_n (lim sup_h ||U_h^n||)^(1/n) = 0`: quasinilpotent equivalence with the zero family.
pub fn is_asymptotic_quasinilpotent(
    uf: &FamilySpec,
    grid: &HGrid,
    n_max: usize,
    tol: f64,
) -> Result<EquivalenceVerdict> {
    let zero = FamilySpec::zero(uf.dim());
    let mut verdict = quasinilpotent_equiv(uf, &zero, grid, n_max, tol)?;
    verdict.kind = VerdictKind::QuasinilpotentSingle;
    Ok(verdict)
}
