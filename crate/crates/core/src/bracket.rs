//! The bracket `(T-S)^[n] = sum_k (-1)^(n-k) C(n,k) T^k S^(n-k)`, its
//! recurrences and identities, and the n-th root sequences behind
//! quasinilpotent equivalence of families.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{FamilySpec, HGrid, TailEstimate};
use crate::linalg::{matrix_power, norm2, ComplexMatrix};
use crate::parallel;

pub const MAX_BINOM_N: u64 = 60;
pub const MAX_SEQUENCE_N: usize = 40;
pub const DEFAULT_N_MAX: usize = 24;
pub const MAX_COMPOSE_N: usize = 30;
/// Number of trailing roots inspected by [`root_limit`].
pub const ROOT_TAIL: usize = 4;
/// Relative half-width of the band that certifies a positive root limit.
pub const ROOT_BAND: f64 = 0.10;
pub const DEFAULT_ROOT_TOL: f64 = 1e-2;

/// Exact binomial coefficient for `0 <= k <= n <= 60`.
pub fn binom(n: u64, k: u64) -> Result<u64> {
    if n > MAX_BINOM_N || k > n {
        return Err(Error::OutOfRange(format!(
            "binom({n}, {k}) needs 0 <= k <= n <= {MAX_BINOM_N}"
        )));
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) / i stays integral at every step
        acc = acc * (n as u128 - k as u128 + i) / i;
    }
    u64::try_from(acc).map_err(|_| Error::OutOfRange(format!("binom({n}, {k}) overflows u64")))
}

fn check_pair(t: &ComplexMatrix, s: &ComplexMatrix, n: usize, cap: usize) -> Result<()> {
    if t.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            left: t.dim(),
            right: s.dim(),
        });
    }
    if n > cap {
        return Err(Error::OutOfRange(format!("bracket order {n} exceeds {cap}")));
    }
    Ok(())
}

/// `(T-S)^[n]` evaluated term by term from the alternating binomial sum.
pub fn bracket_direct(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    check_pair(t, s, n, MAX_BINOM_N as usize)?;
    let mut acc = ComplexMatrix::zeros(t.dim());
    for k in 0..=n {
        let c = binom(n as u64, k as u64)? as f64;
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        let term = matrix_power(t, k as u32).mul(&matrix_power(s, (n - k) as u32))?;
        acc = acc.add(&term.scale_real(sign * c))?;
    }
    Ok(acc)
}

/// `(T-S)^[n]` from `(T-S)^[0] = I` and `(T-S)^[m+1] = T (T-S)^[m] - (T-S)^[m] S`.
pub fn bracket_recurrence(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    Ok(bracket_ladder(t, s, n)?.pop().expect("ladder is never empty"))
}

/// All brackets `(T-S)^[0..=n]` from the recurrence.
pub fn bracket_ladder(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> Result<Vec<ComplexMatrix>> {
    check_pair(t, s, n, MAX_BINOM_N as usize)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(ComplexMatrix::identity(t.dim()));
    for m in 0..n {
        let b = &out[m];
        let next = t.mul(b)?.sub(&b.mul(s)?)?;
        out.push(next);
    }
    Ok(out)
}

/// Norm of `(T-S)^[n] - sum_k C(n,k) (T-P)^[k] (P-S)^[n-k]`.
pub fn bracket_compose_check(t: &ComplexMatrix, s: &ComplexMatrix, p: &ComplexMatrix, n: usize) -> Result<f64> {
    check_pair(t, s, n, MAX_COMPOSE_N)?;
    check_pair(t, p, n, MAX_COMPOSE_N)?;
    let lhs = bracket_direct(t, s, n)?;
    let left = bracket_ladder(t, p, n)?;
    let right = bracket_ladder(p, s, n)?;
    let mut rhs = ComplexMatrix::zeros(t.dim());
    for k in 0..=n {
        let c = binom(n as u64, k as u64)? as f64;
        rhs = rhs.add(&left[k].mul(&right[n - k])?.scale_real(c))?;
    }
    Ok(norm2(&lhs.sub(&rhs)?))
}

/// Norm of `(T-S)^[n] - (-1)^n (S-T)^[n] - sum_{k=1}^{n-1} (-1)^(n-k) C(n,k) (T^k S^(n-k) - S^(n-k) T^k)`.
pub fn swap_identity_residual(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> Result<f64> {
    check_pair(t, s, n, MAX_COMPOSE_N)?;
    let lhs = bracket_direct(t, s, n)?;
    let sign_n = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut rhs = bracket_direct(s, t, n)?.scale_real(sign_n);
    for k in 1..n {
        let c = binom(n as u64, k as u64)? as f64;
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        let tk = matrix_power(t, k as u32);
        let snk = matrix_power(s, (n - k) as u32);
        let comm = tk.mul(&snk)?.sub(&snk.mul(&tk)?)?;
        rhs = rhs.add(&comm.scale_real(sign * c))?;
    }
    Ok(norm2(&lhs.sub(&rhs)?))
}

/// `a_n = lim sup_h ||(S_h - T_h)^[n]||` for `n = 1..=n_max`, with n-th roots.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketSequence {
    pub n_max: usize,
    /// Limit estimates `a_1..a_{n_max}`.
    pub norms: Vec<f64>,
    /// `norms[i]^(1/(i+1))`.
    pub roots: Vec<f64>,
    /// Raw tail evidence for each order.
    pub tails: Vec<TailEstimate>,
}

impl BracketSequence {
    /// Builds the sequence from per-order tail estimates.
    ///
    /// A trace whose tail keeps decaying toward zero like a power of `h`
    /// (see [`decays_to_zero`]) has zero as its limit; its tail maximum only
    /// reflects how far the grid reaches, so it is recorded as zero.
    pub fn from_tails(tails: Vec<TailEstimate>, window_h: &[f64]) -> BracketSequence {
        let norms: Vec<f64> = tails
            .iter()
            .map(|t| if decays_to_zero(t, window_h) { 0.0 } else { t.value })
            .collect();
        let roots = norms
            .iter()
            .enumerate()
            .map(|(i, &a)| a.powf(1.0 / (i + 1) as f64))
            .collect();
        BracketSequence {
            n_max: tails.len(),
            norms,
            roots,
            tails,
        }
    }

    /// CSV with columns `n,a_n,root`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a_n,root\n");
        for (i, (a, r)) in self.norms.iter().zip(&self.roots).enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                i + 1,
                crate::report::fmt_f64(*a),
                crate::report::fmt_f64(*r)
            ));
        }
        out
    }
}

/// Tail shrinks toward zero at least like `h^(1/2)` between every pair of consecutive samples.
///
/// The ratio test is scale free, unlike the trend flag whose dead-band
/// swallows traces that are already tiny but still decaying geometrically.
pub fn decays_to_zero(est: &TailEstimate, window_h: &[f64]) -> bool {
    let v = &est.window_values;
    if v.iter().all(|&x| x == 0.0) {
        return true;
    }
    if v.len() < 2 {
        return false;
    }
    v.windows(2).zip(window_h.windows(2)).all(|(pair, hs)| {
        if pair[0] == 0.0 {
            pair[1] == 0.0
        } else {
            pair[1] / pair[0] <= (hs[1] / hs[0]).sqrt()
        }
    })
}

/// Bracket norms of the pair `(S_h, T_h)` across the grid, tail first then order.
pub fn bracket_sequence(sf: &FamilySpec, tf: &FamilySpec, grid: &HGrid, n_max: usize) -> Result<BracketSequence> {
    if sf.dim() != tf.dim() {
        return Err(Error::DimensionMismatch {
            left: sf.dim(),
            right: tf.dim(),
        });
    }
    if n_max == 0 || n_max > MAX_SEQUENCE_N {
        return Err(Error::OutOfRange(format!(
            "n_max = {n_max} must lie in 1..={MAX_SEQUENCE_N}"
        )));
    }
    // rows: h samples; columns: orders 1..=n_max
    let per_h: Vec<Vec<f64>> = parallel::install(|| {
        grid.samples()
            .par_iter()
            .map(|&h| -> Result<Vec<f64>> {
                let s = sf.eval(h)?;
                let t = tf.eval(h)?;
                let ladder = bracket_ladder(&s, &t, n_max).map_err(|e| Error::at_h(h, e))?;
                Ok(ladder[1..].iter().map(norm2).collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let start = grid.tail_start();
    let tails = (0..n_max)
        .map(|n| {
            let window: Vec<f64> = per_h[start..].iter().map(|row| row[n]).collect();
            TailEstimate::from_window(window, grid.tail())
        })
        .collect();
    Ok(BracketSequence::from_tails(tails, grid.tail()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootLimit {
    Zero,
    Positive(f64),
    Inconclusive,
}

/// Classifies the trailing n-th roots.
///
/// `Zero` when the last four roots are at most `tol` and non-increasing;
/// `Positive(mean)` when they sit within 10% of a mean above `tol`.
pub fn root_limit(seq: &BracketSequence, tol: f64) -> RootLimit {
    classify_roots(&seq.roots, tol)
}

pub fn classify_roots(roots: &[f64], tol: f64) -> RootLimit {
    if roots.len() < ROOT_TAIL {
        return RootLimit::Inconclusive;
    }
    let last = &roots[roots.len() - ROOT_TAIL..];
    if last.iter().any(|r| !r.is_finite()) {
        return RootLimit::Inconclusive;
    }
    if last.iter().all(|&r| r <= tol) && last.windows(2).all(|w| w[1] <= w[0]) {
        return RootLimit::Zero;
    }
    let mean = last.iter().sum::<f64>() / ROOT_TAIL as f64;
    if mean > tol && last.iter().all(|&r| (r - mean).abs() <= ROOT_BAND * mean) {
        return RootLimit::Positive(mean);
    }
    RootLimit::Inconclusive
}

/// `(T - S)^n`, the ordinary power the bracket collapses to when `T` and `S` commute.
pub fn difference_power(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    Ok(matrix_power(&t.sub(s)?, n as u32))
}
