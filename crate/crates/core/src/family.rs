//! h-parameterized operator families, the sampling grid for `h -> 0`, and the
//! tail estimator standing in for `lim sup_{h->0}`.
//!
//! A family is a declarative tree ([`FamilySpec`]) evaluated on demand at any
//! `h` in `(0, 1]`. Limits in `h` are replaced by the maximum over the last
//! `tail_window` samples of a geometric grid, together with a trend flag
//! fitted on those samples.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Bindings, FuncExpr, Variable};
use crate::funcalc::DerivedFamily;
use crate::linalg::{ComplexMatrix, C64};
use crate::parallel;

/// Default vanish tolerance relative to `1 + |trace(h0)|`.
pub const VANISH_RTOL: f64 = 1e-4;
/// Slopes below this (relative to `1 + max |value|`) count as flat.
pub const TREND_DEADBAND: f64 = 1e-10;

/// Strictly decreasing samples in `(0, 1]` with a designated tail window.
#[derive(Clone, Debug, PartialEq)]
pub struct HGrid {
    samples: Vec<f64>,
    tail_window: usize,
}

impl HGrid {
    pub fn new(samples: Vec<f64>, tail_window: usize) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::BadParameter(format!(
                "h-grid needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        if tail_window == 0 || tail_window > samples.len() {
            return Err(Error::BadParameter(format!(
                "tail window {tail_window} must lie in 1..={}",
                samples.len()
            )));
        }
        if !(samples[0] > 0.0 && samples[0] <= 1.0) {
            return Err(Error::BadParameter("h samples must lie in (0, 1]".into()));
        }
        if samples.windows(2).any(|w| !(w[1] > 0.0 && w[1] < w[0])) {
            return Err(Error::BadParameter(
                "h samples must be strictly decreasing and positive".into(),
            ));
        }
        Ok(HGrid { samples, tail_window })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn tail_window(&self) -> usize {
        self.tail_window
    }

    /// Index of the first tail sample.
    pub fn tail_start(&self) -> usize {
        self.samples.len() - self.tail_window
    }

    pub fn tail(&self) -> &[f64] {
        &self.samples[self.tail_start()..]
    }

    pub fn with_tail_window(&self, tail_window: usize) -> Result<Self> {
        HGrid::new(self.samples.clone(), tail_window)
    }
}

impl Default for HGrid {
    /// `h0 = 1`, ratio `1/2`, 20 samples, tail of 6.
    fn default() -> Self {
        hgrid_geometric(1.0, 0.5, 20, 6).expect("default grid parameters are valid")
    }
}

/// Geometric grid `h0 * ratio^j`, `j = 0..count`.
pub fn hgrid_geometric(h0: f64, ratio: f64, count: usize, tail_window: usize) -> Result<HGrid> {
    if !(h0 > 0.0 && h0 <= 1.0) {
        return Err(Error::BadParameter(format!("h0 = {h0} must lie in (0, 1]")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::BadParameter(format!("ratio = {ratio} must lie in (0, 1)")));
    }
    let samples = (0..count).map(|j| h0 * ratio.powi(j as i32)).collect();
    HGrid::new(samples, tail_window)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    /// Values shrink as `h -> 0`.
    Decreasing,
    Flat,
    /// Values grow as `h -> 0`.
    Increasing,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
            Trend::Increasing => "increasing",
        }
    }
}

/// Numerical surrogate for `lim sup_{h->0}` of a scalar trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TailEstimate {
    pub value: f64,
    pub trend: Trend,
    pub window_values: Vec<f64>,
}

impl TailEstimate {
    /// Builds the estimate from the tail samples and their `h` values.
    pub fn from_window(window_values: Vec<f64>, window_h: &[f64]) -> TailEstimate {
        let value = window_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let trend = fit_trend(&window_values, window_h);
        TailEstimate {
            value,
            trend,
            window_values,
        }
    }
}

/// Sign of the least-squares slope of `values` against `ln h`.
fn fit_trend(values: &[f64], hs: &[f64]) -> Trend {
    if values.iter().any(|v| !v.is_finite()) {
        return if values.last().is_some_and(|v| !v.is_finite()) {
            Trend::Increasing
        } else {
            Trend::Flat
        };
    }
    let n = values.len() as f64;
    if values.len() < 2 {
        return Trend::Flat;
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let scale = 1.0 + values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    // ln h decreases toward the limit, so a positive slope means shrinking values.
    // A non-monotone rise no larger than O(h) across the window is an
    // oscillation dying out with h, not growth.
    let span = xs[0] - xs[xs.len() - 1];
    let rise = -slope * span;
    let monotone = values.windows(2).all(|w| w[1] > w[0]);
    if slope > TREND_DEADBAND * scale {
        Trend::Decreasing
    } else if slope < -TREND_DEADBAND * scale && (monotone || rise > hs[0] * scale) {
        Trend::Increasing
    } else {
        Trend::Flat
    }
}

fn check_aligned(values: &[f64], grid: &HGrid) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: values.len(),
        });
    }
    Ok(())
}

/// Max over the tail window plus the fitted trend.
pub fn tail_limsup(values: &[f64], grid: &HGrid) -> Result<TailEstimate> {
    check_aligned(values, grid)?;
    let start = grid.tail_start();
    Ok(TailEstimate::from_window(values[start..].to_vec(), grid.tail()))
}

/// `1e-4 * (1 + |trace at h0|)`.
pub fn default_vanish_tol(values: &[f64]) -> f64 {
    VANISH_RTOL * (1.0 + values.first().map_or(0.0, |v| v.abs()))
}

/// True iff the tail max is at most `tol` and the tail is not growing.
pub fn vanishes(values: &[f64], grid: &HGrid, tol: f64) -> Result<bool> {
    let est = tail_limsup(values, grid)?;
    Ok(est.value <= tol && est.trend != Trend::Increasing)
}

/// Evaluates a scalar functional at every grid sample, in grid order.
///
/// Samples may be evaluated concurrently; a failure is reported with the
/// offending `h` attached.
pub fn scalar_trace<F>(f: F, grid: &HGrid) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    parallel::install(|| {
        grid.samples()
            .par_iter()
            .map(|&h| f(h).map_err(|e| Error::at_h(h, e)))
            .collect()
    })
}

/// Declarative generator of an operator family `h -> T_h`.
#[derive(Clone, Debug)]
pub struct FamilySpec {
    dim: usize,
    node: FamilyNode,
}

#[derive(Clone, Debug)]
pub enum FamilyNode {
    Constant(ComplexMatrix),
    Jordan {
        eigenvalue: C64,
    },
    /// Diagonal matrix whose entries are expressions in `h`.
    DiagExpr(Vec<DiagEntry>),
    /// `h` times the inner family.
    HScaled(Box<FamilySpec>),
    Sum(Vec<FamilySpec>),
    /// Ordered product, left to right.
    Product(Vec<FamilySpec>),
    /// h-independent matrix with entries uniform in `scale * [-1, 1]` (real and imaginary parts).
    SeededRandom {
        seed: u64,
        scale: f64,
    },
    /// Holomorphic image of another family; see [`crate::funcalc::family_funcalc`].
    Funcalc(Arc<DerivedFamily>),
}

/// One diagonal expression together with its source text.
#[derive(Clone, Debug)]
pub struct DiagEntry {
    pub source: String,
    pub expr: FuncExpr,
}

impl DiagEntry {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = FuncExpr::parse(source)?;
        if expr.uses(Variable::Lambda) {
            return Err(Error::BadParameter(format!(
                "diagonal entry `{source}` may only depend on h"
            )));
        }
        Ok(DiagEntry {
            source: source.to_string(),
            expr,
        })
    }
}

impl FamilySpec {
    pub(crate) fn from_parts(dim: usize, node: FamilyNode) -> Self {
        FamilySpec { dim, node }
    }

    pub fn constant(m: ComplexMatrix) -> Self {
        FamilySpec {
            dim: m.dim(),
            node: FamilyNode::Constant(m),
        }
    }

    pub fn jordan(dim: usize, eigenvalue: C64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadParameter("dimension must be at least 1".into()));
        }
        Ok(FamilySpec {
            dim,
            node: FamilyNode::Jordan { eigenvalue },
        })
    }

    pub fn diag_expr<S: AsRef<str>>(entries: &[S]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::BadParameter("diag_expr needs at least one entry".into()));
        }
        let parsed = entries
            .iter()
            .map(|s| DiagEntry::parse(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(FamilySpec {
            dim: parsed.len(),
            node: FamilyNode::DiagExpr(parsed),
        })
    }

    pub fn h_scaled(inner: FamilySpec) -> Self {
        FamilySpec {
            dim: inner.dim,
            node: FamilyNode::HScaled(Box::new(inner)),
        }
    }

    pub fn sum(terms: Vec<FamilySpec>) -> Result<Self> {
        let dim = common_dim(&terms)?;
        Ok(FamilySpec {
            dim,
            node: FamilyNode::Sum(terms),
        })
    }

    pub fn product(factors: Vec<FamilySpec>) -> Result<Self> {
        let dim = common_dim(&factors)?;
        Ok(FamilySpec {
            dim,
            node: FamilyNode::Product(factors),
        })
    }

    pub fn random(dim: usize, seed: u64, scale: f64) -> Result<Self> {
        if dim == 0 || !scale.is_finite() {
            return Err(Error::BadParameter(
                "random family needs dim >= 1 and finite scale".into(),
            ));
        }
        Ok(FamilySpec {
            dim,
            node: FamilyNode::SeededRandom { seed, scale },
        })
    }

    /// The zero family of dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        FamilySpec::constant(ComplexMatrix::zeros(dim))
    }

    /// `self + other`.
    pub fn plus(&self, other: &FamilySpec) -> Result<Self> {
        FamilySpec::sum(vec![self.clone(), other.clone()])
    }

    /// `self * other`.
    pub fn times(&self, other: &FamilySpec) -> Result<Self> {
        FamilySpec::product(vec![self.clone(), other.clone()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self) -> &FamilyNode {
        &self.node
    }

    /// Evaluates the family at `h`.
    pub fn eval(&self, h: f64) -> Result<ComplexMatrix> {
        family_eval(self, h)
    }
}

fn common_dim(children: &[FamilySpec]) -> Result<usize> {
    let first = children
        .first()
        .ok_or_else(|| Error::BadParameter("composite family needs at least one child".into()))?;
    for c in &children[1..] {
        if c.dim != first.dim {
            return Err(Error::DimensionMismatch {
                left: first.dim,
                right: c.dim,
            });
        }
    }
    Ok(first.dim)
}

/// Deterministic random matrix used by [`FamilyNode::SeededRandom`].
pub fn seeded_matrix(dim: usize, seed: u64, scale: f64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(dim, |_, _| {
        let re: f64 = rng.gen_range(-1.0..=1.0);
        let im: f64 = rng.gen_range(-1.0..=1.0);
        C64::new(re * scale, im * scale)
    })
}

/// The matrix `T_h` for one `h` in `(0, 1]`.
pub fn family_eval(spec: &FamilySpec, h: f64) -> Result<ComplexMatrix> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::BadParameter(format!("h = {h} must lie in (0, 1]")));
    }
    eval_node(spec, h)
}

fn eval_node(spec: &FamilySpec, h: f64) -> Result<ComplexMatrix> {
    Ok(match &spec.node {
        FamilyNode::Constant(m) => m.clone(),
        FamilyNode::Jordan { eigenvalue } => ComplexMatrix::jordan(spec.dim, *eigenvalue),
        FamilyNode::DiagExpr(entries) => {
            let b = Bindings::h(h);
            let diag = entries
                .iter()
                .map(|e| e.expr.eval(&b).map_err(|err| Error::at_h(h, err.into())))
                .collect::<Result<Vec<_>>>()?;
            if diag.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::at_h(
                    h,
                    Error::BadParameter("diagonal expression is not finite".into()),
                ));
            }
            ComplexMatrix::from_diag(&diag)
        }
        FamilyNode::HScaled(inner) => eval_node(inner, h)?.scale_real(h),
        FamilyNode::Sum(terms) => {
            let mut acc = eval_node(&terms[0], h)?;
            for t in &terms[1..] {
                acc = acc.add(&eval_node(t, h)?)?;
            }
            acc
        }
        FamilyNode::Product(factors) => {
            let mut acc = eval_node(&factors[0], h)?;
            for f in &factors[1..] {
                acc = acc.mul(&eval_node(f, h)?)?;
            }
            acc
        }
        FamilyNode::SeededRandom { seed, scale } => seeded_matrix(spec.dim, *seed, *scale),
        FamilyNode::Funcalc(derived) => derived.eval(h)?,
    })
}

/// `[f(h_0), f(h_1), ...]` for `f(h) = ||S_h||` style functionals of one family.
pub fn norm_trace(spec: &FamilySpec, grid: &HGrid) -> Result<Vec<f64>> {
    scalar_trace(|h| Ok(crate::linalg::norm2(&family_eval(spec, h)?)), grid)
}
