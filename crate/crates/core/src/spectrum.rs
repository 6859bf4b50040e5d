//! Family resolvent sets and spectra.
//!
//! A point `lambda` belongs to the resolvent set of `{S_h}` when some bounded
//! family `R(lambda, S_h)` inverts `lambda I - S_h` on both sides up to
//! terms vanishing as `h -> 0`. Numerically the candidate is the exact
//! per-`h` inverse and boundedness is read off the tail of
//! `||(lambda I - S_h)^-1||` (the resolvent-norm field).

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bracket::bracket_ladder;
use crate::error::{Error, Result};
use crate::family::{scalar_trace, tail_limsup, vanishes, FamilySpec, HGrid, TailEstimate};
use crate::linalg::{norm2, solve_inverse, ComplexMatrix, Inversion, C64};
use crate::parallel;
use crate::report::{fmt_f64, json_f64};

pub const MIN_RESOLUTION: usize = 21;
pub const DEFAULT_RESOLUTION: usize = 101;
/// Default threshold, relative to the upper quotient-norm bound.
pub const DEFAULT_EPSILON_REL: f64 = 1e-3;
/// Default region half-width, relative to the upper quotient-norm bound.
pub const DEFAULT_REGION_SCALE: f64 = 1.25;
pub const MAX_SERIES_TERMS: usize = 30;
/// Last series term above this fraction of the partial sum raises the truncation warning.
pub const SERIES_TRUNCATION_RTOL: f64 = 1e-10;

/// Square scan window of `resolution x resolution` points centered on `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexRegion {
    center: C64,
    half_width: f64,
    resolution: usize,
}

impl ComplexRegion {
    pub fn new(center: C64, half_width: f64, resolution: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::BadParameter(format!("half width {half_width} must be positive")));
        }
        if resolution < MIN_RESOLUTION || resolution.is_multiple_of(2) {
            return Err(Error::BadParameter(format!(
                "resolution {resolution} must be odd and at least {MIN_RESOLUTION}"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::BadParameter("region center must be finite".into()));
        }
        Ok(ComplexRegion {
            center,
            half_width,
            resolution,
        })
    }

    /// Centered at 0 with half-width `1.25 * upper`, 101 points per axis.
    pub fn default_for(upper: f64) -> Self {
        let hw = if upper > 0.0 { DEFAULT_REGION_SCALE * upper } else { 1.0 };
        ComplexRegion::new(C64::new(0.0, 0.0), hw, DEFAULT_RESOLUTION).expect("valid defaults")
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Distance between neighboring grid points.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.resolution - 1) as f64
    }

    /// Grid point in column `ix` (real axis) and row `iy` (imaginary axis).
    pub fn point(&self, ix: usize, iy: usize) -> C64 {
        let m = (self.resolution / 2) as f64;
        let d = self.spacing();
        self.center + C64::new((ix as f64 - m) * d, (iy as f64 - m) * d)
    }

    /// Row-major (imaginary-major) list of all grid points.
    pub fn points(&self) -> Vec<C64> {
        let r = self.resolution;
        (0..r * r).map(|k| self.point(k % r, k / r)).collect()
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Values of a scalar functional over the whole h-grid, with its tail estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub values: Vec<f64>,
    pub tail: TailEstimate,
}

impl Trace {
    pub fn new(values: Vec<f64>, grid: &HGrid) -> Result<Self> {
        let tail = tail_limsup(&values, grid)?;
        Ok(Trace { values, tail })
    }

    pub fn vanishes(&self, grid: &HGrid, tol: f64) -> Result<bool> {
        vanishes(&self.values, grid, tol)
    }
}

/// Per-`h` inverses of `lambda I - S_h` and the tail of their norms.
#[derive(Clone, Debug)]
pub struct ResolventAt {
    pub lambda: C64,
    pub per_h: Vec<Inversion>,
    /// `||(lambda I - S_h)^-1||`, `+inf` where singular.
    pub norms: Vec<f64>,
    pub tail: TailEstimate,
}

impl ResolventAt {
    /// Finite tail: the point is numerically resolved.
    pub fn is_resolved(&self) -> bool {
        self.tail.value.is_finite()
    }

    /// Bounded representative family: the exact inverse where it exists,
    /// zero at (off-tail) singular samples.
    pub fn representative(&self) -> Result<Vec<ComplexMatrix>> {
        if !self.is_resolved() {
            return Err(Error::UnresolvedPoint(self.lambda));
        }
        let dim = self
            .per_h
            .iter()
            .find_map(|inv| inv.inverse().map(|m| m.dim()))
            .expect("resolved points have inverses in the tail");
        Ok(self
            .per_h
            .iter()
            .map(|inv| inv.inverse().cloned().unwrap_or_else(|| ComplexMatrix::zeros(dim)))
            .collect())
    }
}

/// Inverts `lambda I - S_h` at every grid sample.
pub fn resolvent_at(sf: &FamilySpec, lambda: C64, grid: &HGrid) -> Result<ResolventAt> {
    let per_h: Vec<Inversion> = parallel::install(|| {
        grid.samples()
            .par_iter()
            .map(|&h| Ok(solve_inverse(&sf.eval(h)?.shifted_from(lambda))))
            .collect::<Result<Vec<_>>>()
    })?;
    let norms: Vec<f64> = per_h
        .iter()
        .map(|inv| inv.inverse().map_or(f64::INFINITY, norm2))
        .collect();
    let tail = tail_limsup(&norms, grid)?;
    Ok(ResolventAt {
        lambda,
        per_h,
        norms,
        tail,
    })
}

/// Left and right defects `||(lambda I - S_h) R_h - I||` and `||R_h (lambda I - S_h) - I||`.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectPair {
    pub left: Trace,
    pub right: Trace,
}

impl DefectPair {
    pub fn vanishes(&self, grid: &HGrid, tol: f64) -> Result<bool> {
        Ok(self.left.vanishes(grid, tol)? && self.right.vanishes(grid, tol)?)
    }
}

/// Measures how well the candidate family `rf` inverts `lambda I - S_h`.
pub fn resolvent_defect(sf: &FamilySpec, rf: &[ComplexMatrix], lambda: C64, grid: &HGrid) -> Result<DefectPair> {
    if rf.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: rf.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = parallel::install(|| {
        grid.samples()
            .par_iter()
            .zip(rf.par_iter())
            .map(|(&h, r)| -> Result<(f64, f64)> {
                let a = sf.eval(h)?.shifted_from(lambda);
                let id = ComplexMatrix::identity(a.dim());
                let left = norm2(&a.mul(r)?.sub(&id)?);
                let right = norm2(&r.mul(&a)?.sub(&id)?);
                Ok((left, right))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (left, right): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(DefectPair {
        left: Trace::new(left, grid)?,
        right: Trace::new(right, grid)?,
    })
}

/// `lambda -> lim sup_h ||(lambda I - S_h)^-1||` sampled on a region.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolventField {
    pub region: ComplexRegion,
    /// Row-major over [`ComplexRegion::points`]; `+inf` marks a singular tail sample.
    pub values: Vec<f64>,
}

impl ResolventField {
    pub fn value_at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.region.resolution + ix]
    }

    /// CSV with columns `re,im,field_value`; the sentinel prints as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,field_value\n");
        for (lambda, v) in self.region.points().iter().zip(&self.values) {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(lambda.re),
                fmt_f64(lambda.im),
                fmt_f64(*v)
            ));
        }
        out
    }
}

/// Evaluates the resolvent-norm field. Only tail samples enter the lim sup,
/// so only they are evaluated.
pub fn resolvent_norm_field(sf: &FamilySpec, region: &ComplexRegion, grid: &HGrid) -> Result<ResolventField> {
    let tail: Vec<ComplexMatrix> = grid
        .tail()
        .iter()
        .map(|&h| sf.eval(h).map_err(|e| Error::at_h(h, e)))
        .collect::<Result<_>>()?;
    let points = region.points();
    let values = parallel::install(|| {
        points
            .par_iter()
            .map(|&lambda| {
                let mut worst: f64 = 0.0;
                for s in &tail {
                    match solve_inverse(&s.shifted_from(lambda)) {
                        Inversion::Inverse { inverse, .. } => worst = worst.max(norm2(&inverse)),
                        Inversion::Singular => return f64::INFINITY,
                    }
                }
                worst
            })
            .collect()
    });
    Ok(ResolventField {
        region: *region,
        values,
    })
}

/// A connected group of flagged grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub centroid: C64,
    /// Largest distance from the centroid to a member point.
    pub radius: f64,
    pub cell_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumEstimate {
    /// Requested threshold.
    pub epsilon: f64,
    /// Threshold actually applied: `max(epsilon, spacing / sqrt 2)`.
    pub effective_epsilon: f64,
    pub spacing: f64,
    pub flagged: Vec<C64>,
    pub clusters: Vec<Cluster>,
}

impl SpectrumEstimate {
    pub fn centroids(&self) -> Vec<C64> {
        self.clusters.iter().map(|c| c.centroid).collect()
    }

    /// `{epsilon, clusters: [{centroid_re, centroid_im, radius, cell_count}]}`.
    pub fn to_json(&self) -> Value {
        json!({
            "epsilon": json_f64(self.epsilon),
            "effective_epsilon": json_f64(self.effective_epsilon),
            "clusters": self.clusters.iter().map(|c| json!({
                "centroid_re": json_f64(c.centroid.re),
                "centroid_im": json_f64(c.centroid.im),
                "radius": json_f64(c.radius),
                "cell_count": c.cell_count,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Flags grid points whose field value reaches `1 / epsilon` and groups them
/// into 8-connected clusters.
///
/// The threshold is floored at half a cell diagonal: every spectral point then
/// has a grid neighbor whose resolvent norm is at least `1 / (spacing / sqrt 2)`,
/// so no part of the spectrum can fall between grid points unflagged.
pub fn spectrum_estimate(field: &ResolventField, epsilon: f64) -> Result<SpectrumEstimate> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::BadParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let region = &field.region;
    let r = region.resolution;
    let spacing = region.spacing();
    let effective = epsilon.max(spacing / std::f64::consts::SQRT_2);
    let threshold = 1.0 / effective;
    let mask: Vec<bool> = field.values.iter().map(|&v| v >= threshold).collect();

    let mut label = vec![usize::MAX; r * r];
    let mut clusters = Vec::new();
    let mut flagged = Vec::new();
    for start in 0..r * r {
        if mask[start] {
            flagged.push(region.point(start % r, start / r));
        }
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = Vec::new();
        let mut stack = vec![start];
        label[start] = id;
        while let Some(k) = stack.pop() {
            members.push(k);
            let (x, y) = ((k % r) as isize, (k / r) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= r as isize || ny >= r as isize {
                        continue;
                    }
                    let nk = ny as usize * r + nx as usize;
                    if mask[nk] && label[nk] == usize::MAX {
                        label[nk] = id;
                        stack.push(nk);
                    }
                }
            }
        }
        members.sort_unstable();
        let pts: Vec<C64> = members.iter().map(|&k| region.point(k % r, k / r)).collect();
        let centroid = pts.iter().sum::<C64>() / pts.len() as f64;
        let radius = pts.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
        clusters.push(Cluster {
            centroid,
            radius,
            cell_count: pts.len(),
        });
    }
    Ok(SpectrumEstimate {
        epsilon,
        effective_epsilon: effective,
        spacing,
        flagged,
        clusters,
    })
}

/// Both coordinates of `a - b` are within `cells` grid spacings.
pub fn within_cells(a: C64, b: C64, spacing: f64, cells: f64) -> bool {
    let tol = cells * spacing * (1.0 + 1e-9);
    (a.re - b.re).abs() <= tol && (a.im - b.im).abs() <= tol
}

/// One-to-one match of `found` against `expected` within `cells` grid spacings.
pub fn centroids_match(found: &[C64], expected: &[C64], spacing: f64, cells: f64) -> bool {
    if found.len() != expected.len() {
        return false;
    }
    let mut used = vec![false; found.len()];
    for e in expected {
        let best = found
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| (a.1 - e).norm().total_cmp(&(b.1 - e).norm()));
        match best {
            Some((i, f)) if within_cells(*f, *e, spacing, cells) => used[i] = true,
            _ => return false,
        }
    }
    true
}

/// `lower = lim sup_h ||S_h||` (tail max), `upper = sup_h ||S_h||` over the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn quotient_norm_bounds(sf: &FamilySpec, grid: &HGrid) -> Result<NormBounds> {
    let norms = crate::family::norm_trace(sf, grid)?;
    let lower = tail_limsup(&norms, grid)?.value;
    let upper = norms.iter().copied().fold(0.0, f64::max);
    Ok(NormBounds { lower, upper })
}

fn exact_representative(sf: &FamilySpec, lambda: C64, grid: &HGrid) -> Result<Vec<ComplexMatrix>> {
    resolvent_at(sf, lambda, grid)?.representative()
}

/// `||R_l - R_m - (mu - lambda) R_l R_m||` for given representative families.
pub fn equation_residual_trace(
    r_lambda: &[ComplexMatrix],
    r_mu: &[ComplexMatrix],
    lambda: C64,
    mu: C64,
    grid: &HGrid,
) -> Result<Trace> {
    check_len(r_lambda, grid)?;
    check_len(r_mu, grid)?;
    let values = r_lambda
        .iter()
        .zip(r_mu)
        .map(|(rl, rm)| Ok(norm2(&rl.sub(rm)?.sub(&rl.mul(rm)?.scale(mu - lambda))?)))
        .collect::<Result<Vec<_>>>()?;
    Trace::new(values, grid)
}

/// `||R_l R_m - R_m R_l||` for given representative families.
pub fn commutation_residual_trace(r_lambda: &[ComplexMatrix], r_mu: &[ComplexMatrix], grid: &HGrid) -> Result<Trace> {
    check_len(r_lambda, grid)?;
    check_len(r_mu, grid)?;
    let values = r_lambda
        .iter()
        .zip(r_mu)
        .map(|(a, b)| Ok(norm2(&a.mul(b)?.sub(&b.mul(a)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Trace::new(values, grid)
}

/// `||S_h R_h - R_h S_h||` for a given representative family.
pub fn operator_commutation_trace(sf: &FamilySpec, r: &[ComplexMatrix], grid: &HGrid) -> Result<Trace> {
    check_len(r, grid)?;
    let values = grid
        .samples()
        .iter()
        .zip(r)
        .map(|(&h, r)| {
            let s = sf.eval(h)?;
            Ok(norm2(&s.mul(r)?.sub(&r.mul(&s)?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Trace::new(values, grid)
}

/// `||A_h - B_h||` between two representative families.
pub fn difference_trace(a: &[ComplexMatrix], b: &[ComplexMatrix], grid: &HGrid) -> Result<Trace> {
    check_len(a, grid)?;
    check_len(b, grid)?;
    let values = a
        .iter()
        .zip(b)
        .map(|(x, y)| Ok(norm2(&x.sub(y)?)))
        .collect::<Result<Vec<_>>>()?;
    Trace::new(values, grid)
}

fn check_len(r: &[ComplexMatrix], grid: &HGrid) -> Result<()> {
    if r.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: r.len(),
        });
    }
    Ok(())
}

/// Resolvent equation residual with exact inverses.
pub fn resolvent_equation_residual(sf: &FamilySpec, lambda: C64, mu: C64, grid: &HGrid) -> Result<TailEstimate> {
    let rl = exact_representative(sf, lambda, grid)?;
    let rm = if mu == lambda {
        rl.clone()
    } else {
        exact_representative(sf, mu, grid)?
    };
    Ok(equation_residual_trace(&rl, &rm, lambda, mu, grid)?.tail)
}

/// Commutator of resolvents at `lambda` and `mu`, or of `S_h` with the
/// resolvent at `lambda` when `mu` is `None`. Exact inverses.
pub fn resolvent_commutation_residual(
    sf: &FamilySpec,
    lambda: C64,
    mu: Option<C64>,
    grid: &HGrid,
) -> Result<TailEstimate> {
    let rl = exact_representative(sf, lambda, grid)?;
    match mu {
        Some(mu) => {
            if mu == lambda {
                return Err(Error::BadParameter(
                    "the two-point commutator needs lambda != mu".into(),
                ));
            }
            let rm = exact_representative(sf, mu, grid)?;
            Ok(commutation_residual_trace(&rl, &rm, grid)?.tail)
        }
        None => Ok(operator_commutation_trace(sf, &rl, grid)?.tail),
    }
}

/// Resolvent of `{S_h}` transported from the resolvent of `{T_h}`.
#[derive(Clone, Debug)]
pub struct SeriesResolvent {
    /// Partial sums `sum_{n<=N} (S_h - T_h)^[n] R(lambda, T_h)^(n+1)`.
    pub per_h: Vec<ComplexMatrix>,
    /// Defects of the partial sums against `{S_h}`.
    pub defect: DefectPair,
    /// `||(S_h - T_h)^[n] R_T^(n+1)||` per sample and order.
    pub term_norms: Vec<Vec<f64>>,
    /// `||(S_h - T_h)^[n]|| * ||R_T||^(n+1)` per sample and order.
    pub term_bounds: Vec<Vec<f64>>,
    /// The last retained term is not negligible in the tail.
    pub truncation_warning: bool,
}

/// Builds `R(lambda) = sum_{n=0}^{N} (S_h - T_h)^[n] R(lambda, T_h)^(n+1)` per `h`.
///
/// With `(S-T)^[n+1] = S (S-T)^[n] - (S-T)^[n] T` each term telescopes, so
/// `(lambda I - S_h) R(lambda) = I - (S_h-T_h)^[N+1] R_T^(N+1)`: the left defect is
/// the first omitted bracket against a power of the resolvent.
pub fn series_resolvent(
    sf: &FamilySpec,
    tf: &FamilySpec,
    lambda: C64,
    grid: &HGrid,
    n_terms: usize,
) -> Result<SeriesResolvent> {
    if sf.dim() != tf.dim() {
        return Err(Error::DimensionMismatch {
            left: sf.dim(),
            right: tf.dim(),
        });
    }
    if n_terms > MAX_SERIES_TERMS {
        return Err(Error::OutOfRange(format!(
            "n_terms = {n_terms} exceeds {MAX_SERIES_TERMS}"
        )));
    }
    let rt = exact_representative(tf, lambda, grid)?;
    type Row = (ComplexMatrix, Vec<f64>, Vec<f64>);
    let rows: Vec<Row> = parallel::install(|| {
        grid.samples()
            .par_iter()
            .zip(rt.par_iter())
            .map(|(&h, r)| -> Result<Row> {
                let s = sf.eval(h)?;
                let t = tf.eval(h)?;
                let ladder = bracket_ladder(&s, &t, n_terms).map_err(|e| Error::at_h(h, e))?;
                let r_norm = norm2(r);
                let mut power = r.clone();
                let mut sum = ComplexMatrix::zeros(s.dim());
                let mut norms = Vec::with_capacity(n_terms + 1);
                let mut bounds = Vec::with_capacity(n_terms + 1);
                for (n, b) in ladder.iter().enumerate() {
                    let term = b.mul(&power)?;
                    norms.push(norm2(&term));
                    bounds.push(norm2(b) * r_norm.powi(n as i32 + 1));
                    sum = sum.add(&term)?;
                    power = power.mul(r)?;
                }
                Ok((sum, norms, bounds))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut per_h = Vec::with_capacity(rows.len());
    let mut term_norms = Vec::with_capacity(rows.len());
    let mut term_bounds = Vec::with_capacity(rows.len());
    for (sum, norms, bounds) in rows {
        per_h.push(sum);
        term_norms.push(norms);
        term_bounds.push(bounds);
    }
    let defect = resolvent_defect(sf, &per_h, lambda, grid)?;

    let start = grid.tail_start();
    let truncation_warning = (start..grid.len()).any(|j| {
        let last = *term_norms[j].last().expect("at least one term");
        n_terms > 0 && last > SERIES_TRUNCATION_RTOL * (1.0 + norm2(&per_h[j]))
    });
    Ok(SeriesResolvent {
        per_h,
        defect,
        term_norms,
        term_bounds,
        truncation_warning,
    })
}

/// Norm trace of a family, convenience for bound checks.
pub fn family_norm_trace(sf: &FamilySpec, grid: &HGrid) -> Result<Vec<f64>> {
    scalar_trace(|h| Ok(norm2(&sf.eval(h)?)), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::hgrid_geometric;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag12() -> FamilySpec {
        FamilySpec::constant(ComplexMatrix::from_real_diag(&[1.0, 2.0]))
    }

    #[test]
    fn region_validation() {
        assert!(ComplexRegion::new(c(0.0, 0.0), 1.0, 20).is_err());
        assert!(ComplexRegion::new(c(0.0, 0.0), 1.0, 19).is_err());
        assert!(ComplexRegion::new(c(0.0, 0.0), 0.0, 21).is_err());
        let r = ComplexRegion::new(c(1.5, 0.0), 2.0, 21).unwrap();
        assert_eq!(r.point(10, 10), c(1.5, 0.0));
        assert_eq!(r.points().len(), 441);
        assert!((r.spacing() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn resolvent_at_examples() {
        let g = HGrid::default();
        let r = resolvent_at(&diag12(), c(0.0, 0.0), &g).unwrap();
        let inv = r.per_h[0].inverse().unwrap();
        assert_eq!(inv, &ComplexMatrix::from_real_diag(&[-1.0, -0.5]));
        assert!((r.tail.value - 1.0).abs() < 1e-12);

        let r = resolvent_at(&diag12(), c(1.0, 0.0), &g).unwrap();
        assert!(r.per_h.iter().all(Inversion::is_singular));
        assert!(!r.is_resolved());
        assert!(matches!(r.representative(), Err(Error::UnresolvedPoint(_))));

        let d = FamilySpec::diag_expr(&["2+h"]).unwrap();
        let r = resolvent_at(&d, c(2.0, 0.0), &g).unwrap();
        for (h, n) in g.samples().iter().zip(&r.norms) {
            assert!((n * h - 1.0).abs() < 1e-9);
        }
        assert!((r.tail.value * g.tail()[g.tail_window() - 1] - 1.0).abs() < 1e-9);
        assert_eq!(r.tail.trend, crate::family::Trend::Increasing);
    }

    #[test]
    fn defect_examples() {
        let g = HGrid::default();
        let lambda = c(0.5, 0.5);
        let rep = resolvent_at(&diag12(), lambda, &g).unwrap().representative().unwrap();
        let d = resolvent_defect(&diag12(), &rep, lambda, &g).unwrap();
        assert!(d.left.tail.value <= 1e-10 && d.right.tail.value <= 1e-10);

        let zeros = vec![ComplexMatrix::zeros(2); g.len()];
        let d = resolvent_defect(&diag12(), &zeros, lambda, &g).unwrap();
        assert!((d.left.tail.value - 1.0).abs() < 1e-12);
        assert!((d.right.tail.value - 1.0).abs() < 1e-12);

        assert!(matches!(
            resolvent_defect(&diag12(), &zeros[..3], lambda, &g),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn field_on_normal_family() {
        let g = hgrid_geometric(1.0, 0.5, 8, 3).unwrap();
        let region = ComplexRegion::new(c(1.5, 0.0), 2.0, 21).unwrap();
        let field = resolvent_norm_field(&diag12(), &region, &g).unwrap();
        let pts = region.points();
        for (lambda, v) in pts.iter().zip(&field.values) {
            let d = (lambda - 1.0).norm().min((lambda - 2.0).norm());
            if d < 1e-12 {
                assert!(v.is_infinite(), "{lambda} -> {v}");
            } else {
                assert!((v * d - 1.0).abs() < 1e-9, "{lambda}: {v} vs 1/{d}");
            }
        }
        assert_eq!(field.to_csv().lines().count(), 442);
    }

    #[test]
    fn spectrum_of_diagonal_family() {
        let g = HGrid::default();
        let sf = FamilySpec::diag_expr(&["1", "2+h"]).unwrap();
        let region = ComplexRegion::new(c(1.5, 0.0), 1.0, 41).unwrap();
        let field = resolvent_norm_field(&sf, &region, &g).unwrap();
        let est = spectrum_estimate(&field, 1e-3).unwrap();
        assert_eq!(est.clusters.len(), 2, "{:?}", est.clusters);
        assert!(centroids_match(
            &est.centroids(),
            &[c(1.0, 0.0), c(2.0, 0.0)],
            est.spacing,
            1.0
        ));
    }

    #[test]
    fn far_region_has_no_spectrum() {
        let g = HGrid::default();
        let region = ComplexRegion::new(c(10.0, 10.0), 1.0, 21).unwrap();
        let field = resolvent_norm_field(&diag12(), &region, &g).unwrap();
        let est = spectrum_estimate(&field, 1e-3).unwrap();
        assert!(est.flagged.is_empty());
        assert!(spectrum_estimate(&field, 0.0).is_err());
    }

    #[test]
    fn quotient_bounds_examples() {
        let g = HGrid::default();
        let a = ComplexMatrix::from_real(2, &[1.0, 2.0, 0.0, -1.0]).unwrap();
        let na = norm2(&a);
        let b = quotient_norm_bounds(&FamilySpec::constant(a.clone()), &g).unwrap();
        assert!((b.lower - na).abs() < 1e-12 && (b.upper - na).abs() < 1e-12);

        let b = quotient_norm_bounds(&FamilySpec::h_scaled(FamilySpec::constant(a)), &g).unwrap();
        assert!((b.lower - g.tail()[0] * na).abs() < 1e-12);
        assert!((b.upper - na).abs() < 1e-12);

        let b = quotient_norm_bounds(&FamilySpec::diag_expr(&["2+h"]).unwrap(), &g).unwrap();
        assert!((b.lower - 2.0).abs() < 1e-4);
        assert!((b.upper - 3.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_identities_exact() {
        let g = HGrid::default();
        let sf = FamilySpec::random(3, 11, 0.5).unwrap();
        let (l, m) = (c(2.0, 1.0), c(-1.5, 0.5));
        assert!(resolvent_equation_residual(&sf, l, m, &g).unwrap().value <= 1e-12);
        assert_eq!(resolvent_equation_residual(&sf, l, l, &g).unwrap().value, 0.0);
        assert!(resolvent_commutation_residual(&sf, l, Some(m), &g).unwrap().value <= 1e-10);
        assert!(resolvent_commutation_residual(&sf, l, None, &g).unwrap().value <= 1e-10);
        assert!(resolvent_commutation_residual(&sf, l, Some(l), &g).is_err());
    }

    #[test]
    fn unresolved_points_are_errors() {
        let g = HGrid::default();
        let err = resolvent_equation_residual(&diag12(), c(1.0, 0.0), c(3.0, 0.0), &g).unwrap_err();
        assert!(matches!(err, Error::UnresolvedPoint(_)));
        assert!(series_resolvent(&diag12(), &diag12(), c(2.0, 0.0), &g, 3).is_err());
    }

    #[test]
    fn series_of_identical_families_is_the_resolvent() {
        let g = HGrid::default();
        let sf = FamilySpec::random(3, 4, 0.5).unwrap();
        let lambda = c(2.5, 0.0);
        let s = series_resolvent(&sf, &sf, lambda, &g, 5).unwrap();
        let exact = resolvent_at(&sf, lambda, &g).unwrap().representative().unwrap();
        for (a, b) in s.per_h.iter().zip(&exact) {
            assert!(a.sub(b).unwrap().max_abs() <= 1e-14);
        }
        assert!(s.defect.left.tail.value <= 1e-10 && s.defect.right.tail.value <= 1e-10);
        assert!(!s.truncation_warning);
        assert!(series_resolvent(&sf, &sf, lambda, &g, 31).is_err());
    }
}
