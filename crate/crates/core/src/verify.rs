//! Named verification suites: each one checks the conclusion of one result
//! of the theory on seeded fixtures and reports every check with its value
//! and threshold. Reports are byte-stable for a given seed and grid.

use serde_json::{json, Value};

use crate::bracket::{
    bracket_compose_check, bracket_direct, bracket_recurrence, swap_identity_residual, DEFAULT_N_MAX, DEFAULT_ROOT_TOL,
};
use crate::equivalence::{
    asymptotic_commuting, asymptotic_equiv, is_asymptotic_quasinilpotent, quasinilpotent_equiv, EquivalenceVerdict,
    Outcome,
};
use crate::error::Result;
use crate::expr::FuncExpr;
use crate::family::{
    default_vanish_tol, norm_trace, scalar_trace, seeded_matrix, tail_limsup, vanishes, FamilySpec, HGrid,
};
use crate::fixtures::{
    child_seed, commuting_nilpotent_pair, commuting_nilpotent_partner, equivalent_pair, equivalent_triple,
    perturbed_nilpotent, triangular_fixture, two_point_family,
};
use crate::funcalc::{contour_funcalc, family_funcalc, ContourSpec};
use crate::linalg::{matrix_power, norm2, ComplexMatrix, C64};
use crate::report::json_f64;
use crate::spectrum::{
    centroids_match, commutation_residual_trace, difference_trace, equation_residual_trace, operator_commutation_trace,
    quotient_norm_bounds, resolvent_at, resolvent_defect, resolvent_norm_field, series_resolvent, spectrum_estimate,
    ComplexRegion, SpectrumEstimate, DEFAULT_EPSILON_REL,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
            detail: None,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            passed: value >= threshold,
            value: Some(value),
            threshold: Some(threshold),
            detail: None,
        }
    }

    pub fn truth(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            passed,
            value: None,
            threshold: None,
            detail: Some(detail.into()),
        }
    }

    fn verdict(name: impl Into<String>, v: &EquivalenceVerdict, expected: Outcome) -> Check {
        Check::truth(
            name,
            v.result == expected,
            format!("{} (expected {})", v.result.as_str(), expected.as_str()),
        )
    }

    fn to_json(&self) -> Value {
        let mut v = json!({"name": self.name, "passed": self.passed});
        if let Some(x) = self.value {
            v["value"] = json_f64(x);
        }
        if let Some(x) = self.threshold {
            v["threshold"] = json_f64(x);
        }
        if let Some(d) = &self.detail {
            v["detail"] = json!(d);
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "all_passed": self.all_passed(),
            "suites": self.suites.iter().map(|s| json!({
                "name": s.name,
                "passed": s.passed(),
                "checks": s.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub type SuiteFn = fn(u64, &HGrid) -> Result<Vec<Check>>;

pub const SUITES: &[(&str, SuiteFn)] = &[
    ("bracket_calculus", bracket_calculus),
    ("equivalence_relation", equivalence_relation),
    (
        "boundedness_and_commutator_transfer",
        boundedness_and_commutator_transfer,
    ),
    ("asymptotically_commuting_powers", asymptotically_commuting_powers),
    (
        "equivalence_implies_quasinilpotent_equivalence",
        equivalence_implies_qequiv,
    ),
    ("quasinilpotent_equivalence_stability", qequiv_stability),
    ("resolvent_set_bounds", resolvent_set_bounds),
    ("resolvent_identities", resolvent_identities),
    (
        "resolvent_uniqueness_and_separation",
        resolvent_uniqueness_and_separation,
    ),
    ("family_spectrum_two_points", family_spectrum_two_points),
    ("vanishing_perturbation_invariance", vanishing_perturbation_invariance),
    (
        "quasinilpotent_equivalence_spectrum_invariance",
        qequiv_spectrum_invariance,
    ),
    ("spectral_mapping", spectral_mapping),
    ("quasinilpotent_iff_spectrum_zero", quasinilpotent_iff_spectrum_zero),
    ("functional_calculus_accuracy", functional_calculus_accuracy),
];

pub fn run_suite(name: &'static str, f: SuiteFn, seed: u64, grid: &HGrid) -> SuiteResult {
    let checks = match f(seed, grid) {
        Ok(c) => c,
        Err(e) => vec![Check::truth("completed", false, e.to_string())],
    };
    SuiteResult { name, checks }
}

/// Runs every suite in order.
pub fn verify_all(seed: u64, grid: &HGrid) -> VerifyReport {
    VerifyReport {
        seed,
        suites: SUITES.iter().map(|&(name, f)| run_suite(name, f, seed, grid)).collect(),
    }
}

fn bracket_scale(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> f64 {
    (norm2(t) + norm2(s)).powi(n as i32).max(1.0)
}

fn bracket_calculus(seed: u64, _grid: &HGrid) -> Result<Vec<Check>> {
    let mut worst_rec: f64 = 0.0;
    for k in 0..50 {
        let t = seeded_matrix(4, child_seed(seed, 2 * k), 1.0);
        let s = seeded_matrix(4, child_seed(seed, 2 * k + 1), 1.0);
        for n in 0..=10 {
            let err = norm2(&bracket_recurrence(&t, &s, n)?.sub(&bracket_direct(&t, &s, n)?)?);
            worst_rec = worst_rec.max(err / bracket_scale(&t, &s, n));
        }
    }
    let mut worst_comp: f64 = 0.0;
    for k in 0..20 {
        let t = seeded_matrix(3, child_seed(seed, 200 + 3 * k), 1.0);
        let s = seeded_matrix(3, child_seed(seed, 201 + 3 * k), 1.0);
        let p = seeded_matrix(3, child_seed(seed, 202 + 3 * k), 1.0);
        for n in 0..=6 {
            let scale = (norm2(&t) + norm2(&s) + 2.0 * norm2(&p)).powi(n as i32).max(1.0);
            worst_comp = worst_comp.max(bracket_compose_check(&t, &s, &p, n)? / scale);
        }
    }
    let mut worst_swap: f64 = 0.0;
    for k in 0..10 {
        let t = seeded_matrix(3, child_seed(seed, 400 + 2 * k), 1.0);
        let s = seeded_matrix(3, child_seed(seed, 401 + 2 * k), 1.0);
        for n in 0..=6 {
            worst_swap = worst_swap.max(swap_identity_residual(&t, &s, n)? / bracket_scale(&t, &s, n));
        }
    }
    let mut worst_collapse: f64 = 0.0;
    for k in 0..10 {
        let dt: Vec<C64> = seeded_matrix(4, child_seed(seed, 500 + 2 * k), 1.0).entries()[..4].to_vec();
        let ds: Vec<C64> = seeded_matrix(4, child_seed(seed, 501 + 2 * k), 1.0).entries()[..4].to_vec();
        let (t, s) = (ComplexMatrix::from_diag(&dt), ComplexMatrix::from_diag(&ds));
        for n in 0..=10 {
            let err = norm2(&bracket_direct(&t, &s, n)?.sub(&matrix_power(&t.sub(&s)?, n as u32))?);
            worst_collapse = worst_collapse.max(err / bracket_scale(&t, &s, n));
        }
    }
    Ok(vec![
        Check::at_most("recurrence_matches_direct_sum", worst_rec, 1e-9),
        Check::at_most("composition_identity", worst_comp, 1e-9),
        Check::at_most("swap_identity", worst_swap, 1e-9),
        Check::at_most("commuting_collapse_to_power", worst_collapse, 1e-9),
    ])
}

fn qeq(s: &FamilySpec, t: &FamilySpec, grid: &HGrid) -> Result<EquivalenceVerdict> {
    quasinilpotent_equiv(s, t, grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL)
}

fn equivalence_relation(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let [a, b, c] = equivalent_triple(3, child_seed(seed, 10))?;
    let mut checks = vec![
        Check::verdict(
            "asymptotic_reflexive",
            &asymptotic_equiv(&a, &a, grid, None)?,
            Outcome::Holds,
        ),
        Check::verdict(
            "asymptotic_symmetric_forward",
            &asymptotic_equiv(&a, &b, grid, None)?,
            Outcome::Holds,
        ),
        Check::verdict(
            "asymptotic_symmetric_backward",
            &asymptotic_equiv(&b, &a, grid, None)?,
            Outcome::Holds,
        ),
        Check::verdict(
            "asymptotic_second_link",
            &asymptotic_equiv(&b, &c, grid, None)?,
            Outcome::Holds,
        ),
        Check::verdict(
            "asymptotic_transitive",
            &asymptotic_equiv(&a, &c, grid, None)?,
            Outcome::Holds,
        ),
    ];
    checks.extend([
        Check::verdict("quasinilpotent_reflexive", &qeq(&a, &a, grid)?, Outcome::Holds),
        Check::verdict("quasinilpotent_symmetric_forward", &qeq(&a, &b, grid)?, Outcome::Holds),
        Check::verdict("quasinilpotent_symmetric_backward", &qeq(&b, &a, grid)?, Outcome::Holds),
        Check::verdict("quasinilpotent_second_link", &qeq(&b, &c, grid)?, Outcome::Holds),
        Check::verdict("quasinilpotent_transitive", &qeq(&a, &c, grid)?, Outcome::Holds),
    ]);
    Ok(checks)
}

fn boundedness_and_commutator_transfer(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let (s, t) = equivalent_pair(3, child_seed(seed, 20))?;
    let ns = norm_trace(&s, grid)?.into_iter().fold(0.0, f64::max);
    let nt = norm_trace(&t, grid)?.into_iter().fold(0.0, f64::max);
    let diff = scalar_trace(|h| Ok(norm2(&s.eval(h)?.sub(&t.eval(h)?)?)), grid)?;
    let tail_diff = tail_limsup(&diff, grid)?.value;
    // a polynomial in S commutes with S exactly
    let u = s.times(&s)?.plus(&s)?;
    Ok(vec![
        Check::at_most("second_family_bounded", nt, 2.0 * ns + tail_diff),
        Check::verdict(
            "equivalent_pair_commutes_asymptotically",
            &asymptotic_commuting(&s, &t, grid, None)?,
            Outcome::Holds,
        ),
        Check::verdict(
            "commutator_transfers",
            &asymptotic_commuting(&u, &t, grid, None)?,
            Outcome::Holds,
        ),
    ])
}

fn asymptotically_commuting_powers(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let (s, t) = equivalent_pair(3, child_seed(seed, 30))?;
    let mut checks = vec![Check::verdict(
        "pair_commutes_asymptotically",
        &asymptotic_commuting(&s, &t, grid, None)?,
        Outcome::Holds,
    )];
    for n in [2u32, 3, 4] {
        let trace = scalar_trace(
            |h| {
                let (a, b) = (s.eval(h)?, t.eval(h)?);
                let lhs = matrix_power(&a.mul(&b)?, n);
                let rhs = matrix_power(&a, n).mul(&matrix_power(&b, n))?;
                Ok(norm2(&lhs.sub(&rhs)?))
            },
            grid,
        )?;
        let tol = default_vanish_tol(&trace);
        checks.push(Check::truth(
            format!("product_power_defect_vanishes_n{n}"),
            vanishes(&trace, grid, tol)?,
            format!("tail {:.3e}, tol {:.3e}", tail_limsup(&trace, grid)?.value, tol),
        ));
    }
    Ok(checks)
}

fn equivalence_implies_qequiv(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for k in 0..10 {
        let (s, t) = equivalent_pair(4, child_seed(seed, 40 + k))?;
        checks.push(Check::verdict(
            format!("pair_{k}_asymptotic"),
            &asymptotic_equiv(&s, &t, grid, None)?,
            Outcome::Holds,
        ));
        checks.push(Check::verdict(
            format!("pair_{k}_quasinilpotent"),
            &qeq(&s, &t, grid)?,
            Outcome::Holds,
        ));
    }
    Ok(checks)
}

fn qequiv_stability(_seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let (a, t) = commuting_nilpotent_pair()?;
    let u = commuting_nilpotent_partner()?;
    Ok(vec![
        Check::verdict("base_pair", &qeq(&a, &t, grid)?, Outcome::Holds),
        Check::verdict(
            "sum_with_commuting_family",
            &qeq(&a.plus(&u)?, &t.plus(&u)?, grid)?,
            Outcome::Holds,
        ),
        Check::verdict(
            "product_with_commuting_family",
            &qeq(&a.times(&u)?, &t.times(&u)?, grid)?,
            Outcome::Holds,
        ),
    ])
}

fn scan(
    sf: &FamilySpec,
    region: &ComplexRegion,
    grid: &HGrid,
    eps: f64,
) -> Result<(crate::spectrum::ResolventField, SpectrumEstimate)> {
    let field = resolvent_norm_field(sf, region, grid)?;
    let est = spectrum_estimate(&field, eps)?;
    Ok((field, est))
}

fn resolvent_set_bounds(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let fixtures = [
        ("two_point", two_point_family()),
        ("triangular", triangular_fixture()),
        ("perturbed_nilpotent", perturbed_nilpotent(3, child_seed(seed, 50))?),
    ];
    let mut checks = Vec::new();
    for (name, sf) in fixtures {
        let b = quotient_norm_bounds(&sf, grid)?;
        let region = ComplexRegion::default_for(b.upper);
        let (field, est) = scan(&sf, &region, grid, DEFAULT_EPSILON_REL * b.upper)?;
        let excess = est
            .flagged
            .iter()
            .map(|l| l.norm() - b.upper)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::at_most(
            format!("{name}_flagged_within_norm_bound"),
            excess,
            region.spacing(),
        ));

        let r = region.resolution();
        let mut open = true;
        let mut floor_ok = true;
        for iy in 0..r {
            for ix in 0..r {
                let v = field.value_at(ix, iy);
                if !v.is_finite() {
                    continue;
                }
                let lambda = region.point(ix, iy);
                floor_ok &= v >= 1.0 / (lambda.norm() + b.upper) * (1.0 - 1e-12);
                let reach = 0.5 / v;
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (nx, ny) = (ix as isize + dx, iy as isize + dy);
                        if nx < 0 || ny < 0 || nx >= r as isize || ny >= r as isize {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if (region.point(nx, ny) - lambda).norm() <= reach {
                            open &= field.value_at(nx, ny).is_finite();
                        }
                    }
                }
            }
        }
        checks.push(Check::truth(
            format!("{name}_resolved_set_open"),
            open,
            "neighbors within 0.5/value resolved",
        ));
        checks.push(Check::truth(
            format!("{name}_resolvent_norm_floor"),
            floor_ok,
            "value >= 1/(|lambda| + upper)",
        ));

        let far = ComplexRegion::new(C64::new(3.0 * b.upper + 3.0, 0.0), b.upper + 1.0, 21)?;
        let (_, far_est) = scan(&sf, &far, grid, DEFAULT_EPSILON_REL * b.upper)?;
        checks.push(Check::truth(
            format!("{name}_outside_norm_disk_empty"),
            far_est.flagged.is_empty(),
            format!("{} flagged", far_est.flagged.len()),
        ));
    }
    Ok(checks)
}

/// Seeded 3x3 family `A + h B` scaled to norm about one, with two points outside its spectrum.
fn identity_fixture(seed: u64, grid: &HGrid) -> Result<(FamilySpec, C64, C64, f64)> {
    let (_, s) = equivalent_pair(3, child_seed(seed, 60))?;
    let upper = quotient_norm_bounds(&s, grid)?.upper;
    Ok((s, C64::new(1.5 * upper, 0.5), C64::new(-0.5, 1.25 * upper), upper))
}

fn perturbed(rep: &[ComplexMatrix], grid: &HGrid, seed: u64) -> Result<Vec<ComplexMatrix>> {
    let b = seeded_matrix(rep[0].dim(), seed, 1.0);
    rep.iter()
        .zip(grid.samples())
        .map(|(r, &h)| r.add(&b.scale_real(h)))
        .collect()
}

fn vanish_check(name: impl Into<String>, trace: &crate::spectrum::Trace, grid: &HGrid) -> Result<Check> {
    let tol = default_vanish_tol(&trace.values);
    Ok(Check::truth(
        name,
        trace.vanishes(grid, tol)?,
        format!(
            "tail {:.3e} ({}), tol {:.3e}",
            trace.tail.value,
            trace.tail.trend.as_str(),
            tol
        ),
    ))
}

fn resolvent_identities(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let (sf, l, m, upper) = identity_fixture(seed, grid)?;
    let rl = resolvent_at(&sf, l, grid)?;
    let rm = resolvent_at(&sf, m, grid)?;
    let (ml, mm) = (
        rl.norms.iter().copied().fold(0.0, f64::max),
        rm.norms.iter().copied().fold(0.0, f64::max),
    );
    let scale = (1.0 + ml) * (1.0 + mm) * (1.0 + (l - m).norm());
    let (el, em) = (rl.representative()?, rm.representative()?);
    let eq = equation_residual_trace(&el, &em, l, m, grid)?;
    let comm = commutation_residual_trace(&el, &em, grid)?;
    let op = operator_commutation_trace(&sf, &el, grid)?;
    let all_max = |t: &crate::spectrum::Trace| t.values.iter().copied().fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("resolvent_equation_exact", all_max(&eq), 1e-9 * scale),
        Check::at_most("resolvents_commute_exact", all_max(&comm), 1e-9 * scale),
        Check::at_most(
            "operator_commutes_with_resolvent_exact",
            all_max(&op),
            1e-9 * (1.0 + upper) * (1.0 + ml),
        ),
    ];
    let (pl, pm) = (
        perturbed(&el, grid, child_seed(seed, 61))?,
        perturbed(&em, grid, child_seed(seed, 62))?,
    );
    checks.push(vanish_check(
        "resolvent_equation_perturbed",
        &equation_residual_trace(&pl, &pm, l, m, grid)?,
        grid,
    )?);
    checks.push(vanish_check(
        "resolvents_commute_perturbed",
        &commutation_residual_trace(&pl, &pm, grid)?,
        grid,
    )?);
    checks.push(vanish_check(
        "operator_commutes_with_resolvent_perturbed",
        &operator_commutation_trace(&sf, &pl, grid)?,
        grid,
    )?);
    Ok(checks)
}

fn resolvent_uniqueness_and_separation(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let (sf, l, _, _) = identity_fixture(seed, grid)?;
    let exact = resolvent_at(&sf, l, grid)?.representative()?;
    let other = perturbed(&exact, grid, child_seed(seed, 70))?;
    let d_exact = resolvent_defect(&sf, &exact, l, grid)?;
    let d_other = resolvent_defect(&sf, &other, l, grid)?;
    let mut checks = vec![
        vanish_check("exact_left_defect", &d_exact.left, grid)?,
        vanish_check("exact_right_defect", &d_exact.right, grid)?,
        vanish_check("perturbed_left_defect", &d_other.left, grid)?,
        vanish_check("perturbed_right_defect", &d_other.right, grid)?,
        vanish_check("candidates_agree", &difference_trace(&exact, &other, grid)?, grid)?,
    ];

    // inverses of an equivalent family serve as resolvents, and vice versa
    let tf = sf.plus(&FamilySpec::h_scaled(FamilySpec::random(3, child_seed(seed, 71), 1.0)?))?;
    let t_inv = resolvent_at(&tf, l, grid)?.representative()?;
    let d = resolvent_defect(&sf, &t_inv, l, grid)?;
    checks.push(vanish_check("equivalent_family_inverse_left", &d.left, grid)?);
    checks.push(vanish_check("equivalent_family_inverse_right", &d.right, grid)?);
    let d = resolvent_defect(&tf, &exact, l, grid)?;
    checks.push(vanish_check("transfer_to_equivalent_left", &d.left, grid)?);
    checks.push(vanish_check("transfer_to_equivalent_right", &d.right, grid)?);

    // distinct points have distinct resolvents on a normal family
    let nf = two_point_family();
    let nb = quotient_norm_bounds(&nf, grid)?.upper;
    let (p, q) = (C64::new(0.0, 1.0), C64::new(1.5, -0.5));
    let rp = resolvent_at(&nf, p, grid)?.representative()?;
    let rq = resolvent_at(&nf, q, grid)?.representative()?;
    let sep = difference_trace(&rp, &rq, grid)?.tail.value;
    let floor = (p - q).norm() / ((p.norm() + nb) * (q.norm() + nb));
    checks.push(Check::at_least("distinct_points_separated", sep, floor));
    Ok(checks)
}

fn family_spectrum_two_points(_seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let sf = two_point_family();
    let region = ComplexRegion::new(C64::new(0.0, 0.0), 2.5, 101)?;
    let (_, est) = scan(&sf, &region, grid, 1e-3)?;
    Ok(vec![
        Check::truth(
            "two_clusters",
            est.clusters.len() == 2,
            format!("{} clusters", est.clusters.len()),
        ),
        Check::truth(
            "centroids_at_one_and_two",
            centroids_match(
                &est.centroids(),
                &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)],
                est.spacing,
                1.0,
            ),
            format!("{:?}", est.centroids()),
        ),
    ])
}

fn same_clusters(name: &str, a: &SpectrumEstimate, b: &SpectrumEstimate) -> Check {
    Check::truth(
        name,
        !a.clusters.is_empty() && centroids_match(&b.centroids(), &a.centroids(), a.spacing, 1.0),
        format!("{:?} vs {:?}", a.centroids(), b.centroids()),
    )
}

fn vanishing_perturbation_invariance(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let fixtures = [
        ("two_point", two_point_family()),
        ("triangular", triangular_fixture()),
        ("jordan", FamilySpec::jordan(3, C64::new(0.0, 0.0))?),
    ];
    let region = ComplexRegion::new(C64::new(0.0, 0.0), 2.5, 101)?;
    let h_max = grid.tail()[0];
    let mut checks = Vec::new();
    for (k, (name, sf)) in fixtures.into_iter().enumerate() {
        let b = FamilySpec::random(sf.dim(), child_seed(seed, 80 + k as u64), 1.0)?;
        let delta = h_max * norm2(&b.eval(1.0)?);
        let pf = sf.plus(&FamilySpec::h_scaled(b))?;
        let eps = DEFAULT_EPSILON_REL * quotient_norm_bounds(&sf, grid)?.upper;
        let (f1, e1) = scan(&sf, &region, grid, eps)?;
        let (f2, e2) = scan(&pf, &region, grid, eps)?;
        checks.push(same_clusters(&format!("{name}_clusters_agree"), &e1, &e2));
        // |R' - R| <= |R|^2 delta / (1 - |R| delta) wherever |R| delta < 1
        let drift_ok = f1.values.iter().zip(&f2.values).all(|(&a, &b)| {
            if !a.is_finite() || a * delta >= 0.5 {
                return true;
            }
            (a - b).abs() <= a * a * delta / (1.0 - a * delta) * (1.0 + 1e-6) + 1e-12 * a
        });
        checks.push(Check::truth(
            format!("{name}_field_drift_within_envelope"),
            drift_ok,
            "perturbation bound",
        ));
    }
    Ok(checks)
}

fn qequiv_spectrum_invariance(_seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let (a, t) = commuting_nilpotent_pair()?;
    let region = ComplexRegion::new(C64::new(0.5, 0.0), 2.0, 101)?;
    let (_, ea) = scan(&a, &region, grid, 1e-3)?;
    let (_, et) = scan(&t, &region, grid, 1e-3)?;
    let mut checks = vec![
        Check::verdict("pair_quasinilpotent_equivalent", &qeq(&a, &t, grid)?, Outcome::Holds),
        same_clusters("clusters_agree", &ea, &et),
    ];
    for (k, lambda) in [C64::new(1.5, 0.0), C64::new(-0.5, 0.0), C64::new(0.5, 1.0)]
        .into_iter()
        .enumerate()
    {
        let sr = series_resolvent(&a, &t, lambda, grid, 6)?;
        checks.push(Check::truth(
            format!("series_defect_vanishes_{k}"),
            sr.defect.vanishes(grid, 1e-6)?,
            format!(
                "left {:.3e}, right {:.3e}",
                sr.defect.left.tail.value, sr.defect.right.tail.value
            ),
        ));
        let within = sr
            .term_norms
            .iter()
            .zip(&sr.term_bounds)
            .all(|(n, b)| n.iter().zip(b).all(|(x, y)| *x <= y * (1.0 + 1e-12) + 1e-300));
        checks.push(Check::truth(
            format!("series_terms_within_envelope_{k}"),
            within,
            "term <= bracket * resolvent power",
        ));
    }
    Ok(checks)
}

fn spectral_mapping(_seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let tf = two_point_family();
    let contour = ContourSpec::circle(C64::new(1.5, 0.0), 2.0)?;
    let t_region = ComplexRegion::new(C64::new(1.5, 0.0), 2.0, 101)?;
    let (_, t_est) = scan(&tf, &t_region, grid, 1e-3)?;
    let mut checks = vec![Check::truth(
        "contour_encloses_spectrum",
        contour.encloses(&t_est),
        "0.95 radius margin",
    )];
    type Case = (&'static str, f64, fn(C64) -> C64);
    let cases: [Case; 3] = [
        ("z^2", 5.0, |z| z * z),
        ("z^3", 10.0, |z| z * z * z),
        ("exp(z)", 10.0, |z| z.exp()),
    ];
    for (src, hw, f) in cases {
        let ff = family_funcalc(&tf, &FuncExpr::parse(src)?, &contour);
        let region = ComplexRegion::new(C64::new(0.0, 0.0), hw, 101)?;
        let (_, est) = scan(&ff, &region, grid, 1e-3)?;
        let image: Vec<C64> = [C64::new(1.0, 0.0), C64::new(2.0, 0.0)].into_iter().map(f).collect();
        checks.push(Check::truth(
            format!("clusters_of_{src}"),
            centroids_match(&est.centroids(), &image, est.spacing, 1.0),
            format!("{:?} vs {:?}", est.centroids(), image),
        ));
    }

    let t = triangular_fixture().eval(1.0)?;
    let c = ContourSpec::circle(C64::new(0.0, 0.0), 2.5)?;
    let f = FuncExpr::parse("z^2 - 2*z + 0.5")?;
    let g = FuncExpr::parse("z + 1")?;
    let fg = FuncExpr::parse("(z^2 - 2*z + 0.5)*(z + 1)")?;
    let f128 = contour_funcalc(&t, &f, &ContourSpec::new(C64::new(0.0, 0.0), 2.5, 128)?)?;
    let f256 = contour_funcalc(&t, &f, &c)?;
    let f_wide = contour_funcalc(&t, &f, &ContourSpec::circle(C64::new(0.25, 0.0), 3.5)?)?;
    let gt = contour_funcalc(&t, &g, &c)?;
    let fgt = contour_funcalc(&t, &fg, &c)?;
    checks.push(Check::at_most("node_doubling_change", f256.sub(&f128)?.max_abs(), 1e-9));
    checks.push(Check::at_most(
        "contour_independence",
        f256.sub(&f_wide)?.max_abs(),
        1e-8,
    ));
    checks.push(Check::at_most(
        "homomorphism",
        fgt.sub(&f256.mul(&gt)?)?.max_abs(),
        1e-7,
    ));
    checks.push(Check::at_most(
        "images_commute",
        norm2(&f256.mul(&gt)?.sub(&gt.mul(&f256)?)?),
        1e-8,
    ));
    Ok(checks)
}

fn quasinilpotent_iff_spectrum_zero(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let region = ComplexRegion::new(C64::new(0.0, 0.0), 1.25, 101)?;
    let u = perturbed_nilpotent(4, child_seed(seed, 90))?;
    let v = is_asymptotic_quasinilpotent(&u, grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL)?;
    let (_, est) = scan(&u, &region, grid, 1e-3)?;
    let half = FamilySpec::constant(ComplexMatrix::from_real_diag(&[0.5]));
    let w = is_asymptotic_quasinilpotent(&half, grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL)?;
    let (_, est_half) = scan(&half, &region, grid, 1e-3)?;
    Ok(vec![
        Check::verdict("perturbed_nilpotent_quasinilpotent", &v, Outcome::Holds),
        Check::truth(
            "perturbed_nilpotent_spectrum_at_zero",
            centroids_match(&est.centroids(), &[C64::new(0.0, 0.0)], est.spacing, 1.0),
            format!("{:?}", est.centroids()),
        ),
        Check::verdict("half_not_quasinilpotent", &w, Outcome::Fails),
        Check::truth(
            "half_spectrum_at_half",
            centroids_match(&est_half.centroids(), &[C64::new(0.5, 0.0)], est_half.spacing, 1.0),
            format!("{:?}", est_half.centroids()),
        ),
    ])
}

/// `sum_{k<40} t^k / k!`.
pub fn exp_taylor(t: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut term = ComplexMatrix::identity(t.dim());
    let mut sum = term.clone();
    for k in 1..40 {
        term = term.mul(t)?.scale_real(1.0 / k as f64);
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

fn functional_calculus_accuracy(seed: u64, grid: &HGrid) -> Result<Vec<Check>> {
    let z = FuncExpr::parse("z")?;
    let e = FuncExpr::parse("exp(z)")?;
    let d = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
    let cd = ContourSpec::circle(C64::new(1.5, 0.0), 2.0)?;
    let mut checks = vec![
        Check::at_most(
            "identity_reproduces_matrix",
            contour_funcalc(&d, &z, &cd)?.sub(&d)?.max_abs(),
            1e-8,
        ),
        Check::at_most(
            "exp_matches_taylor_diagonal",
            contour_funcalc(&d, &e, &cd)?.sub(&exp_taylor(&d)?)?.max_abs(),
            1e-6,
        ),
    ];
    let t = seeded_matrix(4, child_seed(seed, 100), 0.5);
    let radius = 2.0 * norm2(&t) + 1.0;
    let ct = ContourSpec::circle(C64::new(0.0, 0.0), radius)?;
    let region = ComplexRegion::new(C64::new(0.0, 0.0), radius, 101)?;
    let (_, est) = scan(&FamilySpec::constant(t.clone()), &region, grid, 1e-3)?;
    checks.push(Check::truth(
        "contour_encloses_nonnormal_spectrum",
        ct.encloses(&est),
        "0.95 radius margin",
    ));
    checks.push(Check::at_most(
        "identity_reproduces_nonnormal",
        contour_funcalc(&t, &z, &ct)?.sub(&t)?.max_abs(),
        1e-8,
    ));
    checks.push(Check::at_most(
        "exp_matches_taylor_nonnormal",
        contour_funcalc(&t, &e, &ct)?.sub(&exp_taylor(&t)?)?.max_abs(),
        1e-6,
    ));
    Ok(checks)
}
