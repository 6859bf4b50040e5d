//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the verdict lines always reach the console.

use std::process::{Command, ExitCode};
use std::time::Instant;

use asymspec::bracket::{bracket_direct, bracket_recurrence, DEFAULT_N_MAX, DEFAULT_ROOT_TOL};
use asymspec::equivalence::{asymptotic_equiv, is_asymptotic_quasinilpotent, quasinilpotent_equiv, Outcome};
use asymspec::expr::FuncExpr;
use asymspec::family::{default_vanish_tol, seeded_matrix, FamilySpec, HGrid};
use asymspec::fixtures::{
    child_seed, commuting_nilpotent_pair, equivalent_pair, equivalent_triple, perturbed_nilpotent, triangular_fixture,
    two_point_family,
};
use asymspec::funcalc::{contour_funcalc, family_funcalc, ContourSpec};
use asymspec::linalg::{norm2, ComplexMatrix, C64};
use asymspec::spectrum::{
    centroids_match, commutation_residual_trace, equation_residual_trace, operator_commutation_trace,
    quotient_norm_bounds, resolvent_at, resolvent_defect, resolvent_norm_field, series_resolvent, spectrum_estimate,
    ComplexRegion, SpectrumEstimate, Trace, DEFAULT_EPSILON_REL,
};

const SEED: u64 = 42;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T>(r: asymspec::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Plain triple-loop product, independent of the library kernel.
fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim();
    ComplexMatrix::from_fn(n, |i, j| {
        let mut acc = c(0.0, 0.0);
        for k in 0..n {
            acc += a.get(i, k) * b.get(k, j);
        }
        acc
    })
}

fn power(a: &ComplexMatrix, k: usize) -> ComplexMatrix {
    (0..k).fold(ComplexMatrix::identity(a.dim()), |acc, _| matmul(&acc, a))
}

fn pascal_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// `sum_k (-1)^(n-k) C(n,k) T^k S^(n-k)` with Pascal coefficients.
fn bracket_oracle(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let row = pascal_row(n);
    let mut acc = ComplexMatrix::zeros(t.dim());
    for (k, coef) in row.iter().enumerate() {
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        let term = matmul(&power(t, k), &power(s, n - k)).scale_real(sign * coef);
        acc = acc.add(&term).unwrap();
    }
    acc
}

/// `sum_{k<40} T^k / k!`.
fn taylor_exp(t: &ComplexMatrix) -> ComplexMatrix {
    let mut term = ComplexMatrix::identity(t.dim());
    let mut sum = term.clone();
    for k in 1..40 {
        term = matmul(&term, t).scale_real(1.0 / k as f64);
        sum = sum.add(&term).unwrap();
    }
    sum
}

fn show(points: &[C64]) -> String {
    let parts: Vec<String> = points.iter().map(|z| format!("{:.4}{:+.4}i", z.re, z.im)).collect();
    format!("[{}]", parts.join(", "))
}

fn scale_of(t: &ComplexMatrix, s: &ComplexMatrix, n: usize) -> f64 {
    (norm2(t) + norm2(s)).powi(n as i32).max(1.0)
}

fn scan(sf: &FamilySpec, region: &ComplexRegion, grid: &HGrid, eps: f64) -> Result<SpectrumEstimate, String> {
    let field = lib(resolvent_norm_field(sf, region, grid))?;
    lib(spectrum_estimate(&field, eps))
}

fn criterion_1(_grid: &HGrid) -> Verdict {
    let mut worst_rec: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for k in 0..50 {
        let t = seeded_matrix(4, child_seed(SEED, 1000 + 2 * k), 1.0);
        let s = seeded_matrix(4, child_seed(SEED, 1001 + 2 * k), 1.0);
        for n in 0..=10 {
            let direct = lib(bracket_direct(&t, &s, n))?;
            let rec = lib(bracket_recurrence(&t, &s, n))?;
            let scale = scale_of(&t, &s, n);
            worst_rec = worst_rec.max(norm2(&rec.sub(&direct).unwrap()) / scale);
            worst_oracle = worst_oracle.max(norm2(&direct.sub(&bracket_oracle(&t, &s, n)).unwrap()) / scale);
        }
    }
    ensure(worst_rec <= 1e-9, format!("recurrence vs direct {worst_rec:.3e}"))?;
    ensure(
        worst_oracle <= 1e-9,
        format!("direct vs Pascal oracle {worst_oracle:.3e}"),
    )?;

    // (T-S)^[n] = sum_k C(n,k) (T-P)^[k] (P-S)^[n-k]
    let mut worst_comp: f64 = 0.0;
    for k in 0..20 {
        let t = seeded_matrix(3, child_seed(SEED, 2000 + 3 * k), 1.0);
        let s = seeded_matrix(3, child_seed(SEED, 2001 + 3 * k), 1.0);
        let p = seeded_matrix(3, child_seed(SEED, 2002 + 3 * k), 1.0);
        for n in 0..=6 {
            let row = pascal_row(n);
            let mut rhs = ComplexMatrix::zeros(3);
            for (j, coef) in row.iter().enumerate() {
                let left = lib(bracket_direct(&t, &p, j))?;
                let right = lib(bracket_direct(&p, &s, n - j))?;
                rhs = rhs.add(&matmul(&left, &right).scale_real(*coef)).unwrap();
            }
            let lhs = lib(bracket_direct(&t, &s, n))?;
            let scale = (norm2(&t) + norm2(&s) + 2.0 * norm2(&p)).powi(n as i32).max(1.0);
            worst_comp = worst_comp.max(norm2(&lhs.sub(&rhs).unwrap()) / scale);
        }
    }
    ensure(worst_comp <= 1e-9, format!("composition residual {worst_comp:.3e}"))?;
    Ok(format!(
        "recurrence {worst_rec:.1e}, oracle {worst_oracle:.1e}, composition {worst_comp:.1e}"
    ))
}

fn criterion_2(_grid: &HGrid) -> Verdict {
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let dt: Vec<C64> = seeded_matrix(2, child_seed(SEED, 3000 + 2 * k), 1.0).entries().to_vec();
        let ds: Vec<C64> = seeded_matrix(2, child_seed(SEED, 3001 + 2 * k), 1.0).entries().to_vec();
        let (t, s) = (ComplexMatrix::from_diag(&dt), ComplexMatrix::from_diag(&ds));
        for n in 0..=10 {
            let bracket = lib(bracket_direct(&t, &s, n))?;
            let pw = power(&t.sub(&s).unwrap(), n);
            worst = worst.max(norm2(&bracket.sub(&pw).unwrap()) / scale_of(&t, &s, n));
        }
    }
    ensure(worst <= 1e-9, format!("collapse residual {worst:.3e}"))?;
    Ok(format!("collapse residual {worst:.1e}"))
}

fn criterion_3(grid: &HGrid) -> Verdict {
    let [a, b, cc] = lib(equivalent_triple(3, child_seed(SEED, 4000)))?;
    let pairs = [
        ("reflexive", &a, &a),
        ("forward", &a, &b),
        ("backward", &b, &a),
        ("link", &b, &cc),
        ("transitive", &a, &cc),
    ];
    for (name, x, y) in pairs {
        let v = lib(asymptotic_equiv(x, y, grid, None))?;
        ensure(
            v.result == Outcome::Holds,
            format!("asymptotic {name}: {}", v.result.as_str()),
        )?;
        let q = lib(quasinilpotent_equiv(x, y, grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL))?;
        ensure(
            q.result == Outcome::Holds,
            format!("quasinilpotent {name}: {}", q.result.as_str()),
        )?;
    }
    Ok("reflexive, symmetric, transitive for both relations".into())
}

fn criterion_4(grid: &HGrid) -> Verdict {
    for k in 0..10 {
        let (s, t) = lib(equivalent_pair(4, child_seed(SEED, 5000 + k)))?;
        let v = lib(quasinilpotent_equiv(&s, &t, grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL))?;
        ensure(v.result == Outcome::Holds, format!("pair {k}: {}", v.result.as_str()))?;
    }
    Ok("10 of 10 pairs hold".into())
}

fn criterion_5(grid: &HGrid) -> Verdict {
    let start = Instant::now();
    let region = lib(ComplexRegion::new(c(0.0, 0.0), 2.5, 101))?;
    let est = scan(&two_point_family(), &region, grid, 1e-3)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(est.clusters.len() == 2, format!("{} clusters", est.clusters.len()))?;
    ensure(
        centroids_match(&est.centroids(), &[c(1.0, 0.0), c(2.0, 0.0)], region.spacing(), 1.0),
        format!("centroids {}", show(&est.centroids())),
    )?;
    ensure(secs <= 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("centroids {} in {secs:.2} s", show(&est.centroids())))
}

fn criterion_6(grid: &HGrid) -> Verdict {
    let fixtures = [
        ("two_point", two_point_family()),
        ("triangular", triangular_fixture()),
        ("jordan", lib(FamilySpec::jordan(3, c(0.0, 0.0)))?),
    ];
    let region = lib(ComplexRegion::new(c(0.0, 0.0), 2.5, 101))?;
    for (k, (name, sf)) in fixtures.into_iter().enumerate() {
        let b = lib(FamilySpec::random(sf.dim(), child_seed(SEED, 6000 + k as u64), 1.0))?;
        let pf = lib(sf.plus(&FamilySpec::h_scaled(b)))?;
        let eps = DEFAULT_EPSILON_REL * lib(quotient_norm_bounds(&sf, grid))?.upper;
        let e1 = scan(&sf, &region, grid, eps)?;
        let e2 = scan(&pf, &region, grid, eps)?;
        ensure(!e1.clusters.is_empty(), format!("{name}: no clusters"))?;
        ensure(
            centroids_match(&e2.centroids(), &e1.centroids(), region.spacing(), 1.0),
            format!("{name}: {} vs {}", show(&e1.centroids()), show(&e2.centroids())),
        )?;
    }
    Ok("3 fixtures agree".into())
}

fn criterion_7(grid: &HGrid) -> Verdict {
    let (a, t) = lib(commuting_nilpotent_pair())?;
    let n = lib(t.eval(0.5))?.sub(&lib(a.eval(0.5))?).unwrap();
    ensure(power(&n, 3).max_abs() == 0.0, "N^3 is not zero")?;
    let region = lib(ComplexRegion::new(c(0.5, 0.0), 2.0, 101))?;
    let ea = scan(&a, &region, grid, 1e-3)?;
    let et = scan(&t, &region, grid, 1e-3)?;
    ensure(!ea.clusters.is_empty(), "no clusters")?;
    ensure(
        centroids_match(&et.centroids(), &ea.centroids(), region.spacing(), 1.0),
        format!("{} vs {}", show(&ea.centroids()), show(&et.centroids())),
    )?;
    let mut worst: f64 = 0.0;
    for lambda in [c(1.5, 0.0), c(-0.5, 0.0), c(0.5, 1.0)] {
        ensure(
            lib(resolvent_at(&t, lambda, grid))?.is_resolved(),
            format!("{lambda} not resolved"),
        )?;
        let sr = lib(series_resolvent(&a, &t, lambda, grid, 6))?;
        ensure(
            lib(sr.defect.vanishes(grid, 1e-6))?,
            format!("defect at {lambda} does not vanish"),
        )?;
        worst = worst.max(sr.defect.left.tail.value).max(sr.defect.right.tail.value);
    }
    Ok(format!(
        "clusters {}, worst series defect {worst:.1e}",
        show(&ea.centroids())
    ))
}

fn criterion_8(grid: &HGrid) -> Verdict {
    let tf = two_point_family();
    let contour = lib(ContourSpec::circle(c(1.5, 0.0), 2.0))?;
    let t_region = lib(ComplexRegion::new(c(1.5, 0.0), 2.0, 101))?;
    ensure(
        contour.encloses(&scan(&tf, &t_region, grid, 1e-3)?),
        "contour misses the spectrum",
    )?;
    let e = std::f64::consts::E;
    for (src, hw, image) in [("z^2", 5.0, [1.0, 4.0]), ("exp(z)", 10.0, [e, e * e])] {
        let ff = family_funcalc(&tf, &lib(FuncExpr::parse(src).map_err(Into::into))?, &contour);
        let region = lib(ComplexRegion::new(c(0.0, 0.0), hw, 101))?;
        let est = scan(&ff, &region, grid, 1e-3)?;
        let expected = [c(image[0], 0.0), c(image[1], 0.0)];
        ensure(
            centroids_match(&est.centroids(), &expected, region.spacing(), 1.0),
            format!("{src}: {} vs {}", show(&est.centroids()), show(&expected)),
        )?;
    }
    Ok("z^2 -> {1, 4}, exp -> {e, e^2}".into())
}

fn criterion_9(grid: &HGrid) -> Verdict {
    let region = lib(ComplexRegion::new(c(0.0, 0.0), 1.25, 101))?;
    let u = lib(perturbed_nilpotent(4, child_seed(SEED, 9000)))?;
    let v = lib(is_asymptotic_quasinilpotent(&u, grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL))?;
    ensure(v.result == Outcome::Holds, format!("J4 + hR: {}", v.result.as_str()))?;
    let est = scan(&u, &region, grid, 1e-3)?;
    ensure(
        est.clusters.len() == 1,
        format!("J4 + hR: {} clusters", est.clusters.len()),
    )?;
    ensure(
        centroids_match(&est.centroids(), &[c(0.0, 0.0)], region.spacing(), 1.0),
        format!("J4 + hR: {}", show(&est.centroids())),
    )?;
    let half = FamilySpec::constant(ComplexMatrix::from_real_diag(&[0.5]));
    let w = lib(is_asymptotic_quasinilpotent(
        &half,
        grid,
        DEFAULT_N_MAX,
        DEFAULT_ROOT_TOL,
    ))?;
    ensure(w.result == Outcome::Fails, format!("diag(0.5): {}", w.result.as_str()))?;
    let est_half = scan(&half, &region, grid, 1e-3)?;
    ensure(
        centroids_match(&est_half.centroids(), &[c(0.5, 0.0)], region.spacing(), 1.0),
        format!("diag(0.5): {}", show(&est_half.centroids())),
    )?;
    Ok(format!(
        "J4 + hR holds at {}; diag(0.5) fails at {}",
        show(&est.centroids()),
        show(&est_half.centroids())
    ))
}

fn criterion_10(_grid: &HGrid) -> Verdict {
    let diag = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
    let contour = lib(ContourSpec::circle(c(1.5, 0.0), 2.0))?;
    let ident = lib(FuncExpr::parse("z").map_err(Into::into))?;
    let exp = lib(FuncExpr::parse("exp(z)").map_err(Into::into))?;
    let err_id = lib(contour_funcalc(&diag, &ident, &contour))?
        .sub(&diag)
        .unwrap()
        .max_abs();
    ensure(err_id <= 1e-8, format!("f = z on diag(1,2): {err_id:.3e}"))?;
    let err_exp = lib(contour_funcalc(&diag, &exp, &contour))?
        .sub(&taylor_exp(&diag))
        .unwrap()
        .max_abs();
    ensure(err_exp <= 1e-6, format!("exp on diag(1,2): {err_exp:.3e}"))?;

    // upper triangular, so the spectrum is the diagonal and sits inside radius 1.5
    let r = seeded_matrix(4, child_seed(SEED, 10_000), 1.0);
    let t = ComplexMatrix::from_fn(4, |i, j| {
        if j > i {
            r.get(i, j)
        } else if i == j {
            r.get(i, j) * 0.5
        } else {
            c(0.0, 0.0)
        }
    });
    let wide = lib(ContourSpec::circle(c(0.0, 0.0), 2.0))?;
    let err_id4 = lib(contour_funcalc(&t, &ident, &wide))?.sub(&t).unwrap().max_abs();
    let err_exp4 = lib(contour_funcalc(&t, &exp, &wide))?
        .sub(&taylor_exp(&t))
        .unwrap()
        .max_abs();
    ensure(err_id4 <= 1e-8, format!("f = z on non-normal 4x4: {err_id4:.3e}"))?;
    ensure(err_exp4 <= 1e-6, format!("exp on non-normal 4x4: {err_exp4:.3e}"))?;
    Ok(format!(
        "identity {:.1e}, exp {:.1e}",
        err_id.max(err_id4),
        err_exp.max(err_exp4)
    ))
}

fn perturb(rep: &[ComplexMatrix], grid: &HGrid, seed: u64) -> Vec<ComplexMatrix> {
    let b = seeded_matrix(rep[0].dim(), seed, 1.0);
    rep.iter()
        .zip(grid.samples())
        .map(|(r, &h)| r.add(&b.scale_real(h)).unwrap())
        .collect()
}

fn vanishing(name: &str, trace: &Trace, grid: &HGrid) -> Result<(), String> {
    let tol = default_vanish_tol(&trace.values);
    ensure(
        lib(trace.vanishes(grid, tol))?,
        format!("{name}: tail {:.3e}, tol {tol:.3e}", trace.tail.value),
    )
}

fn criterion_11(grid: &HGrid) -> Verdict {
    let (_, sf) = lib(equivalent_pair(3, child_seed(SEED, 11_000)))?;
    let upper = lib(quotient_norm_bounds(&sf, grid))?.upper;
    let (l, m) = (c(1.5 * upper, 0.5), c(-0.5, 1.25 * upper));
    let rl = lib(resolvent_at(&sf, l, grid))?;
    let rm = lib(resolvent_at(&sf, m, grid))?;
    let max_of = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (nl, nm) = (max_of(&rl.norms), max_of(&rm.norms));
    let (el, em) = (lib(rl.representative())?, lib(rm.representative())?);
    let scale = (1.0 + nl) * (1.0 + nm) * (1.0 + (l - m).norm());
    let eq = lib(equation_residual_trace(&el, &em, l, m, grid))?;
    let comm = lib(commutation_residual_trace(&el, &em, grid))?;
    let op = lib(operator_commutation_trace(&sf, &el, grid))?;
    ensure(
        eq.tail.value <= 1e-9 * scale,
        format!("resolvent equation {:.3e}", eq.tail.value),
    )?;
    ensure(
        comm.tail.value <= 1e-9 * scale,
        format!("resolvent commutator {:.3e}", comm.tail.value),
    )?;
    ensure(
        op.tail.value <= 1e-9 * (1.0 + upper) * (1.0 + nl),
        format!("operator commutator {:.3e}", op.tail.value),
    )?;

    let (pl, pm) = (
        perturb(&el, grid, child_seed(SEED, 11_001)),
        perturb(&em, grid, child_seed(SEED, 11_002)),
    );
    vanishing(
        "perturbed resolvent equation",
        &lib(equation_residual_trace(&pl, &pm, l, m, grid))?,
        grid,
    )?;
    vanishing(
        "perturbed resolvent commutator",
        &lib(commutation_residual_trace(&pl, &pm, grid))?,
        grid,
    )?;
    vanishing(
        "perturbed operator commutator",
        &lib(operator_commutation_trace(&sf, &pl, grid))?,
        grid,
    )?;

    // a perturbed representative still inverts, and inverses move to an equivalent family
    let d = lib(resolvent_defect(&sf, &pl, l, grid))?;
    vanishing("perturbed left defect", &d.left, grid)?;
    vanishing("perturbed right defect", &d.right, grid)?;
    let tf = lib(sf.plus(&FamilySpec::h_scaled(lib(FamilySpec::random(
        3,
        child_seed(SEED, 11_003),
        1.0,
    ))?)))?;
    let d = lib(resolvent_defect(&tf, &el, l, grid))?;
    vanishing("transferred left defect", &d.left, grid)?;
    vanishing("transferred right defect", &d.right, grid)?;
    Ok(format!(
        "exact residuals {:.1e} / {:.1e} / {:.1e}",
        eq.tail.value, comm.tail.value, op.tail.value
    ))
}

fn criterion_12(_grid: &HGrid) -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_asymspec"))
            .args(["verify", "--seed", "42", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            status.status.code() == Some(0),
            format!("{run} run exited with {:?}", status.status.code()),
        )?;
        reports.push(std::fs::read(out.join("verify.json")).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], "reports differ")?;
    Ok(format!("{} identical bytes", reports[0].len()))
}

fn main() -> ExitCode {
    let grid = HGrid::default();
    type Criterion = (&'static str, fn(&HGrid) -> Verdict);
    let criteria: [Criterion; 12] = [
        ("bracket consistency", criterion_1),
        ("commuting collapse", criterion_2),
        ("equivalence relations", criterion_3),
        ("equivalence implies quasinilpotent equivalence", criterion_4),
        ("two-point family spectrum", criterion_5),
        ("vanishing perturbation keeps the spectrum", criterion_6),
        (
            "quasinilpotent equivalence keeps the spectrum, series resolvent",
            criterion_7,
        ),
        ("spectral mapping", criterion_8),
        ("quasinilpotent iff spectrum at zero", criterion_9),
        ("functional calculus accuracy", criterion_10),
        ("resolvent identities", criterion_11),
        ("verify determinism", criterion_12),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = f(&grid);
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name} ({detail}) [{secs:.2} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({detail}) [{secs:.2} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
