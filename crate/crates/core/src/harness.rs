//! Command dispatch behind the `asymspec` binary: load families, run one
//! computation, write JSON/CSV artifacts, report an exit status.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical error. Failures also produce a diagnostic JSON object.

use std::path::PathBuf;

use serde_json::{json, Value};

use crate::bracket::{DEFAULT_N_MAX, DEFAULT_ROOT_TOL};
use crate::equivalence::{
    asymptotic_commuting, asymptotic_equiv, is_asymptotic_quasinilpotent, quasinilpotent_equiv, Evidence,
};
use crate::error::{Error, Result};
use crate::expr::{Bindings, FuncExpr, Variable};
use crate::family::{hgrid_geometric, FamilySpec, HGrid};
use crate::funcalc::{family_funcalc_with_source, ContourSpec, DEFAULT_NODES};
use crate::linalg::C64;
use crate::report::{json_f64, to_json_string, write_report};
use crate::schema::load_family;
use crate::spectrum::{
    centroids_match, quotient_norm_bounds, resolvent_norm_field, series_resolvent, spectrum_estimate, ComplexRegion,
    SpectrumEstimate, DEFAULT_EPSILON_REL, DEFAULT_RESOLUTION,
};
use crate::verify::verify_all;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Field,
    Equiv,
    Qequiv,
    Qnil,
    Funcalc,
    Series,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Field => "field",
            Command::Equiv => "equiv",
            Command::Qequiv => "qequiv",
            Command::Qnil => "qnil",
            Command::Funcalc => "funcalc",
            Command::Series => "series",
            Command::Verify => "verify",
        }
    }
}

/// Everything one run needs. Optional fields fall back to data-driven defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub family: Option<PathBuf>,
    pub family2: Option<PathBuf>,
    pub grid_h0: f64,
    pub grid_ratio: f64,
    pub grid_count: usize,
    pub tail_window: usize,
    pub region_center: Option<C64>,
    pub region_half_width: Option<f64>,
    pub resolution: usize,
    /// Absolute threshold; defaults to `1e-3` times the upper norm bound.
    pub epsilon: Option<f64>,
    pub expr: Option<String>,
    pub contour_center: Option<C64>,
    pub contour_radius: Option<f64>,
    pub nodes: usize,
    pub nmax: usize,
    pub tol: Option<f64>,
    /// Evaluation points for `series`; defaults to three points well outside the spectrum.
    pub lambdas: Vec<C64>,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            family: None,
            family2: None,
            grid_h0: 1.0,
            grid_ratio: 0.5,
            grid_count: 20,
            tail_window: 6,
            region_center: None,
            region_half_width: None,
            resolution: DEFAULT_RESOLUTION,
            epsilon: None,
            expr: None,
            contour_center: None,
            contour_radius: None,
            nodes: DEFAULT_NODES,
            nmax: DEFAULT_N_MAX,
            tol: None,
            lambdas: Vec::new(),
            out: out.into(),
            seed: DEFAULT_SEED,
        }
    }
}

/// Exit status, written artifacts, and the summary printed by the binary.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: Value,
}

enum Failure {
    Config { field: &'static str, message: String },
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

fn config(field: &'static str, message: impl Into<String>) -> Failure {
    Failure::Config {
        field,
        message: message.into(),
    }
}

/// Parses a complex constant such as `1.5`, `-2i` or `0.5+0.25i`.
pub fn parse_complex(src: &str) -> Result<C64> {
    let e = FuncExpr::parse(src)?;
    if e.uses(Variable::Lambda) || e.uses(Variable::H) {
        return Err(Error::BadParameter(format!("`{src}` is not a constant")));
    }
    Ok(e.eval(&Bindings::default())?)
}

struct Session<'a> {
    cfg: &'a RunConfig,
    grid: HGrid,
    artifacts: Vec<PathBuf>,
}

impl Session<'_> {
    fn family(&self, field: &'static str, path: &Option<PathBuf>) -> std::result::Result<FamilySpec, Failure> {
        let path = path.as_ref().ok_or_else(|| {
            config(
                field,
                format!("--{field} is required for `{}`", self.cfg.command.as_str()),
            )
        })?;
        load_family(path).map_err(|e| config(field, format!("{}: {e}", path.display())))
    }

    fn write(&mut self, name: &str, contents: &str) -> std::result::Result<(), Failure> {
        let path = self.cfg.out.join(name);
        write_report(&path, contents).map_err(|e| config("out", format!("{}: {e}", path.display())))?;
        self.artifacts.push(path);
        Ok(())
    }

    fn region_for(&self, upper: f64) -> std::result::Result<ComplexRegion, Failure> {
        let default = ComplexRegion::default_for(upper);
        let center = self.cfg.region_center.unwrap_or(default.center());
        let hw = self.cfg.region_half_width.unwrap_or(default.half_width());
        ComplexRegion::new(center, hw, self.cfg.resolution).map_err(|e| {
            let field = if self.cfg.region_half_width.is_some() && (hw.is_nan() || hw <= 0.0) {
                "region-half-width"
            } else {
                "resolution"
            };
            config(field, e.to_string())
        })
    }

    fn epsilon_for(&self, upper: f64) -> f64 {
        self.cfg
            .epsilon
            .unwrap_or(DEFAULT_EPSILON_REL * if upper > 0.0 { upper } else { 1.0 })
    }
}

fn build_grid(cfg: &RunConfig) -> std::result::Result<HGrid, Failure> {
    if !(cfg.grid_h0 > 0.0 && cfg.grid_h0 <= 1.0) {
        return Err(config("grid-h0", "must lie in (0, 1]"));
    }
    if !(cfg.grid_ratio > 0.0 && cfg.grid_ratio < 1.0) {
        return Err(config("grid-ratio", "must lie in (0, 1)"));
    }
    if cfg.grid_count < 4 {
        return Err(config("grid-count", "must be at least 4"));
    }
    if cfg.tail_window == 0 || cfg.tail_window > cfg.grid_count {
        return Err(config("tail-window", "must lie in 1..=grid-count"));
    }
    hgrid_geometric(cfg.grid_h0, cfg.grid_ratio, cfg.grid_count, cfg.tail_window)
        .map_err(|e| config("grid-ratio", e.to_string()))
}

fn error_json(f: &Failure) -> (i32, Value) {
    match f {
        Failure::Config { field, message } => (2, json!({"error": "config", "field": field, "message": message})),
        Failure::Numerical(e) => (3, json!({"error": "numerical", "message": e.to_string()})),
    }
}

/// Runs one command. Never panics on bad input; problems surface as exit codes.
pub fn run(cfg: &RunConfig) -> RunOutcome {
    let mut artifacts = Vec::new();
    let result = build_grid(cfg).and_then(|grid| {
        let mut session = Session {
            cfg,
            grid,
            artifacts: Vec::new(),
        };
        let r = dispatch(&mut session);
        artifacts = std::mem::take(&mut session.artifacts);
        r
    });
    match result {
        Ok((exit_code, summary)) => RunOutcome {
            exit_code,
            artifacts,
            summary,
        },
        Err(f) => {
            let (exit_code, summary) = error_json(&f);
            let path = cfg.out.join("error.json");
            if write_report(&path, &to_json_string(&summary)).is_ok() {
                artifacts.push(path);
            }
            RunOutcome {
                exit_code,
                artifacts,
                summary,
            }
        }
    }
}

type Dispatch = std::result::Result<(i32, Value), Failure>;

fn dispatch(s: &mut Session<'_>) -> Dispatch {
    match s.cfg.command {
        Command::Spectrum => cmd_spectrum(s, true),
        Command::Field => cmd_spectrum(s, false),
        Command::Equiv => cmd_equiv(s),
        Command::Qequiv => cmd_qequiv(s),
        Command::Qnil => cmd_qnil(s),
        Command::Funcalc => cmd_funcalc(s),
        Command::Series => cmd_series(s),
        Command::Verify => cmd_verify(s),
    }
}

fn region_json(r: &ComplexRegion) -> Value {
    json!({
        "center": [json_f64(r.center().re), json_f64(r.center().im)],
        "half_width": json_f64(r.half_width()),
        "resolution": r.resolution(),
        "spacing": json_f64(r.spacing()),
    })
}

fn scan(
    s: &Session<'_>,
    sf: &FamilySpec,
) -> std::result::Result<
    (
        ComplexRegion,
        crate::spectrum::ResolventField,
        SpectrumEstimate,
        f64,
        f64,
    ),
    Failure,
> {
    let bounds = quotient_norm_bounds(sf, &s.grid)?;
    let region = s.region_for(bounds.upper)?;
    let eps = s.epsilon_for(bounds.upper);
    if eps.is_nan() || eps <= 0.0 {
        return Err(config("epsilon", "must be positive"));
    }
    let field = resolvent_norm_field(sf, &region, &s.grid)?;
    let est = spectrum_estimate(&field, eps)?;
    Ok((region, field, est, bounds.lower, bounds.upper))
}

fn cmd_spectrum(s: &mut Session<'_>, with_estimate: bool) -> Dispatch {
    let sf = s.family("family", &s.cfg.family.clone())?;
    let (region, field, est, lower, upper) = scan(s, &sf)?;
    s.write("field.csv", &field.to_csv())?;
    if !with_estimate {
        return Ok((
            0,
            json!({"command": "field", "region": region_json(&region), "points": field.values.len()}),
        ));
    }
    let mut report = est.to_json();
    report["region"] = region_json(&region);
    report["norm_bounds"] = json!({"lower": json_f64(lower), "upper": json_f64(upper)});
    s.write("spectrum.json", &to_json_string(&report))?;
    Ok((0, json!({"command": "spectrum", "clusters": est.clusters.len()})))
}

fn cmd_equiv(s: &mut Session<'_>) -> Dispatch {
    let sf = s.family("family", &s.cfg.family.clone())?;
    let tf = s.family("family2", &s.cfg.family2.clone())?;
    let eq = asymptotic_equiv(&sf, &tf, &s.grid, s.cfg.tol)?;
    let comm = asymptotic_commuting(&sf, &tf, &s.grid, s.cfg.tol)?;
    s.write("equiv.json", &to_json_string(&eq.to_json()))?;
    s.write("commuting.json", &to_json_string(&comm.to_json()))?;
    Ok((
        0,
        json!({"command": "equiv", "equivalence": eq.result.as_str(), "commuting": comm.result.as_str()}),
    ))
}

fn write_brackets(s: &mut Session<'_>, evidence: &Evidence) -> std::result::Result<(), Failure> {
    if let Evidence::Brackets { forward, backward, .. } = evidence {
        s.write("brackets_forward.csv", &forward.to_csv())?;
        s.write("brackets_backward.csv", &backward.to_csv())?;
    }
    Ok(())
}

fn nmax_and_tol(s: &Session<'_>) -> std::result::Result<(usize, f64), Failure> {
    if s.cfg.nmax < 8 || s.cfg.nmax > crate::bracket::MAX_SEQUENCE_N {
        return Err(config(
            "nmax",
            format!("must lie in 8..={}", crate::bracket::MAX_SEQUENCE_N),
        ));
    }
    let tol = s.cfg.tol.unwrap_or(DEFAULT_ROOT_TOL);
    if tol.is_nan() || tol <= 0.0 {
        return Err(config("tol", "must be positive"));
    }
    Ok((s.cfg.nmax, tol))
}

fn cmd_qequiv(s: &mut Session<'_>) -> Dispatch {
    let sf = s.family("family", &s.cfg.family.clone())?;
    let tf = s.family("family2", &s.cfg.family2.clone())?;
    let (nmax, tol) = nmax_and_tol(s)?;
    let v = quasinilpotent_equiv(&sf, &tf, &s.grid, nmax, tol)?;
    s.write("qequiv.json", &to_json_string(&v.to_json()))?;
    write_brackets(s, &v.evidence)?;
    Ok((0, json!({"command": "qequiv", "result": v.result.as_str()})))
}

fn cmd_qnil(s: &mut Session<'_>) -> Dispatch {
    let uf = s.family("family", &s.cfg.family.clone())?;
    let (nmax, tol) = nmax_and_tol(s)?;
    let v = is_asymptotic_quasinilpotent(&uf, &s.grid, nmax, tol)?;
    s.write("qnil.json", &to_json_string(&v.to_json()))?;
    write_brackets(s, &v.evidence)?;
    Ok((0, json!({"command": "qnil", "result": v.result.as_str()})))
}

fn complex_json(z: C64) -> Value {
    json!([json_f64(z.re), json_f64(z.im)])
}

fn cmd_funcalc(s: &mut Session<'_>) -> Dispatch {
    let tf = s.family("family", &s.cfg.family.clone())?;
    let source = s
        .cfg
        .expr
        .clone()
        .ok_or_else(|| config("expr", "--expr is required for `funcalc`"))?;
    let f = FuncExpr::parse(&source).map_err(|e| config("expr", e.to_string()))?;

    let (_, _, spec_t, _, upper) = scan(s, &tf)?;
    let center = s.cfg.contour_center.unwrap_or(C64::new(0.0, 0.0));
    let radius = s
        .cfg
        .contour_radius
        .unwrap_or(if upper > 0.0 { 1.5 * upper } else { 1.0 });
    let contour = ContourSpec::new(center, radius, s.cfg.nodes).map_err(|e| {
        let field = if s.cfg.nodes != DEFAULT_NODES {
            "nodes"
        } else {
            "contour-radius"
        };
        config(field, e.to_string())
    })?;
    if !contour.encloses(&spec_t) {
        return Err(Failure::Numerical(Error::NonEnclosing));
    }
    let ff = family_funcalc_with_source(&tf, &f, &source, &contour);

    let tail: Vec<Value> = s
        .grid
        .tail()
        .iter()
        .map(|&h| Ok(json!({"h": json_f64(h), "matrix": ff.eval(h)?.to_json()})))
        .collect::<Result<_>>()?;

    // spectral mapping: clusters of {f(T_h)} against f applied to the clusters of {T_h}
    let fb = quotient_norm_bounds(&ff, &s.grid)?;
    let fregion = ComplexRegion::default_for(fb.upper);
    let ffield = resolvent_norm_field(&ff, &fregion, &s.grid)?;
    let spec_f = spectrum_estimate(&ffield, DEFAULT_EPSILON_REL * fb.upper.max(f64::MIN_POSITIVE))?;
    let mapped = spec_t
        .centroids()
        .iter()
        .map(|&c| Ok(f.eval(&Bindings::lambda(c))?))
        .collect::<Result<Vec<_>>>()?;
    let mut distinct: Vec<C64> = Vec::new();
    for m in mapped {
        if !distinct
            .iter()
            .any(|d| crate::spectrum::within_cells(*d, m, spec_f.spacing, 1.0))
        {
            distinct.push(m);
        }
    }
    let agree = centroids_match(&spec_f.centroids(), &distinct, spec_f.spacing, 1.0);
    let report = json!({
        "expr": source,
        "contour": {"center": complex_json(contour.center()), "radius": json_f64(contour.radius()), "nodes": contour.nodes()},
        "tail": tail,
        "spectral_mapping": {
            "image_of_clusters": distinct.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
            "clusters_of_image": spec_f.to_json(),
            "region": region_json(&fregion),
            "agree_within_one_cell": agree,
        },
    });
    s.write("funcalc.json", &to_json_string(&report))?;
    Ok((0, json!({"command": "funcalc", "spectral_mapping_agrees": agree})))
}

fn cmd_series(s: &mut Session<'_>) -> Dispatch {
    let sf = s.family("family", &s.cfg.family.clone())?;
    let tf = s.family("family2", &s.cfg.family2.clone())?;
    let terms = s.cfg.nmax;
    if terms == 0 || terms > crate::spectrum::MAX_SERIES_TERMS {
        return Err(config(
            "nmax",
            format!("series terms must lie in 1..={}", crate::spectrum::MAX_SERIES_TERMS),
        ));
    }
    let lambdas = if s.cfg.lambdas.is_empty() {
        let ub = quotient_norm_bounds(&sf, &s.grid)?
            .upper
            .max(quotient_norm_bounds(&tf, &s.grid)?.upper);
        let r = 1.5 * ub + 0.5;
        vec![
            C64::new(r, 0.0),
            C64::from_polar(r, 2.0 * std::f64::consts::PI / 3.0),
            C64::from_polar(r, 4.0 * std::f64::consts::PI / 3.0),
        ]
    } else {
        s.cfg.lambdas.clone()
    };
    let mut rows = Vec::new();
    let mut all_vanish = true;
    for &lambda in &lambdas {
        let sr = series_resolvent(&sf, &tf, lambda, &s.grid, terms)?;
        let tol = s
            .cfg
            .tol
            .unwrap_or(crate::family::default_vanish_tol(&sr.defect.left.values));
        let ok = sr.defect.vanishes(&s.grid, tol)?;
        all_vanish &= ok;
        rows.push(json!({
            "lambda": complex_json(lambda),
            "left_defect": json_f64(sr.defect.left.tail.value),
            "left_trend": sr.defect.left.tail.trend.as_str(),
            "right_defect": json_f64(sr.defect.right.tail.value),
            "right_trend": sr.defect.right.tail.trend.as_str(),
            "tol": json_f64(tol),
            "vanishes": ok,
            "truncation_warning": sr.truncation_warning,
            "last_term_tail": json_f64(
                sr.term_norms[s.grid.tail_start()..].iter().map(|t| *t.last().unwrap_or(&0.0)).fold(0.0, f64::max)
            ),
        }));
    }
    s.write(
        "series.json",
        &to_json_string(&json!({"n_terms": terms, "points": rows})),
    )?;
    Ok((0, json!({"command": "series", "defects_vanish": all_vanish})))
}

fn cmd_verify(s: &mut Session<'_>) -> Dispatch {
    let report = verify_all(s.cfg.seed, &s.grid);
    s.write("verify.json", &to_json_string(&report.to_json()))?;
    let code = if report.all_passed() { 0 } else { 1 };
    Ok((
        code,
        json!({
            "command": "verify",
            "passed": report.all_passed(),
            "suites": report.suites.iter().map(|r| json!({"name": r.name, "passed": r.passed()})).collect::<Vec<_>>(),
        }),
    ))
}
