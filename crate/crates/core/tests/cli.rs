//! The `asymspec` binary and the family file format, end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asymspec::fixtures::{commuting_nilpotent_pair, perturbed_nilpotent, triangular_fixture, two_point_family};
use asymspec::schema::{family_from_str, family_to_json, load_family, write_family};
use asymspec::Error;
use serde_json::Value;

fn asymspec(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymspec"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_two_point(dir: &Path) -> PathBuf {
    let path = dir.join("two_point.json");
    std::fs::write(
        &path,
        r#"{"dim": 2, "node": {"kind": "diag_expr", "entries": ["1", "2+h"]}}"#,
    )
    .unwrap();
    path
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_kind_is_rejected_at_its_pointer() {
    let err = family_from_str(r#"{"dim": 2, "node": {"kind": "mystery"}}"#).unwrap_err();
    match err {
        Error::Schema { pointer, .. } => assert_eq!(pointer, "/node/kind"),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn nested_errors_point_inside_the_tree() {
    let src = r#"{"dim": 2, "node": {"kind": "sum", "terms": [
        {"kind": "diag_expr", "entries": ["1", "2+h"]},
        {"kind": "diag_expr", "entries": ["1", "2+"]}]}}"#;
    match family_from_str(src).unwrap_err() {
        Error::Schema { pointer, .. } => assert_eq!(pointer, "/node/terms/1/entries/1"),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn families_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let specs = [
        two_point_family(),
        triangular_fixture(),
        perturbed_nilpotent(4, 9).unwrap(),
        commuting_nilpotent_pair().unwrap().1,
    ];
    for (k, spec) in specs.iter().enumerate() {
        let first = dir.path().join(format!("f{k}.json"));
        let second = dir.path().join(format!("g{k}.json"));
        write_family(spec, &first).unwrap();
        let loaded = load_family(&first).unwrap();
        write_family(&loaded, &second).unwrap();
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
        assert_eq!(family_to_json(&loaded), family_to_json(spec));
        assert_eq!(loaded.eval(0.25).unwrap(), spec.eval(0.25).unwrap());
    }
}

#[test]
fn spectrum_reports_clusters_at_one_and_two() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write_two_point(dir.path());
    let out = dir.path().join("out");
    let o = asymspec(
        &[
            "spectrum",
            "--family",
            fam.to_str().unwrap(),
            "--region-half-width",
            "2.5",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json_file(&out.join("spectrum.json"));
    let clusters = report["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 2);
    let mut res: Vec<f64> = clusters.iter().map(|c| c["centroid_re"].as_f64().unwrap()).collect();
    res.sort_by(f64::total_cmp);
    let spacing = report["region"]["spacing"].as_f64().unwrap();
    assert!(
        (res[0] - 1.0).abs() <= spacing && (res[1] - 2.0).abs() <= spacing,
        "{res:?}"
    );
}

#[test]
fn field_csv_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write_two_point(dir.path());
    let out = dir.path().join("out");
    let o = asymspec(
        &["field", "--family", fam.to_str().unwrap(), "--resolution", "21"],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("field.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re,im,field_value"));
    assert_eq!(lines.count(), 441);
}

#[test]
fn missing_family_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = asymspec(&["spectrum"], &out);
    assert_eq!(o.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["error"], "config");
    assert_eq!(diag["field"], "family");
    assert_eq!(json_file(&out.join("error.json"))["field"], "family");
}

#[test]
fn malformed_family_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("bad.json");
    std::fs::write(&fam, r#"{"dim": 2, "node": {"kind": "mystery"}}"#).unwrap();
    let o = asymspec(&["qnil", "--family", fam.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(diag["message"].as_str().unwrap().contains("/node/kind"));
}

#[test]
fn contour_through_the_spectrum_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write_two_point(dir.path());
    let out = dir.path().join("out");
    let args = [
        "funcalc",
        "--family",
        fam.to_str().unwrap(),
        "--expr",
        "exp(z)",
        "--contour-radius",
        "0.5",
    ];
    let o = asymspec(&args, &out);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json_file(&out.join("error.json"))["error"], "numerical");
}

#[test]
fn qnil_separates_nilpotent_from_invertible() {
    let dir = tempfile::tempdir().unwrap();
    let nil = dir.path().join("nil.json");
    write_family(&perturbed_nilpotent(3, 5).unwrap(), &nil).unwrap();
    let o = asymspec(&["qnil", "--family", nil.to_str().unwrap()], &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_file(&dir.path().join("a/qnil.json"))["result"], "holds");

    let half = dir.path().join("half.json");
    std::fs::write(
        &half,
        r#"{"dim": 1, "node": {"kind": "diag_expr", "entries": ["0.5"]}}"#,
    )
    .unwrap();
    let o = asymspec(&["qnil", "--family", half.to_str().unwrap()], &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_file(&dir.path().join("b/qnil.json"))["result"], "fails");
}

#[test]
fn series_defects_vanish_for_the_commuting_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (a, t) = commuting_nilpotent_pair().unwrap();
    let (fa, ft) = (dir.path().join("a.json"), dir.path().join("t.json"));
    write_family(&a, &fa).unwrap();
    write_family(&t, &ft).unwrap();
    let out = dir.path().join("out");
    let args = [
        "series",
        "--family",
        fa.to_str().unwrap(),
        "--family2",
        ft.to_str().unwrap(),
        "--lambda",
        "1.5",
        "--lambda",
        "0.5+i",
    ];
    let o = asymspec(&args, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json_file(&out.join("series.json"));
    let points = report["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    for p in points {
        assert_eq!(p["vanishes"], true, "{p}");
        assert!(p["left_defect"].as_f64().unwrap() <= 1e-9);
    }
    assert_eq!(points[1]["lambda"], serde_json::json!([0.5, 1.0]));
}

#[test]
fn artifacts_are_byte_stable_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write_two_point(dir.path());
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "3"].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let o = Command::new(env!("CARGO_BIN_EXE_asymspec"))
            .env("ASYMSPEC_THREADS", threads)
            .args([
                "spectrum",
                "--family",
                fam.to_str().unwrap(),
                "--resolution",
                "41",
                "--out",
            ])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outputs.push((
            std::fs::read(out.join("spectrum.json")).unwrap(),
            std::fs::read(out.join("field.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}
