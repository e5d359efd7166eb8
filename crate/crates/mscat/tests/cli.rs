//! End-to-end checks of the `mscat` binary and its config loader.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mscat::config::{bundled, AxesConvention, ConfigFile, Method, ObstacleConfig, BUNDLED};
use mscat::experiment::{run_methods, validate, Setup};
use mscat_core::geometry::Curve;

const SMALL: &str = r#"
[[scenario]]
name = "small"
wavenumber = 6.0
direction = [1.0, 0.0]
nodes = [64, 96]
max_reflections = 30
krylov_iterations = 12
kirchhoff_terms = [2, 4]
kirchhoff_iterations = 3

[[scenario.obstacles]]
kind = "circle"
center = [0.0, 0.0]
radius = 1.0

[[scenario.obstacles]]
kind = "circle"
center = [0.9625, -2.6444]
radius = 1.5
"#;

fn mscat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mscat")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bundled_scenarios_parse_with_stated_geometry() {
    for (name, _) in BUNDLED {
        let s = bundled(name).unwrap();
        assert_eq!(s.name, name);
        assert_eq!(s.methods, Method::ALL.to_vec());
    }
    let c = bundled("circles_paper").unwrap();
    assert_eq!(c.wavenumber, 200.0);
    assert_eq!(
        c.obstacles,
        vec![
            ObstacleConfig::Circle { center: [0.0, 0.0], radius: 1.0 },
            ObstacleConfig::Circle { center: [0.9625, -2.6444], radius: 1.5 },
        ]
    );
    assert_eq!(bundled("circles_desk").unwrap().wavenumber, 50.0);
    let e = bundled("ellipses_paper").unwrap();
    assert_eq!(e.wavenumber, 40.0);
    assert_eq!(e.direction, [1.0, 0.0]);
    match (&e.obstacles[0], e.obstacles[1].curve()) {
        (ObstacleConfig::Ellipse { axes, axes_convention, .. }, Curve::Ellipse { center, semi_x, semi_y, .. }) => {
            assert_eq!(*axes, [10.0, 1.0]);
            assert_eq!(*axes_convention, AxesConvention::Semi);
            assert_eq!((center.x, center.y, semi_x, semi_y), (0.0, -4.5, 7.0, 2.0));
        }
        other => panic!("unexpected obstacles {other:?}"),
    }
}

#[test]
fn full_axes_convention_halves_lengths() {
    let text = bundled_text("ellipses_desk").replace("axes_convention = \"semi\"", "axes_convention = \"full\"");
    let s = ConfigFile::parse(&text).unwrap().scenarios[0].clone();
    match s.obstacles[0].curve() {
        Curve::Ellipse { semi_x, semi_y, .. } => assert_eq!((semi_x, semi_y), (5.0, 0.5)),
        other => panic!("{other:?}"),
    }
}

fn bundled_text(name: &str) -> String {
    BUNDLED.iter().find(|(n, _)| *n == name).unwrap().1.to_string()
}

#[test]
fn schema_errors_name_the_field() {
    let bad = SMALL.replace("radius = 1.5", "radius = \"wide\"");
    let err = ConfigFile::parse(&bad).unwrap_err().to_string();
    // Tagged obstacle tables report the path down to the obstacle.
    assert!(err.contains("scenario[0].obstacles[1]") && err.contains("expected f64"), "{err}");
    let bad = SMALL.replace("wavenumber = 6.0", "wavenumber = -6.0");
    let err = ConfigFile::parse(&bad).unwrap_err().to_string();
    assert!(err.contains("scenario[0].wavenumber"), "{err}");
    let bad = SMALL.replace("nodes = [64, 96]", "nodes = [64, 96]\npoints_per_wavelength = 8.0");
    assert!(ConfigFile::parse(&bad).is_err());
    let bad = SMALL.replace("max_reflections = 30", "max_reflections = 0");
    assert!(ConfigFile::parse(&bad).unwrap_err().to_string().contains("max_reflections"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &SMALL.replace("kind = \"circle\"", "kind = \"square\""));
    let out = mscat(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario[0].obstacles[0]"));
    assert_eq!(mscat(&["validate", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(mscat(&["run", "--scenario", "no_such_scene"]).status.code(), Some(2));
    assert_eq!(mscat(&["frobnicate"]).status.code(), Some(2));
    let big = write(dir.path(), "big.toml", &SMALL.replace("nodes = [64, 96]", "nodes = [8000, 8000]"));
    let out_dir = dir.path().join("big");
    let out = mscat(&["run", "--config", &big, "--output", out_dir.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_flags_occlusion() {
    let blocked = SMALL.replace("center = [0.9625, -2.6444]", "center = [3.0, 0.0]").replace("radius = 1.5", "radius = 1.0");
    let s = ConfigFile::parse(&blocked).unwrap().scenarios[0].clone();
    let report = validate(&s);
    assert_eq!(report.no_occlusion, Some(false));
    assert!(!report.is_clean());
    let paper = validate(&bundled("circles_paper").unwrap());
    assert!(paper.is_clean(), "{:?}", paper.violations);
    let predicted = paper.prediction.unwrap().predicted_reflections;
    assert!((predicted / 77.0 - 1.0).abs() <= 0.25, "{predicted}");
    let overlapping = SMALL.replace("center = [0.9625, -2.6444]", "center = [0.5, 0.0]");
    let report = validate(&ConfigFile::parse(&overlapping).unwrap().scenarios[0]);
    assert!(!report.disjoint);
    assert!(!report.is_clean());
}

#[test]
fn validate_and_rate_commands_print_reports() {
    let out = mscat(&["validate", "--scenario", "circles_paper"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("no_occlusion: true") && text.contains("violations: none"), "{text}");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = mscat(&["rate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let predicted = v["prediction"]["r2_modulus"].as_f64().unwrap();
    assert!((predicted - 0.493013313836).abs() < 1e-9);
    assert!(v["empirical_modulus"].as_f64().unwrap() > 0.0);
}

#[test]
fn run_writes_reproducible_csvs_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out =
            mscat(&["run", "--config", &cfg, "--output", out_dir.to_str().unwrap(), "--deterministic", "--quiet"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(out_dir);
    }
    let files = [
        "neumann.csv",
        "pade.csv",
        "krylov_binomial.csv",
        "krylov_stable.csv",
        "krylov_kirchhoff_N2.csv",
        "krylov_kirchhoff_N4.csv",
    ];
    for f in files {
        let a = fs::read(outputs[0].join(f)).unwrap();
        let b = fs::read(outputs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration_or_reflection,log10_l2_error,wall_seconds"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 3);
        let mantissa = row[1].split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{}", row[1]);
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outputs[0].join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["nodes"], serde_json::json!([64, 96]));
    assert_eq!(meta["config"]["name"], "small");
    assert!(meta["commit"].is_string());
    assert_eq!(meta["methods"].as_array().unwrap().len(), files.len());
}

#[test]
fn method_filter_and_debug_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("dump");
    let out = mscat(&[
        "run",
        "--config",
        &cfg,
        "--method",
        "neumann",
        "--method",
        "krylov_stable",
        "--output",
        out_dir.to_str().unwrap(),
        "--debug-dump",
        "2",
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("neumann.csv").exists() && out_dir.join("krylov_stable.csv").exists());
    assert!(!out_dir.join("pade.csv").exists());
    let phase = fs::read_to_string(out_dir.join("phases/phase_q2_obstacle1.csv")).unwrap();
    assert!(phase.lines().next().unwrap().starts_with("node,param,phase,region"));
    assert_eq!(phase.lines().count(), 97);
    assert!(phase.contains(",IL,") && phase.contains(",SR,"));
    let beam = fs::read_to_string(out_dir.join("beams/beam_l1_obstacle0.csv")).unwrap();
    assert_eq!(beam.lines().count(), 65);
}

#[test]
fn stable_krylov_never_trails_neumann() {
    let s = ConfigFile::parse(SMALL).unwrap().scenarios[0].clone();
    let setup = Setup::new(&s).unwrap();
    let h = run_methods(&setup, &[Method::Neumann, Method::KrylovStable], |_| {}).unwrap();
    let (neumann, stable) = (&h[0], &h[1]);
    // Minimal residual is not minimal error: for the first few applications
    // the Neumann sum can be slightly ahead (rows 1 to 3 here).
    for row in stable.rows.iter().filter(|r| r.index >= 4) {
        let n = neumann.error_at(row.index).unwrap();
        // Both sit at rounding level once converged.
        assert!(row.log10_error <= n.log10().max(-13.0) + 1e-9, "index {}: {} vs {}", row.index, row.log10_error, n.log10());
    }
}
