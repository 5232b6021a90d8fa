use std::path::Path;
use std::process::{Command, Output};

use cherry_cli::config::ExperimentConfig;
use cherry_core::cf::RotationTarget;
use cherry_core::flatmap::{FlatMapParams, Lift, ParamsJson};
use cherry_core::{Mp, Real};
use serde_json::Value;

fn cherry(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cherry"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn tuned_params_reload_to_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "tune.json",
        r#"{ "map": { "ell": 1.5, "flat_length": 0.2, "precision_bits": 128 },
             "target": { "kind": "golden" },
             "tune": { "tol": 1e-5 } }"#,
    );
    let out = dir.path().join("out");
    let o = cherry(&["tune"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let j: ParamsJson = serde_json::from_str(&std::fs::read_to_string(out.join("params.json")).unwrap()).unwrap();
    let lift = Lift::new(FlatMapParams::<Mp>::from_json(&j).unwrap()).unwrap();
    let est = lift.rotation_number(100_000).unwrap();
    let target = RotationTarget::<Mp>::golden_mean(128, 40);
    let diff = (est.estimate - &target.value).abs().to_f64();
    assert!(diff <= 1e-5 + est.error_bound, "{diff:e}");

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "tune");
    assert!(summary["results"]["tune"]["steps"].as_u64().unwrap() > 0);
}

#[test]
fn rational_target_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "half.json",
        r#"{ "map": { "ell": 1.5, "flat_length": 0.2, "precision_bits": 128 },
             "target": { "kind": "rational", "p": 1, "q": 2 } }"#,
    );
    let o = cherry(&["tune"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["kind"], "invalid_target");
}

#[test]
fn missing_precision_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{ "map": { "ell": 1.5, "flat_length": 0.2 }, "target": { "kind": "golden" } }"#,
    );
    let o = cherry(&["tune"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["kind"], "config");
    assert!(err["message"].as_str().unwrap().contains("precision_bits"));
    assert_eq!(err["path"], "map");
}

#[test]
fn empty_time_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "grid.json",
        r#"{ "map": { "ell": 1.5, "flat_length": 0.2, "precision_bits": 128 },
             "target": { "kind": "golden" },
             "gamma": { "t_grid": [], "n0": 4 } }"#,
    );
    let o = cherry(&["gamma"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["path"], "gamma.t_grid");
}

#[test]
fn unknown_field_is_rejected() {
    let e = ExperimentConfig::parse(
        r#"{ "map": { "ell": 1.5, "flat_length": 0.2, "precision_bits": 128, "colour": 1 },
             "target": { "kind": "golden" } }"#,
    )
    .unwrap_err();
    assert!(e.to_string().contains("colour"));
}

#[test]
fn shipped_configs_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 7);
}

#[test]
fn given_critical_value_skips_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let tune_cfg = write(
        dir.path(),
        "tune.json",
        r#"{ "map": { "ell": 1.5, "flat_length": 0.2, "precision_bits": 128 },
             "target": { "kind": "golden" },
             "tune": { "tol": 1e-5 } }"#,
    );
    let tuned = dir.path().join("tuned");
    assert!(cherry(&["tune"], &tune_cfg, &tuned).status.success());
    let j: ParamsJson = serde_json::from_str(&std::fs::read_to_string(tuned.join("params.json")).unwrap()).unwrap();

    let cfg = write(
        dir.path(),
        "alpha.json",
        &format!(
            r#"{{ "map": {{ "ell": 1.5, "flat_length": 0.2, "precision_bits": 128, "c": "{}" }},
                 "target": {{ "kind": "golden" }},
                 "geometry": {{ "n_max": 5 }} }}"#,
            j.c
        ),
    );
    let out = dir.path().join("out");
    let o = cherry(&["alpha", "--precision-override", "192"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["results"].get("tune").is_none());
    assert!(summary["precision_bits_used"].as_u64().unwrap() >= 192);
    let csv = std::fs::read_to_string(out.join("alpha.csv")).unwrap();
    let ns: Vec<usize> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ns, (0..=5).collect::<Vec<_>>());
    let geo = std::fs::read_to_string(out.join("geometry.csv")).unwrap();
    assert!(geo.lines().count() > 1);
}

#[test]
fn tune_refuses_a_fixed_critical_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fixed.json",
        r#"{ "map": { "ell": 1.5, "flat_length": 0.2, "precision_bits": 128, "c": "0.5" },
             "target": { "kind": "golden" } }"#,
    );
    let o = cherry(&["tune"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}
