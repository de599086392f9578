use std::fs;

use zeromach_cli::run_cli;
use zeromach_core::snapshot;
use zeromach_core::{Grid64, ScalarField64};

fn summary(dir: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn config_errors_exit_two_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nn = 12\n[time]\ndt = -1.0\n").unwrap();
    let out = dir.path().join("out");
    let code = run_cli(["zeromach", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"]);
    assert_eq!(code, 2);
    let s = summary(&out);
    assert_eq!(s["passed"], false);
    let failures = s["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 2, "{failures:?}");
}

#[test]
fn norms_of_a_single_mode() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid64::periodic(2, 64).unwrap();
    let f = ScalarField64::from_fn(&g, |x| (12.0 * x[0]).cos());
    let snap = dir.path().join("mode.bin");
    snapshot::save(&snap, &f, "rho", 0.0).unwrap();
    let cfg = dir.path().join("norms.toml");
    fs::write(
        &cfg,
        format!(
            "[grid]\nn = 64\n[norms]\npaths = [{:?}]\ns = [0.0, 1.0]\nr = 1.0\np = \"inf\"\n",
            snap.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = run_cli(["zeromach", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "norms"]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("norms.csv")).unwrap();
    let norms: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(norms.len(), 2);
    assert!((norms[0] - 1.0).abs() < 1e-12, "{norms:?}");
    assert!((norms[1] - 8.0).abs() < 1e-11, "{norms:?}");
}
