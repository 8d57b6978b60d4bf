use std::process::Command;

use stoquant::harness::{preset_config, ExperimentConfig, Preset, RunManifest};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stoquant"))
}

fn write_config(dir: &std::path::Path, c: &ExperimentConfig) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, c.to_json().unwrap()).unwrap();
    p
}

#[test]
fn empty_check_list_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        checks: vec![],
        ..preset_config(Preset::FreeField)
    };
    let cfg = write_config(dir.path(), &c);
    let out = dir.path().join("out");
    let s = bin().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(s.success());
    let m = RunManifest::from_json(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(m.checks.is_empty());
}

#[test]
fn invalid_json_fails_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let out = dir.path().join("out");
    let o = bin().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
    assert!(!out.exists());
}

#[test]
fn seed_flag_overrides_config_and_report_renders() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        checks: vec![stoquant::harness::CheckSpec::GroundState {
            expected_lambda0: Some(0.5),
            tol: 1e-5,
        }],
        ..preset_config(Preset::FreeField)
    };
    let cfg = write_config(dir.path(), &c);
    let out = dir.path().join("out");
    let s = bin()
        .args(["verify", "--seed", "99", "--jobs", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(s.success());
    let m = RunManifest::from_json(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seed, 99);
    let o = bin().arg("report").arg(&out).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("ground_state") && text.contains("PASS"));
    let o = bin().args(["report", "--format", "json"]).arg(&out).output().unwrap();
    assert_eq!(RunManifest::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap(), m);
}

#[test]
fn csv_outputs_carry_unit_headers() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["prox-table", "--preset", "abs-norm", "--points", "11"],
        &["sample-gibbs", "--points", "20", "--paths", "2"],
        &["ground-state", "--levels", "2"],
    ];
    for args in runs {
        assert!(bin().args(args).arg("--out").arg(dir.path()).status().unwrap().success());
    }
    for f in ["prox.csv", "gibbs_paths.csv", "ground_state.csv"] {
        let body = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(body.starts_with("# "), "{f}");
    }
    let prox = std::fs::read_to_string(dir.path().join("prox.csv")).unwrap();
    assert_eq!(prox.lines().filter(|l| !l.starts_with('#')).count(), 11);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = preset_config(Preset::AbsNorm);
    c.spde.t_final = 0.5;
    let cfg = write_config(dir.path(), &c);
    let mut outs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        assert!(bin().arg("simulate").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
        outs.push(std::fs::read(out.join("trajectory.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}
