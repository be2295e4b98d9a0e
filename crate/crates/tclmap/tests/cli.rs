use std::path::Path;
use std::process::{Command, Output};

fn tclmap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tclmap"))
        .args(args)
        .current_dir(cwd)
        .env("TCLMAP_WORKERS", "1")
        .output()
        .unwrap()
}

const SMALL_SBM: &str = r#"
experiment = "fig5"
model = "sbm"

[bath]
lambda_sq = 0.025
s = 1.0
omega_c = 4.0

[system]
delta = 1.0

[grid]
t_max = 10.0
n_points = 101

[outputs]
directory = "out"
artifacts = ["maps"]
"#;

#[test]
fn list_names_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = tclmap(&["list"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["fig2", "fig3", "fig4", "fig5", "fig6", "nesting", "acceptance-rwa", "acceptance-sbm", "sweep"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name} missing from:\n{text}");
    }
}

#[test]
fn unknown_scenario_is_a_config_error_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let o = tclmap(&["run", "--scenario", "fig55"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean"));
}

#[test]
fn malformed_key_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, SMALL_SBM.replace("omega_c", "omegac")).unwrap();
    let o = tclmap(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn run_is_deterministic_and_compare_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sbm.toml");
    std::fs::write(&cfg, SMALL_SBM).unwrap();
    let a = tclmap(&["run", cfg.to_str().unwrap(), "--out", "a"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = tclmap(&["run", cfg.to_str().unwrap(), "--out", "b"], dir.path());
    assert_eq!(b.status.code(), Some(0));

    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "fig5");
    let files = summary["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let f = f.as_str().unwrap();
        let (x, y) = (std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap());
        assert_eq!(x, y, "{f} differs between runs");
    }

    // the closed-form element written by one run, read back as a reference
    let reference = dir.path().join("ref.csv");
    let mut w = csv::Writer::from_path(&reference).unwrap();
    w.write_record(["t", "re", "im"]).unwrap();
    let cfg_parsed = tclmap::cli::ScenarioConfig::load(&cfg).unwrap();
    let (ts, vs) = tclmap::cli::quantity_series(&cfg_parsed, "phi_12_12_closed").unwrap();
    for (t, v) in ts.iter().zip(&vs) {
        w.write_record([tclmap::cli::fmt_f64(*t), tclmap::cli::fmt_f64(v.re), tclmap::cli::fmt_f64(v.im)]).unwrap();
    }
    w.flush().unwrap();
    let c = tclmap(&["compare", cfg.to_str().unwrap(), reference.to_str().unwrap(), "--quantity", "phi_12_12_closed"], dir.path());
    assert_eq!(c.status.code(), Some(0), "{}", String::from_utf8_lossy(&c.stderr));
    let report: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(report["max_abs_deviation"], 0.0);
    assert_eq!(report["n_compared"], 101);

    let far = dir.path().join("far.csv");
    std::fs::write(&far, "t,re,im\n50,1,0\n60,1,0\n").unwrap();
    let c = tclmap(&["compare", cfg.to_str().unwrap(), far.to_str().unwrap(), "--quantity", "phi_12_12_closed"], dir.path());
    assert_eq!(c.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&c.stderr).contains("does not overlap"));
}
