use std::path::Path;
use std::process::{Command, Output};

fn bethe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bethe"))
        .args(args)
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_certify_exact_minimize() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("k4.json");
    let m = model.to_str().unwrap();
    let out = bethe(&[
        "generate",
        "--topology",
        "complete",
        "--n",
        "4",
        "--couplings",
        "1,1",
        "--fields",
        "0,0",
        "--beta",
        "0.6",
        "--out",
        m,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&model)["edges"].as_array().unwrap().len(), 6);

    let report = dir.path().join("cert.json");
    assert!(
        bethe(&["certify", "--model", m, "--out", report.to_str().unwrap()])
            .status
            .success()
    );
    let r = json(&report);
    assert_eq!(r["sum_convex"], false);
    assert!((r["beta_star_sum"].as_f64().unwrap() - 0.5 * 3f64.ln()).abs() < 1e-12);

    let exact = dir.path().join("exact.json");
    assert!(
        bethe(&["exact", "--model", m, "--out", exact.to_str().unwrap()])
            .status
            .success()
    );
    assert!((json(&exact)["singleton"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let result = dir.path().join("min.json");
    let trace = dir.path().join("trace.csv");
    let out = bethe(&[
        "minimize",
        "--model",
        m,
        "--restarts",
        "30",
        "--seed",
        "3",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        result.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let r = json(&result);
    assert_eq!(r["distinct_minima"], 2);
    assert_eq!(r["converged_runs"], 30);
    let t = std::fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("iteration,F_B,grad_norm,step\n"));
    assert!(t.lines().count() > 1);
}

#[test]
fn generate_is_seeded() {
    let a = bethe(&["generate", "--topology", "er", "--n", "12", "--seed", "4"]);
    let b = bethe(&["generate", "--topology", "er", "--n", "12", "--seed", "4"]);
    let c = bethe(&["generate", "--topology", "er", "--n", "12", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn thresholds_table() {
    let out = bethe(&["thresholds", "--d-min", "3", "--d-max", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,exact,dobrushin,simon,diag_dominance,heskes");
    assert_eq!(lines.len(), 4);
    let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((first[1] - 0.5f64.atanh()).abs() < 1e-15);
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg,
        r#"{"family": {"graph": {"kind": "complete", "n": 5}, "coupling_range": [-1, 1], "field_range": [-0.125, 0.125]},
            "model_count": 2, "beta_grid": [0.5, 1.0], "restarts": 3, "seed": 9}"#,
    )
    .unwrap();
    let out = bethe(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["cells.csv", "aggregates.csv", "sweep.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let agg = std::fs::read_to_string(out_dir.join("aggregates.csv")).unwrap();
    assert_eq!(agg.lines().count(), 3);
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"nodes": 2, "beta": 0, "edges": [], "fields": [0, 0]}"#,
    )
    .unwrap();
    for args in [
        vec!["certify", "--model", bad.to_str().unwrap()],
        vec!["certify", "--model", "/nonexistent/model.json"],
        vec!["sweep"],
        vec!["sweep", "--preset", "nope"],
        vec!["thresholds", "--d-min", "2"],
        vec!["generate", "--couplings", "1"],
        vec!["frobnicate"],
    ] {
        let out = bethe(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
    }
    let big = dir.path().join("big.json");
    let gen = bethe(&[
        "generate",
        "--topology",
        "complete",
        "--n",
        "30",
        "--out",
        big.to_str().unwrap(),
    ]);
    assert!(gen.status.success());
    assert!(!bethe(&["exact", "--model", big.to_str().unwrap()])
        .status
        .success());
}
