use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
[clock]
dynamics = { kind = "cir", kappa = 1.0, sigma = 0.5 }

[levy]
rho = -0.5

[levy.subordinator]
family = "gamma"
nu = 0.2
"#;

fn engine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcl-engine")).args(args).env_remove("TCL_ENGINE_WORKERS").output().unwrap()
}

fn config(dir: &Path, name: &str, task: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, format!("{BASE}\n{task}")).unwrap();
    path.display().to_string()
}

fn csv(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn laplace_at_zero_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "l.toml", "[task]\nkind = \"laplace\"\nhorizon = 1.0\nr = [0.0]\n");
    let out = dir.path().join("out");
    let o = engine(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv(&out.join("laplace.csv"));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][1] - 1.0).abs() < 1e-4, "{rows:?}");
    assert!(out.join("laplace.json").exists());
}

#[test]
fn clock_simulation_for_plotting() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig");
    let o = engine(&["run", "--config", "preset:cir-figure1", "--set", "numerics.monte_carlo.n_paths=2000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = csv(&out.join("v_path.csv"));
    let t = csv(&out.join("t_path.csv"));
    assert!(v.iter().all(|row| row[1..].iter().all(|&x| x >= 0.0)));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let sd = summary["clock"]["variance"].as_f64().unwrap().sqrt();
    let last = t.last().unwrap();
    let horizon = last[0];
    assert_eq!(horizon, 2.0);
    assert_eq!(*last.last().unwrap(), horizon, "reference column is y = t");
    for &clock in &last[1..last.len() - 1] {
        assert!((clock - horizon).abs() <= 5.0 * sd, "T = {clock}, sd {sd}");
    }
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = engine(&[
            "run",
            "--config",
            "preset:cir-figure1",
            "--set",
            "numerics.monte_carlo.n_paths=1000",
            "--set",
            "numerics.monte_carlo.dt=0.01",
            "--seed",
            "42",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        ["v_path.csv", "t_path.csv", "summary.json"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("a", "1"), run("b", "3"));
}

#[test]
fn schema_violations_exit_with_the_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.toml", "[task]\nkind = \"cf\"\nhorizon = 1.0\ntheta = [1.0]\n[numerics.monte_carlo]\nn_path = 5\n");
    let o = engine(&["validate-config", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("numerics.monte_carlo") && e.contains("n_path"), "{e}");

    let o = engine(&["validate-config", "--config", "preset:sv1", "--set", "two_factor.a_c=[1.0]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("two_factor.a_c"), "{}", stderr(&o));

    let o = engine(&["run", "--config", "preset:sv1", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = engine(&["validate-config", "--config", "preset:nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_the_operation() {
    let dir = tempfile::tempdir().unwrap();
    let task = "[task]\nkind = \"density\"\nhorizon = 1.0\ngrid = { lo = -5.0, hi = 5.0, n = 11 }\n\
                [numerics.transform]\nmax_xi_nodes = 8\nmax_zeta_nodes = 8\n";
    let cfg = config(dir.path(), "n.toml", task);
    let o = engine(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("transforms::pdf_Y"), "{}", stderr(&o));
}

#[test]
fn dry_run_prints_the_plan_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = engine(&["run", "--config", "preset:reference-correlated", "--dry-run", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["task"], "validate");
    assert!(plan["transform"]["xi_box"][1].as_f64().unwrap() > 0.0);
    assert!(plan["transform"]["j_panels"]["nodes"].as_u64().unwrap() > 0);
    assert_eq!(plan["monte_carlo"]["n_steps"], 500);
    assert!(!out.exists());
}

#[test]
fn validate_task_reports_and_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let task = "[task]\nkind = \"validate\"\nhorizon = 1.0\ntheta = [0.5, 1.0]\nr = [0.5]\n\
                [numerics.monte_carlo]\nn_paths = 20000\ndt = 0.01\n";
    let cfg = config(dir.path(), "v.toml", task);
    let out = dir.path().join("ok");
    let o = engine(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 2);

    let out = dir.path().join("strict");
    let o = engine(&["run", "--config", &cfg, "--set", "numerics.tolerances.cf_abs=1e-9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn presets_are_listed_and_printable() {
    let o = engine(&["list-presets"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["cir-figure1", "sv1", "sv2", "sv3", "sv4"] {
        assert!(text.contains(name), "{text}");
    }
    let o = engine(&["list-presets", "--show", "sv3"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("variant = \"sv3\""));
}

#[test]
fn workers_fall_back_to_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_tcl-engine"))
        .args(["run", "--config", "preset:sv1", "--dry-run"])
        .env("TCL_ENGINE_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "clap rejects a non-numeric worker count");
}
