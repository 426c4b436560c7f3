//! Runs the `qthermo` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = r#""omega1": 50, "omega2": 55, "interaction": "xyz", "coupling": 0.8, "delta": 0.5,
    "temperature": 127.33, "lambda": 1e-4, "initial_state": "phi_plus""#;

fn qthermo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qthermo")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("{{{BASE}, {extra}}}")).unwrap();
    path
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn run_writes_csvs_with_exact_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#""t_end": 1, "mode": "reduced""#);
    let out = dir.path().join("out");
    let res = qthermo(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        first_line(&out.join("thermo.csv")),
        "t,S12,S1,S2,J12,J1,J2,sigma12,sigma1,sigma2,deltaJ,balance_residual_max"
    );
    assert_eq!(
        first_line(&out.join("deficits.csv")),
        "t,total_direct,total_chi,markovian_like,nm_part,mutual_info,B_nM"
    );
    assert_eq!(first_line(&out.join("bounds.csv")), "t,bound_id,lhs,rhs,slack");
    let bounds = std::fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert!(bounds.contains(",deficit_upper_nm,") && bounds.contains(",complementarity_nm,"));
    assert!(!bounds.contains(",deficit_upper,"));
}

#[test]
fn mode_override_and_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#""t_end": 1"#);
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("lone");
    let res = qthermo(&["run", cfg, "--mode", "lone", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let bounds = std::fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert!(bounds.contains(",deficit_upper,") && !bounds.contains("_nm,"));

    let out = dir.path().join("rhp");
    let res = qthermo(&[
        "rhp",
        cfg,
        "--mode",
        "reduced",
        "--ln2-units",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert_eq!(first_line(&out.join("rhp.csv")), "t,value");

    let out = dir.path().join("thermal");
    let res = qthermo(&["thermal", cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("thermal.json")).unwrap()).unwrap();
    assert!(v.is_object());

    let res = qthermo(&["validate", cfg]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).starts_with("ok"));
}

#[test]
fn blp_search_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#""t_end": 2, "seed": 9, "mode": "reduced""#);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = qthermo(&[
            "blp",
            cfg.to_str().unwrap(),
            "--search",
            "4",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        std::fs::read(out.join("blp.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));

    // Without N the scenario's sample count applies.
    let cfg = write_config(dir.path(), "n.json", r#""t_end": 1, "blp_samples": 2, "mode": "lone""#);
    let out = dir.path().join("c");
    let res = qthermo(&["blp", cfg.to_str().unwrap(), "--search", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("blp.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let missing = dir.path().join("nope.json");
    let res = qthermo(&["validate", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("nope.json"));

    let bad = write_config(dir.path(), "bad.json", r#""t_end": 1, "colour": "red""#);
    let res = qthermo(&["validate", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("colour"));

    let bad = write_config(dir.path(), "dt.json", r#""t_end": 1, "dt": -1"#);
    assert_eq!(qthermo(&["validate", bad.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(qthermo(&["run"]).status.code(), Some(2));

    // Output directory below a regular file cannot be created.
    let good = write_config(dir.path(), "good.json", r#""t_end": 1, "outputs": ["thermal"]"#);
    let blocked = dir.path().join("good.json").join("out");
    let res = qthermo(&["run", good.to_str().unwrap(), "--out", blocked.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));

    // RK4 is unstable at this step for gaps near 105.
    let unstable = write_config(
        dir.path(),
        "unstable.json",
        r#""t_end": 5, "dt": 0.05, "record_every": 1"#,
    );
    let out = dir.path().join("out");
    let res = qthermo(&["run", unstable.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}
