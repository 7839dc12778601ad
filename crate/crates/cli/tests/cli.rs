use std::path::Path;
use std::process::{Command, Output};

fn prognosis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prognosis"))
        .args(args)
        .env_remove("PROGNOSIS_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = prognosis(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn noisy_design(dir: &Path) -> std::path::PathBuf {
    let design = dir.join("design.csv");
    let data = dir.join("data.csv");
    ok(&["--seed", "3", "sample", "--benchmark", "coupled5d", "--n", "40", "--out", path(&design)]);
    ok(&["--seed", "3", "eval", "--benchmark", "coupled5d", "--input", path(&design), "--out", path(&data)]);
    data
}

#[test]
fn sample_is_reproducible_and_seed_dependent() {
    let a = ok(&["--seed", "7", "sample", "--benchmark", "coupled5d", "--n", "12"]);
    let b = ok(&["--seed", "7", "sample", "--benchmark", "coupled5d", "--n", "12"]);
    let c = ok(&["--seed", "8", "sample", "--benchmark", "coupled5d", "--n", "12"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().next().unwrap(), "x1,x2,x3,x4,x5");
    assert_eq!(a.lines().count(), 13);
}

#[test]
fn missing_seed_is_an_argument_error() {
    let out = prognosis(&["sample", "--benchmark", "coupled5d", "--n", "12"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn malformed_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "x1,y\n0.1,1\n0.2,\n0.3,2\n0.5,3\n").unwrap();
    let out = prognosis(&["--seed", "1", "assess", "--data", path(&data), "--output", "y", "--model", "polynomial-linear"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn train_then_assess_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = noisy_design(dir.path());
    let model = dir.path().join("model.json");
    ok(&["train", "--data", path(&data), "--output", "y", "--model", "polynomial-quadratic", "--out", path(&model)]);
    assert!(std::fs::read_to_string(&model).unwrap().contains("polynomial"));

    let residuals = dir.path().join("res.csv");
    let report = ok(&[
        "--seed", "3", "assess", "--data", path(&data), "--output", "y", "--model", "polynomial-quadratic", "--residuals", path(&residuals),
    ]);
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["schema"], "prognosis/1");
    let quality = &json["report"]["quality"];
    let cop = quality["cop"].as_f64().unwrap();
    assert!(cop < quality["cod1"].as_f64().unwrap());
    assert_eq!(json["report"]["cop_clamped"].as_f64().unwrap(), cop.clamp(0.0, 1.0));
    assert_eq!(std::fs::read_to_string(&residuals).unwrap().lines().count(), 41);
}

#[test]
fn mop_table_and_thread_count_independence() {
    let dir = tempfile::tempdir().unwrap();
    let data = noisy_design(dir.path());
    let table = |threads: &str| {
        let t = dir.path().join(format!("table{threads}.csv"));
        ok(&[
            "--seed", "5", "--threads", threads, "mop", "--data", path(&data), "--outputs", "y", "--families", "polynomial-linear,polynomial-quadratic",
            "--reps", "2000", "--table", path(&t), "--report", path(&dir.path().join("mop.json")),
        ]);
        std::fs::read_to_string(t).unwrap()
    };
    let one = table("1");
    assert_eq!(one, table("2"));
    assert!(one.starts_with("name,n,model,k_inputs,cop,ci_lo,ci_hi,cod_test\ny,40,"));
}

#[test]
fn unknown_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = noisy_design(dir.path());
    let out = prognosis(&["train", "--data", path(&data), "--output", "y", "--model", "neural-net"]);
    assert_eq!(out.status.code(), Some(2));
}
