//! End-to-end tests of the `operonet` binary: exit codes, file outputs,
//! and reproducibility of the command-line surface.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_operonet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn generate_is_deterministic_and_reports_shape() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.odnb");
    let b = dir.path().join("b.odnb");
    for out in [&a, &b] {
        let res = run(&[
            "generate",
            "identity",
            "--n",
            "20",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
        assert!(stdout(&res).contains("m=50"));
        assert!(stdout(&res).contains("q=50"));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same invocation must produce identical bytes"
    );
}

#[test]
fn invalid_problem_is_usage_error() {
    let res = run(&["generate", "heat", "--n", "1", "--seed", "0", "--out", "x.odnb"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("unknown problem"));
}

fn write_train_config(dir: &Path, epochs: usize) -> std::path::PathBuf {
    let train = dir.join("train.odnb");
    let test = dir.join("test.odnb");
    for (path, n, seed) in [(&train, 12, 1), (&test, 4, 2)] {
        let res = run(&[
            "generate",
            "identity",
            "--n",
            &n.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
    }
    let cfg = dir.join("train.cfg");
    std::fs::write(
        &cfg,
        format!(
            "[model]\n\
             kind = deeponet\n\
             sensors = 50\n\
             branch = 50,16,8\n\
             trunk = 1,16,8\n\
             [data]\n\
             train = {}\n\
             test = {}\n\
             [training]\n\
             lr0 = 1e-3\n\
             decay_rate = 0.0005\n\
             batch_size = 200\n\
             epochs = {epochs}\n\
             seed = 0\n\
             [output]\n\
             checkpoint = {}\n\
             report = {}\n",
            train.display(),
            test.display(),
            dir.join("model.opnw").display(),
            dir.join("report.csv").display(),
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn train_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_train_config(dir.path(), 3);
    let res = run(&["train", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("test rel_l2"));

    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.starts_with("epoch,train_mse,test_rel_l2,lr,wall_seconds\n"));
    assert_eq!(report.lines().count(), 1 + 4, "epoch 0 plus 3 epochs");
    // config echoed for provenance
    assert!(dir.path().join("report.csv.config").exists());

    let res = run(&[
        "evaluate",
        cfg.to_str().unwrap(),
        "--checkpoint",
        dir.path().join("model.opnw").to_str().unwrap(),
        "--dataset",
        dir.path().join("test.odnb").to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("test rel_l2"));
}

#[test]
fn seed_override_changes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_train_config(dir.path(), 2);
    let report_path = dir.path().join("report.csv");
    assert!(run(&["train", cfg.to_str().unwrap()]).status.success());
    let base = std::fs::read_to_string(&report_path).unwrap();
    assert!(run(&["train", cfg.to_str().unwrap()]).status.success());
    let repeat = std::fs::read_to_string(&report_path).unwrap();
    assert!(run(&["train", cfg.to_str().unwrap(), "--seed", "9"])
        .status
        .success());
    let reseeded = std::fs::read_to_string(&report_path).unwrap();
    // identical up to wall-clock column
    let strip = |csv: &str| {
        csv.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&base), strip(&repeat));
    assert_ne!(strip(&base), strip(&reseeded));
}

#[test]
fn missing_dataset_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_train_config(dir.path(), 1);
    std::fs::remove_file(dir.path().join("train.odnb")).unwrap();
    let res = run(&["train", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("not found"));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_train_config(dir.path(), 1);
    let mut text = std::fs::read_to_string(&cfg).unwrap();
    text.push_str("[training]\n");
    let cfg2 = dir.path().join("bad.cfg");
    // duplicate section is fine; an unknown key is not
    text = text.replace("[data]", "[data]\nmystery = 1\n");
    std::fs::write(&cfg2, text).unwrap();
    let res = run(&["train", cfg2.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("data.mystery"), "{}", stderr(&res));
}

#[test]
fn count_params_advection_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("adv.cfg");
    std::fs::write(
        &cfg,
        "[model]\nkind = deeponet\nsensors = 40\nbranch = 40,256,256\ntrunk = 1,256,256,256,256\n",
    )
    .unwrap();
    let res = run(&["count-params", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("exact = 274177"), "{}", stdout(&res));
    assert!(stdout(&res).contains("274.2K"));

    let res = run(&["count-params", "--table"]);
    assert!(res.status.success());
    assert!(stdout(&res).contains("shallow-small"));
    assert!(stdout(&res).contains("86701"));
}

#[test]
fn count_params_small_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    std::fs::write(
        &cfg,
        "[model]\nkind = hyper\nsensors = 50\nhyper = 50,20,20,10,681\ntarget = 1,20,20,10,1\n",
    )
    .unwrap();
    let res = run(&["count-params", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("kind = hyper"));
}

#[test]
fn bench_unknown_scenario_lists_names() {
    let res = run(&["bench", "nope"]);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr(&res);
    assert!(err.contains("same-target-identity"), "{err}");
    assert!(err.contains("same-budget-burgers"), "{err}");
}

#[test]
fn bench_shallow_water_gated_on_external_data() {
    let res = run(&["bench", "shallow-water"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("external data"), "{}", stderr(&res));
}

#[test]
fn convert_builds_valid_odnb() {
    let dir = tempfile::tempdir().unwrap();
    let write_raw = |name: &str, vals: &[f64]| {
        let path = dir.path().join(name);
        let bytes: Vec<u8> = vals.iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(&path, bytes).unwrap();
        path
    };
    // m=2 sensors in d_x=2, q=3 queries in d_y=3, n=2 functions
    let sensors = write_raw("s.f64", &[0.0, 0.0, 1.0, 1.0]);
    let queries = write_raw("q.f64", &[0.1; 9]);
    let inputs = write_raw("u.f64", &[1.0, 2.0, 3.0, 4.0]);
    let targets = write_raw("g.f64", &[0.5; 6]);
    let out = dir.path().join("ext.odnb");
    let cfg = dir.path().join("c.cfg");
    std::fs::write(
        &cfg,
        format!(
            "[convert]\nname = external\nm = 2\nd_x = 2\nd_y = 3\nn = 2\nq = 3\n\
             sensor_locations = {}\nquery_points = {}\ninputs = {}\ntargets = {}\nout = {}\n",
            sensors.display(),
            queries.display(),
            inputs.display(),
            targets.display(),
            out.display()
        ),
    )
    .unwrap();
    let res = run(&["convert", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let ds = operonet::datasets::read_dataset(&out).unwrap();
    assert_eq!((ds.n, ds.m, ds.d_x, ds.d_y, ds.q), (2, 2, 2, 3, 3));
    assert_eq!(ds.meta.name, "external");
}

#[test]
fn convert_length_mismatch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.f64");
    std::fs::write(&short, [0u8; 8]).unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(
        &cfg,
        format!(
            "[convert]\nname = x\nm = 2\nd_x = 1\nd_y = 1\nn = 1\nq = 1\n\
             sensor_locations = {p}\nquery_points = {p}\ninputs = {p}\ntargets = {p}\nout = o.odnb\n",
            p = short.display()
        ),
    )
    .unwrap();
    let res = run(&["convert", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("expected 2 f64 values"));
}
