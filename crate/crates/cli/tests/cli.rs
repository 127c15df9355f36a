use std::path::Path;
use std::process::{Command, Output};
use unilcd::harness::{read_report, Density, RunConfig, REPORT_FILE};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_unilcd"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) {
    let out = run(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok command="));
}

fn write_config(dir: &Path) {
    let mut c = RunConfig::default();
    c.collect.episodes = 3;
    c.collect.density = Density::Low;
    c.il.epochs = 3;
    c.ppo.episodes = 50;
    c.rl.eval_seeds = vec![1];
    c.rl.density = Density::Low;
    c.eval.routes = vec![2];
    c.eval.episodes_per_route = 2;
    c.eval.density = Density::Low;
    std::fs::write(dir.join("run.json"), c.to_json().unwrap()).unwrap();
}

#[test]
fn full_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(d);
    let cfg = ["--config", "run.json"];
    let with = |rest: &[&'static str]| [&cfg[..], rest].concat();
    ok(&with(&["collect", "--out", "col"]), d);
    ok(&with(&["train-il", "--dataset", "col", "--out", "il"]), d);
    ok(&with(&["train-rl", "--il", "il", "--out", "rl"]), d);
    ok(&with(&["train-rl", "--il", "il", "--no-history", "--out", "rl_nh"]), d);
    ok(&with(&["train-rl", "--il", "il", "--reward", "additive", "--out", "rl_add"]), d);
    ok(&with(&["eval", "--method", "unilcd", "--il", "il", "--router", "rl", "--out", "e1"]), d);
    ok(&with(&["eval", "--method", "unilcd-no-history", "--il", "il", "--router", "rl_nh", "--out", "e2"]), d);
    ok(&with(&["eval", "--method", "additive", "--il", "il", "--router", "rl_add", "--out", "e3"]), d);
    ok(&with(&["eval", "--method", "random:0.3", "--il", "il", "--out", "e4"]), d);
    ok(
        &with(&[
            "eval", "--method", "cloud-only", "--il", "il", "--density", "crowd", "--profile", "nominal",
            "--payload", "embedding", "--out", "e5",
        ]),
        d,
    );
    ok(&["report", "e1", "e2", "e3", "e4", "e5", "rl", "--out", "rep"], d);
    let rows = read_report(&d.join("rep").join(REPORT_FILE)).unwrap();
    let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, ["unilcd", "unilcd-no-history", "additive", "random:0.3", "cloud-only"]);
    assert_eq!(rows[4].density, "crowd");
    assert!(d.join("rep").join("curve_rl.csv").exists());

    // the seed flag changes the run, a rerun with the same seed does not
    ok(&with(&["--seed", "9", "collect", "--out", "s9a"]), d);
    ok(&with(&["--seed", "9", "collect", "--out", "s9b"]), d);
    let read = |p: &str| std::fs::read(d.join(p).join("dataset.jsonl")).unwrap();
    assert_eq!(read("s9a"), read("s9b"));
    assert_ne!(read("s9a"), read("col"));
}

fn error_line(out: &Output) -> String {
    assert!(!out.status.success());
    String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or_default().to_string()
}

#[test]
fn failures_exit_nonzero_with_an_error_line() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_config(d);

    let out = run(&["--config", "run.json", "eval", "--method", "local-only", "--il", "missing", "--out", "x"], d);
    assert!(error_line(&out).starts_with("error kind=io message="));

    std::fs::write(d.join("bad.json"), r#"{"schema_version": 1, "bogus": 3}"#).unwrap();
    let out = run(&["--config", "bad.json", "collect"], d);
    assert!(error_line(&out).contains("unknown field"), "{}", error_line(&out));
    assert!(error_line(&out).starts_with("error kind=config"));

    std::fs::write(d.join("old.json"), r#"{"schema_version": 99}"#).unwrap();
    let out = run(&["--config", "old.json", "collect"], d);
    assert!(error_line(&out).starts_with("error kind=config"), "{}", error_line(&out));

    let out = run(&["report", "--out", "r", "nothing-here"], d);
    assert!(error_line(&out).starts_with("error kind=invalid_input"));

    let out = run(&["eval", "--method", "telepathy"], d);
    assert!(!out.status.success());
}
