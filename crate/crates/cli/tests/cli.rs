use std::path::Path;
use std::process::{Command, Output};

fn rsmsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsmsim")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn load_report_flags_the_quoted_rate() {
    let o = rsmsim(&["load-report"]);
    assert!(o.status.success());
    let out = text(&o);
    assert!(out.contains("warning: quoted LSA rate 57 MB/s"), "{out}");
}

#[test]
fn scenario_round_trips_through_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rsmsim(&["scenario", "--use-case", "baseline"]);
    assert!(o.status.success());
    let file = tmp.path().join("s.json");
    std::fs::write(&file, text(&o)).unwrap();
    let out = tmp.path().join("run");
    let o = rsmsim(&[
        "run",
        "--scenario",
        file.to_str().unwrap(),
        "--use-case",
        "baseline",
        "--duration",
        "1",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["tti.csv", "cost.csv", "users.csv", "windows.csv", "meta.json"] {
        assert!(out.join("pf").join(f).exists(), "{f}");
    }
}

#[test]
fn bad_scenario_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("bad.json");
    std::fs::write(&file, "{\"not\": \"a scenario\"}").unwrap();
    let o = rsmsim(&["run", "--scenario", file.to_str().unwrap(), "--use-case", "a", "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
}

fn run_baseline(dir: &Path, seed: &str) {
    let o = rsmsim(&["run", "--use-case", "baseline", "--duration", "1", "--seed", seed, "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn compare_rejects_different_seeds() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_baseline(a.path(), "1");
    run_baseline(b.path(), "2");
    let (pa, pb) = (a.path().join("pf"), b.path().join("pf"));
    let ok = rsmsim(&["compare", "--arms", pa.to_str().unwrap(), pa.to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(text(&ok).starts_with("window,t_start_s,arm"));
    let bad = rsmsim(&["compare", "--arms", pa.to_str().unwrap(), pb.to_str().unwrap()]);
    assert!(!bad.status.success());
}
