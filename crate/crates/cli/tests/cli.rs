use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tree-zigzag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&bin(
        dir.path(),
        &["simulate-data", "-o", "d.txt", "n=6", "theta=2", "seed=4"],
    ));
    let header = std::fs::read_to_string(dir.path().join("d.txt")).unwrap();
    assert!(header.starts_with("n=6 model=ism"));

    let table = ok(&bin(
        dir.path(),
        &["run", "data=d.txt", "t_end=50", "grid=500", "chains=2", "out=z"],
    ));
    assert!(table.contains("zigzag#0") && table.contains("zigzag#1"));
    for f in [
        "chain0.csv",
        "chain0.meta",
        "chain1.csv",
        "config.txt",
        "report.txt",
        "report.csv",
    ] {
        assert!(dir.path().join("z").join(f).exists(), "{f}");
    }
    ok(&bin(
        dir.path(),
        &[
            "run",
            "data=d.txt",
            "sampler=mh",
            "iterations=2000",
            "warmup=200",
            "grid=500",
            "out=m",
        ],
    ));
    let report = ok(&bin(
        dir.path(),
        &[
            "report",
            "--grid",
            "500",
            "--csv",
            "r.csv",
            "z/chain0.csv",
            "m/chain0.csv",
        ],
    ));
    assert!(report.contains("zigzag#0") && report.contains("mh#0"));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "model = fsm\nn = 5\ntheta = 1.5\nsites = 6\nseed = 9\nt_end = 30\n";
    std::fs::write(dir.path().join("run.cfg"), cfg).unwrap();
    ok(&bin(dir.path(), &["run", "-c", "run.cfg", "out=a"]));
    ok(&bin(dir.path(), &["run", "-c", "run.cfg", "out=b"]));
    let a = std::fs::read(dir.path().join("a/chain0.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/chain0.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(dir.path(), &["report"]).status.code(), Some(3));
    assert_eq!(bin(dir.path(), &["run", "colour=blue"]).status.code(), Some(3));
    assert_eq!(bin(dir.path(), &["run", "data=missing.txt"]).status.code(), Some(2));
}
