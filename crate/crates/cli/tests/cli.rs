use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pba(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pba")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SYS: [&str; 6] = ["--m", "1", "--d", "1", "--b", "1"];

fn with_sys<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SYS).collect()
}

#[test]
fn check_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = pba(dir.path(), &with_sys(&["check", "--n", "7"]));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("oral: solvable, rounds b+3=4"));
    let o = pba(dir.path(), &with_sys(&["check", "--n", "5"]));
    assert!(stdout(&o).contains("oral: unsolvable"));
    let o = pba(dir.path(), &with_sys(&["check", "--n", "4"]));
    assert!(stdout(&o).contains("signed: solvable, rounds b+2=3"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pba(dir.path(), &["fuzz", "--n", "7", "--bogus"]).status.code(), Some(2));
    assert_eq!(pba(dir.path(), &["nonsense"]).status.code(), Some(2));
    // BA++ outside its resilience bound.
    assert_eq!(pba(dir.path(), &with_sys(&["fuzz", "--n", "5", "--trials", "1"])).status.code(), Some(2));
    // Witness inside the solvable region is refused.
    let o = pba(dir.path(), &with_sys(&["witness", "process-bound", "--n", "7"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing"));
}

#[test]
fn witnesses_pass_and_persist() {
    let dir = tempfile::tempdir().unwrap();
    let o = pba(dir.path(), &with_sys(&["witness", "process-bound", "--n", "5", "--out", "l3.json"]));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("process-bound: PASS"));
    assert!(dir.path().join("l3.json").exists());
    let o = pba(dir.path(), &with_sys(&["witness", "signed", "--n", "3"]));
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("witness-signed.json").exists());
}

#[test]
fn fuzz_is_deterministic_and_violations_replay() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.json", "b.json"] {
        let o = pba(dir.path(), &with_sys(&["fuzz", "--n", "7", "--trials", "50", "--seed", "3", "--out", out]));
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());

    let o = pba(
        dir.path(),
        &with_sys(&["fuzz", "--n", "7", "--algorithm", "om", "--k", "2", "--trials", "300", "--out", "om.json"]),
    );
    assert_eq!(o.status.code(), Some(1));
    let fixture = fs::read_dir(dir.path().join("om-fixtures")).unwrap().next().unwrap().unwrap().path();
    let o = pba(dir.path(), &["replay", fixture.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violated"));
}

#[test]
fn esync_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = pba(dir.path(), &with_sys(&["esync", "--n", "7", "--no-faults", "--zero-delay", "--out", "e.json"]));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all decided 1: PASS"));
    let o = pba(dir.path(), &with_sys(&["esync", "--n", "8", "--primitive", "rb2", "--trials", "5", "--schedules", "5"]));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = pba(dir.path(), &["sweep", "--n", "4..7", "--m", "1", "--d", "1", "--b", "1", "--trials", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    assert!(table.lines().any(|l| l.starts_with("  6") && l.contains("solvable   solvable   clean")));
    assert!(table.lines().any(|l| l.starts_with("  5") && l.contains("unsolvable")));
}
