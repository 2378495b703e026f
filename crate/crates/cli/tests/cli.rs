use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dense-mimo"));
    c.env_remove("MIMO_DENSE_THREADS");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

#[test]
fn default_output_name_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["fig2", "--trials", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert!(text.lines().nth(1).unwrap().starts_with("row,trial,seed,"));
}

#[test]
fn byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (name, threads) in [("a.csv", "1"), ("b.csv", "4")] {
        let out = run_in(
            dir.path(),
            &["qpsk-sweep", "--trials", "6", "--seed", "11", "--threads", threads, "--out", name],
        );
        assert!(out.status.success());
    }
    let out = bin()
        .current_dir(dir.path())
        .env("MIMO_DENSE_THREADS", "3")
        .args(["qpsk-sweep", "--trials", "6", "--seed", "11", "--out", "c.csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(a, std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "experiment = \"fig3\"\nl_t = 4\nl_r = 2\ngamma_tilde_db_grid = [0.0, 10.0]\ntrials = 50\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["fig3", "--config", "run.toml", "--trials", "3", "--out", "x.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
    let trial_rows = text.lines().filter(|l| l.starts_with("trial,")).count();
    assert_eq!(trial_rows, 3 * 2 * 2);
}

#[test]
fn mismatched_or_invalid_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("f2.toml"), "experiment = \"fig2\"\n").unwrap();
    let out = run_in(dir.path(), &["fig3", "--config", "f2.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig2"));

    let out = run_in(dir.path(), &["fig2", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("fig2.csv").exists());
}

#[test]
fn lemma_check_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("l.toml"), "lemma_lengths = [8, 16]\ngrid_points = 31\n").unwrap();
    let out = run_in(dir.path(), &["lemma-check", "--config", "l.toml"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("lemma_check.csv")).unwrap();
    assert!(text.lines().skip(2).all(|l| l.ends_with(",true")));
}
