use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fractal_weyl_cli::output::Manifest;

fn fwl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwl")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = fwl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn spectrum_has_one_row_per_kept_site() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["spectrum", "--M", "160", "--out", s(dir.path())]);
    let csv = String::from_utf8(read(dir.path(), "spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 128);
    let m = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.summary["K"], 128);
    assert_eq!(m.summary["removed"], 32);
    assert_eq!(m.outputs, vec!["spectrum.csv"]);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let root = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 4] = [
        ("schur-husimi", &["--M", "96", "--grid", "32x32", "--order", "slow", "--band", "0.9:1"]),
        ("classical-escape", &["--n", "48", "--t-max", "6"]),
        ("classical-survival", &["--samples", "4000", "--t-max", "120", "--tail", "20:120", "--lyapunov-iter", "20000", "--seed", "3"]),
        ("weyl-sweep", &["--M", "40,60,80", "--lyapunov-iter", "20000"]),
    ];
    for (cmd, extra) in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "3"] {
            let dir = root.path().join(format!("{cmd}-{threads}"));
            let mut args = vec![cmd, "--threads", threads, "--out", s(&dir)];
            args.extend_from_slice(extra);
            ok(&args);
            let m = Manifest::read(&dir.join("manifest.json")).unwrap();
            outputs.push(m.outputs.iter().map(|n| read(&dir, n)).collect::<Vec<_>>());
        }
        assert!(outputs[0] == outputs[1], "{cmd} output depends on thread count");
    }
}

#[test]
fn replay_reproduces_outputs() {
    let root = tempfile::tempdir().unwrap();
    let first = root.path().join("first");
    let again = root.path().join("again");
    ok(&["phase-portrait", "--k", "1.5", "--n-traj", "4", "--n-iter", "50", "--seed", "9", "--out", s(&first)]);
    ok(&["replay", s(&first.join("manifest.json")), "--out", s(&again)]);
    assert_eq!(read(&first, "portrait.csv"), read(&again, "portrait.csv"));
    let a = Manifest::read(&first.join("manifest.json")).unwrap();
    let b = Manifest::read(&again.join("manifest.json")).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(b.config.out, again);
    let csv = String::from_utf8(read(&first, "portrait.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 51);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"M": [80], "k": 5.0, "open": "0.3:0.5"}"#).unwrap();
    let out = dir.path().join("out");
    ok(&["spectrum", "--config", s(&cfg), "--k", "3", "--out", s(&out)]);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.config.dimensions, vec![80]);
    assert_eq!(m.config.k, 3.0);
    assert_eq!((m.config.open.lo, m.config.open.hi), (0.3, 0.5));
    assert_eq!(m.summary["K"], 64);
}

#[test]
fn bad_input_fails_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    for args in [
        vec!["spectrum", "--bogus"],
        vec!["spectrum", "--open", "0.5:0.2"],
        vec!["spectrum", "--open", "nan:0.2"],
        vec!["spectrum", "--M", "160,320"],
        vec!["schur-husimi", "--order", "fast", "--band", "0.5:0.9"],
        vec!["weyl-sweep", "--window", "0.98:0.1"],
    ] {
        let mut full = args.clone();
        full.extend(["--out", s(&out)]);
        let res = fwl(&full);
        assert!(!res.status.success(), "{args:?} should fail");
        assert!(!res.stderr.is_empty());
    }
    assert!(!out.join("manifest.json").exists());

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"kick": 2.0}"#).unwrap();
    assert!(!fwl(&["spectrum", "--config", s(&cfg), "--out", s(&out)]).status.success());
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let res = fwl(&["spectrum", "--M", "40", "--out", s(&blocker.join("sub"))]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
}
