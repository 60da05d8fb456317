use std::path::PathBuf;
use std::process::{Command, Output};

fn program(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .join(name)
}

fn pulltab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulltab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> Vec<String> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(str::to_owned)
        .collect()
}

fn eval(file: &str, extra: &[&str]) -> Output {
    let path = program(file);
    let mut args = vec!["eval", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    pulltab(&args)
}

#[test]
fn running_example_under_every_strategy() {
    for s in ["backtrack", "copy", "bubble", "pulltab"] {
        let o = eval("flip.fl", &["--strategy", s, "--all"]);
        assert_eq!(o.status.code(), Some(0), "{s}");
        assert_eq!(stdout(&o), ["(,)(0,0)", "(,)(1,1)"], "{s}");
    }
}

#[test]
fn unsound_pull_tabbing_yields_four_pairs() {
    let o = eval("flip.fl", &["--strategy", "pulltab", "--unsound", "--all"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), ["(,)(0,0)", "(,)(0,1)", "(,)(1,0)", "(,)(1,1)"]);
}

#[test]
fn unsound_requires_pulltab() {
    let o = eval("flip.fl", &["--strategy", "copy", "--unsound"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_lists_violations() {
    let o = pulltab(&["check", program("bad.fl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
    let o = pulltab(&["check", program("flip.fl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exhaustion_exit_codes() {
    let o = eval(
        "loop.fl",
        &["--strategy", "backtrack", "--all", "--max-steps", "50"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = eval(
        "loop.fl",
        &["--strategy", "pulltab", "--first", "1", "--max-steps", "50"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), ["0"]);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(
        eval("flip.fl", &["--strategy", "sideways"]).status.code(),
        Some(64)
    );
    assert_eq!(eval("flip.fl", &[]).status.code(), Some(64));
    assert_eq!(
        eval("flip.fl", &["--strategy", "copy", "--all", "--first", "2"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(pulltab(&["frobnicate"]).status.code(), Some(64));
}

#[test]
fn program_errors_exit_1() {
    assert_eq!(
        eval("missing.fl", &["--strategy", "copy"]).status.code(),
        Some(1)
    );
    let o = eval("flip.fl", &["--strategy", "copy", "-e", "flip(y)"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("nomain.fl");
    std::fs::write(&f, "data B = T\nid x = x\n").unwrap();
    let o = pulltab(&["eval", f.to_str().unwrap(), "--strategy", "copy"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn expression_flag_and_represented_set() {
    let o = eval(
        "flip.fl",
        &[
            "--strategy",
            "pulltab",
            "-e",
            "(,)(x:?(0,1), flip(x))",
            "--represented-set",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        [
            "(,)(0,1)",
            "(,)(1,0)",
            "-- represented set",
            "(,)(n1:0, flip(n1))",
            "(,)(n1:1, flip(n1))"
        ]
    );
}

#[test]
fn stats_trace_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let o = eval(
        "div.fl",
        &[
            "--strategy",
            "pulltab",
            "--stats",
            "--trace",
            "--dot",
            dot.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out[0], "S(S(S(S(S(S(S(Z)))))))");
    assert!(out.contains(&"pull_tabs=1".to_owned()), "{out:?}");
    assert!(out.contains(&"nodes_cloned=1".to_owned()), "{out:?}");
    assert!(out.iter().skip(1).all(|l| l.contains('=')));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.lines().any(|l| l.starts_with("pulltab @")), "{err}");
    assert!(
        err.lines()
            .any(|l| l.starts_with("rewrite @") && l.contains("add.2")),
        "{err}"
    );
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph"), "{dot}");
}

#[test]
fn output_is_deterministic() {
    let args = ["--strategy", "bubble", "--all", "--stats", "--trace"];
    let a = eval("flip.fl", &args);
    let b = eval("flip.fl", &args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let v1 = pulltab(&[
        "verify", "--lemma", "theorem", "--cases", "5", "--seed", "9",
    ]);
    let v2 = pulltab(&[
        "verify", "--lemma", "theorem", "--cases", "5", "--seed", "9",
    ]);
    assert_eq!(v1.status.code(), Some(0));
    assert_eq!(v1.stdout, v2.stdout);
}

#[test]
fn verify_runs_each_suite() {
    for lemma in [
        "parallel-moves",
        "pulltab",
        "nonchoice",
        "theorem",
        "corollary",
    ] {
        let o = pulltab(&["verify", "--lemma", lemma, "--cases", "5", "--seed", "1"]);
        assert_eq!(o.status.code(), Some(0), "{lemma}");
        let out = stdout(&o);
        assert_eq!(out.len(), 1);
        assert!(
            out[0].contains("cases=5") && out[0].contains("failed=0"),
            "{out:?}"
        );
    }
}
