use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SPEC: &str = "n_options = 5\nn_perf = 2\nedge_prob = 0.5\nmechanism = \"discrete\"\nlevels = 2\nseed = 0\n";

const COLLIDER: &str = "kind: DAG\nnodes: A,B,C\nedge: A t-a C\nedge: B t-a C\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfcausal"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("spec.toml"), SPEC).unwrap();
    std::fs::write(dir.path().join("collider.txt"), COLLIDER).unwrap();
    dir
}

fn simulate(dir: &Path) {
    let o = run(
        dir,
        &["simulate", "--spec", "spec.toml", "--n", "20000", "--seed", "7", "--out", "d.csv", "--truth", "truth.txt"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn dsep_on_collider() {
    let dir = setup();
    let o = run(dir.path(), &["dsep", "--graph", "collider.txt", "--x", "A", "--y", "B"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "separated: true\n");
    let o = run(dir.path(), &["dsep", "--graph", "collider.txt", "--x", "A", "--y", "B", "--given", "C"]);
    assert_eq!(stdout(&o), "separated: false\n");
}

#[test]
fn pipeline_reports_rule2_conditional() {
    let dir = setup();
    let d = dir.path();
    simulate(d);
    let o = run(d, &["discover", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--out", "g.txt"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("influential options: "));

    // pick an option with an edge into a performance node in the learned graph
    let learned = std::fs::read_to_string(d.join("g.txt")).unwrap();
    let (opt, perf) = learned
        .lines()
        .filter_map(|l| l.strip_prefix("edge: "))
        .filter_map(|l| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            (parts[1] == "t-a" && parts[0].starts_with('o') && parts[2].starts_with('p'))
                .then(|| (parts[0].to_string(), parts[2].to_string()))
        })
        .next()
        .expect("an option -> perf edge");

    let o = run(
        d,
        &["identify", "--graph", "g.txt", "--treatment", &opt, "--outcome", &perf, "--data", "d.csv", "--meta", "d.csv.meta.toml"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("rule 2: applies"), "{out}");
    assert!(out.contains(&format!("estimand: P({perf}|{opt})")), "{out}");

    // the estimate matches the empirical conditional
    let o = run(
        d,
        &["estimate", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--outcome", &perf, "--given", &format!("{opt}=1")],
    );
    assert!(o.status.success());
    let est = stdout(&o);
    let p1 = est
        .split_whitespace()
        .find(|t| t.starts_with("1:"))
        .unwrap_or_else(|| panic!("{est}"));
    let row = out
        .lines()
        .find(|l| l.trim_start().starts_with(&format!("{opt}=1 ")))
        .unwrap_or_else(|| panic!("{out}"));
    assert!(row.split_whitespace().any(|t| t == p1), "{out}\n{est}");
}

#[test]
fn exit_codes() {
    let dir = setup();
    let d = dir.path();
    simulate(d);

    // usage: missing seed, missing input, bad alpha, unknown flag
    let o = run(d, &["simulate", "--spec", "spec.toml", "--n", "10", "--out", "x.csv", "--truth", "x.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.join("x.csv").exists());
    let o = run(d, &["dsep", "--graph", "missing.txt", "--x", "A", "--y", "B"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(d, &["discover", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--alpha", "1.5", "--out", "g.txt"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(d, &["dsep", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));

    // data: unknown node, malformed graph
    let o = run(d, &["dsep", "--graph", "collider.txt", "--x", "A", "--y", "Q"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(d.join("bad.txt"), "kind: DAG\nnodes: A,B\nedge: A t-a Z\n").unwrap();
    let o = run(d, &["dsep", "--graph", "bad.txt", "--x", "A", "--y", "B"]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.starts_with("error: ") && stderr.lines().count() == 1, "{stderr}");

    // degenerate: conditioning on a level that never occurs
    std::fs::write(d.join("c.csv"), "A,B\n0,0\n0,1\n1,1\n").unwrap();
    std::fs::write(
        d.join("c.toml"),
        "[[variable]]\nname = \"A\"\nrole = \"option\"\ndtype = \"discrete\"\nlevels = [\"0\", \"1\", \"2\"]\n\n\
         [[variable]]\nname = \"B\"\nrole = \"performance\"\ndtype = \"discrete\"\nlevels = [\"0\", \"1\"]\n",
    )
    .unwrap();
    let o = run(d, &["estimate", "--data", "c.csv", "--meta", "c.toml", "--outcome", "B", "--given", "A=2"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(d, &["estimate", "--data", "c.csv", "--meta", "c.toml", "--outcome", "B", "--given", "A=0"]);
    assert_eq!(o.status.code(), Some(0));
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.into_iter().map(|p| {
        let bytes = std::fs::read(&p).unwrap();
        (p.file_name().unwrap().into(), bytes)
    }).collect()
}

#[test]
fn inputs_are_never_mutated() {
    let dir = setup();
    let d = dir.path();
    simulate(d);
    let before = snapshot(d);
    for args in [
        vec!["discover", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--out", "d.csv"],
        vec!["discover", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--out", "g.txt", "--dot", "./d.csv.meta.toml"],
        vec!["simulate", "--spec", "spec.toml", "--n", "50", "--seed", "1", "--out", "spec.toml", "--truth", "t.txt"],
    ] {
        let o = run(d, &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    for (name, bytes) in &before {
        assert_eq!(&std::fs::read(d.join(name)).unwrap(), bytes, "{name:?} changed");
    }
    // successful runs leave their inputs alone too
    let o = run(d, &["discover", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--algo", "fci", "--out", "f.txt"]);
    assert!(o.status.success());
    let o = run(d, &["identify", "--graph", "truth.txt", "--treatment", "o1", "--outcome", "p1", "--json", "id.json"]);
    assert!(o.status.success());
    for (name, bytes) in &before {
        assert_eq!(&std::fs::read(d.join(name)).unwrap(), bytes, "{name:?} changed");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = setup();
            let d = dir.path();
            simulate(d);
            let mut out = vec![];
            for args in [
                vec!["discover", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--out", "g.txt", "--dot", "g.dot", "--json", "g.json"],
                vec!["recover", "--graph", "truth.txt", "--selection", "o1", "--x", "o2", "--y", "p1"],
                vec!["estimate", "--data", "d.csv", "--meta", "d.csv.meta.toml", "--outcome", "p1", "--treatment", "o1", "--adjust", "o2"],
            ] {
                out.push(stdout(&run(d, &args)));
            }
            (out, snapshot(d))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}
