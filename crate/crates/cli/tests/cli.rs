use std::fs;
use std::process::{Command, Output};

use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;
use ssync_core::harness::uniform;

const BIN: &str = env!("CARGO_BIN_EXE_ssync");

fn ssync(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn run_stay1_adversarial() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.trace");
    let o = ssync(&[
        "run",
        "--automaton",
        "stay1",
        "--scheduler",
        "adversarial",
        "--horizon",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let bounds: Vec<&str> = text.lines().filter(|l| l.starts_with("B ")).collect();
    assert_eq!(bounds.len(), 6);
    assert!(bounds.iter().all(|b| b.split(' ').nth(4) == Some("1")));
    assert!(stdout(&o).contains("explored 1\n"));
}

#[test]
fn run_east1_sync_summary() {
    let o = ssync(&[
        "run",
        "--automaton",
        "east1",
        "--scheduler",
        "sync",
        "--horizon",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("steps 4\n"));
    assert!(stdout(&o).contains("explored 5\n"));
}

#[test]
fn run_reads_automaton_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.aut");
    fs::write(
        &path,
        "states: a b\nagents: a\ndelta a * -> b N\ndelta b * -> a N\n",
    )
    .unwrap();
    let o = ssync(&[
        "run",
        "--automaton",
        path.to_str().unwrap(),
        "--scheduler",
        "rr",
        "--horizon",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("explored 4\n"));
}

#[test]
fn malformed_automaton_exits_2_with_line_and_token() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.aut");
    fs::write(
        &path,
        "states: a\nagents: a\ndelta a {zz} -> a N\ndelta a * -> a 0\n",
    )
    .unwrap();
    let o = ssync(&[
        "run",
        "--automaton",
        path.to_str().unwrap(),
        "--horizon",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("zz"), "{err}");
}

#[test]
fn missing_files_exit_3() {
    let o = ssync(&[
        "run",
        "--automaton",
        "/nonexistent/automaton",
        "--horizon",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = ssync(&[
        "analyze",
        "--trace",
        "/nonexistent/trace",
        "--automaton",
        "stay1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = ssync(&[
        "run",
        "--automaton",
        "stay1",
        "--horizon",
        "3",
        "--out",
        "/nonexistent/dir/t",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_flags_exit_2() {
    for args in [
        &["run", "--automaton", "stay1", "--horizon", "0"][..],
        &[
            "run",
            "--automaton",
            "stay1",
            "--horizon",
            "5",
            "--scheduler",
            "chaotic",
        ],
        &["corpus", "--count", "0", "--horizon", "10"],
        &[
            "corpus",
            "--count",
            "2",
            "--max-states",
            "7",
            "--horizon",
            "10",
        ],
        &[
            "corpus",
            "--count",
            "2",
            "--max-states",
            "0",
            "--horizon",
            "10",
        ],
        &["frobnicate"],
    ] {
        assert_eq!(ssync(args).status.code(), Some(2), "{args:?}");
    }
}

fn trace_of(name: &str, horizon: &str, dir: &std::path::Path) -> String {
    let out = dir.join(format!("{name}.trace"));
    let o = ssync(&[
        "run",
        "--automaton",
        name,
        "--horizon",
        horizon,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    out.to_str().unwrap().to_string()
}

#[test]
fn analyze_stay1() {
    let dir = tempfile::tempdir().unwrap();
    let tr = trace_of("stay1", "100", dir.path());
    let o = ssync(&["analyze", "--trace", &tr, "--automaton", "stay1"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = stdout(&o);
    assert!(rep.contains("  s none\n"));
    assert!(rep.contains("meeting_pairs plain 100 travel 0\n"));
    assert!(rep.contains("band 100 0.000000\n"));
    assert!(rep.contains("q_recurrence none\n"));
}

#[test]
fn analyze_east1() {
    let dir = tempfile::tempdir().unwrap();
    let tr = trace_of("east1", "1000", dir.path());
    let out = dir.path().join("report.txt");
    let o = ssync(&[
        "analyze",
        "--trace",
        &tr,
        "--automaton",
        "east1",
        "--checkpoints",
        "100,1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rep = fs::read_to_string(out).unwrap();
    assert!(rep.contains("  e (1,0) period 1\n"), "{rep}");
    assert!(rep.contains("slope 0 base (1,0)\n"), "{rep}");
    assert!(
        rep.contains("band 100 0.000000\nband 1000 0.000000\n"),
        "{rep}"
    );
}

#[test]
fn analyze_inconsistent_slope_or_base_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let tr = trace_of("east1", "50", dir.path());
    for extra in [
        &["--slope", "1"][..],
        &["--slope", "0", "--base", "2,1"],
        &["--base", "0,0"],
        &["--slope", "vertical"],
    ] {
        let mut args = vec!["analyze", "--trace", &tr, "--automaton", "east1"];
        args.extend_from_slice(extra);
        assert_eq!(ssync(&args).status.code(), Some(4), "{extra:?}");
    }
    let o = ssync(&[
        "analyze",
        "--trace",
        &tr,
        "--automaton",
        "east1",
        "--slope",
        "0",
        "--base",
        "3,0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("slope 0 base (3,0)\n"));
}

#[test]
fn malformed_traces_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "",
        "C 0 s 0 0 s 0 0 s 0 0\nA 0 7\nC 1 s 0 0 s 0 0 s 0 0\n",
        "C 0 s 0 0 s 0 0\n",
        "C 1 s 0 0 s 0 0 s 0 0\n",
        "X what\n",
        "C 0 s 0 0 s 0 0 s 0 0\nA 0 0\n",
        "C 0 s 0 0 s 0 0 s 0 0\nA 0 0\nC 1 s 0 0 s 0 0 s 0 0\nB 0 0 5 1 0 0 0 0\n",
        "C 0 s a b s 0 0 s 0 0\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.trace"));
        fs::write(&path, text).unwrap();
        let o = ssync(&[
            "analyze",
            "--trace",
            path.to_str().unwrap(),
            "--automaton",
            "stay1",
        ]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn garbage_automata_never_crash() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Xoshiro256StarStar::seed_from_u64(3);
    let alphabet = b"states: agents order delta * -> {} , q0 q1 NESW 0123\n#x";
    for i in 0..200 {
        let text: String = (0..60)
            .map(|_| alphabet[uniform(&mut rng, alphabet.len() as u64) as usize] as char)
            .collect();
        let path = dir.path().join(format!("g{i}.aut"));
        fs::write(&path, &text).unwrap();
        let code = ssync(&[
            "run",
            "--automaton",
            path.to_str().unwrap(),
            "--horizon",
            "20",
        ])
        .status
        .code();
        assert!(matches!(code, Some(0) | Some(2)), "{text:?} gave {code:?}");
    }
}

#[test]
fn corpus_writes_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for round in ["a", "b"] {
        let rd = dir.path().join(round);
        let o = ssync(&[
            "corpus",
            "--seed",
            "9",
            "--count",
            "20",
            "--max-states",
            "3",
            "--horizon",
            "2000",
            "--report-dir",
            rd.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(rd.join("entry_0019.report").exists());
        assert!(rd.join("entry_0000.aut").exists());
        summaries.push(fs::read(rd.join("summary.txt")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
    let s = String::from_utf8(summaries.remove(0)).unwrap();
    assert!(s.contains("lemma_violations 0\n"));
    assert!(s.contains("hard_violations 0\n"));
}

#[test]
fn corpus_seed_42_large_horizon() {
    let o = ssync(&[
        "corpus",
        "--seed",
        "42",
        "--count",
        "100",
        "--max-states",
        "3",
        "--horizon",
        "100000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("lemma_violations 0\n"));
}
