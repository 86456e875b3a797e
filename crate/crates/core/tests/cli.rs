mod common;

use std::path::Path;
use std::process::{Command, Output};

use roleqe::cli::IndexArtifact;
use roleqe::eval::parse_run;

use common::{bench_dir, write_file};

fn roleqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roleqe"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn bench_index(dir: &Path) -> String {
    let idx = dir.join("bench.idx");
    stdout(&roleqe(&[
        "--config",
        path(&bench_dir().join("bench.conf")),
        "index",
        "--out",
        path(&idx),
    ]));
    format!("index={}", idx.display())
}

#[test]
fn missing_corpus_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_file(
        dir.path(),
        "c.conf",
        "corpus = nowhere.trec\ncorpus_format = trec\n",
    );
    let out = roleqe(&[
        "--config",
        path(&conf),
        "index",
        "--out",
        path(&dir.path().join("x.idx")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn index_without_corpus_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = roleqe(&["index", "--out", path(&dir.path().join("x.idx"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_qrels_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = write_file(dir.path(), "r.run", "1 Q0 d1 1 0.5 t\n");
    let out = roleqe(&[
        "evaluate",
        "--qrels",
        path(&dir.path().join("none.txt")),
        "--run",
        path(&run),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_pattern_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let set = bench_index(dir.path());
    let conf = bench_dir().join("bench.conf");
    let out = roleqe(&[
        "--config",
        path(&conf),
        "--set",
        &set,
        "expand",
        "--query",
        "x",
        "--pattern",
        "IE9",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(roleqe(&["search"]).status.code(), Some(2));
    assert_eq!(roleqe(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_weights_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let set = bench_index(dir.path());
    let w = write_file(dir.path(), "w.txt", "w_coi = 2.0\n");
    let conf = bench_dir().join("bench.conf");
    let topics = bench_dir().join("topics.txt");
    let out = roleqe(&[
        "--config",
        path(&conf),
        "--set",
        &set,
        "search",
        "--topics",
        path(&topics),
        "--weights",
        path(&w),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn index_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    bench_index(dir.path());
    let idx = dir.path().join("bench.idx");
    let artifact = IndexArtifact::load(&idx).unwrap();
    assert_eq!(artifact.index.documents().len(), 200);
    let again = dir.path().join("again.idx");
    artifact.save(&again).unwrap();
    assert_eq!(std::fs::read(&idx).unwrap(), std::fs::read(&again).unwrap());

    let mut bytes = std::fs::read(&idx).unwrap();
    bytes[0] = b'X';
    assert!(IndexArtifact::from_bytes(&bytes).is_err());
}

#[test]
fn search_depth_one_gives_one_line_per_topic() {
    let dir = tempfile::tempdir().unwrap();
    let set = bench_index(dir.path());
    let conf = bench_dir().join("bench.conf");
    let topics = bench_dir().join("topics.txt");
    for system in ["roleqe", "lm", "rm"] {
        let text = stdout(&roleqe(&[
            "--config",
            path(&conf),
            "--set",
            &set,
            "search",
            "--topics",
            path(&topics),
            "-k",
            "1",
            "--system",
            system,
        ]));
        assert_eq!(text.lines().count(), 50, "{system}");
        let run = parse_run(&text, "stdout").unwrap();
        assert!(run.rankings.values().all(|r| r.len() == 1));
    }
}

#[test]
fn search_then_evaluate_reports_both_rows() {
    let dir = tempfile::tempdir().unwrap();
    let set = bench_index(dir.path());
    let conf = bench_dir().join("bench.conf");
    let topics = bench_dir().join("topics.txt");
    let qrels = bench_dir().join("qrels.txt");
    let lm = dir.path().join("lm.run");
    let ie1 = dir.path().join("ie1.run");
    let base = [
        "--config",
        path(&conf),
        "--set",
        &set,
        "search",
        "--topics",
        path(&topics),
    ];
    stdout(&roleqe(
        &[
            &base[..],
            &["--system", "lm", "--tag", "lm", "--out", path(&lm)],
        ]
        .concat(),
    ));
    stdout(&roleqe(
        &[
            &base[..],
            &["--pattern", "IE1", "--tag", "ie1", "--out", path(&ie1)],
        ]
        .concat(),
    ));
    let csv = stdout(&roleqe(&[
        "evaluate",
        "--qrels",
        path(&qrels),
        "--baseline",
        path(&lm),
        "--run",
        path(&ie1),
    ]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3, "{csv}");
    assert!(lines[1].starts_with("lm,0.500000"), "{csv}");
    assert!(lines[2].starts_with("ie1,0.973333"), "{csv}");
}

#[test]
fn expand_dump_lists_originals_first() {
    let dir = tempfile::tempdir().unwrap();
    let set = bench_index(dir.path());
    let conf = bench_dir().join("bench.conf");
    let topics = roleqe::eval::load_topics(&bench_dir().join("topics.txt")).unwrap();
    let title = &topics[0].title;
    let text = stdout(&roleqe(&[
        "--config",
        path(&conf),
        "--set",
        &set,
        "expand",
        "--query",
        title,
        "--pattern",
        "IE1",
    ]));
    let concepts: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let words: Vec<&str> = title.split_whitespace().collect();
    for (line, word) in concepts.iter().zip(&words) {
        assert!(line.starts_with(&format!("{word}\t")), "{text}");
    }
    assert!(
        concepts[words.len()..]
            .iter()
            .all(|l| l.split('\t').nth(1) == Some("EC")),
        "{text}"
    );
}

#[test]
fn tune_writes_a_loadable_weights_file() {
    let dir = tempfile::tempdir().unwrap();
    let set = bench_index(dir.path());
    let conf = bench_dir().join("bench.conf");
    let w = dir.path().join("w.txt");
    let report = dir.path().join("report.tsv");
    stdout(&roleqe(&[
        "--config",
        path(&conf),
        "--set",
        &set,
        "--set",
        "population=20",
        "--set",
        "iterations=5",
        "tune",
        "--topics",
        path(&bench_dir().join("topics.txt")),
        "--qrels",
        path(&bench_dir().join("qrels.txt")),
        "--pattern",
        "IE1",
        "--out",
        path(&w),
        "--report",
        path(&report),
    ]));
    let weights = roleqe::RoleWeights::load(&w).unwrap();
    assert_eq!(weights.weight(roleqe::linguistics::RoleType::SC), 0.0);
    let report = std::fs::read_to_string(&report).unwrap();
    assert_eq!(
        report
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("gen"))
            .count(),
        6
    );
}
