use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn run(dir: &Path, args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_polarity-prop"))
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args, "");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fixtures(dir: &Path) {
    ok(
        dir,
        &[
            "--seed",
            "7",
            "synth",
            "--out-dir",
            "fx",
            "--pairs",
            "2000",
            "--words",
            "80",
        ],
    );
    ok(
        dir,
        &[
            "extract",
            "--corpus",
            "fx/corpus.txt",
            "--connectives",
            "fx/connectives.tsv",
            "--out",
            "pairs.jsonl",
        ],
    );
    ok(
        dir,
        &[
            "--seed",
            "7",
            "build-dataset",
            "--pairs",
            "pairs.jsonl",
            "--lexicon",
            "fx/lexicon.tsv",
            "--out",
            "bundle.jsonl",
        ],
    );
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn pipeline_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        fixtures(d);
        ok(
            d,
            &[
                "--seed",
                "7",
                "train",
                "--bundle",
                "bundle.jsonl",
                "--dev",
                "fx/dev.jsonl",
                "--epochs",
                "2",
                "--out",
                "m.ckpt",
            ],
        );
    }
    for name in [
        "fx/corpus.txt",
        "fx/test.jsonl",
        "pairs.jsonl",
        "bundle.jsonl",
        "m.ckpt",
    ] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn extract_reports_counts_per_relation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("table.tsv"),
        "# rules\nbecause\tcause\tlatter_first\nbut\tconcession\tformer_first\n",
    )
    .unwrap();
    std::fs::write(
        d.join("corpus.txt"),
        "I got fired because I made a mistake\nI was tired but I finished\nno connective here\n",
    )
    .unwrap();
    let stdout = ok(
        d,
        &[
            "extract",
            "--corpus",
            "corpus.txt",
            "--connectives",
            "table.tsv",
            "--out",
            "p.jsonl",
        ],
    );
    assert!(stdout.contains("cause\t1"));
    assert!(stdout.contains("concession\t1"));
    let pairs = std::fs::read_to_string(d.join("p.jsonl")).unwrap();
    assert_eq!(pairs.lines().count(), 2);
    assert!(pairs
        .lines()
        .next()
        .unwrap()
        .contains(r#""former_tokens":["I","made","a","mistake"]"#));
}

#[test]
fn extract_last_clause_mode_writes_labeled_events() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("table.tsv"), "because\tcause\tlatter_first\n").unwrap();
    std::fs::write(
        d.join("labeled.tsv"),
        "+1\tI rested , the work is easy\n-1\tthere is no parking lot\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "extract",
            "--last-clause",
            "--corpus",
            "labeled.tsv",
            "--connectives",
            "table.tsv",
            "--out",
            "ev.jsonl",
        ],
    );
    let text = std::fs::read_to_string(d.join("ev.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(
        lines[0].contains(r#"["the","work","is","easy"]"#) && lines[0].contains(r#""score":1"#)
    );
    assert!(lines[1].contains(r#""score":-1"#));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixtures(d);
    std::fs::write(
        d.join("train.toml"),
        "epochs = 4\nlearning_rate = 0.05\nobjective = \"al\"\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "train",
            "--config",
            "train.toml",
            "--epochs",
            "2",
            "--bundle",
            "bundle.jsonl",
            "--dev",
            "fx/dev.jsonl",
            "--out",
            "m.ckpt",
            "--log",
            "log.jsonl",
        ],
    );
    let log = std::fs::read_to_string(d.join("log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
    // Objective from the file: AL only.
    assert!(log.lines().all(|l| l.contains(r#""l_ca":0.0"#)));

    std::fs::write(d.join("bad.toml"), "epochs = 4\nwarmup = 3\n").unwrap();
    let out = run(
        d,
        &[
            "train",
            "--config",
            "bad.toml",
            "--bundle",
            "bundle.jsonl",
            "--dev",
            "fx/dev.jsonl",
            "--out",
            "x.ckpt",
        ],
        "",
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warmup"));
    assert!(!d.join("x.ckpt").exists());
}

#[test]
fn missing_supervised_data_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixtures(d);
    let out = run(
        d,
        &[
            "train",
            "--objective",
            "acp",
            "--bundle",
            "bundle.jsonl",
            "--dev",
            "fx/dev.jsonl",
            "--out",
            "m.ckpt",
        ],
        "",
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("supervised"));
    assert!(!d.join("m.ckpt").exists());
}

#[test]
fn subset_keeps_requested_supervised_size() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixtures(d);
    let stdout = ok(
        d,
        &[
            "build-dataset",
            "--pairs",
            "pairs.jsonl",
            "--lexicon",
            "fx/lexicon.tsv",
            "--supervised",
            "fx/dev.jsonl",
            "--subset",
            "40",
            "--out",
            "b2.jsonl",
        ],
    );
    assert!(
        stdout.contains("supervised") && stdout.contains("40"),
        "{stdout}"
    );
    let bundle = std::fs::read_to_string(d.join("b2.jsonl")).unwrap();
    assert_eq!(
        bundle
            .lines()
            .filter(|l| l.contains(r#""type":"sup""#))
            .count(),
        40
    );
}

#[test]
fn baselines_run_without_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixtures(d);
    let a = ok(
        d,
        &[
            "--seed",
            "3",
            "evaluate",
            "--test",
            "fx/test.jsonl",
            "--baseline",
            "random",
        ],
    );
    let b = ok(
        d,
        &[
            "--seed",
            "3",
            "evaluate",
            "--test",
            "fx/test.jsonl",
            "--baseline",
            "random",
        ],
    );
    assert_eq!(a, b);
    let out = run(d, &["evaluate", "--test", "fx/test.jsonl"], "");
    assert!(!out.status.success());
}

#[test]
fn score_handles_blank_lines_and_bad_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixtures(d);
    ok(
        d,
        &[
            "train",
            "--bundle",
            "bundle.jsonl",
            "--dev",
            "fx/dev.jsonl",
            "--epochs",
            "1",
            "--out",
            "m.ckpt",
        ],
    );
    let out = run(d, &["score", "--checkpoint", "m.ckpt"], "\nc01 w001\n");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with('\t'));
    assert!(lines[1].ends_with("\tc01 w001"));

    std::fs::write(d.join("junk.ckpt"), b"not a checkpoint").unwrap();
    let out = run(d, &["score", "--checkpoint", "junk.ckpt"], "x\n");
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}
