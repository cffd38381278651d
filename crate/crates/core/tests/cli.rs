use std::path::Path;
use std::process::{Command, Output};

const EXE: &str = env!("CARGO_BIN_EXE_dsa");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(EXE).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str], code: i32, error_code: &str) {
    let out = run(dir, args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with(&format!("error: code={error_code} message=")), "{stderr}");
}

fn gen(dir: &Path, out: &str, seed: &str) {
    ok(dir, &["gen", "--out-dir", out, "--seed", seed, "--target-residues", "5000", "--query-lengths", "8,40,90"]);
}

#[test]
fn gen_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "a", "9");
    gen(d.path(), "b", "9");
    gen(d.path(), "c", "10");
    for f in ["reference.fasta", "queries.fasta"] {
        let a = std::fs::read(d.path().join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(d.path().join("b").join(f)).unwrap());
        assert_ne!(a, std::fs::read(d.path().join("c").join(f)).unwrap());
    }
}

#[test]
fn align_reference_and_manifest_agree() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "g", "3");
    ok(d.path(), &["partition", "--input", "g/reference.fasta", "--out-dir", "parts", "--target-residues", "700"]);
    let direct =
        ok(d.path(), &["align", "--queries", "g/queries.fasta", "--reference", "g/reference.fasta", "--k", "4"]);
    let sharded =
        ok(d.path(), &["align", "--queries", "g/queries.fasta", "--manifest", "parts/manifest.txt", "--k", "4"]);
    assert_eq!(direct, sharded);
    let lines: Vec<&str> = direct.lines().collect();
    assert_eq!(lines.len(), 12);
    for (i, line) in lines.iter().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 9, "{line}");
        assert_eq!(cols[1], (i % 4 + 1).to_string());
    }
    let scalar = ok(
        d.path(),
        &[
            "align",
            "--queries",
            "g/queries.fasta",
            "--reference",
            "g/reference.fasta",
            "--k",
            "4",
            "--mode",
            "local-scalar",
        ],
    );
    assert_eq!(scalar, direct);
}

#[test]
fn global_and_semiglobal_modes() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("q.fa"), ">q\nACGTACGT\n").unwrap();
    std::fs::write(d.path().join("r.fa"), ">r\nTTACGTACGTTT\n").unwrap();
    let global = ok(d.path(), &["align", "--queries", "q.fa", "--reference", "r.fa", "--mode", "global"]);
    let semi = ok(d.path(), &["align", "--queries", "q.fa", "--reference", "r.fa", "--mode", "semiglobal"]);
    assert!(semi.contains("\t8M"), "{semi}");
    let score = |s: &str| s.split('\t').nth(3).unwrap().parse::<i32>().unwrap();
    assert!(score(&semi) > score(&global));
}

#[test]
fn convert_roundtrip() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("in.fa"), ">a desc\nACGT\nAC\n>b\nGG\n").unwrap();
    ok(d.path(), &["convert", "--input", "in.fa", "--output", "out.fq", "--to", "fastq"]);
    assert_eq!(
        std::fs::read_to_string(d.path().join("out.fq")).unwrap(),
        "@a desc\nACGTAC\n+\nIIIIII\n@b\nGG\n+\nII\n"
    );
    ok(d.path(), &["convert", "--input", "out.fq", "--output", "back.fa", "--to", "fasta"]);
    let back = std::fs::read_to_string(d.path().join("back.fa")).unwrap();
    assert!(back.starts_with(">a desc\nACGTAC\n"), "{back}");
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "g", "1");
    std::fs::write(d.path().join("bad.fa"), ">a\nAC!G\n").unwrap();
    std::fs::write(d.path().join("bad.fq"), "@a\nACGT\n+\nII\n").unwrap();
    let r = "g/reference.fasta";
    fails(d.path(), &["align", "--bogus"], 1, "Usage");
    fails(d.path(), &["align", "--queries", "g/queries.fasta"], 1, "Usage");
    fails(d.path(), &["align", "--queries", "g/queries.fasta", "--reference", r, "--lanes", "5"], 1, "InvalidConfig");
    fails(d.path(), &["align", "--queries", "g/queries.fasta", "--reference", r, "--k", "0"], 1, "InvalidK");
    fails(
        d.path(),
        &["align", "--queries", "g/queries.fasta", "--reference", r, "--mode", "blast"],
        1,
        "UnknownAlgorithm",
    );
    fails(d.path(), &["align", "--queries", "missing.fa", "--reference", r], 3, "IoFailure");
    fails(d.path(), &["align", "--queries", "bad.fa", "--reference", r], 2, "MalformedInput");
    fails(d.path(), &["convert", "--input", "bad.fq", "--output", "x.fa", "--to", "fasta"], 2, "MalformedInput");
    fails(d.path(), &["submit", "--coordinator", "127.0.0.1:1", "--queries", "g/queries.fasta"], 3, "IoError");
    assert_eq!(run(d.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(run(d.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn bench_emits_json_rows() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "g", "5");
    ok(d.path(), &["partition", "--input", "g/reference.fasta", "--out-dir", "parts", "--target-residues", "1000"]);
    let out = ok(
        d.path(),
        &[
            "bench",
            "--manifest",
            "parts/manifest.txt",
            "--queries",
            "g/queries.fasta",
            "--workers",
            "1,2",
            "--repetitions",
            "1",
        ],
    );
    let rows: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!rows.is_empty());
    for row in &rows {
        for key in ["kind", "workers", "wallMs", "throughputResiduesPerSec", "resultsDigest"] {
            assert!(row.get(key).is_some(), "{key} missing in {row}");
        }
    }
}
