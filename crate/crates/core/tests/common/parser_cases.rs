//! FASTA/FASTQ conformance tables: inputs with their expected parse, and
//! malformed inputs that must be rejected.

use dsa::seqio::{parse_fasta, parse_fastq, write_fasta, write_fastq, SeqIoError, SequenceRecord};

pub struct Outcome {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

fn outcome(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { name: name.into(), ok, detail: detail.into() }
}

fn rec(id: &str, desc: &str, residues: &str) -> SequenceRecord {
    SequenceRecord::new(id, residues).with_description(desc)
}

fn recq(id: &str, desc: &str, residues: &str, q: &str) -> SequenceRecord {
    rec(id, desc, residues).with_quality(q.as_bytes().to_vec())
}

fn key(r: &SequenceRecord) -> (String, String, Vec<u8>, Option<Vec<u8>>) {
    (r.id.clone(), r.description.clone(), r.residues.clone(), r.quality.clone())
}

fn same(a: &[SequenceRecord], b: &[SequenceRecord]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| key(x) == key(y))
}

fn long(n: usize) -> String {
    (0..n).map(|i| b"ACDEFGHIKLMNPQRSTVWY"[i * 7 % 20] as char).collect()
}

/// Record sets that must survive write then parse unchanged.
fn fasta_round_trip_sets() -> Vec<(&'static str, Vec<SequenceRecord>)> {
    vec![
        ("single residue", vec![rec("a", "", "A")]),
        ("one line", vec![rec("s1", "desc", "ACGT")]),
        ("59 residues", vec![rec("x", "", &long(59))]),
        ("60 residues", vec![rec("x", "", &long(60))]),
        ("61 residues", vec![rec("x", "", &long(61))]),
        ("120 residues", vec![rec("x", "", &long(120))]),
        ("121 residues", vec![rec("x", "", &long(121))]),
        ("5000 residues", vec![rec("big", "long one", &long(5000))]),
        ("multi-word description", vec![rec("id", "one two  three", "MKV")]),
        ("tab in description", vec![rec("id", "a\tb", "MKV")]),
        ("stop symbol", vec![rec("p", "", "MKV*")]),
        ("two records", vec![rec("a", "", "AC"), rec("b", "x", "TT")]),
        ("many records", (0..50).map(|i| rec(&format!("r{i}"), &format!("n={i}"), &long(i + 1))).collect()),
        ("pipe id", vec![rec("sp|P12345|ABC_HUMAN", "Protein", "MKT")]),
        ("unicode description", vec![rec("u", "é données", "ACGT")]),
        ("all letters", vec![rec("abc", "", "ABCDEFGHIJKLMNOPQRSTUVWXYZ")]),
        ("numeric id", vec![rec("12345", "", "GG")]),
        ("description with >", vec![rec("a", "x>y", "ACGT")]),
        ("empty set", vec![]),
        ("repeated ids allowed by parser", vec![rec("d", "", "A"), rec("d", "", "C")]),
    ]
}

/// Text with the records it must parse to.
fn fasta_parse_cases() -> Vec<(&'static str, &'static [u8], Vec<SequenceRecord>)> {
    vec![
        ("minimal", b">s1 desc\nACGT\n", vec![rec("s1", "desc", "ACGT")]),
        ("concatenated lines", b">a\nAC\nGT\n>b\nTT\n", vec![rec("a", "", "ACGT"), rec("b", "", "TT")]),
        ("crlf", b">a x\r\nAC\r\nGT\r\n", vec![rec("a", "x", "ACGT")]),
        ("lowercase uppercased", b">a\nacgt\n", vec![rec("a", "", "ACGT")]),
        ("blank lines between", b"\n>a\nAC\n\n\n>b\nG\n\n", vec![rec("a", "", "AC"), rec("b", "", "G")]),
        ("no final newline", b">a\nACG", vec![rec("a", "", "ACG")]),
        ("trailing spaces", b">a  \nAC  \n", vec![rec("a", "", "AC")]),
        ("empty input", b"", vec![]),
    ]
}

fn fasta_malformed() -> Vec<(&'static str, &'static [u8])> {
    vec![
        ("no header", b"ACGT\n"),
        ("empty id", b">\nACGT\n"),
        ("whitespace-only id", b">   \nACGT\n"),
        ("empty body", b">a\n"),
        ("empty body before next", b">a\n>b\nAC\n"),
        ("empty body at end", b">a\nAC\n>b\n"),
        ("empty body blank line", b">a\nAC\n>b\n\n"),
        ("crlf empty body", b">a\r\n\r\n"),
        ("internal space", b">a\nAC GT\n"),
        ("digit", b">a\nAC1T\n"),
        ("gap dash", b">a\nAC-T\n"),
        ("dot", b">a\nAC.T\n"),
        ("junk before header", b"x>a\nAC\n"),
        ("later empty id", b">a\nAC\n\n>\nGT\n"),
        ("invalid utf-8 header", b">\xff\nAC\n"),
        ("semicolon comment", b";c\n>a\nAC\n"),
        ("data after blank lines", b"\n\nACGT\n>a\nAC\n"),
        ("nul byte", b">a\nAC\x00\n"),
        ("non-ascii residue", b">a\n\xc3\x80C\n"),
        ("bad residue in second record", b">a\nAC\n>b\nG@T\n"),
        ("description only", b">a b\n\n\n"),
        ("fastq given to fasta", b"@r\nAC\n+\nII\n"),
    ]
}

fn fastq_round_trip_sets() -> Vec<(&'static str, Vec<SequenceRecord>)> {
    let q = |n: usize| -> String { (0..n).map(|i| (b'!' + (i % 94) as u8) as char).collect() };
    vec![
        ("minimal", vec![recq("r1", "", "ACGT", "IIII")]),
        ("single residue", vec![recq("r", "", "A", "#")]),
        ("description", vec![recq("r1", "lane 3", "ACGT", "ABCD")]),
        ("full quality range", vec![recq("r", "", &long(94), &q(94))]),
        ("long read", vec![recq("r", "", &long(3000), &q(3000))]),
        ("quality starts with @", vec![recq("r", "", "ACG", "@@@")]),
        ("quality starts with +", vec![recq("r", "", "ACG", "+II")]),
        ("two records", vec![recq("a", "", "AC", "II"), recq("b", "", "GGT", "!!!")]),
        ("many records", (0..40).map(|i| recq(&format!("r{i}"), "", &long(i + 1), &q(i + 1))).collect()),
        ("tilde quality", vec![recq("r", "", "NN", "~~")]),
        ("pipe id", vec![recq("a|b|c", "d e", "ACGT", "IIII")]),
        ("unicode description", vec![recq("u", "é", "ACGT", "IIII")]),
        ("stop symbol", vec![recq("p", "", "MK*", "III")]),
        ("empty set", vec![]),
        ("60 residues", vec![recq("x", "", &long(60), &q(60))]),
        ("61 residues", vec![recq("x", "", &long(61), &q(61))]),
        ("numeric id", vec![recq("42", "", "A", "I")]),
        ("all letters", vec![recq("abc", "", "ABCDEFGHIJKLMNOPQRSTUVWXYZ", &q(26))]),
        ("repeated ids", vec![recq("d", "", "A", "I"), recq("d", "", "C", "I")]),
        ("tab in description", vec![recq("id", "a\tb", "MKV", "III")]),
    ]
}

fn fastq_parse_cases() -> Vec<(&'static str, &'static [u8], Vec<SequenceRecord>)> {
    vec![
        ("minimal", b"@r1\nACGT\n+\nIIII\n", vec![recq("r1", "", "ACGT", "IIII")]),
        ("plus repeats header", b"@r1 x\nAC\n+r1 x\nII\n", vec![recq("r1", "x", "AC", "II")]),
        ("two concatenated", b"@a\nAC\n+\nII\n@b\nG\n+\n#\n", vec![recq("a", "", "AC", "II"), recq("b", "", "G", "#")]),
        ("crlf", b"@r\r\nAC\r\n+\r\nII\r\n", vec![recq("r", "", "AC", "II")]),
        ("lowercase uppercased", b"@r\nacg\n+\nIII\n", vec![recq("r", "", "ACG", "III")]),
        (
            "blank between records",
            b"@a\nA\n+\nI\n\n\n@b\nC\n+\nI\n",
            vec![recq("a", "", "A", "I"), recq("b", "", "C", "I")],
        ),
        ("no final newline", b"@r\nAC\n+\nII", vec![recq("r", "", "AC", "II")]),
        ("empty input", b"", vec![]),
    ]
}

fn fastq_malformed() -> Vec<(&'static str, &'static [u8])> {
    vec![
        ("missing @", b"r1\nACGT\n+\nIIII\n"),
        ("missing + line", b"@r1\nACGT\nIIII\n"),
        ("quality shorter", b"@r1\nACGT\n+\nIII\n"),
        ("quality longer", b"@r1\nACGT\n+\nIIIII\n"),
        ("truncated before quality", b"@r1\nACGT\n+\n"),
        ("truncated before plus", b"@r1\nACGT\n"),
        ("header only", b"@r1\n"),
        ("empty id", b"@\nACGT\n+\nIIII\n"),
        ("plus header mismatch", b"@r1\nACGT\n+r2\nIIII\n"),
        ("blank before sequence", b"@r1\n\nACGT\n+\nIIII\n"),
        ("blank before plus", b"@r1\nACGT\n\n+\nIIII\n"),
        ("blank before quality", b"@r1\nACGT\n+\n\nIIII\n"),
        ("invalid residue", b"@r1\nAC1T\n+\nIIII\n"),
        ("space in quality", b"@r1\nACGT\n+\nII I\n"),
        ("del in quality", b"@r1\nACGT\n+\nIII\x7f\n"),
        ("wrong separator", b"@r1\nACGT\n-\nIIII\n"),
        ("second record mismatch", b"@r1\nAC\n+\nII\n@r2\nAC\n+\nI\n"),
        ("second record truncated", b"@r1\nAC\n+\nII\n@r2\nAC\n"),
        ("fasta given to fastq", b">r1\nACGT\n"),
        ("invalid utf-8 header", b"@\xfe\nAC\n+\nII\n"),
        ("extra line", b"@r1\nACGT\n+\nIIII\nextra\n"),
        ("space in sequence", b"@r1\nAC GT\n+\nIIIII\n"),
        ("multi-line sequence", b"@r1\nAC\nGT\n+\nIIII\n"),
    ]
}

fn malformed_check(name: &str, result: Result<Vec<SequenceRecord>, SeqIoError>) -> Outcome {
    match result {
        Err(SeqIoError::MalformedInput { .. }) => outcome(name, true, ""),
        other => outcome(name, false, format!("expected MalformedInput, got {other:?}")),
    }
}

pub fn fasta_suite() -> Vec<Outcome> {
    let mut out = Vec::new();
    for (name, records) in fasta_round_trip_sets() {
        let mut buf = Vec::new();
        write_fasta(&mut buf, &records).unwrap();
        let ok = parse_fasta(&buf).map(|p| same(&p, &records));
        out.push(outcome(format!("fasta round-trip: {name}"), matches!(ok, Ok(true)), format!("{ok:?}")));
    }
    for (name, text, want) in fasta_parse_cases() {
        let got = parse_fasta(text);
        let ok = got.as_ref().is_ok_and(|g| same(g, &want));
        out.push(outcome(format!("fasta parse: {name}"), ok, format!("{got:?}")));
    }
    for (name, text) in fasta_malformed() {
        out.push(malformed_check(&format!("fasta malformed: {name}"), parse_fasta(text)));
    }
    out
}

pub fn fastq_suite() -> Vec<Outcome> {
    let mut out = Vec::new();
    for (name, records) in fastq_round_trip_sets() {
        let mut buf = Vec::new();
        write_fastq(&mut buf, &records).unwrap();
        let ok = parse_fastq(&buf).map(|p| same(&p, &records));
        out.push(outcome(format!("fastq round-trip: {name}"), matches!(ok, Ok(true)), format!("{ok:?}")));
    }
    for (name, text, want) in fastq_parse_cases() {
        let got = parse_fastq(text);
        let ok = got.as_ref().is_ok_and(|g| same(g, &want));
        out.push(outcome(format!("fastq parse: {name}"), ok, format!("{got:?}")));
    }
    for (name, text) in fastq_malformed() {
        out.push(malformed_check(&format!("fastq malformed: {name}"), parse_fastq(text)));
    }
    out
}

/// Counts of (round-trip + parse, malformed) cases per format.
pub fn case_counts() -> [(usize, usize); 2] {
    [
        (fasta_round_trip_sets().len() + fasta_parse_cases().len(), fasta_malformed().len()),
        (fastq_round_trip_sets().len() + fastq_parse_cases().len(), fastq_malformed().len()),
    ]
}
