//! The striped local kernel, its configuration, and width escalation.

use dsa::align::sw_scalar;
use dsa::scoring::{GapModel, ScoringScheme, SubstitutionMatrix};
use dsa::seqio::SequenceRecord;
use dsa::striped::{align_full, KernelConfig, StripedAligner};

fn main() {
    let scheme = ScoringScheme::default_protein();
    let query = SequenceRecord::new("q", "MKTAYIAKQRQISFVKSHFSRQ");
    let target = SequenceRecord::new("t", "GGMKTAYIAKQRQLSFVKSHFSRQWW");

    let hit = align_full(&query, &target, &scheme, KernelConfig::default()).unwrap();
    println!(
        "score {} ref {}..={} query {}..={} cigar {}",
        hit.max_score, hit.ref_begin, hit.ref_end, hit.query_begin, hit.query_end, hit.cigar
    );
    assert_eq!(hit, sw_scalar(&query, &target, &scheme).unwrap());

    // One prepared query scores many references.
    let aligner = StripedAligner::new(&query.residues, &scheme, KernelConfig::new(8, 16).unwrap()).unwrap();
    for r in ["MKTAYIAK", "WWWWWW", "QISFVKSH"] {
        let o = aligner.score(r.as_bytes()).unwrap();
        println!("{r}: score {} ({}-bit pass)", o.max_score, o.cell_width);
    }

    // Scores past the 8-bit range are recomputed in a wider pass.
    let dna = ScoringScheme::new(SubstitutionMatrix::simple(b"ACGT", 5, -4).unwrap(), GapModel::new(8, 2).unwrap());
    let long = "ACGTTGCA".repeat(40);
    let o =
        StripedAligner::new(long.as_bytes(), &dna, KernelConfig::default()).unwrap().score(long.as_bytes()).unwrap();
    println!("identical 320-mers: score {} after escalating to {}-bit", o.max_score, o.cell_width);
}
