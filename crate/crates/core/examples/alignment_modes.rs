//! Local, global and semi-global alignment of the same pair.

use dsa::align::{nw_scalar, score_from_cigar, sg_scalar, sw_scalar};
use dsa::scoring::{GapModel, ScoringScheme, SubstitutionMatrix};
use dsa::seqio::SequenceRecord;

fn main() {
    let scheme = ScoringScheme::new(SubstitutionMatrix::simple(b"ACGT", 2, -3).unwrap(), GapModel::new(5, 2).unwrap());
    let q = SequenceRecord::new("q", "ACGTTACGGA");
    let r = SequenceRecord::new("r", "TTTACGTACGGATTT");

    for (name, hit) in [
        ("local", sw_scalar(&q, &r, &scheme).unwrap()),
        ("global", nw_scalar(&q, &r, &scheme).unwrap()),
        ("semiglobal", sg_scalar(&q, &r, &scheme).unwrap()),
    ] {
        let rescored = score_from_cigar(&q.residues, &r.residues, &hit, &scheme).unwrap();
        println!(
            "{name:>10}: score {:>3} ref {}..={} query {}..={} cigar {} (rescored {rescored})",
            hit.max_score, hit.ref_begin, hit.ref_end, hit.query_begin, hit.query_end, hit.cigar
        );
    }
}
