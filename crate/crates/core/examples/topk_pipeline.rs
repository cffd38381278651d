//! Two-phase top-K: per-partition partial lists merged into a ranked result.

use dsa::engine::{map_partition, StripedLocal};
use dsa::scoring::ScoringScheme;
use dsa::seqio::SequenceRecord;
use dsa::striped::KernelConfig;
use dsa::topk::{finalize_topk, merge_topk};

fn main() {
    let scheme = ScoringScheme::default_nucleotide();
    let query = SequenceRecord::new("q", "ACGTACGTTGCA");
    let partitions: Vec<Vec<SequenceRecord>> = vec![
        vec![SequenceRecord::new("a", "TTACGTACGTTGCATT"), SequenceRecord::new("b", "GGGGGGGG")],
        vec![SequenceRecord::new("c", "ACGTACGAAGCA"), SequenceRecord::new("d", "ACGTAC")],
        vec![SequenceRecord::new("e", "TGCATGCA")],
    ];
    let k = 3;

    let partials: Vec<_> = partitions
        .iter()
        .map(|p| map_partition(&StripedLocal, &query, p, &scheme, KernelConfig::default(), k).unwrap())
        .collect();
    for (i, p) in partials.iter().enumerate() {
        println!("partition {i}: {} candidates", p.len());
    }

    let ranked = finalize_topk(merge_topk(partials, k).unwrap(), k).unwrap();
    for (rank, hit) in ranked.iter().enumerate() {
        println!("{} {} score {} cigar {}", rank + 1, hit.ref_name, hit.max_score, hit.cigar);
    }
}
