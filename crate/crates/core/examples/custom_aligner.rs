//! Registering a user-defined algorithm and running it like a built-in.

use std::sync::Arc;

use dsa::align::{AlignError, AlignmentMode, AlignmentResult, Cigar, CigarOp};
use dsa::engine::{run_local_job, Aligner, AlignerRegistry};
use dsa::scoring::ScoringScheme;
use dsa::seqio::SequenceRecord;
use dsa::striped::KernelConfig;

/// Best ungapped diagonal: no gaps, matrix scores only.
struct Ungapped;

impl Aligner for Ungapped {
    fn align(
        &self,
        query: &SequenceRecord,
        reference: &SequenceRecord,
        scheme: &ScoringScheme,
        _config: KernelConfig,
    ) -> Result<AlignmentResult, AlignError> {
        let q = scheme.matrix.encode(&query.residues)?;
        let r = scheme.matrix.encode(&reference.residues)?;
        let mut best = AlignmentResult::empty(&reference.id, AlignmentMode::Local);
        for shift in -(q.len() as i64 - 1)..r.len() as i64 {
            let mut run = 0;
            let mut start = 0;
            for (i, &qc) in q.iter().enumerate() {
                let j = i as i64 + shift;
                if j < 0 || j >= r.len() as i64 {
                    continue;
                }
                if run <= 0 {
                    run = 0;
                    start = i;
                }
                run += scheme.matrix.score_idx(qc, r[j as usize]);
                if run > best.max_score {
                    let mut cigar = Cigar::new();
                    cigar.push(CigarOp::M, (i - start + 1) as u32);
                    best = AlignmentResult {
                        max_score: run,
                        ref_name: reference.id.clone(),
                        ref_begin: start as i64 + shift,
                        ref_end: j,
                        query_begin: start as i64,
                        query_end: i as i64,
                        cigar,
                        mode: AlignmentMode::Local,
                    };
                }
            }
        }
        Ok(best)
    }
}

fn main() {
    let mut registry = AlignerRegistry::with_builtins();
    registry.register("ungapped", Arc::new(Ungapped));
    println!("algorithms: {:?}", registry.names().collect::<Vec<_>>());

    let scheme = ScoringScheme::default_nucleotide();
    let queries = vec![SequenceRecord::new("q", "ACGTTTACGA")];
    let partition = vec![SequenceRecord::new("a", "GGACGTTTACGAGG"), SequenceRecord::new("b", "ACGTTACGA")];
    for name in ["ungapped", "local"] {
        let aligner = registry.get(name).unwrap();
        let ranked =
            run_local_job(aligner.as_ref(), &queries, [partition.as_slice()], &scheme, KernelConfig::default(), 2)
                .unwrap();
        for hit in &ranked[0] {
            println!("{name:>9}: {} score {} cigar {}", hit.ref_name, hit.max_score, hit.cigar);
        }
    }
}
