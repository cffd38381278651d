mod common;

use common::*;
use dsa::align::{nw_scalar, score_from_cigar, sg_scalar, sw_scalar, AlignmentMode, AlignmentResult, Cigar};
use dsa::scoring::{GapModel, ScoringScheme, SubstitutionMatrix};
use dsa::seqio::{convert, parse_any, parse_fasta, parse_fastq, write_fasta, write_fastq, SeqFormat, SequenceRecord};
use dsa::striped::{align_full, KernelConfig};
use dsa::topk::{finalize_topk, hit_order, merge_topk, partial_topk, TopK};
use proptest::prelude::*;

fn record(with_quality: bool) -> impl Strategy<Value = SequenceRecord> {
    (
        "[A-Za-z0-9_.|:-]{1,12}",
        prop::option::of("[ -~&&[^ ]][ -~]{0,20}"),
        prop::collection::vec(prop::sample::select(b"ACGTNRYKM*".to_vec()), 1..200),
    )
        .prop_flat_map(move |(id, desc, residues)| {
            let n = residues.len();
            let qual = prop::collection::vec(b'!'..=b'~', n);
            (Just(id), Just(desc), Just(residues), qual)
        })
        .prop_map(move |(id, desc, residues, qual)| {
            let mut r = SequenceRecord::new(id, residues);
            if let Some(d) = desc {
                r = r.with_description(d.trim_end().to_string());
            }
            if with_quality {
                r = r.with_quality(qual);
            }
            r
        })
}

fn hit() -> impl Strategy<Value = AlignmentResult> {
    (0..8i32, 0..5u8, 0..4i64, 0..3i64, any::<bool>()).prop_map(|(score, name, rb, qb, ins)| AlignmentResult {
        max_score: score,
        ref_name: format!("ref{name}"),
        ref_begin: rb,
        ref_end: rb + 1,
        query_begin: qb,
        query_end: qb + 1,
        cigar: if ins { "1M1I" } else { "2M" }.parse::<Cigar>().unwrap(),
        mode: AlignmentMode::Local,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fasta_roundtrip(records in prop::collection::vec(record(false), 1..8)) {
        let mut out = Vec::new();
        write_fasta(&mut out, &records).unwrap();
        prop_assert_eq!(parse_fasta(&out).unwrap(), records.clone());
        prop_assert_eq!(parse_any(&out).unwrap(), records);
    }

    #[test]
    fn fastq_roundtrip(records in prop::collection::vec(record(true), 1..8)) {
        let mut out = Vec::new();
        write_fastq(&mut out, &records).unwrap();
        prop_assert_eq!(parse_fastq(&out).unwrap(), records.clone());
        prop_assert_eq!(SeqFormat::detect(&out), Some(SeqFormat::Fastq));
    }

    #[test]
    fn fastq_to_fasta_and_back(records in prop::collection::vec(record(false), 1..5)) {
        let fq = convert(&records, SeqFormat::Fastq, b'I').unwrap();
        let back = parse_fastq(&fq).unwrap();
        prop_assert!(back.iter().all(|r| r.quality.as_ref().unwrap().iter().all(|&q| q == b'I')));
        let fa = convert(&back, SeqFormat::Fasta, b'I').unwrap();
        prop_assert_eq!(parse_fasta(&fa).unwrap(), records);
    }

    #[test]
    fn topk_equals_full_sort(
        hits in prop::collection::vec(hit(), 0..300),
        parts in 1usize..16,
        k in 1usize..40,
        seed in any::<u64>(),
    ) {
        let mut oracle = hits.clone();
        oracle.sort_by(hit_order);
        oracle.truncate(k);

        let mut buckets = vec![Vec::new(); parts];
        for (i, h) in hits.iter().enumerate() {
            let b = (seed.wrapping_mul(i as u64 + 1) >> 7) as usize % parts;
            buckets[b].push(h.clone());
        }
        let partials: Vec<_> = buckets.into_iter().map(|b| partial_topk(b, k).unwrap()).collect();
        let merged = finalize_topk(merge_topk(partials, k).unwrap(), k).unwrap();
        prop_assert_eq!(&merged, &oracle);

        let mut streaming = TopK::new(k).unwrap();
        streaming.extend(hits);
        prop_assert_eq!(streaming.into_sorted(), oracle);
    }

    #[test]
    fn cigar_text_roundtrip(ops in prop::collection::vec((1u32..50, prop::sample::select(vec!['M', 'I', 'D'])), 0..10)) {
        let text: String = ops.iter().map(|(n, c)| format!("{n}{c}")).collect();
        let cigar: Cigar = text.parse().unwrap();
        let again: Cigar = cigar.to_string().parse().unwrap();
        prop_assert_eq!(again, cigar);
    }

    #[test]
    fn matrix_text_roundtrip(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let scheme = random_scheme(&mut rng, -5, 9);
        let text = scheme.matrix.to_text();
        prop_assert_eq!(&SubstitutionMatrix::parse_text(&text).unwrap(), scheme.matrix.as_ref());
    }

    #[test]
    fn cigar_rescores_to_reported_score(
        q in "[ACGT]{1,60}",
        r in "[ACGT]{1,80}",
        open in 1i32..8,
        ext_frac in 0i32..=100,
        lanes in prop::sample::select(vec![4usize, 8, 16, 32]),
        width in prop::sample::select(vec![8u32, 16]),
    ) {
        let ext = (open * ext_frac / 100).max(1);
        let scheme = ScoringScheme::new(
            SubstitutionMatrix::simple(b"ACGT", 2, -3).unwrap(),
            GapModel::new(open, ext).unwrap(),
        );
        let (qr, rr) = (SequenceRecord::new("q", &q), SequenceRecord::new("r", &r));
        for result in [
            sw_scalar(&qr, &rr, &scheme).unwrap(),
            nw_scalar(&qr, &rr, &scheme).unwrap(),
            sg_scalar(&qr, &rr, &scheme).unwrap(),
        ] {
            let rescored = score_from_cigar(q.as_bytes(), r.as_bytes(), &result, &scheme).unwrap();
            prop_assert_eq!(rescored, result.max_score);
        }
        let striped = align_full(&qr, &rr, &scheme, KernelConfig::new(lanes, width).unwrap()).unwrap();
        prop_assert_eq!(striped, sw_scalar(&qr, &rr, &scheme).unwrap());
    }
}
