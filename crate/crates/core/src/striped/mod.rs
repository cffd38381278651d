//! Striped (Farrar-layout) Smith-Waterman on saturating 8- and 16-bit lanes.
//!
//! A score pass runs at the configured cell width. When it saturates, or
//! the matrix does not fit the cells, [`StripedAligner`] retries at 16 bits
//! and finally with the exact 32-bit scalar pass. The begin cell comes from
//! the same pass over the reversed prefixes and the CIGAR from a banded
//! global DP over the begin..end rectangle, so results are identical to
//! [`crate::align::sw_scalar`].

mod kernel;
mod lanes;
mod profile;

pub use lanes::{Cell, LaneVector, Portable};
#[cfg(target_arch = "x86_64")]
pub use lanes::{U16x8, U8x16};
pub use profile::StripedProfile;

use std::sync::OnceLock;

use crate::align::{
    encode_pair, finish_local, local_pass, local_result, scalar_begin, AlignError, AlignmentMode, AlignmentResult,
    LocalEnd,
};
use crate::scoring::{GapModel, ScoringScheme};
use crate::seqio::SequenceRecord;
use kernel::{striped_pass, PassOutcome};

pub const SUPPORTED_LANES: [usize; 4] = [4, 8, 16, 32];
pub const SUPPORTED_WIDTHS: [u32; 2] = [8, 16];

/// Which vector implementation runs a pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// SSE2 where the shape fits a 128-bit register, portable otherwise.
    #[default]
    Auto,
    Portable,
}

/// Lane count and cell width of the first score pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelConfig {
    pub lanes: usize,
    pub cell_width: u32,
    pub backend: Backend,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { lanes: 16, cell_width: 8, backend: Backend::Auto }
    }
}

impl KernelConfig {
    pub fn new(lanes: usize, cell_width: u32) -> Result<Self, AlignError> {
        let c = KernelConfig { lanes, cell_width, backend: Backend::Auto };
        c.validate()?;
        Ok(c)
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn validate(&self) -> Result<(), AlignError> {
        if !SUPPORTED_LANES.contains(&self.lanes) {
            return Err(AlignError::InvalidConfig(format!(
                "lanes must be one of {SUPPORTED_LANES:?}, got {}",
                self.lanes
            )));
        }
        if !SUPPORTED_WIDTHS.contains(&self.cell_width) {
            return Err(AlignError::InvalidConfig(format!("cell width must be 8 or 16, got {}", self.cell_width)));
        }
        Ok(())
    }

    /// Next rung of the escalation ladder: 8-bit cells become 16-bit with
    /// half the lanes (same register size, at least 4 lanes).
    pub fn wider(&self) -> Option<KernelConfig> {
        (self.cell_width == 8).then(|| KernelConfig {
            lanes: (self.lanes / 2).max(4),
            cell_width: 16,
            backend: self.backend,
        })
    }
}

/// Score-only result of a local pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelOutcome {
    /// Best score; when `saturated`, the cell ceiling instead.
    pub max_score: i32,
    pub ref_end: i64,
    pub query_end: i64,
    pub saturated: bool,
    /// Width of the pass that produced the outcome; 32 means scalar.
    pub cell_width: u32,
    /// Inner lazy-F iterations (0 for scalar).
    pub lazy_f_steps: u64,
}

impl KernelOutcome {
    fn end(&self) -> Option<LocalEnd> {
        (self.max_score > 0 && !self.saturated).then_some(LocalEnd {
            score: self.max_score,
            query_end: self.query_end as usize,
            ref_end: self.ref_end as usize,
        })
    }
}

#[derive(Clone, Debug)]
enum AnyProfile {
    U8(StripedProfile<u8>),
    U16(StripedProfile<u16>),
}

impl AnyProfile {
    fn build(query: &[u8], scheme: &ScoringScheme, config: KernelConfig) -> Result<Self, AlignError> {
        config.validate()?;
        Ok(match config.cell_width {
            8 => AnyProfile::U8(StripedProfile::build(query, &scheme.matrix, config.lanes)?),
            _ => AnyProfile::U16(StripedProfile::build(query, &scheme.matrix, config.lanes)?),
        })
    }

    fn run(&self, reference: &[u8], gaps: GapModel, backend: Backend) -> PassOutcome {
        match self {
            AnyProfile::U8(p) => match (p.lanes(), backend) {
                #[cfg(target_arch = "x86_64")]
                (16, Backend::Auto) => striped_pass::<U8x16>(p, reference, gaps),
                (4, _) => striped_pass::<Portable<u8, 4>>(p, reference, gaps),
                (8, _) => striped_pass::<Portable<u8, 8>>(p, reference, gaps),
                (16, _) => striped_pass::<Portable<u8, 16>>(p, reference, gaps),
                (32, _) => striped_pass::<Portable<u8, 32>>(p, reference, gaps),
                (l, _) => unreachable!("unsupported lane count {l}"),
            },
            AnyProfile::U16(p) => match (p.lanes(), backend) {
                #[cfg(target_arch = "x86_64")]
                (8, Backend::Auto) => striped_pass::<U16x8>(p, reference, gaps),
                (4, _) => striped_pass::<Portable<u16, 4>>(p, reference, gaps),
                (8, _) => striped_pass::<Portable<u16, 8>>(p, reference, gaps),
                (16, _) => striped_pass::<Portable<u16, 16>>(p, reference, gaps),
                (32, _) => striped_pass::<Portable<u16, 32>>(p, reference, gaps),
                (l, _) => unreachable!("unsupported lane count {l}"),
            },
        }
    }
}

fn outcome(pass: PassOutcome, cell_width: u32) -> KernelOutcome {
    let (query_end, ref_end) = match pass.end {
        Some((q, r)) => (q as i64, r as i64),
        None => (-1, -1),
    };
    KernelOutcome {
        max_score: pass.score as i32,
        ref_end,
        query_end,
        saturated: pass.saturated,
        cell_width,
        lazy_f_steps: pass.lazy_f_steps,
    }
}

fn scalar_outcome(query: &[u8], reference: &[u8], scheme: &ScoringScheme) -> KernelOutcome {
    let (score, end) = local_pass(query, reference, &scheme.matrix, scheme.gaps);
    let (query_end, ref_end) = end.map_or((-1, -1), |(q, r)| (q as i64, r as i64));
    KernelOutcome { max_score: score, ref_end, query_end, saturated: false, cell_width: 32, lazy_f_steps: 0 }
}

/// One striped score pass at exactly `config`. A saturated outcome carries
/// the cell ceiling as its score; no escalation happens here.
pub fn sw_striped_score(
    query: &[u8],
    reference: &[u8],
    scheme: &ScoringScheme,
    config: KernelConfig,
) -> Result<KernelOutcome, AlignError> {
    let (q, r) = encode_pair(query, reference, &scheme.matrix)?;
    let profile = AnyProfile::build(&q, scheme, config)?;
    Ok(outcome(profile.run(&r, scheme.gaps, config.backend), config.cell_width))
}

/// Begin cell `(query_begin, ref_begin)` of the alignment ending at the
/// outcome's end cell, using a pass of the same width as the one that
/// produced `found`. Returns `(-1, -1)` for an empty alignment.
pub fn locate_begin(
    query: &[u8],
    reference: &[u8],
    scheme: &ScoringScheme,
    config: KernelConfig,
    found: &KernelOutcome,
) -> Result<(i64, i64), AlignError> {
    if found.saturated {
        return Err(AlignError::InvalidConfig("cannot locate the begin of a saturated pass".into()));
    }
    let Some(end) = found.end() else {
        return Ok((-1, -1));
    };
    let (q, r) = encode_pair(query, reference, &scheme.matrix)?;
    let (qb, rb) = begin_at_width(&q, &r, scheme, config, found.cell_width, end)?;
    Ok((qb as i64, rb as i64))
}

fn begin_at_width(
    q: &[u8],
    r: &[u8],
    scheme: &ScoringScheme,
    config: KernelConfig,
    cell_width: u32,
    end: LocalEnd,
) -> Result<(usize, usize), AlignError> {
    let tier = match cell_width {
        8 => config,
        16 if config.cell_width == 16 => config,
        16 => config.wider().expect("8-bit config widens"),
        _ => return scalar_begin(q, r, &scheme.matrix, scheme.gaps, end),
    };
    let qrev: Vec<u8> = q[..=end.query_end].iter().rev().copied().collect();
    let rrev: Vec<u8> = r[..=end.ref_end].iter().rev().copied().collect();
    let pass = AnyProfile::build(&qrev, scheme, tier)?.run(&rrev, scheme.gaps, tier.backend);
    match pass.end {
        Some((qi, rj)) if !pass.saturated && pass.score as i32 == end.score => {
            Ok((end.query_end - qi, end.ref_end - rj))
        }
        _ => Err(AlignError::InternalMismatch(format!(
            "reverse striped pass scored {}, forward {}",
            pass.score, end.score
        ))),
    }
}

/// A query prepared for striped alignment against many references. Profiles
/// are built on first use and shared by every later call.
#[derive(Debug)]
pub struct StripedAligner {
    query: Vec<u8>,
    scheme: ScoringScheme,
    config: KernelConfig,
    tiers: Vec<(KernelConfig, OnceLock<Result<AnyProfile, AlignError>>)>,
}

impl StripedAligner {
    pub fn new(query: &[u8], scheme: &ScoringScheme, config: KernelConfig) -> Result<Self, AlignError> {
        config.validate()?;
        if query.is_empty() {
            return Err(AlignError::EmptySequence("query"));
        }
        let query = scheme.matrix.encode(query)?;
        let mut tiers = vec![(config, OnceLock::new())];
        if let Some(w) = config.wider() {
            tiers.push((w, OnceLock::new()));
        }
        Ok(StripedAligner { query, scheme: scheme.clone(), config, tiers })
    }

    pub fn config(&self) -> KernelConfig {
        self.config
    }

    pub fn scheme(&self) -> &ScoringScheme {
        &self.scheme
    }

    fn encode_ref(&self, reference: &[u8]) -> Result<Vec<u8>, AlignError> {
        if reference.is_empty() {
            return Err(AlignError::EmptySequence("reference"));
        }
        Ok(self.scheme.matrix.encode(reference)?)
    }

    fn score_encoded(&self, r: &[u8]) -> Result<KernelOutcome, AlignError> {
        for (tier, cell) in &self.tiers {
            let profile = match cell.get_or_init(|| AnyProfile::build(&self.query, &self.scheme, *tier)) {
                Ok(p) => p,
                Err(AlignError::QueryTooLong { .. }) => continue,
                Err(e) => return Err(e.clone()),
            };
            let pass = profile.run(r, self.scheme.gaps, tier.backend);
            if !pass.saturated {
                return Ok(outcome(pass, tier.cell_width));
            }
            log::debug!("{}-bit pass saturated, escalating", tier.cell_width);
        }
        Ok(scalar_outcome(&self.query, r, &self.scheme))
    }

    /// Exact local score and end cell, escalating past saturation.
    pub fn score(&self, reference: &[u8]) -> Result<KernelOutcome, AlignError> {
        let r = self.encode_ref(reference)?;
        self.score_encoded(&r)
    }

    /// Full local alignment with traceback.
    pub fn align(&self, reference: &SequenceRecord) -> Result<AlignmentResult, AlignError> {
        let r = self.encode_ref(&reference.residues)?;
        let found = self.score_encoded(&r)?;
        let Some(end) = found.end() else {
            return Ok(AlignmentResult::empty(&reference.id, AlignmentMode::Local));
        };
        let begin = begin_at_width(&self.query, &r, &self.scheme, self.config, found.cell_width, end)?;
        let cigar = finish_local(&self.query, &r, &self.scheme.matrix, self.scheme.gaps, end, begin, true)?;
        Ok(local_result(&reference.id, end, begin, cigar))
    }
}

/// Striped local alignment with traceback; field-for-field equal to
/// [`crate::align::sw_scalar`].
pub fn align_full(
    query: &SequenceRecord,
    reference: &SequenceRecord,
    scheme: &ScoringScheme,
    config: KernelConfig,
) -> Result<AlignmentResult, AlignError> {
    StripedAligner::new(&query.residues, scheme, config)?.align(reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::sw_scalar;
    use crate::scoring::SubstitutionMatrix;

    fn dna(m: i32, x: i32, o: i32, e: i32) -> ScoringScheme {
        ScoringScheme::new(SubstitutionMatrix::simple(b"ACGT", m, x).unwrap(), GapModel::new(o, e).unwrap())
    }

    #[test]
    fn small_cases_match_scalar() {
        let s = dna(2, -1, 3, 1);
        let pairs: [(&str, &str); 4] =
            [("ACGT", "ACGT"), ("AC", "GACG"), ("AAAA", "TTTT"), ("ACGTTGCAAC", "TTACGTAAGCAACGG")];
        for (q, r) in pairs {
            let qr = SequenceRecord::new("q", q);
            let rr = SequenceRecord::new("r", r);
            let want = sw_scalar(&qr, &rr, &s).unwrap();
            for lanes in SUPPORTED_LANES {
                for width in SUPPORTED_WIDTHS {
                    let cfg = KernelConfig::new(lanes, width).unwrap();
                    assert_eq!(align_full(&qr, &rr, &s, cfg).unwrap(), want, "{q} {r} {cfg:?}");
                }
            }
        }
    }

    #[test]
    fn saturation_escalates() {
        let s = dna(100, -1, 3, 1);
        let q = "A".repeat(700);
        let qr = SequenceRecord::new("q", &q);
        let rr = SequenceRecord::new("r", &q);
        let cfg = KernelConfig::default();
        let eight = sw_striped_score(q.as_bytes(), q.as_bytes(), &s, cfg).unwrap();
        assert!(eight.saturated);
        assert_eq!(eight.max_score, 254);
        let sixteen = sw_striped_score(q.as_bytes(), q.as_bytes(), &s, cfg.wider().unwrap()).unwrap();
        assert!(sixteen.saturated);
        let full = align_full(&qr, &rr, &s, cfg).unwrap();
        assert_eq!(full.max_score, 70_000);
        assert_eq!(full, sw_scalar(&qr, &rr, &s).unwrap());
    }

    #[test]
    fn bad_config_rejected() {
        assert!(KernelConfig::new(3, 8).is_err());
        assert!(KernelConfig::new(16, 32).is_err());
    }
}
