//! Alignment algorithms by name, and the map + top-K pipeline over
//! reference partitions.
//!
//! Every algorithm, built-in or user supplied, goes through
//! [`AlignerRegistry::register`]. An algorithm only has to provide the
//! `align_full` shape; [`Aligner::prepare`] can be overridden to build
//! per-query state (such as a striped profile) once per partition.

use std::sync::Arc;

use indexmap::IndexMap;

use crate::align::{nw_scalar, sg_scalar, sw_scalar, AlignError, AlignmentResult};
use crate::scoring::ScoringScheme;
use crate::seqio::SequenceRecord;
use crate::striped::{KernelConfig, StripedAligner};
use crate::topk::{finalize_topk, merge_topk, TopK, TopKError};

/// Query state prepared for repeated alignment.
pub trait PreparedQuery: Send + Sync {
    fn align(&self, reference: &SequenceRecord) -> Result<AlignmentResult, AlignError>;
}

pub trait Aligner: Send + Sync {
    fn align(
        &self,
        query: &SequenceRecord,
        reference: &SequenceRecord,
        scheme: &ScoringScheme,
        config: KernelConfig,
    ) -> Result<AlignmentResult, AlignError>;

    fn prepare<'a>(
        &'a self,
        query: &'a SequenceRecord,
        scheme: &'a ScoringScheme,
        config: KernelConfig,
    ) -> Result<Box<dyn PreparedQuery + 'a>, AlignError> {
        Ok(Box::new(Unprepared { aligner: self, query, scheme, config }))
    }
}

struct Unprepared<'a, A: ?Sized> {
    aligner: &'a A,
    query: &'a SequenceRecord,
    scheme: &'a ScoringScheme,
    config: KernelConfig,
}

impl<A: Aligner + ?Sized> PreparedQuery for Unprepared<'_, A> {
    fn align(&self, reference: &SequenceRecord) -> Result<AlignmentResult, AlignError> {
        self.aligner.align(self.query, reference, self.scheme, self.config)
    }
}

/// Function with the `align_full` signature.
pub type AlignFn =
    fn(&SequenceRecord, &SequenceRecord, &ScoringScheme, KernelConfig) -> Result<AlignmentResult, AlignError>;

/// Adapts a plain function to [`Aligner`].
pub struct FnAligner(pub AlignFn);

impl Aligner for FnAligner {
    fn align(
        &self,
        query: &SequenceRecord,
        reference: &SequenceRecord,
        scheme: &ScoringScheme,
        config: KernelConfig,
    ) -> Result<AlignmentResult, AlignError> {
        (self.0)(query, reference, scheme, config)
    }
}

/// Striped local alignment; one profile per query, reused for every record.
pub struct StripedLocal;

struct PreparedStriped<'a> {
    aligner: StripedAligner,
    _query: &'a SequenceRecord,
}

impl PreparedQuery for PreparedStriped<'_> {
    fn align(&self, reference: &SequenceRecord) -> Result<AlignmentResult, AlignError> {
        self.aligner.align(reference)
    }
}

impl Aligner for StripedLocal {
    fn align(
        &self,
        query: &SequenceRecord,
        reference: &SequenceRecord,
        scheme: &ScoringScheme,
        config: KernelConfig,
    ) -> Result<AlignmentResult, AlignError> {
        crate::striped::align_full(query, reference, scheme, config)
    }

    fn prepare<'a>(
        &'a self,
        query: &'a SequenceRecord,
        scheme: &'a ScoringScheme,
        config: KernelConfig,
    ) -> Result<Box<dyn PreparedQuery + 'a>, AlignError> {
        Ok(Box::new(PreparedStriped { aligner: StripedAligner::new(&query.residues, scheme, config)?, _query: query }))
    }
}

pub const LOCAL: &str = "local";
pub const GLOBAL: &str = "global";
pub const SEMIGLOBAL: &str = "semiglobal";
pub const LOCAL_SCALAR: &str = "local-scalar";

#[derive(Clone, Default)]
pub struct AlignerRegistry {
    aligners: IndexMap<String, Arc<dyn Aligner>>,
}

impl std::fmt::Debug for AlignerRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.aligners.keys()).finish()
    }
}

impl AlignerRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `local` (striped), `global`, `semiglobal`, and `local-scalar`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(LOCAL, Arc::new(StripedLocal));
        r.register(GLOBAL, Arc::new(FnAligner(|q, r, s, _| nw_scalar(q, r, s))));
        r.register(SEMIGLOBAL, Arc::new(FnAligner(|q, r, s, _| sg_scalar(q, r, s))));
        r.register(LOCAL_SCALAR, Arc::new(FnAligner(|q, r, s, _| sw_scalar(q, r, s))));
        r
    }

    /// Adds or replaces the algorithm registered under `name`.
    pub fn register(&mut self, name: impl Into<String>, aligner: Arc<dyn Aligner>) {
        self.aligners.insert(name.into(), aligner);
    }

    pub fn register_fn(&mut self, name: impl Into<String>, f: AlignFn) {
        self.register(name, Arc::new(FnAligner(f)));
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn Aligner>> {
        self.aligners.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.aligners.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    TopK(#[from] TopKError),
}

/// One map task: the query against every record of one partition, reduced
/// to the partition-local top `k` (unordered).
pub fn map_partition(
    aligner: &dyn Aligner,
    query: &SequenceRecord,
    records: &[SequenceRecord],
    scheme: &ScoringScheme,
    config: KernelConfig,
    k: usize,
) -> Result<Vec<AlignmentResult>, EngineError> {
    let mut top = TopK::new(k)?;
    let prepared = aligner.prepare(query, scheme, config)?;
    for r in records {
        top.push(prepared.align(r)?);
    }
    Ok(top.into_partial())
}

/// Single-process job: map over every partition, merge, finalize. Returns
/// one sorted hit list per query, in query order.
pub fn run_local_job<'a>(
    aligner: &dyn Aligner,
    queries: &[SequenceRecord],
    partitions: impl IntoIterator<Item = &'a [SequenceRecord]> + Clone,
    scheme: &ScoringScheme,
    config: KernelConfig,
    k: usize,
) -> Result<Vec<Vec<AlignmentResult>>, EngineError> {
    queries
        .iter()
        .map(|q| {
            let partials = partitions
                .clone()
                .into_iter()
                .map(|p| map_partition(aligner, q, p, scheme, config, k))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(finalize_topk(merge_topk(partials, k)?, k)?)
        })
        .collect()
}
