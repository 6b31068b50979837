//! Constant-count packet windows and their binary aggregation hierarchy.
//!
//! The valid-packet stream is cut into consecutive windows of exactly
//! `N_V0` packets (a trailing partial window is discarded). Level `k` of the
//! hierarchy holds windows of `N_V0 * 2^k` packets, each the entrywise sum of
//! two adjacent level `k-1` windows. Only the left sibling waiting for its
//! partner is kept per level, so a stream of any length is evaluated with at
//! most `L + 1` resident matrices when running single-threaded.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::{distribution_of, BinnedDistribution};
use crate::ingest::{IngestError, PacketRecord};
use crate::matrix::{MatrixError, TrafficMatrix};
use crate::quantities::{compute_quantities, profile, quadrant, DegreeKind, QuadrantSpec, QuantityVector};

#[derive(Debug, Error)]
pub enum WindowError {
    #[error("invalid window spec: {0}")]
    InvalidSpec(String),
    #[error("hierarchy of {levels} levels needs at least {needed} leaves, got {got}")]
    InsufficientLeaves { levels: u8, needed: u64, got: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
}

/// Base window size, hierarchy depth and starting base-window number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub base_window: u64,
    pub levels: u8,
    /// Base windows to skip before the first evaluated window.
    pub start_index: u64,
}

impl WindowSpec {
    pub fn new(base_window: u64, levels: u8) -> Self {
        Self {
            base_window,
            levels,
            start_index: 0,
        }
    }

    pub fn validate(&self) -> Result<(), WindowError> {
        if self.base_window < 2 || !self.base_window.is_power_of_two() {
            return Err(WindowError::InvalidSpec(format!(
                "base window {} is not a power of two >= 2",
                self.base_window
            )));
        }
        if self.levels == 0 {
            return Err(WindowError::InvalidSpec("levels must be >= 1".into()));
        }
        let shift = u32::from(self.levels - 1);
        if shift >= 64 || self.base_window.checked_shl(shift).is_none_or(|top| top >> shift != self.base_window) {
            return Err(WindowError::InvalidSpec(format!(
                "base window {} at {} levels overflows 64 bits",
                self.base_window, self.levels
            )));
        }
        Ok(())
    }

    pub fn window_size(&self, level: u8) -> u64 {
        self.base_window << level
    }

    /// Window sizes from the base level upward.
    pub fn window_sizes(&self) -> Vec<u64> {
        (0..self.levels).map(|k| self.window_size(k)).collect()
    }
}

/// Cuts a record stream into matrices of exactly `n_v` packets.
pub fn partition<I>(records: I, n_v: u64) -> Partition<I::IntoIter>
where
    I: IntoIterator<Item = PacketRecord>,
{
    assert!(n_v >= 1, "window size must be positive");
    Partition {
        records: records.into_iter(),
        n_v: n_v as usize,
        keys: Vec::with_capacity(n_v as usize),
    }
}

pub struct Partition<I> {
    records: I,
    n_v: usize,
    keys: Vec<(u64, u64)>,
}

impl<I: Iterator<Item = PacketRecord>> Iterator for Partition<I> {
    type Item = TrafficMatrix;

    fn next(&mut self) -> Option<TrafficMatrix> {
        self.keys.clear();
        for r in self.records.by_ref() {
            self.keys.push((r.src, r.dst));
            if self.keys.len() == self.n_v {
                return Some(TrafficMatrix::from_keys(&mut self.keys));
            }
        }
        None
    }
}

/// Materializes every level of the hierarchy from `leaves`.
///
/// Level `k` window `m` is the sum of level `k-1` windows `2m` and `2m+1`;
/// an unpaired trailing window is not carried upward.
pub fn build_hierarchy(leaves: Vec<TrafficMatrix>, levels: u8) -> Result<Vec<Vec<TrafficMatrix>>, WindowError> {
    if levels == 0 {
        return Err(WindowError::InvalidSpec("levels must be >= 1".into()));
    }
    let needed = 1u64 << (levels - 1);
    if (leaves.len() as u64) < needed {
        return Err(WindowError::InsufficientLeaves {
            levels,
            needed,
            got: leaves.len(),
        });
    }
    let mut out = vec![leaves];
    for _ in 1..levels {
        let prev = out.last().expect("level 0 present");
        let next = prev
            .chunks_exact(2)
            .map(|pair| pair[0].add(&pair[1]))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(next);
    }
    Ok(out)
}

/// A finished window at some level, shared with the fold that consumes it.
#[derive(Debug, Clone)]
pub struct CompletedWindow {
    pub level: u8,
    pub index: u64,
    pub matrix: Arc<TrafficMatrix>,
}

/// Streaming binary fold: feed leaves in time order, receive every window
/// of every level as soon as it is complete.
#[derive(Debug)]
pub struct HierarchyFolder {
    levels: u8,
    pending: Vec<Option<Arc<TrafficMatrix>>>,
    counts: Vec<u64>,
}

impl HierarchyFolder {
    pub fn new(levels: u8) -> Self {
        Self {
            levels,
            pending: vec![None; levels as usize],
            counts: vec![0; levels as usize],
        }
    }

    /// Pushes the next leaf and appends the windows it completes, leaf first.
    pub fn push(&mut self, leaf: TrafficMatrix, completed: &mut Vec<CompletedWindow>) -> Result<(), MatrixError> {
        let mut current = Arc::new(leaf);
        let mut level = 0u8;
        loop {
            let idx = level as usize;
            completed.push(CompletedWindow {
                level,
                index: self.counts[idx],
                matrix: Arc::clone(&current),
            });
            self.counts[idx] += 1;
            if level + 1 == self.levels {
                return Ok(());
            }
            match self.pending[idx].take() {
                None => {
                    self.pending[idx] = Some(current);
                    return Ok(());
                }
                Some(left) => {
                    current = Arc::new(left.add(&current)?);
                    level += 1;
                }
            }
        }
    }

    /// Matrices held waiting for a right sibling.
    pub fn resident(&self) -> usize {
        self.pending.iter().filter(|p| p.is_some()).count()
    }

    /// Distinct matrices held by the fold or by `completed`.
    pub fn distinct_resident(&self, completed: &[CompletedWindow]) -> usize {
        let pending = self.pending.iter().flatten();
        let extra = completed
            .iter()
            .filter(|w| !self.pending.iter().flatten().any(|p| Arc::ptr_eq(p, &w.matrix)))
            .count();
        pending.count() + extra
    }

    /// Windows emitted so far at `level`.
    pub fn count(&self, level: u8) -> u64 {
        self.counts[level as usize]
    }
}

/// What to compute for every window.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    /// Restrict every window to one gateway quadrant before analysis.
    pub quadrant: Option<QuadrantSpec>,
    pub distributions: Vec<DegreeKind>,
    /// Keep each (unrestricted) window matrix in its result.
    pub keep_matrices: bool,
}

impl AnalysisRequest {
    /// Quantities plus all five degree distributions.
    pub fn full() -> Self {
        Self {
            quadrant: None,
            distributions: DegreeKind::ALL.to_vec(),
            keep_matrices: false,
        }
    }

    pub fn with_quadrant(mut self, spec: QuadrantSpec) -> Self {
        self.quadrant = Some(spec);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub level: u8,
    pub index: u64,
    pub window_size: u64,
    pub quantities: QuantityVector,
    /// `None` when the (restricted) window has no entries of that kind.
    pub distributions: Vec<(DegreeKind, Option<BinnedDistribution>)>,
    #[serde(skip)]
    pub matrix: Option<Arc<TrafficMatrix>>,
}

impl WindowResult {
    pub fn distribution(&self, kind: DegreeKind) -> Option<&BinnedDistribution> {
        self.distributions
            .iter()
            .find(|(k, _)| *k == kind)
            .and_then(|(_, d)| d.as_ref())
    }
}

/// Analyzes one window matrix.
pub fn analyze_window(
    matrix: &TrafficMatrix,
    request: &AnalysisRequest,
) -> (QuantityVector, Vec<(DegreeKind, Option<BinnedDistribution>)>) {
    let restricted;
    let target = match &request.quadrant {
        Some(spec) => {
            restricted = quadrant(matrix, spec);
            &restricted
        }
        None => matrix,
    };
    if request.distributions.is_empty() {
        return (compute_quantities(target), Vec::new());
    }
    let (quantities, vectors) = profile(target);
    let distributions = request
        .distributions
        .iter()
        .map(|&kind| {
            let dist = match kind {
                DegreeKind::SourcePackets => distribution_of(vectors.source_packets.degrees()),
                DegreeKind::SourceFanout => distribution_of(vectors.source_fanout.degrees()),
                DegreeKind::DestinationPackets => distribution_of(vectors.destination_packets.degrees()),
                DegreeKind::DestinationFanin => distribution_of(vectors.destination_fanin.degrees()),
                DegreeKind::LinkPackets => distribution_of(vectors.link_packets.iter().copied()),
            };
            (kind, dist.ok())
        })
        .collect();
    (quantities, distributions)
}

/// All windows of one hierarchy level, ordered by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyLevelResult {
    pub level: u8,
    pub window_size: u64,
    pub windows: Vec<WindowResult>,
}

impl HierarchyLevelResult {
    pub fn quantity_series(&self, q: crate::quantities::Quantity) -> Vec<f64> {
        self.windows.iter().map(|w| w.quantities.get(q) as f64).collect()
    }

    pub fn distributions(&self, kind: DegreeKind) -> Vec<BinnedDistribution> {
        self.windows
            .iter()
            .filter_map(|w| w.distribution(kind).cloned())
            .collect()
    }
}

/// Incremental evaluator over a record stream.
///
/// With `threads > 1`, leaves are gathered in batches of `threads`, built in
/// parallel, folded in time order, and the windows they complete are analyzed
/// in parallel. Emission order and contents do not depend on `threads`.
pub struct Evaluator {
    spec: WindowSpec,
    request: AnalysisRequest,
    pool: Option<rayon::ThreadPool>,
    batch_size: usize,
    folder: HierarchyFolder,
    current: Vec<(u64, u64)>,
    batch: Vec<Vec<(u64, u64)>>,
    to_skip: u64,
    consumed: u64,
    peak_resident: usize,
}

impl Evaluator {
    pub fn new(spec: WindowSpec, request: AnalysisRequest, threads: usize) -> Result<Self, WindowError> {
        spec.validate()?;
        let threads = threads.max(1);
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| WindowError::ThreadPool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            spec,
            request,
            pool,
            batch_size: threads,
            folder: HierarchyFolder::new(spec.levels),
            current: Vec::with_capacity(spec.base_window as usize),
            batch: Vec::new(),
            to_skip: spec.start_index.saturating_mul(spec.base_window),
            consumed: 0,
            peak_resident: 0,
        })
    }

    pub fn push<F>(&mut self, record: PacketRecord, sink: &mut F) -> Result<(), WindowError>
    where
        F: FnMut(WindowResult),
    {
        if self.to_skip > 0 {
            self.to_skip -= 1;
            return Ok(());
        }
        self.consumed += 1;
        self.current.push((record.src, record.dst));
        if self.current.len() as u64 == self.spec.base_window {
            let full = std::mem::replace(&mut self.current, Vec::with_capacity(self.spec.base_window as usize));
            self.batch.push(full);
            if self.batch.len() == self.batch_size {
                self.flush(sink)?;
            }
        }
        Ok(())
    }

    /// Processes buffered leaves. The trailing partial window is dropped.
    pub fn finish<F>(mut self, sink: &mut F) -> Result<EvaluationSummary, WindowError>
    where
        F: FnMut(WindowResult),
    {
        self.flush(sink)?;
        Ok(EvaluationSummary {
            records: self.consumed,
            discarded: self.current.len() as u64,
            windows_per_level: (0..self.spec.levels).map(|k| self.folder.count(k)).collect(),
            peak_resident_matrices: self.peak_resident,
        })
    }

    fn flush<F>(&mut self, sink: &mut F) -> Result<(), WindowError>
    where
        F: FnMut(WindowResult),
    {
        if self.batch.is_empty() {
            return Ok(());
        }
        let mut batch = std::mem::take(&mut self.batch);
        let leaves: Vec<TrafficMatrix> = match &self.pool {
            Some(pool) => pool.install(|| batch.par_iter_mut().map(|k| TrafficMatrix::from_keys(k)).collect()),
            None => batch.iter_mut().map(|k| TrafficMatrix::from_keys(k)).collect(),
        };
        drop(batch);

        let mut completed = Vec::new();
        let unfolded = leaves.len();
        for (i, leaf) in leaves.into_iter().enumerate() {
            self.folder.push(leaf, &mut completed)?;
            // Leaves not yet folded, the fold's pending matrices and the
            // windows awaiting analysis are all resident.
            let live = (unfolded - i - 1) + self.folder.distinct_resident(&completed);
            self.peak_resident = self.peak_resident.max(live);
        }

        let request = &self.request;
        let spec = &self.spec;
        let analyze = |w: &CompletedWindow| {
            let (quantities, distributions) = analyze_window(&w.matrix, request);
            WindowResult {
                level: w.level,
                index: w.index,
                window_size: spec.window_size(w.level),
                quantities,
                distributions,
                matrix: request.keep_matrices.then(|| Arc::clone(&w.matrix)),
            }
        };
        let results: Vec<WindowResult> = match &self.pool {
            Some(pool) => pool.install(|| completed.par_iter().map(analyze).collect()),
            None => completed.iter().map(analyze).collect(),
        };
        for r in results {
            sink(r);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    /// Records consumed after skipping `start_index` base windows.
    pub records: u64,
    /// Records in the trailing partial window.
    pub discarded: u64,
    pub windows_per_level: Vec<u64>,
    pub peak_resident_matrices: usize,
}

/// Runs the whole hierarchy over a fallible record stream and groups the
/// results by level.
pub fn evaluate_hierarchy<I>(
    records: I,
    spec: &WindowSpec,
    request: &AnalysisRequest,
    threads: usize,
) -> Result<(Vec<HierarchyLevelResult>, EvaluationSummary), WindowError>
where
    I: IntoIterator<Item = Result<PacketRecord, IngestError>>,
{
    let mut evaluator = Evaluator::new(*spec, request.clone(), threads)?;
    let mut levels: Vec<HierarchyLevelResult> = (0..spec.levels)
        .map(|k| HierarchyLevelResult {
            level: k,
            window_size: spec.window_size(k),
            windows: Vec::new(),
        })
        .collect();
    let mut sink = |r: WindowResult| levels[r.level as usize].windows.push(r);
    for record in records {
        evaluator.push(record?, &mut sink)?;
    }
    let summary = evaluator.finish(&mut sink)?;
    Ok((levels, summary))
}

/// [`evaluate_hierarchy`] over an infallible in-memory stream.
pub fn evaluate_records<I>(
    records: I,
    spec: &WindowSpec,
    request: &AnalysisRequest,
    threads: usize,
) -> Result<(Vec<HierarchyLevelResult>, EvaluationSummary), WindowError>
where
    I: IntoIterator<Item = PacketRecord>,
{
    evaluate_hierarchy(records.into_iter().map(Ok), spec, request, threads)
}
