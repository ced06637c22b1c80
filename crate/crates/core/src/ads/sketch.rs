use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::bsp::IdSet;
use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Vertices a predicated query leaves out (the frozen clients).
pub type FrozenSet = IdSet;

/// One sampled `(vertex, distance)` pair of an all-distances sketch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdsEntry {
    pub vertex: VertexId,
    pub rank: f64,
    pub distance: f64,
}

impl AdsEntry {
    /// Canonical sketch order: by distance, equal distances by vertex id.
    #[inline]
    pub fn key_cmp(&self, other: &AdsEntry) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.vertex.cmp(&other.vertex))
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct Rank(f64);

impl Eq for Rank {}

#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Max-heap holding the `k` smallest ranks pushed so far.
pub(crate) struct BottomK {
    k: usize,
    heap: BinaryHeap<Rank>,
}

impl BottomK {
    pub(crate) fn new(k: usize) -> Self {
        BottomK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    /// The k-th smallest rank, or `+inf` while fewer than `k` were seen.
    #[inline]
    pub(crate) fn threshold(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |r| r.0)
        }
    }

    #[inline]
    pub(crate) fn admits(&self, rank: f64) -> bool {
        rank < self.threshold()
    }

    pub(crate) fn push(&mut self, rank: f64) {
        if self.heap.len() < self.k {
            self.heap.push(Rank(rank));
        } else if rank < self.threshold() {
            self.heap.pop();
            self.heap.push(Rank(rank));
        }
    }
}

/// All-distances sketch of a single vertex.
///
/// Entries are kept in canonical order. A sketch is *clean* when every entry
/// has fewer than `k` predecessors of smaller rank; only clean sketches
/// answer queries, and each entry then carries its HIP adjusted weight
/// `1/p_u`, where `p_u` is the k-th smallest rank among its predecessors
/// (`1` if it has fewer than `k`).
#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    k: usize,
    entries: Vec<AdsEntry>,
    weights: Vec<f64>,
    clean: bool,
}

impl Sketch {
    /// Wraps raw entries without filtering. The result is unclean until
    /// [`cleanup_ads`] is applied.
    pub fn from_raw(k: usize, mut entries: Vec<AdsEntry>) -> Self {
        entries.sort_by(AdsEntry::key_cmp);
        Sketch {
            k,
            entries,
            weights: Vec::new(),
            clean: false,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.clean
    }

    pub fn entries(&self) -> &[AdsEntry] {
        &self.entries
    }

    /// HIP weights aligned with [`Sketch::entries`]; empty when unclean.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn require_clean(&self) -> Result<()> {
        if self.clean {
            Ok(())
        } else {
            Err(Error::Contract("query on a sketch that has not been cleaned up".into()))
        }
    }

    /// HIP estimate of the number of vertices within distance `d` that are
    /// not in `exclude`.
    pub fn hip_estimate(&self, d: f64, exclude: &FrozenSet) -> Result<f64> {
        self.require_clean()?;
        Ok(self
            .entries
            .iter()
            .zip(&self.weights)
            .take_while(|(e, _)| e.distance <= d)
            .filter(|(e, _)| !exclude.contains(e.vertex))
            .map(|(_, w)| w)
            .sum())
    }

    /// Estimated count of non-excluded vertices at distance in `(lo, hi]`,
    /// clamped at zero.
    pub fn annulus_count(&self, lo: f64, hi: f64, exclude: &FrozenSet) -> Result<f64> {
        self.require_clean()?;
        Ok(self
            .entries
            .iter()
            .zip(&self.weights)
            .filter(|(e, _)| e.distance > lo && e.distance <= hi && !exclude.contains(e.vertex))
            .map(|(_, w)| w)
            .sum::<f64>()
            .max(0.0))
    }

    /// `N̂(d) − N̂(d/(1+eps))`, clamped at zero.
    pub fn bucket_count(&self, d: f64, eps: f64, exclude: &FrozenSet) -> Result<f64> {
        let hi = self.hip_estimate(d, exclude)?;
        let lo = self.hip_estimate(d / (1.0 + eps), exclude)?;
        Ok((hi - lo).max(0.0))
    }

    pub fn contains(&self, vertex: VertexId) -> bool {
        self.entries.iter().any(|e| e.vertex == vertex)
    }
}

/// Keeps the entries whose rank is among the `k` smallest of all entries up
/// to them in canonical order, and computes HIP weights. Idempotent.
///
/// Duplicate vertices keep their shortest distance. Cleaning a `k`-sketch
/// with a smaller `k'` yields exactly the `k'`-sketch.
pub fn cleanup_ads(sketch: &Sketch, k: usize) -> Sketch {
    let mut entries = sketch.entries.clone();
    if !sketch.clean {
        entries.sort_by(|a, b| a.vertex.cmp(&b.vertex).then(a.distance.total_cmp(&b.distance)));
        entries.dedup_by_key(|e| e.vertex);
        entries.sort_by(AdsEntry::key_cmp);
    }
    let mut seen = BottomK::new(k);
    let mut kept = Vec::with_capacity(entries.len());
    let mut weights = Vec::with_capacity(entries.len());
    for e in entries {
        let threshold = seen.threshold();
        if e.rank < threshold {
            weights.push(if threshold.is_finite() { 1.0 / threshold } else { 1.0 });
            seen.push(e.rank);
            kept.push(e);
        }
    }
    Sketch {
        k,
        entries: kept,
        weights,
        clean: true,
    }
}
