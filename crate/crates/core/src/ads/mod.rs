//! All-distances sketches and HIP neighborhood estimation.

mod build;
mod io;
mod sketch;

pub use build::{build_ads_bsp, build_ads_pruned, build_ads_sequential, build_exact_sketches};
pub use io::{load_sketches, save_sketches, SketchFormat};
pub use sketch::{cleanup_ads, AdsEntry, FrozenSet, Sketch};

use crate::graph::VertexId;

/// Pseudo-random rank of `u` in the open interval (0, 1).
///
/// The 53 high bits of a splitmix64 hash are centered in their bucket, so the
/// result is never 0 or 1.
pub fn hash_rank(u: VertexId, seed: u64) -> f64 {
    let x = splitmix64(splitmix64(seed) ^ u as u64);
    ((x >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Sketches of every vertex of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchSet {
    pub k: usize,
    pub seed: u64,
    pub sketches: Vec<Sketch>,
}

impl SketchSet {
    pub fn vertex_count(&self) -> usize {
        self.sketches.len()
    }

    pub fn get(&self, v: VertexId) -> &Sketch {
        &self.sketches[v as usize]
    }

    pub fn mean_size(&self) -> f64 {
        if self.sketches.is_empty() {
            return 0.0;
        }
        self.sketches.iter().map(Sketch::len).sum::<usize>() as f64 / self.sketches.len() as f64
    }

    /// Restricts every sketch to a smaller `k`.
    pub fn shrink(&self, k: usize) -> SketchSet {
        assert!(k <= self.k, "cannot grow a sketch from {} to {k}", self.k);
        SketchSet {
            k,
            seed: self.seed,
            sketches: self.sketches.iter().map(|s| cleanup_ads(s, k)).collect(),
        }
    }

    pub fn into_sketches(self) -> Vec<Sketch> {
        self.sketches
    }
}
