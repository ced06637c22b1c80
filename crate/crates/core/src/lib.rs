//! Vertex-centric bulk-synchronous graph engine and a three-phase facility
//! location pipeline built on it: all-distances sketches for neighborhood
//! estimation, parallel ball expansion to open facilities, and maximal
//! independent set selection over the implicit conflict graph.

pub mod ads;
pub mod bench;
pub mod bsp;
pub mod error;
pub mod facloc;
pub mod graph;
pub mod mis;
pub mod oracle;

pub use error::{Error, Result};
pub use graph::{Direction, Graph, VertexId};

/// Derives an independent seed for one component from a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    ads::splitmix64(ads::splitmix64(master) ^ stream.wrapping_mul(0xa076_1d64_78bd_642f))
}
