//! Maximal independent sets: the greedy rule on the implicit conflict graph
//! of opened facilities, explicit-graph greedy and Luby variants, and a
//! verifier.

mod conflict;
mod explicit;
mod implicit;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bsp::RunMetrics;
use crate::facloc::{ClientStatus, OpeningOutcome, RadiusSchedule};
use crate::graph::{Graph, VertexId};

pub use conflict::{
    conflict_witnesses, finalize_assignment, materialize_conflict_graph, ConflictEdgeWitness, ConflictGraph,
};
pub use explicit::{greedy_mis_explicit, luby_mis};
pub use implicit::greedy_mis_implicit;

/// Step marker for facilities and clients that take part in no conflict:
/// fallback-opened facilities and residually assigned clients.
pub const RESIDUAL_STEP: u32 = u32::MAX;

/// Which selection runs after the ladder loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MisStrategy {
    #[default]
    Greedy,
    Luby,
}

/// Ladder steps of opened facilities and frozen clients; they define the
/// service graph `H` (client `c` and facility `f` are joined when their steps
/// match and `d(f, c) ≤ (1+ε)α_step`) and thereby the conflict graph `H̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct ServiceLayout {
    pub schedule: RadiusSchedule,
    pub facility_step: Vec<Option<u32>>,
    pub client_step: Vec<Option<u32>>,
}

impl ServiceLayout {
    pub fn from_opening(outcome: &OpeningOutcome) -> Self {
        ServiceLayout {
            schedule: outcome.schedule,
            facility_step: outcome.open_step.clone(),
            client_step: outcome
                .client_status
                .iter()
                .map(|s| match s {
                    ClientStatus::Frozen { step } => Some(*step),
                    _ => None,
                })
                .collect(),
        }
    }

    pub fn opened(&self) -> Vec<VertexId> {
        self.facility_step
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .map(|(v, _)| v as VertexId)
            .collect()
    }

    /// Broadcast radius of a step; zero for the residual marker.
    pub fn radius(&self, step: u32) -> f64 {
        if step == RESIDUAL_STEP {
            0.0
        } else {
            self.schedule.reach(step)
        }
    }
}

/// Selected vertices and cost counters of one MIS run.
#[derive(Clone, Debug, PartialEq)]
pub struct MisRun {
    /// Sorted ids.
    pub selected: Vec<VertexId>,
    pub rounds: u32,
    pub metrics: RunMetrics,
}

/// Random priorities `π(v)` uniform in `[1, n³]` for every candidate (0 for
/// the rest). Colliding values are re-drawn once; any collision left is
/// broken by vertex id wherever priorities are compared.
pub fn draw_priorities(candidates: &[VertexId], n: usize, seed: u64) -> Vec<u64> {
    let top = (n.max(1) as u128).pow(3).min(u64::MAX as u128) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi = vec![0u64; n];
    for &v in candidates {
        pi[v as usize] = rng.random_range(1..=top);
    }
    let mut by_value: Vec<(u64, VertexId)> = candidates.iter().map(|&v| (pi[v as usize], v)).collect();
    by_value.sort_unstable();
    let colliding: Vec<VertexId> = by_value
        .iter()
        .enumerate()
        .filter(|&(i, &(p, _))| (i > 0 && by_value[i - 1].0 == p) || (i + 1 < by_value.len() && by_value[i + 1].0 == p))
        .map(|(_, &(_, v))| v)
        .collect();
    for v in colliding {
        pi[v as usize] = rng.random_range(1..=top);
    }
    pi
}

/// Result of [`verify_mis`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MisVerdict {
    Valid,
    /// Two selected vertices share an arc.
    Adjacent(VertexId, VertexId),
    /// An unselected vertex has no selected neighbor.
    Uncovered(VertexId),
}

/// Checks independence and maximality, treating arcs as undirected.
pub fn verify_mis(graph: &Graph, selected: &[VertexId]) -> MisVerdict {
    let n = graph.vertex_count();
    let mut inside = vec![false; n];
    for &v in selected {
        inside[v as usize] = true;
    }
    let mut covered = inside.clone();
    for (u, v, _) in graph.arcs() {
        if u == v {
            continue;
        }
        if inside[u as usize] && inside[v as usize] {
            return MisVerdict::Adjacent(u.min(v), u.max(v));
        }
        if inside[u as usize] {
            covered[v as usize] = true;
        }
        if inside[v as usize] {
            covered[u as usize] = true;
        }
    }
    match covered.iter().position(|&c| !c) {
        Some(v) => MisVerdict::Uncovered(v as VertexId),
        None => MisVerdict::Valid,
    }
}
