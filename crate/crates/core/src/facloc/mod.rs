//! Uncapacitated facility location on graphs: ball expansion over a
//! geometric radius ladder, client freezing, residual assignment and
//! selection of an independent set of the opened facilities.

mod gamma;
mod nearest;
mod opening;
mod solve;

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

pub use gamma::compute_gamma;
pub use nearest::nearest_sources;
pub use opening::{run_opening, ClientStatus, LoopExit, OpeningOutcome};
pub use solve::{
    freeze_histogram, solve, solve_with_sketches, Assignment, CountMode, Counters, SketchBuilder, Solution,
    SolveConfig, SolveResult,
};

/// Facility/client roles and opening costs over the vertices of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    is_facility: Vec<bool>,
    is_client: Vec<bool>,
    cost: Vec<f64>,
}

impl Instance {
    /// Validates the role vectors and costs. `cost` is only meaningful at
    /// facilities; other entries are ignored.
    pub fn new(is_facility: Vec<bool>, is_client: Vec<bool>, cost: Vec<f64>) -> Result<Self> {
        let n = is_facility.len();
        if is_client.len() != n || cost.len() != n {
            return Err(Error::validation(
                "role and cost vectors must have one entry per vertex",
            ));
        }
        if !is_facility.iter().any(|&f| f) {
            return Err(Error::validation("instance has no facility"));
        }
        if !is_client.iter().any(|&c| c) {
            return Err(Error::validation("instance has no client"));
        }
        for (v, (&f, &c)) in is_facility.iter().zip(&cost).enumerate() {
            if f && !(c.is_finite() && c >= 0.0) {
                return Err(Error::validation(format!("facility {v} has invalid cost {c}")));
            }
        }
        Ok(Instance {
            is_facility,
            is_client,
            cost,
        })
    }

    /// Every vertex is both a facility and a client, all at cost `cost`.
    pub fn uniform(n: usize, cost: f64) -> Result<Self> {
        Self::new(vec![true; n], vec![true; n], vec![cost; n])
    }

    /// Uniform instance at [`default_uniform_cost`].
    pub fn with_default_costs(graph: &Graph) -> Result<Self> {
        Self::uniform(graph.vertex_count(), default_uniform_cost(graph))
    }

    /// Reads `vertex cost` lines (`#` starts a comment). Listed vertices become
    /// facilities with the given cost; every vertex is a client.
    pub fn from_cost_file(path: &Path, n: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_costs(std::io::BufReader::new(file), n)
    }

    pub fn parse_costs(reader: impl BufRead, n: usize) -> Result<Self> {
        Self::parse_costs_mapped(reader, n, |v| (v < n as u64).then_some(v as VertexId))
    }

    /// Like [`Instance::parse_costs`], translating the listed ids with `map`
    /// (e.g. external ids of a loaded edge list).
    pub fn parse_costs_mapped(reader: impl BufRead, n: usize, map: impl Fn(u64) -> Option<VertexId>) -> Result<Self> {
        let mut is_facility = vec![false; n];
        let mut cost = vec![0.0; n];
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let mut fields = body.split_whitespace();
            let (Some(v), Some(c), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected `vertex cost`, got `{body}`")));
            };
            let id: u64 = v.parse().map_err(|_| parse_err(format!("bad vertex id `{v}`")))?;
            let c: f64 = c.parse().map_err(|_| parse_err(format!("bad cost `{c}`")))?;
            let v = map(id)
                .filter(|&v| (v as usize) < n)
                .ok_or_else(|| parse_err(format!("unknown vertex {id} (n = {n})")))? as usize;
            is_facility[v] = true;
            cost[v] = c;
        }
        Self::new(is_facility, vec![true; n], cost)
    }

    pub fn vertex_count(&self) -> usize {
        self.is_facility.len()
    }

    #[inline]
    pub fn is_facility(&self, v: VertexId) -> bool {
        self.is_facility[v as usize]
    }

    #[inline]
    pub fn is_client(&self, v: VertexId) -> bool {
        self.is_client[v as usize]
    }

    #[inline]
    pub fn cost(&self, v: VertexId) -> f64 {
        self.cost[v as usize]
    }

    pub fn client_flags(&self) -> &[bool] {
        &self.is_client
    }

    pub fn facilities(&self) -> Vec<VertexId> {
        flagged(&self.is_facility)
    }

    pub fn clients(&self) -> Vec<VertexId> {
        flagged(&self.is_client)
    }

    pub fn facility_count(&self) -> usize {
        self.is_facility.iter().filter(|&&f| f).count()
    }

    pub fn client_count(&self) -> usize {
        self.is_client.iter().filter(|&&c| c).count()
    }

    /// `|F|·|C|`.
    pub fn pair_count(&self) -> f64 {
        self.facility_count() as f64 * self.client_count() as f64
    }

    pub(crate) fn check_graph(&self, graph: &Graph) -> Result<()> {
        if graph.vertex_count() != self.vertex_count() {
            return Err(Error::validation(format!(
                "instance covers {} vertices but the graph has {}",
                self.vertex_count(),
                graph.vertex_count()
            )));
        }
        Ok(())
    }
}

fn flagged(flags: &[bool]) -> Vec<VertexId> {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(v, _)| v as VertexId)
        .collect()
}

/// Mean edge weight times `⌈log₂ n⌉` (mean weight 1 on edgeless graphs).
pub fn default_uniform_cost(graph: &Graph) -> f64 {
    let n = graph.vertex_count().max(1) as f64;
    graph.mean_weight().unwrap_or(1.0) * n.log2().ceil()
}

/// The geometric radius ladder `α_j = α₀(1+ε)^j` with `α₀ = γ(1+ε)/m²` and
/// `m = |F|·|C|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub epsilon: f64,
    pub gamma: f64,
    pub pair_count: f64,
    pub alpha0: f64,
}

impl RadiusSchedule {
    pub fn new(epsilon: f64, gamma: f64, pair_count: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::validation(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0 && pair_count >= 1.0) {
            return Err(Error::validation(format!(
                "invalid schedule inputs gamma={gamma} pairs={pair_count}"
            )));
        }
        Ok(RadiusSchedule {
            epsilon,
            gamma,
            pair_count,
            alpha0: gamma * (1.0 + epsilon) / (pair_count * pair_count),
        })
    }

    /// Ladder value at step `j`; recomputed identically wherever needed.
    #[inline]
    pub fn alpha(&self, step: u32) -> f64 {
        self.alpha0 * (1.0 + self.epsilon).powi(step as i32)
    }

    /// `(1+ε)α_j`: the freeze and conflict radius of step `j`.
    #[inline]
    pub fn reach(&self, step: u32) -> f64 {
        (1.0 + self.epsilon) * self.alpha(step)
    }

    pub fn cap(&self) -> f64 {
        self.gamma * (1.0 + self.epsilon)
    }

    /// True when step `j` lies past the cap, or the ladder is degenerate.
    pub fn beyond_cap(&self, step: u32) -> bool {
        (self.alpha0 == 0.0 && step > 0) || self.alpha(step) > self.cap() * (1.0 + 1e-12)
    }
}
