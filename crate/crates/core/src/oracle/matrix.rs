use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facloc::Instance;
use crate::graph::{distances_from, Direction, Graph, VertexId};

/// Default vertex limit for dense distance matrices.
pub const DEFAULT_MATRIX_LIMIT: usize = 20_000;

/// Exact shortest-path distances `d(f → c)` from every facility to every
/// client, stored facility-major. Unreachable pairs are `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    facilities: Vec<VertexId>,
    clients: Vec<VertexId>,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Runs one truncation-free traversal per facility (in parallel).
    pub fn compute(graph: &Graph, facilities: &[VertexId], clients: &[VertexId], limit: usize) -> Result<Self> {
        let n = graph.vertex_count();
        if n > limit {
            return Err(Error::Refused(format!(
                "dense distance matrix over {n} vertices exceeds the limit of {limit}"
            )));
        }
        if let Some(&v) = facilities.iter().chain(clients).find(|&&v| v as usize >= n) {
            return Err(Error::validation(format!("vertex {v} out of range")));
        }
        let rows: Vec<Vec<f64>> = facilities
            .par_iter()
            .map(|&f| {
                let dist = distances_from(graph, f, None, Direction::Outgoing);
                clients.iter().map(|&c| dist[c as usize]).collect()
            })
            .collect();
        Ok(DistanceMatrix {
            facilities: facilities.to_vec(),
            clients: clients.to_vec(),
            data: rows.concat(),
        })
    }

    /// Matrix over the facilities and clients of `instance`.
    pub fn for_instance(graph: &Graph, instance: &Instance, limit: usize) -> Result<Self> {
        instance.check_graph(graph)?;
        Self::compute(graph, &instance.facilities(), &instance.clients(), limit)
    }

    pub fn facilities(&self) -> &[VertexId] {
        &self.facilities
    }

    pub fn clients(&self) -> &[VertexId] {
        &self.clients
    }

    /// Distances from facility index `i` to every client, in client order.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.clients.len();
        &self.data[i * m..(i + 1) * m]
    }

    /// Distance from facility index `i` to client index `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.clients.len() + j]
    }
}

/// All-pairs matrix: every vertex is both a facility and a client, so
/// `get(u, v) = d(u, v)`.
pub fn all_pairs(graph: &Graph, limit: usize) -> Result<DistanceMatrix> {
    let all: Vec<VertexId> = graph.vertices().collect();
    DistanceMatrix::compute(graph, &all, &all, limit)
}
