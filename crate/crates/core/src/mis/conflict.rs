use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ServiceLayout, RESIDUAL_STEP};
use crate::bsp::{Engine, RunMetrics};
use crate::error::{Error, Result};
use crate::facloc::{nearest_sources, Assignment, Instance};
use crate::graph::{distances_from, Direction, Graph, VertexId};

/// A client joined to two opened facilities at the same step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictEdgeWitness {
    pub client: VertexId,
    pub facilities: (VertexId, VertexId),
    pub step: u32,
}

/// Explicit conflict graph over the opened facilities; vertex `i` of `graph`
/// is `facilities[i]`.
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    pub facilities: Vec<VertexId>,
    pub graph: Graph,
}

/// For every member, the clients joined to it in the service graph.
fn reached_clients(graph: &Graph, layout: &ServiceLayout, members: &[VertexId]) -> Vec<Vec<VertexId>> {
    members
        .par_iter()
        .map(|&f| match layout.facility_step[f as usize] {
            Some(step) if step != RESIDUAL_STEP => {
                let dist = distances_from(graph, f, Some(layout.radius(step)), Direction::Outgoing);
                dist.iter()
                    .enumerate()
                    .filter(|&(c, &d)| d.is_finite() && layout.client_step[c] == Some(step))
                    .map(|(c, _)| c as VertexId)
                    .collect()
            }
            _ => Vec::new(),
        })
        .collect()
}

/// For every client, the facilities among `members` joined to it.
fn service_lists(graph: &Graph, layout: &ServiceLayout, members: &[VertexId]) -> Vec<Vec<VertexId>> {
    let mut lists = vec![Vec::new(); graph.vertex_count()];
    for (&f, clients) in members.iter().zip(reached_clients(graph, layout, members)) {
        for c in clients {
            lists[c as usize].push(f);
        }
    }
    lists
}

/// Builds `H̄` explicitly with single-source traversals from every opened
/// facility.
pub fn materialize_conflict_graph(graph: &Graph, layout: &ServiceLayout) -> Result<ConflictGraph> {
    let facilities = layout.opened();
    let m = facilities.len();
    let words = m.div_ceil(64);
    let reached = reached_clients(graph, layout, &facilities);
    let mut member_bits = vec![0u64; graph.vertex_count() * words];
    for (i, clients) in reached.iter().enumerate() {
        for &c in clients {
            member_bits[c as usize * words + i / 64] |= 1 << (i % 64);
        }
    }
    let edges: Vec<(VertexId, VertexId, f64)> = reached
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, clients)| {
            let mut row = vec![0u64; words];
            for &c in clients {
                let bits = &member_bits[c as usize * words..(c as usize + 1) * words];
                row.iter_mut().zip(bits).for_each(|(r, b)| *r |= b);
            }
            let mut out = Vec::new();
            for (w, &word) in row.iter().enumerate() {
                let mut word = word;
                while word != 0 {
                    let j = w * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    if j > i {
                        out.push((i as VertexId, j as VertexId, 1.0));
                    }
                }
            }
            out
        })
        .collect();
    let graph = Graph::from_edges(m, edges, false, false)?;
    Ok(ConflictGraph { facilities, graph })
}

/// Every client that joins two members of `set` at the same step.
pub fn conflict_witnesses(graph: &Graph, layout: &ServiceLayout, set: &[VertexId]) -> Vec<ConflictEdgeWitness> {
    let mut out = Vec::new();
    for (c, list) in service_lists(graph, layout, set).into_iter().enumerate() {
        if list.len() >= 2 {
            let step = layout.client_step[c].expect("listed clients are frozen");
            out.push(ConflictEdgeWitness {
                client: c as VertexId,
                facilities: (list[0], list[1]),
                step,
            });
        }
    }
    out
}

/// Assigns every client to its nearest member of `selected` (ties to the
/// smaller id) with a vertex-centric multi-source relaxation.
pub fn finalize_assignment(
    graph: &Graph,
    instance: &Instance,
    selected: &[VertexId],
    engine: &Engine,
) -> Result<(Vec<Assignment>, RunMetrics)> {
    if selected.is_empty() {
        return Err(Error::validation("cannot assign clients to an empty facility set"));
    }
    let sources: Vec<_> = selected.iter().map(|&f| (f, 0.0)).collect();
    let (labels, metrics) = nearest_sources(graph, &sources, Direction::Outgoing, engine)?;
    let mut assignments = Vec::with_capacity(instance.client_count());
    for c in instance.clients() {
        let l = labels[c as usize].ok_or(Error::Infeasible { client: c })?;
        assignments.push(Assignment {
            client: c,
            facility: l.source,
            distance: l.distance,
        });
    }
    Ok((assignments, metrics))
}
