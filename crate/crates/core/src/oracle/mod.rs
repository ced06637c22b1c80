//! Reference implementations used to validate the vertex-centric solver:
//! exact ball counts, dense distance matrices, exhaustive optimum, the
//! matrix-based ball-expansion algorithm, a local-search baseline and an
//! objective audit.

mod exhaustive;
mod local_search;
mod matrix;
mod pram;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ads::FrozenSet;
use crate::error::{Error, Result};
use crate::facloc::{Assignment, Counters, Instance, SolveResult};
use crate::graph::{distances_from, multi_source_nearest, Direction, Graph, VertexId};

pub use exhaustive::{brute_force_opt, Optimum, EXHAUSTIVE_LIMIT};
pub use local_search::local_search_baseline;
pub use matrix::{all_pairs, DistanceMatrix, DEFAULT_MATRIX_LIMIT};
pub use pram::{pram_facility_location, pram_facility_location_traced, PramTrace};

/// `|{u : d(v,u) ≤ d, u ∉ exclude}|` by a truncated traversal.
pub fn exact_neighborhood(graph: &Graph, v: VertexId, d: f64, exclude: &FrozenSet) -> usize {
    distances_from(graph, v, Some(d), Direction::Outgoing)
        .iter()
        .enumerate()
        .filter(|&(u, &du)| du <= d && !exclude.contains(u as VertexId))
        .count()
}

/// Assigns every client to its nearest facility among matrix rows
/// `selected` (ties to the smaller facility id) and packages the result.
pub(crate) fn result_from_rows(
    matrix: &DistanceMatrix,
    instance: &Instance,
    selected: &[usize],
    counters: Counters,
) -> Result<SolveResult> {
    if selected.is_empty() {
        return Err(Error::validation("empty facility selection"));
    }
    let mut rows = selected.to_vec();
    rows.sort_unstable_by_key(|&i| matrix.facilities()[i]);
    let mut assignments = Vec::with_capacity(matrix.clients().len());
    for (j, &c) in matrix.clients().iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for &i in &rows {
            let d = matrix.get(i, j);
            if d.is_finite() && best.is_none_or(|(b, _)| d < b) {
                best = Some((d, i));
            }
        }
        let (distance, i) = best.ok_or(Error::Infeasible { client: c })?;
        assignments.push(Assignment {
            client: c,
            facility: matrix.facilities()[i],
            distance,
        });
    }
    assignments.sort_by_key(|a| a.client);
    let facilities: Vec<VertexId> = rows.iter().map(|&i| matrix.facilities()[i]).collect();
    let opening_cost: f64 = facilities.iter().map(|&f| instance.cost(f)).sum();
    let service_cost: f64 = assignments.iter().map(|a| a.distance).sum();
    Ok(SolveResult {
        facilities,
        assignments,
        opening_cost,
        service_cost,
        objective: opening_cost + service_cost,
        counters,
    })
}

/// Errors unless every client reaches some facility.
pub(crate) fn check_feasible(matrix: &DistanceMatrix) -> Result<()> {
    for (j, &c) in matrix.clients().iter().enumerate() {
        if !(0..matrix.facilities().len()).any(|i| matrix.get(i, j).is_finite()) {
            return Err(Error::Infeasible { client: c });
        }
    }
    Ok(())
}

/// Independent recomputation of a solution's objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub opening_cost: f64,
    /// `Σ_c d(c, S)` from a fresh multi-source traversal.
    pub service_cost: f64,
    pub objective: f64,
    /// Clients whose recorded distance differs from `d(c, S)`.
    pub mismatched: Vec<VertexId>,
}

/// Recomputes `Σ_{f∈S} c(f) + Σ_c d(c, S)` from scratch and flags clients
/// whose recorded distance is not the true distance to `S`.
pub fn evaluate_cost(
    graph: &Graph,
    instance: &Instance,
    selected: &[VertexId],
    assignments: &[Assignment],
) -> Result<Audit> {
    instance.check_graph(graph)?;
    if selected.is_empty() {
        return Err(Error::validation("facility set is empty"));
    }
    let n = graph.vertex_count();
    let mut member = vec![false; n];
    for &f in selected {
        if f as usize >= n || !instance.is_facility(f) {
            return Err(Error::validation(format!("{f} is not a facility")));
        }
        member[f as usize] = true;
    }
    let mut assigned = vec![false; n];
    for a in assignments {
        if a.client as usize >= n || !instance.is_client(a.client) {
            return Err(Error::validation(format!("{} is not a client", a.client)));
        }
        if !member[a.facility as usize] {
            return Err(Error::validation(format!(
                "client {} is assigned to {}, which is not selected",
                a.client, a.facility
            )));
        }
        if std::mem::replace(&mut assigned[a.client as usize], true) {
            return Err(Error::validation(format!("client {} is assigned twice", a.client)));
        }
    }
    if let Some(c) = instance.clients().into_iter().find(|&c| !assigned[c as usize]) {
        return Err(Error::validation(format!("client {c} is unassigned")));
    }
    let sources: Vec<_> = selected.iter().map(|&f| (f, 0.0)).collect();
    let nearest = multi_source_nearest(graph, &sources, Direction::Outgoing);
    let mut service_cost = 0.0;
    let mut mismatched = Vec::new();
    for a in assignments {
        let d = nearest[a.client as usize]
            .ok_or(Error::Infeasible { client: a.client })?
            .distance;
        service_cost += d;
        if (a.distance - d).abs() > 1e-9 * d.max(1.0) {
            mismatched.push(a.client);
        }
    }
    mismatched.sort_unstable();
    let mut opening_cost = 0.0;
    let mut seen = vec![false; n];
    for &f in selected {
        if !std::mem::replace(&mut seen[f as usize], true) {
            opening_cost += instance.cost(f);
        }
    }
    Ok(Audit {
        opening_cost,
        service_cost,
        objective: opening_cost + service_cost,
        mismatched,
    })
}

/// Hex digest of a graph fingerprint plus any serializable parameters.
pub fn cache_key(graph: &Graph, params: &impl Serialize) -> Result<String> {
    let mut h = Sha256::new();
    h.update(graph.fingerprint().as_bytes());
    h.update(serde_json::to_vec(params)?);
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Returns the JSON value stored under `dir/key.json`, or computes, stores
/// and returns it.
pub fn cached<T: Serialize + DeserializeOwned>(
    dir: &Path,
    key: &str,
    compute: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let path = dir.join(format!("{key}.json"));
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(value) = serde_json::from_slice(&bytes) {
            return Ok(value);
        }
    }
    let value = compute()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_vec(&value)?).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(value)
}
