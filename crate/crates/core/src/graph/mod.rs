//! Immutable compressed-sparse-row graphs, ingestion, synthetic generators and
//! shortest-path primitives shared by the rest of the crate.

mod generate;
mod io;
mod paths;

pub use generate::{
    assign_integer_weights, assign_uniform_weights, generate_forest_fire, generate_rmat, path_graph, star_graph,
};
pub use io::{load_edge_list, parse_edge_list, write_edge_list, write_id_dictionary, IdMap, LoadedGraph};
pub use paths::{bfs_levels, distances_from, multi_source_nearest, single_source_distances, Direction, NearestSource};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense vertex identifier in `[0, n)`.
pub type VertexId = u32;

/// A weighted or unweighted (di)graph in CSR form.
///
/// Undirected graphs store every edge in both directions; `edge_count`
/// reports undirected edges while `arc_count` reports stored arcs. Directed
/// graphs additionally keep the transposed adjacency so that programs can walk
/// incoming arcs.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    directed: bool,
    weighted: bool,
    out_offsets: Vec<usize>,
    out_targets: Vec<VertexId>,
    out_weights: Vec<f64>,
    reverse: Option<Adjacency>,
}

#[derive(Clone, Debug)]
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    weights: Vec<f64>,
}

impl Adjacency {
    fn from_sorted(n: usize, arcs: &[(VertexId, VertexId, f64)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _, _) in arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Adjacency {
            offsets,
            targets: arcs.iter().map(|a| a.1).collect(),
            weights: arcs.iter().map(|a| a.2).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph from an arbitrary arc list.
    ///
    /// Self-loops are dropped, undirected input is symmetrized and parallel
    /// arcs collapse to the minimum weight. Unweighted graphs ignore the
    /// supplied weights and store 1.0.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>,
        directed: bool,
        weighted: bool,
    ) -> Result<Self> {
        let mut arcs: Vec<(VertexId, VertexId, f64)> = Vec::new();
        for (u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            let w = if weighted { w } else { 1.0 };
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            if u == v {
                continue;
            }
            arcs.push((u, v, w));
            if !directed {
                arcs.push((v, u, w));
            }
        }
        arcs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        arcs.dedup_by(|later, first| later.0 == first.0 && later.1 == first.1);

        let out = Adjacency::from_sorted(n, &arcs);
        let reverse = if directed {
            let mut rev: Vec<_> = arcs.iter().map(|&(u, v, w)| (v, u, w)).collect();
            rev.sort_by_key(|&(u, v, _)| (u, v));
            Some(Adjacency::from_sorted(n, &rev))
        } else {
            None
        };
        Ok(Graph {
            n,
            directed,
            weighted,
            out_offsets: out.offsets,
            out_targets: out.targets,
            out_weights: out.weights,
            reverse,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of edges: undirected edges for undirected graphs, arcs otherwise.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.out_targets.len()
        } else {
            self.out_targets.len() / 2
        }
    }

    pub fn arc_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        0..self.n as VertexId
    }

    #[inline]
    pub fn out_degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    /// Outgoing arcs of `v` as `(target, weight)`.
    #[inline]
    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let v = v as usize;
        let range = self.out_offsets[v]..self.out_offsets[v + 1];
        self.out_targets[range.clone()]
            .iter()
            .copied()
            .zip(self.out_weights[range].iter().copied())
    }

    /// Incoming arcs of `v` as `(source, weight)`. Same as `out_edges` when
    /// the graph is undirected.
    #[inline]
    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let (offsets, targets, weights) = match &self.reverse {
            Some(r) => (&r.offsets, &r.targets, &r.weights),
            None => (&self.out_offsets, &self.out_targets, &self.out_weights),
        };
        let v = v as usize;
        let range = offsets[v]..offsets[v + 1];
        targets[range.clone()]
            .iter()
            .copied()
            .zip(weights[range].iter().copied())
    }

    /// Arcs leaving `v` in the given direction.
    #[inline]
    pub fn edges(&self, v: VertexId, direction: Direction) -> Box<dyn Iterator<Item = (VertexId, f64)> + '_> {
        match direction {
            Direction::Outgoing => Box::new(self.out_edges(v)),
            Direction::Incoming => Box::new(self.in_edges(v)),
        }
    }

    /// Weight of the arc `u -> v`, if present.
    pub fn arc_weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        let s = self.out_offsets[u as usize];
        let e = self.out_offsets[u as usize + 1];
        self.out_targets[s..e]
            .binary_search(&v)
            .ok()
            .map(|i| self.out_weights[s + i])
    }

    /// All stored arcs in CSR order.
    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.vertices()
            .flat_map(move |u| self.out_edges(u).map(move |(v, w)| (u, v, w)))
    }

    /// Edges, listing each undirected edge once with `u < v`.
    pub fn edges_once(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        let directed = self.directed;
        self.arcs().filter(move |&(u, v, _)| directed || u < v)
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.out_weights.iter().copied().reduce(f64::min)
    }

    pub fn mean_weight(&self) -> Option<f64> {
        if self.out_weights.is_empty() {
            None
        } else {
            Some(self.out_weights.iter().sum::<f64>() / self.out_weights.len() as f64)
        }
    }

    /// Content hash of the graph, used to key on-disk oracle caches.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        h.update([self.directed as u8, self.weighted as u8]);
        for (u, v, w) in self.arcs() {
            h.update(u.to_le_bytes());
            h.update(v.to_le_bytes());
            h.update(w.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
