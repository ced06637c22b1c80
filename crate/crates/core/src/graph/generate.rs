//! Synthetic graph generators. All generators are bit-reproducible for a
//! fixed seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Uniform};

use super::{Graph, VertexId};
use crate::error::{Error, Result};

/// Forest Fire growth with geometric forward/backward burning.
///
/// Each new vertex picks one ambassador uniformly among the existing
/// vertices and burns recursively: from every burning vertex it follows a
/// geometric number of not-yet-burned out-links (mean `p_fw/(1-p_fw)`) and
/// in-links (mean `p_bw/(1-p_bw)`) of the graph grown so far. The new vertex
/// links to every burned vertex. Links are recorded as directed arcs while
/// growing; `directed = false` symmetrizes the result.
pub fn generate_forest_fire(n: usize, p_fw: f64, p_bw: f64, seed: u64, directed: bool) -> Result<Graph> {
    if n == 0 {
        return Err(Error::validation("forest fire needs at least one vertex"));
    }
    for (name, p) in [("forward", p_fw), ("backward", p_bw)] {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::validation(format!(
                "{name} burning probability must lie in [0, 1), got {p}"
            )));
        }
    }
    let fwd = Geometric::new(1.0 - p_fw).map_err(|e| Error::validation(e.to_string()))?;
    let bwd = Geometric::new(1.0 - p_bw).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out_adj: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let mut in_adj: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let mut burned_by: Vec<u32> = vec![u32::MAX; n];
    let mut queue: Vec<VertexId> = Vec::new();
    let mut candidates: Vec<VertexId> = Vec::new();

    for v in 1..n as VertexId {
        let ambassador = rng.random_range(0..v);
        burned_by[ambassador as usize] = v;
        queue.clear();
        queue.push(ambassador);
        let mut burned = vec![ambassador];
        let mut head = 0;
        while head < queue.len() {
            let cur = queue[head] as usize;
            head += 1;
            for (adj, dist) in [(&out_adj, &fwd), (&in_adj, &bwd)] {
                let want = dist.sample(&mut rng) as usize;
                if want == 0 {
                    continue;
                }
                candidates.clear();
                candidates.extend(adj[cur].iter().copied().filter(|&u| burned_by[u as usize] != v));
                let take = want.min(candidates.len());
                let (chosen, _) = candidates.partial_shuffle(&mut rng, take);
                for &u in chosen.iter() {
                    burned_by[u as usize] = v;
                    burned.push(u);
                    queue.push(u);
                }
            }
        }
        for u in burned {
            out_adj[v as usize].push(u);
            in_adj[u as usize].push(v);
        }
    }

    let edges = out_adj
        .iter()
        .enumerate()
        .flat_map(|(u, targets)| targets.iter().map(move |&t| (u as VertexId, t, 1.0)));
    Graph::from_edges(n, edges, directed, false)
}

/// R-MAT sampling of `edge_samples` arcs on `2^scale` vertices.
///
/// Self-loops are dropped and duplicates collapsed, so the final edge count is
/// at most `edge_samples`.
pub fn generate_rmat(scale: u32, edge_samples: usize, probs: [f64; 4], seed: u64, directed: bool) -> Result<Graph> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::validation(format!(
            "R-MAT probabilities must be in [0, 1] and sum to 1, got {probs:?} (sum {sum})"
        )));
    }
    if scale > 31 {
        return Err(Error::validation(format!("R-MAT scale {scale} exceeds 31")));
    }
    let n = 1usize << scale;
    let [a, b, c, _] = probs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(edge_samples);
    for _ in 0..edge_samples {
        let (mut u, mut v) = (0u32, 0u32);
        for _ in 0..scale {
            let r: f64 = rng.random();
            let (du, dv) = if r < a {
                (0, 0)
            } else if r < a + b {
                (0, 1)
            } else if r < a + b + c {
                (1, 0)
            } else {
                (1, 1)
            };
            u = (u << 1) | du;
            v = (v << 1) | dv;
        }
        edges.push((u, v, 1.0));
    }
    Graph::from_edges(n, edges, directed, false)
}

/// Returns a weighted copy of `graph` with i.i.d. uniform weights in
/// `[lo, hi]`; both directions of an undirected edge share one weight.
pub fn assign_uniform_weights(graph: &Graph, lo: f64, hi: f64, seed: u64) -> Result<Graph> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::validation(format!(
            "weight interval must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let dist = Uniform::new_inclusive(lo, hi).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = graph
        .edges_once()
        .map(|(u, v, _)| (u, v, dist.sample(&mut rng)))
        .collect();
    Graph::from_edges(graph.vertex_count(), edges, graph.is_directed(), true)
}

/// Like [`assign_uniform_weights`] but draws integers in `[lo, hi]`, which
/// keeps every path length exactly representable.
pub fn assign_integer_weights(graph: &Graph, lo: u32, hi: u32, seed: u64) -> Result<Graph> {
    if lo == 0 || lo > hi {
        return Err(Error::validation(format!(
            "weight interval must satisfy 1 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = graph
        .edges_once()
        .map(|(u, v, _)| (u, v, rng.random_range(lo..=hi) as f64))
        .collect();
    Graph::from_edges(graph.vertex_count(), edges, graph.is_directed(), true)
}

/// Undirected path `0 - 1 - ... - (n-1)`; `weights[i]` is the weight of edge
/// `(i, i+1)` when given.
pub fn path_graph(n: usize, weights: Option<&[f64]>) -> Graph {
    let edges = (1..n).map(|i| {
        let w = weights.map_or(1.0, |ws| ws[i - 1]);
        ((i - 1) as VertexId, i as VertexId, w)
    });
    Graph::from_edges(n, edges, false, weights.is_some()).expect("path edges are valid")
}

/// Undirected unit star with center 0 and leaves `1..n`.
pub fn star_graph(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (0, i as VertexId, 1.0)), false, false).expect("star edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forest_fire_single_vertex() {
        let g = generate_forest_fire(1, 0.3, 0.4, 7, false).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn forest_fire_is_reproducible_and_connected() {
        let a = generate_forest_fire(500, 0.3, 0.4, 11, false).unwrap();
        let b = generate_forest_fire(500, 0.3, 0.4, 11, false).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = generate_forest_fire(500, 0.3, 0.4, 12, false).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
        let levels = crate::graph::bfs_levels(&a, 0, crate::graph::Direction::Outgoing);
        assert!(levels.iter().all(|&l| l != u32::MAX));
    }

    #[test]
    fn forest_fire_rejects_certain_burning() {
        assert!(generate_forest_fire(10, 1.0, 0.4, 1, false).is_err());
        assert!(generate_forest_fire(10, 0.3, 1.2, 1, false).is_err());
    }

    #[test]
    fn rmat_base_case_and_validation() {
        let g = generate_rmat(0, 0, [0.45, 0.15, 0.15, 0.25], 1, false).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(generate_rmat(4, 10, [0.5, 0.2, 0.2, 0.2], 1, false).is_err());
    }

    #[test]
    fn rmat_is_reproducible() {
        let p = [0.45, 0.15, 0.15, 0.25];
        let a = generate_rmat(10, 5000, p, 3, false).unwrap();
        let b = generate_rmat(10, 5000, p, 3, false).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.vertex_count(), 1024);
        assert!(a.edge_count() <= 5000 && a.edge_count() > 1000);
    }

    #[test]
    fn degenerate_weight_interval() {
        let g = star_graph(5);
        let w = assign_uniform_weights(&g, 5.0, 5.0, 1).unwrap();
        assert!(w.arcs().all(|(_, _, x)| x == 5.0));
        assert!(assign_uniform_weights(&g, 0.0, 5.0, 1).is_err());
        assert!(assign_uniform_weights(&g, 6.0, 5.0, 1).is_err());
    }

    #[test]
    fn integer_weights_stay_in_range() {
        let g = generate_forest_fire(300, 0.3, 0.4, 2, false).unwrap();
        let w = assign_integer_weights(&g, 1, 100, 2).unwrap();
        assert_eq!(w.edge_count(), g.edge_count());
        assert!(w.arcs().all(|(_, _, x)| x.fract() == 0.0 && (1.0..=100.0).contains(&x)));
        assert!(assign_integer_weights(&g, 0, 3, 1).is_err());
    }

    #[test]
    fn undirected_weights_are_symmetric() {
        let tri = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], false, false).unwrap();
        let w = assign_uniform_weights(&tri, 1.0, 100.0, 9).unwrap();
        for (u, v, x) in w.arcs() {
            assert_eq!(w.arc_weight(v, u), Some(x));
        }
    }

    #[test]
    fn uniform_weights_have_expected_mean() {
        let g = generate_rmat(14, 120_000, [0.45, 0.15, 0.15, 0.25], 5, false).unwrap();
        assert!(g.edge_count() >= 100_000, "{}", g.edge_count());
        let w = assign_uniform_weights(&g, 1.0, 100.0, 5).unwrap();
        let mean = w.edges_once().map(|e| e.2).sum::<f64>() / w.edge_count() as f64;
        assert!((mean - 50.5).abs() / 50.5 < 0.01, "mean {mean}");
    }
}
