use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;

use super::sketch::{cleanup_ads, AdsEntry, BottomK, Sketch};
use super::{hash_rank, SketchSet};
use crate::bsp::{Aggregators, Engine, NoMaster, RunMetrics, RunStatus, VertexContext, VertexProgram};
use crate::error::{Error, Result};
use crate::graph::{distances_from, Direction, Graph, VertexId};

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::Validation("sketch parameter k must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn reachable_in_order(graph: &Graph, v: VertexId) -> Vec<(f64, VertexId)> {
    let dist = distances_from(graph, v, None, Direction::Outgoing);
    let mut order: Vec<(f64, VertexId)> = dist
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(u, &d)| (d, u as VertexId))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order
}

/// Reference construction: for every vertex, scan all reachable vertices in
/// canonical order and keep those whose rank beats the current bottom-k.
/// Costs one full traversal per vertex.
pub fn build_ads_sequential(graph: &Graph, k: usize, seed: u64) -> Result<SketchSet> {
    check_k(k)?;
    let sketches = (0..graph.vertex_count() as VertexId)
        .into_par_iter()
        .map(|v| {
            let mut bottom = BottomK::new(k);
            let mut entries = Vec::new();
            for (distance, u) in reachable_in_order(graph, v) {
                let rank = hash_rank(u, seed);
                if bottom.admits(rank) {
                    entries.push(AdsEntry {
                        vertex: u,
                        rank,
                        distance,
                    });
                    bottom.push(rank);
                }
            }
            cleanup_ads(&Sketch::from_raw(k, entries), k)
        })
        .collect();
    Ok(SketchSet { k, seed, sketches })
}

/// Sketches holding every reachable vertex with weight 1; queries on them
/// return exact ball counts.
pub fn build_exact_sketches(graph: &Graph) -> SketchSet {
    let k = graph.vertex_count().max(1);
    let sketches = (0..graph.vertex_count() as VertexId)
        .into_par_iter()
        .map(|v| {
            let entries = reachable_in_order(graph, v)
                .into_iter()
                .map(|(distance, u)| AdsEntry {
                    vertex: u,
                    rank: hash_rank(u, 0),
                    distance,
                })
                .collect();
            cleanup_ads(&Sketch::from_raw(k, entries), k)
        })
        .collect();
    SketchSet { k, seed: 0, sketches }
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, VertexId);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pruned construction: sources are processed by increasing rank, and each
/// runs a backward search that stops at vertices whose sketch rejects it.
/// Produces exactly the sketches of [`build_ads_sequential`].
pub fn build_ads_pruned(graph: &Graph, k: usize, seed: u64) -> Result<SketchSet> {
    check_k(k)?;
    let n = graph.vertex_count();
    let ranks: Vec<f64> = (0..n as VertexId).map(|u| hash_rank(u, seed)).collect();
    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    order.sort_by(|&a, &b| ranks[a as usize].total_cmp(&ranks[b as usize]).then(a.cmp(&b)));

    // Per vertex: canonical keys of accepted entries, kept sorted.
    let mut keys: Vec<Vec<(f64, VertexId)>> = vec![Vec::new(); n];
    let mut dist = vec![f64::INFINITY; n];
    let mut seen = vec![u32::MAX; n];
    let mut done = vec![u32::MAX; n];
    let mut heap = BinaryHeap::new();
    let mut queue = VecDeque::new();

    // Inserts `u` into the sketch of `v` if fewer than k earlier keys exist.
    let accept = |keys: &mut Vec<Vec<(f64, VertexId)>>, v: VertexId, d: f64, u: VertexId| -> bool {
        let list = &mut keys[v as usize];
        let pos = list.partition_point(|&(dw, w)| dw < d || (dw == d && w < u));
        if pos < k {
            list.insert(pos, (d, u));
            true
        } else {
            false
        }
    };

    for (stamp, &u) in order.iter().enumerate() {
        let stamp = stamp as u32;
        seen[u as usize] = stamp;
        dist[u as usize] = 0.0;
        if graph.is_weighted() {
            heap.push(Item(0.0, u));
            while let Some(Item(d, v)) = heap.pop() {
                if done[v as usize] == stamp || d > dist[v as usize] {
                    continue;
                }
                done[v as usize] = stamp;
                if !accept(&mut keys, v, d, u) {
                    continue;
                }
                for (x, w) in graph.edges(v, Direction::Incoming) {
                    let nd = d + w;
                    if seen[x as usize] != stamp || nd < dist[x as usize] {
                        seen[x as usize] = stamp;
                        dist[x as usize] = nd;
                        heap.push(Item(nd, x));
                    }
                }
            }
        } else {
            queue.push_back(u);
            while let Some(v) = queue.pop_front() {
                let d = dist[v as usize];
                if !accept(&mut keys, v, d, u) {
                    continue;
                }
                for (x, _) in graph.edges(v, Direction::Incoming) {
                    if seen[x as usize] != stamp {
                        seen[x as usize] = stamp;
                        dist[x as usize] = d + 1.0;
                        queue.push_back(x);
                    }
                }
            }
        }
    }

    let sketches = keys
        .into_par_iter()
        .map(|list| {
            let entries = list
                .into_iter()
                .map(|(distance, u)| AdsEntry {
                    vertex: u,
                    rank: ranks[u as usize],
                    distance,
                })
                .collect();
            cleanup_ads(&Sketch::from_raw(k, entries), k)
        })
        .collect();
    Ok(SketchSet { k, seed, sketches })
}

/// Entries relayed to an in-neighbor; the receiver adds `hop`.
#[derive(Clone, Debug)]
struct AdsBatch {
    entries: Arc<[(VertexId, f64)]>,
    hop: f64,
}

struct AdsVertex {
    entries: Vec<AdsEntry>,
    index: HashMap<VertexId, usize>,
    bottom: BottomK,
}

struct AdsProgram {
    k: usize,
    seed: u64,
    weighted: bool,
    cleanup_threshold: usize,
}

impl AdsProgram {
    fn upsert(&self, state: &mut AdsVertex, u: VertexId, rank: f64, distance: f64) {
        match state.index.get(&u) {
            Some(&i) => state.entries[i].distance = distance,
            None => {
                state.index.insert(u, state.entries.len());
                state.entries.push(AdsEntry {
                    vertex: u,
                    rank,
                    distance,
                });
            }
        }
    }

    fn cleanup(&self, state: &mut AdsVertex) {
        let clean = cleanup_ads(&Sketch::from_raw(self.k, std::mem::take(&mut state.entries)), self.k);
        state.entries = clean.entries().to_vec();
        state.index = state.entries.iter().enumerate().map(|(i, e)| (e.vertex, i)).collect();
    }
}

impl VertexProgram for AdsProgram {
    type State = AdsVertex;
    type Message = AdsBatch;

    fn compute(&self, ctx: &mut VertexContext<'_, AdsBatch>, state: &mut AdsVertex, messages: Vec<AdsBatch>) {
        let mut incoming: Vec<(VertexId, f64)> = if ctx.superstep() == 0 {
            vec![(ctx.id(), 0.0)]
        } else {
            messages
                .iter()
                .flat_map(|b| b.entries.iter().map(move |&(u, d)| (u, d + b.hop)))
                .collect()
        };
        incoming.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        incoming.dedup_by_key(|e| e.0);
        incoming.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

        let mut out = Vec::new();
        for (u, d) in incoming {
            let rank = hash_rank(u, self.seed);
            if self.weighted {
                if let Some(&i) = state.index.get(&u) {
                    if state.entries[i].distance <= d {
                        continue;
                    }
                }
                let before = state
                    .entries
                    .iter()
                    .filter(|e| e.rank < rank && (e.distance < d || (e.distance == d && e.vertex < u)))
                    .count();
                if before < self.k {
                    self.upsert(state, u, rank, d);
                    out.push((u, d));
                }
            } else if !state.index.contains_key(&u) && state.bottom.admits(rank) {
                self.upsert(state, u, rank, d);
                state.bottom.push(rank);
                out.push((u, d));
            }
        }
        if self.weighted && state.entries.len() > self.cleanup_threshold {
            self.cleanup(state);
        }
        if !out.is_empty() {
            let batch: Arc<[(VertexId, f64)]> = out.into();
            let graph = ctx.graph();
            for (x, w) in graph.edges(ctx.id(), Direction::Incoming) {
                ctx.send(
                    x,
                    AdsBatch {
                        entries: Arc::clone(&batch),
                        hop: w,
                    },
                );
            }
        }
        ctx.vote_to_halt();
    }
}

/// Default raw-size trigger for the periodic cleanup: `4·k·⌈log2 n⌉`.
pub fn default_cleanup_threshold(n: usize, k: usize) -> usize {
    4 * k * (n.max(2) as f64).log2().ceil() as usize
}

/// Vertex-centric construction. Every vertex starts with its own entry;
/// accepted entries are relayed to in-neighbors with the arc weight added.
///
/// On unweighted graphs entries arrive level by level, so the bottom-k test
/// alone yields the final sketch. On weighted graphs an entry is accepted if
/// fewer than `k` current entries precede it with a smaller rank, shorter
/// distances replace longer ones, and sketches are cleaned whenever they
/// exceed `cleanup_threshold` raw entries and once at the end.
pub fn build_ads_bsp(
    graph: &Graph,
    k: usize,
    seed: u64,
    cleanup_threshold: Option<usize>,
    engine: &Engine,
) -> Result<(SketchSet, RunMetrics)> {
    check_k(k)?;
    let n = graph.vertex_count();
    let program = AdsProgram {
        k,
        seed,
        weighted: graph.is_weighted(),
        cleanup_threshold: cleanup_threshold.unwrap_or_else(|| default_cleanup_threshold(n, k)),
    };
    let states = (0..n)
        .map(|_| AdsVertex {
            entries: Vec::new(),
            index: HashMap::new(),
            bottom: BottomK::new(k),
        })
        .collect();
    let out = engine.run(graph, &program, &mut NoMaster, &Aggregators::new(), states);
    match out.status {
        RunStatus::Converged => {}
        RunStatus::Timeout => {
            return Err(Error::NonConvergence(
                "sketch construction hit the superstep limit".into(),
            ))
        }
        RunStatus::Failed(msg) => return Err(Error::Contract(msg)),
    }
    let sketches = out
        .states
        .into_par_iter()
        .map(|s| cleanup_ads(&Sketch::from_raw(k, s.entries), k))
        .collect();
    Ok((SketchSet { k, seed, sketches }, out.metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsp::EngineConfig;
    use crate::graph::{path_graph, star_graph};

    fn engine() -> Engine {
        Engine::new(EngineConfig::default().with_workers(3))
    }

    #[test]
    fn saturated_sketch_lists_component() {
        let g = Graph::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)], false, false).unwrap();
        let s = build_ads_sequential(&g, 10, 1).unwrap();
        let ids: Vec<VertexId> = s.get(1).entries().iter().map(|e| e.vertex).collect();
        assert_eq!(ids, vec![1, 0, 2]);
        assert!(s.get(1).weights().iter().all(|&w| w == 1.0));
        assert_eq!(s.get(4).len(), 2);
    }

    #[test]
    fn star_center_with_k1_keeps_running_minima() {
        let g = star_graph(30);
        let seed = 5;
        let s = build_ads_sequential(&g, 1, seed).unwrap();
        let mut best = hash_rank(0, seed);
        let mut expected = vec![0];
        for leaf in 1..30 {
            let r = hash_rank(leaf, seed);
            if r < best {
                best = r;
                expected.push(leaf);
            }
        }
        let got: Vec<VertexId> = s.get(0).entries().iter().map(|e| e.vertex).collect();
        assert_eq!(got, expected);
        let smallest_leaf = (1..30)
            .min_by(|&a, &b| hash_rank(a, seed).total_cmp(&hash_rank(b, seed)))
            .unwrap();
        if hash_rank(smallest_leaf, seed) < hash_rank(0, seed) {
            assert_eq!(*got.last().unwrap(), smallest_leaf);
        }
    }

    #[test]
    fn every_sketch_holds_itself() {
        let g = crate::graph::generate_forest_fire(200, 0.3, 0.4, 3, false).unwrap();
        let s = build_ads_pruned(&g, 4, 9).unwrap();
        for v in g.vertices() {
            let first = s.get(v).entries()[0];
            assert_eq!((first.vertex, first.distance), (v, 0.0));
        }
    }

    #[test]
    fn bsp_matches_sequential_on_unweighted_path() {
        let g = path_graph(5, None);
        let seq = build_ads_sequential(&g, 2, 11).unwrap();
        let (bsp, _) = build_ads_bsp(&g, 2, 11, None, &engine()).unwrap();
        assert_eq!(bsp, seq);
    }

    #[test]
    fn weighted_shortcut_is_corrected() {
        let g = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)], false, true).unwrap();
        let (bsp, _) = build_ads_bsp(&g, 3, 2, Some(1), &engine()).unwrap();
        let far = bsp.get(0).entries().iter().find(|e| e.vertex == 2).unwrap();
        assert_eq!(far.distance, 2.0);
    }

    #[test]
    fn builders_agree_on_random_graphs() {
        for seed in 0..4u64 {
            let g = crate::graph::generate_forest_fire(150, 0.3, 0.4, seed, seed % 2 == 1).unwrap();
            let w = crate::graph::assign_integer_weights(&g, 1, 20, seed).unwrap();
            for graph in [&g, &w] {
                for k in [1, 3, 8] {
                    let seq = build_ads_sequential(graph, k, seed).unwrap();
                    assert_eq!(build_ads_pruned(graph, k, seed).unwrap(), seq);
                    let (bsp, _) = build_ads_bsp(graph, k, seed, Some(2 * k), &engine()).unwrap();
                    assert_eq!(bsp, seq);
                }
            }
        }
    }

    #[test]
    fn shrinking_equals_building_smaller() {
        let g = crate::graph::generate_forest_fire(300, 0.3, 0.4, 8, false).unwrap();
        let big = build_ads_pruned(&g, 12, 4).unwrap();
        assert_eq!(big.shrink(5), build_ads_pruned(&g, 5, 4).unwrap());
    }

    #[test]
    fn zero_k_is_rejected() {
        assert!(build_ads_sequential(&path_graph(2, None), 0, 1).is_err());
    }
}
