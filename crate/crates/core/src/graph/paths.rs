use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::{Graph, VertexId};

/// Which arcs a traversal follows.
///
/// `Outgoing` from `s` yields `d(s, v)`; `Incoming` yields `d(v, s)`. The two
/// coincide on undirected graphs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Outgoing,
    Incoming,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Outgoing => Direction::Incoming,
            Direction::Incoming => Direction::Outgoing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct HeapItem {
    dist: f64,
    tie: VertexId,
    vertex: VertexId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.tie.cmp(&self.tie))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact distances from `src` along `direction` as a dense vector
/// (`f64::INFINITY` for unreachable vertices or vertices beyond `cutoff`).
pub fn distances_from(graph: &Graph, src: VertexId, cutoff: Option<f64>, direction: Direction) -> Vec<f64> {
    let n = graph.vertex_count();
    let limit = cutoff.unwrap_or(f64::INFINITY);
    let mut dist = vec![f64::INFINITY; n];
    dist[src as usize] = 0.0;
    if !graph.is_weighted() {
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let next = dist[u as usize] + 1.0;
            if next > limit {
                continue;
            }
            for (v, _) in graph.edges(u, direction) {
                if dist[v as usize].is_infinite() {
                    dist[v as usize] = next;
                    queue.push_back(v);
                }
            }
        }
        return dist;
    }
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::from([HeapItem {
        dist: 0.0,
        tie: 0,
        vertex: src,
    }]);
    while let Some(HeapItem { dist: d, vertex: u, .. }) = heap.pop() {
        if done[u as usize] {
            continue;
        }
        done[u as usize] = true;
        for (v, w) in graph.edges(u, direction) {
            let nd = d + w;
            if nd <= limit && nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(HeapItem {
                    dist: nd,
                    tie: 0,
                    vertex: v,
                });
            }
        }
    }
    dist
}

/// Reachable vertices within `cutoff` of `src` (following out-arcs), sorted by
/// `(distance, vertex id)`.
pub fn single_source_distances(graph: &Graph, src: VertexId, cutoff: Option<f64>) -> Vec<(VertexId, f64)> {
    let dist = distances_from(graph, src, cutoff, Direction::Outgoing);
    let mut out: Vec<(VertexId, f64)> = dist
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(v, &d)| (v as VertexId, d))
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    out
}

/// BFS hop levels from `src` (ignores weights); `u32::MAX` when unreachable.
pub fn bfs_levels(graph: &Graph, src: VertexId, direction: Direction) -> Vec<u32> {
    let mut level = vec![u32::MAX; graph.vertex_count()];
    level[src as usize] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let next = level[u as usize] + 1;
        for (v, _) in graph.edges(u, direction) {
            if level[v as usize] == u32::MAX {
                level[v as usize] = next;
                queue.push_back(v);
            }
        }
    }
    level
}

/// The source that realizes the minimum of `offset(s) + d(s, v)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NearestSource {
    pub source: VertexId,
    pub distance: f64,
}

/// Multi-source shortest paths: for every vertex `v`, the source `s`
/// minimizing `offset(s) + d(s, v)` along `direction`, ties broken by the
/// smaller source id.
pub fn multi_source_nearest(
    graph: &Graph,
    sources: &[(VertexId, f64)],
    direction: Direction,
) -> Vec<Option<NearestSource>> {
    let n = graph.vertex_count();
    let mut best: Vec<Option<NearestSource>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let better = |cand: (f64, VertexId), cur: Option<NearestSource>| match cur {
        None => true,
        Some(c) => cand.0 < c.distance || (cand.0 == c.distance && cand.1 < c.source),
    };
    for &(s, offset) in sources {
        if better((offset, s), best[s as usize]) {
            best[s as usize] = Some(NearestSource {
                source: s,
                distance: offset,
            });
            heap.push(HeapItem {
                dist: offset,
                tie: s,
                vertex: s,
            });
        }
    }
    while let Some(item) = heap.pop() {
        let u = item.vertex as usize;
        if done[u] {
            continue;
        }
        let label = best[u].expect("queued vertices carry a label");
        if label.distance != item.dist || label.source != item.tie {
            continue;
        }
        done[u] = true;
        for (v, w) in graph.edges(item.vertex, direction) {
            let cand = (label.distance + w, label.source);
            if !done[v as usize] && better(cand, best[v as usize]) {
                best[v as usize] = Some(NearestSource {
                    source: cand.1,
                    distance: cand.0,
                });
                heap.push(HeapItem {
                    dist: cand.0,
                    tie: cand.1,
                    vertex: v,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{path_graph, star_graph};

    #[test]
    fn unweighted_path() {
        let g = path_graph(3, None);
        assert_eq!(single_source_distances(&g, 0, None), vec![(0, 0.0), (1, 1.0), (2, 2.0)]);
        assert_eq!(single_source_distances(&g, 0, Some(1.0)), vec![(0, 0.0), (1, 1.0)]);
    }

    #[test]
    fn weighted_triangle_prefers_two_hops() {
        let g = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)], false, true).unwrap();
        let d = distances_from(&g, 0, None, Direction::Outgoing);
        assert_eq!(d[2], 2.0);
    }

    #[test]
    fn directed_direction_matters() {
        let g = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], true, false).unwrap();
        let fwd = distances_from(&g, 0, None, Direction::Outgoing);
        assert_eq!(fwd, vec![0.0, 1.0, 2.0]);
        let back = distances_from(&g, 0, None, Direction::Incoming);
        assert_eq!(back[0], 0.0);
        assert!(back[1].is_infinite() && back[2].is_infinite());
        let into_two = distances_from(&g, 2, None, Direction::Incoming);
        assert_eq!(into_two, vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn multi_source_ties_go_to_smaller_id() {
        // 0 - 1 - 2 : sources 0 and 2 tie at vertex 1.
        let g = path_graph(3, None);
        let near = multi_source_nearest(&g, &[(2, 0.0), (0, 0.0)], Direction::Outgoing);
        assert_eq!(near[1].unwrap().source, 0);
        assert_eq!(near[1].unwrap().distance, 1.0);
        assert_eq!(near[2].unwrap().source, 2);
    }

    #[test]
    fn multi_source_respects_offsets() {
        let g = star_graph(4);
        let near = multi_source_nearest(&g, &[(0, 10.0), (1, 0.0)], Direction::Outgoing);
        assert_eq!(
            near[0].unwrap(),
            NearestSource {
                source: 1,
                distance: 1.0
            }
        );
        assert_eq!(
            near[2].unwrap(),
            NearestSource {
                source: 1,
                distance: 2.0
            }
        );
    }

    #[test]
    fn bfs_levels_ignore_weights() {
        let g = Graph::from_edges(3, [(0, 1, 7.0), (1, 2, 9.0)], false, true).unwrap();
        assert_eq!(bfs_levels(&g, 0, Direction::Outgoing), vec![0, 1, 2]);
    }
}
