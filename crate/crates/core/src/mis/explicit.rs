use super::MisRun;
use crate::ads::hash_rank;
use crate::bsp::{Aggregators, Engine, NoMaster, VertexContext, VertexProgram};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

#[derive(Clone, Copy, Debug, Default)]
struct MisVertex {
    active: bool,
    selected: bool,
    degree: usize,
    marked: bool,
}

#[derive(Clone, Copy, Debug)]
enum GreedyMsg {
    Priority(u64, VertexId),
    Removed,
}

struct GreedyProgram<'a> {
    pi: &'a [u64],
}

impl VertexProgram for GreedyProgram<'_> {
    type State = MisVertex;
    type Message = GreedyMsg;

    fn compute(&self, ctx: &mut VertexContext<'_, GreedyMsg>, state: &mut MisVertex, messages: Vec<GreedyMsg>) {
        let v = ctx.id();
        let graph = ctx.graph();
        if ctx.superstep().is_multiple_of(2) {
            if messages.iter().any(|m| matches!(m, GreedyMsg::Removed)) {
                state.active = false;
            }
            if !state.active {
                ctx.vote_to_halt();
                return;
            }
            for (u, _) in graph.out_edges(v) {
                if u != v {
                    ctx.send(u, GreedyMsg::Priority(self.pi[v as usize], v));
                }
            }
        } else {
            if !state.active {
                ctx.vote_to_halt();
                return;
            }
            let mine = (self.pi[v as usize], v);
            let is_min = messages.iter().all(|m| match *m {
                GreedyMsg::Priority(p, u) => mine < (p, u),
                GreedyMsg::Removed => true,
            });
            if is_min {
                state.active = false;
                state.selected = true;
                for (u, _) in graph.out_edges(v) {
                    if u != v {
                        ctx.send(u, GreedyMsg::Removed);
                    }
                }
                ctx.vote_to_halt();
            }
        }
    }
}

fn collect(states: &[MisVertex]) -> Vec<VertexId> {
    states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.selected)
        .map(|(v, _)| v as VertexId)
        .collect()
}

fn fresh(n: usize) -> Vec<MisVertex> {
    vec![
        MisVertex {
            active: true,
            ..MisVertex::default()
        };
        n
    ]
}

/// Fixed-priority greedy on an explicit undirected graph: every round, each
/// active vertex whose `(π, id)` is smaller than that of all active neighbors
/// joins, and its neighbors leave. Two supersteps per round.
pub fn greedy_mis_explicit(graph: &Graph, pi: &[u64], engine: &Engine) -> Result<MisRun> {
    if pi.len() != graph.vertex_count() {
        return Err(Error::validation("one priority per vertex required"));
    }
    let out = engine.run(
        graph,
        &GreedyProgram { pi },
        &mut NoMaster,
        &Aggregators::new(),
        fresh(graph.vertex_count()),
    );
    out.status.check("greedy MIS")?;
    Ok(MisRun {
        selected: collect(&out.states),
        rounds: out.metrics.supersteps.div_ceil(2) as u32,
        metrics: out.metrics,
    })
}

#[derive(Clone, Copy, Debug)]
enum LubyMsg {
    Mark(usize, VertexId),
    Joined,
    Gone,
}

struct LubyProgram {
    seed: u64,
}

impl VertexProgram for LubyProgram {
    type State = MisVertex;
    type Message = LubyMsg;

    fn compute(&self, ctx: &mut VertexContext<'_, LubyMsg>, state: &mut MisVertex, messages: Vec<LubyMsg>) {
        let v = ctx.id();
        let graph = ctx.graph();
        let step = ctx.superstep();
        let neighbors = || graph.out_edges(v).map(|(u, _)| u).filter(move |&u| u != v);
        match step % 3 {
            0 => {
                if !state.active {
                    ctx.vote_to_halt();
                    return;
                }
                if step == 0 {
                    state.degree = neighbors().count();
                } else {
                    let gone = messages.iter().filter(|m| matches!(m, LubyMsg::Gone)).count();
                    state.degree -= gone;
                }
                if state.degree == 0 {
                    state.active = false;
                    state.selected = true;
                    ctx.vote_to_halt();
                    return;
                }
                let round = step / 3;
                let coin = hash_rank(v, crate::derive_seed(self.seed, round));
                state.marked = coin < 1.0 / (2.0 * state.degree as f64);
                if state.marked {
                    let mark = LubyMsg::Mark(state.degree, v);
                    for u in neighbors() {
                        ctx.send(u, mark);
                    }
                }
            }
            1 => {
                if !state.active {
                    ctx.vote_to_halt();
                    return;
                }
                if state.marked {
                    let mine = (state.degree, v);
                    let beaten = messages
                        .iter()
                        .any(|m| matches!(*m, LubyMsg::Mark(d, u) if (d, u) > mine));
                    if !beaten {
                        state.active = false;
                        state.selected = true;
                        for u in neighbors() {
                            ctx.send(u, LubyMsg::Joined);
                        }
                        ctx.vote_to_halt();
                    }
                }
            }
            _ => {
                if state.active && messages.iter().any(|m| matches!(m, LubyMsg::Joined)) {
                    state.active = false;
                    for u in neighbors() {
                        ctx.send(u, LubyMsg::Gone);
                    }
                }
                if !state.active {
                    ctx.vote_to_halt();
                }
            }
        }
    }
}

/// Luby's algorithm on an explicit undirected graph. Each round, an active
/// vertex of active degree `d` marks itself with probability `1/(2d)`; of two
/// adjacent marked vertices the one with larger `(degree, id)` stays marked;
/// marked survivors join and their neighbors leave, after which the
/// remaining vertices update their degrees. Three supersteps per round.
pub fn luby_mis(graph: &Graph, seed: u64, engine: &Engine) -> Result<MisRun> {
    let out = engine.run(
        graph,
        &LubyProgram { seed },
        &mut NoMaster,
        &Aggregators::new(),
        fresh(graph.vertex_count()),
    );
    out.status.check("Luby MIS")?;
    Ok(MisRun {
        selected: collect(&out.states),
        rounds: out.metrics.supersteps.div_ceil(3) as u32,
        metrics: out.metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsp::EngineConfig;
    use crate::graph::{generate_rmat, path_graph};
    use crate::mis::{draw_priorities, verify_mis, MisVerdict};

    fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u as VertexId, v as VertexId, 1.0)));
        Graph::from_edges(n, edges, false, false).unwrap()
    }

    #[test]
    fn edgeless_graph_selects_everything() {
        let g = Graph::from_edges(5, std::iter::empty(), false, false).unwrap();
        let e = Engine::default();
        assert_eq!(
            greedy_mis_explicit(&g, &[3, 1, 4, 1, 5], &e).unwrap().selected,
            vec![0, 1, 2, 3, 4]
        );
        let l = luby_mis(&g, 1, &e).unwrap();
        assert_eq!(l.selected.len(), 5);
        assert_eq!(l.rounds, 1);
    }

    #[test]
    fn clique_selects_one() {
        let g = complete(5);
        let e = Engine::default();
        assert_eq!(greedy_mis_explicit(&g, &[9, 4, 7, 8, 6], &e).unwrap().selected, vec![1]);
        for seed in 0..20 {
            assert_eq!(luby_mis(&g, seed, &e).unwrap().selected.len(), 1);
        }
    }

    #[test]
    fn path_of_three_hand_trace() {
        let g = path_graph(3, None);
        let run = greedy_mis_explicit(&g, &[2, 1, 3], &Engine::default()).unwrap();
        assert_eq!(run.selected, vec![1]);
    }

    #[test]
    fn random_graphs_pass_the_verifier() {
        for gseed in 0..5 {
            let g = generate_rmat(8, 800, [0.45, 0.15, 0.15, 0.25], gseed, false).unwrap();
            let all: Vec<VertexId> = g.vertices().collect();
            for seed in 0..4 {
                let e = Engine::new(EngineConfig::default().with_workers(1 + seed as usize));
                let pi = draw_priorities(&all, g.vertex_count(), seed);
                let run = greedy_mis_explicit(&g, &pi, &e).unwrap();
                assert_eq!(verify_mis(&g, &run.selected), MisVerdict::Valid);
                let run = luby_mis(&g, seed, &e).unwrap();
                assert_eq!(verify_mis(&g, &run.selected), MisVerdict::Valid);
            }
        }
    }

    #[test]
    fn greedy_ignores_storage_order() {
        // Relabel vertices by reversing ids; the selected set maps back.
        let g = generate_rmat(7, 500, [0.45, 0.15, 0.15, 0.25], 3, false).unwrap();
        let n = g.vertex_count();
        let all: Vec<VertexId> = g.vertices().collect();
        let pi = draw_priorities(&all, n, 5);
        let flip = |v: VertexId| (n - 1) as VertexId - v;
        let h = Graph::from_edges(n, g.edges_once().map(|(u, v, w)| (flip(u), flip(v), w)), false, false).unwrap();
        let pi_h: Vec<u64> = (0..n).map(|v| pi[flip(v as VertexId) as usize]).collect();
        let e = Engine::default();
        let a = greedy_mis_explicit(&g, &pi, &e).unwrap().selected;
        let mut b: Vec<VertexId> = greedy_mis_explicit(&h, &pi_h, &e)
            .unwrap()
            .selected
            .into_iter()
            .map(flip)
            .collect();
        b.sort_unstable();
        assert_eq!(a, b);
    }
}
