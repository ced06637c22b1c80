use crate::bsp::{Aggregators, Engine, NoMaster, RunMetrics, VertexContext, VertexProgram};
use crate::error::Result;
use crate::graph::{Direction, Graph, NearestSource, VertexId};

type Label = (f64, VertexId);

fn improves(cand: Label, cur: Option<Label>) -> bool {
    match cur {
        None => true,
        Some(c) => cand.0 < c.0 || (cand.0 == c.0 && cand.1 < c.1),
    }
}

struct NearestProgram<'a> {
    seeds: &'a [Option<f64>],
    direction: Direction,
}

impl VertexProgram for NearestProgram<'_> {
    type State = Option<Label>;
    type Message = Label;

    fn compute(&self, ctx: &mut VertexContext<'_, Label>, state: &mut Option<Label>, messages: Vec<Label>) {
        let mut best = None;
        if ctx.superstep() == 0 {
            if let Some(offset) = self.seeds[ctx.id() as usize] {
                best = Some((offset, ctx.id()));
            }
        }
        for m in messages {
            if improves(m, best) {
                best = Some(m);
            }
        }
        if let Some(label) = best {
            if improves(label, *state) {
                *state = Some(label);
                let graph = ctx.graph();
                for (u, w) in graph.edges(ctx.id(), self.direction) {
                    ctx.send(u, (label.0 + w, label.1));
                }
            }
        }
        ctx.vote_to_halt();
    }
}

/// Vertex-centric multi-source relaxation: every vertex learns the source
/// minimizing `offset + d(source, vertex)` along `direction`, ties to the
/// smaller source id.
pub fn nearest_sources(
    graph: &Graph,
    sources: &[(VertexId, f64)],
    direction: Direction,
    engine: &Engine,
) -> Result<(Vec<Option<NearestSource>>, RunMetrics)> {
    let n = graph.vertex_count();
    let mut seeds: Vec<Option<f64>> = vec![None; n];
    for &(s, offset) in sources {
        let slot = &mut seeds[s as usize];
        *slot = Some(slot.map_or(offset, |o| o.min(offset)));
    }
    let program = NearestProgram {
        seeds: &seeds,
        direction,
    };
    let out = engine.run(graph, &program, &mut NoMaster, &Aggregators::new(), vec![None; n]);
    out.status.check("nearest-source relaxation")?;
    let labels = out
        .states
        .into_iter()
        .map(|s| s.map(|(distance, source)| NearestSource { source, distance }))
        .collect();
    Ok((labels, out.metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsp::EngineConfig;
    use crate::graph::{assign_integer_weights, generate_forest_fire, multi_source_nearest, path_graph};

    #[test]
    fn ties_go_to_smaller_source() {
        let g = path_graph(5, None);
        let (labels, _) = nearest_sources(&g, &[(4, 0.0), (0, 0.0)], Direction::Outgoing, &Engine::default()).unwrap();
        assert_eq!(labels[2].unwrap().source, 0);
        assert_eq!(labels[3].unwrap().source, 4);
    }

    #[test]
    fn matches_dijkstra_oracle() {
        for seed in 0..3 {
            let g = generate_forest_fire(200, 0.3, 0.35, seed, seed == 1).unwrap();
            let g = assign_integer_weights(&g, 1, 9, seed).unwrap();
            let sources: Vec<_> = (0..200).step_by(17).map(|v| (v as VertexId, (v % 5) as f64)).collect();
            for workers in [1, 3] {
                let engine = Engine::new(EngineConfig::default().with_workers(workers));
                let (labels, _) = nearest_sources(&g, &sources, Direction::Outgoing, &engine).unwrap();
                assert_eq!(labels, multi_source_nearest(&g, &sources, Direction::Outgoing));
            }
        }
    }
}
