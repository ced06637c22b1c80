use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{nearest_sources, run_opening, ClientStatus, Instance, LoopExit, OpeningOutcome, RadiusSchedule};
use crate::ads::{build_ads_bsp, build_ads_pruned, build_exact_sketches, SketchSet};
use crate::bsp::{Engine, EngineConfig, PhaseStats, RunMetrics};
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph, VertexId};
use crate::mis::{
    draw_priorities, finalize_assignment, greedy_mis_implicit, luby_mis, materialize_conflict_graph, MisStrategy,
    ServiceLayout, RESIDUAL_STEP,
};

/// How neighborhood sizes are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// HIP estimates from `k`-sketches.
    #[default]
    Sketch,
    /// Exact ball counts.
    ExactCount,
}

/// Sketch construction route in sketch mode; both give identical sketches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchBuilder {
    /// Vertex-centric construction on the engine.
    #[default]
    Bsp,
    /// Sequential pruned traversals; faster on one core.
    Pruned,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub epsilon: f64,
    pub k: usize,
    pub seed: u64,
    pub mode: CountMode,
    pub builder: SketchBuilder,
    pub mis: MisStrategy,
    pub engine: EngineConfig,
    /// Keep the per-step accumulator history of every facility.
    pub trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            epsilon: 0.1,
            k: 64,
            seed: 0,
            mode: CountMode::Sketch,
            builder: SketchBuilder::Bsp,
            mis: MisStrategy::Greedy,
            engine: EngineConfig::default(),
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub client: VertexId,
    pub facility: VertexId,
    pub distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub supersteps: u64,
    pub messages: u64,
    pub ladder_steps: u32,
    pub mis_rounds: u32,
    /// Facilities opened before selection.
    pub opened: usize,
    /// Clients assigned after the ladder loop instead of by freezing.
    pub residual_clients: usize,
    pub loop_exit: String,
    pub phases: BTreeMap<String, PhaseStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// The selected facilities `S`, sorted.
    pub facilities: Vec<VertexId>,
    /// One entry per client, sorted by client id.
    pub assignments: Vec<Assignment>,
    pub opening_cost: f64,
    pub service_cost: f64,
    pub objective: f64,
    pub counters: Counters,
}

impl SolveResult {
    /// Canonical JSON encoding.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// A solve result together with the intermediate state it came from.
#[derive(Clone, Debug)]
pub struct Solution {
    pub result: SolveResult,
    pub gamma: f64,
    pub opening: OpeningOutcome,
    pub layout: ServiceLayout,
}

fn build_sketches(graph: &Graph, config: &SolveConfig, engine: &Engine, metrics: &mut RunMetrics) -> Result<SketchSet> {
    match config.mode {
        CountMode::ExactCount => Ok(build_exact_sketches(graph)),
        CountMode::Sketch => match config.builder {
            SketchBuilder::Bsp => {
                let (set, m) = build_ads_bsp(graph, config.k, config.seed, None, engine)?;
                metrics.absorb("sketch/", &m);
                Ok(set)
            }
            SketchBuilder::Pruned => build_ads_pruned(graph, config.k, config.seed),
        },
    }
}

/// Solves with sketches built from `config`.
pub fn solve(graph: &Graph, instance: &Instance, config: &SolveConfig) -> Result<Solution> {
    let engine = Engine::new(config.engine);
    let mut metrics = RunMetrics::default();
    instance.check_graph(graph)?;
    if config.mode == CountMode::Sketch && config.k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    let sketches = build_sketches(graph, config, &engine, &mut metrics)?;
    solve_with_sketches(graph, instance, &sketches, config, metrics)
}

/// Solves with precomputed sketches (`config.k`, `mode` and `builder` are
/// ignored).
pub fn solve_with_sketches(
    graph: &Graph,
    instance: &Instance,
    sketches: &SketchSet,
    config: &SolveConfig,
    mut metrics: RunMetrics,
) -> Result<Solution> {
    let engine = Engine::new(config.engine);
    instance.check_graph(graph)?;
    let n = graph.vertex_count();

    let seeds: Vec<_> = instance
        .facilities()
        .into_iter()
        .map(|f| (f, instance.cost(f)))
        .collect();
    let (labels, m) = nearest_sources(graph, &seeds, Direction::Outgoing, &engine)?;
    metrics.absorb("gamma/", &m);
    let mut gamma: f64 = 0.0;
    for c in instance.clients() {
        let l = labels[c as usize].ok_or(Error::Infeasible { client: c })?;
        gamma = gamma.max(l.distance);
    }
    let schedule = RadiusSchedule::new(config.epsilon, gamma, instance.pair_count())?;

    let opening = run_opening(graph, instance, sketches, schedule, config.trace, &engine)?;
    metrics.absorb("open/", &opening.metrics);
    let mut layout = ServiceLayout::from_opening(&opening);

    let unfrozen = opening.unfrozen_clients();
    if !unfrozen.is_empty() {
        if opening.exit == LoopExit::Cap && layout.opened().is_empty() {
            let f = fallback_facility(instance, &opening);
            layout.facility_step[f as usize] = Some(RESIDUAL_STEP);
        }
        let sources: Vec<_> = layout.opened().into_iter().map(|f| (f, 0.0)).collect();
        let (labels, m) = nearest_sources(graph, &sources, Direction::Outgoing, &engine)?;
        metrics.absorb("residual/", &m);
        if let Some(&c) = unfrozen.iter().find(|&&c| labels[c as usize].is_none()) {
            return Err(Error::Infeasible { client: c });
        }
    }

    let candidates = layout.opened();
    let mis_seed = crate::derive_seed(config.seed, 1);
    let (selected, mis_rounds) = match config.mis {
        MisStrategy::Greedy => {
            let pi = draw_priorities(&candidates, n, mis_seed);
            let run = greedy_mis_implicit(graph, &layout, &pi, &engine)?;
            metrics.absorb("mis/", &run.metrics);
            (run.selected, run.rounds)
        }
        MisStrategy::Luby => {
            let h = materialize_conflict_graph(graph, &layout)?;
            let run = luby_mis(&h.graph, mis_seed, &engine)?;
            metrics.absorb("mis/", &run.metrics);
            let mut s: Vec<VertexId> = run.selected.iter().map(|&i| h.facilities[i as usize]).collect();
            s.sort_unstable();
            (s, run.rounds)
        }
    };

    let (assignments, m) = finalize_assignment(graph, instance, &selected, &engine)?;
    metrics.absorb("assign/", &m);
    let opening_cost: f64 = selected.iter().map(|&f| instance.cost(f)).sum();
    let service_cost: f64 = assignments.iter().map(|a| a.distance).sum();

    let result = SolveResult {
        facilities: selected,
        assignments,
        opening_cost,
        service_cost,
        objective: opening_cost + service_cost,
        counters: Counters {
            supersteps: metrics.supersteps,
            messages: metrics.messages,
            ladder_steps: opening.ladder_steps,
            mis_rounds,
            opened: candidates.len(),
            residual_clients: unfrozen.len(),
            loop_exit: serde_json::to_value(opening.exit)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            phases: metrics.phases,
        },
    };
    Ok(Solution {
        result,
        gamma,
        opening,
        layout,
    })
}

/// Facility with the largest `q − c` (smallest id on ties); used when the
/// ladder reaches its cap before anything opened.
fn fallback_facility(instance: &Instance, opening: &OpeningOutcome) -> VertexId {
    let mut best: Option<(f64, VertexId)> = None;
    for f in instance.facilities() {
        let slack = opening.q[f as usize] - instance.cost(f);
        if best.is_none_or(|(b, _)| slack > b) {
            best = Some((slack, f));
        }
    }
    best.expect("instances have a facility").1
}

/// Number of clients that froze at each ladder step.
pub fn freeze_histogram(opening: &OpeningOutcome) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for s in &opening.client_status {
        if let ClientStatus::Frozen { step } = s {
            *h.entry(*step).or_default() += 1;
        }
    }
    h
}
