//! Experiment drivers behind the command-line tools: sketch accuracy
//! sweeps, solver-versus-baseline comparisons and MIS benchmarks. Every
//! driver returns plain serializable records.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ads::{build_ads_pruned, FrozenSet};
use crate::bsp::{Engine, EngineConfig, RunMetrics};
use crate::error::{Error, Result};
use crate::facloc::{solve_with_sketches, CountMode, Instance, SolveConfig, SolveResult};
use crate::graph::{distances_from, Direction, Graph, VertexId};
use crate::mis::{draw_priorities, greedy_mis_explicit, luby_mis, materialize_conflict_graph, verify_mis, MisVerdict};
use crate::oracle::{cache_key, cached, evaluate_cost, local_search_baseline, DistanceMatrix, DEFAULT_MATRIX_LIMIT};

/// One self-describing JSON-lines record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub graph: String,
    pub parameters: Value,
    pub metrics: Value,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunRecord {
    pub fn new(command: &str, graph: &Graph, parameters: &impl Serialize, metrics: &impl Serialize) -> Result<Self> {
        Ok(RunRecord {
            command: command.to_string(),
            graph: graph_id(graph),
            parameters: serde_json::to_value(parameters)?,
            metrics: serde_json::to_value(metrics)?,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        })
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Short stable identifier derived from the graph contents.
pub fn graph_id(graph: &Graph) -> String {
    format!("n{}-{}", graph.vertex_count(), &graph.fingerprint()[..12])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Distinct vertices drawn uniformly (all of them if `count ≥ n`), sorted.
pub fn sample_vertices(n: usize, count: usize, seed: u64) -> Vec<VertexId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<VertexId> = rand::seq::index::sample(&mut rng, n, count.min(n))
        .into_iter()
        .map(|v| v as VertexId)
        .collect();
    picked.sort_unstable();
    picked
}

/// `1, 2, …, 20` on unweighted graphs, `100, 200, …, 2000` on weighted ones.
pub fn default_ladder(graph: &Graph) -> Vec<f64> {
    if graph.is_weighted() {
        (1..=20).map(|i| 100.0 * i as f64).collect()
    } else {
        (1..=20).map(f64::from).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SketchEvalConfig {
    pub ks: Vec<usize>,
    pub samples: usize,
    pub distances: Vec<f64>,
    /// Hash seeds; the sampled vertices depend only on the first.
    pub seeds: Vec<u64>,
}

/// Relative estimation error `|S_E − S_ADS| / S_E` over the sampled
/// vertices at one distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchErrorRecord {
    pub k: usize,
    pub seed: u64,
    pub distance: f64,
    pub samples: usize,
    pub mean_error: f64,
    pub variance: f64,
}

/// Compares HIP estimates with exact ball sizes for every `(k, seed,
/// distance)`. One sketch set is built per seed at the largest `k` and
/// shrunk to the others.
pub fn sketch_eval(graph: &Graph, config: &SketchEvalConfig) -> Result<Vec<SketchErrorRecord>> {
    let k_max = *config.ks.iter().max().ok_or_else(|| Error::validation("no k given"))?;
    if config.ks.contains(&0) {
        return Err(Error::validation("k must be at least 1"));
    }
    let first_seed = *config.seeds.first().ok_or_else(|| Error::validation("no seed given"))?;
    let samples = sample_vertices(graph.vertex_count(), config.samples, crate::derive_seed(first_seed, 2));
    let exact: Vec<Vec<f64>> = samples
        .iter()
        .map(|&v| {
            let dist = distances_from(graph, v, None, Direction::Outgoing);
            config
                .distances
                .iter()
                .map(|&d| dist.iter().filter(|&&x| x <= d).count() as f64)
                .collect()
        })
        .collect();
    let none = FrozenSet::new();
    let mut records = Vec::new();
    for &seed in &config.seeds {
        let full = build_ads_pruned(graph, k_max, seed)?;
        for &k in &config.ks {
            let set = if k == k_max { full.clone() } else { full.shrink(k) };
            for (di, &d) in config.distances.iter().enumerate() {
                let mut errors = Vec::with_capacity(samples.len());
                for (si, &v) in samples.iter().enumerate() {
                    let truth = exact[si][di];
                    let est = set.get(v).hip_estimate(d, &none)?;
                    errors.push((truth - est).abs() / truth);
                }
                let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
                let variance = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / errors.len().max(1) as f64;
                records.push(SketchErrorRecord {
                    k,
                    seed,
                    distance: d,
                    samples: samples.len(),
                    mean_error: mean,
                    variance,
                });
            }
        }
    }
    Ok(records)
}

/// For each `k`: the median over seeds of the error averaged across
/// distances.
pub fn sketch_error_by_k(records: &[SketchErrorRecord]) -> Vec<(usize, f64)> {
    let mut ks: Vec<usize> = records.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let mut seeds: Vec<u64> = records.iter().filter(|r| r.k == k).map(|r| r.seed).collect();
            seeds.sort_unstable();
            seeds.dedup();
            let per_seed: Vec<f64> = seeds
                .iter()
                .map(|&s| {
                    let rs: Vec<f64> = records
                        .iter()
                        .filter(|r| r.k == k && r.seed == s)
                        .map(|r| r.mean_error)
                        .collect();
                    rs.iter().sum::<f64>() / rs.len() as f64
                })
                .collect();
            (k, median(&per_seed))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareConfig {
    pub epsilons: Vec<f64>,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub mode: CountMode,
    /// Directory for cached baseline results.
    pub cache_dir: Option<PathBuf>,
    #[serde(skip)]
    pub engine: EngineConfig,
}

/// Baseline against solver on one `(ε, seed)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRecord {
    pub epsilon: f64,
    pub seed: u64,
    pub k: usize,
    pub baseline_objective: f64,
    pub objective: f64,
    /// `baseline / solver`: above 1 when the solver is cheaper.
    pub ratio: f64,
    /// `solver / baseline`: above 1 when the solver is more expensive.
    pub relative_cost: f64,
    pub facilities: usize,
    pub baseline_facilities: usize,
    pub supersteps: u64,
    pub solve_ms: f64,
}

/// Local-search baseline for `instance`, cached under `cache_dir` when given.
pub fn baseline(graph: &Graph, instance: &Instance, cache_dir: Option<&std::path::Path>) -> Result<SolveResult> {
    let compute = || {
        let matrix = DistanceMatrix::for_instance(graph, instance, DEFAULT_MATRIX_LIMIT)?;
        local_search_baseline(&matrix, instance)
    };
    match cache_dir {
        Some(dir) => cached(dir, &cache_key(graph, &("local-search", 1, instance))?, compute),
        None => compute(),
    }
}

/// Solves and checks the reported objective against an independent audit.
pub fn audited_solve(
    graph: &Graph,
    instance: &Instance,
    sketches: &crate::ads::SketchSet,
    config: &SolveConfig,
) -> Result<SolveResult> {
    let result = solve_with_sketches(graph, instance, sketches, config, RunMetrics::default())?.result;
    let audit = evaluate_cost(graph, instance, &result.facilities, &result.assignments)?;
    if (audit.objective - result.objective).abs() > 1e-9 * audit.objective.abs().max(1.0)
        || !audit.mismatched.is_empty()
    {
        return Err(Error::Contract(format!(
            "reported objective {} disagrees with audit {}",
            result.objective, audit.objective
        )));
    }
    Ok(result)
}

/// Runs the baseline once and the solver for every `(seed, ε)`; sketches
/// are built once per seed and shared across `ε`.
pub fn compare(graph: &Graph, instance: &Instance, config: &CompareConfig) -> Result<Vec<CompareRecord>> {
    let base = baseline(graph, instance, config.cache_dir.as_deref())?;
    let mut records = Vec::new();
    for &seed in &config.seeds {
        let sketches = match config.mode {
            CountMode::Sketch => build_ads_pruned(graph, config.k, seed)?,
            CountMode::ExactCount => crate::ads::build_exact_sketches(graph),
        };
        for &epsilon in &config.epsilons {
            let cfg = SolveConfig {
                epsilon,
                k: config.k,
                seed,
                mode: config.mode,
                engine: config.engine,
                ..SolveConfig::default()
            };
            let t = Instant::now();
            let r = audited_solve(graph, instance, &sketches, &cfg)?;
            records.push(CompareRecord {
                epsilon,
                seed,
                k: config.k,
                baseline_objective: base.objective,
                objective: r.objective,
                ratio: base.objective / r.objective,
                relative_cost: r.objective / base.objective,
                facilities: r.facilities.len(),
                baseline_facilities: base.facilities.len(),
                supersteps: r.counters.supersteps,
                solve_ms: t.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    Ok(records)
}

/// Greedy against Luby on one conflict graph (medians over runs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisBenchRecord {
    pub vertices: usize,
    pub edges: usize,
    pub runs: usize,
    pub greedy_supersteps: f64,
    pub greedy_rounds: f64,
    pub greedy_ms: f64,
    pub luby_supersteps: f64,
    pub luby_rounds: f64,
    pub luby_ms: f64,
    /// Supersteps of the broadcast-based greedy run inside the solver, when
    /// the conflict graph came from a solve.
    pub implicit_supersteps: Option<u64>,
    pub implicit_rounds: Option<u32>,
    /// Every output passed the verifier.
    pub valid: bool,
}

/// Runs explicit greedy and Luby `runs` times on `conflict` with seeds
/// derived from `seed`.
pub fn mis_bench_on(conflict: &Graph, seed: u64, runs: usize, engine: EngineConfig) -> Result<MisBenchRecord> {
    let engine = Engine::new(engine);
    let n = conflict.vertex_count();
    let all: Vec<VertexId> = conflict.vertices().collect();
    let mut g = (Vec::new(), Vec::new(), Vec::new());
    let mut l = (Vec::new(), Vec::new(), Vec::new());
    let mut valid = true;
    for run in 0..runs.max(1) as u64 {
        let s = crate::derive_seed(seed, 100 + run);
        let pi = draw_priorities(&all, n, s);
        let t = Instant::now();
        let gr = greedy_mis_explicit(conflict, &pi, &engine)?;
        g.2.push(t.elapsed().as_secs_f64() * 1e3);
        let t = Instant::now();
        let lu = luby_mis(conflict, s, &engine)?;
        l.2.push(t.elapsed().as_secs_f64() * 1e3);
        valid &= verify_mis(conflict, &gr.selected) == MisVerdict::Valid;
        valid &= verify_mis(conflict, &lu.selected) == MisVerdict::Valid;
        g.0.push(gr.metrics.supersteps as f64);
        g.1.push(gr.rounds as f64);
        l.0.push(lu.metrics.supersteps as f64);
        l.1.push(lu.rounds as f64);
    }
    Ok(MisBenchRecord {
        vertices: n,
        edges: conflict.edge_count(),
        runs: runs.max(1),
        greedy_supersteps: median(&g.0),
        greedy_rounds: median(&g.1),
        greedy_ms: median(&g.2),
        luby_supersteps: median(&l.0),
        luby_rounds: median(&l.1),
        luby_ms: median(&l.2),
        implicit_supersteps: None,
        implicit_rounds: None,
        valid,
    })
}

/// Solves `instance` in sketch mode, materializes the conflict graph of the
/// opened facilities and benchmarks both MIS variants on it.
pub fn mis_bench(graph: &Graph, instance: &Instance, config: &SolveConfig, runs: usize) -> Result<MisBenchRecord> {
    let sketches = build_ads_pruned(graph, config.k, config.seed)?;
    let solution = solve_with_sketches(graph, instance, &sketches, config, RunMetrics::default())?;
    let h = materialize_conflict_graph(graph, &solution.layout)?;
    let mut record = mis_bench_on(&h.graph, config.seed, runs, config.engine)?;
    let implicit: u64 = solution
        .result
        .counters
        .phases
        .iter()
        .filter(|(name, _)| name.starts_with("mis/"))
        .map(|(_, s)| s.supersteps)
        .sum();
    record.implicit_supersteps = Some(implicit);
    record.implicit_rounds = Some(solution.result.counters.mis_rounds);
    Ok(record)
}
