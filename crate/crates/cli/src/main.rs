use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use facloc::bench::{self, CompareConfig, RunRecord, SketchEvalConfig};
use facloc::bsp::EngineConfig;
use facloc::facloc::{solve, CountMode, Instance, SketchBuilder, SolveConfig, SolveResult};
use facloc::graph::{
    assign_integer_weights, assign_uniform_weights, generate_forest_fire, generate_rmat, load_edge_list, path_graph,
    star_graph, write_edge_list, Graph, IdMap, LoadedGraph,
};
use facloc::mis::MisStrategy;
use facloc::oracle::evaluate_cost;
use facloc::Error;

#[derive(Parser)]
#[command(
    name = "facloc",
    version,
    about = "Graph facility location with all-distances sketches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Vertex shards processed concurrently per superstep.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Abort engine runs after this many supersteps.
    #[arg(long, global = true)]
    max_supersteps: Option<u64>,

    /// Output file (records are written as JSON lines; stdout by default).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic graph as an edge list.
    Generate(GenerateArgs),
    /// Relative error of neighborhood estimates against exact counts.
    SketchEval(SketchEvalArgs),
    /// Solve one facility-location instance.
    Solve(SolveArgs),
    /// Compare the solver with the local-search baseline.
    Compare(CompareArgs),
    /// Greedy versus Luby MIS on conflict graphs of solved instances.
    MisBench(MisBenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[command(subcommand)]
    kind: GraphKind,

    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Keep arcs directed instead of symmetrizing.
    #[arg(long, global = true)]
    directed: bool,

    /// Draw uniform edge weights in [LO, HI].
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"])]
    weights: Option<Vec<f64>>,

    /// Round drawn weights to integers.
    #[arg(long, global = true, requires = "weights")]
    integer_weights: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum GraphKind {
    /// Forest Fire growth.
    Ff {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        p_fw: f64,
        #[arg(long, default_value_t = 0.4)]
        p_bw: f64,
    },
    /// R-MAT sampling on 2^scale vertices.
    Rmat {
        #[arg(long, default_value_t = 13)]
        scale: u32,
        /// Sampled arcs before deduplication.
        #[arg(long, default_value_t = 3_000_000)]
        edges: usize,
        #[arg(long, default_value_t = 0.45)]
        a: f64,
        #[arg(long, default_value_t = 0.15)]
        b: f64,
        #[arg(long, default_value_t = 0.15)]
        c: f64,
        #[arg(long, default_value_t = 0.25)]
        d: f64,
    },
    Path {
        #[arg(long)]
        n: usize,
    },
    Star {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list (`u v [w]` per line).
    graph: PathBuf,

    #[arg(long)]
    directed: bool,

    /// Read a third column as the edge weight.
    #[arg(long)]
    weighted: bool,
}

#[derive(Args)]
struct CostArgs {
    /// File of `vertex cost` lines; listed vertices are the facilities.
    #[arg(long, conflicts_with = "uniform_cost")]
    costs: Option<PathBuf>,

    /// Every vertex is a facility with this cost.
    #[arg(long)]
    uniform_cost: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sketch,
    ExactCount,
}

impl From<Mode> for CountMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sketch => CountMode::Sketch,
            Mode::ExactCount => CountMode::ExactCount,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mis {
    Greedy,
    Luby,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builder {
    Bsp,
    Pruned,
}

#[derive(Args)]
struct SketchEvalArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[arg(long, value_delimiter = ',', default_values_t = [20, 50, 100])]
    k: Vec<usize>,

    /// Sampled vertices per distance.
    #[arg(long, default_value_t = 100)]
    samples: usize,

    /// Query distances (default: 1..20, or 100..2000 on weighted graphs).
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<f64>>,

    /// Hash seeds.
    #[arg(long = "seed", value_delimiter = ',', default_values_t = [1, 2, 3])]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[command(flatten)]
    costs: CostArgs,

    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,

    #[arg(long, default_value_t = 64)]
    k: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value = "sketch")]
    mode: Mode,

    #[arg(long, value_enum, default_value = "greedy")]
    mis: Mis,

    #[arg(long, value_enum, default_value = "bsp")]
    builder: Builder,

    /// Also write the full solution (facilities and assignments) here.
    #[arg(long)]
    result: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[command(flatten)]
    costs: CostArgs,

    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0])]
    epsilon: Vec<f64>,

    #[arg(long, default_value_t = 200)]
    k: usize,

    #[arg(long = "seed", value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5])]
    seeds: Vec<u64>,

    #[arg(long, value_enum, default_value = "sketch")]
    mode: Mode,

    /// Directory for cached baseline results.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct MisBenchArgs {
    /// Benchmark on this graph instead of generated Forest Fire graphs.
    #[arg(long, conflicts_with = "sizes")]
    graph: Option<PathBuf>,

    #[arg(long, requires = "graph")]
    directed: bool,

    #[arg(long, requires = "graph")]
    weighted: bool,

    /// Forest Fire sizes to generate.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000])]
    sizes: Vec<usize>,

    #[arg(long = "seed", value_delimiter = ',', default_values_t = [1])]
    seeds: Vec<u64>,

    /// Repetitions per conflict graph (medians are reported).
    #[arg(long, default_value_t = 3)]
    runs: usize,

    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,

    #[arg(long, default_value_t = 64)]
    k: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Validation(_) | Error::Parse { .. } | Error::Refused(_)) => 2,
        Some(Error::Infeasible { .. }) => 3,
        Some(Error::NonConvergence(_)) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut engine = EngineConfig::default();
    if let Some(w) = cli.workers {
        engine = engine.with_workers(w);
    }
    if let Some(m) = cli.max_supersteps {
        engine = engine.with_max_supersteps(m);
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate(args) => generate(args, out),
        Command::SketchEval(args) => sketch_eval(args, out),
        Command::Solve(args) => solve_cmd(args, engine, out),
        Command::Compare(args) => compare(args, engine, out),
        Command::MisBench(args) => mis_bench(args, engine, out),
    }
}

fn record_sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(sink: &mut dyn Write, record: &RunRecord) -> Result<()> {
    writeln!(sink, "{}", record.to_json_line()?)?;
    Ok(())
}

fn load(args: &GraphArgs) -> Result<LoadedGraph> {
    load_edge_list(&args.graph, args.directed, args.weighted)
        .with_context(|| format!("cannot load {}", args.graph.display()))
}

fn instance(loaded: &LoadedGraph, costs: &CostArgs) -> Result<Instance> {
    let n = loaded.graph.vertex_count();
    let inst = match (&costs.costs, costs.uniform_cost) {
        (Some(path), _) => {
            let file = File::open(path)
                .map_err(|e| anyhow::Error::new(e).context(format!("cannot open {}", path.display())))?;
            Instance::parse_costs_mapped(BufReader::new(file), n, |v| loaded.ids.dense(v))?
        }
        (None, Some(c)) => Instance::uniform(n, c)?,
        (None, None) => Instance::with_default_costs(&loaded.graph)?,
    };
    Ok(inst)
}

fn generate(args: GenerateArgs, out: Option<&Path>) -> Result<()> {
    let Some(out) = out else {
        bail!(Error::Validation("generate needs --out".into()));
    };
    let undirected = !args.directed;
    let mut graph = match args.kind {
        GraphKind::Ff { n, p_fw, p_bw } => generate_forest_fire(n, p_fw, p_bw, args.seed, args.directed)?,
        GraphKind::Rmat {
            scale,
            edges,
            a,
            b,
            c,
            d,
        } => generate_rmat(scale, edges, [a, b, c, d], args.seed, args.directed)?,
        GraphKind::Path { n } => directed_copy(path_graph(n, None), args.directed)?,
        GraphKind::Star { n } => directed_copy(star_graph(n), args.directed)?,
    };
    if let Some(w) = &args.weights {
        let seed = facloc::derive_seed(args.seed, 3);
        graph = if args.integer_weights {
            assign_integer_weights(&graph, w[0].round() as u32, w[1].round() as u32, seed)?
        } else {
            assign_uniform_weights(&graph, w[0], w[1], seed)?
        };
    }
    write_edge_list(&graph, out)?;
    let params = json!({
        "kind": kind_name(args.kind),
        "seed": args.seed,
        "undirected": undirected,
        "weights": args.weights,
        "integer_weights": args.integer_weights,
        "out": out,
    });
    let metrics = json!({
        "vertices": graph.vertex_count(),
        "edges": graph.edge_count(),
        "arcs": graph.arc_count(),
    });
    let mut sink = record_sink(None)?;
    emit(&mut *sink, &RunRecord::new("generate", &graph, &params, &metrics)?)
}

fn kind_name(kind: GraphKind) -> serde_json::Value {
    match kind {
        GraphKind::Ff { n, p_fw, p_bw } => json!({"ff": {"n": n, "p_fw": p_fw, "p_bw": p_bw}}),
        GraphKind::Rmat {
            scale,
            edges,
            a,
            b,
            c,
            d,
        } => json!({"rmat": {"scale": scale, "edges": edges, "probs": [a, b, c, d]}}),
        GraphKind::Path { n } => json!({"path": {"n": n}}),
        GraphKind::Star { n } => json!({"star": {"n": n}}),
    }
}

fn directed_copy(graph: Graph, directed: bool) -> Result<Graph> {
    if !directed {
        return Ok(graph);
    }
    let n = graph.vertex_count();
    Ok(Graph::from_edges(
        n,
        graph.edges_once().collect::<Vec<_>>(),
        true,
        graph.is_weighted(),
    )?)
}

fn sketch_eval(args: SketchEvalArgs, out: Option<&Path>) -> Result<()> {
    let loaded = load(&args.graph)?;
    let graph = &loaded.graph;
    let config = SketchEvalConfig {
        ks: args.k,
        samples: args.samples,
        distances: args.distances.unwrap_or_else(|| bench::default_ladder(graph)),
        seeds: args.seeds,
    };
    let records = bench::sketch_eval(graph, &config)?;
    let mut sink = record_sink(out)?;
    for r in &records {
        let params = json!({"k": r.k, "seed": r.seed, "distance": r.distance, "samples": r.samples});
        let metrics = json!({"mean_error": r.mean_error, "variance": r.variance});
        emit(&mut *sink, &RunRecord::new("sketch-eval", graph, &params, &metrics)?)?;
    }
    Ok(())
}

fn solve_cmd(args: SolveArgs, engine: EngineConfig, out: Option<&Path>) -> Result<()> {
    let loaded = load(&args.graph)?;
    let graph = &loaded.graph;
    let inst = instance(&loaded, &args.costs)?;
    let config = SolveConfig {
        epsilon: args.epsilon,
        k: args.k,
        seed: args.seed,
        mode: args.mode.into(),
        builder: match args.builder {
            Builder::Bsp => SketchBuilder::Bsp,
            Builder::Pruned => SketchBuilder::Pruned,
        },
        mis: match args.mis {
            Mis::Greedy => MisStrategy::Greedy,
            Mis::Luby => MisStrategy::Luby,
        },
        engine,
        trace: false,
    };
    let start = Instant::now();
    let result = solve(graph, &inst, &config)?.result;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let audit = evaluate_cost(graph, &inst, &result.facilities, &result.assignments)?;
    if (audit.objective - result.objective).abs() > 1e-9 * audit.objective.abs().max(1.0) {
        bail!(Error::Contract(format!(
            "reported objective {} disagrees with audit {}",
            result.objective, audit.objective
        )));
    }
    if let Some(path) = &args.result {
        let external = to_external(&result, &loaded.ids);
        std::fs::write(path, external.to_json()?).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let params = json!({
        "epsilon": config.epsilon,
        "k": config.k,
        "seed": config.seed,
        "mode": config.mode,
        "mis": config.mis,
        "builder": config.builder,
        "costs": args.costs.costs,
        "uniform_cost": args.costs.uniform_cost,
    });
    let metrics = json!({
        "objective": result.objective,
        "audited_objective": audit.objective,
        "opening_cost": result.opening_cost,
        "service_cost": result.service_cost,
        "facilities": result.facilities.len(),
        "supersteps": result.counters.supersteps,
        "messages": result.counters.messages,
        "ladder_steps": result.counters.ladder_steps,
        "mis_rounds": result.counters.mis_rounds,
        "opened": result.counters.opened,
        "residual_clients": result.counters.residual_clients,
        "loop_exit": result.counters.loop_exit,
        "wall_ms": wall_ms,
    });
    let mut sink = record_sink(out)?;
    emit(&mut *sink, &RunRecord::new("solve", graph, &params, &metrics)?)
}

/// Rewrites dense vertex ids back to the ids of the input file.
fn to_external(result: &SolveResult, ids: &IdMap) -> SolveResult {
    let mut r = result.clone();
    let ext = |v: u32| ids.external(v) as u32;
    r.facilities = r.facilities.iter().map(|&f| ext(f)).collect();
    for a in &mut r.assignments {
        a.client = ext(a.client);
        a.facility = ext(a.facility);
    }
    r
}

fn compare(args: CompareArgs, engine: EngineConfig, out: Option<&Path>) -> Result<()> {
    let loaded = load(&args.graph)?;
    let graph = &loaded.graph;
    let inst = instance(&loaded, &args.costs)?;
    let config = CompareConfig {
        epsilons: args.epsilon,
        k: args.k,
        seeds: args.seeds,
        mode: args.mode.into(),
        cache_dir: args.cache,
        engine,
    };
    let records = bench::compare(graph, &inst, &config)?;
    let mut sink = record_sink(out)?;
    for r in &records {
        let params = json!({"epsilon": r.epsilon, "seed": r.seed, "k": r.k, "mode": config.mode});
        emit(&mut *sink, &RunRecord::new("compare", graph, &params, r)?)?;
    }
    Ok(())
}

fn mis_bench(args: MisBenchArgs, engine: EngineConfig, out: Option<&Path>) -> Result<()> {
    let mut graphs: Vec<(Graph, serde_json::Value, Vec<u64>)> = Vec::new();
    match &args.graph {
        Some(path) => {
            let loaded = load_edge_list(path, args.directed, args.weighted)
                .with_context(|| format!("cannot load {}", path.display()))?;
            graphs.push((loaded.graph, json!({"file": path}), args.seeds.clone()));
        }
        None => {
            for &n in &args.sizes {
                for &seed in &args.seeds {
                    let g = generate_forest_fire(n, 0.3, 0.4, seed, false)?;
                    graphs.push((g, json!({"ff": {"n": n, "seed": seed}}), vec![seed]));
                }
            }
        }
    }
    let mut sink = record_sink(out)?;
    for (graph, source, seeds) in &graphs {
        let inst = Instance::with_default_costs(graph)?;
        for &seed in seeds {
            let config = SolveConfig {
                epsilon: args.epsilon,
                k: args.k,
                seed,
                engine,
                ..SolveConfig::default()
            };
            let record = bench::mis_bench(graph, &inst, &config, args.runs)?;
            let params =
                json!({"source": source, "epsilon": args.epsilon, "k": args.k, "seed": seed, "runs": args.runs});
            emit(&mut *sink, &RunRecord::new("mis-bench", graph, &params, &record)?)?;
        }
    }
    Ok(())
}
