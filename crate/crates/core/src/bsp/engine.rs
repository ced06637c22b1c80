use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{AggId, AggValue, Aggregators};
use crate::graph::{Graph, VertexId};

/// A vertex-centric program.
///
/// `compute` is called once per superstep for every active vertex and for
/// every halted vertex that has incoming messages. It sees only its own state,
/// the messages sent to it in the previous superstep and the aggregator
/// values published for the current superstep.
pub trait VertexProgram: Sync {
    type State: Send;
    type Message: Send;

    fn compute(
        &self,
        ctx: &mut VertexContext<'_, Self::Message>,
        state: &mut Self::State,
        messages: Vec<Self::Message>,
    );
}

/// Centralized hook executed alone at every barrier, before the next
/// superstep starts.
pub trait MasterCompute {
    fn compute(&mut self, ctx: &mut MasterContext<'_>);
}

/// Master that never intervenes.
pub struct NoMaster;

impl MasterCompute for NoMaster {
    fn compute(&mut self, _ctx: &mut MasterContext<'_>) {}
}

#[derive(Clone, Copy, Debug)]
pub struct EngineConfig {
    /// Number of vertex shards executed concurrently within a superstep.
    pub workers: usize,
    pub max_supersteps: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_supersteps: 1_000_000,
        }
    }
}

impl EngineConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_max_supersteps(mut self, max: u64) -> Self {
        self.max_supersteps = max;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub supersteps: u64,
    pub messages: u64,
}

/// Counters collected over a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub supersteps: u64,
    pub messages: u64,
    pub phases: BTreeMap<String, PhaseStats>,
}

impl RunMetrics {
    /// Adds another run's counters, prefixing its phase names.
    pub fn absorb(&mut self, prefix: &str, other: &RunMetrics) {
        self.supersteps += other.supersteps;
        self.messages += other.messages;
        for (name, stats) in &other.phases {
            let entry = self.phases.entry(format!("{prefix}{name}")).or_default();
            entry.supersteps += stats.supersteps;
            entry.messages += stats.messages;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    /// Every vertex halted with no message in flight, or the master stopped
    /// the run.
    Converged,
    /// `max_supersteps` reached while work remained; states are partial.
    Timeout,
    /// A vertex or the master reported a fatal error.
    Failed(String),
}

impl RunStatus {
    /// Maps a non-converged status to the matching error; `what` names the
    /// computation in the message.
    pub fn check(&self, what: &str) -> crate::Result<()> {
        match self {
            RunStatus::Converged => Ok(()),
            RunStatus::Timeout => Err(crate::Error::NonConvergence(format!("{what} hit the superstep limit"))),
            RunStatus::Failed(msg) => Err(crate::Error::Contract(format!("{what}: {msg}"))),
        }
    }
}

pub struct RunOutput<S> {
    pub states: Vec<S>,
    pub metrics: RunMetrics,
    pub status: RunStatus,
    /// Aggregator values after the last superstep.
    pub aggregates: Vec<AggValue>,
}

impl<S> RunOutput<S> {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// Per-vertex view of the runtime during `compute`.
pub struct VertexContext<'a, M> {
    vertex: VertexId,
    superstep: u64,
    graph: &'a Graph,
    view: &'a [AggValue],
    aggregators: &'a Aggregators,
    partial: &'a mut [Option<AggValue>],
    outbox: &'a mut Vec<(VertexId, M)>,
    sent: &'a mut u64,
    failure: &'a mut Option<String>,
    halt: bool,
    local_sent: u64,
}

impl<'a, M> VertexContext<'a, M> {
    #[inline]
    pub fn id(&self) -> VertexId {
        self.vertex
    }

    #[inline]
    pub fn superstep(&self) -> u64 {
        self.superstep
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Read access to the topology. Programs only use it for their own
    /// incident arcs.
    #[inline]
    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    #[inline]
    pub fn send(&mut self, to: VertexId, msg: M) {
        *self.sent += 1;
        self.local_sent += 1;
        self.outbox.push((to, msg));
    }

    /// Messages this vertex has sent so far in the current superstep.
    #[inline]
    pub fn messages_sent(&self) -> u64 {
        self.local_sent
    }

    #[inline]
    pub fn aggregated(&self, id: AggId) -> &AggValue {
        &self.view[id.0]
    }

    pub fn aggregate(&mut self, id: AggId, value: AggValue) {
        let reducer = self.aggregators.specs[id.0].reducer;
        let slot = &mut self.partial[id.0];
        if let (Some(AggValue::Ids(acc)), AggValue::Ids(ids)) = (slot.as_mut(), &value) {
            for v in ids.iter() {
                acc.insert(v);
            }
            return;
        }
        *slot = Some(match slot.take() {
            None => value,
            Some(acc) => reducer.combine(&acc, &value),
        });
    }

    #[inline]
    pub fn vote_to_halt(&mut self) {
        self.halt = true;
    }

    /// Aborts the run with a fatal error.
    pub fn fail(&mut self, message: impl Into<String>) {
        if self.failure.is_none() {
            *self.failure = Some(format!("vertex {}: {}", self.vertex, message.into()));
        }
    }
}

/// Master view at a barrier.
pub struct MasterContext<'a> {
    superstep: u64,
    values: &'a mut [AggValue],
    aggregators: &'a Aggregators,
    active: usize,
    pending: u64,
    metrics: &'a RunMetrics,
    phase: &'a mut String,
    halt: bool,
    wake_all: bool,
    failure: Option<String>,
}

impl MasterContext<'_> {
    /// Index of the superstep about to run.
    pub fn superstep(&self) -> u64 {
        self.superstep
    }

    /// Value reduced from the writes of the previous superstep.
    pub fn aggregated(&self, id: AggId) -> &AggValue {
        &self.values[id.0]
    }

    /// Overrides an aggregator; vertices read the new value in the upcoming
    /// superstep.
    pub fn set(&mut self, id: AggId, value: AggValue) {
        self.values[id.0] = value;
    }

    pub fn aggregator_name(&self, id: AggId) -> &'static str {
        self.aggregators.specs[id.0].name
    }

    /// Vertices that have not voted to halt.
    pub fn active_vertices(&self) -> usize {
        self.active
    }

    /// Messages waiting to be delivered in the upcoming superstep.
    pub fn pending_messages(&self) -> u64 {
        self.pending
    }

    pub fn metrics(&self) -> &RunMetrics {
        self.metrics
    }

    /// Label under which the following supersteps are counted.
    pub fn set_phase(&mut self, label: impl Into<String>) {
        *self.phase = label.into();
    }

    pub fn halt(&mut self) {
        self.halt = true;
    }

    /// Reactivates every vertex for the upcoming superstep.
    pub fn wake_all(&mut self) {
        self.wake_all = true;
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.failure = Some(message.into());
    }
}

struct ShardOut<M> {
    outbox: Vec<(VertexId, M)>,
    partial: Vec<Option<AggValue>>,
    sent: u64,
    failure: Option<String>,
}

/// In-process Pregel-style engine.
///
/// Vertices are split into `workers` contiguous shards that run concurrently
/// within a superstep. Messages are exchanged only at the barrier and are
/// delivered in sender-id order, so results do not depend on the shard
/// count as long as aggregator reductions are order-independent.
#[derive(Clone, Copy, Debug, Default)]
pub struct Engine {
    pub config: EngineConfig,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Engine { config }
    }

    pub fn run<P, C>(
        &self,
        graph: &Graph,
        program: &P,
        master: &mut C,
        aggregators: &Aggregators,
        mut states: Vec<P::State>,
    ) -> RunOutput<P::State>
    where
        P: VertexProgram,
        C: MasterCompute,
    {
        let n = graph.vertex_count();
        assert_eq!(states.len(), n, "one initial state per vertex");
        let shard_len = n.div_ceil(self.config.workers.max(1)).max(1);

        let mut inbox: Vec<Vec<P::Message>> = (0..n).map(|_| Vec::new()).collect();
        let mut active = vec![true; n];
        let mut values = aggregators.initial_values();
        let mut metrics = RunMetrics::default();
        let mut phase = String::from("main");
        let mut pending: u64 = 0;
        let mut status = RunStatus::Converged;

        for superstep in 0.. {
            let active_count = active.iter().filter(|&&a| a).count();
            let mut mctx = MasterContext {
                superstep,
                values: &mut values,
                aggregators,
                active: active_count,
                pending,
                metrics: &metrics,
                phase: &mut phase,
                halt: false,
                wake_all: false,
                failure: None,
            };
            master.compute(&mut mctx);
            let (halt, wake_all, failure) = (mctx.halt, mctx.wake_all, mctx.failure.take());
            if let Some(msg) = failure {
                status = RunStatus::Failed(format!("master: {msg}"));
                break;
            }
            if halt {
                break;
            }
            if wake_all {
                active.iter_mut().for_each(|a| *a = true);
            }
            if pending == 0 && !active.iter().any(|&a| a) {
                break;
            }
            if superstep >= self.config.max_supersteps {
                status = RunStatus::Timeout;
                break;
            }

            let view: &[AggValue] = &values;
            let outs: Vec<ShardOut<P::Message>> = states
                .par_chunks_mut(shard_len)
                .zip(inbox.par_chunks_mut(shard_len))
                .zip(active.par_chunks_mut(shard_len))
                .enumerate()
                .map(|(shard, ((states, inbox), active))| {
                    let base = shard * shard_len;
                    let mut out = ShardOut {
                        outbox: Vec::new(),
                        partial: vec![None; aggregators.len()],
                        sent: 0,
                        failure: None,
                    };
                    for (i, state) in states.iter_mut().enumerate() {
                        if !active[i] && inbox[i].is_empty() {
                            continue;
                        }
                        let messages = std::mem::take(&mut inbox[i]);
                        let mut ctx = VertexContext {
                            vertex: (base + i) as VertexId,
                            superstep,
                            graph,
                            view,
                            aggregators,
                            partial: &mut out.partial,
                            outbox: &mut out.outbox,
                            sent: &mut out.sent,
                            failure: &mut out.failure,
                            halt: false,
                            local_sent: 0,
                        };
                        program.compute(&mut ctx, state, messages);
                        active[i] = !ctx.halt;
                    }
                    out
                })
                .collect();

            let mut sent = 0;
            let mut failure = None;
            let mut partials: Vec<Option<AggValue>> = vec![None; aggregators.len()];
            for out in outs {
                sent += out.sent;
                if failure.is_none() {
                    failure = out.failure;
                }
                for ((slot, part), spec) in partials.iter_mut().zip(out.partial).zip(&aggregators.specs) {
                    if let Some(v) = part {
                        *slot = Some(match slot.take() {
                            None => v,
                            Some(acc) => spec.reducer.combine(&acc, &v),
                        });
                    }
                }
                for (to, msg) in out.outbox {
                    inbox[to as usize].push(msg);
                }
            }
            // Publish the reduced values for the next superstep.
            for (i, spec) in aggregators.specs.iter().enumerate() {
                let base = if spec.persistent {
                    values[i].clone()
                } else {
                    spec.initial.clone()
                };
                values[i] = match partials[i].take() {
                    None => base,
                    Some(v) => spec.reducer.combine(&base, &v),
                };
            }

            metrics.supersteps += 1;
            metrics.messages += sent;
            let stats = metrics.phases.entry(phase.clone()).or_default();
            stats.supersteps += 1;
            stats.messages += sent;
            pending = sent;

            if let Some(msg) = failure {
                status = RunStatus::Failed(msg);
                break;
            }
        }

        RunOutput {
            states,
            metrics,
            status,
            aggregates: values,
        }
    }
}
