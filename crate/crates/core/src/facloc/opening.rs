use serde::{Deserialize, Serialize};

use super::{Instance, RadiusSchedule};
use crate::ads::{Sketch, SketchSet};
use crate::bsp::{
    AggId, AggValue, Aggregators, Bounded, Engine, FrontRelay, IdSet, MasterCompute, MasterContext, PhaseCode,
    PhaseSwitch, Reducer, RunMetrics, VertexContext, VertexProgram,
};
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Expand,
    Freeze,
}

impl PhaseCode for Phase {
    fn code(self) -> i64 {
        match self {
            Phase::Expand => 0,
            Phase::Freeze => 1,
        }
    }

    fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(Phase::Expand),
            1 => Some(Phase::Freeze),
            _ => None,
        }
    }
}

/// Client entries of one facility's sketch in distance order, with a cursor
/// marking the current radius.
///
/// `mass` is the HIP weight of passed entries that were unfrozen when passed
/// and have not been frozen since, i.e. `N̂_unfrozen(f, α)`.
#[derive(Clone, Debug)]
struct Tracker {
    distance: Vec<f64>,
    vertex: Vec<VertexId>,
    weight: Vec<f64>,
    counted: Vec<bool>,
    by_id: Vec<(VertexId, u32)>,
    cursor: usize,
    mass: f64,
}

impl Tracker {
    fn new(sketch: &Sketch, is_client: &[bool]) -> Self {
        let mut t = Tracker {
            distance: Vec::new(),
            vertex: Vec::new(),
            weight: Vec::new(),
            counted: Vec::new(),
            by_id: Vec::new(),
            cursor: 0,
            mass: 0.0,
        };
        for (e, &w) in sketch.entries().iter().zip(sketch.weights()) {
            if is_client[e.vertex as usize] {
                t.by_id.push((e.vertex, t.vertex.len() as u32));
                t.distance.push(e.distance);
                t.vertex.push(e.vertex);
                t.weight.push(w);
                t.counted.push(false);
            }
        }
        t.by_id.sort_unstable();
        t
    }

    fn forget(&mut self, newly_frozen: &IdSet) {
        for c in newly_frozen.iter() {
            if let Ok(i) = self.by_id.binary_search_by_key(&c, |p| p.0) {
                let pos = self.by_id[i].1 as usize;
                if pos < self.cursor && self.counted[pos] {
                    self.counted[pos] = false;
                    self.mass -= self.weight[pos];
                }
            }
        }
        if self.mass < 0.0 {
            self.mass = 0.0;
        }
    }

    fn advance(&mut self, radius: f64, frozen: &IdSet) {
        while self.cursor < self.distance.len() && self.distance[self.cursor] <= radius {
            if !frozen.contains(self.vertex[self.cursor]) {
                self.counted[self.cursor] = true;
                self.mass += self.weight[self.cursor];
            }
            self.cursor += 1;
        }
    }
}

struct OpeningVertex {
    tracker: Option<Tracker>,
    q: f64,
    open_step: Option<u32>,
    trace: Vec<f64>,
    frozen_step: Option<u32>,
    frozen_by: Option<VertexId>,
    relay: FrontRelay<u32>,
}

#[derive(Clone, Copy)]
struct Ids {
    phases: PhaseSwitch,
    step: AggId,
    delta: AggId,
    frozen: AggId,
    newly: AggId,
    opened: AggId,
}

impl Ids {
    fn register(aggs: &mut Aggregators) -> Self {
        let empty = AggValue::Ids(IdSet::new());
        Ids {
            phases: PhaseSwitch::register(aggs, Phase::Expand),
            step: aggs.register_persistent("Step", Reducer::Max, AggValue::Int(0)),
            delta: aggs.register("FrozenDelta", Reducer::Union, empty.clone()),
            frozen: aggs.register_persistent("FrozenSet", Reducer::Union, empty.clone()),
            newly: aggs.register("NewlyFrozen", Reducer::Union, empty),
            opened: aggs.register("Opened", Reducer::Sum, AggValue::Int(0)),
        }
    }
}

struct OpeningProgram<'a> {
    instance: &'a Instance,
    schedule: RadiusSchedule,
    ids: Ids,
    trace: bool,
}

impl OpeningProgram<'_> {
    fn deliver(&self, ctx: &mut VertexContext<'_, Bounded<u32>>, state: &mut OpeningVertex, msg: &Bounded<u32>) {
        if !self.instance.is_client(ctx.id()) {
            return;
        }
        if state.frozen_step.is_none() {
            state.frozen_step = Some(msg.payload);
            state.frozen_by = Some(msg.origin);
            ctx.aggregate(self.ids.newly, AggValue::Ids(IdSet::singleton(ctx.id())));
        }
    }
}

impl VertexProgram for OpeningProgram<'_> {
    type State = OpeningVertex;
    type Message = Bounded<u32>;

    fn compute(
        &self,
        ctx: &mut VertexContext<'_, Bounded<u32>>,
        state: &mut OpeningVertex,
        messages: Vec<Bounded<u32>>,
    ) {
        let Some(phase) = self.ids.phases.read::<Phase, _>(ctx) else {
            return;
        };
        if phase == Phase::Expand {
            state.relay.clear();
            let step = ctx.aggregated(self.ids.step).as_int() as u32;
            if state.open_step.is_none() {
                if let Some(tracker) = state.tracker.as_mut() {
                    let alpha = self.schedule.alpha(step);
                    tracker.forget(ctx.aggregated(self.ids.delta).as_ids());
                    tracker.advance(alpha, ctx.aggregated(self.ids.frozen).as_ids());
                    state.q += self.schedule.epsilon * alpha * tracker.mass;
                    if self.trace {
                        state.trace.push(state.q);
                    }
                    if state.q >= self.instance.cost(ctx.id()) {
                        state.open_step = Some(step);
                        state.tracker = None;
                        ctx.aggregate(self.ids.opened, AggValue::Int(1));
                        let local = state.relay.originate(
                            ctx,
                            step,
                            self.schedule.reach(step),
                            step,
                            Direction::Outgoing,
                            |m| m,
                        );
                        if let Some(local) = local {
                            self.deliver(ctx, state, &local);
                        }
                    }
                }
            }
        }
        for msg in state.relay.receive(ctx, messages, Direction::Outgoing, |m| m) {
            self.deliver(ctx, state, &msg);
        }
        let quiet = ctx.messages_sent() == 0;
        self.ids.phases.report_quiet(ctx, quiet);
        ctx.vote_to_halt();
    }
}

/// Why the ladder loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopExit {
    AllOpen,
    AllFrozen,
    /// The radius passed `γ(1+ε)` with work left.
    Cap,
}

struct OpeningMaster {
    ids: Ids,
    schedule: RadiusSchedule,
    step: u32,
    ladder_steps: u32,
    frozen_all: IdSet,
    delta: Vec<VertexId>,
    unfrozen: usize,
    unopened: usize,
    exit: Option<LoopExit>,
}

impl MasterCompute for OpeningMaster {
    fn compute(&mut self, ctx: &mut MasterContext<'_>) {
        let first = ctx.superstep() == 0;
        if !first {
            self.delta.extend(ctx.aggregated(self.ids.newly).as_ids().iter());
            self.unopened -= ctx.aggregated(self.ids.opened).as_int() as usize;
        }
        if !first && !self.ids.phases.quiet(ctx) {
            self.ids.phases.set(ctx, Phase::Freeze);
            ctx.set_phase("freeze");
            return;
        }

        let delta = IdSet::from_unsorted(std::mem::take(&mut self.delta));
        self.unfrozen -= delta.len();
        let next = if first { 0 } else { self.step + 1 };
        self.exit = if self.unopened == 0 {
            Some(LoopExit::AllOpen)
        } else if self.unfrozen == 0 {
            Some(LoopExit::AllFrozen)
        } else if self.schedule.beyond_cap(next) {
            Some(LoopExit::Cap)
        } else {
            None
        };
        if self.exit.is_some() {
            ctx.halt();
            return;
        }
        if !delta.is_empty() {
            self.frozen_all = self.frozen_all.union(&delta);
            ctx.set(self.ids.frozen, AggValue::Ids(self.frozen_all.clone()));
        }
        ctx.set(self.ids.delta, AggValue::Ids(delta));
        ctx.set(self.ids.step, AggValue::Int(next as i64));
        self.ids.phases.set(ctx, Phase::Expand);
        ctx.set_phase("expand");
        ctx.wake_all();
        self.step = next;
        self.ladder_steps += 1;
    }
}

/// Role of a vertex as a client after the ladder loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientStatus {
    NotClient,
    Frozen { step: u32 },
    Unfrozen,
}

/// State after the ladder loop, before residual assignment and selection.
#[derive(Clone, Debug)]
pub struct OpeningOutcome {
    pub schedule: RadiusSchedule,
    /// Ladder step at which each facility opened.
    pub open_step: Vec<Option<u32>>,
    pub client_status: Vec<ClientStatus>,
    /// A facility opened at the client's freeze step whose broadcast froze it.
    pub frozen_by: Vec<Option<VertexId>>,
    /// Final accumulator values.
    pub q: Vec<f64>,
    /// Accumulator after each ladder step while the facility was unopened
    /// (empty unless tracing was requested).
    pub q_trace: Vec<Vec<f64>>,
    pub ladder_steps: u32,
    pub exit: LoopExit,
    pub metrics: RunMetrics,
}

impl OpeningOutcome {
    pub fn opened(&self) -> Vec<VertexId> {
        self.open_step
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .map(|(v, _)| v as VertexId)
            .collect()
    }

    pub fn unfrozen_clients(&self) -> Vec<VertexId> {
        self.client_status
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == ClientStatus::Unfrozen)
            .map(|(v, _)| v as VertexId)
            .collect()
    }
}

/// Runs the ball-expansion loop: at every ladder step each unopened facility
/// adds `εα_j·N̂_unfrozen(f, α_j)` to `q(f)` and opens once `q(f) ≥ c(f)`;
/// newly opened facilities freeze every unfrozen client within `(1+ε)α_j`.
pub fn run_opening(
    graph: &Graph,
    instance: &Instance,
    sketches: &SketchSet,
    schedule: RadiusSchedule,
    trace: bool,
    engine: &Engine,
) -> Result<OpeningOutcome> {
    instance.check_graph(graph)?;
    let n = graph.vertex_count();
    if sketches.vertex_count() != n {
        return Err(Error::validation("sketch set does not match the graph"));
    }
    let mut aggs = Aggregators::new();
    let ids = Ids::register(&mut aggs);
    let states = (0..n as VertexId)
        .map(|v| OpeningVertex {
            tracker: instance
                .is_facility(v)
                .then(|| Tracker::new(sketches.get(v), instance.client_flags())),
            q: 0.0,
            open_step: None,
            trace: Vec::new(),
            frozen_step: None,
            frozen_by: None,
            relay: FrontRelay::default(),
        })
        .collect();
    let program = OpeningProgram {
        instance,
        schedule,
        ids,
        trace,
    };
    let mut master = OpeningMaster {
        ids,
        schedule,
        step: 0,
        ladder_steps: 0,
        frozen_all: IdSet::new(),
        delta: Vec::new(),
        unfrozen: instance.client_count(),
        unopened: instance.facility_count(),
        exit: None,
    };
    let out = engine.run(graph, &program, &mut master, &aggs, states);
    out.status.check("ladder loop")?;
    let exit = master
        .exit
        .ok_or_else(|| Error::Contract("ladder loop stopped without an exit condition".into()))?;

    let mut outcome = OpeningOutcome {
        schedule,
        open_step: Vec::with_capacity(n),
        client_status: Vec::with_capacity(n),
        frozen_by: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        q_trace: Vec::new(),
        ladder_steps: master.ladder_steps,
        exit,
        metrics: out.metrics,
    };
    for (v, s) in out.states.into_iter().enumerate() {
        outcome.open_step.push(s.open_step);
        outcome
            .client_status
            .push(match (instance.is_client(v as VertexId), s.frozen_step) {
                (false, _) => ClientStatus::NotClient,
                (true, Some(step)) => ClientStatus::Frozen { step },
                (true, None) => ClientStatus::Unfrozen,
            });
        outcome.frozen_by.push(s.frozen_by);
        outcome.q.push(s.q);
        if trace {
            outcome.q_trace.push(s.trace);
        }
    }
    Ok(outcome)
}
