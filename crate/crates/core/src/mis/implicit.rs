use super::{MisRun, ServiceLayout};
use crate::bsp::{
    AggId, AggValue, Aggregators, Bounded, Engine, FrontRelay, MasterCompute, MasterContext, PhaseCode, PhaseSwitch,
    Reducer, VertexContext, VertexProgram,
};
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph, VertexId};

type Pi = (u64, VertexId);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    /// Active facilities send `(π, step)` to clients.
    Announce,
    /// Clients return the smallest matching `π` to their facilities.
    Reply,
    /// Facilities that hold the smallest `π` of all their clients join and
    /// announce it.
    Select,
    /// Clients forward the selection to their facilities, which leave.
    Relay,
}

impl PhaseCode for Phase {
    fn code(self) -> i64 {
        match self {
            Phase::Announce => 0,
            Phase::Reply => 1,
            Phase::Select => 2,
            Phase::Relay => 3,
        }
    }

    fn from_code(code: i64) -> Option<Self> {
        Some(match code {
            0 => Phase::Announce,
            1 => Phase::Reply,
            2 => Phase::Select,
            3 => Phase::Relay,
            _ => return None,
        })
    }
}

fn keep_min(slot: &mut Option<Pi>, p: Pi) {
    if slot.is_none_or(|cur| p < cur) {
        *slot = Some(p);
    }
}

#[derive(Default)]
struct Vertex {
    active: bool,
    selected: bool,
    heard_by_facility: Option<Pi>,
    heard_by_client: Option<Pi>,
    selected_near_client: Option<Pi>,
    memory: FrontRelay<Pi>,
}

#[derive(Clone, Copy)]
struct Ids {
    phases: PhaseSwitch,
    start: AggId,
    retired: AggId,
}

struct Program<'a> {
    layout: &'a ServiceLayout,
    pi: &'a [u64],
    ids: Ids,
}

type Msg = Bounded<Pi>;

impl Program<'_> {
    fn my_pi(&self, v: VertexId) -> Pi {
        (self.pi[v as usize], v)
    }

    fn receive(&self, ctx: &mut VertexContext<'_, Msg>, state: &mut Vertex, phase: Phase, msg: &Msg) {
        let v = ctx.id();
        let (p, step) = (msg.payload, msg.tag);
        let as_client = self.layout.client_step[v as usize] == Some(step);
        let as_facility = state.active && self.layout.facility_step[v as usize] == Some(step);
        match phase {
            Phase::Announce if as_client => keep_min(&mut state.heard_by_client, p),
            Phase::Select if as_client => keep_min(&mut state.selected_near_client, p),
            Phase::Reply if as_facility => keep_min(&mut state.heard_by_facility, p),
            Phase::Relay if as_facility && p < self.my_pi(v) => {
                state.active = false;
                ctx.aggregate(self.ids.retired, AggValue::Int(1));
            }
            _ => {}
        }
    }
}

impl VertexProgram for Program<'_> {
    type State = Vertex;
    type Message = Msg;

    fn compute(&self, ctx: &mut VertexContext<'_, Msg>, state: &mut Vertex, messages: Vec<Msg>) {
        let Some(phase) = self.ids.phases.read::<Phase, _>(ctx) else {
            return;
        };
        let v = ctx.id();
        if ctx.aggregated(self.ids.start).as_bool() {
            state.memory.clear();
            let fstep = self.layout.facility_step[v as usize];
            let cstep = self.layout.client_step[v as usize];
            let origin = match phase {
                Phase::Announce => {
                    state.heard_by_facility = None;
                    state.heard_by_client = None;
                    state.selected_near_client = None;
                    fstep
                        .filter(|_| state.active)
                        .map(|s| (self.my_pi(v), s, Direction::Outgoing))
                }
                Phase::Reply => cstep
                    .zip(state.heard_by_client)
                    .map(|(s, p)| (p, s, Direction::Incoming)),
                Phase::Select => {
                    let wins = state.active && state.heard_by_facility.is_none_or(|m| m == self.my_pi(v));
                    if wins {
                        state.active = false;
                        state.selected = true;
                        ctx.aggregate(self.ids.retired, AggValue::Int(1));
                        fstep.map(|s| (self.my_pi(v), s, Direction::Outgoing))
                    } else {
                        None
                    }
                }
                Phase::Relay => cstep
                    .zip(state.selected_near_client)
                    .map(|(s, p)| (p, s, Direction::Incoming)),
            };
            if let Some((p, step, direction)) = origin {
                let radius = self.layout.radius(step);
                if let Some(local) = state.memory.originate(ctx, step, radius, p, direction, |m| m) {
                    self.receive(ctx, state, phase, &local);
                }
            }
        }
        let direction = match phase {
            Phase::Announce | Phase::Select => Direction::Outgoing,
            Phase::Reply | Phase::Relay => Direction::Incoming,
        };
        for msg in state.memory.receive(ctx, messages, direction, |m| m) {
            self.receive(ctx, state, phase, &msg);
        }
        let quiet = ctx.messages_sent() == 0;
        self.ids.phases.report_quiet(ctx, quiet);
        ctx.vote_to_halt();
    }
}

struct Master {
    ids: Ids,
    remaining: usize,
    round: u32,
    cap: u32,
    phase: Phase,
    overflow: bool,
}

impl MasterCompute for Master {
    fn compute(&mut self, ctx: &mut MasterContext<'_>) {
        if ctx.superstep() > 0 {
            self.remaining -= ctx.aggregated(self.ids.retired).as_int() as usize;
            if !self.ids.phases.quiet(ctx) {
                return;
            }
            self.phase = match self.phase {
                Phase::Announce => Phase::Reply,
                Phase::Reply => Phase::Select,
                Phase::Select => Phase::Relay,
                Phase::Relay => {
                    self.round += 1;
                    Phase::Announce
                }
            };
        }
        if self.phase == Phase::Announce {
            if self.remaining == 0 {
                ctx.halt();
                return;
            }
            if self.round >= self.cap {
                self.overflow = true;
                ctx.fail(format!("greedy MIS exceeded {} rounds", self.cap));
                return;
            }
        }
        self.ids.phases.set(ctx, self.phase);
        ctx.set(self.ids.start, AggValue::Bool(true));
        ctx.set_phase(match self.phase {
            Phase::Announce => "announce",
            Phase::Reply => "reply",
            Phase::Select => "select",
            Phase::Relay => "relay",
        });
        ctx.wake_all();
    }
}

/// `⌈log₂² n⌉`, at least 1.
pub(crate) fn round_cap(n: usize) -> u32 {
    let l = (n.max(2) as f64).log2();
    ((l * l).ceil() as u32).max(1)
}

/// Greedy MIS of the conflict graph without building it: facilities and
/// clients exchange `(π, step)` pairs through bounded broadcasts of radius
/// `(1+ε)α_step`, and only pairs with matching steps count.
pub fn greedy_mis_implicit(graph: &Graph, layout: &ServiceLayout, pi: &[u64], engine: &Engine) -> Result<MisRun> {
    let n = graph.vertex_count();
    if layout.facility_step.len() != n || layout.client_step.len() != n || pi.len() != n {
        return Err(Error::validation("layout and priorities must cover every vertex"));
    }
    let mut aggs = Aggregators::new();
    let ids = Ids {
        phases: PhaseSwitch::register(&mut aggs, Phase::Announce),
        start: aggs.register("PhaseStart", Reducer::Or, AggValue::Bool(false)),
        retired: aggs.register("Retired", Reducer::Sum, AggValue::Int(0)),
    };
    let states = layout
        .facility_step
        .iter()
        .map(|s| Vertex {
            active: s.is_some(),
            ..Vertex::default()
        })
        .collect();
    let mut master = Master {
        ids,
        remaining: layout.facility_step.iter().filter(|s| s.is_some()).count(),
        round: 0,
        cap: round_cap(n),
        phase: Phase::Announce,
        overflow: false,
    };
    let program = Program { layout, pi, ids };
    let out = engine.run(graph, &program, &mut master, &aggs, states);
    if master.overflow {
        return Err(Error::NonConvergence(format!(
            "greedy MIS exceeded {} rounds",
            master.cap
        )));
    }
    out.status.check("greedy MIS")?;
    let selected = out
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.selected)
        .map(|(v, _)| v as VertexId)
        .collect();
    Ok(MisRun {
        selected,
        rounds: master.round,
        metrics: out.metrics,
    })
}
