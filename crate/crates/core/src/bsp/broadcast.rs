use std::collections::HashMap;

use super::aggregate::Aggregators;
use super::engine::{Engine, NoMaster, RunMetrics, RunStatus, VertexContext, VertexProgram};
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph, VertexId};

/// A message flooded from `origin` to every vertex within `radius` of it.
///
/// The message carries the distance travelled so far; a copy is relayed over
/// an arc of weight `w` only if `travelled + w <= radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounded<P> {
    pub origin: VertexId,
    pub tag: u32,
    pub radius: f64,
    pub travelled: f64,
    pub payload: P,
}

/// Per-vertex relay state: the shortest travelled distance seen for every
/// `(origin, tag)`.
#[derive(Clone, Debug, Default)]
pub struct RelayMemory {
    best: HashMap<(VertexId, u32), f64>,
}

impl RelayMemory {
    pub fn clear(&mut self) {
        self.best.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty()
    }

    /// Starts a broadcast at the calling vertex and returns the local copy.
    pub fn originate<P: Clone, M>(
        &mut self,
        ctx: &mut VertexContext<'_, M>,
        tag: u32,
        radius: f64,
        payload: P,
        direction: Direction,
        wrap: impl Fn(Bounded<P>) -> M,
    ) -> Bounded<P> {
        let msg = Bounded {
            origin: ctx.id(),
            tag,
            radius,
            travelled: 0.0,
            payload,
        };
        self.best.insert((msg.origin, tag), 0.0);
        relay(ctx, &msg, direction, &wrap);
        msg
    }

    /// Consumes received copies. Keeps the shortest copy per `(origin, tag)`;
    /// copies that improve on everything seen before are relayed further and
    /// returned, ordered by `(origin, tag)`.
    pub fn receive<P: Clone, M>(
        &mut self,
        ctx: &mut VertexContext<'_, M>,
        incoming: impl IntoIterator<Item = Bounded<P>>,
        direction: Direction,
        wrap: impl Fn(Bounded<P>) -> M,
    ) -> Vec<Bounded<P>> {
        let mut round: Vec<Bounded<P>> = incoming.into_iter().collect();
        round.sort_by(|a, b| {
            (a.origin, a.tag)
                .cmp(&(b.origin, b.tag))
                .then(a.travelled.total_cmp(&b.travelled))
        });
        round.dedup_by(|later, first| later.origin == first.origin && later.tag == first.tag);
        round.retain(|m| {
            let seen = self.best.entry((m.origin, m.tag)).or_insert(f64::INFINITY);
            if m.travelled < *seen {
                *seen = m.travelled;
                true
            } else {
                false
            }
        });
        for m in &round {
            relay(ctx, m, direction, &wrap);
        }
        round
    }
}

/// Per-vertex relay state for many concurrent broadcasts that share a key
/// (`tag`) and are only needed for their best payload: a copy is forwarded
/// only if no copy seen earlier under the same key has at least as much
/// remaining budget and a payload at most as large.
#[derive(Clone, Debug, Default)]
pub struct FrontRelay<P> {
    fronts: HashMap<u32, Vec<(f64, P)>>,
}

impl<P: Clone + PartialOrd> FrontRelay<P> {
    pub fn clear(&mut self) {
        self.fronts.clear();
    }

    fn admit(&mut self, msg: &Bounded<P>) -> bool {
        let remaining = msg.radius - msg.travelled;
        let front = self.fronts.entry(msg.tag).or_default();
        if front.iter().any(|(r, p)| *r >= remaining && *p <= msg.payload) {
            return false;
        }
        front.retain(|(r, p)| !(remaining >= *r && msg.payload <= *p));
        front.push((remaining, msg.payload.clone()));
        true
    }

    /// Starts a broadcast at the calling vertex and returns the local copy,
    /// or `None` if an earlier copy dominates it.
    pub fn originate<M>(
        &mut self,
        ctx: &mut VertexContext<'_, M>,
        tag: u32,
        radius: f64,
        payload: P,
        direction: Direction,
        wrap: impl Fn(Bounded<P>) -> M,
    ) -> Option<Bounded<P>> {
        let msg = Bounded {
            origin: ctx.id(),
            tag,
            radius,
            travelled: 0.0,
            payload,
        };
        if !self.admit(&msg) {
            return None;
        }
        relay(ctx, &msg, direction, &wrap);
        Some(msg)
    }

    /// Consumes received copies in `(tag, travelled, payload, origin)` order,
    /// relays the undominated ones and returns them in that order.
    pub fn receive<M>(
        &mut self,
        ctx: &mut VertexContext<'_, M>,
        incoming: impl IntoIterator<Item = Bounded<P>>,
        direction: Direction,
        wrap: impl Fn(Bounded<P>) -> M,
    ) -> Vec<Bounded<P>> {
        let mut round: Vec<Bounded<P>> = incoming.into_iter().collect();
        round.sort_by(|a, b| {
            a.tag
                .cmp(&b.tag)
                .then((a.radius - a.travelled).total_cmp(&(b.radius - b.travelled)).reverse())
                .then(a.payload.partial_cmp(&b.payload).unwrap_or(std::cmp::Ordering::Equal))
                .then(a.origin.cmp(&b.origin))
        });
        round.retain(|m| self.admit(m));
        for m in &round {
            relay(ctx, m, direction, &wrap);
        }
        round
    }
}

fn relay<P: Clone, M>(
    ctx: &mut VertexContext<'_, M>,
    msg: &Bounded<P>,
    direction: Direction,
    wrap: &impl Fn(Bounded<P>) -> M,
) {
    let graph = ctx.graph();
    for (u, w) in graph.edges(ctx.id(), direction) {
        let travelled = msg.travelled + w;
        if travelled <= msg.radius {
            ctx.send(
                u,
                wrap(Bounded {
                    travelled,
                    ..msg.clone()
                }),
            );
        }
    }
}

/// Vertices reached by one bounded broadcast.
#[derive(Clone, Debug)]
pub struct Reach {
    /// `(vertex, distance)` sorted by vertex id, origin included.
    pub reached: Vec<(VertexId, f64)>,
    pub metrics: RunMetrics,
}

#[derive(Default)]
struct ReachState {
    distance: Option<f64>,
    memory: RelayMemory,
}

struct ReachProgram {
    origin: VertexId,
    radius: f64,
    direction: Direction,
}

impl VertexProgram for ReachProgram {
    type State = ReachState;
    type Message = Bounded<()>;

    fn compute(&self, ctx: &mut VertexContext<'_, Bounded<()>>, state: &mut ReachState, messages: Vec<Bounded<()>>) {
        if ctx.superstep() == 0 && ctx.id() == self.origin {
            state.memory.originate(ctx, 0, self.radius, (), self.direction, |m| m);
            state.distance = Some(0.0);
        }
        for m in state.memory.receive(ctx, messages, self.direction, |m| m) {
            state.distance = Some(m.travelled);
        }
        ctx.vote_to_halt();
    }
}

/// Floods a payload-free message from `origin` and reports every vertex within
/// `radius` (following `direction`, closed ball).
pub fn broadcast_within(
    graph: &Graph,
    origin: VertexId,
    radius: f64,
    direction: Direction,
    engine: &Engine,
) -> Result<Reach> {
    if origin as usize >= graph.vertex_count() {
        return Err(Error::Validation(format!("origin {origin} out of range")));
    }
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::Validation(format!("radius must be non-negative, got {radius}")));
    }
    let program = ReachProgram {
        origin,
        radius,
        direction,
    };
    let states = (0..graph.vertex_count()).map(|_| ReachState::default()).collect();
    let out = engine.run(graph, &program, &mut NoMaster, &Aggregators::new(), states);
    match out.status {
        RunStatus::Converged => {}
        RunStatus::Timeout => return Err(Error::NonConvergence("broadcast exceeded the superstep limit".into())),
        RunStatus::Failed(msg) => return Err(Error::Contract(msg)),
    }
    let reached = out
        .states
        .iter()
        .enumerate()
        .filter_map(|(v, s)| s.distance.map(|d| (v as VertexId, d)))
        .collect();
    Ok(Reach {
        reached,
        metrics: out.metrics,
    })
}
