use super::aggregate::{AggId, AggValue, Aggregators, Reducer};
use super::engine::{MasterContext, VertexContext};

/// Phase enumerations exchanged through an integer aggregator.
pub trait PhaseCode: Copy + Sized {
    fn code(self) -> i64;
    fn from_code(code: i64) -> Option<Self>;
}

/// The `State` / `SwitchState` aggregator pair that drives multi-phase
/// programs.
///
/// The master publishes the current phase in `state`. Every vertex that runs
/// writes `true` into `switch` when it sent nothing during the superstep; the
/// AND across vertices is therefore `true` exactly when the phase has gone
/// quiet and the master may move on.
#[derive(Clone, Copy, Debug)]
pub struct PhaseSwitch {
    pub state: AggId,
    pub switch: AggId,
}

impl PhaseSwitch {
    pub fn register<P: PhaseCode>(aggs: &mut Aggregators, initial: P) -> Self {
        PhaseSwitch {
            state: aggs.register_persistent("State", Reducer::Max, AggValue::Int(initial.code())),
            switch: aggs.register("SwitchState", Reducer::And, AggValue::Bool(true)),
        }
    }

    /// Current phase as seen by a vertex; an unknown code aborts the run.
    pub fn read<P: PhaseCode, M>(&self, ctx: &mut VertexContext<'_, M>) -> Option<P> {
        let code = ctx.aggregated(self.state).as_int();
        let phase = P::from_code(code);
        if phase.is_none() {
            ctx.fail(format!("unknown phase code {code}"));
        }
        phase
    }

    pub fn report_quiet<M>(&self, ctx: &mut VertexContext<'_, M>, quiet: bool) {
        ctx.aggregate(self.switch, AggValue::Bool(quiet));
    }

    pub fn current<P: PhaseCode>(&self, ctx: &MasterContext<'_>) -> Option<P> {
        P::from_code(ctx.aggregated(self.state).as_int())
    }

    /// True when the previous superstep was quiet.
    pub fn quiet(&self, ctx: &MasterContext<'_>) -> bool {
        ctx.aggregated(self.switch).as_bool() && ctx.pending_messages() == 0
    }

    pub fn set<P: PhaseCode>(&self, ctx: &mut MasterContext<'_>, phase: P) {
        ctx.set(self.state, AggValue::Int(phase.code()));
    }
}
