//! Bulk-synchronous vertex-centric execution.

mod aggregate;
mod broadcast;
mod engine;
mod phase;

pub use aggregate::{AggId, AggValue, AggregatorSpec, Aggregators, IdSet, Reducer};
pub use broadcast::{broadcast_within, Bounded, FrontRelay, Reach, RelayMemory};
pub use engine::{
    Engine, EngineConfig, MasterCompute, MasterContext, NoMaster, PhaseStats, RunMetrics, RunOutput, RunStatus,
    VertexContext, VertexProgram,
};
pub use phase::{PhaseCode, PhaseSwitch};
