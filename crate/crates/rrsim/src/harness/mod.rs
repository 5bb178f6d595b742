//! Scenario configuration, workload generation, experiment suites and CSV
//! emission.

pub mod csv;
pub mod scenario;
pub mod suites;
pub mod workload;

pub use scenario::{Mode, ProtocolKind, ScenarioConfig};
pub use workload::{OriginSel, TimedOp, WorkOp};
