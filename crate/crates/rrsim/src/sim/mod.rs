//! Simulation kernel: event queue, seeded random streams, metrics.

pub mod metrics;
pub mod queue;
pub mod rng;

pub use metrics::MetricsReport;
pub use queue::{EventQueue, SimTime};
pub use rng::RngStream;
