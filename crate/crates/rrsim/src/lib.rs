//! Deterministic simulation and protocol library for rendezvous-based
//! storage and service discovery in wireless ad hoc and sensor networks.
//!
//! The crate is organized around a single-threaded discrete-event engine:
//!
//! * [`sim`] — event queue, seeded random streams, metrics collection.
//! * [`world`] — geometry, the region grid, key hashing, node placement,
//!   mobility, failures, and location-error injection.
//! * [`net`] — radio model, beacon-driven neighbor tables, Gabriel-graph
//!   planarization, greedy + face routing, geocast and anycast.
//! * [`rr`] — the rendezvous-regions protocol: server election, insertion,
//!   lookup, replication, mobility and failure handling, bootstrap.
//! * [`ght`] — geographic-hash-table baselines (point rendezvous with
//!   home-perimeter replication and periodic refresh).
//! * [`baselines`] — flooding and centralized baselines plus closed-form
//!   overhead calculators.
//! * [`engine`] — binds all of the above into a runnable scenario.
//! * [`harness`] — scenario files, workload generation, experiment suites,
//!   CSV emission.

pub mod baselines;
pub mod engine;
pub mod ght;
pub mod harness;
pub mod net;
pub mod rr;
pub mod sim;
pub mod world;

pub use engine::Sim;
pub use harness::scenario::ScenarioConfig;
pub use sim::metrics::MetricsReport;
