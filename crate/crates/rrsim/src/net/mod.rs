//! Network substrate: radio model, neighbor tables, Gabriel-graph
//! planarization, greedy + face routing, and the packet vocabulary shared
//! by every protocol.
//!
//! Routing decisions are pure functions over a node's local view (its own
//! perceived position plus neighbors' advertised positions); the event
//! engine wires them to packets. [`topo`] runs the same decision functions
//! over a static global snapshot, which is what the exhaustive-search
//! oracles in the tests compare against.

pub mod packet;
pub mod planar;
pub mod radio;
pub mod routing;
pub mod table;
pub mod topo;

pub use packet::{Body, Nav, Packet, RouteMode};
pub use routing::{FaceStep, PerimeterState};
pub use table::NeighborTable;
