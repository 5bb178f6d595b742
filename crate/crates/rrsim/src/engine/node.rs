//! Per-node runtime state: position, liveness, neighbor table, planar
//! cache, and the protocol state machines.

use crate::net::table::NeighborTable;
use crate::world::geometry::Point;
use crate::world::grid::RegionId;
use crate::world::mobility::RwpState;
use crate::world::{KeyId, NodeId};
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// Planarized neighbor set with the positions it was computed from; kept
/// until the replanarization interval elapses, so motion between
/// recomputations is deliberately invisible to face routing.
#[derive(Clone, Debug)]
pub struct PlanarCache {
    pub computed_at: f64,
    pub edges: Vec<(NodeId, Point)>,
}

// ---------------------------------------------------------------------
// Region-rendezvous per-node state
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StoredVal {
    pub value: Vec<u8>,
    /// Region the key actually hashes to when this is a proxy record
    /// adopted from an empty region.
    pub proxy_origin: Option<RegionId>,
}

/// Server role for one region.
#[derive(Clone, Debug, Default)]
pub struct RegionServe {
    pub store: BTreeMap<KeyId, StoredVal>,
    /// Next failure-check deadline (reset by insertion geocasts and
    /// failure checks heard from peers).
    pub next_check: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct CacheEntry {
    pub server: NodeId,
    pub pos: Point,
    pub heard: f64,
}

/// Flooder-side insertion/election job.
#[derive(Clone, Debug)]
pub struct InsertJob {
    pub op: Option<u32>,
    pub origin: NodeId,
    pub origin_pos: Point,
    pub region: RegionId,
    pub items: Vec<crate::net::packet::KeyItem>,
    pub category: crate::sim::metrics::MsgCategory,
    /// server -> (advertised position, acked as newly elected)
    pub acks: BTreeMap<NodeId, (Point, bool)>,
    /// None until the first election geocast round.
    pub round: Option<u32>,
    pub p: f64,
    pub acked_origin: bool,
    pub probe_from: Option<(NodeId, Point)>,
}

/// Flooder-side lookup relay job.
#[derive(Clone, Debug)]
pub struct LookupJob {
    pub op: u32,
    pub key: KeyId,
    pub region: RegionId,
    pub origin: NodeId,
    pub origin_pos: Point,
    pub geocast_done: bool,
    /// A live server answered "no such key".
    pub saw_not_found: bool,
}

/// Proxy records held on behalf of an empty region.
#[derive(Clone, Debug)]
pub struct ProxyWatch {
    pub items: Vec<crate::net::packet::KeyItem>,
    pub next_probe: f64,
}

#[derive(Clone, Debug)]
pub enum RrTimer {
    /// Election round deadline for an insert job.
    InsertRound { job: u64 },
    /// Anycast / geocast answer window for a lookup job.
    LookupWindow { job: u64 },
    /// Reply-collection window after sending a failure check.
    CheckWindow { region: RegionId },
}

#[derive(Clone, Debug, Default)]
pub struct RrNode {
    pub serves: BTreeMap<RegionId, RegionServe>,
    pub cache: BTreeMap<RegionId, Vec<CacheEntry>>,
    pub watches: BTreeMap<RegionId, ProxyWatch>,
    pub jobs: BTreeMap<u64, InsertJob>,
    pub lookup_jobs: BTreeMap<u64, LookupJob>,
    /// Failure-check replies collected while a CheckWindow timer runs.
    pub check_replies: BTreeMap<RegionId, BTreeSet<NodeId>>,
    pub timers: BTreeMap<u64, RrTimer>,
}

// ---------------------------------------------------------------------
// GHT per-node state
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GhtReplica {
    pub value: Vec<u8>,
    pub hash_index: u32,
    pub is_home: bool,
    pub last_refresh: f64,
    /// A stale replica announces itself as the new home at most once per
    /// freshness stamp; without this latch a holder the refresh walks no
    /// longer visit would re-stamp itself forever and never expire.
    pub takeover_fired: bool,
}

#[derive(Clone, Debug, Default)]
pub struct GhtNode {
    pub replicas: BTreeMap<KeyId, GhtReplica>,
}

// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Node {
    pub true_pos: Point,
    /// Advertised (perceived) position: true position plus a fixed error
    /// offset, clamped to the bounds.
    pub perceived: Point,
    pub err_offset: (f64, f64),
    pub alive: bool,
    pub table: NeighborTable,
    pub planar: Option<PlanarCache>,
    pub rwp: Option<RwpState>,
    /// Flood/geocast duplicate suppression by packet id.
    pub seen: HashSet<u64>,
    pub rr: RrNode,
    pub ght: GhtNode,
    /// Flooding-baseline local store.
    pub local_store: BTreeMap<KeyId, Vec<u8>>,
    /// Centralized-baseline store (populated only on the central node).
    pub central_store: BTreeMap<KeyId, Vec<u8>>,
}

impl Node {
    pub fn new(true_pos: Point, perceived: Point) -> Self {
        Node {
            true_pos,
            perceived,
            err_offset: (perceived.x - true_pos.x, perceived.y - true_pos.y),
            alive: true,
            table: NeighborTable::new(),
            planar: None,
            rwp: None,
            seen: HashSet::new(),
            rr: RrNode::default(),
            ght: GhtNode::default(),
            local_store: BTreeMap::new(),
            central_store: BTreeMap::new(),
        }
    }

    /// Total records held, across every protocol role.
    pub fn stored_count(&self) -> u32 {
        let rr: usize = self.rr.serves.values().map(|s| s.store.len()).sum();
        (rr + self.ght.replicas.len() + self.local_store.len() + self.central_store.len()) as u32
    }
}
