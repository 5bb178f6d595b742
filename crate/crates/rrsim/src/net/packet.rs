//! Packet envelope and protocol message vocabulary.
//!
//! The envelope carries addressing (`Nav`), routing mode state, TTL and
//! bookkeeping; `Body` is the protocol payload the endpoint state machines
//! dispatch on.

use super::routing::PerimeterState;
use crate::sim::metrics::MsgCategory;
use crate::world::geometry::Point;
use crate::world::grid::RegionId;
use crate::world::{KeyId, NodeId};

/// Routing mode of a routed packet.
#[derive(Clone, Debug, PartialEq)]
pub enum RouteMode {
    Greedy,
    Perimeter(PerimeterState),
}

/// How a packet is addressed and moved.
#[derive(Clone, Debug, PartialEq)]
pub enum Nav {
    /// Routed toward a specific node (delivery by id; the point guides
    /// greedy/face forwarding).
    Unicast { target: NodeId, target_pos: Point, mode: RouteMode },
    /// Routed toward a bare point; terminates only via the unreachable
    /// (home-node) condition.
    ToPoint { dest: Point, mode: RouteMode },
    /// Routed toward a region's center; the first in-region node takes
    /// delivery as the flooder.
    ToRegion { region: RegionId, dest: Point, mode: RouteMode },
    /// Scoped flood: every in-region first receipt rebroadcasts once.
    RegionFlood { region: RegionId },
    /// Unscoped flood (the flooding baseline's lookup wave).
    Flood,
    /// Face walk outside a region launched by a border node during
    /// flood+face geocast; ends on region re-entry or hop budget.
    FaceProbe { region: RegionId, budget: u32 },
    /// Face traversal around a fixed point with no greedy reversion;
    /// visits every node of the enclosing face and ends where the first
    /// edge would repeat.
    PerimeterWalk { dest: Point, st: PerimeterState },
}

/// One key with its value and, for records adopted from an empty region,
/// the region they originally hashed to.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyItem {
    pub key: KeyId,
    pub value: Vec<u8>,
    pub proxy_origin: Option<RegionId>,
}

/// Index of the operation in the run's operation table; used to correlate
/// acks/replies with pending operations.
pub type OpId = u32;

/// Region-rendezvous insertion payload, shared by fresh insertions,
/// mobility handoffs and empty-region proxy probes.
#[derive(Clone, Debug, PartialEq)]
pub struct RrInsertBody {
    /// Operation waiting for an end-to-end ack, if any.
    pub op: Option<OpId>,
    pub items: Vec<KeyItem>,
    /// Region this packet is currently addressed to (the fallback path may
    /// re-target it away from the region the keys hash to).
    pub region: RegionId,
    /// Set on empty-region probes: the node holding the proxy records.
    pub probe_from: Option<(NodeId, Point)>,
    /// Set once a flooder geocasts: (flooder, flooder position, job id)
    /// that servers acknowledge to.
    pub ack_to: Option<(NodeId, Point, u64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GhtWalkKind {
    /// Store replicas along the walk.
    Put { op: Option<OpId> },
    /// Collect the value; replicas untouched.
    Get { op: OpId },
    /// Re-store replicas and re-establish the home node.
    Refresh,
}

/// Protocol payloads.
#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    /// Payload-less geocast used by tests to observe receiver sets.
    Ping,

    // --- region rendezvous ---
    RrInsert(RrInsertBody),
    /// Server -> flooder: stored, here is who I am.
    RrServerAck { job: u64, server: NodeId, server_pos: Point, region: RegionId, is_new: bool },
    /// Flooder -> origin: insertion finished.
    RrInsertDone { op: OpId },
    /// New-region flooder -> proxy holder: records are installed in their
    /// real region (or adopted closer); drop the proxies.
    RrProxyResolved { keys: Vec<KeyId>, origin_region: RegionId },
    /// Proxy holder -> its own region: delete the listed proxy records.
    RrProxyDrop { keys: Vec<KeyId>, origin_region: RegionId },
    /// Election round geocast: non-servers self-elect with probability `p`.
    RrElection {
        job: u64,
        region: RegionId,
        p: f64,
        round: u32,
        items: Vec<KeyItem>,
        flooder: NodeId,
        flooder_pos: Point,
    },
    /// Flooder -> an established server: send your store to the newcomers.
    RrSyncRequest { region: RegionId, newcomers: Vec<(NodeId, Point)> },
    /// Established server -> new server: full region store.
    RrSyncState { region: RegionId, entries: Vec<KeyItem> },
    /// Origin -> region: find the key.
    RrLookup { op: OpId, key: KeyId, region: RegionId },
    /// Anycast to a cached server: answer this lookup via the flooder.
    RrLookupDirect { op: OpId, key: KeyId, region: RegionId, flooder: NodeId, flooder_pos: Point },
    /// Geocast form of the lookup inside the region.
    RrLookupGeo { op: OpId, key: KeyId, region: RegionId, flooder: NodeId, flooder_pos: Point },
    /// Server -> flooder: answer (`serving` false = stale cache, a miss).
    RrLookupReply {
        op: OpId,
        key: KeyId,
        value: Option<Vec<u8>>,
        server: NodeId,
        server_pos: Point,
        region: RegionId,
        serving: bool,
    },
    /// Flooder -> origin: final answer; None = authoritative not-found.
    RrLookupDone { op: OpId, key: KeyId, value: Option<Vec<u8>>, server: Option<(NodeId, Point)> },
    /// Periodic failure-check geocast from one server.
    RrCheck { region: RegionId, checker: NodeId, checker_pos: Point },
    /// Server -> checker: alive.
    RrCheckReply { region: RegionId, from: NodeId },

    // --- geographic hash table ---
    GhtPut { op: Option<OpId>, key: KeyId, value: Vec<u8>, hash_index: u32 },
    GhtGet { op: OpId, key: KeyId, hash_index: u32 },
    /// Periodic refresh routed anew to the hash point; the terminal
    /// becomes (or stays) home and demotes `old_home` if it changed.
    GhtRefresh { key: KeyId, value: Vec<u8>, hash_index: u32, old_home: NodeId },
    /// Home-perimeter traversal; every visited node stores (put/refresh)
    /// or contributes the value (get). `home` launched the walk.
    GhtWalk {
        kind: GhtWalkKind,
        key: KeyId,
        value: Vec<u8>,
        hash_index: u32,
        home: NodeId,
        home_pos: Point,
        found: Option<Vec<u8>>,
        origin: NodeId,
        origin_pos: Point,
    },
    GhtPutAck { op: OpId },
    GhtGetReply { op: OpId, key: KeyId, value: Option<Vec<u8>> },
    /// Route terminal -> stale home: you are no longer the home node.
    GhtDemote { key: KeyId, new_home: NodeId },

    // --- flooding baseline ---
    FloodLookup { op: OpId, key: KeyId },
    FloodReply { op: OpId, key: KeyId, value: Vec<u8> },

    // --- centralized baseline ---
    CentralPut { op: OpId, key: KeyId, value: Vec<u8> },
    CentralPutAck { op: OpId },
    CentralGet { op: OpId, key: KeyId },
    CentralReply { op: OpId, key: KeyId, value: Option<Vec<u8>> },
}

impl Body {
    /// Short stable name for per-kind message accounting.
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Ping => "ping",
            Body::RrInsert(b) if b.probe_from.is_some() => "rr_probe",
            Body::RrInsert(b) if b.op.is_none() => "rr_transfer",
            Body::RrInsert(_) => "rr_insert",
            Body::RrServerAck { .. } => "rr_server_ack",
            Body::RrInsertDone { .. } => "rr_insert_done",
            Body::RrProxyResolved { .. } => "rr_proxy_resolved",
            Body::RrProxyDrop { .. } => "rr_proxy_drop",
            Body::RrElection { .. } => "rr_election",
            Body::RrSyncRequest { .. } => "rr_sync_request",
            Body::RrSyncState { .. } => "rr_sync_state",
            Body::RrLookup { .. } => "rr_lookup",
            Body::RrLookupDirect { .. } => "rr_lookup_direct",
            Body::RrLookupGeo { .. } => "rr_lookup_geo",
            Body::RrLookupReply { .. } => "rr_lookup_reply",
            Body::RrLookupDone { .. } => "rr_lookup_done",
            Body::RrCheck { .. } => "rr_check",
            Body::RrCheckReply { .. } => "rr_check_reply",
            Body::GhtPut { .. } => "ght_put",
            Body::GhtGet { .. } => "ght_get",
            Body::GhtRefresh { .. } => "ght_refresh",
            Body::GhtWalk { kind, .. } => match kind {
                GhtWalkKind::Put { .. } => "ght_walk_put",
                GhtWalkKind::Get { .. } => "ght_walk_get",
                GhtWalkKind::Refresh => "ght_walk_refresh",
            },
            Body::GhtPutAck { .. } => "ght_put_ack",
            Body::GhtGetReply { .. } => "ght_get_reply",
            Body::GhtDemote { .. } => "ght_demote",
            Body::FloodLookup { .. } => "flood_lookup",
            Body::FloodReply { .. } => "flood_reply",
            Body::CentralPut { .. } => "central_put",
            Body::CentralPutAck { .. } => "central_put_ack",
            Body::CentralGet { .. } => "central_get",
            Body::CentralReply { .. } => "central_reply",
        }
    }
}

/// The packet envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    /// Unique per logical packet; floods deduplicate on it and face probes
    /// inherit it from the flood they extend.
    pub id: u64,
    pub category: MsgCategory,
    pub nav: Nav,
    /// Remaining hop budget; strictly decreases per hop, dropped at 0.
    pub ttl: u32,
    pub origin: NodeId,
    pub origin_pos: Point,
    /// Last forwarding node and its advertised position at send time.
    pub prev: Option<(NodeId, Point)>,
    pub hops: u32,
    /// Set at most once, when the first in-region node takes delivery.
    pub flooder_flag: bool,
    pub body: Body,
}

impl Packet {
    pub fn dest_point(&self) -> Option<Point> {
        match &self.nav {
            Nav::Unicast { target_pos, .. } => Some(*target_pos),
            Nav::ToPoint { dest, .. } => Some(*dest),
            Nav::ToRegion { dest, .. } => Some(*dest),
            Nav::PerimeterWalk { dest, .. } => Some(*dest),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_distinguish_insert_variants() {
        let base = RrInsertBody {
            op: Some(1),
            items: vec![],
            region: RegionId(0),
            probe_from: None,
            ack_to: None,
        };
        assert_eq!(Body::RrInsert(base.clone()).kind(), "rr_insert");
        let transfer = RrInsertBody { op: None, ..base.clone() };
        assert_eq!(Body::RrInsert(transfer).kind(), "rr_transfer");
        let probe = RrInsertBody {
            probe_from: Some((NodeId(3), Point::new(0.0, 0.0))),
            ..base
        };
        assert_eq!(Body::RrInsert(probe).kind(), "rr_probe");
    }
}
