//! Geographic hash table: keys hash to points, the unreachable condition
//! finds the home node, and a perimeter walk replicates the record on the
//! face enclosing the hash point. Soft state: homes refresh their keys by
//! re-routing to the hash point; perimeter replicas take over when the
//! refreshes stop, and expire when even takeovers stop.
//!
//! Two flavors differ only in where keys may hash: the plain variant uses
//! the whole area (edge points produce boundary-hugging perimeters), the
//! starred variant rescales hash points into the interior 80% band.

use crate::engine::node::GhtReplica;
use crate::engine::{OpKind, Sim};
use crate::harness::scenario::ProtocolKind;
use crate::net::packet::{Body, GhtWalkKind, Nav, Packet};
use crate::sim::metrics::{LookupOutcome, MsgCategory};
use crate::world::hash::key_to_point;
use crate::world::{KeyId, NodeId};

impl Sim {
    fn ght_interior(&self) -> bool {
        self.cfg.protocol == ProtocolKind::GhtStar
    }

    /// Hash-index selection. Default: always 0. With long-perimeter
    /// rejection (offline mode only), probe successive indices against the
    /// frozen topology view until the home perimeter is at most sqrt(n)
    /// hops, and memoize so insertions and lookups agree for free.
    fn ght_hash_index(&mut self, key: KeyId) -> u32 {
        if !self.cfg.ght.reject_long_perimeters {
            return 0;
        }
        if let Some(i) = self.ght_index_memo.get(&key) {
            return *i;
        }
        let limit = (self.nodes.len() as f64).sqrt();
        let interior = self.ght_interior();
        let ttl = self.cfg.net.ttl;
        let view = self.init_view.as_ref().expect("offline view exists in high-level mode");
        let mut best = (0u32, u32::MAX);
        let mut chosen = None;
        for idx in 0..8u32 {
            let dest = key_to_point(key, self.bounds, idx, interior);
            let home = view.argmin_dist(dest);
            let len = match view.home_perimeter_walk(home, dest, ttl) {
                Some(w) => w.len() as u32,
                None => u32::MAX,
            };
            if (len as f64) <= limit {
                chosen = Some(idx);
                break;
            }
            if len < best.1 {
                best = (idx, len);
            }
        }
        let idx = chosen.unwrap_or(best.0);
        self.ght_index_memo.insert(key, idx);
        idx
    }

    // -----------------------------------------------------------------
    // Operation entry points
    // -----------------------------------------------------------------

    pub(crate) fn ght_issue(&mut self, op: usize) {
        let kind = self.ops[op].kind;
        let key = self.ops[op].key;
        let origin = self.ops[op].origin;
        let opid = op as u32;
        let hash_index = self.ght_hash_index(key);
        let dest = key_to_point(key, self.bounds, hash_index, self.ght_interior());
        match kind {
            OpKind::Insert => {
                let value = self.ops[op].value.clone();
                let body = Body::GhtPut { op: Some(opid), key, value, hash_index };
                let pkt = self.make_to_point(origin, dest, MsgCategory::Insertion, body);
                self.route_step(origin, pkt);
            }
            OpKind::Lookup => {
                let body = Body::GhtGet { op: opid, key, hash_index };
                let pkt = self.make_to_point(origin, dest, MsgCategory::Lookup, body);
                self.route_step(origin, pkt);
            }
            OpKind::Transfer => unreachable!("transfers belong to the region protocol"),
        }
    }

    // -----------------------------------------------------------------
    // Home arrival and the perimeter walk
    // -----------------------------------------------------------------

    /// A point-addressed packet hit the unreachable condition at `me`:
    /// `me` is the home node for its hash point.
    pub(crate) fn ght_home_arrival(&mut self, me: NodeId, pkt: Packet) {
        let dest = match &pkt.nav {
            Nav::ToPoint { dest, .. } => *dest,
            _ => {
                self.metrics.undeliverable_drops += 1;
                return;
            }
        };
        let my_pos = self.perceived(me);
        let category = pkt.category;
        let (origin, origin_pos) = (pkt.origin, pkt.origin_pos);
        match pkt.body {
            Body::GhtPut { op, key, value, hash_index } => {
                let body = Body::GhtWalk {
                    kind: GhtWalkKind::Put { op },
                    key,
                    value,
                    hash_index,
                    home: me,
                    home_pos: my_pos,
                    found: None,
                    origin,
                    origin_pos,
                };
                self.start_walk(me, dest, category, body);
            }
            Body::GhtGet { op, key, hash_index } => {
                let body = Body::GhtWalk {
                    kind: GhtWalkKind::Get { op },
                    key,
                    value: Vec::new(),
                    hash_index,
                    home: me,
                    home_pos: my_pos,
                    found: None,
                    origin,
                    origin_pos,
                };
                self.start_walk(me, dest, category, body);
            }
            Body::GhtRefresh { key, value, hash_index, old_home } => {
                // The route landed somewhere new: demote the stale home.
                if old_home != me {
                    let body = Body::GhtDemote { key, new_home: me };
                    let pkt2 =
                        self.make_unicast(me, origin, origin_pos, MsgCategory::Periodic, body);
                    self.route_step(me, pkt2);
                }
                let body = Body::GhtWalk {
                    kind: GhtWalkKind::Refresh,
                    key,
                    value,
                    hash_index,
                    home: me,
                    home_pos: my_pos,
                    found: None,
                    origin,
                    origin_pos,
                };
                self.start_walk(me, dest, MsgCategory::Periodic, body);
            }
            _ => {
                self.metrics.undeliverable_drops += 1;
            }
        }
    }

    /// Every node the walk visits stores (put/refresh) or contributes the
    /// value (get), home included.
    pub(crate) fn ght_walk_visit(&mut self, me: NodeId, pkt: &mut Packet) {
        let now = self.now();
        match &mut pkt.body {
            Body::GhtWalk { kind, key, value, hash_index, home, found, .. } => match kind {
                GhtWalkKind::Put { .. } | GhtWalkKind::Refresh => {
                    self.nodes[me.idx()].ght.replicas.insert(
                        *key,
                        GhtReplica {
                            value: value.clone(),
                            hash_index: *hash_index,
                            is_home: me == *home,
                            last_refresh: now,
                            takeover_fired: false,
                        },
                    );
                }
                GhtWalkKind::Get { .. } => {
                    if found.is_none() {
                        if let Some(rep) = self.nodes[me.idx()].ght.replicas.get(key) {
                            *found = Some(rep.value.clone());
                        }
                    }
                }
            },
            _ => {}
        }
    }

    /// The walk closed its face: record its length and answer the origin.
    pub(crate) fn ght_walk_done(&mut self, me: NodeId, pkt: Packet) {
        self.metrics.perimeter_walk_lengths.push(pkt.hops);
        let category = pkt.category;
        match pkt.body {
            Body::GhtWalk { kind, key, found, origin, origin_pos, .. } => match kind {
                GhtWalkKind::Put { op } => {
                    if let Some(op) = op {
                        let body = Body::GhtPutAck { op };
                        let pkt2 = self.make_unicast(me, origin, origin_pos, category, body);
                        self.route_step(me, pkt2);
                    }
                }
                GhtWalkKind::Get { op } => {
                    let body = Body::GhtGetReply { op, key, value: found };
                    let pkt2 = self.make_unicast(me, origin, origin_pos, category, body);
                    self.route_step(me, pkt2);
                }
                GhtWalkKind::Refresh => {}
            },
            _ => {}
        }
    }

    // -----------------------------------------------------------------
    // Unicast deliveries
    // -----------------------------------------------------------------

    pub(crate) fn ght_deliver(&mut self, me: NodeId, pkt: Packet) {
        match pkt.body {
            Body::GhtPutAck { op } => self.finish_op(op as usize, LookupOutcome::Success),
            Body::GhtGetReply { op, value, .. } => {
                let outcome = if value.is_some() {
                    LookupOutcome::Success
                } else {
                    LookupOutcome::NotFound
                };
                self.finish_op(op as usize, outcome);
            }
            Body::GhtDemote { key, .. } => {
                if let Some(rep) = self.nodes[me.idx()].ght.replicas.get_mut(&key) {
                    rep.is_home = false;
                }
            }
            _ => {}
        }
    }

    // -----------------------------------------------------------------
    // Soft-state maintenance (1 s cadence)
    // -----------------------------------------------------------------

    pub(crate) fn ght_node_tick(&mut self, me: NodeId, now: f64) {
        let interval = self.cfg.ght.refresh_interval;
        if interval <= 0.0 {
            return;
        }
        // Staggered takeover keeps one replica from racing the others
        // when a home dies; expiry prunes replicas the walks abandoned.
        let takeover = interval * (2.5 + 0.1 * self.check_jitter[me.idx()]);
        let expiry = interval * 3.0;

        enum Due {
            HomeRefresh,
            Takeover,
            Drop,
        }
        let due: Vec<(KeyId, Due)> = self.nodes[me.idx()]
            .ght
            .replicas
            .iter()
            .filter_map(|(k, rep)| {
                let age = now - rep.last_refresh;
                if rep.is_home && age >= interval {
                    Some((*k, Due::HomeRefresh))
                } else if !rep.is_home && age >= expiry {
                    Some((*k, Due::Drop))
                } else if !rep.is_home && age >= takeover && !rep.takeover_fired {
                    Some((*k, Due::Takeover))
                } else {
                    None
                }
            })
            .collect();
        for (key, action) in due {
            let (value, hash_index) = match action {
                Due::Drop => {
                    self.nodes[me.idx()].ght.replicas.remove(&key);
                    continue;
                }
                Due::HomeRefresh => {
                    let rep = self.nodes[me.idx()].ght.replicas.get_mut(&key).unwrap();
                    rep.last_refresh = now;
                    (rep.value.clone(), rep.hash_index)
                }
                Due::Takeover => {
                    // Announce once and leave the stamp alone: the refresh
                    // walk re-creates this entry if the node really sits on
                    // the key's current perimeter, otherwise it expires.
                    let rep = self.nodes[me.idx()].ght.replicas.get_mut(&key).unwrap();
                    rep.takeover_fired = true;
                    (rep.value.clone(), rep.hash_index)
                }
            };
            let dest = key_to_point(key, self.bounds, hash_index, self.ght_interior());
            let body = Body::GhtRefresh { key, value, hash_index, old_home: me };
            let pkt = self.make_to_point(me, dest, MsgCategory::Periodic, body);
            self.route_step(me, pkt);
        }
    }
}
