//! Region-rendezvous protocol: insertion by scoped geocast with on-demand
//! probabilistic server election, lookup by cached-server anycast with
//! geocast escalation, batched server-exit handoff, soft-state failure
//! checking, and the closest-node fallback for empty regions.
//!
//! All handlers run inside [`Sim`]'s event loop; "sending" a packet to
//! oneself short-circuits through local delivery without a transmission.

use crate::engine::node::{InsertJob, LookupJob, ProxyWatch, RrTimer, StoredVal};
use crate::engine::{OpKind, Sim};
use crate::net::packet::{Body, KeyItem, Packet, RrInsertBody};
use crate::sim::metrics::{LookupOutcome, MsgCategory};
use crate::world::geometry::Point;
use crate::world::grid::RegionId;
use crate::world::hash::{hash_label, key_to_region, mix64};
use crate::world::{KeyId, NodeId};
use std::collections::{BTreeMap, BTreeSet};

/// Key under which the mapping descriptor for `service_class` is published.
/// Bootstrap is plain insert/lookup of keys derived from a well-known
/// constant, so resolving a service costs exactly one lookup.
pub fn wkk_key(service_class: u64) -> KeyId {
    KeyId(mix64(hash_label(0, "wkk") ^ mix64(service_class)))
}

impl Sim {
    fn s_min(&self) -> usize {
        self.cfg.rr.s_min as usize
    }

    /// The region a key's records rendezvous in.
    pub fn rr_key_region(&self, key: KeyId) -> RegionId {
        key_to_region(key, self.grid.regions(), 0)
    }

    /// First-round election probability, targeting ~2·s_min volunteers
    /// from an expected region population of n/R.
    fn election_p0(&self) -> f64 {
        let r = self.grid.regions() as f64;
        let n = self.nodes.len() as f64;
        (2.0 * self.cfg.rr.s_min as f64 * r / n).min(1.0)
    }

    /// Reply window for intra-region exchanges (election rounds, failure
    /// checks, geocast lookups): a region-diameter round trip.
    fn region_window(&self) -> f64 {
        let d = (self.grid.cell_width() * self.grid.cell_width()
            + self.grid.cell_height() * self.grid.cell_height())
        .sqrt();
        let hops = (d / self.cfg.radio.range).ceil() + 1.0;
        (2.0 * hops * (self.cfg.net.hop_latency + self.cfg.net.jitter)).max(0.05)
    }

    /// Reply window for cross-network exchanges (anycast to a cached
    /// server): a network-diameter round trip.
    fn net_window(&self) -> f64 {
        let d = (self.bounds.width * self.bounds.width + self.bounds.height * self.bounds.height)
            .sqrt();
        let hops = (d / self.cfg.radio.range).ceil() + 1.0;
        (2.0 * hops * (self.cfg.net.hop_latency + self.cfg.net.jitter)).max(0.05)
    }

    /// Next failure-check deadline for `me`: one interval plus this node's
    /// fixed whole-second jitter, so checkers in a region desynchronize.
    fn check_deadline(&self, me: NodeId) -> f64 {
        self.now() + self.cfg.rr.check_interval + self.check_jitter[me.idx()]
    }

    // -----------------------------------------------------------------
    // Server cache
    // -----------------------------------------------------------------

    fn cache_put(&mut self, me: NodeId, region: RegionId, server: NodeId, pos: Point) {
        if server == me {
            return; // own serve map already answers locally
        }
        let now = self.now();
        let cap = self.cfg.rr.cache_capacity as usize;
        let entries = self.nodes[me.idx()].rr.cache.entry(region).or_default();
        entries.retain(|e| e.server != server);
        entries.push(crate::engine::node::CacheEntry { server, pos, heard: now });
        if cap > 0 && entries.len() > cap {
            let oldest = entries
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.heard.partial_cmp(&b.1.heard).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            entries.remove(oldest);
        }
    }

    /// Most recently heard unexpired cached server for `region`.
    fn cache_get(&self, me: NodeId, region: RegionId) -> Option<(NodeId, Point)> {
        let now = self.now();
        let ttl = self.cfg.rr.cache_ttl;
        self.nodes[me.idx()]
            .rr
            .cache
            .get(&region)?
            .iter()
            .filter(|e| now - e.heard <= ttl)
            .max_by(|a, b| a.heard.partial_cmp(&b.heard).unwrap())
            .map(|e| (e.server, e.pos))
    }

    fn cache_drop(&mut self, me: NodeId, region: RegionId, server: NodeId) {
        if let Some(entries) = self.nodes[me.idx()].rr.cache.get_mut(&region) {
            entries.retain(|e| e.server != server);
        }
    }

    // -----------------------------------------------------------------
    // Operation entry points
    // -----------------------------------------------------------------

    pub(crate) fn rr_issue(&mut self, op: usize) {
        let kind = self.ops[op].kind;
        let key = self.ops[op].key;
        let origin = self.ops[op].origin;
        let opid = op as u32;
        match kind {
            OpKind::Insert => {
                let value = self.ops[op].value.clone();
                let region = self.rr_key_region(key);
                let body = Body::RrInsert(RrInsertBody {
                    op: Some(opid),
                    items: vec![KeyItem { key, value, proxy_origin: None }],
                    region,
                    probe_from: None,
                    ack_to: None,
                });
                let pkt = self.make_to_region(origin, region, MsgCategory::Insertion, body);
                self.route_step(origin, pkt);
            }
            OpKind::Transfer => {
                let region = self.ops[op].region.expect("transfer carries its region");
                let items = self.transfer_items.get(&op).cloned().unwrap_or_default();
                if items.is_empty() {
                    self.finish_op(op, LookupOutcome::Success);
                    return;
                }
                let body = Body::RrInsert(RrInsertBody {
                    op: Some(opid),
                    items,
                    region,
                    probe_from: None,
                    ack_to: None,
                });
                let pkt = self.make_to_region(origin, region, MsgCategory::MobilityUpdate, body);
                self.route_step(origin, pkt);
            }
            OpKind::Lookup => {
                let region = self.rr_key_region(key);
                // Serving the region myself: answer from the local store.
                if let Some(sv) = self.nodes[origin.idx()].rr.serves.get(&region) {
                    let val = sv.store.get(&key).map(|s| s.value.clone());
                    let outcome = if val.is_some() {
                        LookupOutcome::Success
                    } else {
                        LookupOutcome::NotFound
                    };
                    self.finish_op(op, outcome);
                    return;
                }
                if let Some((server, pos)) = self.cache_get(origin, region) {
                    // Anycast straight to a known server; the origin plays
                    // the flooder role for the reply leg.
                    let fpos = self.perceived(origin);
                    let jid = self.fresh_id();
                    self.nodes[origin.idx()].rr.lookup_jobs.insert(
                        jid,
                        LookupJob {
                            op: opid,
                            key,
                            region,
                            origin,
                            origin_pos: fpos,
                            geocast_done: false,
                            saw_not_found: false,
                        },
                    );
                    let body = Body::RrLookupDirect {
                        op: opid,
                        key,
                        region,
                        flooder: origin,
                        flooder_pos: fpos,
                    };
                    let pkt = self.make_unicast(origin, server, pos, MsgCategory::Lookup, body);
                    self.route_step(origin, pkt);
                    let w = self.net_window();
                    self.schedule_node_timer(origin, w, RrTimer::LookupWindow { job: jid });
                } else {
                    let body = Body::RrLookup { op: opid, key, region };
                    let pkt = self.make_to_region(origin, region, MsgCategory::Lookup, body);
                    self.route_step(origin, pkt);
                }
            }
        }
    }

    // -----------------------------------------------------------------
    // Flooder-side insertion jobs and elections
    // -----------------------------------------------------------------

    /// A region-addressed insertion (fresh, handoff, probe, or fallback
    /// install) reached an in-region node: geocast it and collect acks.
    fn rr_flooder_insert(
        &mut self,
        me: NodeId,
        origin: NodeId,
        origin_pos: Point,
        category: MsgCategory,
        mut b: RrInsertBody,
    ) {
        // Records arriving in the region they hash to are home: clear tags.
        for it in &mut b.items {
            if it.proxy_origin == Some(b.region) {
                it.proxy_origin = None;
            }
        }
        let jid = self.fresh_id();
        let my_pos = self.perceived(me);
        self.nodes[me.idx()].rr.jobs.insert(
            jid,
            InsertJob {
                op: b.op,
                origin,
                origin_pos,
                region: b.region,
                items: b.items.clone(),
                category,
                acks: BTreeMap::new(),
                round: None,
                p: 0.0,
                acked_origin: false,
                probe_from: b.probe_from,
            },
        );
        let body = Body::RrInsert(RrInsertBody {
            op: b.op,
            items: b.items,
            region: b.region,
            probe_from: b.probe_from,
            ack_to: Some((me, my_pos, jid)),
        });
        self.geocast(me, b.region, category, body);
        let w = self.region_window();
        self.schedule_node_timer(me, w, RrTimer::InsertRound { job: jid });
    }

    /// Replication target reached: ack the origin and resolve any proxy
    /// probe that launched this install.
    fn rr_insert_satisfied(&mut self, me: NodeId, jid: u64) {
        let (op, origin, origin_pos, category, region, probe_from, keys) = {
            let j = self.nodes[me.idx()].rr.jobs.get_mut(&jid).unwrap();
            j.acked_origin = true;
            (
                j.op,
                j.origin,
                j.origin_pos,
                j.category,
                j.region,
                j.probe_from,
                j.items.iter().map(|it| it.key).collect::<Vec<_>>(),
            )
        };
        if let Some(op) = op {
            let body = Body::RrInsertDone { op };
            let pkt = self.make_unicast(me, origin, origin_pos, category, body);
            self.route_step(me, pkt);
        }
        if let Some((prober, ppos)) = probe_from {
            if prober == me {
                self.rr_proxy_resolved(me, keys, region);
            } else {
                let body = Body::RrProxyResolved { keys, origin_region: region };
                let pkt = self.make_unicast(me, prober, ppos, MsgCategory::Periodic, body);
                self.route_step(me, pkt);
            }
        }
    }

    fn rr_insert_round_fired(&mut self, me: NodeId, jid: u64) {
        let Some(j) = self.nodes[me.idx()].rr.jobs.get(&jid) else { return };
        let acks = j.acks.clone();
        let (round, p, acked_origin, region) = (j.round, j.p, j.acked_origin, j.region);
        let enough = acks.len() >= self.s_min();
        let exhausted = round.is_some() && p >= 1.0;
        if enough || (exhausted && !acks.is_empty()) {
            // Accept the replica set (possibly below target in a region
            // with fewer than s_min nodes) and wind the job down.
            if !acked_origin {
                self.rr_insert_satisfied(me, jid);
            }
            let newcomers: Vec<(NodeId, Point)> = acks
                .iter()
                .filter(|(_, (_, is_new))| *is_new)
                .map(|(n, (pos, _))| (*n, *pos))
                .collect();
            if !newcomers.is_empty() {
                // Newly elected servers hold only this job's items; an
                // established server ships them the rest of the region.
                let old = acks
                    .iter()
                    .find(|(_, (_, is_new))| !*is_new)
                    .map(|(n, (pos, _))| (*n, *pos));
                if let Some((old, opos)) = old {
                    if old == me {
                        let entries = self.rr_store_items(me, region);
                        for (nc, pos) in newcomers {
                            if nc == me {
                                continue;
                            }
                            let body =
                                Body::RrSyncState { region, entries: entries.clone() };
                            let pkt = self
                                .make_unicast(me, nc, pos, MsgCategory::Election, body);
                            self.route_step(me, pkt);
                        }
                    } else {
                        let body = Body::RrSyncRequest { region, newcomers };
                        let pkt =
                            self.make_unicast(me, old, opos, MsgCategory::Election, body);
                        self.route_step(me, pkt);
                    }
                }
            }
            self.nodes[me.idx()].rr.jobs.remove(&jid);
        } else if exhausted {
            // Even a mandatory round produced nothing: give up and let the
            // operation timeout drive any retry.
            self.nodes[me.idx()].rr.jobs.remove(&jid);
        } else {
            self.rr_start_election_round(me, jid);
        }
    }

    /// Geocast one election round with the current back-off probability.
    fn rr_start_election_round(&mut self, me: NodeId, jid: u64) {
        let p0 = self.election_p0();
        let (region, items, round, p) = {
            let j = self.nodes[me.idx()].rr.jobs.get_mut(&jid).unwrap();
            let round = j.round.map_or(0, |r| r + 1);
            let p = if j.round.is_none() { p0 } else { (j.p * 2.0).min(1.0) };
            j.round = Some(round);
            j.p = p;
            (j.region, j.items.clone(), round, p)
        };
        self.metrics.elections_started += 1;
        let my_pos = self.perceived(me);
        let body = Body::RrElection {
            job: jid,
            region,
            p,
            round,
            items,
            flooder: me,
            flooder_pos: my_pos,
        };
        self.geocast(me, region, MsgCategory::Election, body);
        let w = self.region_window();
        self.schedule_node_timer(me, w, RrTimer::InsertRound { job: jid });
    }

    /// Snapshot a served region's store as shippable items.
    fn rr_store_items(&self, me: NodeId, region: RegionId) -> Vec<KeyItem> {
        match self.nodes[me.idx()].rr.serves.get(&region) {
            Some(sv) => sv
                .store
                .iter()
                .map(|(k, v)| KeyItem {
                    key: *k,
                    value: v.value.clone(),
                    proxy_origin: v.proxy_origin,
                })
                .collect(),
            None => Vec::new(),
        }
    }

    // -----------------------------------------------------------------
    // Flooder-side lookups
    // -----------------------------------------------------------------

    fn rr_flooder_lookup(
        &mut self,
        me: NodeId,
        origin: NodeId,
        origin_pos: Point,
        op: u32,
        key: KeyId,
        region: RegionId,
    ) {
        // A server flooder answers outright.
        if let Some(sv) = self.nodes[me.idx()].rr.serves.get(&region) {
            let value = sv.store.get(&key).map(|s| s.value.clone());
            let cacheable = self.rr_key_region(key) == region;
            let server = if cacheable { Some((me, self.perceived(me))) } else { None };
            let body = Body::RrLookupDone { op, key, value, server };
            let pkt = self.make_unicast(me, origin, origin_pos, MsgCategory::Lookup, body);
            self.route_step(me, pkt);
            return;
        }
        let jid = self.fresh_id();
        self.nodes[me.idx()].rr.lookup_jobs.insert(
            jid,
            LookupJob {
                op,
                key,
                region,
                origin,
                origin_pos,
                geocast_done: false,
                saw_not_found: false,
            },
        );
        if let Some((server, pos)) = self.cache_get(me, region) {
            let my_pos = self.perceived(me);
            let body =
                Body::RrLookupDirect { op, key, region, flooder: me, flooder_pos: my_pos };
            let pkt = self.make_unicast(me, server, pos, MsgCategory::Lookup, body);
            self.route_step(me, pkt);
            let w = self.region_window();
            self.schedule_node_timer(me, w, RrTimer::LookupWindow { job: jid });
        } else {
            self.rr_escalate_lookup(me, jid);
        }
    }

    /// Anycast failed or was impossible: geocast the query if `me` is in
    /// the region, otherwise hand the lookup to a real flooder.
    fn rr_escalate_lookup(&mut self, me: NodeId, jid: u64) {
        let Some(j) = self.nodes[me.idx()].rr.lookup_jobs.get(&jid) else { return };
        let (op, key, region, origin, origin_pos) =
            (j.op, j.key, j.region, j.origin, j.origin_pos);
        if self.node_region(me) == region {
            if let Some(j) = self.nodes[me.idx()].rr.lookup_jobs.get_mut(&jid) {
                j.geocast_done = true;
            }
            let my_pos = self.perceived(me);
            let body =
                Body::RrLookupGeo { op, key, region, flooder: me, flooder_pos: my_pos };
            self.geocast(me, region, MsgCategory::Lookup, body);
            let w = self.region_window();
            self.schedule_node_timer(me, w, RrTimer::LookupWindow { job: jid });
        } else {
            self.nodes[me.idx()].rr.lookup_jobs.remove(&jid);
            let body = Body::RrLookup { op, key, region };
            let mut pkt = self.make_to_region(me, region, MsgCategory::Lookup, body);
            pkt.origin = origin;
            pkt.origin_pos = origin_pos;
            self.route_step(me, pkt);
        }
    }

    fn rr_lookup_window_fired(&mut self, me: NodeId, jid: u64) {
        let Some(j) = self.nodes[me.idx()].rr.lookup_jobs.get(&jid) else { return };
        let (op, key, region, geocast_done, origin, origin_pos) =
            (j.op, j.key, j.region, j.geocast_done, j.origin, j.origin_pos);
        if !geocast_done {
            // The anycast target never answered: forget that cache line
            // and fall back to the query geocast.
            self.nodes[me.idx()].rr.cache.remove(&region);
            self.rr_escalate_lookup(me, jid);
        } else {
            // Geocast ran its window with no positive answer: no live
            // server holds the key.
            self.nodes[me.idx()].rr.lookup_jobs.remove(&jid);
            let body = Body::RrLookupDone { op, key, value: None, server: None };
            let pkt = self.make_unicast(me, origin, origin_pos, MsgCategory::Lookup, body);
            self.route_step(me, pkt);
        }
    }

    // -----------------------------------------------------------------
    // Delivery: routed packets addressed to me (or taken as flooder)
    // -----------------------------------------------------------------

    pub(crate) fn rr_deliver(&mut self, me: NodeId, pkt: Packet) {
        let category = pkt.category;
        let (origin, origin_pos) = (pkt.origin, pkt.origin_pos);
        match pkt.body {
            Body::RrInsert(b) => self.rr_flooder_insert(me, origin, origin_pos, category, b),
            Body::RrServerAck { job, server, server_pos, region, is_new } => {
                self.cache_put(me, region, server, server_pos);
                let s_min = self.s_min();
                let satisfied = match self.nodes[me.idx()].rr.jobs.get_mut(&job) {
                    Some(j) => {
                        j.acks.insert(server, (server_pos, is_new));
                        !j.acked_origin && j.acks.len() >= s_min
                    }
                    None => false,
                };
                if satisfied {
                    self.rr_insert_satisfied(me, job);
                }
            }
            Body::RrInsertDone { op } => {
                let opi = op as usize;
                self.finish_op(opi, LookupOutcome::Success);
                self.transfer_items.remove(&opi);
            }
            Body::RrProxyResolved { keys, origin_region } => {
                self.rr_proxy_resolved(me, keys, origin_region)
            }
            Body::RrSyncRequest { region, newcomers } => {
                if !self.nodes[me.idx()].rr.serves.contains_key(&region) {
                    return;
                }
                let entries = self.rr_store_items(me, region);
                for (nc, pos) in newcomers {
                    if nc == me {
                        continue;
                    }
                    let body = Body::RrSyncState { region, entries: entries.clone() };
                    let pkt2 = self.make_unicast(me, nc, pos, MsgCategory::Election, body);
                    self.route_step(me, pkt2);
                }
            }
            Body::RrSyncState { region, entries } => {
                let deadline = self.check_deadline(me);
                if let Some(sv) = self.nodes[me.idx()].rr.serves.get_mut(&region) {
                    for it in entries {
                        sv.store.entry(it.key).or_insert(StoredVal {
                            value: it.value,
                            proxy_origin: it.proxy_origin,
                        });
                    }
                    sv.next_check = deadline;
                }
            }
            Body::RrLookup { op, key, region } => {
                self.rr_flooder_lookup(me, origin, origin_pos, op, key, region)
            }
            Body::RrLookupDirect { op, key, region, flooder, flooder_pos } => {
                // Still serving -> authoritative answer; a proxy watch for
                // the region answers too; otherwise report the stale cache.
                let (serving, value) =
                    if let Some(sv) = self.nodes[me.idx()].rr.serves.get(&region) {
                        (true, sv.store.get(&key).map(|s| s.value.clone()))
                    } else if let Some(w) = self.nodes[me.idx()].rr.watches.get(&region) {
                        (
                            true,
                            w.items.iter().find(|it| it.key == key).map(|it| it.value.clone()),
                        )
                    } else {
                        (false, None)
                    };
                let my_pos = self.perceived(me);
                let body = Body::RrLookupReply {
                    op,
                    key,
                    value,
                    server: me,
                    server_pos: my_pos,
                    region,
                    serving,
                };
                let pkt2 = self.make_unicast(me, flooder, flooder_pos, MsgCategory::Lookup, body);
                self.route_step(me, pkt2);
            }
            Body::RrLookupReply { op, key, value, server, server_pos, region, serving } => {
                if serving {
                    self.cache_put(me, region, server, server_pos);
                } else {
                    self.cache_drop(me, region, server);
                }
                let jid = self.nodes[me.idx()]
                    .rr
                    .lookup_jobs
                    .iter()
                    .find(|(_, j)| j.op == op)
                    .map(|(id, _)| *id);
                let Some(jid) = jid else { return };
                if serving && value.is_some() {
                    let (origin, origin_pos) = {
                        let j = &self.nodes[me.idx()].rr.lookup_jobs[&jid];
                        (j.origin, j.origin_pos)
                    };
                    self.nodes[me.idx()].rr.lookup_jobs.remove(&jid);
                    let cacheable = self.rr_key_region(key) == region;
                    let server = if cacheable { Some((server, server_pos)) } else { None };
                    let body = Body::RrLookupDone { op, key, value, server };
                    let pkt2 =
                        self.make_unicast(me, origin, origin_pos, MsgCategory::Lookup, body);
                    self.route_step(me, pkt2);
                } else if serving {
                    if let Some(j) = self.nodes[me.idx()].rr.lookup_jobs.get_mut(&jid) {
                        j.saw_not_found = true;
                    }
                }
                // Stale-cache replies just wait for the window to escalate.
            }
            Body::RrLookupDone { op, key, value, server } => {
                if let Some((srv, pos)) = server {
                    let region = self.rr_key_region(key);
                    self.cache_put(me, region, srv, pos);
                }
                let outcome = if value.is_some() {
                    LookupOutcome::Success
                } else {
                    LookupOutcome::NotFound
                };
                self.finish_op(op as usize, outcome);
            }
            Body::RrCheckReply { region, from } => {
                if let Some(set) = self.nodes[me.idx()].rr.check_replies.get_mut(&region) {
                    set.insert(from);
                }
            }
            _ => {}
        }
    }

    // -----------------------------------------------------------------
    // Geocast payloads: every in-region first receipt
    // -----------------------------------------------------------------

    pub(crate) fn rr_flood_payload(&mut self, me: NodeId, pkt: &Packet) {
        match &pkt.body {
            Body::RrInsert(b) => {
                let Some((flooder, fpos, jid)) = b.ack_to else { return };
                // Only existing servers store insertion geocasts; a short
                // ack count triggers an election instead.
                let deadline = self.check_deadline(me);
                let stored = match self.nodes[me.idx()].rr.serves.get_mut(&b.region) {
                    Some(sv) => {
                        for it in &b.items {
                            sv.store.insert(
                                it.key,
                                StoredVal {
                                    value: it.value.clone(),
                                    proxy_origin: it.proxy_origin,
                                },
                            );
                        }
                        sv.next_check = deadline;
                        true
                    }
                    None => false,
                };
                if stored {
                    let my_pos = self.perceived(me);
                    let body = Body::RrServerAck {
                        job: jid,
                        server: me,
                        server_pos: my_pos,
                        region: b.region,
                        is_new: false,
                    };
                    let pkt2 = self.make_unicast(me, flooder, fpos, pkt.category, body);
                    self.route_step(me, pkt2);
                }
            }
            Body::RrElection { job, region, p, items, flooder, flooder_pos, .. } => {
                let (job, region, p) = (*job, *region, *p);
                let (flooder, flooder_pos) = (*flooder, *flooder_pos);
                let already = self.nodes[me.idx()].rr.serves.contains_key(&region);
                if !already && !self.elect_rngs[me.idx()].chance(p) {
                    return;
                }
                let deadline = self.check_deadline(me);
                let sv = self.nodes[me.idx()].rr.serves.entry(region).or_default();
                for it in items {
                    sv.store.insert(
                        it.key,
                        StoredVal { value: it.value.clone(), proxy_origin: it.proxy_origin },
                    );
                }
                sv.next_check = deadline;
                let my_pos = self.perceived(me);
                let body = Body::RrServerAck {
                    job,
                    server: me,
                    server_pos: my_pos,
                    region,
                    is_new: !already,
                };
                let pkt2 =
                    self.make_unicast(me, flooder, flooder_pos, MsgCategory::Election, body);
                self.route_step(me, pkt2);
            }
            Body::RrLookupGeo { op, key, region, flooder, flooder_pos } => {
                if let Some(sv) = self.nodes[me.idx()].rr.serves.get(&region) {
                    let value = sv.store.get(key).map(|s| s.value.clone());
                    let my_pos = self.perceived(me);
                    let body = Body::RrLookupReply {
                        op: *op,
                        key: *key,
                        value,
                        server: me,
                        server_pos: my_pos,
                        region: *region,
                        serving: true,
                    };
                    let pkt2 = self.make_unicast(
                        me,
                        *flooder,
                        *flooder_pos,
                        MsgCategory::Lookup,
                        body,
                    );
                    self.route_step(me, pkt2);
                }
            }
            Body::RrCheck { region, checker, checker_pos } => {
                if *checker == me {
                    return;
                }
                if self.nodes[me.idx()].rr.serves.contains_key(region) {
                    let deadline = self.check_deadline(me);
                    self.nodes[me.idx()].rr.serves.get_mut(region).unwrap().next_check =
                        deadline;
                    let body = Body::RrCheckReply { region: *region, from: me };
                    let pkt2 = self.make_unicast(
                        me,
                        *checker,
                        *checker_pos,
                        MsgCategory::Periodic,
                        body,
                    );
                    self.route_step(me, pkt2);
                }
            }
            Body::RrProxyDrop { keys, origin_region } => {
                for sv in self.nodes[me.idx()].rr.serves.values_mut() {
                    sv.store.retain(|k, v| {
                        !(v.proxy_origin == Some(*origin_region) && keys.contains(k))
                    });
                }
            }
            _ => {}
        }
    }

    // -----------------------------------------------------------------
    // Empty-region fallback
    // -----------------------------------------------------------------

    /// A region-addressed packet hit the closest-node condition: no node
    /// of that region is reachable.
    pub(crate) fn rr_undeliverable_region(&mut self, me: NodeId, pkt: Packet) {
        match pkt.body {
            Body::RrInsert(b) => {
                if let Some((prober, _)) = b.probe_from {
                    if prober == me {
                        return; // own probe bounced: region still empty
                    }
                }
                let my_region = self.node_region(me);
                let deadline = self.check_deadline(me);
                let mut items = b.items;
                for it in &mut items {
                    if it.proxy_origin.is_none() {
                        it.proxy_origin = Some(b.region);
                    }
                }
                {
                    let w = self.nodes[me.idx()]
                        .rr
                        .watches
                        .entry(b.region)
                        .or_insert(ProxyWatch { items: Vec::new(), next_probe: deadline });
                    for it in &items {
                        match w.items.iter_mut().find(|e| e.key == it.key) {
                            Some(e) => e.value = it.value.clone(),
                            None => w.items.push(it.clone()),
                        }
                    }
                }
                // Install the records among my own region's servers; the
                // original operation gets acked by that install's job.
                let body = Body::RrInsert(RrInsertBody {
                    op: b.op,
                    items: items.clone(),
                    region: my_region,
                    probe_from: None,
                    ack_to: None,
                });
                let mut p2 = self.make_to_region(me, my_region, pkt.category, body);
                p2.origin = pkt.origin;
                p2.origin_pos = pkt.origin_pos;
                self.route_step(me, p2);
                // Adopted from another watcher: tell it to stand down.
                if let Some((prober, ppos)) = b.probe_from {
                    let keys: Vec<KeyId> = items.iter().map(|it| it.key).collect();
                    let body = Body::RrProxyResolved { keys, origin_region: b.region };
                    let pkt2 = self.make_unicast(me, prober, ppos, MsgCategory::Periodic, body);
                    self.route_step(me, pkt2);
                }
            }
            Body::RrLookup { op, key, region } => {
                // The watcher answers directly from its proxy set.
                if let Some(w) = self.nodes[me.idx()].rr.watches.get(&region) {
                    if let Some(it) = w.items.iter().find(|it| it.key == key) {
                        let value = Some(it.value.clone());
                        let my_pos = self.perceived(me);
                        let body = Body::RrLookupDone {
                            op,
                            key,
                            value,
                            server: Some((me, my_pos)),
                        };
                        let pkt2 = self.make_unicast(
                            me,
                            pkt.origin,
                            pkt.origin_pos,
                            MsgCategory::Lookup,
                            body,
                        );
                        self.route_step(me, pkt2);
                        return;
                    }
                }
                // Otherwise the proxies live in my own region's stores.
                let my_region = self.node_region(me);
                if my_region == region {
                    self.metrics.undeliverable_drops += 1;
                    return;
                }
                let body = Body::RrLookup { op, key, region: my_region };
                let mut p2 = self.make_to_region(me, my_region, MsgCategory::Lookup, body);
                p2.origin = pkt.origin;
                p2.origin_pos = pkt.origin_pos;
                self.route_step(me, p2);
            }
            _ => {
                self.metrics.undeliverable_drops += 1;
            }
        }
    }

    /// The records this node was proxying are now properly installed:
    /// stop watching and purge the copies from my region's servers.
    fn rr_proxy_resolved(&mut self, me: NodeId, keys: Vec<KeyId>, origin_region: RegionId) {
        if self.nodes[me.idx()].rr.watches.remove(&origin_region).is_none() {
            return;
        }
        let my_region = self.node_region(me);
        let body = Body::RrProxyDrop { keys, origin_region };
        self.geocast(me, my_region, MsgCategory::Periodic, body);
    }

    // -----------------------------------------------------------------
    // Periodic per-node work (1 s cadence)
    // -----------------------------------------------------------------

    pub(crate) fn rr_node_tick(&mut self, me: NodeId, now: f64) {
        // Position check: a server that left its region hands the whole
        // store over in one batched, acknowledged transfer per region.
        let pc = self.cfg.rr.position_check;
        if pc > 0.0 && (now % pc) < 0.999 {
            let my_region = self.node_region(me);
            let leaving: Vec<RegionId> = self.nodes[me.idx()]
                .rr
                .serves
                .keys()
                .filter(|r| **r != my_region)
                .copied()
                .collect();
            for region in leaving {
                let sv = self.nodes[me.idx()].rr.serves.remove(&region).unwrap();
                if sv.store.is_empty() {
                    continue;
                }
                let items: Vec<KeyItem> = sv
                    .store
                    .into_iter()
                    .map(|(k, v)| KeyItem {
                        key: k,
                        value: v.value,
                        proxy_origin: v.proxy_origin,
                    })
                    .collect();
                let key0 = items[0].key;
                let op = self.start_transfer_op(me, region, key0);
                self.transfer_items.insert(op, items);
                self.rr_issue(op);
                self.schedule_op_timeout(op);
            }
        }
        // Failure checks: one geocast per served region per interval,
        // suppressed while a peer's check is fresh.
        let due: Vec<RegionId> = {
            let nd = &self.nodes[me.idx()];
            nd.rr
                .serves
                .iter()
                .filter(|(r, sv)| {
                    now >= sv.next_check
                        && !sv.store.is_empty()
                        && !nd.rr.check_replies.contains_key(r)
                })
                .map(|(r, _)| *r)
                .collect()
        };
        for region in due {
            if self.node_region(me) != region {
                continue; // the position check will hand this store over
            }
            let deadline = self.check_deadline(me);
            self.nodes[me.idx()].rr.serves.get_mut(&region).unwrap().next_check = deadline;
            let my_pos = self.perceived(me);
            let body = Body::RrCheck { region, checker: me, checker_pos: my_pos };
            self.geocast(me, region, MsgCategory::Periodic, body);
            self.nodes[me.idx()].rr.check_replies.insert(region, BTreeSet::new());
            let w = self.region_window();
            self.schedule_node_timer(me, w, RrTimer::CheckWindow { region });
        }
        // Proxy watches re-probe their empty region.
        let probes: Vec<RegionId> = self.nodes[me.idx()]
            .rr
            .watches
            .iter()
            .filter(|(_, w)| now >= w.next_probe)
            .map(|(r, _)| *r)
            .collect();
        for region in probes {
            let deadline = self.check_deadline(me);
            let items = {
                let w = self.nodes[me.idx()].rr.watches.get_mut(&region).unwrap();
                w.next_probe = deadline;
                w.items.clone()
            };
            let my_pos = self.perceived(me);
            let body = Body::RrInsert(RrInsertBody {
                op: None,
                items,
                region,
                probe_from: Some((me, my_pos)),
                ack_to: None,
            });
            let pkt = self.make_to_region(me, region, MsgCategory::Periodic, body);
            self.route_step(me, pkt);
        }
    }

    fn rr_check_window_fired(&mut self, me: NodeId, region: RegionId) {
        let replies = self.nodes[me.idx()]
            .rr
            .check_replies
            .remove(&region)
            .map(|s| s.len())
            .unwrap_or(0);
        if !self.nodes[me.idx()].rr.serves.contains_key(&region) {
            return;
        }
        if replies + 1 >= self.s_min() {
            return;
        }
        // Replication dropped below target: restore it with an election
        // seeded from my own store (me counts as the established server).
        let items = self.rr_store_items(me, region);
        let my_pos = self.perceived(me);
        let jid = self.fresh_id();
        self.nodes[me.idx()].rr.jobs.insert(
            jid,
            InsertJob {
                op: None,
                origin: me,
                origin_pos: my_pos,
                region,
                items,
                category: MsgCategory::Periodic,
                acks: BTreeMap::new(),
                round: None,
                p: 0.0,
                acked_origin: true,
                probe_from: None,
            },
        );
        self.rr_start_election_round(me, jid);
    }

    // -----------------------------------------------------------------
    // Node-timer dispatch
    // -----------------------------------------------------------------

    pub(crate) fn rr_timer_fired(&mut self, node: NodeId, token: u64) {
        if !self.nodes[node.idx()].alive {
            return;
        }
        let Some(t) = self.nodes[node.idx()].rr.timers.remove(&token) else { return };
        match t {
            RrTimer::InsertRound { job } => self.rr_insert_round_fired(node, job),
            RrTimer::LookupWindow { job } => self.rr_lookup_window_fired(node, job),
            RrTimer::CheckWindow { region } => self.rr_check_window_fired(node, region),
        }
    }
}
