//! The runnable simulation: binds world, net and the protocol state
//! machines into a single-threaded deterministic event loop.

pub mod node;

use crate::harness::scenario::{Mode, ProtocolKind, ScenarioConfig};
use crate::harness::workload::{gen_workload, OriginSel, TimedOp, WorkOp};
use crate::net::packet::{Body, Nav, Packet, RouteMode};
use crate::net::planar::gabriel_neighbors;
use crate::net::radio::SpatialIndex;
use crate::net::routing::{face_next, greedy_next, pure_face_next, FaceStep, PerimeterState};
use crate::net::topo::TopologyView;
use crate::sim::metrics::{InsertRecord, LookupOutcome, LookupRecord, MetricsSink, MetricsReport, MsgCategory};
use crate::sim::queue::EventQueue;
use crate::sim::rng::RngStream;
use crate::world::error_model::perceived_position;
use crate::world::failures::inject_failures;
use crate::world::geometry::{Bounds, Point};
use crate::world::grid::{RegionGrid, RegionId};
use crate::world::hash::{hash_label, mix64};
use crate::world::mobility::{RwpParams, RwpState};
use crate::world::place::place_uniform;
use crate::world::{KeyId, NodeId};
use node::{Node, PlanarCache};
use std::collections::HashMap;

/// Hard cap on processed events per run.
pub const EVENT_CAP: u64 = 100_000_000;

/// Interval between mobility integration steps (s).
const MOBILITY_DT: f64 = 0.25;

#[derive(Debug)]
pub enum SimError {
    /// Scenario invariant violations, with field paths.
    Config(Vec<String>),
    /// The run exceeded [`EVENT_CAP`] processed events.
    EventCapExceeded { fired: u64 },
}

impl std::fmt::Display for SimError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimError::Config(v) => write!(f, "invalid scenario: {}", v.join("; ")),
            SimError::EventCapExceeded { fired } => {
                write!(f, "event cap exceeded after {fired} events")
            }
        }
    }
}

impl std::error::Error for SimError {}

/// Scheduled things.
#[derive(Clone, Debug)]
pub(crate) enum Action {
    BeaconTick,
    MobilityTick,
    ProtocolTick,
    Kill(NodeId),
    Issue(usize),
    Arrive { to: NodeId, pkt: Packet },
    OpTimeout { op: usize, attempt: u32 },
    NodeTimer { node: NodeId, token: u64 },
    End,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Insert,
    Lookup,
    /// Internal acknowledged operation (mobility transfers); not counted
    /// in workload success rates.
    Transfer,
}

/// Tracking for one acknowledged operation.
#[derive(Clone, Debug)]
pub struct OpState {
    pub kind: OpKind,
    pub key: KeyId,
    pub value: Vec<u8>,
    pub origin: NodeId,
    pub issued_at: f64,
    pub attempts: u32,
    pub done: bool,
    /// Mobility transfers remember the region the records belong to.
    pub region: Option<RegionId>,
    pub category: MsgCategory,
}

pub struct Sim {
    pub cfg: ScenarioConfig,
    pub bounds: Bounds,
    pub grid: RegionGrid,
    pub(crate) queue: EventQueue<Action>,
    pub(crate) metrics: MetricsSink,
    pub(crate) nodes: Vec<Node>,
    pub(crate) tpos: Vec<Point>,
    pub(crate) radio: SpatialIndex,
    pub(crate) next_id: u64,
    pub(crate) workload: Vec<TimedOp>,
    pub(crate) ops: Vec<OpState>,
    pub(crate) rng_jitter: RngStream,
    pub(crate) rng_loss: RngStream,
    pub(crate) elect_rngs: Vec<RngStream>,
    pub(crate) rwp_rngs: Vec<RngStream>,
    pub(crate) check_jitter: Vec<f64>,
    pub(crate) gateway: NodeId,
    pub(crate) central: NodeId,
    /// Items carried by in-flight mobility transfers, kept for retries.
    pub(crate) transfer_items: HashMap<usize, Vec<crate::net::packet::KeyItem>>,
    /// High-level mode: memoized hash-index choice per key.
    pub(crate) ght_index_memo: HashMap<KeyId, u32>,
    /// High-level mode: frozen routing view for offline index selection.
    pub(crate) init_view: Option<TopologyView>,
    /// Processed-event ceiling; [`EVENT_CAP`] unless a test lowers it.
    event_cap: u64,
    report: Option<MetricsReport>,
}

impl Sim {
    pub fn new(cfg: ScenarioConfig) -> Result<Sim, SimError> {
        let violations = cfg.validate();
        if !violations.is_empty() {
            return Err(SimError::Config(violations));
        }
        let bounds = cfg.bounds();
        let grid = cfg.region_grid().expect("validated");
        let n = cfg.topology.n as usize;

        // Placement (optionally rejecting one region to leave it empty).
        let mut rng_place = RngStream::new(cfg.topology.seed, "place");
        let true_pos: Vec<Point> = if let Some(x) = cfg.topology.exclude_region {
            let keep_out = RegionId(x);
            let mut pts = Vec::with_capacity(n);
            while pts.len() < n {
                let p = Point::new(
                    rng_place.uniform(0.0, bounds.width),
                    rng_place.uniform(0.0, bounds.height),
                );
                if grid.region_of_clamped(p) != keep_out {
                    pts.push(p);
                }
            }
            pts
        } else {
            place_uniform(n, bounds, &mut rng_place)
        };

        // Perceived positions: one error offset per node, fixed for the run.
        let mut rng_err = RngStream::new(cfg.topology.seed, "err");
        let err_radius_frac = cfg.dynamics.error_fraction;
        let nodes: Vec<Node> = true_pos
            .iter()
            .map(|&tp| {
                let pp = perceived_position(tp, err_radius_frac, cfg.radio.range, bounds, &mut rng_err);
                Node::new(tp, pp)
            })
            .collect();

        let radio = SpatialIndex::new(cfg.radio.range, &true_pos);

        let workload = gen_workload(&cfg);

        let rwp_rngs: Vec<RngStream> = (0..n as u64)
            .map(|i| RngStream::substream(cfg.topology.seed, "rwp", i))
            .collect();
        let elect_rngs: Vec<RngStream> = (0..n as u64)
            .map(|i| RngStream::substream(cfg.seed, "elect", i))
            .collect();
        let check_jitter: Vec<f64> = (0..n as u64)
            .map(|i| (mix64(hash_label(cfg.seed, "cjit") ^ i) % 5) as f64)
            .collect();

        // Gateway / central node: closest advertised position to the center.
        let center = bounds.center();
        let central = nodes
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.perceived
                    .dist2(center)
                    .partial_cmp(&b.1.perceived.dist2(center))
                    .unwrap()
                    .then(a.0.cmp(&b.0))
            })
            .map(|(i, _)| NodeId(i as u32))
            .expect("n >= 1");

        let mut sim = Sim {
            bounds,
            grid,
            queue: EventQueue::new(),
            metrics: MetricsSink::new(n),
            nodes,
            tpos: true_pos,
            radio,
            next_id: 1,
            workload,
            ops: Vec::new(),
            rng_jitter: RngStream::new(cfg.seed, "jitter"),
            rng_loss: RngStream::new(cfg.seed, "loss"),
            elect_rngs,
            rwp_rngs,
            check_jitter,
            gateway: central,
            central,
            transfer_items: HashMap::new(),
            ght_index_memo: HashMap::new(),
            init_view: None,
            event_cap: EVENT_CAP,
            report: None,
            cfg,
        };

        if sim.cfg.mode == Mode::HighLevel {
            // Synthesize beacon state once: static topology, no expiry.
            for i in 0..n {
                let p = sim.tpos[i];
                let nbrs = sim.radio.within_range(p, NodeId(i as u32), &sim.tpos);
                for v in nbrs {
                    let adv = sim.nodes[v.idx()].perceived;
                    sim.nodes[i].table.hear(v, adv, 0.0);
                }
            }
            if sim.cfg.protocol == ProtocolKind::Ght || sim.cfg.protocol == ProtocolKind::GhtStar {
                let advertised: Vec<Point> = sim.nodes.iter().map(|nd| nd.perceived).collect();
                sim.init_view = Some(TopologyView::new(&sim.tpos, advertised, sim.cfg.radio.range));
            }
        } else {
            // Mobility state.
            if sim.cfg.dynamics.max_speed > 0.0 {
                let params = sim.rwp_params();
                let bounds = sim.bounds;
                for i in 0..n {
                    let pos = sim.tpos[i];
                    let st = RwpState::init(pos, bounds, &params, &mut sim.rwp_rngs[i]);
                    sim.nodes[i].rwp = Some(st);
                }
            }
        }

        Ok(sim)
    }

    fn rwp_params(&self) -> RwpParams {
        RwpParams { max_speed: self.cfg.dynamics.max_speed, pause: self.cfg.dynamics.pause }
    }

    pub(crate) fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub(crate) fn ideal(&self) -> bool {
        self.cfg.mode == Mode::HighLevel
    }

    fn table_expiry(&self) -> f64 {
        if self.ideal() { f64::INFINITY } else { self.cfg.net.beacon_expiry }
    }

    pub(crate) fn now(&self) -> f64 {
        self.queue.now()
    }

    /// The region a node currently considers itself in (by advertised
    /// position).
    pub(crate) fn node_region(&self, me: NodeId) -> RegionId {
        self.grid.region_of_clamped(self.nodes[me.idx()].perceived)
    }

    pub(crate) fn perceived(&self, me: NodeId) -> Point {
        self.nodes[me.idx()].perceived
    }

    // -----------------------------------------------------------------
    // Run loop
    // -----------------------------------------------------------------

    /// Run the scenario to completion and produce the metrics report.
    pub fn run(&mut self) -> Result<MetricsReport, SimError> {
        debug_assert!(self.report.is_none(), "run() called twice");
        // Initial schedule.
        if !self.ideal() {
            self.queue.schedule(0.0, Action::BeaconTick).unwrap();
            if self.cfg.dynamics.max_speed > 0.0 {
                self.queue.schedule(MOBILITY_DT, Action::MobilityTick).unwrap();
            }
            let mut rng_fail = RngStream::new(self.cfg.topology.seed, "fail");
            for (at, node) in inject_failures(
                self.nodes.len(),
                self.cfg.dynamics.failure_fraction,
                self.cfg.duration,
                &mut rng_fail,
            ) {
                self.queue.schedule(at, Action::Kill(node)).unwrap();
            }
        }
        self.queue.schedule(1.0, Action::ProtocolTick).unwrap();
        for i in 0..self.workload.len() {
            let at = self.workload[i].at;
            self.queue.schedule(at, Action::Issue(i)).unwrap();
        }
        self.queue.schedule(self.cfg.duration, Action::End).unwrap();

        while let Some((_, action)) = self.queue.pop() {
            if self.queue.fired() > self.event_cap {
                return Err(SimError::EventCapExceeded { fired: self.queue.fired() });
            }
            match action {
                Action::End => break,
                Action::BeaconTick => self.beacon_tick(),
                Action::MobilityTick => self.mobility_tick(),
                Action::ProtocolTick => self.protocol_tick(),
                Action::Kill(id) => self.kill(id),
                Action::Issue(i) => self.issue_workload_op(i),
                Action::Arrive { to, pkt } => self.arrive(to, pkt),
                Action::OpTimeout { op, attempt } => self.op_timeout(op, attempt),
                Action::NodeTimer { node, token } => self.rr_timer_fired(node, token),
            }
        }

        let storage: Vec<u32> = self.nodes.iter().map(|nd| nd.stored_count()).collect();
        let sink = std::mem::replace(&mut self.metrics, MetricsSink::new(0));
        let report = sink.finalize(self.cfg.duration, self.queue.fired(), storage);
        self.report = Some(report.clone());
        Ok(report)
    }

    // -----------------------------------------------------------------
    // Periodic global actions
    // -----------------------------------------------------------------

    fn beacon_tick(&mut self) {
        let now = self.now();
        let n = self.nodes.len();
        let loss = self.cfg.radio.loss;
        for i in 0..n {
            if !self.nodes[i].alive {
                continue;
            }
            let me = NodeId(i as u32);
            self.metrics.record_tx(me, MsgCategory::RoutingBeacon, "beacon");
            let adv = self.nodes[i].perceived;
            let nbrs = self.radio.within_range(self.tpos[i], me, &self.tpos);
            for v in nbrs {
                if !self.nodes[v.idx()].alive {
                    continue;
                }
                if loss > 0.0 && self.rng_loss.chance(loss) {
                    continue;
                }
                self.nodes[v.idx()].table.hear(me, adv, now);
            }
        }
        let expiry = self.cfg.net.beacon_expiry;
        for nd in &mut self.nodes {
            nd.table.purge(now, expiry);
        }
        let next = now + self.cfg.net.beacon_interval;
        if next < self.cfg.duration {
            self.queue.schedule(next, Action::BeaconTick).unwrap();
        }
    }

    fn mobility_tick(&mut self) {
        let now = self.now();
        let params = self.rwp_params();
        let n = self.nodes.len();
        for i in 0..n {
            if !self.nodes[i].alive {
                continue;
            }
            let Some(mut st) = self.nodes[i].rwp.take() else { continue };
            let p = self.tpos[i];
            let mut np = p;
            st.step(&mut np, self.bounds, &params, &mut self.rwp_rngs[i], now, MOBILITY_DT);
            self.nodes[i].rwp = Some(st);
            if np != p {
                self.tpos[i] = np;
                self.nodes[i].true_pos = np;
                let (dx, dy) = self.nodes[i].err_offset;
                self.nodes[i].perceived = self.bounds.clamp(Point::new(np.x + dx, np.y + dy));
                self.radio.update(NodeId(i as u32), np);
            }
        }
        let next = now + MOBILITY_DT;
        if next < self.cfg.duration {
            self.queue.schedule(next, Action::MobilityTick).unwrap();
        }
    }

    fn protocol_tick(&mut self) {
        let now = self.now();
        match self.cfg.protocol {
            ProtocolKind::Rr => {
                for i in 0..self.nodes.len() {
                    if self.nodes[i].alive {
                        self.rr_node_tick(NodeId(i as u32), now);
                    }
                }
            }
            ProtocolKind::Ght | ProtocolKind::GhtStar => {
                for i in 0..self.nodes.len() {
                    if self.nodes[i].alive {
                        self.ght_node_tick(NodeId(i as u32), now);
                    }
                }
            }
            _ => {}
        }
        let next = now + 1.0;
        if next < self.cfg.duration {
            self.queue.schedule(next, Action::ProtocolTick).unwrap();
        }
    }

    fn kill(&mut self, id: NodeId) {
        if !self.nodes[id.idx()].alive {
            return;
        }
        self.nodes[id.idx()].alive = false;
        self.radio.remove(id);
    }

    // -----------------------------------------------------------------
    // Workload plumbing
    // -----------------------------------------------------------------

    /// Resolve an origin selector to an alive node (deterministic scan).
    fn resolve_origin(&self, sel: OriginSel) -> Option<NodeId> {
        let n = self.nodes.len();
        let start = match sel {
            OriginSel::Random(i) => i as usize % n,
            OriginSel::Gateway => self.gateway.idx(),
        };
        (0..n)
            .map(|k| (start + k) % n)
            .find(|&i| self.nodes[i].alive)
            .map(|i| NodeId(i as u32))
    }

    fn issue_workload_op(&mut self, widx: usize) {
        let top = self.workload[widx].clone();
        let Some(origin) = self.resolve_origin(top.origin) else { return };
        let (kind, key, value) = match top.op {
            WorkOp::Insert { key, value } => (OpKind::Insert, key, value),
            WorkOp::Lookup { key } => (OpKind::Lookup, key, Vec::new()),
        };
        let op = self.ops.len();
        self.ops.push(OpState {
            kind,
            key,
            value,
            origin,
            issued_at: self.now(),
            attempts: 1,
            done: false,
            region: None,
            category: match kind {
                OpKind::Insert => MsgCategory::Insertion,
                OpKind::Lookup => MsgCategory::Lookup,
                OpKind::Transfer => MsgCategory::MobilityUpdate,
            },
        });
        self.protocol_issue(op);
        self.schedule_op_timeout(op);
    }

    /// Register and launch an internal acknowledged transfer.
    pub(crate) fn start_transfer_op(
        &mut self,
        origin: NodeId,
        region: RegionId,
        items_key: KeyId,
    ) -> usize {
        let op = self.ops.len();
        self.ops.push(OpState {
            kind: OpKind::Transfer,
            key: items_key,
            value: Vec::new(),
            origin,
            issued_at: self.now(),
            attempts: 1,
            done: false,
            region: Some(region),
            category: MsgCategory::MobilityUpdate,
        });
        op
    }

    pub(crate) fn op_timeout_secs(&self) -> f64 {
        2.0
    }

    pub(crate) fn schedule_op_timeout(&mut self, op: usize) {
        let attempt = self.ops[op].attempts;
        let at = self.now() + self.op_timeout_secs();
        if at < self.cfg.duration {
            self.queue.schedule(at, Action::OpTimeout { op, attempt }).unwrap();
        }
    }

    fn op_timeout(&mut self, op: usize, attempt: u32) {
        if self.ops[op].done || self.ops[op].attempts != attempt {
            return;
        }
        if !self.nodes[self.ops[op].origin.idx()].alive {
            return; // origin died; operation abandoned silently
        }
        if self.ops[op].attempts < 1 + self.cfg.retries {
            self.ops[op].attempts += 1;
            self.protocol_issue(op);
            self.schedule_op_timeout(op);
        } else if matches!(self.cfg.protocol, ProtocolKind::Flooding)
            && matches!(self.ops[op].kind, OpKind::Lookup)
        {
            // A flood covers every reachable node and only holders reply;
            // silence after the last retry is an authoritative miss rather
            // than a delivery failure.
            self.finish_op(op, LookupOutcome::NotFound);
        } else {
            self.finish_op_failure(op);
        }
    }

    /// Record a completed operation.
    pub(crate) fn finish_op(&mut self, op: usize, outcome: LookupOutcome) {
        if self.ops[op].done {
            return;
        }
        self.ops[op].done = true;
        let st = &self.ops[op];
        let latency = self.queue.now() - st.issued_at;
        match st.kind {
            OpKind::Insert => self.metrics.inserts.push(InsertRecord {
                issued_at: st.issued_at,
                latency,
                acked: true,
                attempts: st.attempts,
            }),
            OpKind::Lookup => self.metrics.lookups.push(LookupRecord {
                issued_at: st.issued_at,
                latency,
                outcome,
                attempts: st.attempts,
            }),
            OpKind::Transfer => {}
        }
    }

    fn finish_op_failure(&mut self, op: usize) {
        if self.ops[op].done {
            return;
        }
        self.ops[op].done = true;
        let st = &self.ops[op];
        let latency = self.queue.now() - st.issued_at;
        match st.kind {
            OpKind::Insert => self.metrics.inserts.push(InsertRecord {
                issued_at: st.issued_at,
                latency,
                acked: false,
                attempts: st.attempts,
            }),
            OpKind::Lookup => self.metrics.lookups.push(LookupRecord {
                issued_at: st.issued_at,
                latency,
                outcome: LookupOutcome::Failure,
                attempts: st.attempts,
            }),
            OpKind::Transfer => {}
        }
    }

    fn protocol_issue(&mut self, op: usize) {
        match self.cfg.protocol {
            ProtocolKind::Rr => self.rr_issue(op),
            ProtocolKind::Ght | ProtocolKind::GhtStar => self.ght_issue(op),
            ProtocolKind::Flooding => self.flooding_issue(op),
            ProtocolKind::Centralized => self.centralized_issue(op),
        }
    }

    // -----------------------------------------------------------------
    // Transmission primitives
    // -----------------------------------------------------------------

    fn hop_delay(&mut self) -> f64 {
        if self.ideal() {
            0.0
        } else {
            self.cfg.net.hop_latency + self.rng_jitter.uniform01() * self.cfg.net.jitter
        }
    }

    /// Transmit `pkt` from `from` to the specific neighbor `to`. Consumes
    /// one TTL unit; the caller has already chosen the next hop.
    pub(crate) fn transmit(&mut self, from: NodeId, to: NodeId, mut pkt: Packet) {
        if pkt.ttl == 0 {
            self.metrics.ttl_drops += 1;
            return;
        }
        pkt.ttl -= 1;
        self.metrics.record_tx(from, pkt.category, pkt.body.kind());
        let loss = self.cfg.radio.loss;
        if loss > 0.0 && self.rng_loss.chance(loss) {
            return;
        }
        pkt.prev = Some((from, self.nodes[from.idx()].perceived));
        pkt.hops += 1;
        let delay = self.hop_delay();
        self.queue.schedule_in(delay, Action::Arrive { to, pkt }).unwrap();
    }

    /// One broadcast transmission delivered to every radio neighbor.
    pub(crate) fn broadcast(&mut self, from: NodeId, mut pkt: Packet) {
        self.metrics.record_tx(from, pkt.category, pkt.body.kind());
        pkt.prev = Some((from, self.nodes[from.idx()].perceived));
        pkt.hops += 1;
        let delay = self.hop_delay();
        let loss = self.cfg.radio.loss;
        let nbrs = self.radio.within_range(self.tpos[from.idx()], from, &self.tpos);
        for v in nbrs {
            if !self.nodes[v.idx()].alive {
                continue;
            }
            if loss > 0.0 && self.rng_loss.chance(loss) {
                continue;
            }
            self.queue
                .schedule_in(delay, Action::Arrive { to: v, pkt: pkt.clone() })
                .unwrap();
        }
    }

    fn arrive(&mut self, to: NodeId, pkt: Packet) {
        if !self.nodes[to.idx()].alive {
            return;
        }
        match &pkt.nav {
            Nav::RegionFlood { .. } | Nav::Flood | Nav::FaceProbe { .. } => {
                self.flood_arrive(to, pkt)
            }
            Nav::PerimeterWalk { .. } => self.walk_arrive(to, pkt),
            _ => self.route_step(to, pkt),
        }
    }

    // -----------------------------------------------------------------
    // Greedy + face routing driver
    // -----------------------------------------------------------------

    /// Fresh neighbor view (advertised positions) for routing decisions.
    pub(crate) fn nbr_snapshot(&self, me: NodeId) -> Vec<(NodeId, Point)> {
        self.nodes[me.idx()].table.snapshot(self.now(), self.table_expiry())
    }

    /// Planarized neighbor view, recomputed per replanarization interval
    /// and pruned to currently live table entries.
    pub(crate) fn planar_snapshot(&mut self, me: NodeId) -> Vec<(NodeId, Point)> {
        let now = self.now();
        let stale = match &self.nodes[me.idx()].planar {
            None => true,
            Some(c) => !self.ideal() && now - c.computed_at >= self.cfg.ght.replanarize_interval,
        };
        if stale {
            let snap = self.nbr_snapshot(me);
            let edges = gabriel_neighbors(self.nodes[me.idx()].perceived, &snap);
            self.nodes[me.idx()].planar = Some(PlanarCache { computed_at: now, edges });
        }
        let expiry = self.table_expiry();
        let nd = &self.nodes[me.idx()];
        nd.planar
            .as_ref()
            .unwrap()
            .edges
            .iter()
            .filter(|(id, _)| {
                nd.table.get(*id).map(|e| now - e.last_heard <= expiry).unwrap_or(false)
            })
            .copied()
            .collect()
    }

    /// Route (or locally deliver) a packet currently held by `me`.
    pub(crate) fn route_step(&mut self, me: NodeId, mut pkt: Packet) {
        // Local delivery checks.
        match &pkt.nav {
            Nav::Unicast { target, .. } if *target == me => {
                self.deliver(me, pkt);
                return;
            }
            Nav::ToRegion { region, .. } if self.node_region(me) == *region => {
                pkt.flooder_flag = true;
                self.deliver(me, pkt);
                return;
            }
            _ => {}
        }
        let Some(dest) = pkt.dest_point() else {
            self.metrics.undeliverable_drops += 1;
            return;
        };
        let my_pos = self.nodes[me.idx()].perceived;
        let mode = match &mut pkt.nav {
            Nav::Unicast { mode, .. } | Nav::ToPoint { mode, .. } | Nav::ToRegion { mode, .. } => {
                mode
            }
            _ => unreachable!("routed nav"),
        };
        // Perimeter -> greedy reversion on progress past the entry point.
        if let RouteMode::Perimeter(st) = &*mode {
            if st.closer_than_entry(my_pos, dest) {
                *mode = RouteMode::Greedy;
            }
        }
        let mut entered_here = false;
        if matches!(mode, RouteMode::Greedy) {
            let nbrs = self.nbr_snapshot(me);
            if let Some(next) = greedy_next(my_pos, dest, &nbrs) {
                self.transmit(me, next, pkt);
                return;
            }
            // Greedy dead end: enter perimeter mode here.
            let mode = match &mut pkt.nav {
                Nav::Unicast { mode, .. }
                | Nav::ToPoint { mode, .. }
                | Nav::ToRegion { mode, .. } => mode,
                _ => unreachable!(),
            };
            *mode = RouteMode::Perimeter(PerimeterState::enter(my_pos, dest));
            entered_here = true;
        }
        let planar = self.planar_snapshot(me);
        let prev = if entered_here { None } else { pkt.prev };
        let step = {
            let st = match &mut pkt.nav {
                Nav::Unicast { mode: RouteMode::Perimeter(st), .. }
                | Nav::ToPoint { mode: RouteMode::Perimeter(st), .. }
                | Nav::ToRegion { mode: RouteMode::Perimeter(st), .. } => st,
                _ => unreachable!("perimeter mode set above"),
            };
            face_next(me, my_pos, prev, &planar, dest, st)
        };
        match step {
            FaceStep::Forward(next) => self.transmit(me, next, pkt),
            FaceStep::Unreachable => self.on_undeliverable(me, pkt),
        }
    }

    // -----------------------------------------------------------------
    // Flood / geocast drivers
    // -----------------------------------------------------------------

    /// Start a region geocast at an in-region node: local delivery plus
    /// one scoped rebroadcast wave. Returns the flood packet id.
    pub(crate) fn geocast(
        &mut self,
        flooder: NodeId,
        region: RegionId,
        category: MsgCategory,
        body: Body,
    ) -> u64 {
        let id = self.fresh_id();
        let pkt = Packet {
            id,
            category,
            nav: Nav::RegionFlood { region },
            ttl: self.cfg.net.ttl,
            origin: flooder,
            origin_pos: self.nodes[flooder.idx()].perceived,
            prev: None,
            hops: 0,
            flooder_flag: true,
            body,
        };
        self.nodes[flooder.idx()].seen.insert(id);
        self.metrics.geocast_started(id);
        self.metrics.geocast_delivered(id);
        self.flood_payload(flooder, &pkt);
        self.flood_rebroadcast(flooder, pkt);
        id
    }

    /// Start an unscoped network flood at `origin`.
    pub(crate) fn flood(&mut self, origin: NodeId, category: MsgCategory, body: Body) -> u64 {
        let id = self.fresh_id();
        let pkt = Packet {
            id,
            category,
            nav: Nav::Flood,
            ttl: self.cfg.net.ttl,
            origin,
            origin_pos: self.nodes[origin.idx()].perceived,
            prev: None,
            hops: 0,
            flooder_flag: false,
            body,
        };
        self.nodes[origin.idx()].seen.insert(id);
        self.flood_payload(origin, &pkt);
        self.flood_rebroadcast(origin, pkt);
        id
    }

    /// Rebroadcast a flood-family packet (TTL permitting) and, for
    /// flood+face geocasts, launch border probes.
    fn flood_rebroadcast(&mut self, me: NodeId, mut pkt: Packet) {
        let region = match pkt.nav {
            Nav::RegionFlood { region } => Some(region),
            _ => None,
        };
        if pkt.ttl == 0 {
            self.metrics.ttl_drops += 1;
            return;
        }
        pkt.ttl -= 1;
        self.broadcast(me, pkt.clone());
        // Border probes for gap bridging.
        if let Some(region) = region {
            if self.gfpg_active(&pkt.body) {
                let planar = self.planar_snapshot(me);
                let outside: Vec<(NodeId, Point)> = planar
                    .into_iter()
                    .filter(|(_, pos)| self.grid.region_of_clamped(*pos) != region)
                    .collect();
                if !outside.is_empty() {
                    let budget =
                        (2.0 * self.grid.cell_perimeter() / self.cfg.radio.range).ceil() as u32;
                    for (w, _) in outside {
                        let probe = Packet {
                            nav: Nav::FaceProbe { region, budget },
                            ..pkt.clone()
                        };
                        self.transmit(me, w, probe);
                    }
                }
            }
        }
    }

    fn gfpg_active(&self, body: &Body) -> bool {
        use crate::harness::scenario::GeocastKind;
        if self.cfg.rr.geocast != GeocastKind::Gfpg {
            return false;
        }
        // Face probes extend every region geocast the protocol sends.
        !matches!(body, Body::FloodLookup { .. } | Body::FloodReply { .. })
    }

    fn flood_arrive(&mut self, me: NodeId, mut pkt: Packet) {
        match pkt.nav {
            Nav::RegionFlood { region } => {
                if self.nodes[me.idx()].seen.contains(&pkt.id) {
                    return;
                }
                if self.node_region(me) != region {
                    // Heard across the border; scoped floods stop here.
                    return;
                }
                self.nodes[me.idx()].seen.insert(pkt.id);
                self.metrics.geocast_delivered(pkt.id);
                self.flood_payload(me, &pkt);
                self.flood_rebroadcast(me, pkt);
            }
            Nav::Flood => {
                if self.nodes[me.idx()].seen.contains(&pkt.id) {
                    return;
                }
                self.nodes[me.idx()].seen.insert(pkt.id);
                self.flood_payload(me, &pkt);
                self.flood_rebroadcast(me, pkt);
            }
            Nav::FaceProbe { region, budget } => {
                if self.node_region(me) == region {
                    if self.nodes[me.idx()].seen.contains(&pkt.id) {
                        return;
                    }
                    // Re-entered at an unreached node: re-inject the flood.
                    self.nodes[me.idx()].seen.insert(pkt.id);
                    self.metrics.geocast_delivered(pkt.id);
                    pkt.nav = Nav::RegionFlood { region };
                    self.flood_payload(me, &pkt);
                    self.flood_rebroadcast(me, pkt);
                    return;
                }
                if budget == 0 {
                    self.metrics.undeliverable_drops += 1;
                    return;
                }
                let my_pos = self.nodes[me.idx()].perceived;
                let prev_pos = match pkt.prev {
                    Some((_, p)) => p,
                    None => my_pos,
                };
                let planar = self.planar_snapshot(me);
                match pure_face_next(my_pos, prev_pos, &planar) {
                    Some(next) => {
                        pkt.nav = Nav::FaceProbe { region, budget: budget - 1 };
                        self.transmit(me, next, pkt);
                    }
                    None => {
                        self.metrics.dead_end_drops += 1;
                    }
                }
            }
            _ => unreachable!("flood nav"),
        }
    }

    // -----------------------------------------------------------------
    // Home-perimeter walk driver
    // -----------------------------------------------------------------

    /// Start a perimeter walk at `home` around `dest`. The walk visits
    /// every node on the enclosing face (storing or collecting per the
    /// body) and completes where the first edge would repeat.
    pub(crate) fn start_walk(&mut self, home: NodeId, dest: Point, category: MsgCategory, body: Body) {
        let id = self.fresh_id();
        let home_pos = self.nodes[home.idx()].perceived;
        let mut pkt = Packet {
            id,
            category,
            nav: Nav::PerimeterWalk { dest, st: PerimeterState::enter(home_pos, dest) },
            ttl: self.cfg.net.ttl,
            origin: home,
            origin_pos: home_pos,
            prev: None,
            hops: 0,
            flooder_flag: false,
            body,
        };
        self.ght_walk_visit(home, &mut pkt);
        let planar = self.planar_snapshot(home);
        let step = {
            let st = match &mut pkt.nav {
                Nav::PerimeterWalk { st, .. } => st,
                _ => unreachable!(),
            };
            face_next(home, home_pos, None, &planar, dest, st)
        };
        match step {
            FaceStep::Forward(next) => self.transmit(home, next, pkt),
            FaceStep::Unreachable => self.ght_walk_done(home, pkt),
        }
    }

    fn walk_arrive(&mut self, me: NodeId, mut pkt: Packet) {
        self.ght_walk_visit(me, &mut pkt);
        if pkt.ttl == 0 {
            // Out of budget (the face never closed, e.g. under motion the
            // local planar graphs disagree): finish here with what the walk
            // has gathered rather than vanishing without an answer.
            self.ght_walk_done(me, pkt);
            return;
        }
        let my_pos = self.nodes[me.idx()].perceived;
        let planar = self.planar_snapshot(me);
        let prev = pkt.prev;
        let (dest, step) = {
            let (dest, st) = match &mut pkt.nav {
                Nav::PerimeterWalk { dest, st } => (*dest, st),
                _ => unreachable!(),
            };
            (dest, face_next(me, my_pos, prev, &planar, dest, st))
        };
        let _ = dest;
        match step {
            FaceStep::Forward(next) => self.transmit(me, next, pkt),
            FaceStep::Unreachable => self.ght_walk_done(me, pkt),
        }
    }

    // -----------------------------------------------------------------
    // Packet construction helpers
    // -----------------------------------------------------------------

    pub(crate) fn make_unicast(
        &mut self,
        from: NodeId,
        target: NodeId,
        target_pos: Point,
        category: MsgCategory,
        body: Body,
    ) -> Packet {
        Packet {
            id: self.fresh_id(),
            category,
            nav: Nav::Unicast { target, target_pos, mode: RouteMode::Greedy },
            ttl: self.cfg.net.ttl,
            origin: from,
            origin_pos: self.nodes[from.idx()].perceived,
            prev: None,
            hops: 0,
            flooder_flag: false,
            body,
        }
    }

    pub(crate) fn make_to_region(
        &mut self,
        from: NodeId,
        region: RegionId,
        category: MsgCategory,
        body: Body,
    ) -> Packet {
        Packet {
            id: self.fresh_id(),
            category,
            nav: Nav::ToRegion { region, dest: self.grid.center(region), mode: RouteMode::Greedy },
            ttl: self.cfg.net.ttl,
            origin: from,
            origin_pos: self.nodes[from.idx()].perceived,
            prev: None,
            hops: 0,
            flooder_flag: false,
            body,
        }
    }

    pub(crate) fn make_to_point(
        &mut self,
        from: NodeId,
        dest: Point,
        category: MsgCategory,
        body: Body,
    ) -> Packet {
        Packet {
            id: self.fresh_id(),
            category,
            nav: Nav::ToPoint { dest, mode: RouteMode::Greedy },
            ttl: self.cfg.net.ttl,
            origin: from,
            origin_pos: self.nodes[from.idx()].perceived,
            prev: None,
            hops: 0,
            flooder_flag: false,
            body,
        }
    }

    /// Schedule a node-local protocol timer; returns its token.
    pub(crate) fn schedule_node_timer(&mut self, node: NodeId, delay: f64, timer: node::RrTimer) -> u64 {
        let token = self.fresh_id();
        self.nodes[node.idx()].rr.timers.insert(token, timer);
        self.queue
            .schedule_in(delay, Action::NodeTimer { node, token })
            .unwrap();
        token
    }

    // -----------------------------------------------------------------
    // Protocol dispatch
    // -----------------------------------------------------------------

    /// Full local delivery of a routed packet (unicast target, flooder of
    /// a region-addressed packet, or point-route terminal via
    /// [`Sim::on_undeliverable`]).
    pub(crate) fn deliver(&mut self, me: NodeId, pkt: Packet) {
        match &pkt.body {
            Body::Ping => {}
            Body::RrInsert(..)
            | Body::RrServerAck { .. }
            | Body::RrInsertDone { .. }
            | Body::RrProxyResolved { .. }
            | Body::RrProxyDrop { .. }
            | Body::RrElection { .. }
            | Body::RrSyncRequest { .. }
            | Body::RrSyncState { .. }
            | Body::RrLookup { .. }
            | Body::RrLookupDirect { .. }
            | Body::RrLookupGeo { .. }
            | Body::RrLookupReply { .. }
            | Body::RrLookupDone { .. }
            | Body::RrCheck { .. }
            | Body::RrCheckReply { .. } => self.rr_deliver(me, pkt),
            Body::GhtPut { .. }
            | Body::GhtGet { .. }
            | Body::GhtRefresh { .. }
            | Body::GhtWalk { .. }
            | Body::GhtPutAck { .. }
            | Body::GhtGetReply { .. }
            | Body::GhtDemote { .. } => self.ght_deliver(me, pkt),
            Body::FloodLookup { .. }
            | Body::FloodReply { .. }
            | Body::CentralPut { .. }
            | Body::CentralPutAck { .. }
            | Body::CentralGet { .. }
            | Body::CentralReply { .. } => self.baseline_deliver(me, pkt),
        }
    }

    /// Payload processing on each first receipt of a flood-family packet.
    pub(crate) fn flood_payload(&mut self, me: NodeId, pkt: &Packet) {
        match &pkt.body {
            Body::Ping => {}
            Body::RrInsert(..)
            | Body::RrElection { .. }
            | Body::RrLookupGeo { .. }
            | Body::RrCheck { .. }
            | Body::RrProxyDrop { .. } => self.rr_flood_payload(me, pkt),
            Body::FloodLookup { .. } => self.baseline_flood_payload(me, pkt),
            _ => {}
        }
    }

    /// A routed packet hit the unreachable condition at `me`.
    fn on_undeliverable(&mut self, me: NodeId, pkt: Packet) {
        match (&pkt.nav, &pkt.body) {
            (Nav::ToRegion { .. }, _) => self.rr_undeliverable_region(me, pkt),
            (Nav::ToPoint { .. }, Body::GhtPut { .. })
            | (Nav::ToPoint { .. }, Body::GhtGet { .. })
            | (Nav::ToPoint { .. }, Body::GhtRefresh { .. }) => self.ght_home_arrival(me, pkt),
            _ => {
                self.metrics.undeliverable_drops += 1;
            }
        }
    }

    // -----------------------------------------------------------------
    // Introspection (post-run queries, oracle tests, harness)
    // -----------------------------------------------------------------

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn alive(&self, id: NodeId) -> bool {
        self.nodes[id.idx()].alive
    }

    pub fn true_position(&self, id: NodeId) -> Point {
        self.nodes[id.idx()].true_pos
    }

    pub fn advertised_position(&self, id: NodeId) -> Point {
        self.nodes[id.idx()].perceived
    }

    pub fn central_node(&self) -> NodeId {
        self.central
    }

    pub fn gateway_node(&self) -> NodeId {
        self.gateway
    }

    /// Nodes currently holding a value for `key`, across all protocols.
    pub fn replica_nodes(&self, key: KeyId) -> Vec<NodeId> {
        let mut out = Vec::new();
        for (i, nd) in self.nodes.iter().enumerate() {
            if !nd.alive {
                continue; // a fail-stopped node's memory is gone
            }
            let has_rr = nd.rr.serves.values().any(|s| s.store.contains_key(&key));
            let has = has_rr
                || nd.ght.replicas.contains_key(&key)
                || nd.local_store.contains_key(&key)
                || nd.central_store.contains_key(&key);
            if has {
                out.push(NodeId(i as u32));
            }
        }
        out
    }

    /// Regions a node currently serves (region-rendezvous role).
    pub fn server_regions(&self, id: NodeId) -> Vec<RegionId> {
        self.nodes[id.idx()].rr.serves.keys().copied().collect()
    }

    /// Nodes that have processed flood packet `id` (receiver set of a
    /// geocast, observable after the run).
    pub fn nodes_that_saw(&self, pkt_id: u64) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].seen.contains(&pkt_id))
            .map(|i| NodeId(i as u32))
            .collect()
    }

    /// Static routing view of the CURRENT node state (oracle comparisons).
    pub fn topology_view(&self) -> TopologyView {
        let advertised: Vec<Point> = self.nodes.iter().map(|nd| nd.perceived).collect();
        TopologyView::new(&self.tpos, advertised, self.cfg.radio.range)
    }

    /// Replace the generated workload (scripted tests). Call before `run`.
    pub fn set_workload(&mut self, ops: Vec<TimedOp>) {
        self.workload = ops;
    }

    pub fn workload_len(&self) -> usize {
        self.workload.len()
    }

    /// Schedule an extra node failure (scripted tests). Call before `run`.
    pub fn script_kill(&mut self, at: f64, node: NodeId) {
        self.queue.schedule(at, Action::Kill(node)).unwrap();
    }

    /// The report produced by `run` (None before the run completes).
    pub fn report(&self) -> Option<&MetricsReport> {
        self.report.as_ref()
    }

    /// Lower the processed-event ceiling (tests exercise the abort path).
    #[doc(hidden)]
    pub fn set_event_cap(&mut self, cap: u64) {
        self.event_cap = cap;
    }
}

