//! Metrics collection. Every transmission in the simulator flows through
//! [`MetricsSink::record_tx`], so category totals always sum to the grand
//! total by construction.

use std::collections::BTreeMap;

use crate::world::NodeId;

/// Cost category of a transmission. Broadcasts count once at the sender.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum MsgCategory {
    /// Data insertion traffic, including its acks and replication.
    Insertion,
    /// Lookup traffic, including replies.
    Lookup,
    /// Periodic soft-state maintenance: liveness checks, refresh walks.
    Periodic,
    /// State handoff caused by node movement.
    MobilityUpdate,
    /// Server election rounds and key synchronization to new servers.
    Election,
    /// Neighbor-table beacons.
    RoutingBeacon,
}

impl MsgCategory {
    pub const ALL: [MsgCategory; 6] = [
        MsgCategory::Insertion,
        MsgCategory::Lookup,
        MsgCategory::Periodic,
        MsgCategory::MobilityUpdate,
        MsgCategory::Election,
        MsgCategory::RoutingBeacon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MsgCategory::Insertion => "insertion",
            MsgCategory::Lookup => "lookup",
            MsgCategory::Periodic => "periodic",
            MsgCategory::MobilityUpdate => "mobility_update",
            MsgCategory::Election => "election",
            MsgCategory::RoutingBeacon => "routing_beacon",
        }
    }
}

/// Per-node transmit counts, one slot per category.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeCounts {
    counts: [u64; 6],
}

impl NodeCounts {
    #[inline]
    pub fn bump(&mut self, cat: MsgCategory) {
        self.counts[cat as usize] += 1;
    }

    #[inline]
    pub fn get(&self, cat: MsgCategory) -> u64 {
        self.counts[cat as usize]
    }

    #[inline]
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Total excluding beacon traffic; beacons run identically under every
    /// scheme so comparisons usually exclude them.
    #[inline]
    pub fn total_protocol(&self) -> u64 {
        self.total() - self.get(MsgCategory::RoutingBeacon)
    }
}

/// Outcome of one lookup operation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LookupOutcome {
    /// A value came back.
    Success,
    /// An authoritative "no such key" came back.
    NotFound,
    /// No answer within the retry budget.
    Failure,
}

impl LookupOutcome {
    pub fn name(self) -> &'static str {
        match self {
            LookupOutcome::Success => "success",
            LookupOutcome::NotFound => "not_found",
            LookupOutcome::Failure => "failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LookupRecord {
    pub issued_at: f64,
    /// Completion latency, seconds; failures record the time until the
    /// operation was abandoned.
    pub latency: f64,
    pub outcome: LookupOutcome,
    pub attempts: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InsertRecord {
    pub issued_at: f64,
    pub latency: f64,
    pub acked: bool,
    pub attempts: u32,
}

/// Live collector; finalized into a [`MetricsReport`] at end of run.
#[derive(Clone, Debug, Default)]
pub struct MetricsSink {
    per_node: Vec<NodeCounts>,
    kind_counts: BTreeMap<&'static str, u64>,
    pub lookups: Vec<LookupRecord>,
    pub inserts: Vec<InsertRecord>,
    pub ttl_drops: u64,
    pub undeliverable_drops: u64,
    pub dead_end_drops: u64,
    pub elections_started: u64,
    pub perimeter_walk_lengths: Vec<u32>,
    pub geocast_deliveries: Vec<u32>,
    /// Maps a live geocast's packet id to its slot in `geocast_deliveries`.
    geocast_index: BTreeMap<u64, usize>,
}

impl MetricsSink {
    pub fn new(n: usize) -> Self {
        MetricsSink {
            per_node: vec![NodeCounts::default(); n],
            ..Default::default()
        }
    }

    /// The single chokepoint: one call per transmission.
    #[inline]
    pub fn record_tx(&mut self, node: NodeId, cat: MsgCategory, kind: &'static str) {
        self.per_node[node.idx()].bump(cat);
        *self.kind_counts.entry(kind).or_insert(0) += 1;
    }

    /// Open a receiver counter for a new geocast.
    pub fn geocast_started(&mut self, id: u64) {
        self.geocast_index.insert(id, self.geocast_deliveries.len());
        self.geocast_deliveries.push(0);
    }

    /// Count one member delivery for the geocast with packet id `id`.
    pub fn geocast_delivered(&mut self, id: u64) {
        if let Some(&i) = self.geocast_index.get(&id) {
            self.geocast_deliveries[i] += 1;
        }
    }

    pub fn finalize(
        self,
        duration: f64,
        events_processed: u64,
        storage_per_node: Vec<u32>,
    ) -> MetricsReport {
        MetricsReport {
            duration,
            events_processed,
            per_node: self.per_node,
            kind_counts: self.kind_counts,
            lookups: self.lookups,
            inserts: self.inserts,
            ttl_drops: self.ttl_drops,
            undeliverable_drops: self.undeliverable_drops,
            dead_end_drops: self.dead_end_drops,
            elections_started: self.elections_started,
            perimeter_walk_lengths: self.perimeter_walk_lengths,
            geocast_deliveries: self.geocast_deliveries,
            storage_per_node,
        }
    }
}

/// Immutable result of a run. Two runs of the same scenario and seed
/// produce equal reports (and identical [`MetricsReport::to_text`] dumps).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub duration: f64,
    pub events_processed: u64,
    pub per_node: Vec<NodeCounts>,
    pub kind_counts: BTreeMap<&'static str, u64>,
    pub lookups: Vec<LookupRecord>,
    pub inserts: Vec<InsertRecord>,
    pub ttl_drops: u64,
    pub undeliverable_drops: u64,
    pub dead_end_drops: u64,
    pub elections_started: u64,
    pub perimeter_walk_lengths: Vec<u32>,
    pub geocast_deliveries: Vec<u32>,
    /// Stored records per node at end of run (soft-state replicas included).
    pub storage_per_node: Vec<u32>,
}

impl MetricsReport {
    pub fn n(&self) -> usize {
        self.per_node.len()
    }

    /// Total transmissions in one category across all nodes.
    pub fn total(&self, cat: MsgCategory) -> u64 {
        self.per_node.iter().map(|c| c.get(cat)).sum()
    }

    /// Grand total of all transmissions.
    pub fn grand_total(&self) -> u64 {
        self.per_node.iter().map(|c| c.total()).sum()
    }

    /// Grand total excluding beacons.
    pub fn total_protocol(&self) -> u64 {
        self.grand_total() - self.total(MsgCategory::RoutingBeacon)
    }

    /// The busiest node's protocol transmit count (hotspot load).
    pub fn hotspot_total(&self) -> u64 {
        self.per_node.iter().map(|c| c.total_protocol()).max().unwrap_or(0)
    }

    /// The busiest node's transmit count in one category.
    pub fn hotspot(&self, cat: MsgCategory) -> u64 {
        self.per_node.iter().map(|c| c.get(cat)).max().unwrap_or(0)
    }

    pub fn lookups_issued(&self) -> usize {
        self.lookups.len()
    }

    pub fn lookup_successes(&self) -> usize {
        self.lookups
            .iter()
            .filter(|l| l.outcome == LookupOutcome::Success)
            .count()
    }

    /// Successes over issued lookups; 1.0 when none issued.
    pub fn lookup_success_rate(&self) -> f64 {
        if self.lookups.is_empty() {
            return 1.0;
        }
        self.lookup_successes() as f64 / self.lookups.len() as f64
    }

    /// Mean latency of successful lookups, seconds.
    pub fn mean_lookup_latency(&self) -> Option<f64> {
        let ok: Vec<f64> = self
            .lookups
            .iter()
            .filter(|l| l.outcome == LookupOutcome::Success)
            .map(|l| l.latency)
            .collect();
        if ok.is_empty() {
            None
        } else {
            Some(ok.iter().sum::<f64>() / ok.len() as f64)
        }
    }

    pub fn total_stored(&self) -> u64 {
        self.storage_per_node.iter().map(|&s| s as u64).sum()
    }

    pub fn max_stored(&self) -> u32 {
        self.storage_per_node.iter().copied().max().unwrap_or(0)
    }

    /// Category totals must sum to the grand total; holds by construction
    /// but asserted in tests as the conservation law.
    pub fn conservation_holds(&self) -> bool {
        let by_cat: u64 = MsgCategory::ALL.iter().map(|&c| self.total(c)).sum();
        by_cat == self.grand_total()
    }

    /// Stable textual dump; used to check byte-identical repeatability.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "duration {:.6}", self.duration);
        let _ = writeln!(s, "events {}", self.events_processed);
        for cat in MsgCategory::ALL {
            let _ = writeln!(s, "total.{} {}", cat.name(), self.total(cat));
        }
        let _ = writeln!(s, "hotspot {}", self.hotspot_total());
        for (kind, count) in &self.kind_counts {
            let _ = writeln!(s, "kind.{kind} {count}");
        }
        let _ = writeln!(s, "ttl_drops {}", self.ttl_drops);
        let _ = writeln!(s, "undeliverable {}", self.undeliverable_drops);
        let _ = writeln!(s, "dead_end {}", self.dead_end_drops);
        let _ = writeln!(s, "elections {}", self.elections_started);
        for (i, l) in self.lookups.iter().enumerate() {
            let _ = writeln!(
                s,
                "lookup {} at {:.6} latency {:.9} {} attempts {}",
                i,
                l.issued_at,
                l.latency,
                l.outcome.name(),
                l.attempts
            );
        }
        for (i, r) in self.inserts.iter().enumerate() {
            let _ = writeln!(
                s,
                "insert {} at {:.6} latency {:.9} acked {} attempts {}",
                i, r.issued_at, r.latency, r.acked, r.attempts
            );
        }
        for (i, c) in self.per_node.iter().enumerate() {
            let _ = writeln!(
                s,
                "node {} ins {} lkp {} per {} mob {} ele {} bcn {} stored {}",
                i,
                c.get(MsgCategory::Insertion),
                c.get(MsgCategory::Lookup),
                c.get(MsgCategory::Periodic),
                c.get(MsgCategory::MobilityUpdate),
                c.get(MsgCategory::Election),
                c.get(MsgCategory::RoutingBeacon),
                self.storage_per_node.get(i).copied().unwrap_or(0)
            );
        }
        let _ = writeln!(s, "walks {:?}", self.perimeter_walk_lengths);
        let _ = writeln!(s, "geocasts {:?}", self.geocast_deliveries);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservation_by_construction() {
        let mut sink = MetricsSink::new(3);
        sink.record_tx(NodeId(0), MsgCategory::Insertion, "put");
        sink.record_tx(NodeId(1), MsgCategory::Lookup, "get");
        sink.record_tx(NodeId(1), MsgCategory::Lookup, "get");
        sink.record_tx(NodeId(2), MsgCategory::RoutingBeacon, "beacon");
        let rep = sink.finalize(10.0, 4, vec![0, 1, 2]);
        assert!(rep.conservation_holds());
        assert_eq!(rep.grand_total(), 4);
        assert_eq!(rep.total_protocol(), 3);
        assert_eq!(rep.total(MsgCategory::Lookup), 2);
        assert_eq!(rep.hotspot(MsgCategory::Lookup), 2);
        assert_eq!(rep.kind_counts["get"], 2);
        assert_eq!(rep.total_stored(), 3);
    }

    #[test]
    fn success_rate_counts_only_success() {
        let mut sink = MetricsSink::new(1);
        for (outcome, lat) in [
            (LookupOutcome::Success, 0.01),
            (LookupOutcome::NotFound, 0.02),
            (LookupOutcome::Failure, 3.0),
            (LookupOutcome::Success, 0.03),
        ] {
            sink.lookups.push(LookupRecord {
                issued_at: 1.0,
                latency: lat,
                outcome,
                attempts: 1,
            });
        }
        let rep = sink.finalize(10.0, 0, vec![0]);
        assert_eq!(rep.lookup_successes(), 2);
        assert!((rep.lookup_success_rate() - 0.5).abs() < 1e-12);
        let lat = rep.mean_lookup_latency().unwrap();
        assert!((lat - 0.02).abs() < 1e-12);
    }

    #[test]
    fn text_dump_is_stable() {
        let mk = || {
            let mut sink = MetricsSink::new(2);
            sink.record_tx(NodeId(0), MsgCategory::Periodic, "check");
            sink.record_tx(NodeId(1), MsgCategory::Election, "elect");
            sink.finalize(5.0, 2, vec![1, 0])
        };
        let (a, b) = (mk(), mk());
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
    }
}
