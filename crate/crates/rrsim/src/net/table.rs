//! Beacon-maintained neighbor tables. Entries store the neighbor's
//! *advertised* (perceived) position; entries expire when no beacon is
//! heard for the expiration window.

use std::collections::BTreeMap;

use crate::world::geometry::Point;
use crate::world::NodeId;

#[derive(Clone, Copy, Debug)]
pub struct NbrEntry {
    pub pos: Point,
    pub last_heard: f64,
}

#[derive(Clone, Debug, Default)]
pub struct NeighborTable {
    entries: BTreeMap<NodeId, NbrEntry>,
}

impl NeighborTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record a beacon from `id` advertising `pos`.
    pub fn hear(&mut self, id: NodeId, pos: Point, now: f64) {
        self.entries.insert(id, NbrEntry { pos, last_heard: now });
    }

    pub fn forget(&mut self, id: NodeId) {
        self.entries.remove(&id);
    }

    /// Drop entries silent for longer than `expiry`.
    pub fn purge(&mut self, now: f64, expiry: f64) {
        self.entries.retain(|_, e| now - e.last_heard <= expiry);
    }

    pub fn get(&self, id: NodeId) -> Option<&NbrEntry> {
        self.entries.get(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fresh neighbors with their advertised positions, ascending id.
    /// A returned entry implies a beacon within `expiry`.
    pub fn snapshot(&self, now: f64, expiry: f64) -> Vec<(NodeId, Point)> {
        self.entries
            .iter()
            .filter(|(_, e)| now - e.last_heard <= expiry)
            .map(|(&id, e)| (id, e.pos))
            .collect()
    }
}
