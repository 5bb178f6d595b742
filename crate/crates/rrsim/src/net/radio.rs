//! Unit-disk radio over TRUE positions, with a bucket grid for range
//! queries. Connectivity is physical; what nodes *believe* (perceived
//! positions) never changes who can hear whom.

use std::collections::HashMap;

use crate::world::geometry::Point;
use crate::world::NodeId;

/// Spatial hash with cell size = radio range: all nodes within range of a
/// point live in the 3x3 cell block around it.
pub struct SpatialIndex {
    range: f64,
    cell: f64,
    buckets: HashMap<(i32, i32), Vec<NodeId>>,
    /// Current cell of each node; `None` once removed (dead).
    locs: Vec<Option<(i32, i32)>>,
}

impl SpatialIndex {
    pub fn new(range: f64, positions: &[Point]) -> Self {
        assert!(range > 0.0);
        let mut idx = SpatialIndex {
            range,
            cell: range,
            buckets: HashMap::new(),
            locs: vec![None; positions.len()],
        };
        for (i, p) in positions.iter().enumerate() {
            idx.insert(NodeId(i as u32), *p);
        }
        idx
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    fn key(&self, p: Point) -> (i32, i32) {
        ((p.x / self.cell).floor() as i32, (p.y / self.cell).floor() as i32)
    }

    fn insert(&mut self, id: NodeId, p: Point) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
        self.locs[id.idx()] = Some(k);
    }

    /// Remove a node entirely (death).
    pub fn remove(&mut self, id: NodeId) {
        if let Some(k) = self.locs[id.idx()].take() {
            if let Some(v) = self.buckets.get_mut(&k) {
                v.retain(|&x| x != id);
            }
        }
    }

    /// Move a node to a new position.
    pub fn update(&mut self, id: NodeId, p: Point) {
        let new_k = self.key(p);
        match self.locs[id.idx()] {
            Some(old_k) if old_k == new_k => {}
            Some(old_k) => {
                if let Some(v) = self.buckets.get_mut(&old_k) {
                    v.retain(|&x| x != id);
                }
                self.buckets.entry(new_k).or_default().push(id);
                self.locs[id.idx()] = Some(new_k);
            }
            None => self.insert(id, p),
        }
    }

    /// All live nodes within `range` of `p` (by true positions), excluding
    /// `exclude`, ascending id. Deterministic.
    pub fn within_range(&self, p: Point, exclude: NodeId, positions: &[Point]) -> Vec<NodeId> {
        let (cx, cy) = self.key(p);
        let r2 = self.range * self.range;
        let mut out = Vec::new();
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(v) = self.buckets.get(&(cx + dx, cy + dy)) {
                    for &id in v {
                        if id != exclude && positions[id.idx()].dist2(p) <= r2 {
                            out.push(id);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
