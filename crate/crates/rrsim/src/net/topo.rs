//! Static topology snapshots: the same greedy/face/geocast decision
//! functions as the live engine, run to completion over a frozen global
//! view. Used three ways:
//!
//! * oracle tests compare route outcomes against exhaustive search / BFS;
//! * the high-level (ideal) mode preselects hash indexes whose home
//!   perimeter is short enough, which requires running routing offline;
//! * handy for debugging topologies in isolation.

use std::collections::BTreeSet;

use super::planar::gabriel_neighbors;
use super::routing::{face_next, greedy_next, pure_face_next, FaceStep, PerimeterState};
use crate::world::geometry::Point;
use crate::world::grid::{RegionGrid, RegionId};
use crate::world::NodeId;

/// Frozen global view: true positions define connectivity, advertised
/// (perceived) positions drive every routing decision.
pub struct TopologyView {
    pub advertised: Vec<Point>,
    pub range: f64,
    nbrs: Vec<Vec<(NodeId, Point)>>,
    planar: Vec<Vec<(NodeId, Point)>>,
}

/// Outcome of routing toward a point destination.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRoute {
    /// Node that declared the destination unreachable (the closest-node /
    /// home-node condition); `None` when the TTL ran out first.
    pub terminal: Option<NodeId>,
    /// Nodes visited, starting with the source.
    pub path: Vec<NodeId>,
}

/// Outcome of routing toward a region.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionRoute {
    /// First in-region node reached (the flooder) plus the path to it.
    Flooder(NodeId, Vec<NodeId>),
    /// No in-region node on the route; the closest-node declaration point.
    Undeliverable(NodeId, Vec<NodeId>),
    /// TTL exhausted.
    TtlExpired,
}

impl TopologyView {
    /// Build from separate true/advertised positions.
    pub fn new(true_positions: &[Point], advertised: Vec<Point>, range: f64) -> Self {
        assert_eq!(true_positions.len(), advertised.len());
        let n = true_positions.len();
        let r2 = range * range;
        let mut nbrs: Vec<Vec<(NodeId, Point)>> = Vec::with_capacity(n);
        for i in 0..n {
            let row: Vec<(NodeId, Point)> = (0..n)
                .filter(|&j| j != i && true_positions[i].dist2(true_positions[j]) <= r2)
                .map(|j| (NodeId(j as u32), advertised[j]))
                .collect();
            nbrs.push(row);
        }
        let planar = (0..n)
            .map(|i| gabriel_neighbors(advertised[i], &nbrs[i]))
            .collect();
        TopologyView {
            advertised,
            range,
            nbrs,
            planar,
        }
    }

    /// Accurate positions: advertised = true.
    pub fn accurate(positions: &[Point], range: f64) -> Self {
        TopologyView::new(positions, positions.to_vec(), range)
    }

    pub fn len(&self) -> usize {
        self.advertised.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advertised.is_empty()
    }

    pub fn neighbors(&self, i: NodeId) -> &[(NodeId, Point)] {
        &self.nbrs[i.idx()]
    }

    pub fn planar_neighbors(&self, i: NodeId) -> &[(NodeId, Point)] {
        &self.planar[i.idx()]
    }

    /// Greedy + face routing toward a point until some node declares it
    /// unreachable (there is no node AT a random point, so this is how
    /// point routing always ends: at the home/closest node).
    pub fn route_to_point(&self, from: NodeId, dest: Point, ttl: u32) -> PointRoute {
        self.drive(from, dest, ttl, |_| false)
    }

    /// Greedy + face routing toward the advertised position of `target`,
    /// delivered when the packet reaches it.
    pub fn route_to_node(&self, from: NodeId, target: NodeId, ttl: u32) -> PointRoute {
        self.drive(from, self.advertised[target.idx()], ttl, |x| x == target)
    }

    /// Route toward a region's center until any node inside the region
    /// takes delivery (the flooder).
    pub fn route_to_region(&self, from: NodeId, grid: &RegionGrid, region: RegionId, ttl: u32) -> RegionRoute {
        let dest = grid.center(region);
        let route = self.drive(from, dest, ttl, |x| {
            grid.region_of_clamped(self.advertised[x.idx()]) == region
        });
        match route.terminal {
            Some(t) if grid.region_of_clamped(self.advertised[t.idx()]) == region => {
                RegionRoute::Flooder(t, route.path)
            }
            Some(t) => RegionRoute::Undeliverable(t, route.path),
            None => RegionRoute::TtlExpired,
        }
    }

    /// Shared greedy/perimeter driver. `deliver` decides whether a node
    /// takes local delivery; otherwise the packet runs until unreachable.
    fn drive(
        &self,
        from: NodeId,
        dest: Point,
        ttl: u32,
        deliver: impl Fn(NodeId) -> bool,
    ) -> PointRoute {
        let mut x = from;
        let mut path = vec![from];
        let mut prev: Option<(NodeId, Point)> = None;
        let mut perim: Option<PerimeterState> = None;
        let mut hops = 0;
        loop {
            if deliver(x) {
                return PointRoute {
                    terminal: Some(x),
                    path,
                };
            }
            let my_pos = self.advertised[x.idx()];
            // Revert to greedy once strictly closer than the perimeter
            // entry point.
            if let Some(st) = &perim {
                if st.closer_than_entry(my_pos, dest) {
                    perim = None;
                }
            }
            let next = if perim.is_none() {
                match greedy_next(my_pos, dest, &self.nbrs[x.idx()]) {
                    Some(n) => Some(n),
                    None => {
                        perim = Some(PerimeterState::enter(my_pos, dest));
                        prev = None;
                        None
                    }
                }
            } else {
                None
            };
            let next = match next {
                Some(n) => n,
                None => {
                    let st = perim.as_mut().expect("in perimeter mode");
                    match face_next(x, my_pos, prev, &self.planar[x.idx()], dest, st) {
                        FaceStep::Forward(n) => n,
                        FaceStep::Unreachable => {
                            return PointRoute {
                                terminal: Some(x),
                                path,
                            }
                        }
                    }
                }
            };
            hops += 1;
            if hops > ttl {
                return PointRoute {
                    terminal: None,
                    path,
                };
            }
            prev = Some((x, my_pos));
            path.push(next);
            x = next;
        }
    }

    /// Face walk around a point destination starting at its home node:
    /// full perimeter machinery without the greedy revert. Returns the
    /// ordered visit list (home first) and the terminal node, or `None` on
    /// TTL exhaustion.
    pub fn home_perimeter_walk(&self, home: NodeId, dest: Point, ttl: u32) -> Option<Vec<NodeId>> {
        let mut visited = vec![home];
        let mut x = home;
        let mut prev: Option<(NodeId, Point)> = None;
        let mut st = PerimeterState::enter(self.advertised[home.idx()], dest);
        let mut hops = 0;
        loop {
            let my_pos = self.advertised[x.idx()];
            match face_next(x, my_pos, prev, &self.planar[x.idx()], dest, &mut st) {
                FaceStep::Forward(n) => {
                    hops += 1;
                    if hops > ttl {
                        return None;
                    }
                    prev = Some((x, my_pos));
                    if !visited.contains(&n) {
                        visited.push(n);
                    }
                    x = n;
                }
                FaceStep::Unreachable => return Some(visited),
            }
        }
    }

    /// Home node for a point destination from a given source, or `None`
    /// when the TTL ran out.
    pub fn home_node(&self, from: NodeId, dest: Point, ttl: u32) -> Option<NodeId> {
        self.route_to_point(from, dest, ttl).terminal
    }

    /// Exhaustive-search oracle: index of the node whose advertised
    /// position is closest to `p`.
    pub fn argmin_dist(&self, p: Point) -> NodeId {
        let mut best = NodeId(0);
        let mut best_d2 = f64::INFINITY;
        for (i, q) in self.advertised.iter().enumerate() {
            let d2 = q.dist2(p);
            if d2 < best_d2 {
                best_d2 = d2;
                best = NodeId(i as u32);
            }
        }
        best
    }

    /// BFS over the radio graph from `from`; returns visited ids.
    pub fn bfs_from(&self, from: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut queue = std::collections::VecDeque::new();
        seen.insert(from);
        queue.push_back(from);
        while let Some(x) = queue.pop_front() {
            for &(n, _) in &self.nbrs[x.idx()] {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        !self.is_empty() && self.bfs_from(NodeId(0)).len() == self.len()
    }

    /// BFS restricted to in-region nodes, from a starting member: who a
    /// plain region flood reaches.
    pub fn region_flood_receivers(
        &self,
        grid: &RegionGrid,
        region: RegionId,
        start: NodeId,
    ) -> BTreeSet<NodeId> {
        let in_region =
            |x: NodeId| grid.region_of_clamped(self.advertised[x.idx()]) == region;
        let mut seen = BTreeSet::new();
        if !in_region(start) {
            return seen;
        }
        let mut queue = std::collections::VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        while let Some(x) = queue.pop_front() {
            for &(n, _) in &self.nbrs[x.idx()] {
                if in_region(n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// Flood-plus-face geocast: the receiver set of region flooding
    /// augmented with border-node perimeter probes that re-inject the
    /// flood when they re-enter the region at an unseen node. Probes give
    /// up after `budget` hops outside the region or when about to
    /// re-traverse their starting edge.
    pub fn gfpg_receivers(
        &self,
        grid: &RegionGrid,
        region: RegionId,
        start: NodeId,
        budget: u32,
    ) -> BTreeSet<NodeId> {
        let in_region =
            |x: NodeId| grid.region_of_clamped(self.advertised[x.idx()]) == region;
        let mut covered = self.region_flood_receivers(grid, region, start);
        if covered.is_empty() {
            return covered;
        }
        // Border nodes whose probes have been launched already.
        let mut probed: BTreeSet<NodeId> = BTreeSet::new();
        loop {
            // Deterministic: lowest unprobed covered border node first.
            let next_border = covered
                .iter()
                .copied()
                .find(|&x| !probed.contains(&x) && self.planar[x.idx()].iter().any(|&(v, _)| !in_region(v)));
            let Some(b) = next_border else { break };
            probed.insert(b);
            let outside: Vec<NodeId> = self.planar[b.idx()]
                .iter()
                .filter(|&&(v, _)| !in_region(v))
                .map(|&(v, _)| v)
                .collect();
            for first in outside {
                // Walk the face starting along edge (b, first). The walk
                // ends at the first in-region node (the border node itself
                // included: it is already covered) or when the hop budget
                // outside the region runs out.
                let mut x = first;
                let mut prev = b;
                let mut hops_outside = 1u32;
                loop {
                    if in_region(x) {
                        // Re-entered: flood from here if unseen.
                        if !covered.contains(&x) {
                            let more = self.region_flood_receivers(grid, region, x);
                            covered.extend(more);
                        }
                        break;
                    }
                    if hops_outside >= budget {
                        break;
                    }
                    let Some(n) = pure_face_next(
                        self.advertised[x.idx()],
                        self.advertised[prev.idx()],
                        &self.planar[x.idx()],
                    ) else {
                        break;
                    };
                    prev = x;
                    x = n;
                    hops_outside += 1;
                }
            }
        }
        covered
    }
}
