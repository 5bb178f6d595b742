//! Greedy and face (perimeter) forwarding decisions.
//!
//! Both are pure functions of the forwarding node's local view: its own
//! perceived position, the destination point, the neighbor snapshot
//! (greedy) or planar neighbor subset (face), and the packet's carried
//! perimeter state.

use crate::world::geometry::{angle_of, ccw_delta, segment_intersection, Point};
use crate::world::NodeId;

/// Pick the neighbor closest to `dest`, provided it is strictly closer
/// than the forwarding node itself. `None` is a greedy dead end.
pub fn greedy_next(my_pos: Point, dest: Point, neighbors: &[(NodeId, Point)]) -> Option<NodeId> {
    let my_d2 = my_pos.dist2(dest);
    let mut best: Option<(NodeId, f64)> = None;
    for &(id, pos) in neighbors {
        let d2 = pos.dist2(dest);
        if d2 < my_d2 {
            match best {
                Some((_, bd2)) if bd2 <= d2 => {}
                _ => best = Some((id, d2)),
            }
        }
    }
    best.map(|(id, _)| id)
}

/// Perimeter-mode state carried in the packet, following the classic
/// greedy/face scheme: remember where perimeter mode was entered, the
/// first edge of the current face, and the best crossing of the
/// entry-to-destination segment seen so far.
#[derive(Clone, Debug, PartialEq)]
pub struct PerimeterState {
    /// Position of the node that entered perimeter mode (Lp).
    pub entry_pos: Point,
    /// Squared distance to dest of the best face crossing so far (Lf);
    /// initialized to |Lp - dest|^2.
    pub best_cross_d2: f64,
    /// First edge traversed on the current face; re-traversing it means
    /// the destination is unreachable from this face.
    pub first_edge: Option<(NodeId, NodeId)>,
    /// Whether the first edge has actually been transmitted on.
    pub first_edge_sent: bool,
}

impl PerimeterState {
    pub fn enter(entry_pos: Point, dest: Point) -> Self {
        PerimeterState {
            entry_pos,
            best_cross_d2: entry_pos.dist2(dest),
            first_edge: None,
            first_edge_sent: false,
        }
    }

    /// True when a node at `pos` is strictly closer to `dest` than the
    /// perimeter entry point: time to fall back to greedy mode.
    pub fn closer_than_entry(&self, pos: Point, dest: Point) -> bool {
        pos.dist2(dest) < self.entry_pos.dist2(dest)
    }
}

#[derive(Debug, PartialEq)]
pub enum FaceStep {
    Forward(NodeId),
    /// About to re-traverse the first edge of the current face: no
    /// progress is possible. The current node is the terminal (the home
    /// node for point destinations, the closest node for empty regions).
    Unreachable,
}

/// One face-routing step by the right-hand rule.
///
/// `prev` is the node the packet arrived from with its position as
/// recorded at send time (`None` on the first perimeter hop). The chosen
/// edge is the first one counterclockwise from the reference direction
/// (toward `prev`, or toward `dest` when entering). A chosen edge that
/// crosses the entry-to-destination segment strictly closer to the
/// destination than any previous crossing switches faces: the sweep skips
/// to the next edge counterclockwise and the current face's first edge is
/// reset.
pub fn face_next(
    me: NodeId,
    my_pos: Point,
    prev: Option<(NodeId, Point)>,
    planar: &[(NodeId, Point)],
    dest: Point,
    st: &mut PerimeterState,
) -> FaceStep {
    if planar.is_empty() {
        return FaceStep::Unreachable;
    }
    let ref_angle = match prev {
        Some((_, p)) => angle_of(my_pos, p),
        None => angle_of(my_pos, dest),
    };
    // Candidates ordered counterclockwise starting just past the reference
    // direction; the arrival direction itself sorts last (a dead-end spur
    // walks back only when nothing else exists).
    let mut cands: Vec<(f64, NodeId, Point)> = planar
        .iter()
        .map(|&(id, pos)| (ccw_delta(ref_angle, angle_of(my_pos, pos)), id, pos))
        .collect();
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut i = 0usize;
    let mut face_changed = false;
    while i < cands.len() {
        let (_, _, pos) = cands[i];
        match segment_intersection(my_pos, pos, st.entry_pos, dest) {
            Some(x) if x.dist2(dest) < st.best_cross_d2 => {
                // Crossing closer to dest: switch faces, continue the sweep.
                st.best_cross_d2 = x.dist2(dest);
                face_changed = true;
                i += 1;
            }
            _ => break,
        }
    }
    // A full wrap (every edge crossed closer, only possible at degree 1)
    // falls back to the first candidate: walk the edge we crossed.
    let (_, chosen, _) = cands[i % cands.len()];
    let edge = (me, chosen);

    if face_changed || st.first_edge.is_none() {
        st.first_edge = Some(edge);
        st.first_edge_sent = false;
    }
    if st.first_edge == Some(edge) {
        if st.first_edge_sent {
            return FaceStep::Unreachable;
        }
        st.first_edge_sent = true;
    }
    FaceStep::Forward(chosen)
}

/// Pure right-hand face traversal without a destination: the next edge
/// counterclockwise from the arrival direction. Used by geocast perimeter
/// probes that walk a face rather than route to a point.
pub fn pure_face_next(
    my_pos: Point,
    prev_pos: Point,
    planar: &[(NodeId, Point)],
) -> Option<NodeId> {
    if planar.is_empty() {
        return None;
    }
    let ref_angle = angle_of(my_pos, prev_pos);
    planar
        .iter()
        .map(|&(id, pos)| (ccw_delta(ref_angle, angle_of(my_pos, pos)), id))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: u32, x: f64, y: f64) -> (NodeId, Point) {
        (NodeId(id), Point::new(x, y))
    }

    #[test]
    fn greedy_picks_closest_strictly_closer() {
        let dest = Point::new(100.0, 0.0);
        let me = Point::new(0.0, 0.0);
        let nbrs = [n(1, 10.0, 0.0), n(2, 30.0, 5.0), n(3, -20.0, 0.0)];
        assert_eq!(greedy_next(me, dest, &nbrs), Some(NodeId(2)));
        // Neighbor exactly at dest is chosen.
        let nbrs = [n(1, 100.0, 0.0), n(2, 30.0, 5.0)];
        assert_eq!(greedy_next(me, dest, &nbrs), Some(NodeId(1)));
    }

    #[test]
    fn greedy_dead_end() {
        let dest = Point::new(100.0, 0.0);
        let me = Point::new(50.0, 0.0);
        // All neighbors farther from dest than me.
        let nbrs = [n(1, 10.0, 0.0), n(2, 40.0, 40.0)];
        assert_eq!(greedy_next(me, dest, &nbrs), None);
        assert_eq!(greedy_next(me, dest, &[]), None);
    }

    #[test]
    fn right_hand_first_hop_is_first_ccw_from_dest_line() {
        // Me at origin, dest to the east. Neighbors to the north and
        // south: counterclockwise from east, north (90 degrees) comes
        // before south (270 degrees).
        let me_pos = Point::new(0.0, 0.0);
        let dest = Point::new(100.0, 0.0);
        let planar = [n(1, 0.0, 10.0), n(2, 0.0, -10.0)];
        let mut st = PerimeterState::enter(me_pos, dest);
        match face_next(NodeId(0), me_pos, None, &planar, dest, &mut st) {
            FaceStep::Forward(id) => assert_eq!(id, NodeId(1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn right_hand_continues_ccw_from_arrival() {
        // Packet arrived from the west; neighbors north, east, south.
        // First counterclockwise from west is south (delta 90 degrees
        // going ccw from 180: 270).
        let me_pos = Point::new(0.0, 0.0);
        let dest = Point::new(50.0, 50.0);
        let prev = Some((NodeId(9), Point::new(-10.0, 0.0)));
        let planar = [n(1, 0.0, 10.0), n(2, 10.0, 0.0), n(3, 0.0, -10.0)];
        let mut st = PerimeterState::enter(Point::new(-10.0, 0.0), dest);
        st.first_edge = Some((NodeId(9), NodeId(0)));
        st.first_edge_sent = true;
        match face_next(NodeId(0), me_pos, prev, &planar, dest, &mut st) {
            FaceStep::Forward(id) => assert_eq!(id, NodeId(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dead_end_spur_walks_back() {
        // Sole neighbor is where we came from: walk back.
        let me_pos = Point::new(0.0, 0.0);
        let dest = Point::new(100.0, 0.0);
        let prev = Some((NodeId(7), Point::new(-10.0, 0.0)));
        let planar = [n(7, -10.0, 0.0)];
        let mut st = PerimeterState::enter(Point::new(-10.0, 0.0), dest);
        st.first_edge = Some((NodeId(7), NodeId(0)));
        st.first_edge_sent = true;
        match face_next(NodeId(0), me_pos, prev, &planar, dest, &mut st) {
            FaceStep::Forward(id) => assert_eq!(id, NodeId(7)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_edge_retraversal_is_unreachable() {
        let me_pos = Point::new(0.0, 0.0);
        let dest = Point::new(100.0, 0.0);
        let planar = [n(1, 0.0, 10.0)];
        let mut st = PerimeterState::enter(me_pos, dest);
        // First call chooses (0,1) and marks it sent.
        match face_next(NodeId(0), me_pos, None, &planar, dest, &mut st) {
            FaceStep::Forward(id) => assert_eq!(id, NodeId(1)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(st.first_edge, Some((NodeId(0), NodeId(1))));
        assert!(st.first_edge_sent);
        // Packet looped around and is about to traverse (0,1) again.
        let prev = Some((NodeId(1), Point::new(0.0, 10.0)));
        // Simulate return with only that edge available.
        match face_next(NodeId(0), me_pos, prev, &planar, dest, &mut st) {
            FaceStep::Unreachable => {}
            other => panic!("expected unreachable, got {other:?}"),
        }
    }

    #[test]
    fn revert_condition() {
        let dest = Point::new(100.0, 0.0);
        let st = PerimeterState::enter(Point::new(0.0, 0.0), dest);
        assert!(st.closer_than_entry(Point::new(10.0, 0.0), dest));
        assert!(!st.closer_than_entry(Point::new(-5.0, 0.0), dest));
        assert!(!st.closer_than_entry(Point::new(0.0, 0.0), dest));
    }

    #[test]
    fn pure_face_walk_on_square() {
        // Square 0-1-2-3; walking right-hand starting 0 -> 1 goes around
        // the inner face: at 1 (arrived from 0), first ccw from the
        // direction of 0 is 2.
        let p = [
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(0.0, 10.0),
        ];
        // Planar neighbors at node 1: 0 and 2.
        let planar1 = [n(0, 0.0, 0.0), n(2, 10.0, 10.0)];
        assert_eq!(pure_face_next(p[1], p[0], &planar1), Some(NodeId(2)));
        // At node 2 (arrived from 1): neighbors 1 and 3 -> pick 3.
        let planar2 = [n(1, 10.0, 0.0), n(3, 0.0, 10.0)];
        assert_eq!(pure_face_next(p[2], p[1], &planar2), Some(NodeId(3)));
    }
}
