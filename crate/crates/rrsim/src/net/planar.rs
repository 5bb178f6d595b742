//! Gabriel-graph planarization, computed locally per node from its
//! neighbor table.

use crate::world::geometry::Point;
use crate::world::NodeId;

/// Keep edge (me, v) iff no witness w lies strictly inside the disk whose
/// diameter is the segment (me, v). Witnesses are drawn from `neighbors`
/// itself: any node inside that disk is within range of both endpoints, so
/// the local table suffices on accurate positions.
///
/// Input order is preserved (callers pass id-sorted snapshots).
pub fn gabriel_neighbors(my_pos: Point, neighbors: &[(NodeId, Point)]) -> Vec<(NodeId, Point)> {
    neighbors
        .iter()
        .filter(|&&(v, vp)| {
            let mid = my_pos.midpoint(vp);
            let rad2 = my_pos.dist2(vp) / 4.0;
            !neighbors
                .iter()
                .any(|&(w, wp)| w != v && wp.dist2(mid) < rad2)
        })
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: u32, x: f64, y: f64) -> (NodeId, Point) {
        (NodeId(id), Point::new(x, y))
    }

    #[test]
    fn collinear_middle_witness_removes_long_edge() {
        // Nodes at 0, 10, 20 on a line: the middle node witnesses the
        // 0-to-20 edge away; short edges survive.
        let me = Point::new(0.0, 0.0);
        let nbrs = [n(1, 10.0, 0.0), n(2, 20.0, 0.0)];
        let gg = gabriel_neighbors(me, &nbrs);
        assert_eq!(gg, vec![n(1, 10.0, 0.0)]);
    }

    #[test]
    fn no_witness_keeps_edge() {
        let me = Point::new(0.0, 0.0);
        // A witness outside the diameter disk does not remove the edge.
        let nbrs = [n(1, 10.0, 0.0), n(2, 5.0, 6.0)];
        let gg = gabriel_neighbors(me, &nbrs);
        assert_eq!(gg.len(), 2);
    }

    #[test]
    fn witness_on_circle_does_not_remove() {
        // Strictly-inside rule: a node exactly on the disk boundary is not
        // a witness.
        let me = Point::new(0.0, 0.0);
        let nbrs = [n(1, 10.0, 0.0), n(2, 5.0, 5.0)];
        let gg = gabriel_neighbors(me, &nbrs);
        assert_eq!(gg.len(), 2);
    }

    #[test]
    fn symmetric_on_accurate_positions() {
        // The disk test is symmetric in the endpoints, so u keeps v iff v
        // keeps u when both see the same positions.
        let mut rng = crate::sim::rng::RngStream::new(17, "gg");
        let pts: Vec<Point> = (0..60)
            .map(|_| Point::new(rng.uniform(0.0, 250.0), rng.uniform(0.0, 250.0)))
            .collect();
        let range2 = 80.0f64 * 80.0;
        let nbrs_of = |i: usize| -> Vec<(NodeId, Point)> {
            (0..pts.len())
                .filter(|&j| j != i && pts[i].dist2(pts[j]) <= range2)
                .map(|j| (NodeId(j as u32), pts[j]))
                .collect()
        };
        for i in 0..pts.len() {
            let gi = gabriel_neighbors(pts[i], &nbrs_of(i));
            for &(j, _) in &gi {
                let gj = gabriel_neighbors(pts[j.idx()], &nbrs_of(j.idx()));
                assert!(
                    gj.iter().any(|&(k, _)| k.idx() == i),
                    "edge {i}-{j} kept by {i} but dropped by {j}"
                );
            }
        }
    }
}
