//! Node placement and deployment-area sizing.

use super::geometry::{Bounds, Point};
use crate::sim::rng::RngStream;

/// Deployment density used throughout the experiments: one node per this
/// many square meters.
pub const DEFAULT_AREA_PER_NODE: f64 = 1024.0;

/// Square deployment area holding `n` nodes at the given density.
/// At the default density, 100 nodes get a 320 m x 320 m field.
pub fn bounds_for_density(n: usize, area_per_node: f64) -> Bounds {
    assert!(n > 0 && area_per_node > 0.0);
    let side = (n as f64 * area_per_node).sqrt();
    Bounds::square(side)
}

/// Place `n` nodes independently and uniformly in the area.
pub fn place_uniform(n: usize, bounds: Bounds, rng: &mut RngStream) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let x = rng.uniform(0.0, bounds.width);
            let y = rng.uniform(0.0, bounds.height);
            Point::new(x, y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::grid::RegionGrid;

    #[test]
    fn density_sizing() {
        let b = bounds_for_density(100, DEFAULT_AREA_PER_NODE);
        assert!((b.width - 320.0).abs() < 1e-9);
        assert!((b.height - 320.0).abs() < 1e-9);
        let b = bounds_for_density(1000, DEFAULT_AREA_PER_NODE);
        assert!((b.width - 1011.929).abs() < 1e-3);
    }

    #[test]
    fn placement_inside_bounds() {
        let b = bounds_for_density(100, DEFAULT_AREA_PER_NODE);
        let mut rng = RngStream::new(1, "topology");
        for p in place_uniform(1000, b, &mut rng) {
            assert!(b.contains(p));
        }
    }

    // Uniformity: across many draws each of 16 regions holds ~1/16 of
    // the nodes.
    #[test]
    fn placement_region_balance() {
        let b = Bounds::square(320.0);
        let g = RegionGrid::new(b, 4, 4);
        let mut rng = RngStream::new(7, "topology");
        let mut counts = [0u32; 16];
        let total = 160_000;
        for p in place_uniform(total, b, &mut rng) {
            counts[g.region_of(p).unwrap().idx()] += 1;
        }
        let expect = total as f64 / 16.0;
        for (i, &c) in counts.iter().enumerate() {
            let rel = (c as f64 - expect).abs() / expect;
            assert!(rel < 0.03, "region {i} holds {c}, {:.1}% off uniform", rel * 100.0);
        }
    }

    // Mean nearest-neighbor distance for a Poisson-like uniform scatter is
    // ~0.5 / sqrt(density); checks the density/bounds wiring end to end.
    #[test]
    fn nearest_neighbor_distance_matches_density() {
        let n = 2000;
        let b = bounds_for_density(n, DEFAULT_AREA_PER_NODE);
        let mut rng = RngStream::new(3, "topology");
        let pts = place_uniform(n, b, &mut rng);
        let mut sum = 0.0;
        for (i, p) in pts.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, q) in pts.iter().enumerate() {
                if i != j {
                    best = best.min(p.dist2(*q));
                }
            }
            sum += best.sqrt();
        }
        let mean = sum / n as f64;
        let expect = 0.5 * DEFAULT_AREA_PER_NODE.sqrt(); // 0.5 / sqrt(density)
        let rel = (mean - expect).abs() / expect;
        // Edge effects push the empirical mean slightly high; 10% margin.
        assert!(rel < 0.10, "mean nn distance {mean:.2}, expected ~{expect:.2}");
    }
}
