//! Location-error injection: nodes route using a *perceived* position that
//! may differ from the true one, while the radio itself works on true
//! positions.

use super::geometry::{Bounds, Point};
use crate::sim::rng::RngStream;

/// Draw a perceived position uniformly from the disk of radius
/// `err_fraction * radio_range` around the true position, clamped into the
/// area. Drawn once per node: the offset models a fixed positioning bias,
/// not per-packet noise. Disk-uniform means the mean error is 2/3 of the
/// radius.
pub fn perceived_position(
    true_pos: Point,
    err_fraction: f64,
    radio_range: f64,
    bounds: Bounds,
    rng: &mut RngStream,
) -> Point {
    assert!(err_fraction >= 0.0);
    if err_fraction == 0.0 {
        return true_pos;
    }
    let radius = err_fraction * radio_range;
    // Uniform over a disk: radius scales with sqrt(u).
    let r = radius * rng.uniform01().sqrt();
    let theta = rng.uniform(0.0, std::f64::consts::TAU);
    let p = Point::new(true_pos.x + r * theta.cos(), true_pos.y + r * theta.sin());
    bounds.clamp(p)
}
