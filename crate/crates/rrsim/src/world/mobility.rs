//! Random-waypoint mobility.
//!
//! Each mobile node repeatedly picks a uniform waypoint in the area, moves
//! toward it in a straight line at a speed drawn uniformly from
//! (0.01 * max_speed, max_speed], pauses, then repeats. The well-known
//! consequence: node density under this model is biased toward the center
//! of the area.

use super::geometry::{Bounds, Point};
use crate::sim::rng::RngStream;

#[derive(Clone, Debug)]
pub struct RwpParams {
    pub max_speed: f64,
    pub pause: f64,
}

#[derive(Clone, Debug)]
pub struct RwpState {
    waypoint: Point,
    speed: f64,
    /// Simulation time until which the node is paused at its waypoint.
    pause_until: f64,
}

impl RwpState {
    /// Start a leg immediately from `pos`.
    pub fn init(pos: Point, bounds: Bounds, params: &RwpParams, rng: &mut RngStream) -> Self {
        let mut st = RwpState {
            waypoint: pos,
            speed: 0.0,
            pause_until: 0.0,
        };
        st.new_leg(bounds, params, rng, 0.0, 0.0);
        st
    }

    fn new_leg(&mut self, bounds: Bounds, params: &RwpParams, rng: &mut RngStream, now: f64, pause: f64) {
        self.waypoint = Point::new(rng.uniform(0.0, bounds.width), rng.uniform(0.0, bounds.height));
        // Uniform in (0.01 * max, max]: avoids the harmonic-mean stall of
        // speeds arbitrarily close to zero.
        let lo = 0.01 * params.max_speed;
        self.speed = params.max_speed - (params.max_speed - lo) * rng.uniform01();
        self.pause_until = now + pause;
    }

    /// Advance `pos` by `dt` seconds of movement. Draws from `rng` only
    /// when a waypoint is reached.
    pub fn step(
        &mut self,
        pos: &mut Point,
        bounds: Bounds,
        params: &RwpParams,
        rng: &mut RngStream,
        now: f64,
        dt: f64,
    ) {
        if params.max_speed <= 0.0 {
            return;
        }
        let mut remaining = dt;
        let mut t = now;
        while remaining > 1e-12 {
            if t < self.pause_until {
                let wait = (self.pause_until - t).min(remaining);
                t += wait;
                remaining -= wait;
                continue;
            }
            let to_go = pos.dist(self.waypoint);
            let step = self.speed * remaining;
            if step < to_go {
                let f = step / to_go;
                pos.x += (self.waypoint.x - pos.x) * f;
                pos.y += (self.waypoint.y - pos.y) * f;
                remaining = 0.0;
            } else {
                *pos = self.waypoint;
                let used = if self.speed > 0.0 { to_go / self.speed } else { remaining };
                t += used;
                remaining -= used;
                self.new_leg(bounds, params, rng, t, params.pause);
            }
        }
        *pos = bounds.clamp(*pos);
    }
}
