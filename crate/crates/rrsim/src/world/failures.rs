//! Fail-stop failure injection.

use super::NodeId;
use crate::sim::rng::RngStream;

/// Pick which nodes die and when. Each node independently fails with
/// probability `fraction`; the death time is uniform over the run.
/// Returned sorted by time then id, ready for scheduling.
pub fn inject_failures(
    n: usize,
    fraction: f64,
    duration: f64,
    rng: &mut RngStream,
) -> Vec<(f64, NodeId)> {
    assert!((0.0..=1.0).contains(&fraction), "fraction must be in [0,1]");
    let mut out = Vec::new();
    for i in 0..n {
        if rng.chance(fraction) {
            let t = rng.uniform(0.0, duration);
            out.push((t, NodeId(i as u32)));
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_and_range() {
        let mut rng = RngStream::new(21, "failures");
        let n = 50_000;
        let out = inject_failures(n, 0.3, 200.0, &mut rng);
        let frac = out.len() as f64 / n as f64;
        assert!((0.28..=0.32).contains(&frac), "failed fraction {frac}");
        for (t, id) in &out {
            assert!((0.0..200.0).contains(t));
            assert!(id.idx() < n);
        }
        // Sorted by time.
        for w in out.windows(2) {
            assert!(w[0].0 <= w[1].0);
        }
    }

    #[test]
    fn zero_fraction_is_empty() {
        let mut rng = RngStream::new(1, "failures");
        assert!(inject_failures(1000, 0.0, 200.0, &mut rng).is_empty());
    }

    #[test]
    fn times_spread_over_run() {
        let mut rng = RngStream::new(2, "failures");
        let out = inject_failures(20_000, 1.0, 100.0, &mut rng);
        let early = out.iter().filter(|(t, _)| *t < 50.0).count();
        let frac = early as f64 / out.len() as f64;
        assert!((0.47..=0.53).contains(&frac), "first-half fraction {frac}");
    }
}
