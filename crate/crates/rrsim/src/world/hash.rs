//! Deterministic hashing: the 64-bit mixer shared by key-to-region /
//! key-to-point mapping and the seeded random streams.

use super::geometry::{Bounds, Point};
use super::grid::{RegionGrid, RegionId};
use super::KeyId;

/// Finalizing 64-bit mixer. Bit-exact everywhere: only wrapping integer ops.
#[inline]
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a byte string into a 64-bit value, seeded. Used to derive named
/// random streams and well-known keys.
pub fn hash_label(seed: u64, label: &str) -> u64 {
    let mut h = seed;
    for &b in label.as_bytes() {
        h = mix64(h ^ b as u64);
    }
    mix64(h)
}

/// Map a key to one of `regions` region ids. `hash_index` selects among
/// alternative mappings of the same key (used when a mapping must be
/// rejected and retried).
pub fn key_to_region(key: KeyId, regions: u32, hash_index: u32) -> RegionId {
    assert!(regions > 0, "need at least one region");
    let h = mix64(key.0 ^ mix64(hash_index as u64));
    RegionId((h % regions as u64) as u32)
}

/// Map a key to a point in the deployment area. With `interior` set the
/// coordinates are rescaled into the central portion of the area, leaving
/// a 10% margin on every side.
pub fn key_to_point(key: KeyId, bounds: Bounds, hash_index: u32, interior: bool) -> Point {
    let h0 = mix64(key.0 ^ mix64(hash_index as u64));
    let h1 = mix64(h0);
    let mut u = unit_from_bits(h0);
    let mut v = unit_from_bits(h1);
    if interior {
        u = 0.1 + 0.8 * u;
        v = 0.1 + 0.8 * v;
    }
    Point::new(u * bounds.width, v * bounds.height)
}

/// Same as [`key_to_point`] but snapped to be usable as a routing target:
/// clamped strictly inside the bounds.
pub fn key_to_point_clamped(key: KeyId, bounds: Bounds, hash_index: u32, interior: bool) -> Point {
    bounds.clamp(key_to_point(key, bounds, hash_index, interior))
}

/// Map a key straight to the center of its region, the routing target for
/// region rendezvous.
pub fn key_to_region_center(key: KeyId, grid: &RegionGrid, hash_index: u32) -> (RegionId, Point) {
    let r = key_to_region(key, grid.regions(), hash_index);
    (r, grid.center(r))
}

/// Top 53 bits of `x` as a double in [0, 1).
#[inline]
pub fn unit_from_bits(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Golden values computed once from the mixer definition above and
    // frozen; they also match the widely published reference outputs for
    // this finalizer (first outputs of the add-mix sequence from state 0).
    #[test]
    fn mixer_golden_values() {
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(mix64(1), 0x910A_2DEC_8902_5CC1);
        assert_eq!(mix64(0xDEAD_BEEF), 0x4ADF_B90F_68C9_EB9B);
    }

    #[test]
    fn mixer_has_no_small_fixed_points() {
        for x in 1..=100u64 {
            assert_ne!(mix64(x), x, "fixed point at {x}");
        }
    }

    #[test]
    fn label_hash_separates_streams() {
        let a = hash_label(42, "workload");
        let b = hash_label(42, "mobility");
        let c = hash_label(43, "workload");
        assert_ne!(a, b);
        assert_ne!(a, c);
        // Stable across calls.
        assert_eq!(a, hash_label(42, "workload"));
    }

    #[test]
    fn key_to_region_in_range_and_index_sensitive() {
        for k in 0..1000u64 {
            let r = key_to_region(KeyId(mix64(k)), 16, 0);
            assert!(r.0 < 16);
        }
        // Different hash indexes give a different region for most keys.
        let mut moved = 0;
        for k in 0..1000u64 {
            let key = KeyId(mix64(k));
            if key_to_region(key, 16, 0) != key_to_region(key, 16, 1) {
                moved += 1;
            }
        }
        assert!(moved > 800, "only {moved}/1000 keys moved between hash indexes");
    }

    #[test]
    fn key_to_point_interior_margin() {
        let b = Bounds::square(320.0);
        for k in 0..2000u64 {
            let p = key_to_point(KeyId(mix64(k)), b, 0, true);
            assert!(p.x >= 32.0 && p.x <= 288.0, "x {} outside interior", p.x);
            assert!(p.y >= 32.0 && p.y <= 288.0, "y {} outside interior", p.y);
        }
        // Without the flag the full area is used eventually.
        let mut outside_interior = 0;
        for k in 0..2000u64 {
            let p = key_to_point(KeyId(mix64(k)), b, 0, false);
            assert!(b.contains(p) || p.x == b.width || p.y == b.height);
            if p.x < 32.0 || p.x > 288.0 || p.y < 32.0 || p.y > 288.0 {
                outside_interior += 1;
            }
        }
        assert!(outside_interior > 600, "expected ~36% outside, got {outside_interior}");
    }

    #[test]
    fn unit_range() {
        for x in [0u64, 1, u64::MAX, 0x8000_0000_0000_0000] {
            let u = unit_from_bits(x);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
