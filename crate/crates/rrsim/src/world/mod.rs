//! World model: geometry, region grid, key hashing, node placement,
//! mobility, failures, and perceived-position error.

pub mod error_model;
pub mod failures;
pub mod geometry;
pub mod grid;
pub mod hash;
pub mod mobility;
pub mod place;

pub use geometry::{Bounds, Point};
pub use grid::{RegionGrid, RegionId};

/// Stable identifier of a node; nodes are numbered `0..n`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Identifier of a stored key (already hashed at the application edge).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct KeyId(pub u64);

impl std::fmt::Display for KeyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "k{:016x}", self.0)
    }
}
