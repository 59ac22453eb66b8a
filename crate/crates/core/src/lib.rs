//! Maximal caps in the affine spaces AG(n,3) for n <= 4, their partitions of
//! AG(4,3) and the symmetry groups acting on them.

pub mod affine;
pub mod caps;
pub mod error;
pub mod finite_group;
pub mod geometry;
pub mod groups;
pub mod io;
pub mod partition;
pub mod pointset;
pub mod render;
pub mod search;

pub use affine::{AffineMap, Ambient, LinearMap, MatrixGroup, StabilizerMethod};
pub use caps::{canonical_cap, Cap, MaximalCap};
pub use error::{Error, Result};
pub use geometry::{hyperplane_profile, Dimension, HyperplaneFamily, Line, Point, Space};
pub use partition::{CompletabilityClass, PairType, Partition, PartitionClass};
pub use pointset::PointSet;
