//! CSG tree optimization for editability.
//!
//! Trees over analytic halfspaces are made smaller and more spatially
//! coherent by redundancy removal, dominant halfspace decomposition,
//! two-level minimization of the remaining solid and genetic search.

pub mod corpus;
pub mod decompose;
pub mod error;
pub mod ga;
pub mod metrics;
pub mod pipeline;
pub mod qubo;
pub mod geometry;
pub mod inflate;
pub mod sampling;
pub mod simplify;
pub mod scene;
pub mod tree;
pub mod twolevel;

pub use error::{CsgError, Result};
pub use geometry::{Aabb, Halfspace, Shape, Vec3};
pub use scene::Scene;
pub use tree::{BinaryOp, CsgNode};

/// Upper bound on halfspaces per scene (sign vectors are 128-bit).
pub const MAX_HALFSPACES: usize = 128;
