//! Sampling-based decision procedures.
//!
//! Two sample layouts are used throughout:
//!
//! * a regular cell-centred [`Lattice`] at `cell_size`, walked in blocks by
//!   [`walk`]: blocks where no relevant halfspace surface can pass are
//!   handled with one representative point, the rest are split down to
//!   single lattice points;
//! * a coarse-to-fine octree over a box ([`octree`]), the hierarchical
//!   strategy for emptiness and dominance tests.
//!
//! Both exploit that every halfspace SDF is an exact distance, hence
//! 1-Lipschitz: `|F(c)| > r` fixes the sign of `F` within radius `r` of `c`.
//! Pruning with that bound skips only samples whose outcome is already
//! determined, so decisions equal those of the exhaustive scans.

mod cit;
mod decider;
pub mod octree;
mod verify;
pub mod walk;

pub use cit::{enumerate_cits, enumerate_cits_for, Cit};
pub use decider::{find_dominance_citbased, is_empty_citbased, EmptinessDecider, Strategy};
pub use octree::{find_dominance_hierarchical, is_empty_hierarchical, Dominance, OctreeOptions};
pub use verify::{brute_force_agreement, grid_agreement, Agreement};

use crate::geometry::{Aabb, Vec3};

/// Fraction of a cell by which sample layouts are shifted off the box corner.
/// Keeps cell centres away from the round coordinates authored geometry uses.
pub(crate) const LAYOUT_SHIFT: f64 = 0.0371;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Lattice step for regular scans.
    pub cell_size: f64,
    /// Smallest octree cell edge per axis.
    pub min_cell: Vec3,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::with_step(0.1)
    }
}

impl GridSpec {
    pub fn with_step(step: f64) -> Self {
        GridSpec {
            cell_size: step,
            min_cell: Vec3::repeat(step),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.cell_size > 0.0) || self.min_cell.iter().any(|c| !(*c > 0.0)) {
            return Err(crate::CsgError::InvalidParameter("grid sizes must be positive".into()));
        }
        Ok(())
    }

    /// Same lattice step, octree cells scaled by `factor`.
    pub fn coarsened(&self, factor: f64) -> Self {
        GridSpec {
            cell_size: self.cell_size,
            min_cell: self.min_cell * factor,
        }
    }
}

/// Sign vector over scene halfspace positions (bit set = inside).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Signs(pub u128);

impl Signs {
    #[inline]
    pub fn get(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, inside: bool) {
        if inside {
            self.0 |= 1 << i;
        } else {
            self.0 &= !(1 << i);
        }
    }

    pub fn count_ones(self) -> u32 {
        self.0.count_ones()
    }
}

/// Cell-centred regular lattice. Point `(i, j, k)` sits at
/// `origin + (index + 0.5) * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub origin: Vec3,
    pub step: f64,
    pub counts: [usize; 3],
}

impl Lattice {
    pub fn covering(aabb: &Aabb, step: f64) -> Lattice {
        if aabb.is_empty() {
            return Lattice {
                origin: Vec3::zeros(),
                step,
                counts: [0; 3],
            };
        }
        let shift = step * LAYOUT_SHIFT;
        let origin = aabb.min.add_scalar(-shift);
        let ext = aabb.extent().add_scalar(2.0 * shift);
        let counts = [0, 1, 2].map(|i| ((ext[i] / step).ceil() as usize).max(1));
        Lattice { origin, step, counts }
    }

    #[inline]
    pub fn point(&self, idx: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin.x + (idx[0] as f64 + 0.5) * self.step,
            self.origin.y + (idx[1] as f64 + 0.5) * self.step,
            self.origin.z + (idx[2] as f64 + 0.5) * self.step,
        )
    }

    pub fn len(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn full_range(&self) -> IndexBox {
        IndexBox {
            lo: [0; 3],
            hi: self.counts,
        }
    }

    /// Lattice indices whose points fall inside `region` (padded by one step).
    pub fn range_within(&self, region: &Aabb) -> IndexBox {
        if region.is_empty() {
            return IndexBox { lo: [0; 3], hi: [0; 3] };
        }
        let r = region.padded(self.step);
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for a in 0..3 {
            let first = ((r.min[a] - self.origin[a]) / self.step - 0.5).ceil().max(0.0) as usize;
            let last = ((r.max[a] - self.origin[a]) / self.step - 0.5).floor();
            let end = if last < 0.0 { 0 } else { (last as usize + 1).min(self.counts[a]) };
            lo[a] = first.min(end);
            hi[a] = end;
        }
        IndexBox { lo, hi }
    }
}

/// Half-open box of lattice indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl IndexBox {
    pub fn len(&self) -> u64 {
        (0..3).map(|a| self.hi[a].saturating_sub(self.lo[a]) as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
