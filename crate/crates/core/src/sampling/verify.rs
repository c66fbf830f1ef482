use super::walk::walk;
use super::Lattice;
use crate::geometry::Aabb;
use crate::scene::Scene;
use crate::tree::CsgNode;

/// Sign comparison of two trees over a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Agreement {
    pub samples: u64,
    pub mismatches: u64,
}

impl Agreement {
    pub fn is_equal(&self) -> bool {
        self.mismatches == 0
    }

    pub fn ratio(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            1.0 - self.mismatches as f64 / self.samples as f64
        }
    }
}

/// Compares inside/outside of `a` and `b` on the scene lattice at `step`,
/// optionally restricted to `region`. Uniform blocks count all their points.
pub fn grid_agreement(scene: &Scene, a: &CsgNode, b: &CsgNode, region: Option<&Aabb>, step: f64) -> Agreement {
    let lattice = Lattice::covering(&scene.aabb(), step);
    let range = match region {
        Some(r) => lattice.range_within(r),
        None => lattice.full_range(),
    };
    let mut ids = a.halfspace_ids();
    ids.extend(b.halfspace_ids());
    let relevant: Vec<usize> = ids.iter().filter_map(|id| scene.index(*id)).collect();
    let mut out = Agreement::default();
    walk(scene, &lattice, range, &relevant, &mut |blk| {
        out.samples += blk.count;
        if (scene.eval_with(a, blk.values) <= 0.0) != (scene.eval_with(b, blk.values) <= 0.0) {
            out.mismatches += blk.count;
        }
    });
    out
}

/// Point-by-point comparison on a lattice covering `region`. Test oracle.
pub fn brute_force_agreement(scene: &Scene, a: &CsgNode, b: &CsgNode, region: &Aabb, step: f64) -> Agreement {
    let lattice = Lattice::covering(region, step);
    let mut out = Agreement::default();
    for i in 0..lattice.counts[0] {
        for j in 0..lattice.counts[1] {
            for k in 0..lattice.counts[2] {
                let p = lattice.point([i, j, k]);
                out.samples += 1;
                if (scene.eval(a, &p) <= 0.0) != (scene.eval(b, &p) <= 0.0) {
                    out.mismatches += 1;
                }
            }
        }
    }
    out
}
