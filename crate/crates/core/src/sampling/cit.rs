use std::collections::{BTreeSet, HashMap};

use super::walk::walk;
use super::{GridSpec, Lattice, Signs};
use crate::geometry::{Aabb, Vec3};
use crate::scene::Scene;
use crate::tree::CsgNode;

/// Canonical intersection term found by sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Cit {
    pub signs: Signs,
    pub witness: Vec3,
    /// Whether the witness lies in the target solid.
    pub inside: bool,
    /// Distance from the witness to the nearest relevant halfspace surface.
    pub depth: f64,
}

/// All CITs over every scene halfspace, scanning the scene box.
pub fn enumerate_cits(scene: &Scene, node: &CsgNode, grid: &GridSpec) -> Vec<Cit> {
    let ids: BTreeSet<u32> = scene.ids().into_iter().collect();
    enumerate_cits_for(scene, node, &ids, &scene.aabb(), grid.cell_size)
}

/// CITs over the halfspaces `ids`, scanning `region` at `step`.
///
/// Sign bits of halfspaces outside `ids` stay zero. Among the lattice points
/// of one CIT the deepest one is kept as witness (ties: first in traversal
/// order). Output is sorted by sign vector.
pub fn enumerate_cits_for(scene: &Scene, node: &CsgNode, ids: &BTreeSet<u32>, region: &Aabb, step: f64) -> Vec<Cit> {
    if region.is_empty() {
        return Vec::new();
    }
    let relevant: Vec<usize> = ids.iter().filter_map(|id| scene.index(*id)).collect();
    let lattice = Lattice::covering(region, step);
    let hs = scene.halfspaces();
    let depth_at = |p: &Vec3| relevant.iter().map(|&i| hs[i].sdf(p).abs()).fold(f64::INFINITY, f64::min);

    let mut best: HashMap<Signs, (Vec3, f64)> = HashMap::new();
    walk(scene, &lattice, lattice.full_range(), &relevant, &mut |b| {
        let depth = depth_at(&b.point);
        match best.get_mut(&b.signs) {
            Some(slot) if slot.1 >= depth => {}
            Some(slot) => *slot = (b.point, depth),
            None => {
                best.insert(b.signs, (b.point, depth));
            }
        }
    });

    let mut out: Vec<Cit> = best
        .into_iter()
        .map(|(signs, (witness, depth))| Cit {
            signs,
            witness,
            inside: scene.eval(node, &witness) <= 0.0,
            depth,
        })
        .collect();
    out.sort_by_key(|c| c.signs);
    out
}
