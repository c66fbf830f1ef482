//! Coarse-to-fine octree sampling.
//!
//! The box is halved along every axis per level until a cell edge drops to
//! the configured minimum on that axis; axes that already reached it stop
//! splitting while the others continue. Each cell centre is one sample and
//! children are visited in Morton order.

use super::{GridSpec, LAYOUT_SHIFT};
use crate::geometry::{Aabb, Vec3};
use crate::scene::Scene;
use crate::tree::CsgNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OctreeOptions {
    /// Stop as soon as the outcome is known.
    pub early_stop: bool,
    /// Skip subtrees whose samples cannot change the outcome (Lipschitz bound).
    pub prune: bool,
}

impl Default for OctreeOptions {
    fn default() -> Self {
        OctreeOptions {
            early_stop: true,
            prune: true,
        }
    }
}

impl OctreeOptions {
    pub const EXHAUSTIVE: OctreeOptions = OctreeOptions {
        early_stop: false,
        prune: false,
    };
}

struct Plan {
    origin: Vec3,
    extent: Vec3,
    splits: [u32; 3],
    levels: u32,
}

#[derive(Clone, Copy)]
struct Cell {
    idx: [u64; 3],
}

impl Plan {
    fn new(region: &Aabb, min_cell: &Vec3) -> Option<Plan> {
        if region.is_empty() {
            return None;
        }
        let pad = min_cell * LAYOUT_SHIFT;
        let origin = region.min - pad;
        let extent = region.extent() + pad * 2.0;
        let splits = [0, 1, 2].map(|a| {
            let ratio = extent[a] / min_cell[a];
            if ratio <= 1.0 {
                0
            } else {
                ratio.log2().ceil() as u32
            }
        });
        let levels = *splits.iter().max().expect("three axes");
        Some(Plan {
            origin,
            extent,
            splits,
            levels,
        })
    }

    fn cell_size(&self, level: u32) -> Vec3 {
        Vec3::from_fn(|a, _| self.extent[a] / (1u64 << level.min(self.splits[a])) as f64)
    }

    fn center(&self, cell: &Cell, size: &Vec3) -> Vec3 {
        Vec3::from_fn(|a, _| self.origin[a] + (cell.idx[a] as f64 + 0.5) * size[a])
    }

    /// Appends the children of `cell` (at `level`) in Morton order.
    fn push_children(&self, cell: &Cell, level: u32, out: &mut Vec<Cell>) {
        let axes: Vec<usize> = (0..3).filter(|&a| level < self.splits[a]).collect();
        for bits in 0..(1u32 << axes.len()) {
            let mut idx = cell.idx;
            for (a, &axis) in axes.iter().enumerate() {
                idx[axis] = cell.idx[axis] * 2 + u64::from(bits >> a & 1);
            }
            for axis in 0..3 {
                if !axes.contains(&axis) {
                    idx[axis] = cell.idx[axis];
                }
            }
            out.push(Cell { idx });
        }
    }

    /// Breadth-first traversal. `sample` gets the centre and half-diagonal
    /// of each cell and returns whether to descend; returning `None` aborts.
    fn traverse(&self, mut sample: impl FnMut(&Vec3, f64) -> Option<bool>) -> u64 {
        let mut current = vec![Cell { idx: [0; 3] }];
        let mut next = Vec::new();
        let mut evaluated = 0u64;
        for level in 0..=self.levels {
            let size = self.cell_size(level);
            let half_diag = size.norm() * 0.5;
            for cell in &current {
                evaluated += 1;
                match sample(&self.center(cell, &size), half_diag) {
                    None => return evaluated,
                    Some(true) if level < self.levels => self.push_children(cell, level, &mut next),
                    Some(_) => {}
                }
            }
            std::mem::swap(&mut current, &mut next);
            next.clear();
            if current.is_empty() {
                break;
            }
        }
        evaluated
    }
}

/// Replaces leaves whose box misses `region` by `Empty` and folds the
/// resulting literals. Inside `region` the SDF is unchanged pointwise
/// wherever a dropped leaf is positive, so signs and Lipschitz bounds hold.
fn localize(scene: &Scene, node: &CsgNode, region: &Aabb) -> CsgNode {
    use CsgNode::*;
    match node {
        Leaf(id) => {
            let hit = scene.halfspace(*id).is_some_and(|h| !h.aabb().intersection(region).is_empty());
            if hit {
                node.clone()
            } else {
                Empty
            }
        }
        Empty | Universe => node.clone(),
        Complement(c) => match localize(scene, c, region) {
            Empty => Universe,
            Universe => Empty,
            c => CsgNode::comp(c),
        },
        Union(l, r) => match (localize(scene, l, region), localize(scene, r, region)) {
            (Empty, x) | (x, Empty) => x,
            (Universe, _) | (_, Universe) => Universe,
            (l, r) => CsgNode::union(l, r),
        },
        Intersection(l, r) => match (localize(scene, l, region), localize(scene, r, region)) {
            (Empty, _) | (_, Empty) => Empty,
            (Universe, x) | (x, Universe) => x,
            (l, r) => CsgNode::inter(l, r),
        },
        Difference(l, r) => match (localize(scene, l, region), localize(scene, r, region)) {
            (Empty, _) | (_, Universe) => Empty,
            (x, Empty) => x,
            (Universe, x) => CsgNode::comp(x),
            (l, r) => CsgNode::diff(l, r),
        },
    }
}

fn lipschitz_bound(r: f64) -> f64 {
    r * (1.0 + 1e-12) + 1e-12
}

/// True when no octree sample over the node's box has SDF <= 0.
pub fn is_empty_hierarchical(scene: &Scene, node: &CsgNode, grid: &GridSpec) -> bool {
    is_empty_hierarchical_with(scene, node, grid, OctreeOptions::default()).0
}

/// Emptiness decision plus the number of samples evaluated.
pub fn is_empty_hierarchical_with(scene: &Scene, node: &CsgNode, grid: &GridSpec, opts: OctreeOptions) -> (bool, u64) {
    match node {
        CsgNode::Empty => return (true, 0),
        CsgNode::Universe => return (false, 0),
        _ => {}
    }
    let region = scene.node_aabb(node);
    let Some(plan) = Plan::new(&region, &grid.min_cell) else {
        return (true, 0);
    };
    let local = localize(scene, node, &region.padded(grid.min_cell.max()));
    let node = &local;
    if node.is_empty_literal() {
        return (true, 0);
    }
    let mut empty = true;
    let evaluated = plan.traverse(|c, r| {
        let f = scene.eval(node, c);
        if f <= 0.0 {
            empty = false;
            if opts.early_stop {
                return None;
            }
        }
        Some(!(opts.prune && f > lipschitz_bound(r)))
    });
    (empty, evaluated)
}

/// Relation of one halfspace to a solid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// Every sample inside the halfspace is inside the solid.
    Add,
    /// Every sample inside the halfspace is outside the solid.
    Subtract,
    Mixed,
    /// No sample fell inside the halfspace.
    Indeterminate,
}

/// Dominance of halfspace `id` over `node`, sampling the halfspace's box.
pub fn find_dominance_hierarchical(scene: &Scene, node: &CsgNode, id: u32, grid: &GridSpec, opts: OctreeOptions) -> Dominance {
    let Some(h) = scene.halfspace(id) else {
        return Dominance::Indeterminate;
    };
    let Some(plan) = Plan::new(&h.aabb(), &grid.min_cell) else {
        return Dominance::Indeterminate;
    };
    let local = localize(scene, node, &h.aabb().padded(grid.min_cell.max()));
    let node = &local;
    let (mut seen_in, mut seen_out) = (false, false);
    plan.traverse(|c, r| {
        let fh = h.sdf(c);
        let f = scene.eval(node, c);
        if fh <= 0.0 {
            if f <= 0.0 {
                seen_in = true;
            } else {
                seen_out = true;
            }
            if opts.early_stop && seen_in && seen_out {
                return None;
            }
        }
        if !opts.prune {
            return Some(true);
        }
        let bound = lipschitz_bound(r);
        if fh > bound {
            return Some(false);
        }
        let settled = (f < -bound && seen_in) || (f > bound && seen_out);
        Some(!settled)
    });
    match (seen_in, seen_out) {
        (true, false) => Dominance::Add,
        (false, true) => Dominance::Subtract,
        (true, true) => Dominance::Mixed,
        (false, false) => Dominance::Indeterminate,
    }
}
