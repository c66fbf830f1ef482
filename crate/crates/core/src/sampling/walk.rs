//! Block-wise traversal of a lattice with sign-uniformity pruning.

use super::{IndexBox, Lattice, Signs};
use crate::geometry::Vec3;
use crate::scene::Scene;

/// One visited group of lattice points that share the sign of every
/// relevant halfspace.
pub struct Block<'a> {
    pub range: IndexBox,
    pub count: u64,
    /// Representative lattice point (nearest to the block centre).
    pub point: Vec3,
    /// More than one point; `values` then holds ±1 sign surrogates.
    pub uniform: bool,
    /// Per scene position. Exact SDF values at single points, ±1 surrogates
    /// for halfspaces already resolved higher up. Only relevant entries are
    /// meaningful. Tree signs computed from these are exact.
    pub values: &'a [f64],
    pub signs: Signs,
}

/// Visits every point of `range` exactly once, grouped into blocks.
/// `relevant` lists scene positions whose signs define uniformity.
pub fn walk(scene: &Scene, lattice: &Lattice, range: IndexBox, relevant: &[usize], visit: &mut dyn FnMut(&Block)) {
    if range.is_empty() {
        return;
    }
    let mut values = vec![1.0; scene.halfspaces().len()];
    recurse(scene, lattice, range, relevant.to_vec(), Signs::default(), &mut values, visit);
}

fn recurse(
    scene: &Scene,
    lattice: &Lattice,
    range: IndexBox,
    active: Vec<usize>,
    mut signs: Signs,
    values: &mut [f64],
    visit: &mut dyn FnMut(&Block),
) {
    let n = [0, 1, 2].map(|a| range.hi[a] - range.lo[a]);
    let count = range.len();
    let hs = scene.halfspaces();

    if count == 1 {
        let p = lattice.point(range.lo);
        for &i in &active {
            let v = hs[i].sdf(&p);
            values[i] = v;
            signs.set(i, v <= 0.0);
        }
        visit(&Block {
            range,
            count,
            point: p,
            uniform: false,
            values,
            signs,
        });
        return;
    }

    let center = Vec3::from_fn(|a, _| {
        lattice.origin[a] + ((range.lo[a] + range.hi[a] - 1) as f64 * 0.5 + 0.5) * lattice.step
    });
    let radius = 0.5
        * lattice.step
        * n.iter().map(|&c| ((c - 1) as f64).powi(2)).sum::<f64>().sqrt();
    let bound = radius * (1.0 + 1e-12) + 1e-12;

    let mut still_active = Vec::with_capacity(active.len());
    for &i in &active {
        let v = hs[i].sdf(&center);
        if v.abs() > bound {
            values[i] = v.signum();
            signs.set(i, v < 0.0);
        } else {
            still_active.push(i);
        }
    }

    if still_active.is_empty() {
        let rep = [0, 1, 2].map(|a| range.lo[a] + (n[a] - 1) / 2);
        visit(&Block {
            range,
            count,
            point: lattice.point(rep),
            uniform: true,
            values,
            signs,
        });
        return;
    }

    let axis = (0..3).max_by_key(|&a| (n[a], std::cmp::Reverse(a))).expect("three axes");
    let mid = range.lo[axis] + n[axis] / 2;
    let mut first = range;
    first.hi[axis] = mid;
    let mut second = range;
    second.lo[axis] = mid;
    recurse(scene, lattice, first, still_active.clone(), signs, values, visit);
    recurse(scene, lattice, second, still_active, signs, values, visit);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Halfspace, Shape};
    use crate::tree::CsgNode;

    #[test]
    fn visits_every_point_once_with_exact_signs() {
        let scene = Scene::new(
            "w",
            vec![
                Halfspace::new(0, Shape::sphere([0.0; 3], 1.0)),
                Halfspace::new(1, Shape::aligned_box([0.8, 0.0, 0.0], [0.5, 0.7, 0.3])),
            ],
            CsgNode::union(CsgNode::leaf(0), CsgNode::leaf(1)),
        )
        .unwrap();
        let lattice = Lattice::covering(&scene.aabb(), 0.1);
        let mut seen = vec![0u8; lattice.len() as usize];
        let idx = |i: [usize; 3]| (i[0] * lattice.counts[1] + i[1]) * lattice.counts[2] + i[2];
        let mut blocks = 0;
        walk(&scene, &lattice, lattice.full_range(), &[0, 1], &mut |b| {
            blocks += 1;
            for i in b.range.lo[0]..b.range.hi[0] {
                for j in b.range.lo[1]..b.range.hi[1] {
                    for k in b.range.lo[2]..b.range.hi[2] {
                        seen[idx([i, j, k])] += 1;
                        let p = lattice.point([i, j, k]);
                        for h in 0..2 {
                            assert_eq!(scene.halfspaces()[h].sdf(&p) <= 0.0, b.signs.get(h));
                        }
                    }
                }
            }
        });
        assert!(seen.iter().all(|&c| c == 1));
        assert!((blocks as u64) < lattice.len());
    }
}
