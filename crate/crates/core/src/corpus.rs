//! Built-in evaluation scenes: eleven CAD-like parts and a small
//! five-halfspace layout used as a worked example.

use std::f64::consts::PI;

use crate::geometry::{Halfspace, Shape};
use crate::scene::Scene;
use crate::tree::CsgNode;

pub const MODEL_COUNT: usize = 11;

/// Reference (size, proximity) for each model, recorded as metadata.
const TARGETS: [(usize, f64); MODEL_COUNT] = [
    (9, 0.75),
    (13, 0.833),
    (39, 0.474),
    (27, 1.0),
    (19, 0.667),
    (19, 0.556),
    (91, 0.706),
    (73, 0.722),
    (171, 0.471),
    (17, 0.875),
    (37, 0.789),
];

const X: [f64; 3] = [1.0, 0.0, 0.0];
const Y: [f64; 3] = [0.0, 1.0, 0.0];
const Z: [f64; 3] = [0.0, 0.0, 1.0];

/// Sequential id allocation.
struct Builder {
    halfspaces: Vec<Halfspace>,
}

impl Builder {
    fn new() -> Self {
        Builder { halfspaces: Vec::new() }
    }

    fn add(&mut self, shape: Shape) -> u32 {
        let id = self.halfspaces.len() as u32;
        self.halfspaces.push(Halfspace::new(id, shape));
        id
    }

    fn finish(self, number: usize, root: CsgNode) -> Scene {
        let (size, prox) = TARGETS[number - 1];
        Scene::new(format!("model{number}"), self.halfspaces, root)
            .expect("corpus scenes are valid")
            .with_target(size, prox)
    }
}

fn leaves(ids: &[u32]) -> impl Iterator<Item = CsgNode> + '_ {
    ids.iter().map(|&id| CsgNode::leaf(id))
}

/// `((base + a1) + …) - s1 - …`
fn chain(base: CsgNode, adds: &[u32], subs: &[u32]) -> CsgNode {
    let with_adds = leaves(adds).fold(base, CsgNode::union);
    leaves(subs).fold(with_adds, CsgNode::diff)
}

fn lens(b: &mut Builder, center: [f64; 3], offset: [f64; 3], radius: f64) -> CsgNode {
    let a = b.add(Shape::sphere([center[0] - offset[0], center[1] - offset[1], center[2] - offset[2]], radius));
    let c = b.add(Shape::sphere([center[0] + offset[0], center[1] + offset[1], center[2] + offset[2]], radius));
    CsgNode::inter(CsgNode::leaf(a), CsgNode::leaf(c))
}

/// Stand with base slab, column and ball cap, drilled twice.
pub fn model1() -> Scene {
    let mut b = Builder::new();
    let base = b.add(Shape::aligned_box([0.0, -9.0, 0.0], [10.0, 2.0, 10.0]));
    let column = b.add(Shape::cylinder([0.0, -1.5, 0.0], Y, 5.0, 6.5));
    let cap = b.add(Shape::sphere([0.0, 5.0, 0.0], 6.0));
    let bore = b.add(Shape::cylinder([0.0, 0.0, 0.0], Y, 2.0, 12.0));
    let cross = b.add(Shape::cylinder([0.0, -9.0, 6.0], X, 1.2, 11.0));
    let root = chain(CsgNode::leaf(base), &[column, cap], &[bore, cross]);
    b.finish(1, root)
}

/// Pedestal with a lens-shaped head.
pub fn model2() -> Scene {
    let mut b = Builder::new();
    let head = lens(&mut b, [0.0, 7.2, 0.0], [0.0, 0.0, 2.5], 9.0);
    let body = b.add(Shape::aligned_box([0.0, -4.0, 0.0], [4.0, 8.5, 4.0]));
    let base = b.add(Shape::aligned_box([0.0, -13.85, 0.0], [7.9, 2.0, 5.65]));
    let h1 = b.add(Shape::cylinder([5.8, -13.85, 0.0], Y, 1.0, 3.0));
    let h2 = b.add(Shape::cylinder([-5.8, -13.85, 0.0], Y, 1.0, 3.0));
    let h3 = b.add(Shape::cylinder([0.0, -4.0, 0.0], Z, 2.0, 5.0));
    let root = chain(head, &[body, base], &[h1, h2, h3]);
    b.finish(2, root)
}

/// Ribbed plate with four bosses and thirteen holes.
pub fn model3() -> Scene {
    let mut b = Builder::new();
    let plate = b.add(Shape::aligned_box([0.0, 0.0, 0.0], [10.5, 1.0, 10.5]));
    let mut adds = Vec::new();
    let corners = [(-7.0, -7.0), (7.0, -7.0), (-7.0, 7.0), (7.0, 7.0)];
    for (x, z) in corners {
        adds.push(b.add(Shape::cylinder([x, 2.0, z], Y, 1.8, 1.2)));
    }
    adds.push(b.add(Shape::aligned_box([0.0, 2.0, 0.0], [6.0, 1.2, 1.0])));
    adds.push(b.add(Shape::aligned_box([0.0, 2.0, 0.0], [1.0, 1.2, 6.0])));
    let mut holes = Vec::new();
    for (x, z) in corners {
        holes.push(b.add(Shape::cylinder([x, 1.0, z], Y, 0.8, 5.0)));
    }
    holes.push(b.add(Shape::cylinder([0.0, 1.0, 0.0], Y, 0.7, 5.0)));
    for (x, z) in [(-3.5, -3.5), (3.5, -3.5), (-3.5, 3.5), (3.5, 3.5), (9.0, 0.0), (-9.0, 0.0), (0.0, 9.0), (0.0, -9.0)] {
        holes.push(b.add(Shape::cylinder([x, 0.0, z], Y, 0.8, 3.0)));
    }
    let positives = CsgNode::union_all(std::iter::once(CsgNode::leaf(plate)).chain(leaves(&adds)));
    let negatives = CsgNode::union_all(leaves(&holes));
    b.finish(3, CsgNode::diff(positives, negatives))
}

/// Flange with hub, neck, three gussets, bore, keyway and bolt circle.
pub fn model4() -> Scene {
    let mut b = Builder::new();
    let flange = b.add(Shape::cylinder([0.0, 0.0, -5.0], Z, 6.7, 1.0));
    let hub = b.add(Shape::cylinder([0.0; 3], Z, 3.5, 5.0));
    let neck = b.add(Shape::cylinder([0.0, 0.0, 5.0], Z, 2.5, 1.0));
    let gussets: Vec<u32> = (0..3)
        .map(|k| {
            let a = k as f64 * 2.0 * PI / 3.0;
            b.add(Shape::rotated_box([4.5 * a.cos(), 4.5 * a.sin(), -2.8], [2.0, 0.4, 1.5], Z, a))
        })
        .collect();
    let bore = b.add(Shape::cylinder([0.0; 3], Z, 1.5, 8.0));
    let mut subs = vec![bore];
    for k in 0..6 {
        let a = PI / 6.0 + k as f64 * PI / 3.0;
        subs.push(b.add(Shape::cylinder([5.5 * a.cos(), 5.5 * a.sin(), -5.0], Z, 0.5, 3.0)));
    }
    subs.push(b.add(Shape::aligned_box([1.6, 0.0, 0.0], [0.5, 0.4, 8.0])));
    let root = chain(CsgNode::leaf(flange), &[hub, neck, gussets[0], gussets[1], gussets[2]], &subs);
    b.finish(4, root)
}

/// Angle bracket with two diagonal gussets.
pub fn model5() -> Scene {
    let mut b = Builder::new();
    let base = b.add(Shape::aligned_box([0.0, -8.0, 0.0], [12.0, 1.0, 13.5]));
    let upright = b.add(Shape::aligned_box([0.0, 0.0, -12.5], [12.0, 9.0, 1.0]));
    let g1 = b.add(Shape::rotated_box([8.0, -5.0, -9.0], [0.5, 0.6, 5.0], X, PI / 4.0));
    let g2 = b.add(Shape::rotated_box([-8.0, -5.0, -9.0], [0.5, 0.6, 5.0], X, PI / 4.0));
    let subs = [
        b.add(Shape::cylinder([8.0, -8.0, 6.0], Y, 1.2, 2.0)),
        b.add(Shape::cylinder([-8.0, -8.0, 6.0], Y, 1.2, 2.0)),
        b.add(Shape::cylinder([6.0, 4.0, -12.5], Z, 1.5, 2.0)),
        b.add(Shape::cylinder([-6.0, 4.0, -12.5], Z, 1.5, 2.0)),
        b.add(Shape::aligned_box([0.0, -8.0, 4.0], [3.0, 2.0, 1.0])),
        b.add(Shape::cylinder([0.0, 5.0, -12.5], Z, 2.0, 2.0)),
    ];
    let root = chain(CsgNode::leaf(base), &[upright, g1, g2], &subs);
    b.finish(5, root)
}

/// Stepped shaft with collar, flange, journals, keyways and cross holes.
pub fn model6() -> Scene {
    let mut b = Builder::new();
    let shaft = b.add(Shape::cylinder([0.0; 3], X, 2.5, 9.0));
    let collar = b.add(Shape::cylinder([0.0; 3], X, 5.0, 1.0));
    let left = b.add(Shape::cylinder([-10.25, 0.0, 0.0], X, 1.5, 1.4));
    let right = b.add(Shape::cylinder([10.25, 0.0, 0.0], X, 1.5, 1.4));
    let flange = b.add(Shape::cylinder([5.0, 0.0, 0.0], X, 4.0, 0.5));
    let subs = [
        b.add(Shape::aligned_box([-5.0, 2.3, 0.0], [2.0, 0.5, 0.6])),
        b.add(Shape::aligned_box([7.8, 2.3, 0.0], [1.2, 0.5, 0.6])),
        b.add(Shape::cylinder([0.0; 3], Y, 0.8, 6.0)),
        b.add(Shape::cylinder([-11.0, 0.0, 0.0], X, 0.5, 1.0)),
        b.add(Shape::cylinder([0.0, 3.8, 0.0], X, 0.6, 1.5)),
    ];
    let root = chain(CsgNode::leaf(shaft), &[collar, left, right, flange], &subs);
    b.finish(6, root)
}

/// Plate with a 5×5 boss grid and two ribs; twelve bosses are drilled,
/// written as intersections with complements.
pub fn model7() -> Scene {
    let mut b = Builder::new();
    let plate = b.add(Shape::aligned_box([0.0; 3], [10.8, 1.0, 10.9]));
    let grid = [-8.0, -4.0, 0.0, 4.0, 8.0];
    let mut positives = vec![plate];
    for &x in &grid {
        for &z in &grid {
            positives.push(b.add(Shape::cylinder([x, 2.5, z], Y, 1.2, 1.7)));
        }
    }
    positives.push(b.add(Shape::aligned_box([0.0, 2.0, 0.0], [10.0, 0.6, 0.4])));
    positives.push(b.add(Shape::aligned_box([0.0, 2.0, 0.0], [0.4, 0.6, 10.0])));
    let mut root = CsgNode::union_all(leaves(&positives));
    for &x in &[-8.0, -4.0, 4.0, 8.0] {
        for &z in &[-8.0, 4.0, 8.0] {
            let hole = b.add(Shape::cylinder([x, 2.0, z], Y, 0.5, 6.0));
            root = CsgNode::inter(root, CsgNode::comp(CsgNode::leaf(hole)));
        }
    }
    b.finish(7, root)
}

/// Perforated plate carrying nine lens-shaped studs.
pub fn model8() -> Scene {
    let mut b = Builder::new();
    let plate = b.add(Shape::aligned_box([0.0; 3], [15.75, 6.35, 0.75]));
    let mut root = CsgNode::leaf(plate);
    for k in 0..9 {
        let (x, y) = if k < 5 { (-12.0 + 6.0 * k as f64, 3.0) } else { (-9.0 + 6.0 * (k - 5) as f64, -3.0) };
        root = CsgNode::union(root, lens(&mut b, [x, y, 0.75], [0.9, 0.0, 0.0], 1.5));
    }
    for &y in &[0.0, -5.6] {
        for i in 0..9 {
            let hole = b.add(Shape::cylinder([-12.0 + 3.0 * i as f64, y, 0.0], Z, 0.6, 2.0));
            root = CsgNode::diff(root, CsgNode::leaf(hole));
        }
    }
    b.finish(8, root)
}

/// Plate minus the union of 85 holes.
pub fn model9() -> Scene {
    let mut b = Builder::new();
    let plate = b.add(Shape::aligned_box([0.0; 3], [14.85, 1.92, 15.05]));
    let mut holes = Vec::new();
    for i in 0..9 {
        for j in 0..9 {
            holes.push(b.add(Shape::cylinder([-12.0 + 3.0 * i as f64, 0.0, -12.0 + 3.0 * j as f64], Y, 0.6, 3.0)));
        }
    }
    for (x, z) in [(-13.5, -13.5), (13.5, -13.5), (-13.5, 13.5), (13.5, 13.5)] {
        holes.push(b.add(Shape::cylinder([x, 0.0, z], Y, 0.6, 3.0)));
    }
    let root = CsgNode::diff(CsgNode::leaf(plate), CsgNode::union_all(leaves(&holes)));
    b.finish(9, root)
}

/// Knob: intersection of three spheres on a stem and footed base.
pub fn model10() -> Scene {
    let mut b = Builder::new();
    let s1 = b.add(Shape::sphere([-1.5, 2.0, 0.0], 6.5));
    let s2 = b.add(Shape::sphere([1.5, 2.0, 0.0], 6.5));
    let s3 = b.add(Shape::sphere([0.0, 2.0, 2.5], 6.5));
    let knob = CsgNode::inter(CsgNode::inter(CsgNode::leaf(s1), CsgNode::leaf(s2)), CsgNode::leaf(s3));
    let base = b.add(Shape::aligned_box([0.0, -4.5, 0.0], [5.0, 1.0, 5.0]));
    let stem = b.add(Shape::cylinder([0.0, -2.5, 0.0], Y, 1.5, 2.0));
    let rib = b.add(Shape::aligned_box([0.0, -3.0, 0.0], [0.5, 1.0, 4.0]));
    let subs = [
        b.add(Shape::cylinder([0.0, 3.0, 0.0], Z, 1.0, 8.0)),
        b.add(Shape::cylinder([3.5, -4.5, 3.5], Y, 0.6, 2.0)),
        b.add(Shape::cylinder([-3.5, -4.5, -3.5], Y, 0.6, 2.0)),
    ];
    let root = chain(knob, &[base, stem, rib], &subs);
    b.finish(10, root)
}

/// Base plate with two blocks, two bosses and two lens caps.
pub fn model11() -> Scene {
    let mut b = Builder::new();
    let plate = b.add(Shape::aligned_box([0.0; 3], [13.0, 1.0, 11.0]));
    let block_l = b.add(Shape::aligned_box([-7.0, 3.0, 0.0], [4.0, 2.2, 6.0]));
    let block_r = b.add(Shape::aligned_box([7.0, 3.0, 0.0], [4.0, 2.2, 6.0]));
    let boss_f = b.add(Shape::cylinder([0.0, 3.0, -7.0], Y, 2.5, 2.2));
    let boss_b = b.add(Shape::cylinder([0.0, 3.0, 7.0], Y, 2.5, 2.2));
    let cap_l = lens(&mut b, [-7.0, 6.5, 0.0], [1.5, 0.0, 0.0], 3.0);
    let cap_r = lens(&mut b, [7.0, 6.5, 0.0], [1.5, 0.0, 0.0], 3.0);
    let mut subs = Vec::new();
    for (x, z) in [(-11.0, -9.0), (11.0, -9.0), (-11.0, 9.0), (11.0, 9.0)] {
        subs.push(b.add(Shape::cylinder([x, 0.0, z], Y, 0.8, 2.0)));
    }
    subs.push(b.add(Shape::cylinder([-7.0, 2.5, 0.0], Z, 0.8, 7.0)));
    subs.push(b.add(Shape::cylinder([7.0, 2.5, 0.0], Z, 0.8, 7.0)));
    subs.push(b.add(Shape::cylinder([0.0, 3.0, -7.0], Y, 1.0, 3.0)));
    subs.push(b.add(Shape::cylinder([0.0, 3.0, 7.0], Y, 1.0, 3.0)));
    subs.push(b.add(Shape::cylinder([-4.0, 0.0, 0.0], Y, 0.8, 2.0)));
    subs.push(b.add(Shape::cylinder([4.0, 0.0, 0.0], Y, 0.8, 2.0)));
    let adds = CsgNode::union_all(leaves(&[plate, block_l, block_r, boss_f, boss_b]));
    let with_caps = CsgNode::union(CsgNode::union(adds, cap_l), cap_r);
    let root = leaves(&subs).fold(with_caps, CsgNode::diff);
    b.finish(11, root)
}

/// Model `number` in `1..=11`.
pub fn model(number: usize) -> Option<Scene> {
    let build: [fn() -> Scene; MODEL_COUNT] =
        [model1, model2, model3, model4, model5, model6, model7, model8, model9, model10, model11];
    build.get(number.checked_sub(1)?).map(|f| f())
}

pub fn all_models() -> Vec<Scene> {
    (1..=MODEL_COUNT).filter_map(model).collect()
}

/// Models whose remaining solid is empty after decomposition.
pub const EMPTY_REMAINDER_MODELS: [usize; 7] = [1, 3, 4, 5, 6, 7, 9];

/// Five-halfspace layout, extruded along z: a box `h4` notched by boxes
/// `h0` and `h2`, a disc `h3` on its top edge and a disc `h1` that only
/// matters inside `h4`. The root is `((h4 + h1·h4) - h0 - h2) + h3`.
pub fn worked_example() -> Scene {
    let hs = vec![
        Halfspace::new(0, Shape::aligned_box([-4.0, -1.5, 0.0], [1.5, 1.5, 8.0])),
        Halfspace::new(1, Shape::cylinder([-2.5, -3.0, 0.0], Z, 1.2, 8.0)),
        Halfspace::new(2, Shape::aligned_box([4.0, -2.0, 0.0], [1.5, 1.5, 8.0])),
        Halfspace::new(3, Shape::cylinder([2.5, 3.0, 0.0], Z, 1.5, 8.0)),
        Halfspace::new(4, Shape::aligned_box([0.0; 3], [4.0, 3.0, 5.0])),
    ];
    let root = CsgNode::parse("((h4 + (h1 · h4)) - h0 - h2) + h3").expect("valid expression");
    Scene::new("worked_example", hs, root).expect("valid scene")
}
