//! Editability metrics: tree size and operand proximity.

use serde::Serialize;

use crate::sampling::EmptinessDecider;
use crate::scene::Scene;
use crate::tree::CsgNode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub size: usize,
    pub proximity: f64,
}

impl Metrics {
    pub fn of(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider) -> Metrics {
        Metrics {
            size: tree_size(node),
            proximity: proximity(scene, node, decider),
        }
    }
}

/// Operations plus literals, including empty and universal literals.
pub fn tree_size(node: &CsgNode) -> usize {
    node.size()
}

/// Recursive proximity sum: leaves score 1, complements add 1 to their
/// child, binary operations add 1 when their operands overlap.
pub fn proximity_rec(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider) -> f64 {
    match node {
        CsgNode::Complement(c) => proximity_rec(scene, c, decider) + 1.0,
        _ => match node.binary_op() {
            Some((_, l, r)) => {
                let delta = if decider.disjoint(scene, l, r) { 0.0 } else { 1.0 };
                proximity_rec(scene, l, decider) + proximity_rec(scene, r, decider) + delta
            }
            None => 1.0,
        },
    }
}

/// Proximity sum divided by tree size, in (0, 1].
pub fn proximity(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider) -> f64 {
    proximity_rec(scene, node, decider) / tree_size(node) as f64
}

/// Share of binary operations whose operands overlap; 1 without operations.
pub fn op_overlap_ratio(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider) -> f64 {
    fn count(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider, acc: &mut (usize, usize)) {
        if let Some((_, l, r)) = node.binary_op() {
            acc.0 += 1;
            if !decider.disjoint(scene, l, r) {
                acc.1 += 1;
            }
        }
        for c in node.children() {
            count(scene, c, decider, acc);
        }
    }
    let mut acc = (0, 0);
    count(scene, node, decider, &mut acc);
    if acc.0 == 0 {
        1.0
    } else {
        acc.1 as f64 / acc.0 as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Halfspace, Shape};
    use crate::sampling::GridSpec;

    fn scene() -> Scene {
        Scene::new(
            "m",
            vec![
                Halfspace::new(0, Shape::sphere([0.0; 3], 1.0)),
                Halfspace::new(1, Shape::sphere([1.0, 0.0, 0.0], 1.0)),
                Halfspace::new(2, Shape::sphere([5.0, 0.0, 0.0], 1.0)),
            ],
            CsgNode::leaf(0),
        )
        .unwrap()
    }

    #[test]
    fn hand_evaluated_proximities() {
        let s = scene();
        let d = EmptinessDecider::hierarchical(GridSpec::default());
        let p = |t: &str| proximity(&s, &CsgNode::parse(t).unwrap(), &d);
        assert_eq!(p("h0"), 1.0);
        assert_eq!(p("h0 + h1"), 1.0);
        assert!((p("h0 + h2") - 2.0 / 3.0).abs() < 1e-12);
        // ((h0 + h1) + h2): inner overlaps, outer does not: (3 + 1 + 0) / 5.
        assert!((p("h0 + h1 + h2") - 0.8).abs() < 1e-12);
        // !h0: (1 + 1) / 2.
        assert_eq!(p("!h0"), 1.0);
        assert_eq!(op_overlap_ratio(&s, &CsgNode::parse("h0 + h1 + h2").unwrap(), &d), 0.5);
        assert_eq!(tree_size(&CsgNode::parse("h0 + h1").unwrap()), 3);
    }
}
