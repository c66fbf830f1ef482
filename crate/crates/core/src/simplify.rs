//! Redundancy removal by rewriting to a fixpoint.
//!
//! Every rule strictly shrinks the tree, so passes terminate. Difference
//! nodes are rewritten by the rules their `X ∩ ¬Y` reading implies, which
//! leaves explicit intersections with complements untouched.

use std::collections::HashMap;

use crate::sampling::EmptinessDecider;
use crate::scene::Scene;
use crate::tree::CsgNode;

/// Applies the rewrite rules bottom-up until a pass changes nothing.
///
/// Rules, with `X ∩ X → X` as the one addition beyond union idempotence:
/// disjoint intersection to `∅`, idempotent union and intersection, the
/// literal identities for `∅` and `W`, double complement, complements of
/// literals, and the corresponding difference identities.
pub fn remove_redundancies(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider) -> CsgNode {
    let mut s = Simplifier {
        scene,
        decider,
        memo: HashMap::new(),
    };
    let mut current = node.clone();
    loop {
        let next = s.pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

struct Simplifier<'a> {
    scene: &'a Scene,
    decider: &'a EmptinessDecider,
    memo: HashMap<u64, bool>,
}

impl Simplifier<'_> {
    fn empty(&mut self, query: CsgNode) -> bool {
        let key = query.canonical_hash();
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = self.decider.is_empty(self.scene, &query);
        self.memo.insert(key, v);
        v
    }

    fn identical(&mut self, a: &CsgNode, b: &CsgNode) -> bool {
        a == b || (self.subset(a, b) && self.subset(b, a))
    }

    fn subset(&mut self, a: &CsgNode, b: &CsgNode) -> bool {
        self.empty(CsgNode::diff(a.clone(), b.clone()))
    }

    fn pass(&mut self, node: &CsgNode) -> CsgNode {
        use CsgNode::*;
        match node {
            Leaf(_) | Empty | Universe => node.clone(),
            Complement(c) => match self.pass(c) {
                Complement(inner) => *inner,
                Empty => Universe,
                Universe => Empty,
                c => CsgNode::comp(c),
            },
            Union(l, r) => {
                let (l, r) = (self.pass(l), self.pass(r));
                match (&l, &r) {
                    (Empty, _) => r,
                    (_, Empty) => l,
                    (Universe, _) | (_, Universe) => Universe,
                    _ if self.identical(&l, &r) => l,
                    _ => CsgNode::union(l, r),
                }
            }
            Intersection(l, r) => {
                let (l, r) = (self.pass(l), self.pass(r));
                match (&l, &r) {
                    (Empty, _) | (_, Empty) => Empty,
                    (Universe, _) => r,
                    (_, Universe) => l,
                    _ if self.empty(CsgNode::inter(l.clone(), r.clone())) => Empty,
                    _ if self.identical(&l, &r) => l,
                    _ => CsgNode::inter(l, r),
                }
            }
            Difference(l, r) => {
                let (l, r) = (self.pass(l), self.pass(r));
                match (&l, &r) {
                    (Empty, _) | (_, Universe) => Empty,
                    (_, Empty) => l,
                    (Universe, _) => CsgNode::comp(r),
                    _ if self.subset(&l, &r) => Empty,
                    _ => CsgNode::diff(l, r),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Halfspace, Shape};
    use crate::sampling::{grid_agreement, GridSpec};

    fn scene() -> Scene {
        Scene::new(
            "s",
            vec![
                Halfspace::new(0, Shape::sphere([0.0; 3], 1.0)),
                Halfspace::new(1, Shape::sphere([4.0, 0.0, 0.0], 1.0)),
                Halfspace::new(2, Shape::aligned_box([0.5, 0.0, 0.0], [1.0, 0.4, 0.4])),
                Halfspace::new(3, Shape::sphere([0.2, 0.0, 0.0], 0.3)),
            ],
            CsgNode::leaf(0),
        )
        .unwrap()
    }

    fn simp(t: &str) -> String {
        let s = scene();
        let d = EmptinessDecider::hierarchical(GridSpec::default());
        remove_redundancies(&s, &CsgNode::parse(t).unwrap(), &d).to_string()
    }

    #[test]
    fn individual_rules() {
        assert_eq!(simp("!!h0"), "h0");
        assert_eq!(simp("h0 + h0"), "h0");
        assert_eq!(simp("h0 · h1"), "0");
        assert_eq!(simp("h0 · 0"), "0");
        assert_eq!(simp("h0 · 1"), "h0");
        assert_eq!(simp("h0 + 0"), "h0");
        assert_eq!(simp("h0 + 1"), "1");
        assert_eq!(simp("!0"), "1");
        assert_eq!(simp("!1"), "0");
        assert_eq!(simp("h2 · h2"), "h2");
        assert_eq!(simp("h0 - 0"), "h0");
        assert_eq!(simp("h3 - h0"), "0");
        assert_eq!(simp("1 - h0"), "!h0");
        assert_eq!(simp("(h0 - 0) - !0"), "0");
    }

    #[test]
    fn keeps_meaningful_structure() {
        assert_eq!(simp("(h0 - h3) + h1"), "((h0 - h3) + h1)");
        assert_eq!(simp("h2 · !h3"), "(h2 · !h3)");
        assert_eq!(simp("(h0 + h0) - (h3 · h3)"), "(h0 - h3)");
    }

    #[test]
    fn cascades_to_fixpoint() {
        // Substituting ∅ for dominant leaves leaves chains of literals.
        assert_eq!(simp("((0 + h2) - 0) + (h1 · 0)"), "h2");
        assert_eq!(simp("!(!h0 · 1) + (h1 · h0)"), "h0");
    }

    #[test]
    fn preserves_semantics_and_is_idempotent() {
        let s = scene();
        let d = EmptinessDecider::hierarchical(GridSpec::default());
        for t in ["((h0 + h0) · h2) - (h1 · h0)", "!(!h2 + 0) + (h3 - h3)", "(h0 · h2) + (h2 · h0) + h1"] {
            let n = CsgNode::parse(t).unwrap();
            let out = remove_redundancies(&s, &n, &d);
            assert!(out.size() <= n.size());
            assert!(grid_agreement(&s, &n, &out, None, 0.1).is_equal(), "{t}");
            assert_eq!(remove_redundancies(&s, &out, &d), out);
        }
    }
}
