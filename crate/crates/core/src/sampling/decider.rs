use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::octree::{find_dominance_hierarchical, is_empty_hierarchical, Dominance, OctreeOptions};
use super::{enumerate_cits, Cit, GridSpec};
use crate::scene::Scene;
use crate::tree::CsgNode;

#[derive(Debug, Clone)]
pub enum Strategy {
    Hierarchical,
    /// CITs of the original full tree over every scene halfspace.
    CitBased(Arc<Vec<Cit>>),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Hierarchical => "hierarchical",
            Strategy::CitBased(_) => "cit",
        }
    }
}

/// True iff `node` is positive at every CIT witness.
pub fn is_empty_citbased(scene: &Scene, node: &CsgNode, cits: &[Cit]) -> bool {
    match node {
        CsgNode::Empty => true,
        CsgNode::Universe => false,
        _ => cits.iter().all(|c| scene.eval(node, &c.witness) > 0.0),
    }
}

/// Dominance of `id` over `node` judged on the witnesses of CITs inside `id`.
pub fn find_dominance_citbased(scene: &Scene, node: &CsgNode, id: u32, cits: &[Cit]) -> Dominance {
    let Some(pos) = scene.index(id) else {
        return Dominance::Indeterminate;
    };
    let (mut seen_in, mut seen_out) = (false, false);
    for c in cits.iter().filter(|c| c.signs.get(pos)) {
        if scene.eval(node, &c.witness) <= 0.0 {
            seen_in = true;
        } else {
            seen_out = true;
        }
        if seen_in && seen_out {
            return Dominance::Mixed;
        }
    }
    match (seen_in, seen_out) {
        (true, false) => Dominance::Add,
        (false, true) => Dominance::Subtract,
        _ => Dominance::Indeterminate,
    }
}

/// Empty-set oracle with a cache of proven-empty expressions.
///
/// Largest id count for the truth-table shortcut.
const TRUTH_TABLE_VARS: usize = 10;

/// False under every membership assignment, hence empty in any scene.
fn unsatisfiable(node: &CsgNode) -> bool {
    let ids: Vec<u32> = node.halfspace_ids().into_iter().collect();
    if ids.len() > TRUTH_TABLE_VARS {
        return false;
    }
    (0u32..1 << ids.len()).all(|bits| {
        let inside = |id: u32| ids.binary_search(&id).is_ok_and(|i| bits >> i & 1 == 1);
        !node.eval_bool(&inside)
    })
}

/// The cache is keyed by canonical hash and shared across threads.
#[derive(Debug)]
pub struct EmptinessDecider {
    pub strategy: Strategy,
    pub grid: GridSpec,
    cache: Mutex<HashSet<u64>>,
    queries: AtomicU64,
    hits: AtomicU64,
}

impl Clone for EmptinessDecider {
    fn clone(&self) -> Self {
        EmptinessDecider::new(self.strategy.clone(), self.grid)
    }
}

impl EmptinessDecider {
    pub fn new(strategy: Strategy, grid: GridSpec) -> Self {
        EmptinessDecider {
            strategy,
            grid,
            cache: Mutex::new(HashSet::new()),
            queries: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn hierarchical(grid: GridSpec) -> Self {
        Self::new(Strategy::Hierarchical, grid)
    }

    /// CIT-based decider for `root`, enumerating CITs over the scene box.
    pub fn cit_based(scene: &Scene, root: &CsgNode, grid: GridSpec) -> Self {
        Self::new(Strategy::CitBased(Arc::new(enumerate_cits(scene, root, &grid))), grid)
    }

    pub fn is_empty(&self, scene: &Scene, node: &CsgNode) -> bool {
        match node {
            CsgNode::Empty => return true,
            CsgNode::Universe | CsgNode::Leaf(_) => return false,
            _ => {}
        }
        self.queries.fetch_add(1, Ordering::Relaxed);
        let key = node.canonical_hash();
        if self.cache.lock().expect("cache lock").contains(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return true;
        }
        let empty = unsatisfiable(node)
            || match &self.strategy {
            Strategy::Hierarchical => is_empty_hierarchical(scene, node, &self.grid),
                Strategy::CitBased(cits) => is_empty_citbased(scene, node, cits),
            };
        if empty {
            self.cache.lock().expect("cache lock").insert(key);
        }
        empty
    }

    /// `a ⊆ b`, decided as emptiness of `a ∩ ¬b`.
    pub fn is_subset(&self, scene: &Scene, a: &CsgNode, b: &CsgNode) -> bool {
        self.is_empty(scene, &CsgNode::diff(a.clone(), b.clone()))
    }

    pub fn disjoint(&self, scene: &Scene, a: &CsgNode, b: &CsgNode) -> bool {
        self.is_empty(scene, &CsgNode::inter(a.clone(), b.clone()))
    }

    pub fn sets_identical(&self, scene: &Scene, a: &CsgNode, b: &CsgNode) -> bool {
        a == b || (self.is_subset(scene, a, b) && self.is_subset(scene, b, a))
    }

    pub fn dominance(&self, scene: &Scene, node: &CsgNode, id: u32) -> Dominance {
        match &self.strategy {
            Strategy::Hierarchical => find_dominance_hierarchical(scene, node, id, &self.grid, OctreeOptions::default()),
            Strategy::CitBased(cits) => find_dominance_citbased(scene, node, id, cits),
        }
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// (non-literal queries, cache hits)
    pub fn counters(&self) -> (u64, u64) {
        (self.queries.load(Ordering::Relaxed), self.hits.load(Ordering::Relaxed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_table_shortcut() {
        for (text, unsat) in [("h1 - h1", true), ("h0 · !h0 · h2", true), ("(h0 + h1) - (h1 + h0)", true), ("h0 · h1", false), ("h0 - h1", false)] {
            assert_eq!(unsatisfiable(&CsgNode::parse(text).unwrap()), unsat, "{text}");
        }
    }
    use crate::geometry::{Halfspace, Shape};

    fn scene() -> Scene {
        Scene::new(
            "d",
            vec![
                Halfspace::new(0, Shape::sphere([0.0; 3], 1.0)),
                Halfspace::new(1, Shape::sphere([3.0, 0.0, 0.0], 1.0)),
                Halfspace::new(2, Shape::sphere([0.3, 0.0, 0.0], 0.4)),
            ],
            CsgNode::parse("(h0 - h2) + h1").unwrap(),
        )
        .unwrap()
    }

    fn deciders(s: &Scene) -> [EmptinessDecider; 2] {
        [
            EmptinessDecider::hierarchical(GridSpec::default()),
            EmptinessDecider::cit_based(s, &s.root, GridSpec::default()),
        ]
    }

    #[test]
    fn literal_and_set_decisions() {
        let s = scene();
        for d in deciders(&s) {
            assert!(d.is_empty(&s, &CsgNode::Empty));
            assert!(!d.is_empty(&s, &CsgNode::Universe));
            assert!(d.is_empty(&s, &CsgNode::parse("h0 · h1").unwrap()), "{}", d.strategy.name());
            assert!(!d.is_empty(&s, &CsgNode::parse("h0 · h2").unwrap()));
            assert!(d.sets_identical(&s, &CsgNode::parse("h0 + h0").unwrap(), &CsgNode::leaf(0)));
            assert!(!d.sets_identical(&s, &CsgNode::leaf(0), &CsgNode::leaf(1)));
            assert!(d.is_subset(&s, &CsgNode::leaf(2), &CsgNode::leaf(0)));
            assert_eq!(d.dominance(&s, &s.root, 2), Dominance::Subtract);
            assert_eq!(d.dominance(&s, &s.root, 1), Dominance::Add);
            assert_eq!(d.dominance(&s, &s.root, 0), Dominance::Mixed);
        }
    }

    #[test]
    fn cache_is_transparent() {
        let s = scene();
        let d = EmptinessDecider::hierarchical(GridSpec::default());
        let exprs: Vec<CsgNode> = ["h0 · h1", "h2 - h0", "h0 - h2", "h1 · !h1", "h1 · h0"]
            .iter()
            .map(|t| CsgNode::parse(t).unwrap())
            .collect();
        let cold: Vec<bool> = exprs.iter().map(|e| d.is_empty(&s, e)).collect();
        let warm: Vec<bool> = exprs.iter().map(|e| d.is_empty(&s, e)).collect();
        assert_eq!(cold, warm);
        assert_eq!(d.cache_len(), cold.iter().filter(|e| **e).count() - 1);
        assert!(d.counters().1 >= 1);
        d.clear_cache();
        let cleared: Vec<bool> = exprs.iter().map(|e| d.is_empty(&s, e)).collect();
        assert_eq!(cold, cleared);
    }
}
