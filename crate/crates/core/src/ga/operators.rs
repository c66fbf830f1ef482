//! Random trees, mutation and crossover over binary-operation trees.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::tree::{BinaryOp, CsgNode};

/// Random tree over `ids` with at most `max_size` nodes (at least one leaf).
pub fn random_tree<R: Rng>(rng: &mut R, ids: &[u32], max_size: usize) -> CsgNode {
    if max_size < 3 || rng.gen_bool(0.3) {
        return CsgNode::leaf(*ids.choose(rng).expect("non-empty id set"));
    }
    let budget = max_size - 1;
    let left_budget = rng.gen_range(1..budget.max(2));
    let right_budget = budget.saturating_sub(left_budget).max(1);
    let op = *BinaryOp::ALL.choose(rng).expect("three ops");
    op.apply(random_tree(rng, ids, left_budget), random_tree(rng, ids, right_budget))
}

fn random_depth_tree<R: Rng>(rng: &mut R, ids: &[u32], depth: usize) -> CsgNode {
    if depth == 0 || rng.gen_bool(0.4) {
        return CsgNode::leaf(*ids.choose(rng).expect("non-empty id set"));
    }
    let op = *BinaryOp::ALL.choose(rng).expect("three ops");
    op.apply(random_depth_tree(rng, ids, depth - 1), random_depth_tree(rng, ids, depth - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    ReplaceSubtree,
    ChangeOp,
    SwapLeaf,
    Collapse,
    Wrap,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::ReplaceSubtree,
        Mutation::ChangeOp,
        Mutation::SwapLeaf,
        Mutation::Collapse,
        Mutation::Wrap,
    ];
}

fn indices_where(tree: &CsgNode, pred: impl Fn(&CsgNode) -> bool) -> Vec<usize> {
    (0..tree.size()).filter(|&i| tree.subtree(i).is_some_and(&pred)).collect()
}

/// Applies `kind` at a random position; falls back to subtree replacement
/// when the tree has no suitable node.
pub fn apply_mutation<R: Rng>(tree: &CsgNode, kind: Mutation, ids: &[u32], rng: &mut R) -> CsgNode {
    let ops = indices_where(tree, |n| n.binary_op().is_some());
    match kind {
        Mutation::ChangeOp if !ops.is_empty() => {
            let at = *ops.choose(rng).expect("non-empty");
            let (op, l, r) = tree.subtree(at).and_then(|n| n.binary_op()).expect("binary node");
            let others: Vec<BinaryOp> = BinaryOp::ALL.into_iter().filter(|o| *o != op).collect();
            let new_op = *others.choose(rng).expect("two other ops");
            tree.with_subtree(at, new_op.apply(l.clone(), r.clone()))
        }
        Mutation::SwapLeaf => {
            let leaves = indices_where(tree, CsgNode::is_leaf);
            let at = *leaves.choose(rng).expect("trees have leaves");
            tree.with_subtree(at, CsgNode::leaf(*ids.choose(rng).expect("non-empty id set")))
        }
        Mutation::Collapse if !ops.is_empty() => {
            let at = *ops.choose(rng).expect("non-empty");
            let (_, l, r) = tree.subtree(at).and_then(|n| n.binary_op()).expect("binary node");
            let keep = if rng.gen_bool(0.5) { l } else { r };
            tree.with_subtree(at, keep.clone())
        }
        Mutation::Wrap => {
            let at = rng.gen_range(0..tree.size());
            let sub = tree.subtree(at).expect("index in range").clone();
            let leaf = CsgNode::leaf(*ids.choose(rng).expect("non-empty id set"));
            let op = *BinaryOp::ALL.choose(rng).expect("three ops");
            let wrapped = if rng.gen_bool(0.5) { op.apply(sub, leaf) } else { op.apply(leaf, sub) };
            tree.with_subtree(at, wrapped)
        }
        _ => {
            let at = rng.gen_range(0..tree.size());
            tree.with_subtree(at, random_depth_tree(rng, ids, 2))
        }
    }
}

pub fn mutate<R: Rng>(tree: &CsgNode, ids: &[u32], rng: &mut R) -> CsgNode {
    let kind = *Mutation::ALL.choose(rng).expect("five kinds");
    apply_mutation(tree, kind, ids, rng)
}

/// Swaps uniformly chosen subtrees of `a` and `b`.
pub fn crossover<R: Rng>(a: &CsgNode, b: &CsgNode, rng: &mut R) -> (CsgNode, CsgNode) {
    let ia = rng.gen_range(0..a.size());
    let ib = rng.gen_range(0..b.size());
    let sa = a.subtree(ia).expect("index in range").clone();
    let sb = b.subtree(ib).expect("index in range").clone();
    (a.with_subtree(ia, sb), b.with_subtree(ib, sa))
}
