//! Dominant halfspace decomposition.
//!
//! A halfspace `h` dominates `S` when `h ⊆ S` and dominates the complement
//! when `h ∩ S = ∅`. Then `S = S[h:=∅] ∪ h` or `S = S[h:=∅] − h`, so every
//! dominant leaf can be replaced by `∅` and re-applied as a chain factor.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::proximity;
use crate::sampling::{grid_agreement, Dominance, EmptinessDecider};
use crate::scene::Scene;
use crate::simplify::remove_redundancies;
use crate::tree::CsgNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ChainOp {
    /// Union with the halfspace (`+`).
    Add,
    /// Difference with the halfspace (`−`).
    Subtract,
}

impl ChainOp {
    pub fn apply(self, acc: CsgNode, id: u32) -> CsgNode {
        match self {
            ChainOp::Add => CsgNode::union(acc, CsgNode::leaf(id)),
            ChainOp::Subtract => CsgNode::diff(acc, CsgNode::leaf(id)),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            ChainOp::Add => '+',
            ChainOp::Subtract => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Applied first to last around `remaining`.
    pub chain: Vec<(u32, ChainOp)>,
    pub remaining: CsgNode,
    pub remaining_halfspaces: BTreeSet<u32>,
    /// Working tree after each round that found dominants.
    pub rounds: Vec<CsgNode>,
}

impl Decomposition {
    /// `((remaining ⊕ d1) ⊕ …) ⊕ dn` without any literal folding.
    pub fn reassemble_raw(&self) -> CsgNode {
        self.reassemble_around(self.remaining.clone())
    }

    pub fn reassemble_around(&self, remaining: CsgNode) -> CsgNode {
        self.chain.iter().fold(remaining, |acc, &(id, op)| op.apply(acc, id))
    }

    /// Reassembly with an empty remaining solid folded away: leading
    /// subtractions from `∅` vanish and `∅ + h` becomes `h`.
    pub fn reassemble(&self) -> CsgNode {
        reassemble_folded(&self.remaining, &self.chain)
    }

    /// Folded reassembly around a replacement for the remaining solid.
    pub fn reassemble_with(&self, remaining: &CsgNode) -> CsgNode {
        reassemble_folded(remaining, &self.chain)
    }
}

pub(crate) fn reassemble_folded(remaining: &CsgNode, chain: &[(u32, ChainOp)]) -> CsgNode {
    let mut acc = match remaining {
        CsgNode::Empty => None,
        other => Some(other.clone()),
    };
    for &(id, op) in chain {
        acc = match (acc, op) {
            (None, ChainOp::Add) => Some(CsgNode::leaf(id)),
            (None, ChainOp::Subtract) => None,
            (Some(a), op) => Some(op.apply(a, id)),
        };
    }
    acc.unwrap_or(CsgNode::Empty)
}

/// Dominant halfspaces of `node`, subtractions first, then ascending id.
pub fn find_dominant(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider) -> Vec<(u32, ChainOp)> {
    let ids: Vec<u32> = node.halfspace_ids().into_iter().collect();
    let mut out: Vec<(u32, ChainOp)> = ids
        .par_iter()
        .filter_map(|&id| match decider.dominance(scene, node, id) {
            Dominance::Add => Some((id, ChainOp::Add)),
            Dominance::Subtract => Some((id, ChainOp::Subtract)),
            Dominance::Mixed | Dominance::Indeterminate => None,
        })
        .collect();
    out.sort_by_key(|&(id, op)| (std::cmp::Reverse(op), id));
    out
}

/// Repeatedly extracts dominant halfspaces and simplifies what remains.
/// Factors of later rounds are applied first.
pub fn decompose(scene: &Scene, node: &CsgNode, decider: &EmptinessDecider) -> Decomposition {
    let mut chain: Vec<(u32, ChainOp)> = Vec::new();
    let mut rounds = Vec::new();
    let mut work = node.clone();
    while !work.is_empty_literal() {
        let dominants = find_dominant(scene, &work, decider);
        if dominants.is_empty() {
            break;
        }
        let ids: BTreeSet<u32> = dominants.iter().map(|d| d.0).collect();
        work = remove_redundancies(scene, &work.substitute_empty(&ids), decider);
        if decider.is_empty(scene, &work) {
            work = CsgNode::Empty;
        }
        rounds.push(work.clone());
        chain.splice(0..0, dominants);
    }
    Decomposition {
        remaining_halfspaces: work.halfspace_ids(),
        remaining: work,
        chain,
        rounds,
    }
}

/// Greedily moves overlapping factors forward so each partial result meets
/// the next halfspace. Moves that change the solid on the verification
/// lattice are rejected; a result with lower proximity is discarded.
pub fn sort_chain(scene: &Scene, decomp: &Decomposition, decider: &EmptinessDecider) -> Decomposition {
    let n = decomp.chain.len();
    if n < 2 {
        return decomp.clone();
    }
    let reference = decomp.reassemble();
    let step = decider.grid.cell_size;
    let mut cur = decomp.chain.clone();
    for i in 0..n {
        let partial = reassemble_folded(&decomp.remaining, &cur[..i]);
        if partial.is_empty_literal() {
            continue;
        }
        for j in i + 1..n {
            let (id, op) = cur[j];
            if decider.disjoint(scene, &partial, &CsgNode::leaf(id)) {
                continue;
            }
            if cur[i..j].iter().all(|&(other, _)| decider.disjoint(scene, &partial, &CsgNode::leaf(other))) {
                let mut moved = cur.clone();
                let item = moved.remove(j);
                moved.insert(i, item);
                let commute = cur[i..j].iter().all(|&(_, o)| o == op);
                if commute || grid_agreement(scene, &reference, &reassemble_folded(&decomp.remaining, &moved), None, step).is_equal() {
                    cur = moved;
                }
            }
            break;
        }
    }
    let sorted = Decomposition {
        chain: cur,
        ..decomp.clone()
    };
    if proximity(scene, &sorted.reassemble(), decider) + 1e-12 < proximity(scene, &reference, decider) {
        decomp.clone()
    } else {
        sorted
    }
}
