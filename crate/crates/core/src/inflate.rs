//! Semantics-preserving tree growth used to build sub-optimal inputs.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsgError, Result};
use crate::ga::{evolve_with, prepare_samples, GaConfig};
use crate::sampling::{grid_agreement, GridSpec};
use crate::scene::Scene;
use crate::tree::CsgNode;

/// Largest subtree copied by one copy-based insertion.
const COPY_LIMIT: usize = 9;
const GRI_MAX_HALFSPACES: usize = 8;
const GRI_MAX_NODES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflateSpec {
    pub n_iter: usize,
    pub p_csi: f64,
    pub p_dni: f64,
    pub p_dli: f64,
    pub p_ali: f64,
    pub p_gri: f64,
    #[serde(default)]
    pub seed: u64,
}

impl InflateSpec {
    /// All strategies, ten rounds.
    pub const DATA_SET_1: InflateSpec = InflateSpec {
        n_iter: 10,
        p_csi: 1.0,
        p_dni: 1.0,
        p_dli: 1.0,
        p_ali: 1.0,
        p_gri: 1.0,
        seed: 0,
    };
    /// GA-based insertion only, twenty rounds.
    pub const DATA_SET_2: InflateSpec = InflateSpec {
        n_iter: 20,
        p_csi: 0.0,
        p_dni: 0.0,
        p_dli: 0.0,
        p_ali: 0.0,
        p_gri: 1.0,
        seed: 0,
    };

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_csi, self.p_dni, self.p_dli, self.p_ali, self.p_gri];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(CsgError::InvalidParameter("inflation probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

impl FromStr for InflateSpec {
    type Err = CsgError;

    /// `N:pc:pd:pl:pa:pg`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 6 {
            return Err(CsgError::Parse(format!("inflation spec needs 6 fields, got {s:?}")));
        }
        let n_iter = parts[0]
            .parse()
            .map_err(|_| CsgError::Parse(format!("bad iteration count {:?}", parts[0])))?;
        let mut p = [0.0; 5];
        for (slot, text) in p.iter_mut().zip(&parts[1..]) {
            *slot = text.parse().map_err(|_| CsgError::Parse(format!("bad probability {text:?}")))?;
        }
        let spec = InflateSpec {
            n_iter,
            p_csi: p[0],
            p_dni: p[1],
            p_dli: p[2],
            p_ali: p[3],
            p_gri: p[4],
            seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for InflateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}:{}:{}", self.n_iter, self.p_csi, self.p_dni, self.p_dli, self.p_ali, self.p_gri)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Strategy {
    Csi,
    Dni,
    Dli,
    Ali,
    Gri,
}

/// Inflated tree plus how often each strategy changed it.
#[derive(Debug, Clone, PartialEq)]
pub struct Inflation {
    pub tree: CsgNode,
    pub applied: Vec<(usize, Strategy)>,
}

pub fn inflate(scene: &Scene, spec: &InflateSpec) -> Result<CsgNode> {
    Ok(inflate_tree(scene, &scene.root, spec, &GridSpec::default())?.tree)
}

/// Runs `spec.n_iter` rounds; in each round every strategy fires with its
/// own probability, in the order CSI, DNI, DLI, ALI, GRI.
pub fn inflate_tree(scene: &Scene, root: &CsgNode, spec: &InflateSpec, grid: &GridSpec) -> Result<Inflation> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tree = root.clone();
    let mut applied = Vec::new();
    for round in 0..spec.n_iter {
        let plan = [
            (Strategy::Csi, spec.p_csi),
            (Strategy::Dni, spec.p_dni),
            (Strategy::Dli, spec.p_dli),
            (Strategy::Ali, spec.p_ali),
            (Strategy::Gri, spec.p_gri),
        ];
        for (strategy, p) in plan {
            if !rng.gen_bool(p) {
                continue;
            }
            let next = match strategy {
                Strategy::Csi => Some(csi(&tree, &mut rng)),
                Strategy::Dni => Some(dni(&tree, &mut rng)),
                Strategy::Dli => dli(&tree, &mut rng),
                Strategy::Ali => Some(ali(scene, &tree, &mut rng)),
                Strategy::Gri => gri(scene, &tree, grid, &mut rng)?,
            };
            if let Some(t) = next {
                tree = t;
                applied.push((round, strategy));
            }
        }
    }
    Ok(Inflation { tree, applied })
}

fn small_positions(tree: &CsgNode, limit: usize) -> Vec<usize> {
    tree.preorder_sizes()
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s <= limit)
        .map(|(i, _)| i)
        .collect()
}

fn pick(tree: &CsgNode, limit: usize, rng: &mut ChaCha8Rng) -> (usize, CsgNode) {
    let at = *small_positions(tree, limit).choose(rng).expect("leaves are always small");
    (at, tree.subtree(at).expect("index in range").clone())
}

/// `X → X + X` or `X · X`.
pub fn csi(tree: &CsgNode, rng: &mut ChaCha8Rng) -> CsgNode {
    let (at, x) = pick(tree, COPY_LIMIT, rng);
    let grown = if rng.gen_bool(0.5) {
        CsgNode::union(x.clone(), x)
    } else {
        CsgNode::inter(x.clone(), x)
    };
    tree.with_subtree(at, grown)
}

/// `X → !!X` at any position.
pub fn dni(tree: &CsgNode, rng: &mut ChaCha8Rng) -> CsgNode {
    let at = rng.gen_range(0..tree.size());
    let x = tree.subtree(at).expect("index in range").clone();
    tree.with_subtree(at, CsgNode::comp(CsgNode::comp(x)))
}

/// Distributes `A · (B + C)` or `A + (B · C)` where `A` is small.
pub fn dli(tree: &CsgNode, rng: &mut ChaCha8Rng) -> Option<CsgNode> {
    let expand = |node: &CsgNode| -> Option<CsgNode> {
        use CsgNode::*;
        let (outer_inter, a, inner) = match node {
            Intersection(l, r) => match (&**l, &**r) {
                (_, Union(..)) if l.size() <= COPY_LIMIT => (true, l, r),
                (Union(..), _) if r.size() <= COPY_LIMIT => (true, r, l),
                _ => return None,
            },
            Union(l, r) => match (&**l, &**r) {
                (_, Intersection(..)) if l.size() <= COPY_LIMIT => (false, l, r),
                (Intersection(..), _) if r.size() <= COPY_LIMIT => (false, r, l),
                _ => return None,
            },
            _ => return None,
        };
        let (_, b, c) = inner.binary_op()?;
        let (a, b, c) = ((**a).clone(), b.clone(), c.clone());
        Some(if outer_inter {
            CsgNode::union(CsgNode::inter(a.clone(), b), CsgNode::inter(a, c))
        } else {
            CsgNode::inter(CsgNode::union(a.clone(), b), CsgNode::union(a, c))
        })
    };
    let candidates: Vec<(usize, CsgNode)> = (0..tree.size())
        .filter_map(|i| expand(tree.subtree(i)?).map(|n| (i, n)))
        .collect();
    let (at, grown) = candidates.choose(rng)?.clone();
    Some(tree.with_subtree(at, grown))
}

/// `A → A + (A · h)` or `A · (A + h)`, preferring a halfspace whose box
/// meets the box of `A`.
pub fn ali(scene: &Scene, tree: &CsgNode, rng: &mut ChaCha8Rng) -> CsgNode {
    let (at, a) = pick(tree, COPY_LIMIT, rng);
    let abox = scene.node_aabb(&a);
    let ids = scene.ids();
    let near: Vec<u32> = ids
        .iter()
        .copied()
        .filter(|id| !scene.halfspace(*id).expect("scene id").aabb().intersection(&abox).is_empty())
        .collect();
    let pool = if near.is_empty() { &ids } else { &near };
    let h = CsgNode::leaf(*pool.choose(rng).expect("scene has halfspaces"));
    let grown = if rng.gen_bool(0.5) {
        CsgNode::union(a.clone(), CsgNode::inter(a, h))
    } else {
        CsgNode::inter(a.clone(), CsgNode::union(a, h))
    };
    tree.with_subtree(at, grown)
}

/// GA settings for one insertion: rewards larger, less coherent trees.
pub fn gri_config(seed: u64, target_size: usize) -> GaConfig {
    GaConfig {
        population: 50,
        max_iters: 100,
        stall_iters: 100,
        beta: -1.0,
        gamma: -10.0,
        seed,
        max_size: Some(target_size + 6),
        ..GaConfig::default()
    }
}

/// Replaces a random small subtree by a larger equivalent one grown by the
/// GA. Skips the firing when the grown tree is not larger or fails the
/// lattice check.
pub fn gri(scene: &Scene, tree: &CsgNode, grid: &GridSpec, rng: &mut ChaCha8Rng) -> Result<Option<CsgNode>> {
    let positions: Vec<usize> = tree
        .preorder_sizes()
        .into_iter()
        .enumerate()
        .filter(|&(i, s)| {
            s <= GRI_MAX_NODES
                && tree
                    .subtree(i)
                    .is_some_and(|n| n.halfspace_ids().len() <= GRI_MAX_HALFSPACES && !n.halfspace_ids().is_empty())
        })
        .map(|(i, _)| i)
        .collect();
    let Some(&at) = positions.choose(rng) else {
        return Ok(None);
    };
    let target = tree.subtree(at).expect("index in range").clone();
    let cfg = gri_config(rng.gen(), target.size());
    let samples = prepare_samples(scene, &target, grid);
    let result = evolve_with(scene, &target, &cfg, &samples)?;
    if !result.best_score.is_exact() || result.best.size() <= target.size() {
        return Ok(None);
    }
    if !grid_agreement(scene, &target, &result.best, None, grid.cell_size).is_equal() {
        log::debug!("grown subtree rejected by lattice check");
        return Ok(None);
    }
    Ok(Some(tree.with_subtree(at, result.best)))
}
