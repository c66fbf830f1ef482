//! Genetic search over trees built from the halfspaces of a target solid.
//!
//! Fitness is `α·f_geo + β·f_prox + γ·f_size`. Geometry and proximity are
//! judged on one witness point per CIT of the target, inside and outside,
//! so a creature is evaluated as value vectors over those witnesses.

pub mod operators;

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CsgError, Result};
use crate::geometry::{Aabb, Vec3};
use crate::sampling::{enumerate_cits_for, GridSpec};
use crate::scene::Scene;
use crate::tree::CsgNode;

pub use operators::{apply_mutation, crossover, mutate, random_tree, Mutation};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub tournament_k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub max_iters: usize,
    pub stall_iters: usize,
    pub epsilon_p: f64,
    pub elitism: usize,
    pub seed: u64,
    /// Creatures above this size are replaced by their parent; `None`
    /// allows `max(2·#target, #target + 10)`.
    pub max_size: Option<usize>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 150,
            mutation_rate: 0.3,
            crossover_rate: 0.4,
            tournament_k: 2,
            alpha: 50.0,
            beta: 1.0,
            gamma: 10.0,
            max_iters: 1000,
            stall_iters: 500,
            epsilon_p: 0.01,
            elitism: 2,
            seed: 0,
            max_size: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CsgError::InvalidParameter(m.into()));
        if !(0.0..=1.0).contains(&self.mutation_rate) || !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("GA rates must lie in [0, 1]");
        }
        if self.population < 2 {
            return bad("GA population must be at least 2");
        }
        if self.tournament_k == 0 {
            return bad("tournament size must be positive");
        }
        if ![self.alpha, self.beta, self.gamma, self.epsilon_p].iter().all(|w| w.is_finite()) {
            return bad("GA weights must be finite");
        }
        if self.elitism > self.population {
            return bad("elitism exceeds population");
        }
        Ok(())
    }
}

/// Witnesses of the target's CITs split by inside flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePartition {
    pub s_in: Vec<Vec3>,
    pub s_out: Vec<Vec3>,
    pub region: Aabb,
}

/// CITs over the target's halfspaces in their joint box padded by two
/// cells, so the CIT outside every halfspace is always present.
pub fn prepare_samples(scene: &Scene, target: &CsgNode, grid: &GridSpec) -> SamplePartition {
    let ids = target.halfspace_ids();
    let region = scene.aabb_of_ids(&ids).padded(2.0 * grid.cell_size);
    let cits = enumerate_cits_for(scene, target, &ids, &region, grid.cell_size);
    let (inside, outside): (Vec<_>, Vec<_>) = cits.into_iter().partition(|c| c.inside);
    SamplePartition {
        s_in: inside.into_iter().map(|c| c.witness).collect(),
        s_out: outside.into_iter().map(|c| c.witness).collect(),
        region,
    }
}

/// Population size range used by the size score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PopStats {
    pub min_size: usize,
    pub max_size: usize,
}

impl PopStats {
    pub fn of<'a>(sizes: impl IntoIterator<Item = &'a usize>) -> PopStats {
        let (mut lo, mut hi) = (usize::MAX, 0);
        for &s in sizes {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        PopStats { min_size: lo, max_size: hi }
    }

    /// 1 for the smallest creature, 0 for the largest, 0 when all are equal.
    pub fn size_score(&self, size: usize) -> f64 {
        if self.max_size <= self.min_size {
            return 0.0;
        }
        ((self.max_size as f64 - size as f64) / (self.max_size - self.min_size) as f64).clamp(0.0, 1.0)
    }
}

/// Size-independent parts of a creature's score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    /// `f_in + f_out`, in `[0, 2]`.
    pub geo: f64,
    pub proximity: f64,
    pub size: usize,
}

impl Score {
    pub fn is_exact(&self) -> bool {
        self.geo >= 2.0
    }

    pub fn fitness(&self, cfg: &GaConfig, stats: &PopStats) -> f64 {
        cfg.alpha * self.geo + cfg.beta * self.proximity + cfg.gamma * stats.size_score(self.size)
    }
}

/// Evaluates creatures on a fixed sample partition.
pub struct Evaluator<'a> {
    scene: &'a Scene,
    n_in: usize,
    points: usize,
    /// Halfspace values at all samples (`s_in` first), by scene position.
    rows: Vec<Option<Vec<f64>>>,
    epsilon_p: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(scene: &'a Scene, samples: &SamplePartition, ids: &[u32], epsilon_p: f64) -> Self {
        let pts: Vec<&Vec3> = samples.s_in.iter().chain(&samples.s_out).collect();
        let mut rows = vec![None; scene.halfspaces().len()];
        for id in ids {
            if let Some(pos) = scene.index(*id) {
                let h = &scene.halfspaces()[pos];
                rows[pos] = Some(pts.iter().map(|p| h.sdf(p)).collect());
            }
        }
        if samples.s_in.is_empty() || samples.s_out.is_empty() {
            log::debug!("empty sample side, its geometric term counts as satisfied");
        }
        Evaluator {
            scene,
            n_in: samples.s_in.len(),
            points: pts.len(),
            rows,
            epsilon_p,
        }
    }

    fn values(&self, node: &CsgNode, prox: &mut f64) -> Vec<f64> {
        match node {
            CsgNode::Leaf(id) => {
                *prox += 1.0;
                let pos = self.scene.index(*id).expect("leaf id resolves");
                self.rows[pos].clone().expect("creature uses sampled halfspaces")
            }
            CsgNode::Empty => {
                *prox += 1.0;
                vec![crate::scene::LARGE; self.points]
            }
            CsgNode::Universe => {
                *prox += 1.0;
                vec![-crate::scene::LARGE; self.points]
            }
            CsgNode::Complement(c) => {
                let mut v = self.values(c, prox);
                *prox += 1.0;
                v.iter_mut().for_each(|x| *x = -*x);
                v
            }
            _ => {
                let (op, l, r) = node.binary_op().expect("binary node");
                let mut a = self.values(l, prox);
                let b = self.values(r, prox);
                if a.iter().zip(&b).any(|(x, y)| *x <= 0.0 && *y <= 0.0) {
                    *prox += 1.0;
                }
                use crate::tree::BinaryOp::*;
                for (x, y) in a.iter_mut().zip(&b) {
                    *x = match op {
                        Union => x.min(*y),
                        Intersection => x.max(*y),
                        Difference => x.max(-*y),
                    };
                }
                a
            }
        }
    }

    pub fn score(&self, node: &CsgNode) -> Score {
        let mut prox = 0.0;
        let v = self.values(node, &mut prox);
        let (vin, vout) = v.split_at(self.n_in);
        let frac = |hits: usize, total: usize| if total == 0 { 1.0 } else { hits as f64 / total as f64 };
        let f_in = frac(vin.iter().filter(|x| **x <= self.epsilon_p).count(), vin.len());
        let f_out = frac(vout.iter().filter(|x| **x > self.epsilon_p).count(), vout.len());
        let size = node.size();
        Score {
            geo: f_in + f_out,
            proximity: prox / size as f64,
            size,
        }
    }
}

/// Weighted fitness of one creature against a population size range.
pub fn fitness(scene: &Scene, creature: &CsgNode, samples: &SamplePartition, cfg: &GaConfig, stats: &PopStats) -> f64 {
    let ids: Vec<u32> = creature.halfspace_ids().into_iter().collect();
    Evaluator::new(scene, samples, &ids, cfg.epsilon_p).score(creature).fitness(cfg, stats)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveEntry {
    #[serde(skip)]
    pub tree: CsgNode,
    pub size: usize,
    pub proximity: f64,
    /// Geometric score normalized to `[0, 1]`; always 1 in the archive.
    pub geo_score: f64,
}

/// Every distinct creature that classified all samples correctly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaArchive {
    pub entries: Vec<ArchiveEntry>,
    seen: HashSet<(usize, u64, u64)>,
}

impl GaArchive {
    pub fn insert(&mut self, tree: &CsgNode, score: &Score) -> bool {
        if !score.is_exact() {
            return false;
        }
        let key = (score.size, score.proximity.to_bits(), tree.structural_hash());
        if !self.seen.insert(key) {
            return false;
        }
        self.entries.push(ArchiveEntry {
            tree: tree.clone(),
            size: score.size,
            proximity: score.proximity,
            geo_score: score.geo / 2.0,
        });
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Highest fitness with sizes normalized over the archive itself.
    pub fn best(&self, cfg: &GaConfig) -> Option<&ArchiveEntry> {
        let stats = PopStats::of(self.entries.iter().map(|e| &e.size));
        self.entries
            .iter()
            .map(|e| {
                let s = Score {
                    geo: 2.0 * e.geo_score,
                    proximity: e.proximity,
                    size: e.size,
                };
                (s.fitness(cfg, &stats), e)
            })
            .fold(None, |best: Option<(f64, &ArchiveEntry)>, cur| match best {
                Some(b) if b.0 >= cur.0 => Some(b),
                _ => Some(cur),
            })
            .map(|b| b.1)
    }

    /// CSV with columns `size,proximity,geo_score,tree`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["size", "proximity", "geo_score", "tree"])?;
        for e in &self.entries {
            w.write_record([e.size.to_string(), e.proximity.to_string(), e.geo_score.to_string(), e.tree.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-generation summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Generation {
    pub index: usize,
    pub best_fitness: f64,
    /// Best fitness seen in any generation so far.
    pub best_ever: f64,
    pub max_geo: f64,
    pub min_size: usize,
    pub max_size: usize,
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub best: CsgNode,
    pub best_score: Score,
    pub archive: GaArchive,
    pub history: Vec<Generation>,
}

fn creature_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut s = seed ^ 0x9E37_79B9_7F4A_7C15;
    s = s.wrapping_mul(0xBF58_476D_1CE4_E5B9) ^ generation as u64;
    s = s.wrapping_mul(0x94D0_49BB_1331_11EB) ^ slot as u64;
    ChaCha8Rng::seed_from_u64(s)
}

fn tournament<R: Rng>(rng: &mut R, fitness: &[f64], k: usize) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..k {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

/// Evolves trees over the halfspaces of `target` with samples from `grid`.
pub fn evolve(scene: &Scene, target: &CsgNode, cfg: &GaConfig, grid: &GridSpec) -> Result<GaResult> {
    let samples = prepare_samples(scene, target, grid);
    evolve_with(scene, target, cfg, &samples)
}

/// Generational loop with elitism; deterministic for a fixed seed.
pub fn evolve_with(scene: &Scene, target: &CsgNode, cfg: &GaConfig, samples: &SamplePartition) -> Result<GaResult> {
    cfg.validate()?;
    scene.check_tree(target)?;
    let ids: Vec<u32> = target.halfspace_ids().into_iter().collect();
    if ids.is_empty() {
        return Err(CsgError::InvalidParameter("GA target has no halfspaces".into()));
    }
    let eval = Evaluator::new(scene, samples, &ids, cfg.epsilon_p);
    let target_size = target.size();
    let cap = cfg.max_size.unwrap_or((2 * target_size).max(target_size + 10));

    let mut init_rng = creature_rng(cfg.seed, usize::MAX, 0);
    let copies = cfg.population / 2;
    let mut pop: Vec<CsgNode> = (0..cfg.population)
        .map(|i| if i < copies { target.clone() } else { random_tree(&mut init_rng, &ids, target_size) })
        .collect();

    let mut archive = GaArchive::default();
    let mut history = Vec::new();
    let mut best_ever = f64::NEG_INFINITY;
    let mut stall = 0;

    for generation in 0..cfg.max_iters.max(1) {
        let scores: Vec<Score> = pop.par_iter().map(|c| eval.score(c)).collect();
        let stats = PopStats::of(scores.iter().map(|s| &s.size));
        let fit: Vec<f64> = scores.iter().map(|s| s.fitness(cfg, &stats)).collect();
        for (c, s) in pop.iter().zip(&scores) {
            archive.insert(c, s);
        }

        let gen_best = fit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let rounded = (gen_best * 1e9).round() / 1e9;
        if rounded > best_ever {
            best_ever = rounded;
            stall = 0;
        } else {
            stall += 1;
        }
        history.push(Generation {
            index: generation,
            best_fitness: gen_best,
            best_ever,
            max_geo: scores.iter().map(|s| s.geo).fold(0.0, f64::max),
            min_size: stats.min_size,
            max_size: stats.max_size,
        });
        if stall >= cfg.stall_iters || generation + 1 >= cfg.max_iters {
            let (best, best_score) = final_best(&pop, &scores, &fit, &archive, cfg);
            return Ok(GaResult {
                best,
                best_score,
                archive,
                history,
            });
        }

        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let elites: Vec<CsgNode> = order[..cfg.elitism].iter().map(|&i| pop[i].clone()).collect();

        let offspring: Vec<CsgNode> = (cfg.elitism..cfg.population)
            .into_par_iter()
            .map(|slot| {
                let mut rng = creature_rng(cfg.seed, generation, slot);
                let p = tournament(&mut rng, &fit, cfg.tournament_k);
                let mut child = pop[p].clone();
                if rng.gen_bool(cfg.crossover_rate) {
                    let q = tournament(&mut rng, &fit, cfg.tournament_k);
                    let (a, b) = crossover(&pop[p], &pop[q], &mut rng);
                    child = if rng.gen_bool(0.5) { a } else { b };
                }
                if rng.gen_bool(cfg.mutation_rate) {
                    child = mutate(&child, &ids, &mut rng);
                }
                if child.size() > cap {
                    pop[p].clone()
                } else {
                    child
                }
            })
            .collect();
        pop = elites.into_iter().chain(offspring).collect();
    }
    unreachable!("loop returns on its last generation")
}

fn final_best(pop: &[CsgNode], scores: &[Score], fit: &[f64], archive: &GaArchive, cfg: &GaConfig) -> (CsgNode, Score) {
    if let Some(e) = archive.best(cfg) {
        let score = Score {
            geo: 2.0,
            proximity: e.proximity,
            size: e.size,
        };
        return (e.tree.clone(), score);
    }
    let i = (0..pop.len()).max_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(b.cmp(&a))).expect("non-empty population");
    (pop[i].clone(), scores[i])
}
