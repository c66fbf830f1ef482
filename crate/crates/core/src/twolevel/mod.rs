//! Two-level minimization of a remaining solid from sampled CITs.
//!
//! Implicants are cubes over an ordered variable list (the halfspace ids of
//! the solid, ascending). Bit `i` of a mask refers to `vars[i]`.

mod pla;
mod primes;
mod setcover;

use std::collections::BTreeSet;
use std::path::PathBuf;

pub use pla::{emit_pla, parse_pla, run_external_minimizer};
pub use primes::{all_primes, prime_implicants, quine_mccluskey, QMC_LIMIT};
pub use setcover::{coverage, exact_cover, greedy_cover, setcover_select, CoverSolver};

use crate::error::{CsgError, Result};
use crate::geometry::Aabb;
use crate::sampling::{enumerate_cits_for, Cit, GridSpec};
use crate::scene::Scene;
use crate::tree::CsgNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lit {
    Positive,
    Negated,
    Absent,
}

/// Conjunction of literals: variable `i` is constrained iff bit `i` of
/// `care` is set, and must then equal bit `i` of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Implicant {
    pub care: u128,
    pub value: u128,
}

impl Implicant {
    pub fn minterm(bits: u128, n: usize) -> Implicant {
        let care = full_mask(n);
        Implicant { care, value: bits & care }
    }

    pub fn from_lits(lits: &[Lit]) -> Implicant {
        let mut imp = Implicant { care: 0, value: 0 };
        for (i, l) in lits.iter().enumerate() {
            match l {
                Lit::Positive => {
                    imp.care |= 1 << i;
                    imp.value |= 1 << i;
                }
                Lit::Negated => imp.care |= 1 << i,
                Lit::Absent => {}
            }
        }
        imp
    }

    pub fn lit(&self, i: usize) -> Lit {
        if self.care >> i & 1 == 0 {
            Lit::Absent
        } else if self.value >> i & 1 == 1 {
            Lit::Positive
        } else {
            Lit::Negated
        }
    }

    pub fn lits(&self, n: usize) -> Vec<Lit> {
        (0..n).map(|i| self.lit(i)).collect()
    }

    pub fn literal_count(&self) -> u32 {
        self.care.count_ones()
    }

    #[inline]
    pub fn contains(&self, minterm: u128) -> bool {
        minterm & self.care == self.value
    }

    pub fn without(&self, i: usize) -> Implicant {
        Implicant {
            care: self.care & !(1 << i),
            value: self.value & !(1 << i),
        }
    }

    /// Product of literals, right-leaning, in variable order.
    pub fn to_node(&self, vars: &[u32]) -> CsgNode {
        let factors: Vec<CsgNode> = (0..vars.len())
            .filter_map(|i| match self.lit(i) {
                Lit::Positive => Some(CsgNode::leaf(vars[i])),
                Lit::Negated => Some(CsgNode::comp(CsgNode::leaf(vars[i]))),
                Lit::Absent => None,
            })
            .collect();
        right_fold(factors, CsgNode::inter).unwrap_or(CsgNode::Universe)
    }

    pub fn display(&self, vars: &[u32]) -> String {
        let parts: Vec<String> = (0..vars.len())
            .filter_map(|i| match self.lit(i) {
                Lit::Positive => Some(format!("h{}", vars[i])),
                Lit::Negated => Some(format!("!h{}", vars[i])),
                Lit::Absent => None,
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("·")
        }
    }
}

fn right_fold(items: Vec<CsgNode>, op: fn(CsgNode, CsgNode) -> CsgNode) -> Option<CsgNode> {
    items.into_iter().rev().reduce(|acc, item| op(item, acc))
}

pub(crate) fn full_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// Observed minterms of a solid over `vars`, split by inside flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Minterms {
    pub vars: Vec<u32>,
    /// Sorted ascending, distinct.
    pub on: Vec<u128>,
    pub off: Vec<u128>,
}

impl Minterms {
    /// Projects scene-wide CIT sign vectors onto `vars`.
    pub fn from_cits(scene: &Scene, cits: &[Cit], vars: &[u32]) -> Minterms {
        let positions: Vec<usize> = vars.iter().map(|id| scene.index(*id).expect("variable resolves")).collect();
        let project = |c: &Cit| {
            positions
                .iter()
                .enumerate()
                .fold(0u128, |acc, (i, &p)| if c.signs.get(p) { acc | 1 << i } else { acc })
        };
        let on: BTreeSet<u128> = cits.iter().filter(|c| c.inside).map(project).collect();
        let off: BTreeSet<u128> = cits.iter().filter(|c| !c.inside).map(project).collect();
        Minterms {
            vars: vars.to_vec(),
            on: on.into_iter().collect(),
            off: off.into_iter().collect(),
        }
    }

    /// Samples `node` over the box of its halfspaces padded by two cells.
    pub fn sample(scene: &Scene, node: &CsgNode, grid: &GridSpec) -> Minterms {
        let ids = node.halfspace_ids();
        let region = sampling_region(scene, &ids, grid.cell_size);
        let cits = enumerate_cits_for(scene, node, &ids, &region, grid.cell_size);
        Minterms::from_cits(scene, &cits, &ids.into_iter().collect::<Vec<_>>())
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn admits(&self, imp: &Implicant) -> bool {
        !self.off.iter().any(|&m| imp.contains(m))
    }
}

pub(crate) fn sampling_region(scene: &Scene, ids: &BTreeSet<u32>, step: f64) -> Aabb {
    scene.aabb_of_ids(ids).padded(2.0 * step)
}

/// One full implicant per inside minterm, ordered by sign vector.
pub fn build_dcf(m: &Minterms) -> Vec<Implicant> {
    m.on.iter().map(|&b| Implicant::minterm(b, m.n())).collect()
}

/// Right-leaning union of products. Implicants covering more inside
/// minterms come first; ties keep their input order.
pub fn assemble_dnf(cover: &[Implicant], m: &Minterms) -> CsgNode {
    let mut ordered: Vec<(usize, usize)> = cover
        .iter()
        .enumerate()
        .map(|(i, imp)| (i, m.on.iter().filter(|&&x| imp.contains(x)).count()))
        .collect();
    ordered.sort_by_key(|&(i, c)| (std::cmp::Reverse(c), i));
    let terms: Vec<CsgNode> = ordered.into_iter().map(|(i, _)| cover[i].to_node(&m.vars)).collect();
    right_fold(terms, CsgNode::union).unwrap_or(CsgNode::Empty)
}

/// How the remaining solid is minimized.
#[derive(Debug, Clone, PartialEq)]
pub enum TwoLevelMethod {
    Qmc,
    SetCover(CoverSolver),
    /// User-supplied binary called as `binary <input.pla>`, printing a PLA
    /// cover on stdout.
    ExternalPla(PathBuf),
}

/// Whether some halfspace box lies inside another one.
pub fn has_box_containment(scene: &Scene, vars: &[u32]) -> bool {
    let boxes: Vec<Aabb> = vars.iter().filter_map(|id| scene.halfspace(*id)).map(|h| h.aabb()).collect();
    boxes
        .iter()
        .enumerate()
        .any(|(i, a)| boxes.iter().enumerate().any(|(j, b)| i != j && a.contains_box(b)))
}

/// Samples and minimizes `node` into a DNF.
pub fn minimize(scene: &Scene, node: &CsgNode, method: &TwoLevelMethod, grid: &GridSpec) -> Result<CsgNode> {
    let m = Minterms::sample(scene, node, grid);
    if m.on.is_empty() {
        return Ok(CsgNode::Empty);
    }
    let cover = match method {
        TwoLevelMethod::Qmc => quine_mccluskey(&m)?,
        TwoLevelMethod::SetCover(solver) => {
            let primes = prime_implicants(&m);
            if has_box_containment(scene, &m.vars) {
                setcover_select(&primes, &m, solver)?
            } else {
                primes
            }
        }
        TwoLevelMethod::ExternalPla(binary) => {
            let cover = run_external_minimizer(binary, &m)?;
            if let Some(bad) = cover.iter().find(|imp| !m.admits(imp)) {
                return Err(CsgError::External(format!("cover term {} contains an outside CIT", bad.display(&m.vars))));
            }
            cover
        }
    };
    if let Some(&missed) = m.on.iter().find(|&&x| !cover.iter().any(|imp| imp.contains(x))) {
        return Err(CsgError::External(format!("cover misses inside minterm {missed:#b}")));
    }
    Ok(assemble_dnf(&cover, &m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, on: &[u128], off: &[u128]) -> Minterms {
        Minterms {
            vars: (0..n as u32).collect(),
            on: on.to_vec(),
            off: off.to_vec(),
        }
    }

    #[test]
    fn implicant_literals() {
        let imp = Implicant::from_lits(&[Lit::Negated, Lit::Absent, Lit::Positive]);
        assert_eq!(imp.lits(3), vec![Lit::Negated, Lit::Absent, Lit::Positive]);
        assert!(imp.contains(0b100) && imp.contains(0b110) && !imp.contains(0b101));
        assert_eq!(imp.literal_count(), 2);
        assert_eq!(imp.display(&[4, 5, 6]), "!h4·h6");
    }

    #[test]
    fn dnf_shape_and_size() {
        let vars = vec![0, 1, 2, 3, 4];
        let mm = Minterms {
            vars: vars.clone(),
            on: vec![0b10010, 0b10000, 0b11000, 0b01000],
            off: vec![],
        };
        let h3 = Implicant::from_lits(&[Lit::Absent, Lit::Absent, Lit::Absent, Lit::Positive, Lit::Absent]);
        let body = Implicant::from_lits(&[Lit::Negated, Lit::Absent, Lit::Negated, Lit::Absent, Lit::Positive]);
        let node = assemble_dnf(&[h3, body], &mm);
        assert_eq!(node.to_string(), "((!h0 · (!h2 · h4)) + h3)");
        assert_eq!(node.size(), 9);
        assert_eq!(assemble_dnf(&[], &mm), CsgNode::Empty);
        let single = Implicant::from_lits(&[Lit::Positive]);
        assert_eq!(assemble_dnf(&[single], &m(1, &[1], &[0])), CsgNode::leaf(0));
    }

    #[test]
    fn dcf_is_sorted_full_minterms() {
        let mm = m(2, &[0b01, 0b11], &[0b00]);
        let dcf = build_dcf(&mm);
        assert_eq!(dcf.len(), 2);
        assert!(dcf.iter().all(|d| d.literal_count() == 2));
        assert!(build_dcf(&m(2, &[], &[0])).is_empty());
    }
}
