use std::collections::{BTreeSet, HashSet};

use super::setcover::{coverage, exact_cover};
use super::{Implicant, Minterms};
use crate::error::{CsgError, Result};

/// Variable limit of the Quine-McCluskey path.
pub const QMC_LIMIT: usize = 16;
const CUBE_LIMIT: usize = 250_000;

/// Per inside minterm, drops literals in variable order while no outside
/// minterm enters the cube. Distinct results in ascending order.
pub fn prime_implicants(m: &Minterms) -> Vec<Implicant> {
    let mut out = BTreeSet::new();
    for &on in &m.on {
        let mut cube = Implicant::minterm(on, m.n());
        loop {
            let before = cube;
            for i in 0..m.n() {
                if cube.care >> i & 1 == 1 {
                    let wider = cube.without(i);
                    if m.admits(&wider) {
                        cube = wider;
                    }
                }
            }
            if cube == before {
                break;
            }
        }
        out.insert(cube);
    }
    out.into_iter().collect()
}

/// Every maximal outside-free cube containing an inside minterm, found by
/// growing cubes one literal at a time from the inside minterms.
pub fn all_primes(m: &Minterms) -> Result<Vec<Implicant>> {
    if m.n() > QMC_LIMIT {
        return Err(CsgError::Capacity {
            what: "Quine-McCluskey variables",
            actual: m.n(),
            limit: QMC_LIMIT,
        });
    }
    let mut level: Vec<Implicant> = m.on.iter().map(|&b| Implicant::minterm(b, m.n())).collect();
    let mut primes = BTreeSet::new();
    let mut total = level.len();
    while !level.is_empty() {
        let mut next = HashSet::new();
        for cube in &level {
            let mut grew = false;
            for i in 0..m.n() {
                if cube.care >> i & 1 == 1 {
                    let wider = cube.without(i);
                    if next.contains(&wider) {
                        grew = true;
                    } else if m.admits(&wider) {
                        grew = true;
                        next.insert(wider);
                    }
                }
            }
            if !grew {
                primes.insert(*cube);
            }
        }
        total += next.len();
        if total > CUBE_LIMIT {
            return Err(CsgError::Capacity {
                what: "Quine-McCluskey cubes",
                actual: total,
                limit: CUBE_LIMIT,
            });
        }
        let mut sorted: Vec<Implicant> = next.into_iter().collect();
        sorted.sort();
        level = sorted;
    }
    Ok(primes.into_iter().collect())
}

/// Minimal cover: fewest implicants, then fewest literals. Unobserved
/// minterms are don't-cares.
pub fn quine_mccluskey(m: &Minterms) -> Result<Vec<Implicant>> {
    let primes = all_primes(m)?;
    let sets = coverage(&primes, m);
    let costs: Vec<u32> = primes.iter().map(|p| p.literal_count()).collect();
    let chosen = exact_cover(m.on.len(), &sets, &costs)?;
    Ok(chosen.into_iter().map(|k| primes[k]).collect())
}
