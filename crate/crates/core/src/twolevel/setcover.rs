use super::{Implicant, Minterms};
use crate::error::{CsgError, Result};
use crate::qubo::{decode_cover, default_weights, encode_setcover, solve_annealing, solve_exhaustive, AnnealSchedule, EXHAUSTIVE_LIMIT};

#[derive(Debug, Clone, PartialEq)]
pub enum CoverSolver {
    /// Branch and bound; minimal cardinality.
    Exact,
    Greedy,
    /// QUBO encoding solved exhaustively when small, by annealing otherwise.
    Qubo { schedule: AnnealSchedule, seed: u64 },
}

impl CoverSolver {
    pub fn qubo(seed: u64) -> Self {
        CoverSolver::Qubo {
            schedule: AnnealSchedule::default(),
            seed,
        }
    }
}

/// Indices of inside minterms contained in each implicant.
pub fn coverage(imps: &[Implicant], m: &Minterms) -> Vec<Vec<usize>> {
    imps.iter()
        .map(|imp| (0..m.on.len()).filter(|&i| imp.contains(m.on[i])).collect())
        .collect()
}

const NODE_BUDGET: u64 = 5_000_000;

/// Minimizes `(number of sets, Σ cost)` over covers of `0..universe`.
/// Indices of the chosen sets are returned ascending.
pub fn exact_cover(universe: usize, sets: &[Vec<usize>], costs: &[u32]) -> Result<Vec<usize>> {
    let mut covering = vec![Vec::new(); universe];
    for (k, s) in sets.iter().enumerate() {
        for &e in s {
            covering[e].push(k);
        }
    }
    if let Some(e) = covering.iter().position(|c| c.is_empty()) {
        return Err(CsgError::Uncoverable(e));
    }
    let max_set = sets.iter().map(Vec::len).max().unwrap_or(1).max(1);
    let mut search = Search {
        sets,
        costs,
        covering: &covering,
        max_set,
        count: vec![0; universe],
        chosen: Vec::new(),
        best: None,
        nodes: 0,
    };
    search.run(universe, 0)?;
    let mut best = search.best.expect("a cover exists").2;
    best.sort_unstable();
    Ok(best)
}

struct Search<'a> {
    sets: &'a [Vec<usize>],
    costs: &'a [u32],
    covering: &'a [Vec<usize>],
    max_set: usize,
    /// How many chosen sets cover each element.
    count: Vec<u32>,
    chosen: Vec<usize>,
    best: Option<(usize, u64, Vec<usize>)>,
    nodes: u64,
}

impl Search<'_> {
    fn run(&mut self, uncovered: usize, cost: u64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return Err(CsgError::Capacity {
                what: "exact set cover search nodes",
                actual: self.nodes as usize,
                limit: NODE_BUDGET as usize,
            });
        }
        if uncovered == 0 {
            let better = match &self.best {
                None => true,
                Some((n, c, _)) => (self.chosen.len(), cost) < (*n, *c),
            };
            if better {
                self.best = Some((self.chosen.len(), cost, self.chosen.clone()));
            }
            return Ok(());
        }
        let lower = self.chosen.len() + uncovered.div_ceil(self.max_set);
        if let Some((n, c, _)) = &self.best {
            if lower > *n || (lower == *n && cost >= *c) {
                return Ok(());
            }
        }
        // Branch on the uncovered element with the fewest candidate sets.
        let e = (0..self.count.len())
            .filter(|&e| self.count[e] == 0)
            .min_by_key(|&e| self.covering[e].len())
            .expect("an uncovered element");
        let mut options = self.covering[e].clone();
        options.sort_by_key(|&k| {
            let gain = self.sets[k].iter().filter(|&&x| self.count[x] == 0).count();
            (std::cmp::Reverse(gain), self.costs[k], k)
        });
        for k in options {
            let mut newly = 0;
            for &x in &self.sets[k] {
                if self.count[x] == 0 {
                    newly += 1;
                }
                self.count[x] += 1;
            }
            self.chosen.push(k);
            let res = self.run(uncovered - newly, cost + u64::from(self.costs[k]));
            self.chosen.pop();
            for &x in &self.sets[k] {
                self.count[x] -= 1;
            }
            res?;
        }
        Ok(())
    }
}

/// Repeatedly takes the set covering most uncovered elements (lowest index
/// on ties).
pub fn greedy_cover(universe: usize, sets: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut covered = vec![false; universe];
    let mut left = universe;
    let mut chosen = Vec::new();
    while left > 0 {
        let (k, gain) = sets
            .iter()
            .enumerate()
            .map(|(k, s)| (k, s.iter().filter(|&&e| !covered[e]).count()))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if gain == 0 {
            let e = covered.iter().position(|c| !c).expect("uncovered element");
            return Err(CsgError::Uncoverable(e));
        }
        for &e in &sets[k] {
            if !covered[e] {
                covered[e] = true;
                left -= 1;
            }
        }
        chosen.push(k);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

fn covers(universe: usize, sets: &[Vec<usize>], chosen: &[usize]) -> bool {
    let mut covered = vec![false; universe];
    for &k in chosen {
        for &e in &sets[k] {
            covered[e] = true;
        }
    }
    covered.iter().all(|&c| c)
}

/// Indices of selected sets from the QUBO encoding, if the decoded
/// assignment is a valid cover.
pub fn qubo_cover(universe: usize, sets: &[Vec<usize>], schedule: &AnnealSchedule, seed: u64) -> Result<Option<Vec<usize>>> {
    let (a, b) = default_weights(sets.len());
    let prob = encode_setcover(universe, sets, a, b)?;
    let (x, _) = if prob.n <= EXHAUSTIVE_LIMIT.min(20) {
        solve_exhaustive(&prob)?
    } else {
        solve_annealing(&prob, schedule, seed)
    };
    let dec = decode_cover(&x, &prob);
    Ok((dec.valid && covers(universe, sets, &dec.subsets)).then_some(dec.subsets))
}

/// Selects primes covering every inside minterm. An invalid QUBO answer
/// falls back to the exact search, and a budget overrun there to greedy.
pub fn setcover_select(primes: &[Implicant], m: &Minterms, solver: &CoverSolver) -> Result<Vec<Implicant>> {
    let sets = coverage(primes, m);
    let universe = m.on.len();
    let costs: Vec<u32> = primes.iter().map(|p| p.literal_count()).collect();
    let exact_or_greedy = || match exact_cover(universe, &sets, &costs) {
        Err(e) if e.is_capacity() => greedy_cover(universe, &sets),
        other => other,
    };
    let chosen = match solver {
        CoverSolver::Exact => exact_or_greedy()?,
        CoverSolver::Greedy => greedy_cover(universe, &sets)?,
        CoverSolver::Qubo { schedule, seed } => match qubo_cover(universe, &sets, schedule, *seed)? {
            Some(c) => c,
            None => {
                log::warn!("QUBO cover invalid, falling back to exact search");
                exact_or_greedy()?
            }
        },
    };
    Ok(chosen.into_iter().map(|k| primes[k]).collect())
}
