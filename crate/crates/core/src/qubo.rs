//! Set cover as a quadratic unconstrained binary optimization problem,
//! with an exhaustive solver and simulated annealing.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CsgError, Result};

/// Meaning of one binary variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuboVar {
    /// Subset `k` is selected.
    Subset(usize),
    /// Element `element` is covered exactly `m` times (`m >= 1`).
    Count { element: usize, m: usize },
}

/// Energy `xᵀQx + offset` with symmetric `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    pub n: usize,
    /// Row-major `n × n`, symmetric; the diagonal holds linear terms.
    pub q: Vec<f64>,
    pub var_map: Vec<QuboVar>,
    pub penalty_a: f64,
    pub weight_b: f64,
    /// Constant part of the expanded penalty.
    pub offset: f64,
}

impl QuboProblem {
    /// Plain matrix problem without set-cover semantics.
    pub fn from_matrix(n: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != n * n {
            return Err(CsgError::InvalidParameter(format!("matrix needs {} entries, got {}", n * n, q.len())));
        }
        let mut sym = q.clone();
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = 0.5 * (q[i * n + j] + q[j * n + i]);
            }
        }
        Ok(QuboProblem {
            n,
            q: sym,
            var_map: Vec::new(),
            penalty_a: 0.0,
            weight_b: 0.0,
            offset: 0.0,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    fn add_linear(&mut self, i: usize, v: f64) {
        self.q[i * self.n + i] += v;
    }

    /// Adds `v · x_i · x_j` for `i != j`, split over both triangles.
    fn add_pair(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.add_linear(i, v);
        } else {
            self.q[i * self.n + j] += 0.5 * v;
            self.q[j * self.n + i] += 0.5 * v;
        }
    }

    pub fn energy(&self, x: &[bool]) -> f64 {
        let ones: Vec<usize> = (0..self.n).filter(|&i| x[i]).collect();
        let mut e = self.offset;
        for &i in &ones {
            for &j in &ones {
                e += self.get(i, j);
            }
        }
        e
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Upper-triangular coordinate listing: `i j value` with
    /// `energy = Σ_{i<=j} value·x_i·x_j + offset`.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# n {}", self.n);
        let _ = writeln!(out, "# offset {}", self.offset);
        for i in 0..self.n {
            for j in i..self.n {
                let v = if i == j { self.get(i, i) } else { self.get(i, j) + self.get(j, i) };
                if v != 0.0 {
                    let _ = writeln!(out, "{i} {j} {v}");
                }
            }
        }
        out
    }

    fn neighbours(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| j != i && self.get(i, j) != 0.0)
                    .map(|j| (j, self.get(i, j)))
                    .collect()
            })
            .collect()
    }
}

/// Default weights: `B = 1`, `A = B·(card(V) + 1)`.
pub fn default_weights(subsets: usize) -> (f64, f64) {
    (subsets as f64 + 1.0, 1.0)
}

/// Encodes the set cover of `0..universe` by `subsets`.
///
/// Variables are the `P` subset selectors followed by `P` count indicators
/// per element, so `n = P + universe·P`.
pub fn encode_setcover(universe: usize, subsets: &[Vec<usize>], a: f64, b: f64) -> Result<QuboProblem> {
    let p = subsets.len();
    if !(a > 0.0 && b > 0.0) {
        return Err(CsgError::InvalidParameter("QUBO weights must be positive".into()));
    }
    if a <= b * p as f64 {
        return Err(CsgError::InvalidParameter(format!("penalty A = {a} must exceed B·card(V) = {}", b * p as f64)));
    }
    let mut containing = vec![Vec::new(); universe];
    for (k, s) in subsets.iter().enumerate() {
        for &e in s {
            if e >= universe {
                return Err(CsgError::InvalidParameter(format!("element {e} outside universe of {universe}")));
            }
            containing[e].push(k);
        }
    }
    if let Some(e) = containing.iter().position(|c| c.is_empty()) {
        return Err(CsgError::Uncoverable(e));
    }

    let n = p + universe * p;
    let mut var_map: Vec<QuboVar> = (0..p).map(QuboVar::Subset).collect();
    for element in 0..universe {
        for m in 1..=p {
            var_map.push(QuboVar::Count { element, m });
        }
    }
    let count_var = |element: usize, m: usize| p + element * p + (m - 1);
    let mut prob = QuboProblem {
        n,
        q: vec![0.0; n * n],
        var_map,
        penalty_a: a,
        weight_b: b,
        offset: 0.0,
    };

    for (alpha, ks) in containing.iter().enumerate() {
        // A·(1 − Σ_m y_m)² = A·(1 − Σ y_m + 2·Σ_{m<m'} y_m y_m')
        prob.offset += a;
        for m in 1..=p {
            prob.add_linear(count_var(alpha, m), -a);
            for m2 in m + 1..=p {
                prob.add_pair(count_var(alpha, m), count_var(alpha, m2), 2.0 * a);
            }
        }
        // A·(Σ_m m·y_m − Σ_k x_k)²
        let terms: Vec<(usize, f64)> = (1..=p)
            .map(|m| (count_var(alpha, m), m as f64))
            .chain(ks.iter().map(|&k| (k, -1.0)))
            .collect();
        for (i, &(vi, ci)) in terms.iter().enumerate() {
            prob.add_linear(vi, a * ci * ci);
            for &(vj, cj) in &terms[i + 1..] {
                prob.add_pair(vi, vj, 2.0 * a * ci * cj);
            }
        }
    }
    for k in 0..p {
        prob.add_linear(k, b);
    }
    Ok(prob)
}

/// Largest problem the exhaustive solver accepts.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Global minimum by Gray-code enumeration. Ties go to the
/// lexicographically smallest assignment.
pub fn solve_exhaustive(prob: &QuboProblem) -> Result<(Vec<bool>, f64)> {
    let n = prob.n;
    if n > EXHAUSTIVE_LIMIT {
        return Err(CsgError::Capacity {
            what: "exhaustive QUBO variables",
            actual: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut x = vec![false; n];
    // field[i] = Σ_{j≠i} Q_ij x_j
    let mut field = vec![0.0; n];
    let mut energy = prob.offset;
    let mut best = (x.clone(), energy);
    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        let delta = if x[i] {
            -(prob.get(i, i) + 2.0 * field[i])
        } else {
            prob.get(i, i) + 2.0 * field[i]
        };
        energy += delta;
        x[i] = !x[i];
        let sign = if x[i] { 1.0 } else { -1.0 };
        for (j, f) in field.iter_mut().enumerate() {
            if j != i {
                *f += sign * prob.get(i, j);
            }
        }
        let tol = 1e-9 * (1.0 + best.1.abs());
        if energy < best.1 - tol || (energy <= best.1 + tol && x < best.0) {
            best = (x.clone(), energy);
        }
    }
    // Re-evaluate to drop accumulated rounding.
    let e = prob.energy(&best.0);
    Ok((best.0, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    /// Starting temperature; `None` uses `max|Q|·n`.
    pub t0: Option<f64>,
    pub decay: f64,
    /// Flip attempts per temperature, as a multiple of `n`.
    pub sweeps: usize,
    /// Temperature below which the run stops.
    pub t_min: f64,
    pub restarts: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            t0: None,
            decay: 0.97,
            sweeps: 10,
            t_min: 1e-3,
            restarts: 10,
        }
    }
}

/// Single-flip Metropolis annealing; best assignment over all restarts.
/// Restart `r` uses the seed `seed + r`, so results are reproducible.
pub fn solve_annealing(prob: &QuboProblem, schedule: &AnnealSchedule, seed: u64) -> (Vec<bool>, f64) {
    if prob.n == 0 {
        return (Vec::new(), prob.offset);
    }
    let nbrs = prob.neighbours();
    let runs: Vec<(Vec<bool>, f64)> = (0..schedule.restarts.max(1))
        .into_par_iter()
        .map(|r| anneal_once(prob, &nbrs, schedule, seed.wrapping_add(r as u64)))
        .collect();
    runs.into_iter()
        .reduce(|best, run| if run.1 < best.1 - 1e-9 { run } else { best })
        .expect("at least one restart")
}

fn anneal_once(prob: &QuboProblem, nbrs: &[Vec<(usize, f64)>], schedule: &AnnealSchedule, seed: u64) -> (Vec<bool>, f64) {
    let n = prob.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut field = vec![0.0; n];
    for i in 0..n {
        field[i] = nbrs[i].iter().filter(|(j, _)| x[*j]).map(|(_, v)| v).sum();
    }
    let mut energy = prob.energy(&x);
    let mut best = (x.clone(), energy);
    let mut t = schedule.t0.unwrap_or_else(|| (prob.max_abs() * n as f64).max(1e-9));
    let flips = schedule.sweeps.max(1) * n;
    while t > schedule.t_min {
        for _ in 0..flips {
            let i = rng.gen_range(0..n);
            let gain = prob.get(i, i) + 2.0 * field[i];
            let delta = if x[i] { -gain } else { gain };
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp() {
                x[i] = !x[i];
                energy += delta;
                let sign = if x[i] { 1.0 } else { -1.0 };
                for &(j, v) in &nbrs[i] {
                    field[j] += sign * v;
                }
                if energy < best.1 - 1e-12 {
                    best = (x.clone(), energy);
                }
            }
        }
        t *= schedule.decay;
    }
    let e = prob.energy(&best.0);
    (best.0, e)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedCover {
    /// Selected subset indices, ascending.
    pub subsets: Vec<usize>,
    /// False when the penalty part of the energy is non-zero.
    pub valid: bool,
}

/// Selected subsets of an assignment; validity is judged on the penalty
/// constraints themselves.
pub fn decode_cover(x: &[bool], prob: &QuboProblem) -> DecodedCover {
    let subsets: Vec<usize> = prob
        .var_map
        .iter()
        .zip(x)
        .filter_map(|(v, &on)| match v {
            QuboVar::Subset(k) if on => Some(*k),
            _ => None,
        })
        .collect();
    let selected_b = prob.weight_b * subsets.len() as f64;
    let penalty = prob.energy(x) - selected_b;
    DecodedCover {
        subsets,
        valid: penalty.abs() <= 1e-9 * (1.0 + prob.penalty_a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation of both Hamiltonian terms.
    fn hamiltonian(universe: usize, subsets: &[Vec<usize>], a: f64, b: f64, x: &[bool]) -> f64 {
        let p = subsets.len();
        let y = |alpha: usize, m: usize| x[p + alpha * p + m - 1] as u8 as f64;
        let mut h = 0.0;
        for alpha in 0..universe {
            let s1: f64 = (1..=p).map(|m| y(alpha, m)).sum();
            h += a * (1.0 - s1).powi(2);
            let s2: f64 = (1..=p).map(|m| m as f64 * y(alpha, m)).sum();
            let s3: f64 = (0..p).filter(|&k| subsets[k].contains(&alpha)).map(|k| x[k] as u8 as f64).sum();
            h += a * (s2 - s3).powi(2);
        }
        h + b * (0..p).map(|k| x[k] as u8 as f64).sum::<f64>()
    }

    fn fig_instance() -> (usize, Vec<Vec<usize>>) {
        (4, vec![vec![2, 3], vec![0, 1, 2]])
    }

    #[test]
    fn energy_identity_on_random_assignments() {
        let (u, v) = fig_instance();
        let (a, b) = default_weights(v.len());
        let prob = encode_setcover(u, &v, a, b).unwrap();
        assert_eq!(prob.n, 2 + 4 * 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: Vec<bool> = (0..prob.n).map(|_| rng.gen_bool(0.5)).collect();
            let direct = hamiltonian(u, &v, a, b, &x);
            assert!((prob.energy(&x) - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
        for i in 0..prob.n {
            for j in 0..prob.n {
                assert_eq!(prob.get(i, j), prob.get(j, i));
            }
        }
    }

    #[test]
    fn fig_instance_optimum_selects_both() {
        let (u, v) = fig_instance();
        let (a, b) = default_weights(v.len());
        let prob = encode_setcover(u, &v, a, b).unwrap();
        let (x, e) = solve_exhaustive(&prob).unwrap();
        assert!((e - 2.0 * b).abs() < 1e-9);
        let dec = decode_cover(&x, &prob);
        assert_eq!(dec.subsets, vec![0, 1]);
        assert!(dec.valid);
    }

    #[test]
    fn trivial_instances() {
        let prob = encode_setcover(1, &[vec![0]], 2.0, 1.0).unwrap();
        let (x, e) = solve_exhaustive(&prob).unwrap();
        assert_eq!(x, vec![true, true]);
        assert!((e - 1.0).abs() < 1e-12);

        let zero = QuboProblem::from_matrix(3, vec![0.0; 9]).unwrap();
        assert_eq!(solve_exhaustive(&zero).unwrap(), (vec![false; 3], 0.0));
        let diag = QuboProblem::from_matrix(3, vec![-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(solve_exhaustive(&diag).unwrap().0, vec![true; 3]);
        let one = QuboProblem::from_matrix(1, vec![-1.0]).unwrap();
        assert_eq!(solve_annealing(&one, &AnnealSchedule::default(), 3).0, vec![true]);
    }

    #[test]
    fn encoding_errors() {
        assert!(matches!(encode_setcover(2, &[vec![0]], 2.0, 1.0), Err(CsgError::Uncoverable(1))));
        assert!(encode_setcover(1, &[vec![0]], 1.0, 1.0).is_err());
        assert!(solve_exhaustive(&QuboProblem::from_matrix(25, vec![0.0; 625]).unwrap()).is_err());
    }

    #[test]
    fn penalty_dominates_on_small_instance() {
        let (u, v) = fig_instance();
        let (a, b) = default_weights(v.len());
        let prob = encode_setcover(u, &v, a, b).unwrap();
        let (mut worst_valid, mut best_invalid) = (f64::MIN, f64::MAX);
        for bits in 0u32..(1 << prob.n) {
            let x: Vec<bool> = (0..prob.n).map(|i| bits >> i & 1 == 1).collect();
            let e = prob.energy(&x);
            if decode_cover(&x, &prob).valid {
                worst_valid = worst_valid.max(e);
            } else {
                best_invalid = best_invalid.min(e);
            }
        }
        assert!(best_invalid > worst_valid);
    }

    #[test]
    fn annealing_is_seed_deterministic_and_finds_optimum() {
        let (u, v) = fig_instance();
        let (a, b) = default_weights(v.len());
        let prob = encode_setcover(u, &v, a, b).unwrap();
        let s = AnnealSchedule::default();
        assert_eq!(solve_annealing(&prob, &s, 11), solve_annealing(&prob, &s, 11));
        let hits = (0..20).filter(|&seed| (solve_annealing(&prob, &s, seed).1 - 2.0).abs() < 1e-9).count();
        assert!(hits >= 19, "{hits}");
    }

    #[test]
    fn coordinate_export_reproduces_energy() {
        let (u, v) = fig_instance();
        let prob = encode_setcover(u, &v, 3.0, 1.0).unwrap();
        let text = prob.to_coordinate_text();
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            let f: Vec<&str> = line.split_whitespace().collect();
            entries.push((f[0].parse::<usize>().unwrap(), f[1].parse::<usize>().unwrap(), f[2].parse::<f64>().unwrap()));
        }
        let x: Vec<bool> = (0..prob.n).map(|i| i % 3 == 0).collect();
        let e: f64 = entries.iter().filter(|(i, j, _)| x[*i] && x[*j]).map(|t| t.2).sum::<f64>() + prob.offset;
        assert!((e - prob.energy(&x)).abs() < 1e-9);
    }
}
