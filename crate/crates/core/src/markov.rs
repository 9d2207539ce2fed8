//! Classical Markov-chain machinery: kernels, stationary measures,
//! reversibility, discriminant matrices and spectral gaps.
//!
//! Every quantum encoding in this crate is checked against the quantities
//! computed here.

use std::collections::VecDeque;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tolerances;

/// Row-stochastic matrix over a finite state space.
#[derive(Debug, Clone)]
pub struct MarkovKernel {
    p: DMatrix<f64>,
    stationary: OnceLock<std::result::Result<Distribution, String>>,
}

impl PartialEq for MarkovKernel {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

#[derive(Serialize, Deserialize)]
struct KernelJson {
    n: usize,
    p: Vec<Vec<f64>>,
}

impl MarkovKernel {
    /// Validates and wraps a transition matrix.
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerances(p, &Tolerances::default())
    }

    pub fn with_tolerances(p: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let n = p.nrows();
        if n < 2 {
            return Err(Error::InvalidKernel(format!("need at least 2 states, got {n}")));
        }
        if !p.is_square() {
            return Err(Error::InvalidKernel(format!(
                "matrix is {}x{}, not square",
                p.nrows(),
                p.ncols()
            )));
        }
        for x in 0..n {
            let mut sum = 0.0;
            for y in 0..n {
                let v = p[(x, y)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidKernel(format!(
                        "entry ({x},{y}) = {v} is not a probability"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tol.stochastic {
                return Err(Error::InvalidKernel(format!("row {x} sums to {sum}")));
            }
        }
        Ok(Self {
            p,
            stationary: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidKernel("rows have inconsistent lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[(x, y)]
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        self.p.row(x).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|x| self.row(x)).collect()
    }

    /// Irreducible and aperiodic on the support graph of the kernel.
    pub fn is_ergodic(&self) -> bool {
        self.is_irreducible() && self.period() == 1
    }

    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        let forward = reachable(n, |x, y| self.p[(x, y)] > 0.0);
        let backward = reachable(n, |x, y| self.p[(y, x)] > 0.0);
        forward.iter().all(|&r| r) && backward.iter().all(|&r| r)
    }

    /// Period of state 0: gcd of cycle lengths through the support graph.
    ///
    /// Only meaningful for irreducible kernels, where all states share it.
    pub fn period(&self) -> usize {
        let n = self.n();
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        let mut g = 0usize;
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if self.p[(x, y)] <= 0.0 {
                    continue;
                }
                if level[y] == usize::MAX {
                    level[y] = level[x] + 1;
                    queue.push_back(y);
                } else {
                    let diff = (level[x] + 1).abs_diff(level[y]);
                    g = gcd(g, diff);
                }
            }
        }
        g
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&KernelJson {
            n: self.n(),
            p: self.rows(),
        })
        .expect("kernel serialises")
    }

    /// Parses `{ "n": int, "p": [[...]] }`, rejecting invalid kernels.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: KernelJson = serde_json::from_str(text)?;
        if raw.p.len() != raw.n {
            return Err(Error::InvalidKernel(format!(
                "declared n = {} but p has {} rows",
                raw.n,
                raw.p.len()
            )));
        }
        Self::from_rows(&raw.p)
    }
}

fn reachable(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0usize];
    while let Some(x) = stack.pop() {
        for (y, s) in seen.iter_mut().enumerate() {
            if !*s && edge(x, y) {
                *s = true;
                stack.push(y);
            }
        }
    }
    seen
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Probability vector over the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("empty distribution".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("distribution has a negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Tolerances::default().stochastic {
            return Err(Error::Domain(format!("distribution sums to {sum}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: usize) -> f64 {
        self.weights[x]
    }

    /// Amplitudes `√μ(x)` of the coherent encoding `|μ⟩`.
    pub fn coherent_amplitudes(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }

    /// Expectation of `f` under this distribution.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

/// The symmetric two-state kernel `[[1-δ, δ], [δ, 1-δ]]`.
pub fn two_state_kernel(delta: f64) -> Result<MarkovKernel> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    MarkovKernel::from_rows(&[vec![1.0 - delta, delta], vec![delta, 1.0 - delta]])
}

/// Unique stationary distribution of an ergodic kernel (cached on the kernel).
pub fn stationary(kernel: &MarkovKernel) -> Result<Distribution> {
    kernel
        .stationary
        .get_or_init(|| compute_stationary(kernel))
        .clone()
        .map_err(Error::NotErgodic)
}

fn compute_stationary(kernel: &MarkovKernel) -> std::result::Result<Distribution, String> {
    if !kernel.is_irreducible() {
        return Err("kernel is reducible".into());
    }
    let period = kernel.period();
    if period != 1 {
        return Err(format!("kernel is periodic with period {period}"));
    }
    let n = kernel.n();
    let pt = kernel.p.transpose();
    // Eigenvalue of Pᵀ nearest 1, then its eigenvector as the null space of Pᵀ - λI.
    let lambda = crate::numerics::real_matrix_eigenvalues(&pt)
        .unwrap_or_else(|| vec![Complex64::new(1.0, 0.0)])
        .into_iter()
        .min_by(|a, b| (a - 1.0).norm().total_cmp(&(b - 1.0).norm()))
        .map(|z| z.re)
        .unwrap_or(1.0);
    let shifted = &pt - DMatrix::<f64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or("SVD failed")?;
    let smallest = (0..svd.singular_values.len())
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .ok_or("empty spectrum")?;
    let v: Vec<f64> = v_t.row(smallest).iter().copied().collect();
    let sum: f64 = v.iter().sum();
    let mut weights: Vec<f64> = v.iter().map(|x| (x / sum).max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let residual = (0..n)
        .map(|y| {
            let flow: f64 = (0..n).map(|x| weights[x] * kernel.p[(x, y)]).sum();
            (flow - weights[y]).abs()
        })
        .fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(format!("stationary residual {residual:e} too large"));
    }
    if weights.iter().any(|&w| w <= 0.0) {
        return Err("stationary measure is not strictly positive".into());
    }
    Ok(Distribution { weights })
}

/// Largest violation of detailed balance `π(x)P(x,y) = π(y)P(y,x)`.
pub fn detailed_balance_violation(kernel: &MarkovKernel, pi: &Distribution) -> f64 {
    let n = kernel.n();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in (x + 1)..n {
            let v = (pi.get(x) * kernel.get(x, y) - pi.get(y) * kernel.get(y, x)).abs();
            worst = worst.max(v);
        }
    }
    worst
}

pub fn is_reversible(kernel: &MarkovKernel, pi: &Distribution) -> bool {
    detailed_balance_violation(kernel, pi) <= Tolerances::default().symmetry
}

/// Discriminant matrix `D(x,y) = √(π(x)/π(y)) P(x,y)` of a reversible kernel.
pub fn discriminant(kernel: &MarkovKernel, pi: &Distribution) -> Result<DMatrix<f64>> {
    let n = kernel.n();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pi.len(),
        });
    }
    if pi.weights().iter().any(|&w| w <= 0.0) {
        return Err(Error::Domain("stationary weights must be strictly positive".into()));
    }
    let violation = detailed_balance_violation(kernel, pi);
    if violation > Tolerances::default().symmetry {
        return Err(Error::NotReversible {
            max_violation: violation,
        });
    }
    Ok(DMatrix::from_fn(n, n, |x, y| {
        (pi.get(x) / pi.get(y)).sqrt() * kernel.get(x, y)
    }))
}

/// Metropolis–Hastings kernel `P(x,y) = T(x,y) A(x,y)` off the diagonal,
/// with the rejected mass kept on the diagonal.
pub fn metropolis_hastings(proposal: &MarkovKernel, acceptance: impl Fn(usize, usize) -> f64) -> Result<MarkovKernel> {
    let n = proposal.n();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        let mut moved = 0.0;
        for y in 0..n {
            if x == y {
                continue;
            }
            let a = acceptance(x, y);
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Domain(format!("acceptance({x},{y}) = {a} outside [0, 1]")));
            }
            p[(x, y)] = proposal.get(x, y) * a;
            moved += p[(x, y)];
        }
        p[(x, x)] = (1.0 - moved).max(0.0);
    }
    MarkovKernel::new(p)
}

/// Acceptance rule that accepts every move with the same probability.
pub fn constant_acceptance(probability: f64) -> impl Fn(usize, usize) -> f64 {
    move |_, _| probability
}

/// Textbook Metropolis rule `min(1, π(y)/π(x))` for a symmetric proposal.
pub fn metropolis_rule(target: &Distribution) -> impl Fn(usize, usize) -> f64 + '_ {
    move |x, y| (target.get(y) / target.get(x)).min(1.0)
}

/// Metropolis–Hastings rule `min(1, π(y)T(y,x) / π(x)T(x,y))` for any proposal.
pub fn hastings_rule<'a>(target: &'a Distribution, proposal: &'a MarkovKernel) -> impl Fn(usize, usize) -> f64 + 'a {
    move |x, y| {
        let forward = target.get(x) * proposal.get(x, y);
        if forward <= 0.0 {
            return 0.0;
        }
        (target.get(y) * proposal.get(y, x) / forward).min(1.0)
    }
}

/// `1 - max |λ|` over the non-unit eigenvalues of the discriminant.
pub fn spectral_gap(kernel: &MarkovKernel) -> Result<f64> {
    let pi = stationary(kernel)?;
    let d = discriminant(kernel, &pi)?;
    let sym = (&d + d.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    // The top eigenvalue is the (simple) eigenvalue 1 of an ergodic chain.
    let second = ev[1..].iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(1.0 - second)
}

/// Random reversible ergodic kernel on `n` states.
///
/// Built from random symmetric conductances on a ring plus random chords and
/// self-loops, normalised row-wise, so detailed balance holds with
/// `π(x) ∝ Σ_y W(x,y)`.
pub fn random_reversible_kernel<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MarkovKernel {
    assert!(n >= 2, "need at least two states");
    let mut w = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        let y = (x + 1) % n;
        let c = rng.random_range(0.1..1.0);
        w[(x, y)] += c;
        if x != y {
            w[(y, x)] += c;
        }
        w[(x, x)] = rng.random_range(0.05..1.0);
        for y in (x + 2)..n {
            if rng.random_bool(0.5) {
                let c = rng.random_range(0.0..1.0);
                w[(x, y)] += c;
                w[(y, x)] += c;
            }
        }
    }
    let p = DMatrix::from_fn(n, n, |x, y| w[(x, y)] / w.row(x).sum());
    let mut kernel = MarkovKernel::new(p.clone());
    // Row normalisation may leave a 1-ulp row-sum error; renormalise once more.
    if kernel.is_err() {
        let p = DMatrix::from_fn(n, n, |x, y| p[(x, y)] / p.row(x).sum());
        kernel = MarkovKernel::new(p);
    }
    kernel.expect("random kernel is stochastic")
}
