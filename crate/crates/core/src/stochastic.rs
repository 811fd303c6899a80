//! Finite Markov chain approximation of the log-productivity AR(1) process.

use crate::error::{Error, Result};

/// Productivity levels and their period-end transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    /// Productivity in output units, ascending.
    pub levels: Vec<f64>,
    /// Row-stochastic; `transition[i][j]` is the probability of moving from `i` to `j`.
    pub transition: Vec<Vec<f64>>,
}

impl MarkovChain {
    pub fn new(levels: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = levels.len();
        if n == 0 || transition.len() != n || transition.iter().any(|row| row.len() != n) {
            return Err(Error::Shape(format!(
                "{n} levels with a {}-row transition matrix",
                transition.len()
            )));
        }
        if levels.iter().any(|&l| !(l > 0.0)) || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(
                "markov chain",
                "levels must be positive and strictly increasing",
            ));
        }
        for (i, row) in transition.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::domain(
                    "markov chain",
                    format!("row {i} is not a probability vector (sum {sum})"),
                ));
            }
        }
        Ok(MarkovChain { levels, transition })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `sum_j transition[i][j] * f(j)`, accumulated in index order.
    #[inline]
    pub fn expect(&self, i: usize, f: impl Fn(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (j, &t) in self.transition[i].iter().enumerate() {
            acc += t * f(j);
        }
        acc
    }
}

/// Rouwenhorst discretization of `log l' = rho log l + eps`, `eps ~ N(0, sigma_eps^2)`.
///
/// Log states are evenly spaced on `[-psi, psi]` with
/// `psi = sigma_eps * sqrt(n - 1) / sqrt(1 - rho^2)`, and `p = q = (1 + rho) / 2`.
pub fn rouwenhorst(rho: f64, sigma_eps: f64, n: usize) -> Result<MarkovChain> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(
            "rouwenhorst",
            format!("|rho| = {} must be < 1", rho.abs()),
        ));
    }
    if !(sigma_eps > 0.0) || !sigma_eps.is_finite() {
        return Err(Error::domain(
            "rouwenhorst",
            format!("sigma_eps = {sigma_eps} must be positive"),
        ));
    }
    if n < 2 {
        return Err(Error::domain(
            "rouwenhorst",
            format!("n = {n} must be at least 2"),
        ));
    }

    let p = (1.0 + rho) / 2.0;
    let q = p;
    let mut mat = vec![vec![p, 1.0 - p], vec![1.0 - q, q]];
    for m in 3..=n {
        let mut next = vec![vec![0.0; m]; m];
        for i in 0..m - 1 {
            for j in 0..m - 1 {
                let x = mat[i][j];
                next[i][j] += p * x;
                next[i][j + 1] += (1.0 - p) * x;
                next[i + 1][j] += (1.0 - q) * x;
                next[i + 1][j + 1] += q * x;
            }
        }
        for row in next.iter_mut().take(m - 1).skip(1) {
            for x in row.iter_mut() {
                *x /= 2.0;
            }
        }
        mat = next;
    }

    let psi = sigma_eps * ((n - 1) as f64).sqrt() / (1.0 - rho * rho).sqrt();
    let levels = (0..n)
        .map(|i| (-psi + 2.0 * psi * i as f64 / (n - 1) as f64).exp())
        .collect();
    MarkovChain::new(levels, mat)
}

/// Stationary distribution of an irreducible chain.
///
/// Iterates the lazy chain `(I + T) / 2`, which has the same invariant vector
/// but converges for periodic chains too.
pub fn chain_stationary(chain: &MarkovChain) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-14;
    const MAX_ITER: usize = 1_000_000;
    let n = chain.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let mut change = 0.0;
        for (j, slot) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &mass) in pi.iter().enumerate() {
                acc += mass * chain.transition[i][j];
            }
            change += (acc - pi[j]).abs();
            *slot = 0.5 * (pi[j] + acc);
        }
        residual = change;
        let total: f64 = next.iter().sum();
        for (dst, &src) in pi.iter_mut().zip(&next) {
            *dst = src / total;
        }
        if residual < TOL {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence {
        what: "chain stationary distribution",
        iterations: MAX_ITER,
        residual,
    })
}
