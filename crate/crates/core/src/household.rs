//! Worker problem: preferences, the search-return operators and the
//! consumption/savings Bellman operator, iterated to a fixed point for a
//! given tightness function.
//!
//! Both choices are discrete. Savings are picked from the wealth grid and
//! applications from the admissible wage grid; ties go to the lowest index.
//! Search returns are indexed by post-savings wealth because search happens
//! after the savings decision within a period.

use log::{debug, warn};
use rayon::prelude::*;

use crate::calibration::Parameters;
use crate::error::{Error, Result};
use crate::layout::Dims;
use crate::model::Model;

/// CRRA utility `c^(1-σ) / (1-σ)`, `ln c` at `σ = 1`.
pub fn utility(c: f64, sigma: f64) -> Result<f64> {
    if c > 0.0 && c.is_finite() {
        Ok(crra(c, sigma))
    } else {
        Err(Error::domain(
            "utility",
            format!("consumption {c} must be positive"),
        ))
    }
}

#[inline]
fn crra(c: f64, sigma: f64) -> f64 {
    if sigma == 1.0 {
        c.ln()
    } else if sigma == 2.0 {
        -1.0 / c
    } else {
        c.powf(1.0 - sigma) / (1.0 - sigma)
    }
}

/// Consumption implied by `c + a'/(1+r) = y_min + ω + a`. Non-positive results mean infeasible.
#[inline]
pub fn consumption_from_budget(omega: f64, a: f64, a_next: f64, p: &Parameters) -> f64 {
    p.y_min + omega + a - a_next / (1.0 + p.r)
}

/// Period utility for every (earnings, wealth, next wealth) triple.
///
/// Earnings row `j < n_w` is wage `j`; row `n_w` is unemployment (ω = 0).
/// Infeasible choices hold `-inf`.
#[derive(Clone, Debug)]
pub struct UtilityTable {
    n_a: usize,
    n_w: usize,
    values: Vec<f64>,
}

impl UtilityTable {
    pub fn new(model: &Model) -> Self {
        let p = &model.params;
        let (n_w, n_a) = (model.dims.n_w, model.dims.n_a);
        let wealth = &model.grids.wealth;
        let mut values = vec![0.0; (n_w + 1) * n_a * n_a];
        values
            .par_chunks_mut(n_a * n_a)
            .enumerate()
            .for_each(|(row, block)| {
                let omega = if row < n_w {
                    model.grids.wage[row]
                } else {
                    0.0
                };
                for (a, out) in block.chunks_mut(n_a).enumerate() {
                    for (a_next, slot) in out.iter_mut().enumerate() {
                        let c = consumption_from_budget(omega, wealth[a], wealth[a_next], p);
                        *slot = if c > 0.0 {
                            crra(c, p.sigma)
                        } else {
                            f64::NEG_INFINITY
                        };
                    }
                }
            });
        UtilityTable { n_a, n_w, values }
    }

    pub fn unemployed_row(&self) -> usize {
        self.n_w
    }

    #[inline]
    fn row(&self, earn: usize, a: usize) -> &[f64] {
        let start = (earn * self.n_a + a) * self.n_a;
        &self.values[start..start + self.n_a]
    }
}

/// Next-period value expectations over productivity, `Σ_η' T[η,η'] V(η', ·)`.
#[derive(Clone, Debug)]
pub struct Continuation {
    pub ev_e: Vec<f64>,
    pub ev_u: Vec<f64>,
}

impl Continuation {
    pub fn new(model: &Model, v_e: &[f64], v_u: &[f64]) -> Self {
        let d = model.dims;
        let chain = &model.chain;
        let mut ev_e = vec![0.0; d.emp_len()];
        let mut ev_u = vec![0.0; d.unemp_len()];
        for eta in 0..d.n_eta {
            for w in 0..d.n_w {
                for a in 0..d.n_a {
                    ev_e[d.emp(eta, w, a)] = chain.expect(eta, |e2| v_e[d.emp(e2, w, a)]);
                }
            }
            for a in 0..d.n_a {
                ev_u[d.unemp(eta, a)] = chain.expect(eta, |e2| v_u[d.unemp(e2, a)]);
            }
        }
        Continuation { ev_e, ev_u }
    }
}

/// Value of optimal search for an unemployed worker entering the search stage
/// with productivity `eta` and wealth index `a_next`, and the chosen wage index.
///
/// `job_finding` holds `p(θ)` on the employed layout.
pub fn search_value_unemployed(
    model: &Model,
    cont: &Continuation,
    job_finding: &[f64],
    eta: usize,
    a_next: usize,
) -> (f64, usize) {
    let d = model.dims;
    let stay = cont.ev_u[d.unemp(eta, a_next)];
    let mut best = f64::NEG_INFINITY;
    let mut arg = model.admissible[0];
    for &w_hat in &model.admissible {
        let idx = d.emp(eta, w_hat, a_next);
        let pf = job_finding[idx];
        let val = pf * cont.ev_e[idx] + (1.0 - pf) * stay;
        if val > best {
            best = val;
            arg = w_hat;
        }
    }
    (best, arg)
}

/// Value of optimal on-the-job search for a worker currently paid wage index `w`.
///
/// A worker who moves is immune to separation this period; one who stays
/// faces separation with probability δ.
pub fn search_value_employed(
    model: &Model,
    cont: &Continuation,
    job_finding: &[f64],
    eta: usize,
    w: usize,
    a_next: usize,
) -> (f64, usize) {
    let d = model.dims;
    let p = &model.params;
    let stay = (1.0 - p.delta) * cont.ev_e[d.emp(eta, w, a_next)]
        + p.delta * cont.ev_u[d.unemp(eta, a_next)];
    let mut best = f64::NEG_INFINITY;
    let mut arg = model.admissible[0];
    for &w_hat in &model.admissible {
        let idx = d.emp(eta, w_hat, a_next);
        let move_prob = p.lambda_e * job_finding[idx];
        let val = move_prob * cont.ev_e[idx] + (1.0 - move_prob) * stay;
        if val > best {
            best = val;
            arg = w_hat;
        }
    }
    (best, arg)
}

/// Search returns and application choices on the post-savings grid.
#[derive(Clone, Debug)]
pub struct SearchReturns {
    pub r_e: Vec<f64>,
    pub r_u: Vec<f64>,
    pub search_e: Vec<usize>,
    pub search_u: Vec<usize>,
}

pub fn search_returns(
    model: &Model,
    v_e: &[f64],
    v_u: &[f64],
    job_finding: &[f64],
) -> SearchReturns {
    let d = model.dims;
    let cont = Continuation::new(model, v_e, v_u);

    let mut emp: Vec<(f64, usize)> = vec![(0.0, 0); d.emp_len()];
    emp.par_chunks_mut(d.n_a)
        .enumerate()
        .for_each(|(row, out)| {
            let (eta, w) = (row / d.n_w, row % d.n_w);
            for (a_next, slot) in out.iter_mut().enumerate() {
                *slot = search_value_employed(model, &cont, job_finding, eta, w, a_next);
            }
        });
    let mut unemp: Vec<(f64, usize)> = vec![(0.0, 0); d.unemp_len()];
    unemp
        .par_chunks_mut(d.n_a)
        .enumerate()
        .for_each(|(eta, out)| {
            for (a_next, slot) in out.iter_mut().enumerate() {
                *slot = search_value_unemployed(model, &cont, job_finding, eta, a_next);
            }
        });

    let (r_e, search_e) = emp.into_iter().unzip();
    let (r_u, search_u) = unemp.into_iter().unzip();
    SearchReturns {
        r_e,
        r_u,
        search_e,
        search_u,
    }
}

/// Result of one application of the consumption/savings operator.
#[derive(Clone, Debug)]
pub struct BellmanOutput {
    pub v_e: Vec<f64>,
    pub v_u: Vec<f64>,
    pub savings_e: Vec<usize>,
    pub savings_u: Vec<usize>,
    pub consumption_e: Vec<f64>,
    pub consumption_u: Vec<f64>,
}

#[inline]
fn best_savings(u_row: &[f64], r_row: &[f64], beta: f64) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = usize::MAX;
    for (i, (&u, &r)) in u_row.iter().zip(r_row).enumerate() {
        let val = u + beta * r;
        if val > best {
            best = val;
            arg = i;
        }
    }
    (best, arg)
}

/// Maximizes `u(c) + β R(â)` over the wealth grid at every state.
pub fn bellman_update(
    model: &Model,
    table: &UtilityTable,
    r_e: &[f64],
    r_u: &[f64],
) -> Result<BellmanOutput> {
    let d = model.dims;
    let p = &model.params;
    let beta = p.beta;

    let mut emp: Vec<(f64, usize)> = vec![(0.0, 0); d.emp_len()];
    emp.par_chunks_mut(d.n_a)
        .enumerate()
        .for_each(|(row, out)| {
            let w = row % d.n_w;
            let r_row = &r_e[row * d.n_a..(row + 1) * d.n_a];
            for (a, slot) in out.iter_mut().enumerate() {
                *slot = best_savings(table.row(w, a), r_row, beta);
            }
        });
    let mut unemp: Vec<(f64, usize)> = vec![(0.0, 0); d.unemp_len()];
    unemp
        .par_chunks_mut(d.n_a)
        .enumerate()
        .for_each(|(eta, out)| {
            let r_row = &r_u[eta * d.n_a..(eta + 1) * d.n_a];
            for (a, slot) in out.iter_mut().enumerate() {
                *slot = best_savings(table.row(table.unemployed_row(), a), r_row, beta);
            }
        });

    if let Some(i) = emp.iter().position(|&(_, s)| s == usize::MAX) {
        return Err(Error::domain(
            "bellman update",
            format!("no feasible savings at employed state {i}"),
        ));
    }
    if let Some(i) = unemp.iter().position(|&(_, s)| s == usize::MAX) {
        return Err(Error::domain(
            "bellman update",
            format!("no feasible savings at unemployed state {i}"),
        ));
    }

    let wealth = &model.grids.wealth;
    let (v_e, savings_e): (Vec<f64>, Vec<usize>) = emp.into_iter().unzip();
    let (v_u, savings_u): (Vec<f64>, Vec<usize>) = unemp.into_iter().unzip();
    let consumption_e = savings_e
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let (w, a) = ((i / d.n_a) % d.n_w, i % d.n_a);
            consumption_from_budget(model.grids.wage[w], wealth[a], wealth[s], p)
        })
        .collect();
    let consumption_u = savings_u
        .iter()
        .enumerate()
        .map(|(i, &s)| consumption_from_budget(0.0, wealth[i % d.n_a], wealth[s], p))
        .collect();
    Ok(BellmanOutput {
        v_e,
        v_u,
        savings_e,
        savings_u,
        consumption_e,
        consumption_u,
    })
}

/// Converged worker values and policies for a fixed tightness function.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerSolution {
    pub dims: Dims,
    /// Tightness the solution was computed against, `[eta][wage][wealth]`.
    pub theta: Vec<f64>,
    /// `p(θ)` on the same layout.
    pub job_finding: Vec<f64>,
    pub v_e: Vec<f64>,
    pub v_u: Vec<f64>,
    /// Search returns, indexed by post-savings wealth.
    pub r_e: Vec<f64>,
    pub r_u: Vec<f64>,
    /// Application wage index given post-savings wealth.
    pub search_e: Vec<usize>,
    pub search_u: Vec<usize>,
    /// Next-period wealth index given current state.
    pub savings_e: Vec<usize>,
    pub savings_u: Vec<usize>,
    pub consumption_e: Vec<f64>,
    pub consumption_u: Vec<f64>,
    /// Application wage index given current state (`search` composed with `savings`).
    pub target_wage_e: Vec<usize>,
    pub target_wage_u: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
}

impl WorkerSolution {
    /// Probability that an employed worker in state `(eta, w, a)` moves to a new job this period.
    #[inline]
    pub fn employed_move_prob(&self, lambda_e: f64, eta: usize, w: usize, a: usize) -> f64 {
        let d = self.dims;
        let i = d.emp(eta, w, a);
        lambda_e * self.job_finding[d.emp(eta, self.target_wage_e[i], self.savings_e[i])]
    }

    /// Probability that an unemployed worker in state `(eta, a)` is hired this period.
    #[inline]
    pub fn unemployed_hire_prob(&self, eta: usize, a: usize) -> f64 {
        let d = self.dims;
        let i = d.unemp(eta, a);
        self.job_finding[d.emp(eta, self.target_wage_u[i], self.savings_u[i])]
    }
}

/// Hand-to-mouth guess: keep wealth constant and consume the flow budget forever.
pub fn initial_values(model: &Model) -> (Vec<f64>, Vec<f64>) {
    let d = model.dims;
    let p = &model.params;
    let wealth = &model.grids.wealth;
    let perpetual = |omega: f64, a: f64| {
        let mut c = consumption_from_budget(omega, a, a, p);
        if !(c > 0.0) {
            c = consumption_from_budget(omega, a, p.a_min, p);
        }
        crra(c, p.sigma) / (1.0 - p.beta)
    };
    let mut v_e = vec![0.0; d.emp_len()];
    for eta in 0..d.n_eta {
        for w in 0..d.n_w {
            for a in 0..d.n_a {
                v_e[d.emp(eta, w, a)] = perpetual(model.grids.wage[w], wealth[a]);
            }
        }
    }
    let mut v_u = vec![0.0; d.unemp_len()];
    for eta in 0..d.n_eta {
        for a in 0..d.n_a {
            v_u[d.unemp(eta, a)] = perpetual(0.0, wealth[a]);
        }
    }
    (v_e, v_u)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Value function iteration from the hand-to-mouth guess.
pub fn solve_household(model: &Model, theta: &[f64]) -> Result<WorkerSolution> {
    let (v_e, v_u) = initial_values(model);
    solve_household_from(model, theta, v_e, v_u)
}

/// Value function iteration from a supplied guess.
pub fn solve_household_from(
    model: &Model,
    theta: &[f64],
    mut v_e: Vec<f64>,
    mut v_u: Vec<f64>,
) -> Result<WorkerSolution> {
    let d = model.dims;
    let p = &model.params;
    if theta.len() != d.emp_len() || v_e.len() != d.emp_len() || v_u.len() != d.unemp_len() {
        return Err(Error::Shape(
            "household inputs do not match the grids".into(),
        ));
    }
    let job_finding: Vec<f64> = theta.iter().map(|&t| model.matching.p(t)).collect();
    let table = UtilityTable::new(model);

    let mut prev_residual = f64::INFINITY;
    let mut warned = false;
    let mut residual = f64::INFINITY;
    for it in 1..=p.max_iter_vfi {
        let sr = search_returns(model, &v_e, &v_u, &job_finding);
        let out = bellman_update(model, &table, &sr.r_e, &sr.r_u)?;
        residual = sup_diff(&out.v_e, &v_e).max(sup_diff(&out.v_u, &v_u));
        if !residual.is_finite() {
            return Err(Error::NonFinite {
                what: "worker values",
                index: out
                    .v_e
                    .iter()
                    .chain(&out.v_u)
                    .position(|x| !x.is_finite())
                    .unwrap_or(0),
            });
        }
        if it > 50 && residual > prev_residual * (1.0 + 1e-9) && !warned {
            warn!("household residual rose at iteration {it}: {prev_residual:e} -> {residual:e}");
            warned = true;
        }
        prev_residual = residual;
        v_e = out.v_e;
        v_u = out.v_u;
        if residual < p.tol_vfi {
            debug!("household converged in {it} iterations (residual {residual:e})");
            let target_wage_e = out
                .savings_e
                .iter()
                .enumerate()
                .map(|(i, &s)| sr.search_e[i - i % d.n_a + s])
                .collect();
            let target_wage_u = out
                .savings_u
                .iter()
                .enumerate()
                .map(|(i, &s)| sr.search_u[i - i % d.n_a + s])
                .collect();
            return Ok(WorkerSolution {
                dims: d,
                theta: theta.to_vec(),
                job_finding,
                v_e,
                v_u,
                r_e: sr.r_e,
                r_u: sr.r_u,
                search_e: sr.search_e,
                search_u: sr.search_u,
                savings_e: out.savings_e,
                savings_u: out.savings_u,
                consumption_e: out.consumption_e,
                consumption_u: out.consumption_u,
                target_wage_e,
                target_wage_u,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "household value function iteration",
        iterations: p.max_iter_vfi,
        residual,
    })
}
