//! Value of a filled job and submarket tightness under free entry.
//!
//! Job values live on the full wage grid, including wages below the minimum;
//! the floor only closes entry into those submarkets.

use log::debug;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::household::WorkerSolution;
use crate::model::Model;

/// Firm values and tightness on `[eta][wage][wealth]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketSide {
    pub j: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Flow-profit perpetuity `(η y - w) / (1 - β(1-δ))`, floored at zero.
pub fn initial_firm_value(model: &Model) -> Vec<f64> {
    let d = model.dims;
    let p = &model.params;
    let mut j = vec![0.0; d.emp_len()];
    for eta in 0..d.n_eta {
        for w in 0..d.n_w {
            let v = ((model.output(eta) - model.grids.wage[w]) / (1.0 - p.beta * (1.0 - p.delta)))
                .max(0.0);
            for a in 0..d.n_a {
                j[d.emp(eta, w, a)] = v;
            }
        }
    }
    j
}

/// One synchronous sweep of the filled-job Bellman equation under fixed worker policies.
pub fn firm_value_update(model: &Model, ws: &WorkerSolution, j_prev: &[f64]) -> Result<Vec<f64>> {
    let d = model.dims;
    if j_prev.len() != d.emp_len() || ws.dims != d {
        return Err(Error::Shape("firm value does not match the grids".into()));
    }
    let p = &model.params;
    let mut next = vec![0.0; d.emp_len()];
    next.par_chunks_mut(d.n_a)
        .enumerate()
        .for_each(|(row, out)| {
            let (eta, w) = (row / d.n_w, row % d.n_w);
            let flow = model.output(eta) - model.grids.wage[w];
            for (a, slot) in out.iter_mut().enumerate() {
                let i = d.emp(eta, w, a);
                let a_next = ws.savings_e[i];
                let quit = ws.employed_move_prob(p.lambda_e, eta, w, a);
                let cont = model.chain.expect(eta, |e2| j_prev[d.emp(e2, w, a_next)]);
                *slot = flow + (1.0 - p.delta) * (1.0 - quit) * p.beta * cont;
            }
        });
    Ok(next)
}

/// Iterates [`firm_value_update`] to its fixed point from `init`.
pub fn solve_firm_from(
    model: &Model,
    ws: &WorkerSolution,
    init: Vec<f64>,
) -> Result<(Vec<f64>, usize)> {
    let p = &model.params;
    let mut j = init;
    let mut residual = f64::INFINITY;
    for it in 1..=p.max_iter_firm {
        let next = firm_value_update(model, ws, &j)?;
        residual = next
            .iter()
            .zip(&j)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        j = next;
        if !residual.is_finite() {
            let index = j.iter().position(|x| !x.is_finite()).unwrap_or(0);
            return Err(Error::NonFinite {
                what: "firm values",
                index,
            });
        }
        if residual < p.tol_firm {
            debug!("firm values converged in {it} sweeps (residual {residual:e})");
            return Ok((j, it));
        }
    }
    Err(Error::NoConvergence {
        what: "firm value iteration",
        iterations: p.max_iter_firm,
        residual,
    })
}

pub fn solve_firm(model: &Model, ws: &WorkerSolution) -> Result<Vec<f64>> {
    solve_firm_from(model, ws, initial_firm_value(model)).map(|(j, _)| j)
}

/// Expected value of a match formed in submarket `(eta, w, a)`, discounted one period.
#[inline]
pub fn entry_value(model: &Model, j: &[f64], eta: usize, w: usize, a: usize) -> f64 {
    let d = model.dims;
    model.params.beta * model.chain.expect(eta, |e2| j[d.emp(e2, w, a)])
}

/// Free-entry tightness: `q^{-1}(k / βE[J])` where entry pays and the wage is admissible, else 0.
pub fn tightness_from_firm_value(model: &Model, j: &[f64]) -> Vec<f64> {
    let d = model.dims;
    let k = model.params.k;
    let mut theta = vec![0.0; d.emp_len()];
    theta
        .par_chunks_mut(d.n_a)
        .enumerate()
        .for_each(|(row, out)| {
            let (eta, w) = (row / d.n_w, row % d.n_w);
            if !model.grids.admissible_wage[w] {
                return;
            }
            for (a, slot) in out.iter_mut().enumerate() {
                let value = entry_value(model, j, eta, w, a);
                if value >= k {
                    *slot = model.matching.q_inv(k / value);
                }
            }
        });
    theta
}

/// Largest `|−k + β q(θ) E[J]|` over submarkets with positive tightness.
pub fn free_entry_residual(model: &Model, market: &MarketSide) -> f64 {
    let d = model.dims;
    let mut worst = 0.0f64;
    for eta in 0..d.n_eta {
        for w in 0..d.n_w {
            for a in 0..d.n_a {
                let t = market.theta[d.emp(eta, w, a)];
                if t > 0.0 {
                    let value = entry_value(model, &market.j, eta, w, a);
                    worst = worst.max((-model.params.k + model.matching.q(t) * value).abs());
                }
            }
        }
    }
    worst
}
