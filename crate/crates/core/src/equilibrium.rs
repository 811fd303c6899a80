//! Outer fixed point between the worker problem and free entry.
//!
//! Starting from a guess for the firm value `J`, each outer iteration derives
//! tightness from `J`, solves the worker problem for that tightness, solves the
//! firm problem under the resulting policies, and compares the new `J` with the
//! one it started from. The returned market pairs the final `J` with the
//! tightness derived from it, so free entry holds exactly and the firm
//! Bellman equation holds to within `tol_outer`.

use log::info;

use crate::error::{Error, Result};
use crate::firm::{initial_firm_value, solve_firm_from, tightness_from_firm_value, MarketSide};
use crate::household::{initial_values, solve_household_from, WorkerSolution};
use crate::model::Model;

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub ws: WorkerSolution,
    pub market: MarketSide,
    pub iterations: usize,
    /// Sup-norm change in `J` over the last outer iteration.
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// One pass of steps (tightness, workers, firms) from a given firm value.
pub fn outer_step(
    model: &Model,
    j: &[f64],
    warm: Option<&WorkerSolution>,
) -> Result<(Vec<f64>, WorkerSolution, Vec<f64>)> {
    let theta = tightness_from_firm_value(model, j);
    let (v_e, v_u) = match warm {
        Some(ws) => (ws.v_e.clone(), ws.v_u.clone()),
        None => initial_values(model),
    };
    let ws = solve_household_from(model, &theta, v_e, v_u)?;
    let (j_new, _) = solve_firm_from(model, &ws, j.to_vec())?;
    Ok((theta, ws, j_new))
}

pub fn solve_equilibrium(model: &Model) -> Result<Equilibrium> {
    let p = &model.params;
    let mut j = initial_firm_value(model);
    let mut warm: Option<WorkerSolution> = None;
    let mut history = Vec::new();

    for it in 1..=p.max_iter_outer {
        let (theta, ws, j_new) = outer_step(model, &j, warm.as_ref())?;
        let next: Vec<f64> = if p.damping == 1.0 {
            j_new
        } else {
            j_new
                .iter()
                .zip(&j)
                .map(|(new, old)| p.damping * new + (1.0 - p.damping) * old)
                .collect()
        };
        let residual = sup_diff(&next, &j);
        if !residual.is_finite() {
            let index = next.iter().position(|x| !x.is_finite()).unwrap_or(0);
            return Err(Error::NonFinite {
                what: "firm values (outer loop)",
                index,
            });
        }
        history.push(residual);
        info!(
            "outer {it}: residual {residual:e} (household {} sweeps)",
            ws.iterations
        );
        if residual < p.tol_outer {
            return Ok(Equilibrium {
                ws,
                market: MarketSide { j, theta },
                iterations: it,
                residual,
                residual_history: history,
            });
        }
        j = next;
        warm = Some(ws);
    }
    Err(Error::NoConvergence {
        what: "equilibrium outer loop",
        iterations: p.max_iter_outer,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
    })
}
