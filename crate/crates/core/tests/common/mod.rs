//! Independent brute-force oracle for small instances.
//!
//! The worker and firm fixed points are re-derived from the model's
//! primitives with plain loops: the worker picks savings and an application
//! wage jointly by enumerating every pair, and the firm value is obtained by
//! solving its linear system directly instead of iterating. Transition rows are
//! rebuilt by walking the within-period stage tree.

#![allow(dead_code, clippy::needless_range_loop)]

use minwage::distribution::{build_transition_matrix, StateSpace};
use minwage::firm::solve_firm;
use minwage::{Equilibrium, Model, Parameters};

pub fn reduced_params() -> Parameters {
    Parameters {
        n_a: 5,
        n_w: 3,
        a_max: 20.0,
        tol_vfi: 1e-12,
        tol_firm: 1e-12,
        tol_outer: 1e-10,
        max_iter_vfi: 50_000,
        max_iter_firm: 50_000,
        ..Parameters::default()
    }
}

fn crra(c: f64, sigma: f64) -> f64 {
    if sigma == 1.0 {
        c.ln()
    } else {
        c.powf(1.0 - sigma) / (1.0 - sigma)
    }
}

fn job_finding(theta: f64, gamma: f64) -> f64 {
    theta / (1.0 + theta.powf(gamma)).powf(1.0 / gamma)
}

pub struct Oracle {
    v_e: Vec<Vec<Vec<f64>>>,
    v_u: Vec<Vec<f64>>,
    save_e: Vec<Vec<Vec<usize>>>,
    save_u: Vec<Vec<usize>>,
    apply_e: Vec<Vec<Vec<usize>>>,
    apply_u: Vec<Vec<usize>>,
}

/// Value iteration where each state maximizes over all (savings, wage) pairs.
pub fn oracle_workers(m: &Model, theta: &[f64]) -> Oracle {
    let p = &m.params;
    let (n_eta, n_w, n_a) = (m.dims.n_eta, m.dims.n_w, m.dims.n_a);
    let a = &m.grids.wealth;
    let w = &m.grids.wage;
    let t = &m.chain.transition;
    let th = |eta: usize, j: usize, k: usize| theta[(eta * n_w + j) * n_a + k];
    let pf = |eta, j, k| job_finding(th(eta, j, k), p.gamma);
    let cons = |omega: f64, i: usize, k: usize| p.y_min + omega + a[i] - a[k] / (1.0 + p.r);
    // a wage floor closes every submarket below it
    let open: Vec<usize> = (0..n_w).filter(|&j| w[j] >= p.w_min).collect();

    let mut o = Oracle {
        v_e: vec![vec![vec![0.0; n_a]; n_w]; n_eta],
        v_u: vec![vec![0.0; n_a]; n_eta],
        save_e: vec![vec![vec![0; n_a]; n_w]; n_eta],
        save_u: vec![vec![0; n_a]; n_eta],
        apply_e: vec![vec![vec![0; n_a]; n_w]; n_eta],
        apply_u: vec![vec![0; n_a]; n_eta],
    };
    for sweep in 0..200_000 {
        let ev_e = |eta: usize, j: usize, k: usize, v: &Vec<Vec<Vec<f64>>>| {
            (0..n_eta).map(|e| t[eta][e] * v[e][j][k]).sum::<f64>()
        };
        let ev_u = |eta: usize, k: usize, v: &Vec<Vec<f64>>| {
            (0..n_eta).map(|e| t[eta][e] * v[e][k]).sum::<f64>()
        };
        let mut next = Oracle {
            v_e: o.v_e.clone(),
            v_u: o.v_u.clone(),
            save_e: o.save_e.clone(),
            save_u: o.save_u.clone(),
            apply_e: o.apply_e.clone(),
            apply_u: o.apply_u.clone(),
        };
        for eta in 0..n_eta {
            for i in 0..n_a {
                let mut best = (f64::NEG_INFINITY, 0, 0);
                for k in 0..n_a {
                    let c = cons(0.0, i, k);
                    if c <= 0.0 {
                        continue;
                    }
                    for &j in &open {
                        let pj = pf(eta, j, k);
                        let v = crra(c, p.sigma)
                            + p.beta
                                * (pj * ev_e(eta, j, k, &o.v_e)
                                    + (1.0 - pj) * ev_u(eta, k, &o.v_u));
                        if v > best.0 {
                            best = (v, k, j);
                        }
                    }
                }
                next.v_u[eta][i] = best.0;
                next.save_u[eta][i] = best.1;
                next.apply_u[eta][i] = best.2;
                for cur in 0..n_w {
                    let mut best = (f64::NEG_INFINITY, 0, 0);
                    for k in 0..n_a {
                        let c = cons(w[cur], i, k);
                        if c <= 0.0 {
                            continue;
                        }
                        let stay = (0..n_eta)
                            .map(|e| {
                                t[eta][e]
                                    * ((1.0 - p.delta) * o.v_e[e][cur][k] + p.delta * o.v_u[e][k])
                            })
                            .sum::<f64>();
                        for &j in &open {
                            let move_p = p.lambda_e * pf(eta, j, k);
                            let v = crra(c, p.sigma)
                                + p.beta
                                    * (move_p * ev_e(eta, j, k, &o.v_e) + (1.0 - move_p) * stay);
                            if v > best.0 {
                                best = (v, k, j);
                            }
                        }
                    }
                    next.v_e[eta][cur][i] = best.0;
                    next.save_e[eta][cur][i] = best.1;
                    next.apply_e[eta][cur][i] = best.2;
                }
            }
        }
        let mut change = 0.0f64;
        for eta in 0..n_eta {
            for i in 0..n_a {
                change = change.max((next.v_u[eta][i] - o.v_u[eta][i]).abs());
                for cur in 0..n_w {
                    change = change.max((next.v_e[eta][cur][i] - o.v_e[eta][cur][i]).abs());
                }
            }
        }
        o = next;
        if sweep > 0 && change < 1e-13 {
            return o;
        }
    }
    panic!("oracle value iteration did not converge");
}

/// Solves `J = f + M J` for the firm value by Gaussian elimination.
pub fn oracle_firm(m: &Model, theta: &[f64], o: &Oracle) -> Vec<f64> {
    let p = &m.params;
    let (n_eta, n_w, n_a) = (m.dims.n_eta, m.dims.n_w, m.dims.n_a);
    let n = n_eta * n_w * n_a;
    let idx = |eta: usize, j: usize, k: usize| (eta * n_w + j) * n_a + k;
    let mut mat = vec![vec![0.0; n + 1]; n];
    for eta in 0..n_eta {
        for j in 0..n_w {
            for i in 0..n_a {
                let row = idx(eta, j, i);
                let k = o.save_e[eta][j][i];
                let target = o.apply_e[eta][j][i];
                let quit = p.lambda_e * job_finding(theta[idx(eta, target, k)], p.gamma);
                mat[row][row] += 1.0;
                for e in 0..n_eta {
                    mat[row][idx(e, j, k)] -=
                        (1.0 - p.delta) * (1.0 - quit) * p.beta * m.chain.transition[eta][e];
                }
                mat[row][n] = m.chain.levels[eta] * p.y - m.grids.wage[j];
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs()))
            .unwrap();
        mat.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = mat[r][col] / mat[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        mat[r][c] -= f * mat[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|r| mat[r][n] / mat[r][r]).collect()
}

/// Largest gaps between the solver and the oracle on one instance.
#[derive(Clone, Copy, Debug)]
pub struct OracleGap {
    pub worker_value: f64,
    pub firm_value: f64,
}

/// Compares converged worker values, policies and firm values with the
/// oracle. Policies must agree exactly; values are returned as gaps.
pub fn compare_with_oracle(m: &Model, eq: &Equilibrium) -> Result<OracleGap, String> {
    let d = m.dims;
    let o = oracle_workers(m, &eq.ws.theta);
    let mut worst = 0.0f64;
    for eta in 0..d.n_eta {
        for i in 0..d.n_a {
            let k = d.unemp(eta, i);
            worst = worst.max((eq.ws.v_u[k] - o.v_u[eta][i]).abs());
            if (eq.ws.savings_u[k], eq.ws.target_wage_u[k]) != (o.save_u[eta][i], o.apply_u[eta][i])
            {
                return Err(format!("unemployed policy differs at ({eta}, {i})"));
            }
            for j in 0..d.n_w {
                let k = d.emp(eta, j, i);
                worst = worst.max((eq.ws.v_e[k] - o.v_e[eta][j][i]).abs());
                if (eq.ws.savings_e[k], eq.ws.target_wage_e[k])
                    != (o.save_e[eta][j][i], o.apply_e[eta][j][i])
                {
                    return Err(format!("employed policy differs at ({eta}, {j}, {i})"));
                }
            }
        }
    }
    let j_solver = solve_firm(m, &eq.ws).map_err(|e| e.to_string())?;
    let j_oracle = oracle_firm(m, &eq.ws.theta, &o);
    let gap = j_solver
        .iter()
        .zip(&j_oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(OracleGap {
        worker_value: worst,
        firm_value: gap,
    })
}

/// Largest absolute gap between the assembled transition matrix and rows
/// rebuilt from the stage tree: match or not, then survive or separate, then
/// the productivity draw. Matching probabilities come from the model's own
/// matching function so that only the enumeration is under test.
pub fn stage_tree_gap(m: &Model, eq: &Equilibrium) -> Result<f64, String> {
    let pm = build_transition_matrix(m, eq).map_err(|e| e.to_string())?;
    let d = m.dims;
    let space = StateSpace::new(d);
    let (p, ws, t) = (&m.params, &eq.ws, &m.chain.transition);
    let mut worst = 0.0f64;
    for i in 0..space.len() {
        let s = space.state(i);
        let mut dense = vec![0.0; space.len()];
        match s.wage {
            Some(w) => {
                let k = d.emp(s.eta, w, s.wealth);
                let a1 = ws.savings_e[k];
                let target = ws.target_wage_e[k];
                let pi = p.lambda_e * m.matching.p(eq.market.theta[d.emp(s.eta, target, a1)]);
                for e2 in 0..d.n_eta {
                    dense[space.employed(e2, target, a1)] += pi * t[s.eta][e2];
                    dense[space.employed(e2, w, a1)] += (1.0 - pi) * (1.0 - p.delta) * t[s.eta][e2];
                    dense[space.unemployed(e2, a1)] += (1.0 - pi) * p.delta * t[s.eta][e2];
                }
            }
            None => {
                let k = d.unemp(s.eta, s.wealth);
                let a1 = ws.savings_u[k];
                let target = ws.target_wage_u[k];
                let pi = m.matching.p(eq.market.theta[d.emp(s.eta, target, a1)]);
                for e2 in 0..d.n_eta {
                    dense[space.employed(e2, target, a1)] += pi * t[s.eta][e2];
                    dense[space.unemployed(e2, a1)] += (1.0 - pi) * t[s.eta][e2];
                }
            }
        }
        let mut got = vec![0.0; space.len()];
        for (c, v) in pm.row(i) {
            got[c] += v;
        }
        for c in 0..space.len() {
            worst = worst.max((got[c] - dense[c]).abs());
        }
    }
    Ok(worst)
}
