//! Model constants, grid construction and the flat `key = value` config format.
//!
//! Every field has a default taken from the monthly calibration of the
//! baseline economy, so an empty config file describes the baseline model.
//! Lines look like `beta = 0.996`; `#` starts a comment. Unknown keys are
//! rejected so typos do not silently fall back to defaults.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How wealth nodes are placed on `[a_min, a_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WealthSpacing {
    Uniform,
    /// Nodes at `a_min + (a_max - a_min) * (exp(c x) - 1) / (exp(c) - 1)` for
    /// `x` uniform on `[0, 1]`; larger `c` packs nodes near the borrowing limit.
    Exponential,
}

impl fmt::Display for WealthSpacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WealthSpacing::Uniform => f.write_str("uniform"),
            WealthSpacing::Exponential => f.write_str("exponential"),
        }
    }
}

impl FromStr for WealthSpacing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(WealthSpacing::Uniform),
            "exponential" => Ok(WealthSpacing::Exponential),
            other => Err(format!("unknown wealth grid scheme `{other}`")),
        }
    }
}

/// All scalar model constants, grid sizes and solver tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    /// Monthly discount factor.
    pub beta: f64,
    /// Net monthly return on the risk-free asset.
    pub r: f64,
    /// Borrowing limit.
    pub a_min: f64,
    /// Top of the wealth grid.
    pub a_max: f64,
    /// Exogenous separation probability.
    pub delta: f64,
    /// Relative risk aversion.
    pub sigma: f64,
    /// Matching function elasticity parameter.
    pub gamma: f64,
    /// Probability an employed worker gets to search.
    pub lambda_e: f64,
    /// Vacancy posting cost.
    pub k: f64,
    /// Output scale; a match with productivity level `l` produces `l * y`.
    pub y: f64,
    /// Home production received in every state.
    pub y_min: f64,
    /// Persistence of log productivity.
    pub rho: f64,
    /// Standard deviation of the log-productivity innovation.
    pub sigma_eps: f64,
    /// Number of productivity states.
    pub n_eta: usize,
    /// Minimum wage; submarkets posting less are closed.
    pub w_min: f64,
    /// Top of the wage grid.
    pub w_max: f64,
    pub n_a: usize,
    pub n_w: usize,
    /// Default exponential: on a uniform 141-node grid over [-5, 700] one step
    /// is about five months of income, so savings never change and the
    /// wealth distribution stays wherever it starts.
    pub wealth_grid: WealthSpacing,
    /// Curvature of the exponential wealth grid (ignored when uniform).
    pub wealth_curvature: f64,
    pub tol_vfi: f64,
    pub tol_firm: f64,
    pub tol_outer: f64,
    pub tol_dist: f64,
    pub max_iter_vfi: usize,
    pub max_iter_firm: usize,
    pub max_iter_outer: usize,
    pub max_iter_dist: usize,
    /// Weight on the new firm value between outer iterations (1 = no damping).
    pub damping: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            beta: 0.996,
            r: 0.00327,
            a_min: -5.0,
            a_max: 700.0,
            delta: 0.00633,
            sigma: 2.0,
            gamma: 0.5,
            lambda_e: 0.0346,
            k: 0.77,
            y: 1.0,
            y_min: 0.05,
            rho: 0.99,
            sigma_eps: 0.05,
            n_eta: 2,
            w_min: 0.0,
            w_max: 1.4254,
            n_a: 141,
            n_w: 20,
            wealth_grid: WealthSpacing::Exponential,
            wealth_curvature: 3.0,
            tol_vfi: 1e-8,
            tol_firm: 1e-8,
            tol_outer: 1e-6,
            tol_dist: 1e-12,
            max_iter_vfi: 10_000,
            max_iter_firm: 10_000,
            max_iter_outer: 500,
            max_iter_dist: 1_000_000,
            damping: 1.0,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| Error::Parse {
        line,
        message: format!("bad value `{raw}` for `{key}`: {e}"),
    })
}

impl Parameters {
    /// Applies a single `key = value` assignment.
    fn set(&mut self, line: usize, key: &str, raw: &str) -> Result<()> {
        macro_rules! assign {
            ($($name:ident),* $(,)?) => {
                match key {
                    $(stringify!($name) => self.$name = parse_value(line, key, raw)?,)*
                    _ => {
                        return Err(Error::Parse {
                            line,
                            message: format!("unknown key `{key}`"),
                        })
                    }
                }
            };
        }
        assign!(
            beta,
            r,
            a_min,
            a_max,
            delta,
            sigma,
            gamma,
            lambda_e,
            k,
            y,
            y_min,
            rho,
            sigma_eps,
            n_eta,
            w_min,
            w_max,
            n_a,
            n_w,
            wealth_grid,
            wealth_curvature,
            tol_vfi,
            tol_firm,
            tol_outer,
            tol_dist,
            max_iter_vfi,
            max_iter_firm,
            max_iter_outer,
            max_iter_dist,
            damping,
        );
        Ok(())
    }

    /// Parses a config document. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Parameters> {
        let mut p = Parameters::default();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            p.set(line, key.trim(), value.trim())?;
        }
        p.validate()?;
        Ok(p)
    }

    /// Serializes every field; `parse` of the output reproduces `self` exactly.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        macro_rules! emit {
            ($($name:ident),* $(,)?) => {
                $( let _ = writeln!(out, "{} = {}", stringify!($name), self.$name); )*
            };
        }
        emit!(
            beta,
            r,
            a_min,
            a_max,
            delta,
            sigma,
            gamma,
            lambda_e,
            k,
            y,
            y_min,
            rho,
            sigma_eps,
            n_eta,
            w_min,
            w_max,
            n_a,
            n_w,
            wealth_grid,
            wealth_curvature,
            tol_vfi,
            tol_firm,
            tol_outer,
            tol_dist,
            max_iter_vfi,
            max_iter_firm,
            max_iter_outer,
            max_iter_dist,
            damping,
        );
        out
    }

    /// Checks every invariant, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Invalid {
                    key,
                    reason: reason(),
                })
            }
        }
        let unit_open = |x: f64| x > 0.0 && x < 1.0;

        let fields = [
            ("beta", self.beta),
            ("r", self.r),
            ("a_min", self.a_min),
            ("a_max", self.a_max),
            ("delta", self.delta),
            ("sigma", self.sigma),
            ("gamma", self.gamma),
            ("lambda_e", self.lambda_e),
            ("k", self.k),
            ("y", self.y),
            ("y_min", self.y_min),
            ("rho", self.rho),
            ("sigma_eps", self.sigma_eps),
            ("w_min", self.w_min),
            ("w_max", self.w_max),
            ("wealth_curvature", self.wealth_curvature),
            ("damping", self.damping),
        ];
        for (key, v) in fields {
            check(v.is_finite(), key, || format!("{v} is not finite"))?;
        }

        check(unit_open(self.beta), "beta", || {
            format!("{} not in (0, 1)", self.beta)
        })?;
        check(self.r > -1.0, "r", || format!("{} must exceed -1", self.r))?;
        check(self.beta * (1.0 + self.r) < 1.0, "r", || {
            format!(
                "beta * (1 + r) = {} must be below 1",
                self.beta * (1.0 + self.r)
            )
        })?;
        check(unit_open(self.delta), "delta", || {
            format!("{} not in (0, 1)", self.delta)
        })?;
        check(unit_open(self.lambda_e), "lambda_e", || {
            format!("{} not in (0, 1)", self.lambda_e)
        })?;
        check(self.gamma > 0.0, "gamma", || {
            format!("{} must be positive", self.gamma)
        })?;
        check(self.sigma > 0.0, "sigma", || {
            format!("{} must be positive", self.sigma)
        })?;
        check(self.k > 0.0, "k", || format!("{} must be positive", self.k))?;
        check(self.y > 0.0, "y", || format!("{} must be positive", self.y))?;
        check(self.y_min > 0.0, "y_min", || {
            format!("{} must be positive", self.y_min)
        })?;
        check(self.rho.abs() < 1.0, "rho", || {
            format!("|{}| must be below 1", self.rho)
        })?;
        check(self.sigma_eps > 0.0, "sigma_eps", || {
            format!("{} must be positive", self.sigma_eps)
        })?;
        check(self.n_eta >= 2, "n_eta", || {
            format!("{} must be at least 2", self.n_eta)
        })?;
        check(self.a_min < self.a_max, "a_max", || {
            format!("{} must exceed a_min = {}", self.a_max, self.a_min)
        })?;
        check(self.w_max > 0.0, "w_max", || {
            format!("{} must be positive", self.w_max)
        })?;
        check(
            self.w_min >= 0.0 && self.w_min <= self.w_max,
            "w_min",
            || format!("{} not in [0, w_max = {}]", self.w_min, self.w_max),
        )?;
        check(self.n_a >= 2, "n_a", || {
            format!("{} must be at least 2", self.n_a)
        })?;
        check(self.n_w >= 2, "n_w", || {
            format!("{} must be at least 2", self.n_w)
        })?;
        check(self.wealth_curvature > 0.0, "wealth_curvature", || {
            format!("{} must be positive", self.wealth_curvature)
        })?;
        let slack = self.constraint_consumption();
        check(slack > 0.0, "a_min", || {
            format!("consumption at the borrowing limit is {slack}, must be positive")
        })?;
        for (key, tol) in [
            ("tol_vfi", self.tol_vfi),
            ("tol_firm", self.tol_firm),
            ("tol_outer", self.tol_outer),
            ("tol_dist", self.tol_dist),
        ] {
            check(tol > 0.0 && tol.is_finite(), key, || {
                format!("{tol} must be positive")
            })?;
        }
        for (key, cap) in [
            ("max_iter_vfi", self.max_iter_vfi),
            ("max_iter_firm", self.max_iter_firm),
            ("max_iter_outer", self.max_iter_outer),
            ("max_iter_dist", self.max_iter_dist),
        ] {
            check(cap >= 1, key, || "must be at least 1".to_string())?;
        }
        check(self.damping > 0.0 && self.damping <= 1.0, "damping", || {
            format!("{} not in (0, 1]", self.damping)
        })?;
        Ok(())
    }

    /// Consumption of an unemployed worker who stays at the borrowing limit.
    pub fn constraint_consumption(&self) -> f64 {
        self.y_min + self.a_min - self.a_min / (1.0 + self.r)
    }

    pub fn with_w_min(&self, w_min: f64) -> Parameters {
        Parameters {
            w_min,
            ..self.clone()
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Parameters> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Parameters::parse(&text)
}

/// Wealth and wage grids shared by every module.
#[derive(Clone, Debug, PartialEq)]
pub struct Grids {
    pub wealth: Vec<f64>,
    pub wage: Vec<f64>,
    /// `admissible_wage[j]` iff `wage[j] >= w_min`.
    pub admissible_wage: Vec<bool>,
}

impl Grids {
    pub fn n_a(&self) -> usize {
        self.wealth.len()
    }

    pub fn n_w(&self) -> usize {
        self.wage.len()
    }

    /// Index of the first wage a submarket may post.
    pub fn first_admissible(&self) -> Option<usize> {
        self.admissible_wage.iter().position(|&ok| ok)
    }

    /// Index of the wealth node closest to `a`.
    pub fn nearest_wealth(&self, a: f64) -> usize {
        let mut best = 0;
        for (i, &w) in self.wealth.iter().enumerate() {
            if (w - a).abs() < (self.wealth[best] - a).abs() {
                best = i;
            }
        }
        best
    }
}

fn uniform_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / last).collect();
    nodes[0] = lo;
    nodes[n - 1] = hi;
    nodes
}

/// Builds the wealth and wage grids for validated parameters.
pub fn build_grids(p: &Parameters) -> Grids {
    let wealth = match p.wealth_grid {
        WealthSpacing::Uniform => uniform_nodes(p.a_min, p.a_max, p.n_a),
        WealthSpacing::Exponential => {
            let c = p.wealth_curvature;
            let span = p.a_max - p.a_min;
            let denom = c.exp_m1();
            let last = (p.n_a - 1) as f64;
            let mut nodes: Vec<f64> = (0..p.n_a)
                .map(|i| p.a_min + span * (c * i as f64 / last).exp_m1() / denom)
                .collect();
            nodes[0] = p.a_min;
            nodes[p.n_a - 1] = p.a_max;
            nodes
        }
    };
    let wage: Vec<f64> = (0..p.n_w)
        .map(|j| {
            if j == p.n_w - 1 {
                p.w_max
            } else {
                p.w_max * j as f64 / (p.n_w - 1) as f64
            }
        })
        .collect();
    let admissible_wage = wage.iter().map(|&w| w >= p.w_min).collect();
    Grids {
        wealth,
        wage,
        admissible_wage,
    }
}
