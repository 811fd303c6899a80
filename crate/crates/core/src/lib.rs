//! Steady-state solver for a labor market with directed search, on-the-job
//! search, incomplete markets and idiosyncratic productivity risk, plus the
//! minimum-wage counterfactuals built on it.

// Grid loops index several parallel arrays, and `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod distribution;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod firm;
pub mod household;
pub mod layout;
pub mod matching;
pub mod model;
pub mod stochastic;

pub use calibration::{build_grids, load_config, Grids, Parameters, WealthSpacing};
pub use equilibrium::{solve_equilibrium, Equilibrium};
pub use error::{Error, Result};
pub use firm::MarketSide;
pub use household::WorkerSolution;
pub use layout::Dims;
pub use matching::MatchingTech;
pub use model::Model;
pub use stochastic::{chain_stationary, rouwenhorst, MarkovChain};
