use crate::calibration::{build_grids, Grids, Parameters};
use crate::error::{Error, Result};
use crate::layout::Dims;
use crate::matching::MatchingTech;
use crate::stochastic::{rouwenhorst, MarkovChain};

/// Everything the solvers need about one economy: parameters, grids and the
/// productivity chain. Immutable once built.
#[derive(Clone, Debug)]
pub struct Model {
    pub params: Parameters,
    pub grids: Grids,
    pub chain: MarkovChain,
    pub matching: MatchingTech,
    pub dims: Dims,
    /// Indices of wages at or above the minimum wage, ascending.
    pub admissible: Vec<usize>,
}

impl Model {
    pub fn new(params: Parameters) -> Result<Model> {
        params.validate()?;
        let grids = build_grids(&params);
        let chain = rouwenhorst(params.rho, params.sigma_eps, params.n_eta)?;
        Model::from_parts(params, grids, chain)
    }

    /// Assembles a model from explicit grids and chain (used for small hand-built instances).
    pub fn from_parts(params: Parameters, grids: Grids, chain: MarkovChain) -> Result<Model> {
        if grids.wealth.is_empty() || grids.wage.is_empty() {
            return Err(Error::Shape("empty grid".into()));
        }
        if grids.admissible_wage.len() != grids.wage.len() {
            return Err(Error::Shape(
                "admissible mask length differs from wage grid".into(),
            ));
        }
        let admissible: Vec<usize> = grids
            .admissible_wage
            .iter()
            .enumerate()
            .filter_map(|(j, &ok)| ok.then_some(j))
            .collect();
        if admissible.is_empty() {
            return Err(Error::NoAdmissibleWage {
                w_min: params.w_min,
            });
        }
        let matching = MatchingTech::new(params.gamma)?;
        let dims = Dims::new(chain.len(), grids.n_w(), grids.n_a());
        Ok(Model {
            params,
            grids,
            chain,
            matching,
            dims,
            admissible,
        })
    }

    /// Output of a match with productivity state `eta`.
    pub fn output(&self, eta: usize) -> f64 {
        self.chain.levels[eta] * self.params.y
    }
}
