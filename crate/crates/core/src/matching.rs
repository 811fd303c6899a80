//! Matching technology `p(θ) = θ (1 + θ^γ)^(-1/γ)`, `q(θ) = p(θ) / θ`.
//!
//! Both probabilities stay inside `[0, 1]` for every `θ ≥ 0`, so no clamping is applied.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingTech {
    pub gamma: f64,
}

impl MatchingTech {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(MatchingTech { gamma })
        } else {
            Err(Error::domain(
                "matching",
                format!("gamma = {gamma} must be positive"),
            ))
        }
    }

    /// Worker's job-finding probability. Unchecked; callers guarantee `theta >= 0`.
    #[inline]
    pub fn p(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            0.0
        } else {
            theta * self.q(theta)
        }
    }

    /// Vacancy-filling probability, with `q(0) = 1`.
    #[inline]
    pub fn q(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            1.0
        } else {
            (1.0 + theta.powf(self.gamma)).powf(-1.0 / self.gamma)
        }
    }

    /// `q^{-1}(x) = (x^{-γ} - 1)^{1/γ}`. Unchecked; callers guarantee `x ∈ (0, 1]`.
    #[inline]
    pub fn q_inv(&self, x: f64) -> f64 {
        if x >= 1.0 {
            0.0
        } else {
            (x.powf(-self.gamma) - 1.0).powf(1.0 / self.gamma)
        }
    }

    pub fn job_finding(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.p(theta))
    }

    pub fn vacancy_filling(&self, theta: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.q(theta))
    }

    pub fn invert_vacancy_filling(&self, x: f64) -> Result<f64> {
        if x > 0.0 && x <= 1.0 {
            Ok(self.q_inv(x))
        } else {
            Err(Error::domain(
                "vacancy filling inverse",
                format!("{x} not in (0, 1]"),
            ))
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "tightness",
            format!("{theta} must be finite and non-negative"),
        ))
    }
}
