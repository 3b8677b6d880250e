//! Physical parameters of the strained vortex family.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Strain strength `mu`, circulation `alpha` and blow-up time `t_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainParams {
    mu: f64,
    alpha: f64,
    t_star: f64,
}

impl StrainParams {
    pub fn new(mu: f64, alpha: f64, t_star: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 1.0) {
            return Err(LabError::param("mu", format!("must satisfy mu > 1, got {mu}")));
        }
        if !alpha.is_finite() {
            return Err(LabError::param("alpha", "must be finite"));
        }
        if !(t_star.is_finite() && t_star > 0.0) {
            return Err(LabError::param("t_star", format!("must be positive, got {t_star}")));
        }
        Ok(Self { mu, alpha, t_star })
    }

    /// Normalized blow-up time `t_star = 1`.
    pub fn unit(mu: f64, alpha: f64) -> Result<Self> {
        Self::new(mu, alpha, 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    /// Vertical stretching exponent `(2mu+1)/(2(mu-1))`, always above 1.
    pub fn chi(&self) -> f64 {
        chi(self.mu)
    }

    /// Constant shift `(mu+2)/(2(mu-1))` carried by the horizontal components.
    pub fn horizontal_shift(&self) -> f64 {
        (self.mu + 2.0) / (2.0 * (self.mu - 1.0))
    }

    /// Self-similar scale `(mu-1)/(t_star - t)`.
    pub fn beta(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok((self.mu - 1.0) / (self.t_star - t))
    }

    /// Strain rate `mu/(2(t_star - t))` of the linear part.
    pub fn strain_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.mu / (2.0 * (self.t_star - t)))
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t >= self.t_star {
            return Err(LabError::param(
                "t",
                format!("time {t} must be finite and before the blow-up time {}", self.t_star),
            ));
        }
        Ok(())
    }
}

pub fn chi(mu: f64) -> f64 {
    (2.0 * mu + 1.0) / (2.0 * (mu - 1.0))
}
