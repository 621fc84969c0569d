use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_H_MIN: f64 = 1e-6;

/// The dimensionless triple (eps, mu, beta) and the depth floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub epsilon: f64,
    pub mu: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_h_min")]
    pub h_min: f64,
}

fn default_h_min() -> f64 {
    DEFAULT_H_MIN
}

impl SimulationParams {
    pub fn new(epsilon: f64, mu: f64, beta: f64) -> Result<Self> {
        let p = SimulationParams { epsilon, mu, beta, h_min: DEFAULT_H_MIN };
        p.validate()?;
        Ok(p)
    }

    pub fn with_h_min(mut self, h_min: f64) -> Result<Self> {
        self.h_min = h_min;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidParams(format!("mu = {} must lie in (0, 1]", self.mu)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta = {} must be >= 0", self.beta)));
        }
        if !(self.h_min > 0.0) {
            return Err(Error::InvalidParams(format!("h_min = {} must be > 0", self.h_min)));
        }
        Ok(())
    }
}
