//! Material constants of the two subdomains.

use crate::error::{Error, Result};
use crate::mesh::Subdomain;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub mu: f64,
    pub eps: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { mu: 1.0, eps: 1.0 }
    }
}

impl MaterialParams {
    pub fn new(mu: f64, eps: f64) -> Result<Self> {
        let m = Self { mu, eps };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.eps > 0.0 && self.mu.is_finite() && self.eps.is_finite()) {
            return Err(Error::Config(format!("material needs mu > 0 and eps > 0, got mu={} eps={}", self.mu, self.eps)));
        }
        Ok(())
    }

    /// Impedance √(μ/ε).
    pub fn z(&self) -> f64 {
        (self.mu / self.eps).sqrt()
    }

    /// Wave speed 1/√(με).
    pub fn c(&self) -> f64 {
        1.0 / (self.mu * self.eps).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Materials {
    pub plus: MaterialParams,
    pub minus: MaterialParams,
}

impl Materials {
    pub fn uniform(m: MaterialParams) -> Self {
        Self { plus: m, minus: m }
    }

    pub fn get(&self, s: Subdomain) -> MaterialParams {
        match s {
            Subdomain::Plus => self.plus,
            Subdomain::Minus => self.minus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plus.validate()?;
        self.minus.validate()
    }
}
