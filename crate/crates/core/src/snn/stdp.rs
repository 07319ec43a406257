//! Exponential STDP kernel with nearest-spike pairing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time constants in time steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StdpConfig {
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
}

impl Default for StdpConfig {
    fn default() -> Self {
        Self { tau_plus: 4.5, tau_minus: 5.0, eta_plus: 0.03, eta_minus: 0.01 }
    }
}

impl StdpConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.tau_plus, self.tau_minus, self.eta_plus, self.eta_minus].iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParameter("STDP constants must be positive".into()));
        }
        Ok(())
    }

    /// Weight change for spike-time difference `dt = t_post − t_pre` (steps).
    ///
    /// ```text
    /// Δw =  η+ · w · exp(−Δt/τ+)   for Δt ≥ 0  (pre before or with post)
    /// Δw = −η− · w · exp( Δt/τ−)   for Δt < 0
    /// ```
    pub fn delta_w(&self, w: f64, dt: f64) -> f64 {
        if dt >= 0.0 {
            self.eta_plus * w * (-dt / self.tau_plus).exp()
        } else {
            -self.eta_minus * w * (dt / self.tau_minus).exp()
        }
    }
}
