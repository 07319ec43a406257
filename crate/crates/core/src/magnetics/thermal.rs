//! Thermal fluctuation field.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::llg::Macrospin;
use super::vec3::Vec3;
use crate::error::{Error, Result};

/// Temperature, time step and noise-stream identity for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalConfig {
    /// Kelvin; zero disables the noise term exactly.
    pub temperature: f64,
    /// Integrator step (s).
    pub dt: f64,
    pub rng_seed: u64,
    pub rng_stream: u64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self { temperature: 300.0, dt: 1e-12, rng_seed: 0, rng_stream: 0 }
    }
}

impl ThermalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {:e}", self.dt)));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        Self { rng_stream: stream, ..*self }
    }

    /// Noise generator for this (seed, stream) pair.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(self.rng_stream);
        rng
    }
}

/// Per-component standard deviation of the thermal field (A/m):
///
/// ```text
/// σ = sqrt( α/(1+α²) · 2·k_B·T / (γ·mu_0·M_s·V·dt) )
/// ```
pub fn thermal_sigma(cfg: &ThermalConfig, magnet: &Macrospin) -> f64 {
    if cfg.temperature == 0.0 {
        return 0.0;
    }
    let alpha = magnet.material.alpha;
    let c = &magnet.consts;
    let damping = alpha / (1.0 + alpha * alpha);
    let num = 2.0 * c.k_b * cfg.temperature;
    let den = c.gamma() * c.mu_0 * magnet.material.ms * magnet.geometry.volume() * cfg.dt;
    (damping * num / den).sqrt()
}

/// One independent Gaussian sample per component. Returns the exact zero vector
/// (without consuming randomness) when `sigma` is zero.
#[inline]
pub fn thermal_field<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Vec3 {
    if sigma == 0.0 {
        return [0.0; 3];
    }
    let gx: f64 = rng.sample(StandardNormal);
    let gy: f64 = rng.sample(StandardNormal);
    let gz: f64 = rng.sample(StandardNormal);
    [sigma * gx, sigma * gy, sigma * gz]
}
