//! Bernoulli rate encoding of pixel intensities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    /// Spike probability per step for a full-intensity pixel.
    pub p_max: f64,
    /// Steps per image presentation.
    pub t_s: usize,
    /// Steps a row voltage stays on after an input spike.
    pub tau_0: u32,
    /// Row voltage amplitude (V).
    pub v_row: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { p_max: 0.064, t_s: 340, tau_0: 50, v_row: 1.0 }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max < 1.0) {
            return Err(Error::InvalidParameter(format!("p_max {} outside (0, 1)", self.p_max)));
        }
        if self.t_s == 0 || self.tau_0 == 0 {
            return Err(Error::InvalidParameter("t_s and tau_0 must be positive".into()));
        }
        if !(self.v_row > 0.0 && self.v_row.is_finite()) {
            return Err(Error::InvalidParameter(format!("v_row {} must be positive", self.v_row)));
        }
        Ok(())
    }

    pub fn spike_probability(&self, pixel: f64) -> f64 {
        self.p_max * pixel.clamp(0.0, 1.0)
    }

    /// Probability that a row is driven at a given step in steady state.
    pub fn active_probability(&self, pixel: f64) -> f64 {
        1.0 - (1.0 - self.spike_probability(pixel)).powi(self.tau_0 as i32)
    }
}

/// Draw this step's input spikes. Zero pixels consume no randomness.
pub fn draw_spikes<R: Rng + ?Sized>(image: &[f64], cfg: &EncoderConfig, rng: &mut R, out: &mut Vec<usize>) {
    out.clear();
    for (i, &v) in image.iter().enumerate() {
        if v > 0.0 && rng.random::<f64>() < cfg.spike_probability(v) {
            out.push(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rate(pixel: f64, steps: usize) -> f64 {
        let cfg = EncoderConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut out = Vec::new();
        let mut n = 0;
        for _ in 0..steps {
            draw_spikes(&[pixel], &cfg, &mut rng, &mut out);
            n += out.len();
        }
        n as f64 / steps as f64
    }

    #[test]
    fn full_and_half_intensity_rates() {
        let n = 100_000;
        let se = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
        let r = rate(1.0, n);
        assert!((r - 0.064).abs() < 3.0 * se(0.064), "{r}");
        let r = rate(0.5, n);
        assert!((r - 0.032).abs() < 3.0 * se(0.032), "{r}");
        assert_eq!(rate(0.0, n), 0.0);
    }

    #[test]
    fn validation() {
        assert!(EncoderConfig { p_max: 1.0, ..Default::default() }.validate().is_err());
        assert!(EncoderConfig { v_row: 0.0, ..Default::default() }.validate().is_err());
        assert!(EncoderConfig::default().validate().is_ok());
    }
}
