//! 4-bit resistive crossbar synapses.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEVELS: u8 = 16;
pub const MAX_LEVEL: u8 = LEVELS - 1;
/// Ratio between maximum and minimum synapse conductance.
pub const CONDUCTANCE_RATIO: f64 = 20.0;
/// Normalized weight of the lowest level, G_min / G_max.
pub const W_MIN: f64 = 1.0 / CONDUCTANCE_RATIO;

fn level_step() -> f64 {
    (1.0 - W_MIN) / MAX_LEVEL as f64
}

/// Normalized weight w ∈ [W_MIN, 1] to the nearest level, ties rounding up.
pub fn quantize_weight(w: f64) -> u8 {
    let w = w.clamp(W_MIN, 1.0);
    let x = (w - W_MIN) / level_step();
    // tolerate representation error right at a tie
    ((x + 0.5 + 1e-9).floor() as i64).clamp(0, MAX_LEVEL as i64) as u8
}

/// Exact inverse of [`quantize_weight`] on level centers.
pub fn dequantize_level(level: u8) -> f64 {
    debug_assert!(level <= MAX_LEVEL);
    if level == MAX_LEVEL {
        return 1.0;
    }
    W_MIN + level as f64 * level_step()
}

/// Round w to one of the two neighbouring levels with probability given by the
/// fractional position, so the expected level change equals the analog update.
pub fn stochastic_quantize<R: Rng + ?Sized>(w: f64, rng: &mut R) -> u8 {
    let w = w.clamp(W_MIN, 1.0);
    let x = (w - W_MIN) / level_step();
    let lo = x.floor();
    let frac = x - lo;
    let up = rng.random::<f64>() < frac;
    ((lo as i64) + up as i64).clamp(0, MAX_LEVEL as i64) as u8
}

/// Apply a weight change `dw` to a stored level with unbiased stochastic
/// rounding. Changes are clamped to the level range.
pub fn stochastic_step<R: Rng + ?Sized>(level: u8, dw: f64, rng: &mut R) -> u8 {
    let x = (level as f64 + dw / level_step()).clamp(0.0, MAX_LEVEL as f64);
    let lo = x.floor();
    let frac = x - lo;
    let up = frac > 0.0 && rng.random::<f64>() < frac;
    (lo as u8 + up as u8).min(MAX_LEVEL)
}

/// Input-by-neuron matrix of quantized conductance levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapseMatrix {
    pub n_inputs: usize,
    pub n_neurons: usize,
    /// Maximum synapse resistance (Ω), i.e. the level-0 resistance.
    pub r_max: f64,
    /// Row-major: `levels[i * n_neurons + j]`.
    pub levels: Vec<u8>,
}

impl SynapseMatrix {
    pub fn uniform(n_inputs: usize, n_neurons: usize, r_max: f64, level: u8) -> Self {
        Self { n_inputs, n_neurons, r_max, levels: vec![level.min(MAX_LEVEL); n_inputs * n_neurons] }
    }

    /// Levels drawn uniformly from `lo..=hi`.
    pub fn random<R: Rng + ?Sized>(n_inputs: usize, n_neurons: usize, r_max: f64, lo: u8, hi: u8, rng: &mut R) -> Self {
        let levels = (0..n_inputs * n_neurons).map(|_| rng.random_range(lo..=hi)).collect();
        Self { n_inputs, n_neurons, r_max, levels }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() != self.n_inputs * self.n_neurons {
            return Err(Error::Checkpoint(format!(
                "level matrix has {} entries, expected {}x{}",
                self.levels.len(),
                self.n_inputs,
                self.n_neurons
            )));
        }
        if let Some(l) = self.levels.iter().find(|&&l| l > MAX_LEVEL) {
            return Err(Error::Checkpoint(format!("level {l} outside 0..=15")));
        }
        if !(self.r_max > 0.0) {
            return Err(Error::Checkpoint("r_max must be positive".into()));
        }
        Ok(())
    }

    pub fn g_min(&self) -> f64 {
        1.0 / self.r_max
    }

    pub fn g_max(&self) -> f64 {
        CONDUCTANCE_RATIO / self.r_max
    }

    /// Affine level-to-conductance map between G_min and G_max.
    pub fn conductance_of(&self, level: u8) -> f64 {
        self.g_max() * dequantize_level(level)
    }

    #[inline]
    pub fn level(&self, input: usize, neuron: usize) -> u8 {
        self.levels[input * self.n_neurons + neuron]
    }

    #[inline]
    pub fn set_level(&mut self, input: usize, neuron: usize, level: u8) {
        self.levels[input * self.n_neurons + neuron] = level.min(MAX_LEVEL);
    }

    pub fn weight(&self, input: usize, neuron: usize) -> f64 {
        dequantize_level(self.level(input, neuron))
    }

    /// Receptive field (normalized weights) of one neuron.
    pub fn column(&self, neuron: usize) -> Vec<f64> {
        (0..self.n_inputs).map(|i| self.weight(i, neuron)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn end_levels_and_resistances() {
        let m = SynapseMatrix::uniform(1, 1, 3.7e6, 0);
        assert_eq!(quantize_weight(W_MIN), 0);
        assert!((1.0 / m.conductance_of(0) - 3.7e6).abs() < 1e-6);
        assert_eq!(quantize_weight(1.0), 15);
        assert!((1.0 / m.conductance_of(15) - 185e3).abs() < 1e-6);
        assert!((m.g_max() / m.g_min() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn ties_round_up() {
        let mid = 0.5 * (dequantize_level(7) + dequantize_level(8));
        assert_eq!(quantize_weight(mid), 8);
        assert_eq!(quantize_weight(mid - 1e-6), 7);
    }

    #[test]
    fn clamps_out_of_range() {
        assert_eq!(quantize_weight(-3.0), 0);
        assert_eq!(quantize_weight(7.0), 15);
    }

    #[test]
    fn conductance_affine_in_level() {
        let m = SynapseMatrix::uniform(1, 1, 3.7e6, 0);
        let step = m.conductance_of(1) - m.conductance_of(0);
        for l in 1..=15 {
            let d = m.conductance_of(l) - m.conductance_of(l - 1);
            assert!((d - step).abs() < 1e-18);
        }
    }

    #[test]
    fn stochastic_rounding_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = dequantize_level(6) + 0.3 * (dequantize_level(7) - dequantize_level(6));
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| stochastic_quantize(w, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 6.3).abs() < 0.01, "{mean}");
    }

    #[test]
    fn stochastic_step_bounds_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for l in 0..=MAX_LEVEL {
            assert_eq!(stochastic_step(l, 0.0, &mut rng), l);
        }
        assert_eq!(stochastic_step(15, 0.5, &mut rng), 15);
        assert_eq!(stochastic_step(0, -0.5, &mut rng), 0);
    }

    proptest! {
        #[test]
        fn levels_round_trip(level in 0u8..16) {
            prop_assert_eq!(quantize_weight(dequantize_level(level)), level);
        }

        #[test]
        fn quantization_error_bounded(w in 0.0f64..1.2) {
            let l = quantize_weight(w);
            let back = dequantize_level(l);
            prop_assert!((back - w.clamp(W_MIN, 1.0)).abs() <= 0.5 * (1.0 - W_MIN) / 15.0 + 1e-9);
        }
    }
}
