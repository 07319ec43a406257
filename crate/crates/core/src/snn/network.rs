//! Crossbar network of stochastic MTJ neurons with lateral inhibition,
//! homeostasis and STDP.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{draw_spikes, EncoderConfig};
use super::stdp::StdpConfig;
use super::synapse::{stochastic_step, SynapseMatrix, MAX_LEVEL};
use crate::device::{Backend, DeviceParams, EnergyLedger, MtjNeuron, SwitchingModel};
use crate::error::{Error, Result};

const STREAM_INIT: u64 = 0;
const STREAM_RUN: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_neurons: usize,
    pub encoder: EncoderConfig,
    pub stdp: StdpConfig,
    /// Inhibition duration (steps).
    pub tau_inh: u32,
    /// Homeostasis divisor increment per emitted spike.
    pub homeostasis_beta: f64,
    /// Level-0 synapse resistance (Ω).
    pub r_max: f64,
    /// Inclusive range for the random initial levels.
    pub init_levels: [u8; 2],
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_neurons: 9,
            encoder: EncoderConfig::default(),
            stdp: StdpConfig::default(),
            tau_inh: 50,
            homeostasis_beta: 0.05,
            r_max: 3.7e6,
            init_levels: [4, 11],
            seed: 2015,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.stdp.validate()?;
        if self.n_neurons == 0 {
            return Err(Error::InvalidParameter("network needs at least one neuron".into()));
        }
        if !(self.homeostasis_beta >= 0.0) {
            return Err(Error::InvalidParameter("homeostasis_beta must be non-negative".into()));
        }
        if !(self.r_max > 0.0) {
            return Err(Error::InvalidParameter("r_max must be positive".into()));
        }
        let [lo, hi] = self.init_levels;
        if lo > hi || hi > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!("init_levels [{lo}, {hi}] invalid")));
        }
        Ok(())
    }
}

/// Which mechanisms are live for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub stdp: bool,
    pub homeostasis: bool,
    pub inhibition: bool,
}

impl Mode {
    pub const TRAIN: Mode = Mode { stdp: true, homeostasis: true, inhibition: true };
    pub const TEST: Mode = Mode { stdp: false, homeostasis: false, inhibition: true };
    pub const FREE: Mode = Mode { stdp: false, homeostasis: false, inhibition: false };
}

#[derive(Debug, Clone)]
pub struct NetworkState {
    pub neurons: Vec<MtjNeuron>,
    /// Homeostasis divisors, each ≥ 1.
    pub theta: Vec<f64>,
    pub inhibition_remaining: u32,
    /// Neuron whose spike started the current inhibition window.
    pub inhibition_exempt: Option<usize>,
    pub pre_traces: Vec<Option<u64>>,
    pub post_traces: Vec<Option<u64>>,
    pub row_active_remaining: Vec<u32>,
    pub rng: ChaCha8Rng,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub input_spikes: usize,
    pub currents: Vec<f64>,
    pub effective: Vec<f64>,
    pub switched: Vec<usize>,
    pub winner: Option<usize>,
    /// Largest ungated P_sw(I_eff) across neurons.
    pub max_probability: f64,
}

/// I_j = Σ_i active(i) · V_row · G_ij with the heavy metal as virtual ground.
pub fn crossbar_current(row_active_remaining: &[u32], weights: &SynapseMatrix, v_row: f64) -> Vec<f64> {
    let mut out = vec![0.0; weights.n_neurons];
    for (i, _) in row_active_remaining.iter().enumerate().filter(|(_, &r)| r > 0) {
        for (j, o) in out.iter_mut().enumerate() {
            *o += weights.conductance_of(weights.level(i, j));
        }
    }
    out.iter_mut().for_each(|o| *o *= v_row);
    out
}

#[derive(Debug, Clone)]
pub struct Network {
    pub config: NetworkConfig,
    pub device: DeviceParams,
    pub weights: SynapseMatrix,
    pub state: NetworkState,
    model: Arc<dyn SwitchingModel>,
    spikes: Vec<usize>,
}

impl Network {
    /// Fresh network with seeded random initial weights.
    pub fn new(config: NetworkConfig, device: DeviceParams, model: Arc<dyn SwitchingModel>, n_inputs: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(STREAM_INIT);
        let [lo, hi] = config.init_levels;
        let weights = SynapseMatrix::random(n_inputs, config.n_neurons, config.r_max, lo, hi, &mut rng);
        Self::with_weights(config, device, model, weights)
    }

    pub fn with_weights(
        config: NetworkConfig,
        device: DeviceParams,
        model: Arc<dyn SwitchingModel>,
        weights: SynapseMatrix,
    ) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        if weights.n_neurons != config.n_neurons {
            return Err(Error::InvalidParameter(format!(
                "weights have {} columns, config has {} neurons",
                weights.n_neurons, config.n_neurons
            )));
        }
        let n = config.n_neurons;
        let neurons = (0..n)
            .map(|_| MtjNeuron::new(device, Backend::Behavioral(model.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(STREAM_RUN);
        let state = NetworkState {
            neurons,
            theta: vec![1.0; n],
            inhibition_remaining: 0,
            inhibition_exempt: None,
            pre_traces: vec![None; weights.n_inputs],
            post_traces: vec![None; n],
            row_active_remaining: vec![0; weights.n_inputs],
            rng,
            step: 0,
        };
        Ok(Self { config, device, weights, state, model, spikes: Vec::new() })
    }

    pub fn model(&self) -> &Arc<dyn SwitchingModel> {
        &self.model
    }

    /// Record every energy event on each neuron from now on.
    pub fn enable_energy_log(&mut self) {
        for n in &mut self.state.neurons {
            n.ledger = EnergyLedger::with_log();
        }
    }

    /// Network ledger: sum of the per-neuron ledgers.
    pub fn energy(&self) -> EnergyLedger {
        let mut total = EnergyLedger::default();
        for n in &self.state.neurons {
            total.absorb(&n.ledger);
        }
        total
    }

    /// Clear row voltages, inhibition and spike traces before a new image.
    pub fn begin_image(&mut self) {
        let s = &mut self.state;
        s.row_active_remaining.iter_mut().for_each(|r| *r = 0);
        s.pre_traces.iter_mut().for_each(|t| *t = None);
        s.post_traces.iter_mut().for_each(|t| *t = None);
        s.inhibition_remaining = 0;
        s.inhibition_exempt = None;
    }

    pub fn step(&mut self, image: &[f64], mode: Mode) -> Result<StepReport> {
        if image.len() != self.weights.n_inputs {
            return Err(Error::InvalidParameter(format!(
                "image has {} pixels, network has {} inputs",
                image.len(),
                self.weights.n_inputs
            )));
        }
        let cfg = self.config;
        let n = cfg.n_neurons;
        let t = self.state.step;

        // (1) input spikes, with depression against earlier post spikes
        draw_spikes(image, &cfg.encoder, &mut self.state.rng, &mut self.spikes);
        for &i in &self.spikes {
            if mode.stdp {
                for j in 0..n {
                    if let Some(tp) = self.state.post_traces[j] {
                        let dw = cfg.stdp.delta_w(self.weights.weight(i, j), tp as f64 - t as f64);
                        let l = stochastic_step(self.weights.level(i, j), dw, &mut self.state.rng);
                        self.weights.set_level(i, j, l);
                    }
                }
            }
            self.state.pre_traces[i] = Some(t);
            self.state.row_active_remaining[i] = cfg.encoder.tau_0;
        }

        // (2, 3) crossbar current and homeostasis scaling
        let currents = crossbar_current(&self.state.row_active_remaining, &self.weights, cfg.encoder.v_row);
        let effective: Vec<f64> = currents.iter().zip(&self.state.theta).map(|(i, th)| i / th).collect();
        let max_probability = effective.iter().map(|&i| self.model.probability(i)).fold(0.0, f64::max);

        // (4) gated stochastic writes
        let inhibited = mode.inhibition && self.state.inhibition_remaining > 0;
        let mut switched = Vec::new();
        for j in 0..n {
            let gate = inhibited && self.state.inhibition_exempt != Some(j);
            if self.state.neurons[j].write_phase_gated(effective[j], gate, &mut self.state.rng)? {
                switched.push(j);
            }
        }
        for neuron in &mut self.state.neurons {
            neuron.read_phase()?;
        }

        // (5) winner resolution and resets
        let winner = self.pick_winner(&switched, &effective);
        for j in 0..n {
            let did = switched.contains(&j);
            self.state.neurons[j].reset_phase_with(did, winner == Some(j))?;
        }
        let mut inhibition_started = false;
        if let Some(w) = winner {
            if mode.homeostasis {
                self.state.theta[w] += cfg.homeostasis_beta;
            }
            if mode.inhibition {
                self.state.inhibition_remaining = cfg.tau_inh;
                self.state.inhibition_exempt = Some(w);
                inhibition_started = true;
            }
            self.state.post_traces[w] = Some(t);
            if mode.stdp {
                for i in 0..self.weights.n_inputs {
                    if let Some(tp) = self.state.pre_traces[i] {
                        let dw = cfg.stdp.delta_w(self.weights.weight(i, w), t as f64 - tp as f64);
                        let l = stochastic_step(self.weights.level(i, w), dw, &mut self.state.rng);
                        self.weights.set_level(i, w, l);
                    }
                }
            }
        }

        // (6) counters
        for r in self.state.row_active_remaining.iter_mut().filter(|r| **r > 0) {
            *r -= 1;
        }
        if !inhibition_started && self.state.inhibition_remaining > 0 {
            self.state.inhibition_remaining -= 1;
            if self.state.inhibition_remaining == 0 {
                self.state.inhibition_exempt = None;
            }
        }
        self.state.step += 1;

        Ok(StepReport {
            step: t,
            input_spikes: self.spikes.len(),
            currents,
            effective,
            switched,
            winner,
            max_probability,
        })
    }

    fn pick_winner(&mut self, switched: &[usize], effective: &[f64]) -> Option<usize> {
        let best = switched.iter().map(|&j| effective[j]).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = switched.iter().copied().filter(|&j| effective[j] == best).collect();
        match tied.len() {
            0 => None,
            1 => Some(tied[0]),
            k => Some(tied[self.state.rng.random_range(0..k)]),
        }
    }
}
