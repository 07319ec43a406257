//! Run configuration: one TOML file, every key optional, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::characterization::{Characterizer, CurrentGrid, MagnetTemplate, SweepSpec, TrialProtocol};
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::magnetics::DriveConvention;
use crate::snn::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    /// Spin current from the heavy metal, gain θ_SH·W_MTJ/t_HM.
    SpinHall,
    /// Spin current through the pinned layer with fixed polarization.
    PinnedLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagneticsSection {
    /// Integrator step (s).
    pub dt: f64,
    /// Temperature (K).
    pub temperature: f64,
    pub seed: u64,
    /// Zero-current settling before each switching trial (s).
    pub thermalization: f64,
    /// Zero-current window between pulse end and verdict (s).
    pub relaxation: f64,
    pub verdict_threshold: f64,
    pub drive: DriveKind,
    /// Spin polarization for the pinned-layer drive.
    pub polarization: f64,
}

impl Default for MagneticsSection {
    fn default() -> Self {
        let p = TrialProtocol::default();
        Self {
            dt: p.dt,
            temperature: 300.0,
            seed: 2015,
            thermalization: p.thermalization,
            relaxation: p.relaxation,
            verdict_threshold: p.verdict_threshold,
            drive: DriveKind::SpinHall,
            polarization: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub currents: CurrentGrid,
    /// Barrier heights (k_B·T).
    pub barrier_targets: Vec<f64>,
    /// Pulse widths (s).
    pub pulse_widths: Vec<f64>,
    pub trials_per_point: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            currents: CurrentGrid::default(),
            barrier_targets: vec![10.0, 20.0, 30.0],
            pulse_widths: vec![1e-9],
            trials_per_point: 1000,
        }
    }
}

/// How the network's behavioral neuron is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronModelSection {
    pub eb_kt: f64,
    /// Write pulse width; the device `t_write` is used when absent.
    pub pulse_width: Option<f64>,
    pub trials_per_point: usize,
    pub points: usize,
    pub span: f64,
    /// Replace `network.encoder.v_row` by the calibrated value.
    pub calibrate_v_row: bool,
    pub v_row_target_probability: f64,
}

impl Default for NeuronModelSection {
    fn default() -> Self {
        Self {
            eb_kt: 20.0,
            pulse_width: None,
            trials_per_point: 1000,
            points: 25,
            span: 3.0,
            calibrate_v_row: false,
            v_row_target_probability: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Synth,
    Idx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub output_dir: PathBuf,
    pub dataset: DatasetKind,
    /// Synthetic images per class.
    pub images_per_class: usize,
    pub synth_seed: u64,
    /// Seed of the synthetic held-out set used by `test`.
    pub heldout_seed: u64,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub classes: Vec<u8>,
    /// Maximum number of IDX images kept after class filtering.
    pub limit: usize,
    /// Write the per-event energy log next to the training outputs.
    pub energy_events: bool,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            dataset: DatasetKind::Synth,
            images_per_class: 50,
            synth_seed: 7,
            heldout_seed: 1007,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            classes: vec![0, 1],
            limit: 100,
            energy_events: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceParams,
    pub magnetics: MagneticsSection,
    pub sweep: SweepSection,
    pub neuron_model: NeuronModelSection,
    pub network: NetworkConfig,
    pub io: IoSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.device.validate().map_err(wrap)?;
        self.network.validate().map_err(wrap)?;
        self.protocol().validate().map_err(wrap)?;
        self.sweep_spec().validate().map_err(wrap)?;
        let m = &self.magnetics;
        if !(m.temperature >= 0.0) {
            return Err(Error::Config("magnetics.temperature must be >= 0".into()));
        }
        if !(m.polarization > 0.0 && m.polarization <= 1.0) {
            return Err(Error::Config("magnetics.polarization must lie in (0, 1]".into()));
        }
        let nm = &self.neuron_model;
        if nm.points < 8 || !(nm.span > 1.0) || nm.trials_per_point < 100 || !(nm.eb_kt > 0.0) {
            return Err(Error::Config("neuron_model needs points >= 8, span > 1, trials >= 100".into()));
        }
        if !(nm.v_row_target_probability > 0.0 && nm.v_row_target_probability < 1.0) {
            return Err(Error::Config("neuron_model.v_row_target_probability must lie in (0, 1)".into()));
        }
        if self.io.classes.is_empty() {
            return Err(Error::Config("io.classes must not be empty".into()));
        }
        Ok(())
    }

    pub fn drive(&self) -> DriveConvention {
        match self.magnetics.drive {
            DriveKind::SpinHall => self.device.drive(),
            DriveKind::PinnedLayer => DriveConvention::PinnedLayer { polarization: self.magnetics.polarization },
        }
    }

    pub fn protocol(&self) -> TrialProtocol {
        TrialProtocol {
            drive: self.drive(),
            dt: self.magnetics.dt,
            thermalization: self.magnetics.thermalization,
            relaxation: self.magnetics.relaxation,
            verdict_threshold: self.magnetics.verdict_threshold,
        }
    }

    pub fn characterizer(&self) -> Characterizer {
        Characterizer { template: MagnetTemplate::default(), protocol: self.protocol() }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            currents: self.sweep.currents.clone(),
            barrier_targets: self.sweep.barrier_targets.clone(),
            pulse_widths: self.sweep.pulse_widths.clone(),
            trials_per_point: self.sweep.trials_per_point,
            temperature: self.magnetics.temperature,
            base_seed: self.magnetics.seed,
        }
    }

    pub fn neuron_pulse_width(&self) -> f64 {
        self.neuron_model.pulse_width.unwrap_or(self.device.t_write)
    }

    /// Single-slice sweep that defines the network's behavioral neuron.
    pub fn neuron_sweep_spec(&self) -> SweepSpec {
        let nm = &self.neuron_model;
        SweepSpec {
            currents: CurrentGrid::Auto { points: nm.points, span: nm.span, search_trials: 200 },
            barrier_targets: vec![nm.eb_kt],
            pulse_widths: vec![self.neuron_pulse_width()],
            trials_per_point: nm.trials_per_point,
            temperature: self.magnetics.temperature,
            base_seed: self.magnetics.seed,
        }
    }
}
