//! Weight checkpoints: JSON header plus one line per input row of levels.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::artifact::{write_text, TOOL, VERSION};
use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::snn::synapse::CONDUCTANCE_RATIO;
use crate::snn::SynapseMatrix;

pub const FORMAT: &str = "mtj-neuron-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub tool: String,
    pub version: String,
    /// [inputs, neurons]
    pub shape: [usize; 2],
    /// Largest synapse resistance (Ω); `g_min = 1/r_max`.
    pub r_max: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub seed: u64,
    /// Image presentations completed.
    pub epoch: usize,
    pub config: RunConfig,
    /// `levels[input][neuron]`, each in 0..=15.
    pub levels: Vec<Vec<u8>>,
}

impl Checkpoint {
    pub fn new(weights: &SynapseMatrix, seed: u64, epoch: usize, config: &RunConfig) -> Self {
        let levels = weights.levels.chunks(weights.n_neurons).map(|r| r.to_vec()).collect();
        Self {
            format: FORMAT.into(),
            tool: TOOL.into(),
            version: VERSION.into(),
            shape: [weights.n_inputs, weights.n_neurons],
            r_max: weights.r_max,
            g_min: weights.g_min(),
            g_max: weights.g_max(),
            seed,
            epoch,
            config: config.clone(),
            levels,
        }
    }

    pub fn weights(&self) -> Result<SynapseMatrix> {
        if self.format != FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format {:?}", self.format)));
        }
        let [n_inputs, n_neurons] = self.shape;
        if self.levels.len() != n_inputs || self.levels.iter().any(|r| r.len() != n_neurons) {
            return Err(Error::Checkpoint(format!("level matrix does not match shape {n_inputs}x{n_neurons}")));
        }
        if !(self.r_max > 0.0) || (self.g_min * self.r_max - 1.0).abs() > 1e-9 {
            return Err(Error::Checkpoint("g_min must equal 1/r_max".into()));
        }
        if !(self.g_min > 0.0) || (self.g_max / self.g_min - CONDUCTANCE_RATIO).abs() > 1e-9 {
            return Err(Error::Checkpoint("g_max/g_min must equal the conductance ratio 20".into()));
        }
        let m = SynapseMatrix {
            n_inputs,
            n_neurons,
            r_max: self.r_max,
            levels: self.levels.concat(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Deterministic text form; `from_text(to_text(c)) == c` and re-saving is
    /// byte-identical.
    pub fn to_text(&self) -> Result<String> {
        fn j<T: Serialize + ?Sized>(v: &T) -> serde_json::Result<String> {
            serde_json::to_string(v)
        }
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"format\": {},", j(&self.format)?);
        let _ = writeln!(s, "  \"tool\": {},", j(&self.tool)?);
        let _ = writeln!(s, "  \"version\": {},", j(&self.version)?);
        let _ = writeln!(s, "  \"shape\": {},", j(&self.shape)?);
        let _ = writeln!(s, "  \"r_max\": {},", j(&self.r_max)?);
        let _ = writeln!(s, "  \"g_min\": {},", j(&self.g_min)?);
        let _ = writeln!(s, "  \"g_max\": {},", j(&self.g_max)?);
        let _ = writeln!(s, "  \"seed\": {},", j(&self.seed)?);
        let _ = writeln!(s, "  \"epoch\": {},", j(&self.epoch)?);
        let _ = writeln!(s, "  \"config\": {},", j(&self.config)?);
        s.push_str("  \"levels\": [\n");
        for (k, row) in self.levels.iter().enumerate() {
            let sep = if k + 1 == self.levels.len() { "" } else { "," };
            let _ = writeln!(s, "    {}{sep}", j(row)?);
        }
        s.push_str("  ]\n}\n");
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
