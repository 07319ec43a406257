//! Monte Carlo switching-probability sweeps over (current, barrier, pulse width).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::barrier::{calibrate_barrier, thickness_for_barrier, BarrierCalibration, MagnetTemplate};
use crate::error::{Error, Result};
use crate::magnetics::{
    pulse_then_relax, thermalize_from, DriveConvention, Integrator, MagnetizationState, Macrospin,
    ThermalConfig,
};

/// Stream namespaces keep coarse-search trials and sweep trials disjoint.
const NS_SWEEP: u64 = 0;
const NS_SEARCH: u64 = 1;
const NS_FRESH: u64 = 2;

/// Noise stream for trial `trial` of cell `cell`: the pair is packed into a
/// single 64-bit stream id (8-bit namespace, 24-bit cell, 32-bit trial), so
/// every work item owns a distinct ChaCha stream regardless of scheduling.
pub fn stream_id(namespace: u64, cell: usize, trial: usize) -> u64 {
    debug_assert!(cell < (1 << 24));
    (namespace << 56) | ((cell as u64) << 32) | trial as u64
}

/// Trial protocol shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialProtocol {
    pub drive: DriveConvention,
    pub dt: f64,
    /// Zero-current run from the exact P minimum before each pulse (s).
    pub thermalization: f64,
    /// Zero-current window after the pulse before the verdict (s).
    pub relaxation: f64,
    /// A trial counts as switched when m_x exceeds this after relaxation.
    pub verdict_threshold: f64,
}

impl Default for TrialProtocol {
    fn default() -> Self {
        Self {
            drive: crate::device::DeviceParams::default().drive(),
            dt: 1e-12,
            thermalization: 5e-9,
            relaxation: 1e-9,
            verdict_threshold: 0.9,
        }
    }
}

impl TrialProtocol {
    /// Run one trial: thermalize at P, apply the pulse, relax, return final m_x.
    pub fn run_trial(
        &self,
        magnet: &Macrospin,
        current: f64,
        width: f64,
        temperature: f64,
        seed: u64,
        stream: u64,
    ) -> f64 {
        let cfg = ThermalConfig { temperature, dt: self.dt, rng_seed: seed, rng_stream: stream };
        let mut integ = Integrator::new(magnet, &cfg).expect("validated protocol");
        let start = thermalize_from(&mut integ, MagnetizationState::parallel(), self.thermalization);
        pulse_then_relax(&mut integ, start, self.drive.spin_current(current), width, self.relaxation).m[0]
    }

    pub fn switched(&self, final_mx: f64) -> bool {
        final_mx > self.verdict_threshold
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.thermalization >= 0.0 && self.relaxation >= 0.0) {
            return Err(Error::InvalidParameter("trial protocol durations must be positive".into()));
        }
        if !(self.verdict_threshold > -1.0 && self.verdict_threshold < 1.0) {
            return Err(Error::InvalidParameter("verdict threshold must lie in (-1, 1)".into()));
        }
        Ok(())
    }

    /// Count switches over `trials` independent trials, in parallel.
    pub fn count_switches(
        &self,
        magnet: &Macrospin,
        current: f64,
        width: f64,
        temperature: f64,
        seed: u64,
        namespace: u64,
        cell: usize,
        trials: usize,
    ) -> usize {
        (0..trials)
            .into_par_iter()
            .map(|k| {
                let mx = self.run_trial(magnet, current, width, temperature, seed, stream_id(namespace, cell, k));
                self.switched(mx) as usize
            })
            .sum()
    }
}

/// Current axis of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurrentGrid {
    /// The same strictly increasing list for every slice (A).
    Explicit { currents: Vec<f64> },
    /// Log-spaced points in [I50/span, I50·span] around a coarse bisection
    /// estimate of each slice's P_sw = 0.5 current.
    Auto { points: usize, span: f64, search_trials: usize },
}

impl Default for CurrentGrid {
    fn default() -> Self {
        CurrentGrid::Auto { points: 25, span: 3.0, search_trials: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub currents: CurrentGrid,
    /// Barrier heights in units of k_B·T.
    pub barrier_targets: Vec<f64>,
    /// Pulse widths (s).
    pub pulse_widths: Vec<f64>,
    pub trials_per_point: usize,
    pub temperature: f64,
    pub base_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            currents: CurrentGrid::default(),
            barrier_targets: vec![20.0],
            pulse_widths: vec![0.5e-9],
            trials_per_point: 1000,
            temperature: 300.0,
            base_seed: 2015,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point < 100 {
            return Err(Error::InvalidParameter(format!(
                "trials_per_point must be >= 100, got {}",
                self.trials_per_point
            )));
        }
        match &self.currents {
            CurrentGrid::Explicit { currents } => {
                if currents.is_empty() || currents.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParameter("currents must be strictly increasing".into()));
                }
            }
            CurrentGrid::Auto { points, span, search_trials } => {
                if *points < 2 || !(*span > 1.0) || *search_trials == 0 {
                    return Err(Error::InvalidParameter("auto grid needs points >= 2, span > 1".into()));
                }
            }
        }
        if self.barrier_targets.is_empty() || self.barrier_targets.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidParameter("barrier targets must be positive".into()));
        }
        if self.pulse_widths.is_empty() || self.pulse_widths.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidParameter("pulse widths must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidParameter("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

/// Provenance recorded with every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub seed: u64,
    pub trials: usize,
    pub backend: String,
    pub temperature: f64,
    pub protocol: TrialProtocol,
    pub template: MagnetTemplate,
    pub calibration: Vec<CalibrationRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub eb_kt: f64,
    #[serde(flatten)]
    pub calibration: BarrierCalibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceAxis {
    #[serde(rename = "EB_kT")]
    pub eb_kt: f64,
    #[serde(rename = "tPW_s")]
    pub tpw_s: f64,
    #[serde(rename = "I_A")]
    pub currents: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableAxes {
    #[serde(rename = "EB_kT")]
    pub eb_kt: Vec<f64>,
    #[serde(rename = "tPW_s")]
    pub tpw_s: Vec<f64>,
    pub slices: Vec<SliceAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    #[serde(rename = "I_A")]
    pub current: f64,
    #[serde(rename = "EB_kT")]
    pub eb_kt: f64,
    #[serde(rename = "tPW_s")]
    pub tpw_s: f64,
    pub p: f64,
    pub stderr: f64,
}

/// Monte Carlo P_sw over (current, E_B, pulse width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingProbabilityTable {
    pub meta: TableMeta,
    pub axes: TableAxes,
    pub cells: Vec<TableCell>,
}

/// Binomial standard error sqrt(p(1−p)/n).
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

impl SwitchingProbabilityTable {
    /// Cells of one (E_B, t_PW) slice in increasing current order.
    pub fn slice(&self, eb_kt: f64, tpw_s: f64) -> Vec<TableCell> {
        let mut out: Vec<TableCell> = self
            .cells
            .iter()
            .filter(|c| close(c.eb_kt, eb_kt) && close(c.tpw_s, tpw_s))
            .copied()
            .collect();
        out.sort_by(|a, b| a.current.total_cmp(&b.current));
        out
    }

    /// Check value range, recorded stderr and monotonicity in current (with
    /// 2·stderr slack) for every slice.
    pub fn validate(&self) -> Result<()> {
        let n = self.meta.trials;
        for c in &self.cells {
            if !(0.0..=1.0).contains(&c.p) {
                return Err(Error::BadSlice(format!("p = {} outside [0, 1]", c.p)));
            }
            if (c.stderr - binomial_stderr(c.p, n)).abs() > 1e-12 {
                return Err(Error::BadSlice(format!("stderr mismatch at I = {:e}", c.current)));
            }
        }
        for s in &self.axes.slices {
            check_monotone(&self.slice(s.eb_kt, s.tpw_s))?;
        }
        Ok(())
    }

    /// One row per cell: I_A,EB_kT,tPW_s,p,stderr.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("I_A,EB_kT,tPW_s,p,stderr\n");
        for c in &self.cells {
            out.push_str(&format!("{:e},{},{:e},{},{}\n", c.current, c.eb_kt, c.tpw_s, c.p, c.stderr));
        }
        out
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

pub(crate) fn check_monotone(cells: &[TableCell]) -> Result<()> {
    for (i, w) in cells.windows(2).enumerate() {
        let slack = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        // one-count floor so that zero-variance plateaus are not over-strict
        let slack = slack.max(1e-12);
        if w[1].p < w[0].p - slack {
            return Err(Error::NonMonotone { index: i + 1, prev: w[0].p, next: w[1].p, slack });
        }
    }
    Ok(())
}

/// Monte Carlo characterization engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characterizer {
    pub template: MagnetTemplate,
    pub protocol: TrialProtocol,
}

impl Default for Characterizer {
    fn default() -> Self {
        Self { template: MagnetTemplate::default(), protocol: TrialProtocol::default() }
    }
}

impl Characterizer {
    /// Calibrated macrospin for a barrier target in units of k_B·T at `temperature`.
    pub fn magnet_for(&self, eb_kt: f64, temperature: f64) -> Result<(BarrierCalibration, Macrospin)> {
        // barrier targets are specified relative to room temperature
        let kt = self.template.consts.kt(if temperature > 0.0 { temperature } else { 300.0 });
        let cal = calibrate_barrier(&self.template, thickness_for_barrier(eb_kt), eb_kt * kt)?;
        let magnet = self.template.calibrated_macrospin(&cal)?;
        Ok((cal, magnet))
    }

    /// Monte Carlo estimate of P_sw for one (current, barrier, width) point.
    pub fn estimate(
        &self,
        eb_kt: f64,
        current: f64,
        width: f64,
        trials: usize,
        temperature: f64,
        seed: u64,
    ) -> Result<(f64, f64)> {
        let (_, magnet) = self.magnet_for(eb_kt, temperature)?;
        let k = self.protocol.count_switches(&magnet, current, width, temperature, seed, NS_FRESH, 0, trials);
        let p = k as f64 / trials as f64;
        Ok((p, binomial_stderr(p, trials)))
    }

    /// Coarse bisection (in log current) for the P_sw = 0.5 point.
    pub fn coarse_p50(
        &self,
        magnet: &Macrospin,
        width: f64,
        temperature: f64,
        seed: u64,
        slice: usize,
        trials: usize,
    ) -> f64 {
        let (mut lo, mut hi) = (1e-7_f64.ln(), 1e-2_f64.ln());
        for iter in 0..14 {
            let mid = 0.5 * (lo + hi);
            let cell = slice * 64 + iter;
            let k = self.protocol.count_switches(magnet, mid.exp(), width, temperature, seed, NS_SEARCH, cell, trials);
            if 2 * k < trials {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    pub fn sweep(&self, spec: &SweepSpec) -> Result<SwitchingProbabilityTable> {
        spec.validate()?;
        self.protocol.validate()?;
        let mut calibration = Vec::new();
        let mut magnets = Vec::new();
        for &eb in &spec.barrier_targets {
            let (cal, magnet) = self.magnet_for(eb, spec.temperature)?;
            calibration.push(CalibrationRecord { eb_kt: eb, calibration: cal });
            magnets.push(magnet);
        }

        let mut slices = Vec::new();
        for (bi, &eb) in spec.barrier_targets.iter().enumerate() {
            for (wi, &w) in spec.pulse_widths.iter().enumerate() {
                let slice_index = bi * spec.pulse_widths.len() + wi;
                let currents = match &spec.currents {
                    CurrentGrid::Explicit { currents } => currents.clone(),
                    CurrentGrid::Auto { points, span, search_trials } => {
                        let center = self.coarse_p50(&magnets[bi], w, spec.temperature, spec.base_seed, slice_index, *search_trials);
                        log_grid(center, *span, *points)
                    }
                };
                slices.push((bi, SliceAxis { eb_kt: eb, tpw_s: w, currents }));
            }
        }

        // flat list of cells, then every (cell, trial) pair is an independent work item
        let cell_list: Vec<(usize, f64, f64, f64)> = slices
            .iter()
            .flat_map(|(bi, s)| s.currents.iter().map(move |&i| (*bi, s.eb_kt, s.tpw_s, i)))
            .collect();
        let n = spec.trials_per_point;
        let counts: Vec<usize> = cell_list
            .iter()
            .enumerate()
            .map(|(ci, &(bi, _, w, i))| {
                self.protocol.count_switches(&magnets[bi], i, w, spec.temperature, spec.base_seed, NS_SWEEP, ci, n)
            })
            .collect();

        let cells = cell_list
            .iter()
            .zip(&counts)
            .map(|(&(_, eb, w, i), &k)| {
                let p = k as f64 / n as f64;
                TableCell { current: i, eb_kt: eb, tpw_s: w, p, stderr: binomial_stderr(p, n) }
            })
            .collect();

        Ok(SwitchingProbabilityTable {
            meta: TableMeta {
                seed: spec.base_seed,
                trials: n,
                backend: "llg".into(),
                temperature: spec.temperature,
                protocol: self.protocol,
                template: self.template,
                calibration,
            },
            axes: TableAxes {
                eb_kt: spec.barrier_targets.clone(),
                tpw_s: spec.pulse_widths.clone(),
                slices: slices.into_iter().map(|(_, s)| s).collect(),
            },
            cells,
        })
    }
}

/// `points` log-spaced values from center/span to center·span.
pub fn log_grid(center: f64, span: f64, points: usize) -> Vec<f64> {
    let lo = (center / span).ln();
    let hi = (center * span).ln();
    (0..points)
        .map(|k| (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp())
        .collect()
}
