//! Command implementations behind the CLI. Each writes its artifacts into an
//! output directory and returns the paths written.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::artifact::{csv_with_preamble, read_json, write_json, write_text, Artifact, Provenance};
use super::checkpoint::Checkpoint;
use super::config::{DatasetKind, RunConfig};
use super::dataset::{load_idx, synth_dataset, ImageDataset};
use crate::characterization::{
    build_behavioral_model, dispersion_metric, BarrierCalibration, BehavioralModel, SwitchingProbabilityTable,
};
use crate::device::{EnergyKind, EnergyLedger, EnergyReport};
use crate::error::{Error, Result};
use crate::magnetics::{
    compute_demag_tensor, critical_amplitude, dynamics::Integrator, simulate_pulse_train, DemagTensor, DriveConvention, Macrospin,
    MagnetGeometry, MagnetizationState, Pulse, PulseTrain, ThermalConfig, Trajectory,
};
use crate::snn::{
    accuracy, assign_classes, calibrate_v_row, classify, selectivity, test, train, Network, SpikeEvent,
    TestReport, TrainingStats, VRowCalibration,
};

// ---------------------------------------------------------------- pulse demo

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseDemoSpec {
    /// Free-layer thickness (m); the demag tensor follows from the geometry.
    pub thickness: f64,
    /// Initial in-plane tilt away from the P minimum (rad).
    pub tilt: f64,
    pub pulses: usize,
    pub width: f64,
    pub gap: f64,
    /// Zero-current lead-in before the first pulse (s).
    pub lead: f64,
    pub tail: f64,
    /// Pulse amplitude as a fraction of the single-pulse critical amplitude.
    pub fraction: f64,
    pub temperature: f64,
    pub sample_interval: f64,
}

impl Default for PulseDemoSpec {
    fn default() -> Self {
        Self {
            thickness: 1.5e-9,
            tilt: 0.1,
            pulses: 3,
            width: 0.5e-9,
            gap: 1e-9,
            lead: 0.0,
            tail: 3e-9,
            fraction: 0.6,
            temperature: 0.0,
            sample_interval: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseDemoResult {
    pub spec: PulseDemoSpec,
    pub tensor: DemagTensor,
    pub drive: DriveConvention,
    /// Smallest single-pulse amplitude that reverses the magnet at T = 0 (A).
    pub critical_amplitude: f64,
    pub amplitude: f64,
    pub pulses: Vec<Pulse>,
    /// Largest m_x reached during each pulse.
    pub peak_mx: Vec<f64>,
    pub final_mx: f64,
    pub reversed: bool,
}

fn demo_magnet(cfg: &RunConfig, thickness: f64) -> Result<Macrospin> {
    let template = cfg.characterizer().template;
    let g = MagnetGeometry::new(template.major_axis, template.minor_axis, thickness)?;
    Macrospin::new(template.consts, template.material, g, compute_demag_tensor(&g)?)
}

pub fn pulse_demo(cfg: &RunConfig, spec: &PulseDemoSpec) -> Result<(PulseDemoResult, Trajectory)> {
    if spec.pulses == 0 || !(spec.fraction > 0.0) {
        return Err(Error::InvalidParameter("pulse demo needs at least one pulse and a positive fraction".into()));
    }
    let magnet = demo_magnet(cfg, spec.thickness)?;
    let drive = cfg.drive();
    let initial = MagnetizationState::tilted_parallel(spec.tilt);
    let cold = ThermalConfig { temperature: 0.0, dt: cfg.magnetics.dt, rng_seed: 0, rng_stream: 0 };
    let onset = Integrator::new(&magnet, &cold)?.run(initial, [0.0; 3], (spec.lead / cfg.magnetics.dt).round() as usize);
    let ic = critical_amplitude(&magnet, drive, onset, spec.width, 2e-9, cfg.magnetics.dt, (0.0, 1e-2), 1e-9)?;
    let amplitude = spec.fraction * ic;
    let pulses: Vec<Pulse> = (0..spec.pulses)
        .map(|k| Pulse { start: spec.lead + k as f64 * (spec.width + spec.gap), duration: spec.width, amplitude })
        .collect();
    let train = PulseTrain { pulses: pulses.clone(), tail: spec.tail, sample_interval: spec.sample_interval };
    let thermal = ThermalConfig {
        temperature: spec.temperature,
        dt: cfg.magnetics.dt,
        rng_seed: cfg.magnetics.seed,
        rng_stream: 0,
    };
    let traj = simulate_pulse_train(initial, &train, drive, &magnet, &thermal)?;
    let peak_mx = pulses
        .iter()
        .map(|p| {
            traj.time
                .iter()
                .zip(&traj.m)
                .filter(|(t, _)| **t >= p.start && **t <= p.start + p.duration)
                .map(|(_, m)| m[0])
                .fold(-1.0, f64::max)
        })
        .collect();
    let final_mx = traj.m.last().map(|m| m[0]).unwrap_or(initial.m[0]);
    let result = PulseDemoResult {
        spec: *spec,
        tensor: magnet.tensor,
        drive,
        critical_amplitude: ic,
        amplitude,
        pulses,
        peak_mx,
        final_mx,
        reversed: traj.m.iter().any(|m| m[0] > 0.0),
    };
    Ok((result, traj))
}

pub fn run_pulse_demo(cfg: &RunConfig, spec: &PulseDemoSpec, out: &Path) -> Result<Vec<PathBuf>> {
    let (result, traj) = pulse_demo(cfg, spec)?;
    let prov = Provenance::new("pulse-demo", cfg.magnetics.seed, cfg);
    let csv = out.join("pulse_demo.csv");
    write_text(&csv, &csv_with_preamble(&prov, &traj.to_csv())?)?;
    let json = out.join("pulse_demo.json");
    write_json(&json, &Artifact { provenance: prov, result })?;
    Ok(vec![csv, json])
}

// --------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSummary {
    pub eb_kt: f64,
    pub tpw_s: f64,
    /// Current where the monotone interpolant crosses P_sw = 0.5 (A).
    pub i50: Option<f64>,
    /// I(P_sw = 0.9) − I(P_sw = 0.1) (A).
    pub dispersion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub table: SwitchingProbabilityTable,
    pub slices: Vec<SliceSummary>,
}

pub fn summarize(table: &SwitchingProbabilityTable) -> Vec<SliceSummary> {
    table
        .axes
        .slices
        .iter()
        .map(|s| {
            let cells = table.slice(s.eb_kt, s.tpw_s);
            let i50 = crossing(&cells, 0.5);
            SliceSummary { eb_kt: s.eb_kt, tpw_s: s.tpw_s, i50, dispersion: dispersion_metric(&cells).ok() }
        })
        .collect()
}

/// Linear interpolation of the first upward crossing of `level` in a slice.
pub fn crossing(cells: &[crate::characterization::TableCell], level: f64) -> Option<f64> {
    cells.windows(2).find(|w| w[0].p < level && w[1].p >= level).map(|w| {
        let f = (level - w[0].p) / (w[1].p - w[0].p);
        w[0].current + f * (w[1].current - w[0].current)
    })
}

pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let table = cfg.characterizer().sweep(&cfg.sweep_spec())?;
    table.validate()?;
    let prov = Provenance::new("sweep", cfg.magnetics.seed, cfg);
    let csv = out.join("sweep.csv");
    write_text(&csv, &csv_with_preamble(&prov, &table.to_csv())?)?;
    let json = out.join("sweep.json");
    let slices = summarize(&table);
    write_json(&json, &Artifact { provenance: prov, result: SweepReport { table, slices } })?;
    Ok(vec![json, csv])
}

// ----------------------------------------------------------------- calibrate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub eb_kt: f64,
    pub achieved_eb_kt: f64,
    pub relative_error: f64,
    pub geometric_tensor: DemagTensor,
    #[serde(flatten)]
    pub calibration: BarrierCalibration,
}

pub fn calibrate(cfg: &RunConfig) -> Result<Vec<CalibrationEntry>> {
    let ch = cfg.characterizer();
    let t = cfg.magnetics.temperature;
    let kt = ch.template.consts.kt(if t > 0.0 { t } else { 300.0 });
    cfg.sweep
        .barrier_targets
        .iter()
        .map(|&eb| {
            let (cal, _) = ch.magnet_for(eb, t)?;
            let geometric_tensor = compute_demag_tensor(&ch.template.geometry(cal.thickness)?)?;
            Ok(CalibrationEntry {
                eb_kt: eb,
                achieved_eb_kt: cal.achieved_e_b / kt,
                relative_error: cal.relative_error(),
                geometric_tensor,
                calibration: cal,
            })
        })
        .collect()
}

pub fn run_calibrate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let entries = calibrate(cfg)?;
    let json = out.join("calibration.json");
    write_json(&json, &Artifact { provenance: Provenance::new("calibrate", cfg.magnetics.seed, cfg), result: entries })?;
    Ok(vec![json])
}

// ------------------------------------------------------------------ datasets

pub fn training_set(cfg: &RunConfig) -> Result<ImageDataset> {
    match cfg.io.dataset {
        DatasetKind::Synth => synth_dataset(cfg.io.images_per_class, cfg.io.synth_seed),
        DatasetKind::Idx => {
            let (Some(i), Some(l)) = (&cfg.io.train_images, &cfg.io.train_labels) else {
                return Err(Error::Config("io.train_images and io.train_labels are required for idx".into()));
            };
            load_idx(i, l, &cfg.io.classes, cfg.io.limit)
        }
    }
}

pub fn heldout_set(cfg: &RunConfig) -> Result<ImageDataset> {
    match cfg.io.dataset {
        DatasetKind::Synth => synth_dataset(cfg.io.images_per_class, cfg.io.heldout_seed),
        DatasetKind::Idx => {
            let (Some(i), Some(l)) = (&cfg.io.test_images, &cfg.io.test_labels) else {
                return Err(Error::Config("io.test_images and io.test_labels are required for idx".into()));
            };
            load_idx(i, l, &cfg.io.classes, cfg.io.limit)
        }
    }
}

// -------------------------------------------------------------- neuron model

/// Behavioral neuron for the network: from a saved sweep (`sweep.json`) when
/// given, otherwise from a fresh single-slice sweep.
pub fn neuron_model(cfg: &RunConfig, table: Option<&Path>) -> Result<BehavioralModel> {
    let eb = cfg.neuron_model.eb_kt;
    let tpw = cfg.neuron_pulse_width();
    let table = match table {
        Some(p) => read_json::<Artifact<SweepReport>>(p)?.result.table,
        None => cfg.characterizer().sweep(&cfg.neuron_sweep_spec())?,
    };
    build_behavioral_model(&table, eb, tpw)
}

pub fn load_model(path: &Path) -> Result<BehavioralModel> {
    let m: Artifact<BehavioralModel> = read_json(path)?;
    let m = m.result;
    BehavioralModel::from_knots(m.eb_kt, m.tpw_s, m.currents, m.probabilities)
}

// --------------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub images: usize,
    pub v_row: f64,
    pub v_row_calibration: VRowCalibration,
    pub stats: TrainingStats,
}

pub struct TrainOutcome {
    pub network: Network,
    pub model: BehavioralModel,
    pub report: TrainReport,
    pub raster: Vec<SpikeEvent>,
}

pub fn train_network(cfg: &RunConfig, model: BehavioralModel, ds: &ImageDataset, log_energy: bool) -> Result<TrainOutcome> {
    let mut net_cfg = cfg.network;
    let shared: Arc<BehavioralModel> = Arc::new(model.clone());
    let init = Network::new(net_cfg, cfg.device, shared.clone(), ds.pixels())?;
    let cal = calibrate_v_row(ds, &net_cfg.encoder, &init.weights, &model, cfg.neuron_model.v_row_target_probability)?;
    if cfg.neuron_model.calibrate_v_row {
        net_cfg.encoder.v_row = cal.v_row;
    }
    let mut net = Network::with_weights(net_cfg, cfg.device, shared, init.weights)?;
    if log_energy {
        net.enable_energy_log();
    }
    let mut raster = Vec::new();
    let stats = train(&mut net, ds, Some(&mut raster))?;
    Ok(TrainOutcome {
        report: TrainReport { images: ds.len(), v_row: net_cfg.encoder.v_row, v_row_calibration: cal, stats },
        network: net,
        model,
        raster,
    })
}

fn raster_csv(events: &[SpikeEvent]) -> String {
    let mut s = String::from("step,neuron_id,image_index,label\n");
    for e in events {
        s.push_str(&format!("{},{},{},{}\n", e.step, e.neuron_id, e.image_index, e.label));
    }
    s
}

fn events_csv(net: &Network) -> String {
    let mut s = String::from("neuron_id,kind,energy_j\n");
    for (j, n) in net.state.neurons.iter().enumerate() {
        for e in n.ledger.events().unwrap_or(&[]) {
            let kind = match e.kind {
                EnergyKind::Write => "write",
                EnergyKind::Read => "read",
                EnergyKind::Reset => "reset",
            };
            s.push_str(&format!("{j},{kind},{:e}\n", e.energy));
        }
    }
    s
}

pub fn run_train(cfg: &RunConfig, table: Option<&Path>, out: &Path) -> Result<Vec<PathBuf>> {
    let ds = training_set(cfg)?;
    let model = neuron_model(cfg, table)?;
    let outcome = train_network(cfg, model, &ds, cfg.io.energy_events)?;
    let seed = cfg.network.seed;
    let prov = Provenance::new("train", seed, cfg);

    let mut written = Vec::new();
    let path = out.join("neuron_model.json");
    write_json(&path, &Artifact { provenance: prov.clone(), result: outcome.model.clone() })?;
    written.push(path);
    let path = out.join("checkpoint.json");
    let mut ck_cfg = cfg.clone();
    ck_cfg.network.encoder.v_row = outcome.report.v_row;
    Checkpoint::new(&outcome.network.weights, seed, ds.len(), &ck_cfg).save(&path)?;
    written.push(path);
    let path = out.join("stats.json");
    write_json(&path, &Artifact { provenance: prov.clone(), result: outcome.report })?;
    written.push(path);
    let path = out.join("raster.csv");
    write_text(&path, &csv_with_preamble(&prov, &raster_csv(&outcome.raster))?)?;
    written.push(path);
    if cfg.io.energy_events {
        let path = out.join("energy_events.csv");
        write_text(&path, &csv_with_preamble(&prov, &events_csv(&outcome.network))?)?;
        written.push(path);
    }
    Ok(written)
}

// ---------------------------------------------------------------------- test

/// Most selective neuron for one class. `ratio` is absent when the neuron
/// never fired out of class (unbounded ratio).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSelectivity {
    pub class: u8,
    pub neuron: Option<usize>,
    pub in_class: u64,
    pub out_of_class: u64,
    pub ratio: Option<f64>,
}

pub fn class_selectivity(report: &TestReport) -> Vec<ClassSelectivity> {
    let ratios = selectivity(&report.class_counts, report.classes.len());
    report
        .classes
        .iter()
        .enumerate()
        .map(|(c, &class)| {
            let split = |row: &Vec<u64>| (row[c], row.iter().sum::<u64>() - row[c]);
            let best = report.class_counts.iter().position(|row| {
                let (i, o) = split(row);
                i > 0 && (if o == 0 { f64::INFINITY } else { i as f64 / o as f64 }) == ratios[c]
            });
            let (in_class, out_of_class) = best.map(|j| split(&report.class_counts[j])).unwrap_or((0, 0));
            ClassSelectivity { class, neuron: best, in_class, out_of_class, ratio: ratios[c].is_finite().then_some(ratios[c]) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Test-mode responses on the training images, used for class assignment.
    pub assignment_run: TestReport,
    pub assignments: Vec<Option<u8>>,
    /// Best in-class / out-of-class spike ratio per class (training images).
    pub selectivity: Vec<ClassSelectivity>,
    pub heldout_run: TestReport,
    pub predictions: Vec<Option<u8>>,
    pub heldout_accuracy: f64,
}

/// Assign classes on `train_ds`, then classify `heldout`, both in test mode
/// with fresh networks built from `weights`.
pub fn evaluate(
    cfg: &RunConfig,
    net_cfg: crate::snn::NetworkConfig,
    model: &BehavioralModel,
    weights: &crate::snn::SynapseMatrix,
    train_ds: &ImageDataset,
    heldout: &ImageDataset,
    raster: Option<&mut Vec<SpikeEvent>>,
) -> Result<EvaluationReport> {
    let shared = Arc::new(model.clone());
    let mut net = Network::with_weights(net_cfg, cfg.device, shared.clone(), weights.clone())?;
    let assignment_run = test(&mut net, train_ds, None)?;
    let assignments = assign_classes(&assignment_run);
    let sel = class_selectivity(&assignment_run);
    let mut net = Network::with_weights(net_cfg, cfg.device, shared, weights.clone())?;
    let heldout_run = test(&mut net, heldout, raster)?;
    let predictions = classify(&heldout_run.image_counts, &assignments, &assignment_run.classes);
    let heldout_accuracy = accuracy(&predictions, &heldout_run.labels);
    Ok(EvaluationReport { assignment_run, assignments, selectivity: sel, heldout_run, predictions, heldout_accuracy })
}

pub fn run_test(cfg: &RunConfig, checkpoint: &Path, model: Option<&Path>, out: &Path) -> Result<Vec<PathBuf>> {
    let ck = Checkpoint::load(checkpoint)?;
    let weights = ck.weights()?;
    let model = match model {
        Some(p) => load_model(p)?,
        None => neuron_model(cfg, None)?,
    };
    let mut net_cfg = cfg.network;
    net_cfg.n_neurons = weights.n_neurons;
    net_cfg.encoder.v_row = ck.config.network.encoder.v_row;
    let train_ds = training_set(cfg)?;
    let heldout = heldout_set(cfg)?;
    let mut raster = Vec::new();
    let report = evaluate(cfg, net_cfg, &model, &weights, &train_ds, &heldout, Some(&mut raster))?;
    let prov = Provenance::new("test", cfg.network.seed, cfg);
    let json = out.join("test_report.json");
    write_json(&json, &Artifact { provenance: prov.clone(), result: report })?;
    let csv = out.join("test_raster.csv");
    write_text(&csv, &csv_with_preamble(&prov, &raster_csv(&raster))?)?;
    Ok(vec![json, csv])
}

// ------------------------------------------------------------- energy report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSpike {
    pub write_fj: f64,
    pub read_fj: f64,
    pub reset_fj: f64,
    pub total_fj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub events: usize,
    pub replay: Vec<EnergyReport>,
    pub matches_ledgers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecomposition {
    pub network: EnergyReport,
    pub neurons: Vec<EnergyReport>,
    /// |network total − Σ neuron totals| (fJ).
    pub ledger_sum_gap_fj: f64,
    pub per_spike: Option<PerSpike>,
    pub steps: u64,
    pub per_neuron_step_fj: f64,
    pub replay: Option<ReplayCheck>,
}

fn close_fj(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-3)
}

/// Parse an `energy_events.csv` body into per-neuron ledgers.
pub fn replay_events(text: &str, n_neurons: usize) -> Result<(usize, Vec<EnergyLedger>)> {
    let mut ledgers = vec![EnergyLedger::default(); n_neurons];
    let mut count = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let bad = || Error::Numerical(format!("malformed energy event line {line:?}"));
        let mut f = line.split(',');
        let j: usize = f.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let kind = match f.next() {
            Some("write") => EnergyKind::Write,
            Some("read") => EnergyKind::Read,
            Some("reset") => EnergyKind::Reset,
            _ => return Err(bad()),
        };
        let e: f64 = f.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        ledgers.get_mut(j).ok_or_else(bad)?.record(kind, e);
        count += 1;
    }
    Ok((count, ledgers))
}

pub fn energy_decomposition(stats: &TrainingStats, events: Option<&str>) -> Result<EnergyDecomposition> {
    let net = &stats.energy;
    let neuron_sum: f64 = stats.neuron_energy.iter().map(|r| r.total_fj).sum();
    let n = stats.neuron_energy.len();
    let per_spike = (net.spikes > 0).then(|| {
        let s = net.spikes as f64;
        PerSpike { write_fj: net.write_fj / s, read_fj: net.read_fj / s, reset_fj: net.reset_fj / s, total_fj: net.total_fj / s }
    });
    let replay = events
        .map(|text| -> Result<ReplayCheck> {
            let (count, ledgers) = replay_events(text, n)?;
            let replay: Vec<EnergyReport> = ledgers.iter().map(|l| l.report()).collect();
            let matches_ledgers = replay.iter().zip(&stats.neuron_energy).all(|(r, l)| {
                close_fj(r.write_fj, l.write_fj) && close_fj(r.read_fj, l.read_fj) && close_fj(r.reset_fj, l.reset_fj)
            });
            Ok(ReplayCheck { events: count, replay, matches_ledgers })
        })
        .transpose()?;
    Ok(EnergyDecomposition {
        network: net.clone(),
        neurons: stats.neuron_energy.clone(),
        ledger_sum_gap_fj: (net.total_fj - neuron_sum).abs(),
        per_spike,
        steps: stats.steps,
        per_neuron_step_fj: net.total_fj / (n.max(1) as f64 * stats.steps.max(1) as f64),
        replay,
    })
}

pub fn run_energy_report(cfg: &RunConfig, stats: &Path, events: Option<&Path>, out: &Path) -> Result<Vec<PathBuf>> {
    let art: Artifact<TrainReport> = read_json(stats)?;
    let text = events.map(|p| std::fs::read_to_string(p).map_err(|e| Error::io(p, e))).transpose()?;
    let result = energy_decomposition(&art.result.stats, text.as_deref())?;
    if result.replay.as_ref().is_some_and(|r| !r.matches_ledgers) {
        return Err(Error::Numerical("energy event replay disagrees with the ledgers".into()));
    }
    let json = out.join("energy_report.json");
    write_json(&json, &Artifact { provenance: Provenance::new("energy-report", art.provenance.seed, cfg), result })?;
    Ok(vec![json])
}
