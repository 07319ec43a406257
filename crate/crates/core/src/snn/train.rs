//! Training and test loops, statistics and row-voltage calibration.

use serde::{Deserialize, Serialize};

use super::encoder::EncoderConfig;
use super::network::{Mode, Network};
use super::synapse::SynapseMatrix;
use crate::characterization::BehavioralModel;
use crate::device::EnergyReport;
use crate::error::{Error, Result};
use crate::io::ImageDataset;

/// Epochs per averaging window of the max-probability trace.
pub const PROBABILITY_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub step: u64,
    pub neuron_id: usize,
    pub image_index: usize,
    pub label: u8,
}

/// One image presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub image_index: usize,
    pub label: u8,
    /// Mean over steps of the largest per-neuron switching probability.
    pub max_probability: f64,
    pub spikes: Vec<u64>,
    pub energy_fj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub classes: Vec<u8>,
    pub epochs: Vec<EpochRecord>,
    pub window: usize,
    /// Mean of `max_probability` over consecutive non-overlapping windows.
    pub windowed_max_probability: Vec<f64>,
    /// `class_counts[neuron][class index]`.
    pub class_counts: Vec<Vec<u64>>,
    pub theta: Vec<f64>,
    pub energy: EnergyReport,
    pub neuron_energy: Vec<EnergyReport>,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub classes: Vec<u8>,
    /// `class_counts[neuron][class index]`.
    pub class_counts: Vec<Vec<u64>>,
    /// `image_counts[image][neuron]`.
    pub image_counts: Vec<Vec<u64>>,
    pub labels: Vec<u8>,
    pub energy: EnergyReport,
    pub neuron_energy: Vec<EnergyReport>,
    pub steps: u64,
}

/// Non-overlapping window means; a trailing partial window is averaged too.
pub fn windowed(values: &[f64], window: usize) -> Vec<f64> {
    values.chunks(window.max(1)).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

fn class_index(classes: &[u8], label: u8) -> usize {
    classes.iter().position(|&c| c == label).expect("label drawn from the same dataset")
}

fn present(
    net: &mut Network,
    image: &[f64],
    mode: Mode,
    image_index: usize,
    label: u8,
    raster: &mut Option<&mut Vec<SpikeEvent>>,
) -> Result<(Vec<u64>, f64)> {
    net.begin_image();
    let mut counts = vec![0u64; net.config.n_neurons];
    let mut pmax = 0.0;
    for _ in 0..net.config.encoder.t_s {
        let r = net.step(image, mode)?;
        pmax += r.max_probability;
        if let Some(w) = r.winner {
            counts[w] += 1;
            if let Some(events) = raster.as_deref_mut() {
                events.push(SpikeEvent { step: r.step, neuron_id: w, image_index, label });
            }
        }
    }
    Ok((counts, pmax / net.config.encoder.t_s as f64))
}

fn neuron_reports(net: &Network) -> Vec<EnergyReport> {
    net.state.neurons.iter().map(|n| n.ledger.report()).collect()
}

/// One pass over the dataset with STDP and homeostasis active.
pub fn train(net: &mut Network, ds: &ImageDataset, mut raster: Option<&mut Vec<SpikeEvent>>) -> Result<TrainingStats> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = ds.classes();
    let mut class_counts = vec![vec![0u64; classes.len()]; net.config.n_neurons];
    let mut epochs = Vec::with_capacity(ds.len());
    let start = net.state.step;
    for (k, (image, &label)) in ds.images.iter().zip(&ds.labels).enumerate() {
        let before = net.energy().total();
        let (counts, pmax) = present(net, image, Mode::TRAIN, k, label, &mut raster)?;
        let c = class_index(&classes, label);
        for (j, &n) in counts.iter().enumerate() {
            class_counts[j][c] += n;
        }
        epochs.push(EpochRecord {
            epoch: k + 1,
            image_index: k,
            label,
            max_probability: pmax,
            spikes: counts,
            energy_fj: (net.energy().total() - before) * 1e15,
        });
    }
    let trace: Vec<f64> = epochs.iter().map(|e| e.max_probability).collect();
    Ok(TrainingStats {
        classes,
        windowed_max_probability: windowed(&trace, PROBABILITY_WINDOW),
        window: PROBABILITY_WINDOW,
        epochs,
        class_counts,
        theta: net.state.theta.clone(),
        energy: net.energy().report(),
        neuron_energy: neuron_reports(net),
        steps: net.state.step - start,
    })
}

/// Frozen-weight evaluation: no plasticity, θ reset to 1, inhibition on.
pub fn test(net: &mut Network, ds: &ImageDataset, mut raster: Option<&mut Vec<SpikeEvent>>) -> Result<TestReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    net.state.theta.iter_mut().for_each(|t| *t = 1.0);
    let classes = ds.classes();
    let mut class_counts = vec![vec![0u64; classes.len()]; net.config.n_neurons];
    let mut image_counts = Vec::with_capacity(ds.len());
    let start = net.state.step;
    for (k, (image, &label)) in ds.images.iter().zip(&ds.labels).enumerate() {
        let (counts, _) = present(net, image, Mode::TEST, k, label, &mut raster)?;
        let c = class_index(&classes, label);
        for (j, &n) in counts.iter().enumerate() {
            class_counts[j][c] += n;
        }
        image_counts.push(counts);
    }
    Ok(TestReport {
        classes,
        class_counts,
        image_counts,
        labels: ds.labels.clone(),
        energy: net.energy().report(),
        neuron_energy: neuron_reports(net),
        steps: net.state.step - start,
    })
}

/// Class of each neuron: argmax of its per-class counts (None if silent).
pub fn assign_classes(report: &TestReport) -> Vec<Option<u8>> {
    report
        .class_counts
        .iter()
        .map(|row| {
            let (best, &n) = row.iter().enumerate().max_by_key(|&(c, &n)| (n, std::cmp::Reverse(c)))?;
            (n > 0).then(|| report.classes[best])
        })
        .collect()
}

/// Per image, the class whose assigned neurons spiked most (None if no spikes).
pub fn classify(image_counts: &[Vec<u64>], assignments: &[Option<u8>], classes: &[u8]) -> Vec<Option<u8>> {
    image_counts
        .iter()
        .map(|counts| {
            let mut votes = vec![0u64; classes.len()];
            for (j, &n) in counts.iter().enumerate() {
                if let Some(c) = assignments[j] {
                    votes[class_index(classes, c)] += n;
                }
            }
            let (best, &v) = votes.iter().enumerate().max_by_key(|&(c, &v)| (v, std::cmp::Reverse(c)))?;
            (v > 0).then(|| classes[best])
        })
        .collect()
}

pub fn accuracy(predicted: &[Option<u8>], labels: &[u8]) -> f64 {
    let hits = predicted.iter().zip(labels).filter(|(p, l)| **p == Some(**l)).count();
    hits as f64 / labels.len().max(1) as f64
}

/// For each class, the best in-class / out-of-class count ratio over neurons.
/// A neuron with in-class spikes and no out-of-class spikes has ratio ∞.
pub fn selectivity(class_counts: &[Vec<u64>], n_classes: usize) -> Vec<f64> {
    (0..n_classes)
        .map(|c| {
            class_counts
                .iter()
                .map(|row| {
                    let inside = row[c] as f64;
                    let outside: f64 = row.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, &n)| n as f64).sum();
                    if inside == 0.0 {
                        0.0
                    } else if outside == 0.0 {
                        f64::INFINITY
                    } else {
                        inside / outside
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VRowCalibration {
    pub target_probability: f64,
    pub target_current: f64,
    /// Expected full-field current per volt of row drive (A/V).
    pub current_per_volt: f64,
    pub v_row: f64,
}

/// Row voltage that puts the expected steady-state current of an average
/// input at the `target` switching probability of `model`.
pub fn calibrate_v_row(
    ds: &ImageDataset,
    encoder: &EncoderConfig,
    weights: &SynapseMatrix,
    model: &BehavioralModel,
    target: f64,
) -> Result<VRowCalibration> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ds.pixels() != weights.n_inputs {
        return Err(Error::InvalidParameter("dataset and weights disagree on input count".into()));
    }
    let mut per_volt = 0.0;
    for image in &ds.images {
        for j in 0..weights.n_neurons {
            per_volt += image
                .iter()
                .enumerate()
                .map(|(i, &x)| encoder.active_probability(x) * weights.conductance_of(weights.level(i, j)))
                .sum::<f64>();
        }
    }
    per_volt /= (ds.len() * weights.n_neurons) as f64;
    if !(per_volt > 0.0) {
        return Err(Error::Numerical("dataset drives no current".into()));
    }
    let target_current = model.inverse(target)?;
    Ok(VRowCalibration { target_probability: target, target_current, current_per_volt: per_volt, v_row: target_current / per_volt })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        assert_eq!(windowed(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 5), vec![3.0, 6.0]);
    }

    #[test]
    fn assignment_and_accuracy() {
        let report = TestReport {
            classes: vec![0, 1],
            class_counts: vec![vec![10, 1], vec![2, 9], vec![0, 0]],
            image_counts: vec![vec![5, 0, 0], vec![0, 4, 0], vec![0, 0, 0]],
            labels: vec![0, 1, 1],
            energy: crate::device::EnergyLedger::default().report(),
            neuron_energy: vec![],
            steps: 0,
        };
        let a = assign_classes(&report);
        assert_eq!(a, vec![Some(0), Some(1), None]);
        let p = classify(&report.image_counts, &a, &report.classes);
        assert_eq!(p, vec![Some(0), Some(1), None]);
        assert!((accuracy(&p, &report.labels) - 2.0 / 3.0).abs() < 1e-12);
        let s = selectivity(&report.class_counts, 2);
        assert!((s[0] - 10.0).abs() < 1e-12 && (s[1] - 4.5).abs() < 1e-12);
    }
}
