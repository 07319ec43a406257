//! Monotone interpolant of a switching-probability slice: the behavioral neuron.

use serde::{Deserialize, Serialize};

use super::sweep::{check_monotone, SwitchingProbabilityTable, TableCell};
use crate::device::SwitchingModel;
use crate::error::{Error, Result};

/// Shape-preserving (Fritsch-Carlson) cubic through (current, P_sw) knots,
/// clamped to the end values outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralModel {
    pub eb_kt: f64,
    pub tpw_s: f64,
    pub currents: Vec<f64>,
    pub probabilities: Vec<f64>,
    slopes: Vec<f64>,
}

impl BehavioralModel {
    /// Build from knots that are already non-decreasing.
    pub fn from_knots(eb_kt: f64, tpw_s: f64, currents: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if currents.len() != probabilities.len() || currents.len() < 2 {
            return Err(Error::BadSlice("need at least two knots".into()));
        }
        if currents.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadSlice("knot currents must be strictly increasing".into()));
        }
        if probabilities.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::BadSlice("knot probabilities must be non-decreasing".into()));
        }
        let slopes = pchip_slopes(&currents, &probabilities);
        Ok(Self { eb_kt, tpw_s, currents, probabilities, slopes })
    }

    pub fn eval(&self, current: f64) -> f64 {
        let x = &self.currents;
        let y = &self.probabilities;
        let n = x.len();
        if current <= x[0] {
            return y[0];
        }
        if current >= x[n - 1] {
            return y[n - 1];
        }
        let k = x.partition_point(|&v| v <= current) - 1;
        let h = x[k + 1] - x[k];
        let t = (current - x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y[k] + h10 * h * self.slopes[k] + h01 * y[k + 1] + h11 * h * self.slopes[k + 1];
        v.clamp(0.0, 1.0)
    }

    /// Smallest current where the interpolant reaches `level`, by bisection.
    pub fn inverse(&self, level: f64) -> Result<f64> {
        let n = self.currents.len();
        if !(self.probabilities[0] <= level && self.probabilities[n - 1] >= level) {
            return Err(Error::NotBracketed { level });
        }
        let k = self.probabilities.partition_point(|&p| p < level);
        if k == 0 {
            return Ok(self.currents[0]);
        }
        let (mut lo, mut hi) = (self.currents[k - 1], self.currents[k]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(hi)
    }
}

impl SwitchingModel for BehavioralModel {
    fn probability(&self, current: f64) -> f64 {
        self.eval(current)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] == 0.0 || delta[k] == 0.0 || delta[k - 1].signum() != delta[k].signum() {
            d[k] = 0.0;
        } else {
            let h0 = x[k] - x[k - 1];
            let h1 = x[k + 1] - x[k];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
    d[n - 1] = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Pool-adjacent-violators: the least-squares non-decreasing fit with equal weights.
fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().expect("non-empty");
            *last = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

/// Build the behavioral neuron for one (E_B, t_PW) slice of a table.
///
/// The slice must hold at least 8 currents spanning P_sw 0.01..0.99. Dips
/// within statistical slack are pooled away; larger violations are an error.
pub fn build_behavioral_model(table: &SwitchingProbabilityTable, eb_kt: f64, tpw_s: f64) -> Result<BehavioralModel> {
    let slice = table.slice(eb_kt, tpw_s);
    model_from_cells(&slice, eb_kt, tpw_s)
}

pub(crate) fn model_from_cells(slice: &[TableCell], eb_kt: f64, tpw_s: f64) -> Result<BehavioralModel> {
    if slice.len() < 8 {
        return Err(Error::BadSlice(format!("slice has {} points, need at least 8", slice.len())));
    }
    check_monotone(slice)?;
    let lo = slice.iter().map(|c| c.p).fold(f64::INFINITY, f64::min);
    let hi = slice.iter().map(|c| c.p).fold(f64::NEG_INFINITY, f64::max);
    if lo > 0.01 || hi < 0.99 {
        return Err(Error::BadSlice(format!(
            "slice spans P_sw {lo}..{hi}, need 0.01..0.99; widen the current grid"
        )));
    }
    let currents: Vec<f64> = slice.iter().map(|c| c.current).collect();
    let probs = isotonic(&slice.iter().map(|c| c.p).collect::<Vec<_>>());
    BehavioralModel::from_knots(eb_kt, tpw_s, currents, probs)
}

/// Transition width I(P_sw = 0.9) − I(P_sw = 0.1) of a slice, in amperes.
///
/// A slice whose every cell is exactly 0 or 1 is a deterministic step and has
/// zero width.
pub fn dispersion_metric(slice: &[TableCell]) -> Result<f64> {
    if slice.len() < 2 {
        return Err(Error::BadSlice("need at least two points".into()));
    }
    let mut cells = slice.to_vec();
    cells.sort_by(|a, b| a.current.total_cmp(&b.current));
    check_monotone(&cells)?;
    let first = cells[0].p;
    let last = cells[cells.len() - 1].p;
    if cells.iter().all(|c| c.p == 0.0 || c.p == 1.0) && first == 0.0 && last == 1.0 {
        return Ok(0.0);
    }
    let probs = isotonic(&cells.iter().map(|c| c.p).collect::<Vec<_>>());
    let currents = cells.iter().map(|c| c.current).collect();
    let m = BehavioralModel::from_knots(cells[0].eb_kt, cells[0].tpw_s, currents, probs)?;
    Ok(m.inverse(0.9)? - m.inverse(0.1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::sweep::binomial_stderr;
    use proptest::prelude::*;

    fn logistic_cells(center: f64, width: f64, n: usize) -> Vec<TableCell> {
        (0..n)
            .map(|k| {
                let i = center * (0.3 + 1.4 * k as f64 / (n - 1) as f64);
                let p = 1.0 / (1.0 + (-(i - center) / width).exp());
                let p = (p * 1000.0).round() / 1000.0;
                TableCell { current: i, eb_kt: 20.0, tpw_s: 0.5e-9, p, stderr: binomial_stderr(p, 1000) }
            })
            .collect()
    }

    #[test]
    fn reproduces_knots_and_clamps() {
        let cells = logistic_cells(70e-6, 5e-6, 20);
        let m = model_from_cells(&cells, 20.0, 0.5e-9).unwrap();
        for c in &cells {
            assert!((m.eval(c.current) - c.p).abs() < 1e-12);
        }
        assert_eq!(m.eval(0.0), cells[0].p);
        assert_eq!(m.eval(-1.0), cells[0].p);
        assert_eq!(m.eval(1.0), cells[19].p);
    }

    #[test]
    fn midpoint_between_bracketing_knots() {
        let cells = logistic_cells(70e-6, 5e-6, 20);
        let m = model_from_cells(&cells, 20.0, 0.5e-9).unwrap();
        for w in cells.windows(2) {
            let v = m.eval(0.5 * (w[0].current + w[1].current));
            assert!(v >= w[0].p - 1e-15 && v <= w[1].p + 1e-15);
        }
    }

    #[test]
    fn rejects_short_or_narrow_slices() {
        let cells = logistic_cells(70e-6, 5e-6, 6);
        assert!(model_from_cells(&cells, 20.0, 0.5e-9).is_err());
        let narrow: Vec<_> = logistic_cells(70e-6, 50e-6, 20);
        assert!(matches!(model_from_cells(&narrow, 20.0, 0.5e-9), Err(Error::BadSlice(_))));
    }

    #[test]
    fn rejects_non_monotone_beyond_slack() {
        let mut cells = logistic_cells(70e-6, 5e-6, 20);
        cells[10].p = 0.05;
        cells[10].stderr = binomial_stderr(0.05, 1000);
        assert!(matches!(model_from_cells(&cells, 20.0, 0.5e-9), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn pools_small_dips() {
        let mut cells = logistic_cells(70e-6, 5e-6, 20);
        let k = 10;
        cells[k].p = cells[k - 1].p - 0.01;
        let m = model_from_cells(&cells, 20.0, 0.5e-9).unwrap();
        assert!(m.probabilities.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn step_function_has_zero_dispersion() {
        let cells: Vec<TableCell> = (0..10)
            .map(|k| {
                let p = if k < 5 { 0.0 } else { 1.0 };
                TableCell { current: k as f64 * 1e-6, eb_kt: 20.0, tpw_s: 1e-9, p, stderr: 0.0 }
            })
            .collect();
        let w = dispersion_metric(&cells).unwrap();
        assert!(w.abs() < 1e-12, "{w}");
    }

    #[test]
    fn dispersion_needs_bracketing() {
        let cells: Vec<TableCell> = (0..10)
            .map(|k| TableCell { current: (k + 1) as f64 * 1e-6, eb_kt: 20.0, tpw_s: 1e-9, p: 0.5, stderr: 0.0 })
            .collect();
        assert!(matches!(dispersion_metric(&cells), Err(Error::NotBracketed { .. })));
    }

    #[test]
    fn dispersion_of_logistic() {
        // logistic width w: I(0.9) − I(0.1) = 2·w·ln 9
        let cells = logistic_cells(70e-6, 5e-6, 60);
        let d = dispersion_metric(&cells).unwrap();
        assert!((d - 2.0 * 5e-6 * 9f64.ln()).abs() < 0.3e-6, "{d}");
    }

    proptest! {
        #[test]
        fn interpolant_is_monotone(raw in proptest::collection::vec(0.0f64..1.0, 8..30), q in 0.0f64..1.0, r in 0.0f64..1.0) {
            let mut probs = raw.clone();
            probs.sort_by(f64::total_cmp);
            let currents: Vec<f64> = (0..probs.len()).map(|k| (k as f64 + 1.0) * 1e-6 * (1.0 + 0.1 * (k % 3) as f64 / 3.0)).collect();
            let currents: Vec<f64> = currents.iter().scan(0.0, |acc, &c| { *acc += c; Some(*acc) }).collect();
            let m = BehavioralModel::from_knots(20.0, 1e-9, currents.clone(), probs).unwrap();
            let span = currents[currents.len() - 1] * 1.2;
            let (a, b) = if q < r { (q * span, r * span) } else { (r * span, q * span) };
            prop_assert!(m.eval(a) <= m.eval(b) + 1e-12);
            prop_assert!((0.0..=1.0).contains(&m.eval(a)));
        }
    }
}
