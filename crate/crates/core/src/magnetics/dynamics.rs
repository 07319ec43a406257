//! Fixed-step stochastic Heun integration and pulse-train driving.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::llg::{Macrospin, RhsCoefficients};
use super::thermal::{thermal_field, thermal_sigma, ThermalConfig};
use super::vec3::{add, axpy, normalize, Vec3};
use crate::error::{Error, Result};

/// Free-layer magnetization and simulation clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationState {
    pub m: Vec3,
    pub time: f64,
}

impl MagnetizationState {
    /// Easy-axis minimum with m along -x (the P state).
    pub fn parallel() -> Self {
        Self { m: [-1.0, 0.0, 0.0], time: 0.0 }
    }

    /// Easy-axis minimum with m along +x (the AP state).
    pub fn antiparallel() -> Self {
        Self { m: [1.0, 0.0, 0.0], time: 0.0 }
    }

    /// P state rotated in-plane by `angle` radians.
    pub fn tilted_parallel(angle: f64) -> Self {
        Self { m: [-angle.cos(), angle.sin(), 0.0], time: 0.0 }
    }
}

/// How a charge current maps to the spin current injected into the free layer.
/// The spin polarization is always along +x (the easy axis); a negative charge
/// current injects along -x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveConvention {
    /// Heavy-metal underlayer: I_s = θ_SH · (W_MTJ / t_HM) · I_Q.
    SpinHall { gain: f64 },
    /// Through the pinned layer with the given spin polarization.
    PinnedLayer { polarization: f64 },
}

impl DriveConvention {
    pub fn spin_per_charge(&self) -> f64 {
        match *self {
            DriveConvention::SpinHall { gain } => gain,
            DriveConvention::PinnedLayer { polarization } => polarization,
        }
    }

    /// Spin-current vector (A) for a signed charge current (A).
    pub fn spin_current(&self, charge_current: f64) -> Vec3 {
        [self.spin_per_charge() * charge_current, 0.0, 0.0]
    }

    pub fn label(&self) -> &'static str {
        match self {
            DriveConvention::SpinHall { .. } => "spin_hall",
            DriveConvention::PinnedLayer { .. } => "pinned_layer",
        }
    }
}

/// Stochastic LLG integrator owning its noise stream.
#[derive(Debug, Clone)]
pub struct Integrator {
    coeffs: RhsCoefficients,
    dt: f64,
    sigma: f64,
    rng: ChaCha8Rng,
}

impl Integrator {
    pub fn new(magnet: &Macrospin, cfg: &ThermalConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            coeffs: magnet.coefficients(),
            dt: cfg.dt,
            sigma: thermal_sigma(cfg, magnet),
            rng: cfg.rng(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Heun predictor-corrector step. The thermal field is sampled once and held
    /// fixed across both stages; m is renormalized after the corrector.
    #[inline]
    pub fn step(&mut self, state: MagnetizationState, spin_current: Vec3) -> MagnetizationState {
        let h_th = thermal_field(self.sigma, &mut self.rng);
        let m = state.m;
        let k1 = self.coeffs.eval(m, h_th, spin_current);
        let predicted = axpy(m, self.dt, k1);
        let k2 = self.coeffs.eval(predicted, h_th, spin_current);
        let m_new = normalize(axpy(m, 0.5 * self.dt, add(k1, k2)));
        MagnetizationState { m: m_new, time: state.time + self.dt }
    }

    /// Advance `steps` steps under a constant spin current.
    pub fn run(
        &mut self,
        mut state: MagnetizationState,
        spin_current: Vec3,
        steps: usize,
    ) -> MagnetizationState {
        for _ in 0..steps {
            state = self.step(state, spin_current);
        }
        state
    }

    /// Advance for `duration` seconds (rounded to whole steps).
    pub fn run_for(
        &mut self,
        state: MagnetizationState,
        spin_current: Vec3,
        duration: f64,
    ) -> MagnetizationState {
        self.run(state, spin_current, self.steps_for(duration))
    }

    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.dt).round().max(0.0) as usize
    }
}

/// Zero-current relaxation from the exact P minimum, giving a thermally
/// equilibrated starting state.
pub fn thermalize(integrator: &mut Integrator, duration: f64) -> MagnetizationState {
    thermalize_from(integrator, MagnetizationState::parallel(), duration)
}

/// Zero-current relaxation from `start`; the clock is reset to zero.
pub fn thermalize_from(
    integrator: &mut Integrator,
    start: MagnetizationState,
    duration: f64,
) -> MagnetizationState {
    let s = integrator.run_for(start, [0.0; 3], duration);
    MagnetizationState { m: s.m, time: 0.0 }
}

/// A rectangular charge-current pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub start: f64,
    pub duration: f64,
    /// Charge current (A).
    pub amplitude: f64,
}

/// Sampled m(t).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub time: Vec<f64>,
    pub m: Vec<Vec3>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn mx(&self) -> Vec<f64> {
        self.m.iter().map(|m| m[0]).collect()
    }

    /// CSV with columns time_s, m_x, m_y, m_z.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,m_x,m_y,m_z\n");
        for (t, m) in self.time.iter().zip(&self.m) {
            out.push_str(&format!("{t:e},{},{},{}\n", m[0], m[1], m[2]));
        }
        out
    }
}

/// Pulse schedule plus sampling options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    pub pulses: Vec<Pulse>,
    /// Simulated time after the last pulse ends (s).
    pub tail: f64,
    /// Sampling interval of the returned trajectory (s).
    pub sample_interval: f64,
}

impl PulseTrain {
    pub fn validate(&self) -> Result<()> {
        let mut prev_end = f64::NEG_INFINITY;
        for (index, p) in self.pulses.iter().enumerate() {
            if !(p.duration > 0.0) || !p.start.is_finite() || p.start < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "pulse {index}: start {:e} s, duration {:e} s",
                    p.start, p.duration
                )));
            }
            if p.start < prev_end {
                return Err(Error::OverlappingPulses { index, start: p.start, prev_end });
            }
            prev_end = p.start + p.duration;
        }
        if !(self.sample_interval > 0.0) || !(self.tail >= 0.0) {
            return Err(Error::InvalidParameter("sample interval and tail must be positive".into()));
        }
        Ok(())
    }

    pub fn end_time(&self) -> f64 {
        self.pulses.last().map(|p| p.start + p.duration).unwrap_or(0.0) + self.tail
    }
}

/// Integrate a pulse train from `initial`, returning the sampled trajectory.
pub fn simulate_pulse_train(
    initial: MagnetizationState,
    train: &PulseTrain,
    drive: DriveConvention,
    magnet: &Macrospin,
    cfg: &ThermalConfig,
) -> Result<Trajectory> {
    train.validate()?;
    let mut integ = Integrator::new(magnet, cfg)?;
    let dt = cfg.dt;
    let to_step = |t: f64| (t / dt).round() as usize;
    let windows: Vec<(usize, usize, Vec3)> = train
        .pulses
        .iter()
        .map(|p| (to_step(p.start), to_step(p.start + p.duration), drive.spin_current(p.amplitude)))
        .collect();
    let total = to_step(train.end_time());
    let every = to_step(train.sample_interval).max(1);

    let mut traj = Trajectory::default();
    let mut state = initial;
    let mut cursor = 0;
    for n in 0..total {
        if n % every == 0 {
            traj.time.push(state.time);
            traj.m.push(state.m);
        }
        while cursor < windows.len() && n >= windows[cursor].1 {
            cursor += 1;
        }
        let drive_now = match windows.get(cursor) {
            Some(&(lo, hi, is)) if n >= lo && n < hi => is,
            _ => [0.0; 3],
        };
        state = integ.step(state, drive_now);
    }
    traj.time.push(state.time);
    traj.m.push(state.m);
    Ok(traj)
}

/// Final magnetization after one rectangular pulse followed by a zero-current window.
pub fn pulse_then_relax(
    integ: &mut Integrator,
    start: MagnetizationState,
    spin_current: Vec3,
    width: f64,
    relax: f64,
) -> MagnetizationState {
    let s = integ.run_for(start, spin_current, width);
    integ.run_for(s, [0.0; 3], relax)
}

/// Smallest charge-pulse amplitude that reverses `initial` (final m_x > 0 after
/// `relax`) at zero temperature, by bisection in `[lo, hi]`.
pub fn critical_amplitude(
    magnet: &Macrospin,
    drive: DriveConvention,
    initial: MagnetizationState,
    width: f64,
    relax: f64,
    dt: f64,
    (mut lo, mut hi): (f64, f64),
    tolerance: f64,
) -> Result<f64> {
    let cfg = ThermalConfig { temperature: 0.0, dt, rng_seed: 0, rng_stream: 0 };
    let reverses = |amp: f64| -> Result<bool> {
        let mut integ = Integrator::new(magnet, &cfg)?;
        Ok(pulse_then_relax(&mut integ, initial, drive.spin_current(amp), width, relax).m[0] > 0.0)
    };
    if reverses(lo)? || !reverses(hi)? {
        return Err(Error::Numerical(format!("critical amplitude not bracketed by [{lo:e}, {hi:e}] A")));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if reverses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetics::demag::compute_demag_tensor;
    use crate::magnetics::params::{MagnetGeometry, MaterialParams, PhysicalConstants};
    use crate::magnetics::vec3::norm;

    fn magnet() -> Macrospin {
        let g = MagnetGeometry::paper_disk(1.5e-9);
        Macrospin::new(
            PhysicalConstants::default(),
            MaterialParams::default(),
            g,
            compute_demag_tensor(&g).unwrap(),
        )
        .unwrap()
    }

    fn cold() -> ThermalConfig {
        ThermalConfig { temperature: 0.0, ..Default::default() }
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let mut integ = Integrator::new(&magnet(), &cold()).unwrap();
        let mut s = MagnetizationState::parallel();
        for _ in 0..1000 {
            let next = integ.step(s, [0.0; 3]);
            for k in 0..3 {
                assert!((next.m[k] - s.m[k]).abs() < 1e-9);
            }
            s = next;
        }
    }

    #[test]
    fn damping_relaxes_towards_easy_axis() {
        let mut integ = Integrator::new(&magnet(), &cold()).unwrap();
        let mut s = MagnetizationState::tilted_parallel(0.4);
        // compare per-precession-period maxima of the hard-axis deviation
        let period = 400;
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            let mut worst: f64 = 0.0;
            for _ in 0..period {
                s = integ.step(s, [0.0; 3]);
                worst = worst.max(1.0 - s.m[0].abs());
            }
            assert!(worst < last, "{worst} !< {last}");
            last = worst;
        }
    }

    #[test]
    fn overlapping_pulses_rejected() {
        let train = PulseTrain {
            pulses: vec![
                Pulse { start: 0.0, duration: 1e-9, amplitude: 1e-5 },
                Pulse { start: 0.5e-9, duration: 1e-9, amplitude: 1e-5 },
            ],
            tail: 1e-9,
            sample_interval: 1e-11,
        };
        let err = simulate_pulse_train(
            MagnetizationState::parallel(),
            &train,
            DriveConvention::SpinHall { gain: 6.0 },
            &magnet(),
            &cold(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::OverlappingPulses { index: 1, .. }));
    }

    #[test]
    fn empty_train_stays_put() {
        let train = PulseTrain { pulses: vec![], tail: 1e-9, sample_interval: 1e-11 };
        let traj = simulate_pulse_train(
            MagnetizationState::parallel(),
            &train,
            DriveConvention::SpinHall { gain: 6.0 },
            &magnet(),
            &cold(),
        )
        .unwrap();
        assert_eq!(traj.len(), 101);
        for m in &traj.m {
            assert!((m[0] + 1.0).abs() < 1e-12);
            assert!((norm(*m) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectory_csv_header() {
        let t = Trajectory { time: vec![0.0], m: vec![[-1.0, 0.0, 0.0]] };
        let csv = t.to_csv();
        assert!(csv.starts_with("time_s,m_x,m_y,m_z\n0e0,-1,0,0\n"));
    }
}
