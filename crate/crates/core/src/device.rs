//! Three-terminal spin-Hall MTJ neuron: charge-to-spin conversion, two-state
//! read-out, the write/read/reset cycle and its energy bookkeeping.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetics::dynamics::thermalize_from;
use crate::magnetics::vec3::Vec3;
use crate::magnetics::{DriveConvention, Integrator, MagnetizationState, Macrospin};

/// Default MTJ width in the spin-Hall gain, calibrated so that a 0.5 ns write at
/// 20 k_B·T switches with probability 0.5 at 71 µA.
pub const CALIBRATED_W_MTJ: f64 = 32.2e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    /// Parallel-state resistance (Ω)
    pub r_p: f64,
    /// Antiparallel-state resistance (Ω)
    pub r_ap: f64,
    pub theta_sh: f64,
    /// MTJ dimension entering the spin-Hall gain (m)
    pub w_mtj: f64,
    /// Heavy-metal thickness (m)
    pub t_hm: f64,
    /// Heavy-metal write-path resistance (Ω)
    pub r_hm: f64,
    /// Heavy-metal resistivity (Ω·m)
    pub rho_hm: f64,
    pub v_dd: f64,
    pub t_write: f64,
    pub t_read: f64,
    pub t_reset: f64,
    pub i_reset: f64,
    /// Fixed inverter/latch energy per read (J)
    pub e_inverter: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            r_p: 1.21e6,
            r_ap: 2.5e6,
            theta_sh: 0.3,
            w_mtj: CALIBRATED_W_MTJ,
            t_hm: 2e-9,
            r_hm: 400.0,
            rho_hm: 200e-8,
            v_dd: 1.0,
            t_write: 0.5e-9,
            t_read: 0.5e-9,
            t_reset: 0.5e-9,
            i_reset: 150e-6,
            e_inverter: 1.47e-15,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_p > 0.0 && self.r_ap > self.r_p) {
            return Err(Error::InvalidParameter(format!(
                "need R_AP > R_P > 0, got R_P = {}, R_AP = {}",
                self.r_p, self.r_ap
            )));
        }
        if !(self.theta_sh > 0.0 && self.theta_sh <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta_SH must lie in (0, 1], got {}",
                self.theta_sh
            )));
        }
        for (name, v) in [
            ("t_write", self.t_write),
            ("t_read", self.t_read),
            ("t_reset", self.t_reset),
            ("w_mtj", self.w_mtj),
            ("t_hm", self.t_hm),
            ("r_hm", self.r_hm),
            ("v_dd", self.v_dd),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v:e}")));
            }
        }
        if !(self.e_inverter >= 0.0 && self.i_reset >= 0.0) {
            return Err(Error::InvalidParameter("E_inverter and I_reset must be >= 0".into()));
        }
        Ok(())
    }

    /// Spin-Hall gain θ_SH · W_MTJ / t_HM.
    pub fn spin_hall_gain(&self) -> f64 {
        self.theta_sh * self.w_mtj / self.t_hm
    }

    pub fn drive(&self) -> DriveConvention {
        DriveConvention::SpinHall { gain: self.spin_hall_gain() }
    }

    /// I²·R_HM·t_write for one write window.
    pub fn write_energy(&self, i_syn: f64) -> f64 {
        i_syn * i_syn * self.r_hm * self.t_write
    }

    /// I_reset²·R_HM·t_reset.
    pub fn reset_energy(&self) -> f64 {
        self.i_reset * self.i_reset * self.r_hm * self.t_reset
    }

    /// Divider energy V_DD²/(R_neuron + R_AP,ref)·t_read plus the inverter constant.
    pub fn read_energy(&self, r_neuron: f64) -> f64 {
        self.v_dd * self.v_dd / (r_neuron + self.r_ap) * self.t_read + self.e_inverter
    }
}

/// Spin current generated by a heavy-metal charge current; the sign of `i_q`
/// selects write (positive) or reset (negative) polarity.
pub fn charge_to_spin(i_q: f64, params: &DeviceParams) -> f64 {
    params.spin_hall_gain() * i_q
}

/// Cosine conductance mixing between the P and AP endpoints. The pinned layer
/// points along -x, so m = (-1, 0, 0) is the P state.
pub fn mtj_resistance(m: Vec3, params: &DeviceParams) -> f64 {
    let cos_theta = -m[0];
    let g_p = 1.0 / params.r_p;
    let g_ap = 1.0 / params.r_ap;
    let g = g_p * (1.0 + cos_theta) / 2.0 + g_ap * (1.0 - cos_theta) / 2.0;
    1.0 / g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalState {
    P,
    Ap,
}

impl LogicalState {
    pub fn from_m(m: Vec3) -> Self {
        if m[0] > 0.0 {
            LogicalState::Ap
        } else {
            LogicalState::P
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Write,
    Read,
    Reset,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Write => "write",
            Phase::Read => "read",
            Phase::Reset => "reset",
        }
    }

    fn next(self) -> Self {
        match self {
            Phase::Write => Phase::Read,
            Phase::Read => Phase::Reset,
            Phase::Reset => Phase::Write,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronDeviceState {
    pub magnet: MagnetizationState,
    pub phase: Phase,
    pub refractory_remaining: u32,
}

impl Default for NeuronDeviceState {
    fn default() -> Self {
        Self { magnet: MagnetizationState::parallel(), phase: Phase::Write, refractory_remaining: 0 }
    }
}

impl NeuronDeviceState {
    pub fn logical_state(&self) -> LogicalState {
        LogicalState::from_m(self.magnet.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    Write,
    Read,
    Reset,
}

/// One I²Rt (or divider) contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEvent {
    pub kind: EnergyKind,
    pub energy: f64,
}

/// Cumulative energy (J) and spike count of one neuron or a whole network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub write_energy: f64,
    pub read_energy: f64,
    pub reset_energy: f64,
    pub spike_count: u64,
    /// Resets of neurons that switched but lost the spike arbitration.
    pub silent_resets: u64,
    #[serde(skip)]
    log: Option<Vec<EnergyEvent>>,
}

/// JSON export shape, energies in fJ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub write_fj: f64,
    pub read_fj: f64,
    pub reset_fj: f64,
    pub total_fj: f64,
    pub spikes: u64,
    pub silent_resets: u64,
    pub per_spike_fj: Option<f64>,
}

impl EnergyLedger {
    /// A ledger that also records every event for later replay.
    pub fn with_log() -> Self {
        Self { log: Some(Vec::new()), ..Default::default() }
    }

    pub fn record(&mut self, kind: EnergyKind, energy: f64) {
        debug_assert!(energy >= 0.0);
        match kind {
            EnergyKind::Write => self.write_energy += energy,
            EnergyKind::Read => self.read_energy += energy,
            EnergyKind::Reset => self.reset_energy += energy,
        }
        if let Some(log) = &mut self.log {
            log.push(EnergyEvent { kind, energy });
        }
    }

    pub fn events(&self) -> Option<&[EnergyEvent]> {
        self.log.as_deref()
    }

    pub fn total(&self) -> f64 {
        self.write_energy + self.read_energy + self.reset_energy
    }

    /// Rebuild the totals from an event log in order.
    pub fn replay(events: &[EnergyEvent]) -> Self {
        let mut l = Self::default();
        for e in events {
            l.record(e.kind, e.energy);
        }
        l
    }

    /// Fold another ledger into this one (counts and totals; logs are not merged).
    pub fn absorb(&mut self, other: &EnergyLedger) {
        self.write_energy += other.write_energy;
        self.read_energy += other.read_energy;
        self.reset_energy += other.reset_energy;
        self.spike_count += other.spike_count;
        self.silent_resets += other.silent_resets;
    }

    pub fn report(&self) -> EnergyReport {
        let fj = 1e15;
        EnergyReport {
            write_fj: self.write_energy * fj,
            read_fj: self.read_energy * fj,
            reset_fj: self.reset_energy * fj,
            total_fj: self.total() * fj,
            spikes: self.spike_count,
            silent_resets: self.silent_resets,
            per_spike_fj: (self.spike_count > 0)
                .then(|| self.total() * fj / self.spike_count as f64),
        }
    }
}

/// Anything that maps a write-window charge current to a switching probability.
pub trait SwitchingModel: Send + Sync {
    fn probability(&self, current: f64) -> f64;
}

/// How the write phase decides whether the free layer switched.
#[derive(Debug, Clone)]
pub enum Backend {
    /// Full stochastic LLG integration, magnetization carried across steps.
    Llg { magnet: Macrospin, integrator: Box<Integrator>, thermalization: f64 },
    /// Bernoulli draw from a switching-probability model; memoryless per step.
    Behavioral(Arc<dyn SwitchingModel>),
}

impl std::fmt::Debug for dyn SwitchingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SwitchingModel")
    }
}

/// A single MTJ neuron stepping through the write → read → reset protocol.
#[derive(Debug, Clone)]
pub struct MtjNeuron {
    pub params: DeviceParams,
    pub state: NeuronDeviceState,
    pub ledger: EnergyLedger,
    backend: Backend,
}

impl MtjNeuron {
    pub fn new(params: DeviceParams, backend: Backend) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, state: NeuronDeviceState::default(), ledger: EnergyLedger::default(), backend })
    }

    pub fn with_ledger(mut self, ledger: EnergyLedger) -> Self {
        self.ledger = ledger;
        self
    }

    fn expect(&self, phase: Phase) -> Result<()> {
        if self.state.phase != phase {
            return Err(Error::Protocol { expected: phase.name(), actual: self.state.phase.name() });
        }
        Ok(())
    }

    fn advance(&mut self) {
        self.state.phase = self.state.phase.next();
    }

    /// Apply the synaptic current for one write window. Returns whether the
    /// neuron switched P → AP. While refractory the input is gated to zero and
    /// no switching can occur.
    pub fn write_phase<R: Rng + ?Sized>(&mut self, i_syn: f64, rng: &mut R) -> Result<bool> {
        self.write_phase_gated(i_syn, false, rng)
    }

    /// Write phase with an external gate (lateral inhibition). A gated write
    /// carries zero current.
    pub fn write_phase_gated<R: Rng + ?Sized>(&mut self, i_syn: f64, inhibited: bool, rng: &mut R) -> Result<bool> {
        self.expect(Phase::Write)?;
        let before = self.state.logical_state();
        let refractory = self.state.refractory_remaining > 0;
        let gated = refractory || inhibited;
        let current = if gated { 0.0 } else { i_syn };
        match &mut self.backend {
            Backend::Llg { integrator, .. } => {
                let is = [charge_to_spin(current, &self.params), 0.0, 0.0];
                if !gated {
                    self.state.magnet = integrator.run_for(self.state.magnet, is, self.params.t_write);
                }
            }
            Backend::Behavioral(model) => {
                if !gated && before == LogicalState::P {
                    let p = model.probability(current);
                    if rng.random::<f64>() < p {
                        self.state.magnet.m = MagnetizationState::antiparallel().m;
                    }
                }
                self.state.magnet.time += self.params.t_write;
            }
        }
        if refractory {
            self.state.refractory_remaining -= 1;
        }
        self.ledger.record(EnergyKind::Write, self.params.write_energy(current));
        self.advance();
        Ok(before == LogicalState::P && self.state.logical_state() == LogicalState::Ap)
    }

    /// Resistive-divider read against the AP reference. Does not disturb m.
    pub fn read_phase(&mut self) -> Result<(bool, f64)> {
        self.expect(Phase::Read)?;
        let spike = self.state.logical_state() == LogicalState::Ap;
        let r = if spike { self.params.r_ap } else { self.params.r_p };
        let energy = self.params.read_energy(r);
        self.ledger.record(EnergyKind::Read, energy);
        self.advance();
        Ok((spike, energy))
    }

    /// Reset to P after a spike. `emitted` distinguishes an emitted spike from a
    /// switch that was suppressed by arbitration; both cost reset energy.
    pub fn reset_phase(&mut self, spiked: bool) -> Result<()> {
        self.reset_phase_with(spiked, true)
    }

    pub fn reset_phase_with(&mut self, switched: bool, emitted: bool) -> Result<()> {
        self.expect(Phase::Reset)?;
        if switched {
            self.state.magnet = match &mut self.backend {
                Backend::Llg { integrator, thermalization, .. } => {
                    let t = self.state.magnet.time;
                    let mut s = thermalize_from(integrator, MagnetizationState::parallel(), *thermalization);
                    s.time = t;
                    s
                }
                Backend::Behavioral(_) => MagnetizationState {
                    m: MagnetizationState::parallel().m,
                    time: self.state.magnet.time,
                },
            };
            self.state.refractory_remaining = 1;
            self.ledger.record(EnergyKind::Reset, self.params.reset_energy());
            if emitted {
                self.ledger.spike_count += 1;
            } else {
                self.ledger.silent_resets += 1;
            }
        }
        self.advance();
        Ok(())
    }

    /// Full write/read/reset cycle for one time step. Returns the spike flag.
    pub fn cycle<R: Rng + ?Sized>(&mut self, i_syn: f64, rng: &mut R) -> Result<bool> {
        self.write_phase(i_syn, rng)?;
        let (spike, _) = self.read_phase()?;
        self.reset_phase(spike)?;
        Ok(spike)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Constant(f64);
    impl SwitchingModel for Constant {
        fn probability(&self, _: f64) -> f64 {
            self.0
        }
    }

    fn table_one_40nm() -> DeviceParams {
        DeviceParams { w_mtj: 40e-9, ..Default::default() }
    }

    #[test]
    fn spin_hall_conversion() {
        let p = table_one_40nm();
        assert_eq!(charge_to_spin(0.0, &p), 0.0);
        let is = charge_to_spin(10e-6, &p);
        assert!((is - 60e-6).abs() < 1e-18, "{is}");
        assert!(charge_to_spin(-10e-6, &p) < 0.0);
        // more than one spin per electron
        assert!(p.spin_hall_gain() > 1.0);
        assert!(DeviceParams::default().spin_hall_gain() > 1.0);
    }

    #[test]
    fn resistance_endpoints_and_midpoint() {
        let p = DeviceParams::default();
        assert!((mtj_resistance([-1.0, 0.0, 0.0], &p) - 1.21e6).abs() < 1e-6);
        assert!((mtj_resistance([1.0, 0.0, 0.0], &p) - 2.5e6).abs() < 1e-6);
        let mid = mtj_resistance([0.0, 1.0, 0.0], &p);
        // 1 / ((1/1.21e6 + 1/2.5e6)/2)
        let expected: f64 = 2.0 / (1.0 / 1.21e6 + 1.0 / 2.5e6);
        assert!((mid - expected).abs() < 1e-6, "{mid}");
        assert!((mid - 1.6307e6).abs() < 100.0);
    }

    #[test]
    fn write_energy_operating_point() {
        let p = DeviceParams::default();
        let e = p.write_energy(71e-6);
        assert!((e - 1.0082e-15).abs() < 1e-24, "{e}");
    }

    #[test]
    fn reset_energy_is_four_and_a_half_fj() {
        let p = DeviceParams::default();
        assert!((p.reset_energy() - 4.5e-15).abs() < 1e-21);
    }

    #[test]
    fn read_energy_in_p_state() {
        let p = DeviceParams::default();
        let divider = 1.0 / (1.21e6 + 2.5e6) * 0.5e-9;
        assert!((divider - 0.134_770_889e-15_f64).abs() < 1e-23);
        assert!((p.read_energy(p.r_p) - (divider + 1.47e-15)).abs() < 1e-27);
        assert!((p.read_energy(p.r_p) * 1e15 - 1.6).abs() < 0.01);
    }

    #[test]
    fn protocol_order_enforced() {
        let mut n = MtjNeuron::new(DeviceParams::default(), Backend::Behavioral(Arc::new(Constant(0.0)))).unwrap();
        assert!(matches!(n.read_phase(), Err(Error::Protocol { expected: "read", actual: "write" })));
        assert!(n.reset_phase(false).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        n.write_phase(0.0, &mut rng).unwrap();
        assert!(n.write_phase(0.0, &mut rng).is_err());
        n.read_phase().unwrap();
        assert!(n.read_phase().is_err());
        n.reset_phase(false).unwrap();
        assert_eq!(n.state.phase, Phase::Write);
    }

    #[test]
    fn spike_reset_and_refractory() {
        let mut n = MtjNeuron::new(DeviceParams::default(), Backend::Behavioral(Arc::new(Constant(1.0))))
            .unwrap()
            .with_ledger(EnergyLedger::with_log());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(n.cycle(71e-6, &mut rng).unwrap());
        assert_eq!(n.state.logical_state(), LogicalState::P);
        assert_eq!(n.state.refractory_remaining, 1);
        // the next write window is gated
        assert!(!n.cycle(71e-6, &mut rng).unwrap());
        assert!(n.cycle(71e-6, &mut rng).unwrap());
        assert_eq!(n.ledger.spike_count, 2);
        let replay = EnergyLedger::replay(n.ledger.events().unwrap());
        assert_eq!(replay.write_energy, n.ledger.write_energy);
        assert_eq!(replay.read_energy, n.ledger.read_energy);
        assert_eq!(replay.reset_energy, n.ledger.reset_energy);
        assert_eq!(n.ledger.reset_energy, 2.0 * n.params.reset_energy());
    }

    #[test]
    fn no_spike_no_reset_energy() {
        let mut n = MtjNeuron::new(DeviceParams::default(), Backend::Behavioral(Arc::new(Constant(0.0)))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert!(!n.cycle(50e-6, &mut rng).unwrap());
        }
        assert_eq!(n.ledger.reset_energy, 0.0);
        assert_eq!(n.ledger.spike_count, 0);
    }

    #[test]
    fn report_in_femtojoules() {
        let mut l = EnergyLedger::default();
        l.record(EnergyKind::Write, 1e-15);
        l.record(EnergyKind::Reset, 4.5e-15);
        l.spike_count = 1;
        let r = l.report();
        assert!((r.write_fj - 1.0).abs() < 1e-12);
        assert!((r.per_spike_fj.unwrap() - 5.5).abs() < 1e-12);
        let json = serde_json::to_value(&r).unwrap();
        for k in ["write_fj", "read_fj", "reset_fj", "spikes", "per_spike_fj"] {
            assert!(json.get(k).is_some());
        }
    }

    #[test]
    fn params_validation() {
        assert!(DeviceParams { r_ap: 1e6, ..Default::default() }.validate().is_err());
        assert!(DeviceParams { theta_sh: 0.0, ..Default::default() }.validate().is_err());
        assert!(DeviceParams { t_read: 0.0, ..Default::default() }.validate().is_err());
    }
}
