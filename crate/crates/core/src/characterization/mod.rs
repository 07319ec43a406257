//! Monte Carlo characterization of stochastic switching and the behavioral
//! neuron model derived from it.

pub mod barrier;
pub mod behavioral;
pub mod sweep;

pub use barrier::{calibrate_barrier, energy_barrier, thickness_for_barrier, BarrierCalibration, MagnetTemplate};
pub use behavioral::{build_behavioral_model, dispersion_metric, BehavioralModel};
pub use sweep::{
    binomial_stderr, log_grid, stream_id, Characterizer, CurrentGrid, SweepSpec,
    SwitchingProbabilityTable, TableCell, TrialProtocol,
};
