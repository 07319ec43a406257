//! Stochastic macrospin dynamics of the MTJ free layer.

pub mod demag;
pub mod dynamics;
pub mod llg;
pub mod params;
pub mod thermal;
pub mod vec3;

pub use demag::{compute_demag_tensor, demag_energy_density, demag_field, DemagTensor};
pub use dynamics::{
    critical_amplitude, pulse_then_relax, simulate_pulse_train, thermalize, thermalize_from, DriveConvention, Integrator,
    MagnetizationState, Pulse, PulseTrain, Trajectory,
};
pub use llg::{llg_rhs, Macrospin};
pub use params::{MagnetGeometry, MaterialParams, PhysicalConstants};
pub use thermal::{thermal_field, thermal_sigma, ThermalConfig};
