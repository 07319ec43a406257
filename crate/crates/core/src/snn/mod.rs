//! Spiking network: crossbar synapses, rate encoding, STDP and training.

pub mod encoder;
pub mod network;
pub mod stdp;
pub mod synapse;
pub mod train;

pub use encoder::{draw_spikes, EncoderConfig};
pub use network::{crossbar_current, Mode, Network, NetworkConfig, NetworkState, StepReport};
pub use stdp::StdpConfig;
pub use synapse::{dequantize_level, quantize_weight, stochastic_step, SynapseMatrix, MAX_LEVEL, W_MIN};
pub use train::{
    accuracy, assign_classes, calibrate_v_row, classify, selectivity, test, train, windowed, EpochRecord,
    SpikeEvent, TestReport, TrainingStats, VRowCalibration, PROBABILITY_WINDOW,
};
