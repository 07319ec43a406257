//! Stochastic magnetic-tunnel-junction neurons and a crossbar spiking network
//! built from them.
//!
//! * [`magnetics`] integrates the stochastic LLG-Slonczewski equation for an
//!   in-plane elliptic free layer.
//! * [`device`] wraps the free layer in a three-terminal spin-Hall neuron with a
//!   write/read/reset protocol and energy accounting.
//! * [`characterization`] estimates switching probabilities by Monte Carlo and
//!   turns them into a behavioral neuron model.
//! * [`snn`] runs the crossbar network with STDP, lateral inhibition and
//!   homeostasis.
//! * [`io`] holds configuration, datasets and artifact formats.

pub mod characterization;
pub mod device;
pub mod error;
pub mod io;
pub mod magnetics;
pub mod snn;
pub mod special;

pub use error::{Error, Result};
