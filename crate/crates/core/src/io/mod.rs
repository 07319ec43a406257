//! Configuration, datasets, persistence and report files.

pub mod artifact;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod run;

pub use artifact::{csv_with_preamble, read_json, write_json, write_text, Artifact, Provenance};
pub use checkpoint::Checkpoint;
pub use config::{DatasetKind, DriveKind, RunConfig};
pub use dataset::{archetype, encode_idx, load_idx, pearson, synth_dataset, DatasetSource, ImageDataset, IMAGE_PIXELS};
