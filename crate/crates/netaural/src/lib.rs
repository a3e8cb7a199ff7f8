//! Network auralization and centrality learning.
//!
//! Every node of a graph is turned into an audible waveform by recording
//! the impulse response of a momentum-carrying energy-exchange process on
//! the edges. A 1D-convolutional sound-recognition regressor is then
//! trained to predict node centrality straight from the waveform, using
//! `1 - pearson` as the loss.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`graph`]: graph type, random generators, edge-list ingestion,
//!   bundled reference networks
//! - [`auralize`]: the waveform generation process and its file formats
//! - [`centrality`]: ground-truth centrality measures
//! - [`audio`]: WAV rendering, spectra, spectrograms
//! - [`model`]: the M5-style regressor, Pearson loss, checkpoints
//! - [`training`]: the training loop, test-set construction, evaluation

pub mod audio;
pub mod auralize;
pub mod centrality;
mod error;
pub mod graph;
pub mod model;
pub mod training;
mod util;

pub use error::{Error, Result};
