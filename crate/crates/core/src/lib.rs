//! Relevancy-lens: attribution methods and an evaluation battery for a toy
//! transformer spoof detector over raw 1-D waveforms.
//!
//! The crate is organized around five pieces:
//!
//! - [`signal`]: waveforms, normalization, masking, the synthetic
//!   artifact-planting generator, and dataset persistence.
//! - [`model`]: a conv + self-attention classifier with hand-written
//!   forward/backward exposing attention maps and their gradients, a
//!   deterministic Adam trainer, and a finite-difference gradient check.
//! - [`attribution`]: gradient-averaged transformer relevancy, conv-gradient
//!   activation maps, and expected input gradients, all as non-negative
//!   per-sample heatmaps.
//! - [`metrics`]: equal error rate, faithfulness of heatmap-modulated
//!   inputs, and noise-mask perturbation curves.
//! - [`analysis`]: category construction (energy VAD, tertiles, external
//!   files) and dataset-scale relative-contribution / localization metrics.

pub mod analysis;
pub mod attribution;
pub mod error;
pub mod metrics;
pub mod model;
pub mod reports;
pub mod seeding;
pub mod signal;

pub use error::{Error, Result};
