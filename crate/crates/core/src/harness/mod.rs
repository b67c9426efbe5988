//! Experiment configuration, run manifests, and artifact emission.

mod config;
pub mod experiments;
mod manifest;
mod plot;

pub use config::ExperimentConfig;
pub use manifest::{RunManifest, RunWriter};
pub use plot::{emit_plot, PlotKind};
