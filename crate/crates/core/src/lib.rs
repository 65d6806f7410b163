//! Appliance classification from sub-metered power traces.
//!
//! The pipeline reads houses in the REDD low-frequency layout ([`redd`]),
//! cuts active stretches of each channel into fixed-length windows
//! ([`preprocess`]), classifies windows with an exact k-nearest-neighbors
//! search ([`knn`]) and scores the result ([`metrics`]). [`harness`] wires the
//! steps together behind a JSON configuration and [`synth`] produces seeded
//! synthetic houses for testing.

pub mod harness;
pub mod knn;
pub mod metrics;
pub mod preprocess;
pub mod redd;
pub mod synth;

pub use harness::{run_experiment, ExperimentConfig, HarnessError, ReportFormat};
pub use knn::KnnModel;
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use preprocess::{FeatureWindow, LabeledDataset, Normalize};
pub use redd::{House, PowerTrace};
