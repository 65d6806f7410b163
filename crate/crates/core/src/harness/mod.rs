//! Experiment driver: configuration, stratified split, the end-to-end run and
//! report rendering.

mod config;
mod experiment;
mod report;
mod split;

use std::path::PathBuf;

use thiserror::Error;

use crate::knn::KnnError;
use crate::metrics::MetricsError;
use crate::preprocess::PreprocessError;
use crate::redd::IngestError;
use crate::synth::SynthError;

pub use config::{ChannelRef, ExperimentConfig, ReportFormat, DEFAULT_SEED, DEFAULT_TRAIN_FRAC};
pub use experiment::{
    load_houses, prepare_dataset, run_experiment, run_with_details, select_by_label, ExperimentRun,
};
pub use report::{parse_json_report, render_report};
pub use split::{stratified_split, SplitIndices};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown report format {0:?} (expected json, csv or text)")]
    UnknownFormat(String),
    #[error("{path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit status: 1 for configuration or validation problems, 2 for
    /// data and parse problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_)
            | HarnessError::UnknownFormat(_)
            | HarnessError::Preprocess(PreprocessError::Config(_))
            | HarnessError::Knn(KnnError::KOutOfRange { .. }) => 1,
            HarnessError::Synth(SynthError::Profile { .. } | SynthError::DuplicateName(_)) => 1,
            _ => 2,
        }
    }
}
