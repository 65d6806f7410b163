use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::knn::DEFAULT_K;
use crate::preprocess::{Normalize, DEFAULT_MIN_GAP, DEFAULT_THRESHOLD_WATTS, DEFAULT_WINDOW_LEN};

pub const DEFAULT_TRAIN_FRAC: f64 = 0.9;
pub const DEFAULT_SEED: u64 = 42;

/// A channel of one house; `house` indexes `ExperimentConfig::house_dirs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRef {
    pub house: usize,
    pub channel: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    #[default]
    Text,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            other => Err(HarnessError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::Text => "text",
        })
    }
}

/// Everything a run depends on. Serialized as one JSON document with these
/// field names; missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub house_dirs: Vec<PathBuf>,
    pub channel_selection: BTreeMap<String, Vec<ChannelRef>>,
    pub threshold_watts: f64,
    pub min_gap: usize,
    pub window_len: usize,
    pub normalize: Normalize,
    pub k: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            house_dirs: Vec::new(),
            channel_selection: BTreeMap::new(),
            threshold_watts: DEFAULT_THRESHOLD_WATTS,
            min_gap: DEFAULT_MIN_GAP,
            window_len: DEFAULT_WINDOW_LEN,
            normalize: Normalize::None,
            k: DEFAULT_K,
            train_frac: DEFAULT_TRAIN_FRAC,
            seed: DEFAULT_SEED,
            output: None,
            format: ReportFormat::Text,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad(format!(
                "train_frac must lie in (0, 1), got {}",
                self.train_frac
            ));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.window_len == 0 {
            return bad("window_len must be at least 1".into());
        }
        if !(self.threshold_watts > 0.0 && self.threshold_watts.is_finite()) {
            return bad(format!(
                "threshold_watts must be positive, got {}",
                self.threshold_watts
            ));
        }
        for (name, refs) in &self.channel_selection {
            if let Some(r) = refs.iter().find(|r| r.house >= self.house_dirs.len()) {
                return bad(format!(
                    "appliance {name:?} refers to house {} but only {} house dirs are configured",
                    r.house,
                    self.house_dirs.len()
                ));
            }
        }
        Ok(())
    }
}
