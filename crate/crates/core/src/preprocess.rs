//! Activity detection and window extraction.
//!
//! A sample is active when it sits at least `threshold_watts` above the
//! whole-trace median. Runs of active samples become segments, short gaps are
//! bridged, and each segment is cut into non-overlapping windows of fixed
//! length. The incomplete tail of a segment is dropped.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::redd::PowerTrace;

pub const DEFAULT_THRESHOLD_WATTS: f64 = 10.0;
pub const DEFAULT_MIN_GAP: usize = 4;
pub const DEFAULT_WINDOW_LEN: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("segment {start}..={end} is not valid for a trace of {len} samples")]
    Segment {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("window length {found} differs from {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite value in window")]
    NonFinite,
    #[error("dataset has no windows")]
    Empty,
    #[error("dataset csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// Inclusive index range `[start, end]` of active samples within one trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivitySegment {
    pub start: usize,
    pub end: usize,
}

impl ActivitySegment {
    /// Number of samples covered, both ends included.
    pub fn sample_count(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Fixed-length vector of finite power values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureWindow(Vec<f64>);

impl FeatureWindow {
    pub fn new(values: Vec<f64>) -> Result<Self, PreprocessError> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(PreprocessError::NonFinite)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureWindow {
    type Error = PreprocessError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<FeatureWindow> for Vec<f64> {
    fn from(w: FeatureWindow) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    #[default]
    None,
    Max,
    Zscore,
}

impl FromStr for Normalize {
    type Err = PreprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "max" => Ok(Self::Max),
            "zscore" => Ok(Self::Zscore),
            other => Err(PreprocessError::Config(format!(
                "unknown normalization {other:?} (expected none, max or zscore)"
            ))),
        }
    }
}

impl fmt::Display for Normalize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Max => "max",
            Self::Zscore => "zscore",
        })
    }
}

impl Normalize {
    pub fn apply(self, values: &mut [f64]) {
        match self {
            Normalize::None => {}
            Normalize::Max => {
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if max != 0.0 && max.is_finite() {
                    values.iter_mut().for_each(|v| *v /= max);
                }
            }
            Normalize::Zscore => {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                // population standard deviation
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 0.0 {
                    values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
                } else {
                    values.iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
    }
}

/// Median of the values; the mean of the two middle elements for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}

pub fn detect_segments(
    trace: &PowerTrace,
    threshold_watts: f64,
    min_gap: usize,
) -> Result<Vec<ActivitySegment>, PreprocessError> {
    detect_segments_in(&trace.powers(), threshold_watts, min_gap)
}

/// Same as [`detect_segments`] over a bare power series.
pub fn detect_segments_in(
    powers: &[f64],
    threshold_watts: f64,
    min_gap: usize,
) -> Result<Vec<ActivitySegment>, PreprocessError> {
    if !(threshold_watts > 0.0 && threshold_watts.is_finite()) {
        return Err(PreprocessError::Config(format!(
            "threshold_watts must be positive, got {threshold_watts}"
        )));
    }
    let Some(baseline) = median(powers) else {
        return Ok(Vec::new());
    };

    let mut segments: Vec<ActivitySegment> = Vec::new();
    let mut run_start = None;
    for (i, &p) in powers.iter().enumerate() {
        let active = p - baseline >= threshold_watts;
        match (active, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(start)) => {
                push_merged(
                    &mut segments,
                    ActivitySegment { start, end: i - 1 },
                    min_gap,
                );
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = run_start {
        let end = powers.len() - 1;
        push_merged(&mut segments, ActivitySegment { start, end }, min_gap);
    }
    Ok(segments)
}

fn push_merged(segments: &mut Vec<ActivitySegment>, next: ActivitySegment, min_gap: usize) {
    if let Some(last) = segments.last_mut() {
        let gap = next.start - last.end - 1;
        if gap < min_gap {
            last.end = next.end;
            return;
        }
    }
    segments.push(next);
}

pub fn extract_windows(
    trace: &PowerTrace,
    segments: &[ActivitySegment],
    window_len: usize,
    normalize: Normalize,
) -> Result<Vec<FeatureWindow>, PreprocessError> {
    extract_windows_in(&trace.powers(), segments, window_len, normalize)
}

pub fn extract_windows_in(
    powers: &[f64],
    segments: &[ActivitySegment],
    window_len: usize,
    normalize: Normalize,
) -> Result<Vec<FeatureWindow>, PreprocessError> {
    if window_len == 0 {
        return Err(PreprocessError::Config(
            "window_len must be at least 1".into(),
        ));
    }
    let mut prev_end: Option<usize> = None;
    for seg in segments {
        let overlaps = prev_end.is_some_and(|e| seg.start <= e);
        if seg.end < seg.start || seg.end >= powers.len() || overlaps {
            return Err(PreprocessError::Segment {
                start: seg.start,
                end: seg.end,
                len: powers.len(),
            });
        }
        prev_end = Some(seg.end);
    }

    let mut windows = Vec::new();
    for seg in segments {
        let slice = &powers[seg.start..=seg.end];
        for chunk in slice.chunks_exact(window_len) {
            let mut values = chunk.to_vec();
            normalize.apply(&mut values);
            windows.push(FeatureWindow::new(values)?);
        }
    }
    Ok(windows)
}

/// Windows with integer class labels. Class names are unique and sorted, and
/// windows are stored grouped by class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    windows: Vec<FeatureWindow>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    window_len: usize,
}

impl LabeledDataset {
    /// Builds a dataset from parts, checking every invariant. Unlike
    /// [`build_dataset`] the window order is taken as given.
    pub fn from_parts(
        windows: Vec<FeatureWindow>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, PreprocessError> {
        if windows.is_empty() {
            return Err(PreprocessError::Empty);
        }
        if windows.len() != labels.len() {
            return Err(PreprocessError::Config(format!(
                "{} windows but {} labels",
                windows.len(),
                labels.len()
            )));
        }
        if !class_names.windows(2).all(|w| w[0] < w[1]) {
            return Err(PreprocessError::Config(
                "class names must be unique and sorted".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(PreprocessError::Config(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        let window_len = windows[0].len();
        if window_len == 0 {
            return Err(PreprocessError::Config(
                "window_len must be at least 1".into(),
            ));
        }
        if let Some(w) = windows.iter().find(|w| w.len() != window_len) {
            return Err(PreprocessError::Dimension {
                expected: window_len,
                found: w.len(),
            });
        }
        Ok(Self {
            windows,
            labels,
            class_names,
            window_len,
        })
    }

    pub fn windows(&self) -> &[FeatureWindow] {
        &self.windows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Window count per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// The rows at `indices`, in that order, with the full class table kept.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, PreprocessError> {
        let windows = indices.iter().map(|&i| self.windows[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::from_parts(windows, labels, self.class_names.clone())
    }

    /// CSV with header `label,f0,...,f{L-1}`, one window per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for i in 0..self.window_len {
            out.push_str(&format!(",f{i}"));
        }
        out.push('\n');
        for (w, l) in self.windows.iter().zip(&self.labels) {
            out.push_str(&l.to_string());
            for v in w.values() {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Class names in index order, one per line.
    pub fn class_names_text(&self) -> String {
        self.class_names.iter().map(|n| format!("{n}\n")).collect()
    }

    pub fn from_csv(csv: &str, class_names_text: &str) -> Result<Self, PreprocessError> {
        let class_names: Vec<String> = class_names_text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        let mut lines = csv
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(PreprocessError::Empty)?;
        let cols: Vec<&str> = header.split(',').collect();
        let header_ok = cols.first() == Some(&"label")
            && cols[1..]
                .iter()
                .enumerate()
                .all(|(i, c)| *c == format!("f{i}"));
        if !header_ok || cols.len() < 2 {
            return Err(PreprocessError::Csv {
                line: 1,
                reason: "expected header label,f0,...".into(),
            });
        }
        let mut windows = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in lines {
            let err = |reason: String| PreprocessError::Csv {
                line: i + 1,
                reason,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(err(format!("expected {} fields", cols.len())));
            }
            let label = fields[0]
                .parse::<usize>()
                .map_err(|e| err(format!("label: {e}")))?;
            let values = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| err(format!("value {f:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            windows.push(FeatureWindow::new(values)?);
            labels.push(label);
        }
        Self::from_parts(windows, labels, class_names)
    }
}

/// Concatenates per-appliance windows into one dataset. Appliances without
/// windows are dropped from the class table.
pub fn build_dataset(
    per_appliance: &BTreeMap<String, Vec<FeatureWindow>>,
) -> Result<LabeledDataset, PreprocessError> {
    let mut class_names = Vec::new();
    let mut windows = Vec::new();
    let mut labels = Vec::new();
    let mut expected: Option<usize> = None;
    // BTreeMap iteration is already in sorted key order.
    for (name, ws) in per_appliance {
        if ws.is_empty() {
            log::warn!("appliance {name:?} produced no windows; dropped from the class table");
            continue;
        }
        let label = class_names.len();
        class_names.push(name.clone());
        for w in ws {
            let len = *expected.get_or_insert(w.len());
            if w.len() != len {
                return Err(PreprocessError::Dimension {
                    expected: len,
                    found: w.len(),
                });
            }
            windows.push(w.clone());
            labels.push(label);
        }
    }
    LabeledDataset::from_parts(windows, labels, class_names)
}
