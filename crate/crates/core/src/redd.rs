//! Reader and writer for the REDD low-frequency layout.
//!
//! A house is a directory holding `labels.dat` (`<channel> <name>` per line)
//! and one `channel_<N>.dat` per sub-metered circuit (`<unix_ts> <watts>` per
//! line). Records are ASCII, newline-terminated, single-space separated; the
//! final newline is optional on input.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub const LABELS_FILE: &str = "labels.dat";

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate channel {channel} at line {line}")]
    DuplicateChannel { channel: u32, line: usize },
    #[error("timestamp at sample {index} does not increase ({prev} then {ts})")]
    Ordering { index: usize, prev: i64, ts: i64 },
    #[error("invalid power {value} at sample {index}: must be finite and non-negative")]
    Value { index: usize, value: f64 },
    #[error("channel {channel} listed in labels has no channel file")]
    MissingChannel { channel: u32 },
    #[error("channel {channel} has no entry in the labels table")]
    UnlabeledChannel { channel: u32 },
    #[error("invalid appliance name {0:?}")]
    InvalidName(String),
    #[error("{path}: {message}")]
    Structure { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
}

impl IngestError {
    fn in_file(self, path: &Path) -> Self {
        IngestError::File {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }
}

/// Channel number to appliance name, as read from `labels.dat`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelsTable {
    entries: BTreeMap<u32, String>,
}

impl LabelsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, channel: u32, name: impl Into<String>) -> Result<(), IngestError> {
        let name = name.into();
        if channel == 0 {
            return Err(IngestError::Parse {
                line: 0,
                reason: "channel numbers start at 1".into(),
            });
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(IngestError::InvalidName(name));
        }
        if self.entries.contains_key(&channel) {
            return Err(IngestError::DuplicateChannel { channel, line: 0 });
        }
        self.entries.insert(channel, name);
        Ok(())
    }

    pub fn get(&self, channel: u32) -> Option<&str> {
        self.entries.get(&channel).map(String::as_str)
    }

    pub fn contains(&self, channel: u32) -> bool {
        self.entries.contains_key(&channel)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending channel order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.entries.iter().map(|(c, n)| (*c, n.as_str()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (channel, name) in self.iter() {
            let _ = writeln!(out, "{channel} {name}");
        }
        out
    }
}

/// One timestamped power reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub timestamp: i64,
    pub watts: f64,
}

/// Timestamped power samples of one channel. Timestamps strictly increase and
/// every power value is finite and non-negative (`-0.0` is rejected).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    channel: u32,
    samples: Vec<Sample>,
}

fn check_watts(index: usize, watts: f64) -> Result<(), IngestError> {
    if !watts.is_finite() || watts.is_sign_negative() {
        return Err(IngestError::Value {
            index,
            value: watts,
        });
    }
    Ok(())
}

impl PowerTrace {
    pub fn new(channel: u32, samples: Vec<Sample>) -> Result<Self, IngestError> {
        for (index, s) in samples.iter().enumerate() {
            if index > 0 && s.timestamp <= samples[index - 1].timestamp {
                return Err(IngestError::Ordering {
                    index,
                    prev: samples[index - 1].timestamp,
                    ts: s.timestamp,
                });
            }
            check_watts(index, s.watts)?;
        }
        Ok(Self { channel, samples })
    }

    pub fn channel(&self) -> u32 {
        self.channel
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.watts).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct House {
    labels: LabelsTable,
    traces: BTreeMap<u32, PowerTrace>,
}

impl House {
    pub fn new(labels: LabelsTable, traces: Vec<PowerTrace>) -> Result<Self, IngestError> {
        let mut map = BTreeMap::new();
        for trace in traces {
            let channel = trace.channel();
            if !labels.contains(channel) {
                return Err(IngestError::UnlabeledChannel { channel });
            }
            if map.insert(channel, trace).is_some() {
                return Err(IngestError::DuplicateChannel { channel, line: 0 });
            }
        }
        Ok(Self {
            labels,
            traces: map,
        })
    }

    pub fn labels(&self) -> &LabelsTable {
        &self.labels
    }

    pub fn trace(&self, channel: u32) -> Option<&PowerTrace> {
        self.traces.get(&channel)
    }

    pub fn traces(&self) -> impl Iterator<Item = &PowerTrace> {
        self.traces.values()
    }

    pub fn num_traces(&self) -> usize {
        self.traces.len()
    }
}

/// Result of [`load_house`]: the house plus channel files that were present on
/// disk but absent from the labels table.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedHouse {
    pub house: House,
    pub skipped_channels: Vec<u32>,
}

fn decode(bytes: &[u8]) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        IngestError::Parse {
            line,
            reason: "not valid text".into(),
        }
    })
}

fn two_fields(line: &str, number: usize) -> Result<(&str, &str), IngestError> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(IngestError::Parse {
            line: number,
            reason: format!("expected two fields, got {line:?}"),
        }),
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// Plain base-10 decimal: optional `-`, digits, optional `.digits`.
fn parse_decimal(token: &str) -> Option<f64> {
    let body = token.strip_prefix('-').unwrap_or(token);
    let ok = match body.split_once('.') {
        Some((int, frac)) => is_digits(int) && is_digits(frac),
        None => is_digits(body),
    };
    if ok {
        token.parse().ok()
    } else {
        None
    }
}

fn parse_integer(token: &str) -> Option<i64> {
    let body = token.strip_prefix('-').unwrap_or(token);
    if is_digits(body) {
        token.parse().ok()
    } else {
        None
    }
}

pub fn parse_labels(bytes: &[u8]) -> Result<LabelsTable, IngestError> {
    let text = decode(bytes)?;
    let mut table = LabelsTable::new();
    for (i, line) in text.lines().enumerate() {
        let number = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (chan, name) = two_fields(line, number)?;
        let channel = parse_integer(chan)
            .and_then(|c| u32::try_from(c).ok())
            .filter(|&c| c > 0)
            .ok_or_else(|| IngestError::Parse {
                line: number,
                reason: format!("channel {chan:?} is not a positive integer"),
            })?;
        if table.contains(channel) {
            return Err(IngestError::DuplicateChannel {
                channel,
                line: number,
            });
        }
        table.entries.insert(channel, name.to_string());
    }
    Ok(table)
}

pub fn parse_channel(bytes: &[u8], channel: u32) -> Result<PowerTrace, IngestError> {
    let text = decode(bytes)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let number = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (ts, watts) = two_fields(line, number)?;
        let timestamp = parse_integer(ts).ok_or_else(|| IngestError::Parse {
            line: number,
            reason: format!("bad timestamp {ts:?}"),
        })?;
        let watts = parse_decimal(watts).ok_or_else(|| IngestError::Parse {
            line: number,
            reason: format!("bad power value {watts:?}"),
        })?;
        let index = samples.len();
        if let Some(prev) = samples.last().map(|s: &Sample| s.timestamp) {
            if timestamp <= prev {
                return Err(IngestError::Ordering {
                    index,
                    prev,
                    ts: timestamp,
                });
            }
        }
        check_watts(index, watts)?;
        samples.push(Sample { timestamp, watts });
    }
    Ok(PowerTrace { channel, samples })
}

/// Serializes a trace. `f64`'s `Display` is the shortest decimal that parses
/// back to the same bits and never uses exponent notation.
pub fn write_channel(trace: &PowerTrace) -> Vec<u8> {
    let mut out = String::with_capacity(trace.len() * 20);
    for s in trace.samples() {
        let _ = writeln!(out, "{} {}", s.timestamp, s.watts);
    }
    out.into_bytes()
}

pub fn channel_file_name(channel: u32) -> String {
    format!("channel_{channel}.dat")
}

fn channel_from_file_name(name: &str) -> Option<u32> {
    let n = name.strip_prefix("channel_")?.strip_suffix(".dat")?;
    if is_digits(n) {
        n.parse().ok().filter(|&c| c > 0)
    } else {
        None
    }
}

fn read(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|e| IngestError::Structure {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_house(dir: &Path) -> Result<LoadedHouse, IngestError> {
    let labels_path = dir.join(LABELS_FILE);
    if !labels_path.is_file() {
        return Err(IngestError::Structure {
            path: dir.to_path_buf(),
            message: format!("no {LABELS_FILE}"),
        });
    }
    let labels = parse_labels(&read(&labels_path)?).map_err(|e| e.in_file(&labels_path))?;

    let entries = fs::read_dir(dir).map_err(|e| IngestError::Structure {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut skipped = Vec::new();
    for entry in entries.flatten() {
        let name = entry.file_name();
        if let Some(channel) = name.to_str().and_then(channel_from_file_name) {
            if !labels.contains(channel) {
                skipped.push(channel);
            }
        }
    }
    skipped.sort_unstable();
    for channel in &skipped {
        log::warn!(
            "{}: {} is not listed in {LABELS_FILE}; skipped",
            dir.display(),
            channel_file_name(*channel)
        );
    }

    let wanted: Vec<u32> = labels.iter().map(|(c, _)| c).collect();
    for &channel in &wanted {
        if !dir.join(channel_file_name(channel)).is_file() {
            return Err(IngestError::MissingChannel { channel });
        }
    }
    let traces = wanted
        .par_iter()
        .map(|&channel| {
            let path = dir.join(channel_file_name(channel));
            parse_channel(&read(&path)?, channel).map_err(|e| e.in_file(&path))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(LoadedHouse {
        house: House::new(labels, traces)?,
        skipped_channels: skipped,
    })
}

/// Writes `labels.dat` and one channel file per trace into `dir`, creating it
/// if needed.
pub fn write_house(dir: &Path, house: &House) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(LABELS_FILE), house.labels().to_text())?;
    for trace in house.traces() {
        fs::write(
            dir.join(channel_file_name(trace.channel())),
            write_channel(trace),
        )?;
    }
    Ok(())
}
