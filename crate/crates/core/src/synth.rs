//! Seeded on/off appliance traces written in the REDD layout.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::redd::{self, House, IngestError, LabelsTable, PowerTrace, Sample};

/// First timestamp of generated traces (2011-04-18, inside the REDD capture window).
pub const DEFAULT_START_TS: i64 = 1_303_132_929;
pub const DEFAULT_SAMPLE_PERIOD: i64 = 3;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid profile {name:?}: {reason}")]
    Profile { name: String, reason: String },
    #[error("duplicate profile name {0:?}")]
    DuplicateName(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Rectangular duty cycle: `off_duration` samples at standby, then
/// `on_duration` samples at `on_power`, repeated.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceProfile {
    pub name: String,
    pub on_power: f64,
    pub standby_power: f64,
    pub on_duration: usize,
    pub off_duration: usize,
    pub noise_sigma: f64,
    /// Durations are scaled by a factor drawn uniformly from `[1 - jitter, 1 + jitter]`.
    pub jitter: f64,
}

impl ApplianceProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |reason: &str| {
            Err(SynthError::Profile {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return fail("name must be a single non-empty token");
        }
        if !(self.standby_power >= 0.0 && self.standby_power.is_finite()) {
            return fail("standby_power must be finite and >= 0");
        }
        if !(self.on_power > self.standby_power && self.on_power.is_finite()) {
            return fail("on_power must exceed standby_power");
        }
        if self.on_duration == 0 || self.off_duration == 0 {
            return fail("durations must be at least one sample");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise_sigma must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return fail("jitter must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Seven well-separated appliances named after the REDD circuits the
/// classification experiments use. Levels span 80 W to 1800 W.
pub fn reference_profiles() -> Vec<ApplianceProfile> {
    let p = |name: &str, on: f64, standby: f64, on_d: usize, off_d: usize, sigma: f64| {
        ApplianceProfile {
            name: name.to_string(),
            on_power: on,
            standby_power: standby,
            on_duration: on_d,
            off_duration: off_d,
            noise_sigma: sigma,
            jitter: 0.2,
        }
    };
    vec![
        p("furnace", 260.0, 6.0, 220, 340, 2.0),
        p("bath_gfi", 1000.0, 0.0, 120, 300, 2.5),
        p("oven", 1400.0, 2.0, 240, 400, 3.0),
        p("electronics", 80.0, 4.0, 160, 260, 1.5),
        p("kitchen_outlets", 450.0, 1.0, 110, 280, 2.0),
        p("washer_dryer", 700.0, 3.0, 250, 380, 2.5),
        p("microwave", 1800.0, 3.0, 100, 320, 3.0),
    ]
}

fn jittered(base: usize, jitter: f64, rng: &mut ChaCha8Rng) -> usize {
    if jitter == 0.0 {
        return base;
    }
    let factor = 1.0 + rng.random_range(-jitter..=jitter);
    ((base as f64 * factor).round() as usize).max(1)
}

pub fn generate_trace(
    profile: &ApplianceProfile,
    channel: u32,
    n_samples: usize,
    start_ts: i64,
    sample_period: i64,
    seed: u64,
) -> Result<PowerTrace, SynthError> {
    profile.validate()?;
    if sample_period <= 0 {
        return Err(SynthError::Profile {
            name: profile.name.clone(),
            reason: "sample_period must be positive".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (profile.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, profile.noise_sigma).expect("sigma checked finite and positive"));

    let mut levels = Vec::with_capacity(n_samples);
    let mut on = false;
    while levels.len() < n_samples {
        let (len, level) = if on {
            (
                jittered(profile.on_duration, profile.jitter, &mut rng),
                profile.on_power,
            )
        } else {
            (
                jittered(profile.off_duration, profile.jitter, &mut rng),
                profile.standby_power,
            )
        };
        let len = len.min(n_samples - levels.len());
        levels.extend(std::iter::repeat_n(level, len));
        on = !on;
    }

    let samples = levels
        .into_iter()
        .enumerate()
        .map(|(i, level)| {
            let mut watts = level + noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
            if watts <= 0.0 {
                watts = 0.0;
            }
            Sample {
                timestamp: start_ts + i as i64 * sample_period,
                watts,
            }
        })
        .collect();
    Ok(PowerTrace::new(channel, samples)?)
}

fn channel_seed(seed: u64, channel: u32) -> u64 {
    seed ^ u64::from(channel).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Generates one trace per profile (channels `1..=n` in profile order) and
/// writes the house to `dir`.
pub fn generate_corpus(
    dir: &Path,
    profiles: &[ApplianceProfile],
    n_samples: usize,
    seed: u64,
) -> Result<House, SynthError> {
    let mut seen = BTreeSet::new();
    for p in profiles {
        if !seen.insert(p.name.as_str()) {
            return Err(SynthError::DuplicateName(p.name.clone()));
        }
    }
    let mut labels = LabelsTable::new();
    let mut traces = Vec::with_capacity(profiles.len());
    for (i, profile) in profiles.iter().enumerate() {
        let channel = i as u32 + 1;
        labels.insert(channel, profile.name.clone())?;
        traces.push(generate_trace(
            profile,
            channel,
            n_samples,
            DEFAULT_START_TS,
            DEFAULT_SAMPLE_PERIOD,
            channel_seed(seed, channel),
        )?);
    }
    let house = House::new(labels, traces)?;
    redd::write_house(dir, &house).map_err(|source| SynthError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(house)
}
