use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;

use super::{stratified_split, ChannelRef, ExperimentConfig, HarnessError, SplitIndices};
use crate::knn::KnnModel;
use crate::metrics::{aggregate_report, build_confusion, MetricsReport};
use crate::preprocess::{
    build_dataset, detect_segments, extract_windows, FeatureWindow, LabeledDataset,
};
use crate::redd::{load_house, House};

/// Loads every configured house, in `house_dirs` order.
pub fn load_houses(dirs: &[PathBuf]) -> Result<Vec<House>, HarnessError> {
    dirs.par_iter()
        .map(|dir| {
            load_house(dir)
                .map(|loaded| loaded.house)
                .map_err(|source| HarnessError::Ingest {
                    path: dir.clone(),
                    source,
                })
        })
        .collect()
}

/// Selects every labeled channel of every house, keyed by its label. Channels
/// labeled `mains` are aggregate signals and are left out.
pub fn select_by_label(houses: &[House]) -> BTreeMap<String, Vec<ChannelRef>> {
    let mut selection: BTreeMap<String, Vec<ChannelRef>> = BTreeMap::new();
    for (house, h) in houses.iter().enumerate() {
        for (channel, name) in h.labels().iter() {
            if name != "mains" {
                selection
                    .entry(name.to_string())
                    .or_default()
                    .push(ChannelRef { house, channel });
            }
        }
    }
    selection
}

/// Segments and windows every selected channel and assembles the dataset.
pub fn prepare_dataset(
    config: &ExperimentConfig,
    houses: &[House],
) -> Result<LabeledDataset, HarnessError> {
    config.validate()?;
    let per_appliance = config
        .channel_selection
        .par_iter()
        .map(|(name, refs)| {
            let mut windows: Vec<FeatureWindow> = Vec::new();
            for r in refs {
                let trace = houses
                    .get(r.house)
                    .and_then(|h| h.trace(r.channel))
                    .ok_or_else(|| {
                        HarnessError::Config(format!(
                            "appliance {name:?}: house {} has no channel {}",
                            r.house, r.channel
                        ))
                    })?;
                let segments = detect_segments(trace, config.threshold_watts, config.min_gap)?;
                windows.extend(extract_windows(
                    trace,
                    &segments,
                    config.window_len,
                    config.normalize,
                )?);
            }
            Ok((name.clone(), windows))
        })
        .collect::<Result<BTreeMap<_, _>, HarnessError>>()?;
    Ok(build_dataset(&per_appliance)?)
}

/// Everything produced along the way by [`run_with_details`].
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub dataset: LabeledDataset,
    pub split: SplitIndices,
    pub predictions: Vec<usize>,
    pub report: MetricsReport,
}

pub fn run_with_details(config: &ExperimentConfig) -> Result<ExperimentRun, HarnessError> {
    config.validate()?;
    let houses = load_houses(&config.house_dirs)?;
    let dataset = prepare_dataset(config, &houses)?;
    let split = stratified_split(&dataset, config.train_frac, config.seed)?;
    if split.test.is_empty() {
        return Err(HarnessError::Config(format!(
            "the split left no test samples ({} windows, train_frac {})",
            dataset.len(),
            config.train_frac
        )));
    }
    let model = KnnModel::fit(&dataset.subset(&split.train)?)?;
    let test = dataset.subset(&split.test)?;
    let predictions = model.predict_batch(test.windows(), config.k)?;
    let confusion = build_confusion(test.labels(), &predictions, dataset.class_names())?;
    let report = aggregate_report(&confusion)?;
    Ok(ExperimentRun {
        dataset,
        split,
        predictions,
        report,
    })
}

/// Load, window, split, fit on train, predict test, score.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport, HarnessError> {
    run_with_details(config).map(|run| run.report)
}
