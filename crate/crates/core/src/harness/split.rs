use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::preprocess::LabeledDataset;

/// Disjoint train/test index sets covering a dataset, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Classes with a single sample, placed entirely in train.
    pub singleton_classes: Vec<usize>,
}

/// Per-class seeded shuffle; the first `round(count * train_frac)` of each
/// class go to train, at least one.
pub fn stratified_split(
    dataset: &LabeledDataset,
    train_frac: f64,
    seed: u64,
) -> Result<SplitIndices, HarnessError> {
    if dataset.is_empty() {
        return Err(HarnessError::Config("cannot split an empty dataset".into()));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(HarnessError::Config(format!(
            "train_frac must lie in (0, 1), got {train_frac}"
        )));
    }
    let mut by_class = vec![Vec::new(); dataset.n_classes()];
    for (i, &l) in dataset.labels().iter().enumerate() {
        by_class[l].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitIndices {
        train: Vec::with_capacity(dataset.len()),
        test: Vec::new(),
        singleton_classes: Vec::new(),
    };
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() == 1 {
            log::warn!(
                "class {:?} has a single sample; it goes to the training set only",
                dataset.class_names()[class]
            );
            split.singleton_classes.push(class);
        }
        members.shuffle(&mut rng);
        let n_train =
            ((members.len() as f64 * train_frac).round() as usize).clamp(1, members.len());
        split.train.extend_from_slice(&members[..n_train]);
        split.test.extend_from_slice(&members[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
