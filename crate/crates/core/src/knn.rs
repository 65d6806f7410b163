//! Exact k-nearest-neighbors classification by exhaustive scan.
//!
//! Neighbors are ordered by distance, then by training index. Votes are the
//! fraction of the k neighbors carrying each label. A tied vote goes to the
//! tied class that owns the nearest neighbor.

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::preprocess::{FeatureWindow, LabeledDataset};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum KnnError {
    #[error("training set is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("{0}")]
    Invalid(String),
}

pub fn euclidean_distance(a: &FeatureWindow, b: &FeatureWindow) -> Result<f64, KnnError> {
    check_dim(a.len(), b.len())?;
    Ok(squared_distance(a.values(), b.values()).sqrt())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<(), KnnError> {
    if expected == found {
        Ok(())
    } else {
        Err(KnnError::Dimension { expected, found })
    }
}

/// A training point's rank entry in a neighbor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// The k nearest training points, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet(Vec<Neighbor>);

impl NeighborSet {
    pub fn as_slice(&self) -> &[Neighbor] {
        &self.0
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|n| n.index).collect()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.0.iter().map(|n| n.distance).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-class vote fractions; each entry is a multiple of 1/k.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// Training set held verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    points: Vec<FeatureWindow>,
    labels: Vec<usize>,
    n_classes: usize,
    dim: usize,
}

impl KnnModel {
    pub fn fit(dataset: &LabeledDataset) -> Result<Self, KnnError> {
        Self::new(
            dataset.windows().to_vec(),
            dataset.labels().to_vec(),
            dataset.n_classes(),
        )
    }

    pub fn new(
        points: Vec<FeatureWindow>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, KnnError> {
        let Some(first) = points.first() else {
            return Err(KnnError::Empty);
        };
        let dim = first.len();
        if points.len() != labels.len() {
            return Err(KnnError::Invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        for p in &points {
            check_dim(dim, p.len())?;
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(KnnError::Invalid(format!(
                "label {l} out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            points,
            labels,
            n_classes,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn points(&self) -> &[FeatureWindow] {
        &self.points
    }

    fn check_query(&self, x: &FeatureWindow, k: usize) -> Result<(), KnnError> {
        check_dim(self.dim, x.len())?;
        if k == 0 || k > self.points.len() {
            return Err(KnnError::KOutOfRange {
                k,
                n: self.points.len(),
            });
        }
        Ok(())
    }

    pub fn k_nearest(&self, x: &FeatureWindow, k: usize) -> Result<NeighborSet, KnnError> {
        self.check_query(x, k)?;
        // squared distances preserve the order; roots are taken for the survivors only
        let mut all: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (squared_distance(x.values(), p.values()), i))
            .collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, by_rank);
            all.truncate(k);
        }
        all.sort_unstable_by(by_rank);
        Ok(NeighborSet(
            all.into_iter()
                .map(|(d2, index)| Neighbor {
                    index,
                    distance: d2.sqrt(),
                })
                .collect(),
        ))
    }

    fn votes(&self, neighbors: &NeighborSet) -> Vec<usize> {
        let mut votes = vec![0usize; self.n_classes];
        for n in neighbors.as_slice() {
            votes[self.labels[n.index]] += 1;
        }
        votes
    }

    pub fn class_probabilities(
        &self,
        x: &FeatureWindow,
        k: usize,
    ) -> Result<ClassDistribution, KnnError> {
        let neighbors = self.k_nearest(x, k)?;
        let k = neighbors.len() as f64;
        Ok(ClassDistribution(
            self.votes(&neighbors)
                .into_iter()
                .map(|v| v as f64 / k)
                .collect(),
        ))
    }

    pub fn predict(&self, x: &FeatureWindow, k: usize) -> Result<usize, KnnError> {
        warn_even_k(k);
        self.predict_quiet(x, k)
    }

    fn predict_quiet(&self, x: &FeatureWindow, k: usize) -> Result<usize, KnnError> {
        let neighbors = self.k_nearest(x, k)?;
        let votes = self.votes(&neighbors);
        let best = votes.iter().copied().max().unwrap_or(0);
        // Walk neighbors nearest first; the first one in a top-voted class decides.
        let winner = neighbors
            .as_slice()
            .iter()
            .map(|n| self.labels[n.index])
            .find(|&label| votes[label] == best)
            .expect("k >= 1 so some neighbor carries the top vote");
        Ok(winner)
    }

    /// Predicts every query, in parallel. Output order matches `queries`.
    pub fn predict_batch(
        &self,
        queries: &[FeatureWindow],
        k: usize,
    ) -> Result<Vec<usize>, KnnError> {
        warn_even_k(k);
        queries
            .par_iter()
            .map(|x| self.predict_quiet(x, k))
            .collect()
    }
}

fn warn_even_k(k: usize) {
    if k.is_multiple_of(2) {
        log::warn!("k = {k} is even; vote ties are more likely");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> FeatureWindow {
        FeatureWindow::new(v.to_vec()).unwrap()
    }

    fn model_1d(xs: &[f64], labels: &[usize], n_classes: usize) -> KnnModel {
        KnnModel::new(
            xs.iter().map(|&x| w(&[x])).collect(),
            labels.to_vec(),
            n_classes,
        )
        .unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            euclidean_distance(&w(&[0.0, 0.0]), &w(&[3.0, 4.0])),
            Ok(5.0)
        );
        let a = w(&[1.5, -2.0, 7.25]);
        assert_eq!(euclidean_distance(&a, &a), Ok(0.0));
        let b = w(&[0.1, 0.2, 0.3]);
        assert_eq!(euclidean_distance(&a, &b), euclidean_distance(&b, &a));
        assert_eq!(
            euclidean_distance(&a, &w(&[1.0])),
            Err(KnnError::Dimension {
                expected: 3,
                found: 1
            })
        );
    }

    #[test]
    fn fit_checks() {
        let ds =
            LabeledDataset::from_parts(vec![w(&[1.0, 2.0])], vec![0], vec!["a".into()]).unwrap();
        let m = KnnModel::fit(&ds).unwrap();
        assert_eq!((m.len(), m.dim(), m.n_classes()), (1, 2, 1));
        assert_eq!(KnnModel::new(vec![], vec![], 1), Err(KnnError::Empty));
        assert!(matches!(
            KnnModel::new(vec![w(&[1.0]), w(&[1.0, 2.0])], vec![0, 0], 1),
            Err(KnnError::Dimension { .. })
        ));
        assert!(KnnModel::new(vec![w(&[1.0])], vec![3], 2).is_err());
    }

    #[test]
    fn nearest_three_by_hand() {
        let m = model_1d(&[0.0, 1.0, 2.0, 10.0], &[0, 0, 0, 0], 1);
        let ns = m.k_nearest(&w(&[1.4]), 3).unwrap();
        assert_eq!(ns.indices(), vec![1, 2, 0]);
        let d = ns.distances();
        for (got, want) in d.iter().zip([0.4, 0.6, 1.4]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn k_range() {
        let m = model_1d(&[0.0, 1.0], &[0, 1], 2);
        assert_eq!(
            m.k_nearest(&w(&[0.0]), 3),
            Err(KnnError::KOutOfRange { k: 3, n: 2 })
        );
        assert!(m.k_nearest(&w(&[0.0]), 0).is_err());
        assert!(m.k_nearest(&w(&[0.0, 1.0]), 1).is_err());
    }

    #[test]
    fn distance_ties_by_index() {
        let m = model_1d(&[2.0, 0.0, 2.0, 0.0], &[0, 1, 0, 1], 2);
        assert_eq!(
            m.k_nearest(&w(&[1.0]), 4).unwrap().indices(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(m.k_nearest(&w(&[1.0]), 1).unwrap().indices(), vec![0]);
    }

    #[test]
    fn vote_fractions() {
        // ranks: A A B A B
        let m = model_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 100.0], &[0, 0, 1, 0, 1, 1], 2);
        let p = m.class_probabilities(&w(&[0.0]), 5).unwrap();
        assert_eq!(p.probs(), &[3.0 / 5.0, 2.0 / 5.0]);
        assert_eq!(m.predict(&w(&[0.0]), 5), Ok(0));
        assert_eq!(
            m.class_probabilities(&w(&[99.0]), 1).unwrap().probs(),
            &[0.0, 1.0]
        );
    }

    #[test]
    fn unanimous_vote() {
        let m = model_1d(&[0.0, 1.0, 2.0, 50.0], &[2, 2, 2, 0], 3);
        assert_eq!(
            m.class_probabilities(&w(&[1.0]), 3).unwrap().probs(),
            &[0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn tied_vote_goes_to_nearest_member() {
        // ranks from query 0: B A A B
        let m = model_1d(&[0.0, 1.0, 2.0, 3.0], &[1, 0, 0, 1], 2);
        assert_eq!(m.predict(&w(&[0.0]), 4), Ok(1));
        // three-way tie with k = 3 over three classes
        let m = model_1d(&[5.0, 1.0, 3.0], &[0, 1, 2], 3);
        assert_eq!(m.predict(&w(&[0.0]), 3), Ok(1));
    }

    #[test]
    fn batch_matches_sequential() {
        let m = model_1d(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1, 1], 2);
        let qs: Vec<_> = (0..20).map(|i| w(&[i as f64 * 0.3])).collect();
        let seq: Vec<_> = qs.iter().map(|q| m.predict(q, 3).unwrap()).collect();
        assert_eq!(m.predict_batch(&qs, 3).unwrap(), seq);
    }
}
