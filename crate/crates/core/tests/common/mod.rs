//! Test-only reference implementations, kept independent of the library's
//! search and vote code.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force KNN: full distance list, stable sort, majority vote, tie to the
/// class of the earliest-ranked neighbor.
pub fn oracle_predict(points: &[Vec<f64>], labels: &[usize], query: &[f64], k: usize) -> usize {
    let ranked = oracle_rank(points, query);
    let top = &ranked[..k];
    let mut votes: HashMap<usize, usize> = HashMap::new();
    for &(_, i) in top {
        *votes.entry(labels[i]).or_insert(0) += 1;
    }
    let best = *votes.values().max().unwrap();
    top.iter()
        .map(|&(_, i)| labels[i])
        .find(|l| votes[l] == best)
        .unwrap()
}

/// All (distance, index) pairs, nearest first, ties by ascending index.
pub fn oracle_rank(points: &[Vec<f64>], query: &[f64]) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut acc = 0.0;
            for d in 0..p.len() {
                acc += (p[d] - query[d]).powi(2);
            }
            (acc.sqrt(), i)
        })
        .collect();
    // stable: equal distances keep index order
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    all
}

/// Random classification instance: `n` points of `dim` dims over `classes`
/// labels. Coordinates are small integers half the time so exact distance
/// ties actually occur.
pub struct Instance {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub dim: usize,
}

pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_dim: usize,
    classes: usize,
) -> Instance {
    let n = rng.random_range(5..=max_n);
    let dim = rng.random_range(1..=max_dim);
    let lattice = rng.random_bool(0.5);
    let points = (0..n).map(|_| random_point(rng, dim, lattice)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    Instance {
        points,
        labels,
        classes,
        dim,
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize, lattice: bool) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            if lattice {
                rng.random_range(-3i32..=3) as f64
            } else {
                rng.random_range(-10.0..10.0)
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
