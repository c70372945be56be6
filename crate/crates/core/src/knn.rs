//! Brute-force k-nearest-neighbour classification with deterministic
//! tie-breaking, plus accuracy scoring.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Feature rows paired with their class labels.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    features: Matrix,
    labels: Vec<u8>,
    // Cached squared row norms so each query costs one dot product per row.
    norms_sq: Vec<f64>,
}

impl LabeledSet {
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.rows(),
                right: labels.len(),
            });
        }
        let norms_sq = (0..features.rows())
            .map(|i| features.row(i).iter().map(|v| v * v).sum())
            .collect();
        Ok(Self {
            features,
            labels,
            norms_sq,
        })
    }

    /// Build from sample rows; an empty slice is an empty training set.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Self::new(Matrix::from_rows(rows)?, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// Classify one query by majority vote among its `k` nearest training rows.
///
/// Tie-breaking is fully deterministic: vote ties go to the candidate with
/// the smaller summed distance, then to the lower label; equal distances at
/// the k-th rank go to the lower sample index.
pub fn knn_classify(train: &LabeledSet, query: &[f64], k: usize) -> Result<u8> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if query.len() != train.dim() {
        return Err(Error::DimensionMismatch(format!(
            "query has dimension {}, training set has {}",
            query.len(),
            train.dim()
        )));
    }
    if k == 0 || k > train.len() {
        return Err(Error::ConfigError(format!(
            "k must be in 1..={}, got {k}",
            train.len()
        )));
    }

    // |q - t|^2 expanded through cached norms; one dot product per row.
    let query_norm_sq: f64 = query.iter().map(|v| v * v).sum();
    let mut dists: Vec<(f64, u32)> = (0..train.len())
        .map(|i| {
            let dot: f64 = train
                .features
                .row(i)
                .iter()
                .zip(query)
                .map(|(a, b)| a * b)
                .sum();
            let d2 = (query_norm_sq + train.norms_sq[i] - 2.0 * dot).max(0.0);
            (d2, i as u32)
        })
        .collect();

    let cmp = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, cmp);
        dists.truncate(k);
    }
    dists.sort_unstable_by(cmp);

    // label -> (votes, summed Euclidean distance)
    let mut votes: BTreeMap<u8, (usize, f64)> = BTreeMap::new();
    for (d2, idx) in &dists {
        let entry = votes.entry(train.labels[*idx as usize]).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += d2.sqrt();
    }
    let mut best: Option<(u8, usize, f64)> = None;
    for (label, (count, sum)) in votes {
        let better = match &best {
            None => true,
            Some((_, bc, bs)) => count > *bc || (count == *bc && sum < *bs),
        };
        if better {
            best = Some((label, count, sum));
        }
    }
    Ok(best.unwrap().0)
}

/// Classify every row of `queries`, in order. Queries run in parallel over
/// the immutable training set.
pub fn knn_classify_batch(train: &LabeledSet, queries: &Matrix, k: usize) -> Result<Vec<u8>> {
    (0..queries.rows())
        .into_par_iter()
        .map(|i| knn_classify(train, queries.row(i), k))
        .collect()
}

/// Percentage of predictions matching the truth.
pub fn accuracy(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let matches = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(100.0 * matches as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[Vec<f64>], labels: &[u8]) -> LabeledSet {
        LabeledSet::from_rows(rows, labels.to_vec()).unwrap()
    }

    #[test]
    fn exact_match_wins_at_k1() {
        let train = set(
            &[vec![0.0, 0.0], vec![5.0, 5.0], vec![9.0, 1.0]],
            &[3, 7, 1],
        );
        assert_eq!(knn_classify(&train, &[5.0, 5.0], 1).unwrap(), 7);
    }

    #[test]
    fn nearest_neighbour_distance_comparison() {
        let train = set(&[vec![0.0, 0.0], vec![10.0, 10.0]], &[0, 1]);
        assert_eq!(knn_classify(&train, &[1.0, 1.0], 1).unwrap(), 0);
    }

    #[test]
    fn majority_vote_over_three() {
        let train = set(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![2.1, 0.0]], &[0, 1, 1]);
        assert_eq!(knn_classify(&train, &[1.2, 0.0], 3).unwrap(), 1);
    }

    #[test]
    fn vote_tie_breaks_on_summed_distance() {
        // k = 2: one neighbour per label; label 5 sits closer in total.
        let train = set(&[vec![0.0], vec![3.0]], &[9, 5]);
        assert_eq!(knn_classify(&train, &[2.0], 2).unwrap(), 5);
    }

    #[test]
    fn full_tie_breaks_on_lower_label() {
        // Equidistant neighbours, equal votes and sums: lower label wins.
        let train = set(&[vec![-1.0], vec![1.0]], &[4, 2]);
        assert_eq!(knn_classify(&train, &[0.0], 2).unwrap(), 2);
    }

    #[test]
    fn kth_rank_distance_tie_prefers_lower_index() {
        // Two training points at identical distance fight for the k=1 slot;
        // the lower index (label 8) must be chosen.
        let train = set(&[vec![1.0], vec![-1.0]], &[8, 3]);
        assert_eq!(knn_classify(&train, &[0.0], 1).unwrap(), 8);
    }

    #[test]
    fn k_equals_n_returns_global_majority() {
        let train = set(
            &[vec![0.0], vec![100.0], vec![101.0], vec![-50.0]],
            &[2, 6, 6, 2],
        );
        // Votes tie 2-2; label 2 has smaller summed distance from 0.5.
        assert_eq!(knn_classify(&train, &[0.5], 4).unwrap(), 2);
    }

    #[test]
    fn error_paths() {
        let train = set(&[vec![0.0, 0.0]], &[1]);
        assert!(matches!(
            knn_classify(&train, &[0.0], 1),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            knn_classify(&train, &[0.0, 0.0], 0),
            Err(Error::ConfigError(_))
        ));
        assert!(matches!(
            knn_classify(&train, &[0.0, 0.0], 2),
            Err(Error::ConfigError(_))
        ));
        assert!(matches!(
            LabeledSet::from_rows(&[], vec![]),
            Err(Error::EmptyTrainingSet)
        ));
        assert!(matches!(
            LabeledSet::from_rows(&[vec![0.0]], vec![1, 2]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn accuracy_arithmetic() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 100.0);
        assert_eq!(accuracy(&[0, 0, 0], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 75.0);
        assert!(matches!(
            accuracy(&[1], &[1, 2]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            accuracy(&[], &[]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn batch_matches_single() {
        let train = set(
            &[vec![0.0, 1.0], vec![4.0, 2.0], vec![-3.0, 0.0], vec![1.0, 1.0]],
            &[1, 2, 1, 2],
        );
        let queries =
            Matrix::from_rows(&[vec![0.5, 0.5], vec![3.0, 3.0], vec![-2.0, 0.1]]).unwrap();
        let batch = knn_classify_batch(&train, &queries, 3).unwrap();
        for (i, label) in batch.iter().enumerate() {
            assert_eq!(*label, knn_classify(&train, queries.row(i), 3).unwrap());
        }
    }
}
