//! External validation indices: adjusted Rand index and adjusted mutual
//! information.
//!
//! Noise points (label `-1`) are scored as singleton classes: each noise
//! point forms its own cluster. Spurious noise is therefore penalised without
//! dropping points from the comparison.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringResult;
use crate::dataset::{ClusterLabels, PointSet};
use crate::error::{Error, Result};

/// Cross-tabulation of two labelings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds the table; negative labels become singleton classes.
    pub fn new(a: &[i64], b: &[i64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Validation(format!(
                "labelings differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        let rows = class_ids(a);
        let cols = class_ids(b);
        let r = rows.iter().max().map_or(0, |m| m + 1);
        let c = cols.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0u64; c]; r];
        let mut row_sums = vec![0u64; r];
        let mut col_sums = vec![0u64; c];
        for (&i, &j) in rows.iter().zip(&cols) {
            counts[i][j] += 1;
            row_sums[i] += 1;
            col_sums[j] += 1;
        }
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: a.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Whether the two labelings are the same partition.
    pub fn is_identity_partition(&self) -> bool {
        let one_per_row = self
            .counts
            .iter()
            .all(|row| row.iter().filter(|v| **v > 0).count() == 1);
        let one_per_col = (0..self.col_sums.len())
            .all(|j| self.counts.iter().filter(|row| row[j] > 0).count() == 1);
        one_per_row && one_per_col
    }
}

/// Dense class ids in order of first appearance; each negative label gets a
/// fresh id.
fn class_ids(labels: &[i64]) -> Vec<usize> {
    let mut seen = HashMap::new();
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if l < 0 {
                next += 1;
                next - 1
            } else {
                *seen.entry(l).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            }
        })
        .collect()
}

fn pairs(x: u64) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

/// Adjusted Rand index of two raw labelings.
pub fn ari(a: &[i64], b: &[i64]) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let index: i128 = table.counts.iter().flatten().map(|&v| pairs(v)).sum();
    let sum_a: i128 = table.row_sums.iter().map(|&v| pairs(v)).sum();
    let sum_b: i128 = table.col_sums.iter().map(|&v| pairs(v)).sum();
    let total = pairs(table.total);
    // (index - E) / (max - E) with E = sum_a * sum_b / total, scaled by 2 * total
    let numerator = 2 * total * index - 2 * sum_a * sum_b;
    let denominator = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if denominator == 0 {
        // both labelings are all singletons or both a single cluster
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

pub fn adjusted_rand_index(a: &ClusterLabels, b: &ClusterLabels) -> Result<f64> {
    ari(a.labels(), b.labels())
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total as f64;
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            let outer = table.row_sums[i] as f64 * table.col_sums[j] as f64;
            mi += nij / n * (n * nij / outer).ln();
        }
    }
    mi
}

/// Expected mutual information under the permutation model, summing
/// hypergeometric terms in log space.
pub fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total as usize;
    let nf = n as f64;
    let mut log_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        log_fact[i] = log_fact[i - 1] + (i as f64).ln();
    }
    let mut emi = 0.0;
    for &a in &table.row_sums {
        let a = a as usize;
        for &b in &table.col_sums {
            let b = b as usize;
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let fixed = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b] - log_fact[n];
            for nij in lo..=hi {
                let log_p = fixed
                    - log_fact[nij]
                    - log_fact[a - nij]
                    - log_fact[b - nij]
                    - log_fact[n + nij - a - b];
                let x = nij as f64;
                emi += x / nf * (nf * x / (a as f64 * b as f64)).ln() * log_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information of two raw labelings, normalised by the larger
/// of the two entropies.
pub fn ami(a: &[i64], b: &[i64]) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let n = table.total as f64;
    let identical = table.is_identity_partition();
    if identical {
        return Ok(1.0);
    }
    let h_a = entropy(&table.row_sums, n);
    let h_b = entropy(&table.col_sums, n);
    if h_a == 0.0 || h_b == 0.0 {
        return Ok(0.0);
    }
    let mi = mutual_information(&table);
    let emi = expected_mutual_information(&table);
    let denominator = h_a.max(h_b) - emi;
    if denominator.abs() < 1e-12 {
        return Ok(0.0);
    }
    Ok((mi - emi) / denominator)
}

pub fn adjusted_mutual_information(a: &ClusterLabels, b: &ClusterLabels) -> Result<f64> {
    ami(a.labels(), b.labels())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub ari: f64,
    pub ami: f64,
    pub n_clusters_found: usize,
    pub n_noise: usize,
}

pub fn score_run(result: &ClusteringResult, truth: &ClusterLabels) -> Result<ScoreReport> {
    Ok(ScoreReport {
        ari: adjusted_rand_index(&result.labels, truth)?,
        ami: adjusted_mutual_information(&result.labels, truth)?,
        n_clusters_found: result.labels.n_clusters(),
        n_noise: result.labels.n_noise(),
    })
}

/// Scores against the ground truth stored in `points`.
pub fn score_against(result: &ClusteringResult, points: &PointSet) -> Result<ScoreReport> {
    let truth = points
        .ground_truth()
        .ok_or_else(|| Error::Validation("input has no ground-truth labels".into()))?;
    score_run(result, &ClusterLabels::from_assignments(truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_reference_values() {
        assert_eq!(ari(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), -0.5);
        assert_eq!(ari(&[3, 1, 4, 1, 5], &[3, 1, 4, 1, 5]).unwrap(), 1.0);
    }

    #[test]
    fn all_noise_against_two_classes() {
        assert_eq!(ari(&[-1; 6], &[0, 0, 0, 1, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn ami_reference_values() {
        assert_eq!(ami(&[0, 1, 1, 2, 2, 2], &[5, 4, 4, 9, 9, 9]).unwrap(), 1.0);
        assert_eq!(ami(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(ami(&[0, 0, 0, 0], &[1, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn ami_matches_sklearn_value() {
        // sklearn.metrics.adjusted_mutual_info_score(a, b, average_method="max")
        let a = [0, 0, 0, 1, 1, 1, 2, 2, 2, 2];
        let b = [0, 0, 1, 1, 1, 2, 2, 2, 0, 2];
        let v = ami(&a, &b).unwrap();
        assert!((v - 0.237_288_777_701_335_58).abs() < 1e-9, "{v}");
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(matches!(ari(&[0, 1], &[0]), Err(Error::Validation(_))));
        assert!(matches!(ami(&[0, 1], &[0]), Err(Error::Validation(_))));
    }

    #[test]
    fn contingency_marginals() {
        let t = ContingencyTable::new(&[0, 0, 1, -1], &[2, 2, 2, 3]).unwrap();
        assert_eq!(t.total(), 4);
        assert_eq!(t.row_sums(), &[2, 1, 1]);
        assert_eq!(t.col_sums(), &[3, 1]);
        assert_eq!(t.counts(), &[vec![2, 0], vec![1, 0], vec![0, 1]]);
    }
}
