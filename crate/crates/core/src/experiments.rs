//! Reproducible experiment harnesses: Monte-Carlo check of the closed-form
//! initial density influence, and parameter-sensitivity sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::cluster;
use crate::dataset::{ClusterLabels, PointSet};
use crate::error::{Error, Result};
use crate::lemma::{lemma1_bin_average, lemma1_expectation};
use crate::metrics::score_run;
use crate::neighbors::{reverse_knn, Metric, NeighborIndex};
use crate::peeling::{density_influence, estimate_lambda, PeelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaBin {
    pub low: f64,
    pub high: f64,
    pub center: f64,
    pub samples: u64,
    pub empirical: f64,
    /// Closed form averaged over the bin.
    pub analytic: f64,
    /// Closed form at the bin centre.
    pub analytic_center: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub bins: Vec<LemmaBin>,
}

impl LemmaReport {
    pub fn max_abs_error(&self) -> f64 {
        self.bins.iter().map(|b| b.abs_error).fold(0.0, f64::max)
    }

    /// Indices of the two bins with the smallest analytic value.
    pub fn two_smallest_analytic(&self) -> (usize, usize) {
        let mut order: Vec<usize> = (0..self.bins.len()).collect();
        order.sort_by(|&a, &b| {
            self.bins[a]
                .analytic
                .total_cmp(&self.bins[b].analytic)
                .then(a.cmp(&b))
        });
        (order[0], order[1])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "bin_center,low,high,samples,empirical,analytic,analytic_center,abs_error\n",
        );
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                b.center,
                b.low,
                b.high,
                b.samples,
                b.empirical,
                b.analytic,
                b.analytic_center,
                b.abs_error
            ));
        }
        out
    }
}

/// Initial density influence of every point with `k = 1`.
pub fn initial_density_influence(points: &PointSet, k: usize) -> Result<Vec<f64>> {
    let index = NeighborIndex::build(points, &vec![true; points.len()], Metric::Euclidean)?;
    let rmap = reverse_knn(&index, k)?;
    Ok(density_influence(&index, &rmap))
}

/// Draws `trials` sets of `n` uniform points on `[-1, 1]`, computes each
/// point's initial density influence with `k = 1`, and averages it per bin of
/// the point's position. Each bin is compared with the closed form averaged
/// over the bin.
pub fn validate_lemma(n: usize, trials: usize, bins: usize, seed: u64) -> Result<LemmaReport> {
    if n < 2 {
        return Err(Error::Validation(format!("n must be at least 2, got {n}")));
    }
    if trials == 0 || bins == 0 {
        return Err(Error::Validation(
            "trials and bins must be at least 1".into(),
        ));
    }
    let width = 2.0 / bins as f64;
    let mut sums = vec![0.0f64; bins];
    let mut counts = vec![0u64; bins];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = vec![0.0; n];
    for _ in 0..trials {
        xs.iter_mut()
            .for_each(|x| *x = rng.random_range(-1.0..=1.0));
        let points = PointSet::from_scalars(&xs)?;
        let b = initial_density_influence(&points, 1)?;
        for (x, v) in xs.iter().zip(b) {
            let slot = (((x + 1.0) / width) as usize).min(bins - 1);
            sums[slot] += v;
            counts[slot] += 1;
        }
    }
    let rows = (0..bins)
        .map(|i| {
            let low = -1.0 + i as f64 * width;
            let high = if i + 1 == bins { 1.0 } else { low + width };
            let center = 0.5 * (low + high);
            let empirical = if counts[i] > 0 {
                sums[i] / counts[i] as f64
            } else {
                f64::NAN
            };
            let analytic = lemma1_bin_average(low, high, n)?;
            Ok(LemmaBin {
                low,
                high,
                center,
                samples: counts[i],
                empirical,
                analytic,
                analytic_center: lemma1_expectation(center, n)?,
                abs_error: (empirical - analytic).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaReport {
        n,
        trials,
        seed,
        bins: rows,
    })
}

/// How sweep offsets translate into maximal-threshold shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetScale {
    /// Offsets are added as given.
    Absolute,
    /// Offsets are multiplied by this fraction of the dataset's estimated
    /// threshold before being added.
    FractionOfLambda(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda_offset: f64,
    pub peel_fraction: f64,
    pub runs: usize,
    pub ari_mean: f64,
    pub ari_std: f64,
    pub ami_mean: f64,
    pub ami_std: f64,
    pub clusters_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn ari_spread(&self) -> f64 {
        spread(self.cells.iter().map(|c| c.ari_mean))
    }

    pub fn ami_spread(&self) -> f64 {
        spread(self.cells.iter().map(|c| c.ami_mean))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "lambda_offset,peel_fraction,runs,ari_mean,ari_std,ami_mean,ami_std,clusters_mean\n",
        );
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.lambda_offset,
                c.peel_fraction,
                c.runs,
                c.ari_mean,
                c.ari_std,
                c.ami_mean,
                c.ami_std,
                c.clusters_mean
            ));
        }
        out
    }
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    hi - lo
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every `(offset, fraction)` cell on each dataset produced by
/// `dataset(repeat)` for `repeat in 0..repeats`, scoring against the
/// dataset's ground truth. Cells run in parallel; the report is independent of
/// the thread count.
pub fn sweep<F>(
    dataset: F,
    base: &PeelParams,
    min_cluster_size: Option<usize>,
    lambda_offsets: &[f64],
    peel_fractions: &[f64],
    offset_scale: OffsetScale,
    repeats: usize,
) -> Result<SweepReport>
where
    F: Fn(usize) -> Result<PointSet> + Sync,
{
    if lambda_offsets.is_empty() {
        return Err(Error::Validation(
            "sweep needs at least one lambda offset".into(),
        ));
    }
    if peel_fractions.is_empty() {
        return Err(Error::Validation(
            "sweep needs at least one peel fraction".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::Validation("repeats must be at least 1".into()));
    }

    let datasets: Vec<PointSet> = (0..repeats).map(&dataset).collect::<Result<_>>()?;
    let mut truths = Vec::with_capacity(repeats);
    let mut base_lambdas = Vec::with_capacity(repeats);
    for ps in &datasets {
        let gt = ps
            .ground_truth()
            .ok_or_else(|| Error::Validation("sweep requires ground-truth labels".into()))?;
        truths.push(ClusterLabels::from_assignments(gt));
        base_lambdas.push(match base.lambda {
            Some(l) => l,
            None => estimate_lambda(ps, base.k)?,
        });
    }

    let grid: Vec<(f64, f64)> = lambda_offsets
        .iter()
        .flat_map(|&o| peel_fractions.iter().map(move |&f| (o, f)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..repeats).map(move |r| (c, r)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (offset, fraction) = grid[c];
            let shift = match offset_scale {
                OffsetScale::Absolute => offset,
                OffsetScale::FractionOfLambda(f) => offset * f * base_lambdas[r],
            };
            let params = PeelParams {
                lambda: Some(base_lambdas[r]),
                lambda_offset: base.lambda_offset + shift,
                peel_fraction: fraction,
                ..base.clone()
            };
            let result = cluster(&datasets[r], &params, min_cluster_size)?;
            score_run(&result, &truths[r])
        })
        .collect::<Result<Vec<_>>>()?;

    let cells = grid
        .iter()
        .enumerate()
        .map(|(c, &(offset, fraction))| {
            let runs = &scores[c * repeats..(c + 1) * repeats];
            let aris: Vec<f64> = runs.iter().map(|s| s.ari).collect();
            let amis: Vec<f64> = runs.iter().map(|s| s.ami).collect();
            let clusters: Vec<f64> = runs.iter().map(|s| s.n_clusters_found as f64).collect();
            let (ari_mean, ari_std) = mean_std(&aris);
            let (ami_mean, ami_std) = mean_std(&amis);
            SweepCell {
                lambda_offset: offset,
                peel_fraction: fraction,
                runs: repeats,
                ari_mean,
                ari_std,
                ami_mean,
                ami_std,
                clusters_mean: mean_std(&clusters).0,
            }
        })
        .collect();
    Ok(SweepReport { cells })
}
