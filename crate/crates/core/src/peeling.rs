//! Iterative border peeling.
//!
//! Each iteration computes the density influence of every active point from
//! its reverse k-nearest neighbors, classifies the lowest-scoring fraction as
//! border points, links each border point to its nearest non-border point
//! within an adaptive threshold, removes the border points and tightens the
//! thresholds of the survivors. Peeling stops once the mean density influence
//! of the peeled layer jumps relative to the preceding layers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::error::{Error, Result};
use crate::neighbors::{reverse_knn, Backend, Metric, NeighborIndex, ReverseNeighborMap};

#[derive(Debug, Clone, PartialEq)]
pub struct PeelParams {
    /// Neighborhood size for kNN and reverse-kNN queries.
    pub k: usize,
    /// Strictness constant applied to averaged neighbor thresholds.
    pub c: f64,
    /// Fraction of active points classified as border per iteration.
    pub peel_fraction: f64,
    /// Maximal association threshold. `None` estimates it from the data.
    pub lambda: Option<f64>,
    /// Added to the (given or estimated) maximal threshold.
    pub lambda_offset: f64,
    pub max_iterations: usize,
    /// z-score a ratio of consecutive peeled-layer means must exceed to stop.
    pub termination_sensitivity: f64,
    pub metric: Metric,
    pub backend: Backend,
}

impl Default for PeelParams {
    fn default() -> Self {
        Self {
            k: 20,
            c: 3.0,
            peel_fraction: 0.10,
            lambda: None,
            lambda_offset: 0.0,
            max_iterations: 100,
            termination_sensitivity: 2.0,
            metric: Metric::Euclidean,
            backend: Backend::Auto,
        }
    }
}

impl PeelParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Validation(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.peel_fraction > 0.0 && self.peel_fraction < 1.0) {
            return Err(Error::Validation(format!(
                "peel fraction must lie in (0, 1), got {}",
                self.peel_fraction
            )));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Validation(format!(
                    "lambda must be positive, got {l}"
                )));
            }
        }
        if !self.lambda_offset.is_finite() {
            return Err(Error::Validation("lambda offset must be finite".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation(
                "max iterations must be at least 1".into(),
            ));
        }
        if !(self.termination_sensitivity >= 0.0 && self.termination_sensitivity.is_finite()) {
            return Err(Error::Validation(
                "termination sensitivity must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// The maximal association threshold used for `points`.
    pub fn resolve_lambda(&self, points: &PointSet) -> Result<f64> {
        let base = match self.lambda {
            Some(l) => l,
            None => estimate_lambda(points, self.k)?,
        };
        let lambda = base + self.lambda_offset;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Validation(format!(
                "maximal threshold {base} + offset {} is not positive",
                self.lambda_offset
            )));
        }
        Ok(lambda)
    }
}

/// Mutable per-point state of a peeling run. All vectors are indexed by
/// point id.
#[derive(Debug, Clone, PartialEq)]
pub struct PeelState {
    /// Points not yet peeled.
    pub active: Vec<bool>,
    /// Most recent density influence of each point.
    pub b: Vec<f64>,
    /// Density influence at the first iteration, over the full set.
    pub initial_b: Vec<f64>,
    /// Border flags of the most recently evaluated iteration.
    pub border: Vec<bool>,
    /// Association threshold `l(x)`.
    pub thresholds: Vec<f64>,
    /// Thresholds of the surviving points as they stood during the last
    /// applied iteration; used to merge core points.
    pub core_thresholds: Vec<f64>,
    /// Associated non-border point of each peeled point.
    pub rho: Vec<Option<usize>>,
    /// Iteration (1-based) in which the point was peeled.
    pub peeled_at: Vec<Option<usize>>,
    pub lambda: f64,
}

impl PeelState {
    pub fn new(n: usize, lambda: f64) -> Self {
        Self {
            active: vec![true; n],
            b: vec![0.0; n],
            initial_b: vec![0.0; n],
            border: vec![false; n],
            thresholds: vec![lambda; n],
            core_thresholds: vec![lambda; n],
            rho: vec![None; n],
            peeled_at: vec![None; n],
            lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn active_ids(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn peeled_ids(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.peeled_at[i].is_some())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    /// The peeled-layer mean jumped; the offending iteration was rolled back.
    RatioRule,
    MaxIterations,
    /// Peeling further would leave fewer than `k + 2` active points.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub active_before: usize,
    pub tau: f64,
    pub mean_peeled_b: f64,
    pub peeled: Vec<usize>,
}

/// Border layer that was evaluated but not peeled because the run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedIteration {
    pub iteration: usize,
    pub tau: f64,
    pub mean_peeled_b: f64,
    pub n_border: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelingTrace {
    pub k: usize,
    pub lambda: f64,
    pub iterations: Vec<IterationRecord>,
    pub termination: TerminationReason,
    pub rejected: Option<RejectedIteration>,
}

impl PeelingTrace {
    /// Number of applied iterations.
    pub fn n_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn mean_peeled_b(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.mean_peeled_b).collect()
    }
}

/// `mean(D) + std(D)` over the distances from every point to each of its k
/// nearest neighbors (population standard deviation).
pub fn estimate_lambda(points: &PointSet, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    if points.len() <= k {
        return Err(Error::Degenerate(format!(
            "need more than k = {k} points to estimate lambda, got {}",
            points.len()
        )));
    }
    let index = NeighborIndex::build(points, &vec![true; points.len()], Metric::Euclidean)?;
    let distances: Vec<f64> = index
        .knn_all(k)
        .iter()
        .flat_map(|list| list.iter().map(|nb| nb.distance()))
        .collect();
    let count = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / count;
    let var = distances
        .iter()
        .map(|d| (d - mean) * (d - mean))
        .sum::<f64>()
        / count;
    Ok(mean + var.sqrt())
}

/// Density influence of each active point, aligned with `index.active_ids()`:
/// the sum over its reverse neighbors `j` of `exp(-|x_i - x_j|^2 / sigma_j^2)`,
/// where `sigma_j` is the distance from `x_j` to its k-th nearest active
/// neighbor. Points nobody counts as a neighbor score 0.
pub fn density_influence(index: &NeighborIndex<'_>, rmap: &ReverseNeighborMap) -> Vec<f64> {
    let n = index.points().len();
    let mut b = vec![0.0; n];
    for &j in index.active_ids() {
        let list = rmap.forward(j);
        let Some(kth) = list.last() else { continue };
        let scale_sq = kth.distance_sq;
        for nb in list {
            b[nb.index] += kernel(nb.distance_sq, scale_sq);
        }
    }
    index.active_ids().iter().map(|&i| b[i]).collect()
}

/// Locally scaled Gaussian kernel. A zero bandwidth (duplicate points) takes
/// the limit: 1 at zero distance, 0 elsewhere.
#[inline]
fn kernel(distance_sq: f64, scale_sq: f64) -> f64 {
    if scale_sq > 0.0 {
        (-distance_sq / scale_sq).exp()
    } else if distance_sq == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Nearest-rank cutoff: `tau` is the `ceil(fraction * m)`-th smallest value and
/// every point with `b <= tau` is border.
pub fn classify_border(b: &[f64], peel_fraction: f64) -> (Vec<bool>, f64) {
    if b.is_empty() {
        return (Vec::new(), f64::NAN);
    }
    let m = b.len();
    // the epsilon keeps e.g. 0.1 * 30 = 3.0000000000000004 at rank 3
    let rank = ((peel_fraction * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    let mut sorted = b.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let tau = sorted[rank - 1];
    (b.iter().map(|v| *v <= tau).collect(), tau)
}

/// Links every border point to its nearest non-border active point within the
/// border point's threshold, and shrinks the threshold of each linked point
/// to its association distance. `border` is indexed by point id. Points with
/// no candidate in range keep `rho = None` and their threshold.
pub fn associate_borders(
    points: &PointSet,
    state: &mut PeelState,
    border: &[bool],
    backend: Backend,
) {
    let non_border: Vec<usize> = (0..points.len())
        .filter(|&i| state.active[i] && !border[i])
        .collect();
    let borders: Vec<usize> = (0..points.len())
        .filter(|&i| state.active[i] && border[i])
        .collect();
    if non_border.is_empty() {
        return;
    }
    let index = NeighborIndex::over_ids(points, non_border, Metric::Euclidean, backend);
    let links: Vec<Option<(usize, f64)>> = borders
        .par_iter()
        .map(|&i| {
            index
                .knn_point(points.point(i), 1, Some(i))
                .first()
                .map(|nb| (nb.index, nb.distance()))
                .filter(|(_, d)| *d <= state.thresholds[i])
        })
        .collect();
    for (&i, link) in borders.iter().zip(links) {
        if let Some((j, d)) = link {
            state.rho[i] = Some(j);
            state.thresholds[i] = d;
        }
    }
}

/// Removes the border points of iteration `t` from the active set.
pub fn peel(state: &mut PeelState, border: &[bool], iteration: usize) -> Vec<usize> {
    let mut peeled = Vec::new();
    for (i, &is_border) in border.iter().enumerate() {
        if state.active[i] && is_border {
            state.active[i] = false;
            state.peeled_at[i] = Some(iteration);
            peeled.push(i);
        }
    }
    peeled
}

/// Recomputes each active point's threshold as `c` times the mean threshold
/// of its (up to) `k` nearest peeled points, capped at `lambda`. With no
/// peeled points the thresholds are left untouched.
pub fn update_thresholds(
    points: &PointSet,
    state: &mut PeelState,
    k: usize,
    c: f64,
    backend: Backend,
) {
    let peeled = state.peeled_ids();
    if peeled.is_empty() {
        return;
    }
    let index = NeighborIndex::over_ids(points, peeled, Metric::Euclidean, backend);
    let active = state.active_ids();
    let lambda = state.lambda;
    let updated: Vec<f64> = active
        .par_iter()
        .map(|&i| {
            let near = index.knn_point(points.point(i), k, None);
            let mean = near
                .iter()
                .map(|nb| state.thresholds[nb.index])
                .sum::<f64>()
                / near.len() as f64;
            let candidate = c * mean;
            if candidate < lambda {
                candidate
            } else {
                lambda
            }
        })
        .collect();
    for (&i, l) in active.iter().zip(updated) {
        state.thresholds[i] = l;
    }
}

/// Stop rule over the ratios `r_s = m_s / m_{s-1}` of consecutive peeled-layer
/// means: fires when the latest ratio exceeds the mean of the earlier ratios
/// by more than `sensitivity` standard deviations. Needs at least two earlier
/// ratios; ratios with a zero denominator are skipped.
pub fn should_terminate(mean_peeled_b: &[f64], sensitivity: f64) -> bool {
    let t = mean_peeled_b.len();
    if t < 4 || mean_peeled_b[t - 2] <= 0.0 {
        return false;
    }
    let ratios: Vec<f64> = mean_peeled_b[..t - 1]
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    ratio_rule(
        &ratios,
        mean_peeled_b[t - 1] / mean_peeled_b[t - 2],
        sensitivity,
    )
}

/// Whether `latest` is an outlier relative to `history`.
pub fn ratio_rule(history: &[f64], latest: f64, sensitivity: f64) -> bool {
    if history.len() < 2 || !latest.is_finite() {
        return false;
    }
    let n = history.len() as f64;
    let mean = history.iter().sum::<f64>() / n;
    let std = (history.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt();
    // a relative slack absorbs rounding noise when the history is flat
    latest > mean + sensitivity * std + 1e-12 * mean.abs()
}

/// Runs border peeling to completion. The surviving active set of the
/// returned state is the core set.
pub fn run_peeling(points: &PointSet, params: &PeelParams) -> Result<(PeelState, PeelingTrace)> {
    params.validate()?;
    let n = points.len();
    let k = params.k;
    if n <= k + 2 {
        return Err(Error::Degenerate(format!(
            "{n} points are too few for k = {k}; need more than k + 2"
        )));
    }
    let lambda = params.resolve_lambda(points)?;
    let mut state = PeelState::new(n, lambda);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut means: Vec<f64> = Vec::new();
    let mut rejected = None;

    let termination = loop {
        let t = records.len() + 1;
        if t > params.max_iterations {
            break TerminationReason::MaxIterations;
        }
        let m = state.n_active();
        if m < k + 2 {
            break TerminationReason::Exhausted;
        }

        let index =
            NeighborIndex::build_with(points, &state.active, params.metric, params.backend)?;
        let rmap = reverse_knn(&index, k)?;
        let b_active = density_influence(&index, &rmap);
        let (flags_active, tau) = classify_border(&b_active, params.peel_fraction);

        let mut border = vec![false; n];
        let mut peeled_sum = 0.0;
        let mut n_border = 0;
        for ((&i, &b), &flag) in index.active_ids().iter().zip(&b_active).zip(&flags_active) {
            state.b[i] = b;
            if t == 1 {
                state.initial_b[i] = b;
            }
            if flag {
                border[i] = true;
                peeled_sum += b;
                n_border += 1;
            }
        }
        state.border = border.clone();
        let mean_peeled_b = peeled_sum / n_border as f64;

        means.push(mean_peeled_b);
        let reject = |reason| {
            (
                reason,
                RejectedIteration {
                    iteration: t,
                    tau,
                    mean_peeled_b,
                    n_border,
                },
            )
        };
        if should_terminate(&means, params.termination_sensitivity) {
            let (reason, r) = reject(TerminationReason::RatioRule);
            rejected = Some(r);
            break reason;
        }
        if m - n_border < k + 2 {
            let (reason, r) = reject(TerminationReason::Exhausted);
            rejected = Some(r);
            break reason;
        }

        state.core_thresholds.clone_from(&state.thresholds);
        associate_borders(points, &mut state, &border, params.backend);
        let peeled = peel(&mut state, &border, t);
        records.push(IterationRecord {
            iteration: t,
            active_before: m,
            tau,
            mean_peeled_b,
            peeled,
        });
        update_thresholds(points, &mut state, k, params.c, params.backend);
    };

    let trace = PeelingTrace {
        k,
        lambda,
        iterations: records,
        termination,
        rejected,
    };
    Ok((state, trace))
}
