//! Stable JSON documents for clustering results and peeling traces.
//!
//! Result document (`result.json`):
//!
//! | field               | type            | meaning                                        |
//! |---------------------|-----------------|------------------------------------------------|
//! | `labels`            | `[int]`         | cluster id per input row, `-1` for noise        |
//! | `n_clusters`        | `int`           | number of distinct non-noise labels            |
//! | `n_noise`           | `int`           | number of `-1` labels                          |
//! | `core_ids`          | `[int]`         | rows that survived peeling, ascending          |
//! | `confidence`        | `[float]`       | initial density influence per row              |
//! | `iterations`        | `int`           | number of applied peeling iterations           |
//! | `lambda`            | `float`         | maximal association threshold used             |
//! | `termination`       | `string`        | `ratio-rule`, `max-iterations` or `exhausted`  |
//! | `min_cluster_size`  | `int`           | size below which clusters became noise         |
//! | `score`             | object, optional| `{ari, ami, n_clusters_found, n_noise}`        |
//!
//! Trace document (`trace.json`): `{k, lambda, iterations: [{iteration,
//! active_before, tau, mean_peeled_b, peeled}], termination, rejected}` where
//! `rejected` is `null` or the layer evaluated but not peeled when the run
//! stopped: `{iteration, tau, mean_peeled_b, n_border}`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringResult;
use crate::dataset::NOISE;
use crate::error::{Error, Result};
use crate::metrics::ScoreReport;
use crate::peeling::{PeelingTrace, TerminationReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub labels: Vec<i64>,
    pub n_clusters: usize,
    pub n_noise: usize,
    pub core_ids: Vec<usize>,
    pub confidence: Vec<f64>,
    pub iterations: usize,
    pub lambda: f64,
    pub termination: TerminationReason,
    pub min_cluster_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreReport>,
}

impl ResultDocument {
    pub fn new(result: &ClusteringResult, score: Option<ScoreReport>) -> Self {
        Self {
            labels: result.labels.labels().to_vec(),
            n_clusters: result.labels.n_clusters(),
            n_noise: result.labels.n_noise(),
            core_ids: result.core_ids.clone(),
            confidence: result.confidence.clone(),
            iterations: result.trace.n_iterations(),
            lambda: result.trace.lambda,
            termination: result.trace.termination,
            min_cluster_size: result.min_cluster_size,
            score,
        }
    }

    /// Structural checks run before writing and after reading.
    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        let fail = |msg: String| Err(Error::Validation(format!("result document: {msg}")));
        if self.confidence.len() != n {
            return fail(format!(
                "{} confidence values for {n} labels",
                self.confidence.len()
            ));
        }
        if self
            .labels
            .iter()
            .any(|&l| l < NOISE || l >= self.n_clusters as i64)
        {
            return fail("label outside -1..n_clusters".into());
        }
        let mut seen = vec![false; self.n_clusters];
        self.labels
            .iter()
            .filter(|&&l| l >= 0)
            .for_each(|&l| seen[l as usize] = true);
        if seen.iter().any(|s| !s) {
            return fail("cluster ids are not contiguous".into());
        }
        if self.labels.iter().filter(|&&l| l == NOISE).count() != self.n_noise {
            return fail("n_noise disagrees with labels".into());
        }
        if self.core_ids.windows(2).any(|w| w[0] >= w[1]) || self.core_ids.iter().any(|&c| c >= n) {
            return fail("core ids must be ascending row indices".into());
        }
        if self.confidence.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return fail("confidence values must be finite and non-negative".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be positive".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }
}

pub fn trace_to_json(trace: &PeelingTrace) -> Result<String> {
    let mut s = serde_json::to_string_pretty(trace)?;
    s.push('\n');
    Ok(s)
}
