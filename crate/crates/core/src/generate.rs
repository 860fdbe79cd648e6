//! Seeded synthetic datasets.
//!
//! All sampling goes through `ChaCha8Rng::seed_from_u64`, which produces the
//! same stream on every platform, so a spec plus a seed pins the dataset.
//!
//! JSON form of a spec:
//!
//! ```json
//! {"kind": "gaussian-mixture", "seed": 7,
//!  "components": [{"mean": [-5, 0], "covariance": {"isotropic": 1.0}, "count": 200},
//!                 {"mean": [5, 0], "covariance": {"diagonal": [1, 1]}, "count": 200}]}
//! {"kind": "uniform-interval", "seed": 1, "low": -1, "high": 1, "count": 50}
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Covariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    pub covariance: Covariance,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    GaussianMixture {
        components: Vec<GaussianComponent>,
        seed: u64,
    },
    UniformInterval {
        low: f64,
        high: f64,
        count: usize,
        seed: u64,
    },
}

impl GeneratorSpec {
    /// Unit-variance 2-D blobs centred at `(-offset, 0)` and `(offset, 0)`.
    pub fn two_gaussians(offset: f64, per_component: usize, seed: u64) -> Self {
        let component = |x: f64| GaussianComponent {
            mean: vec![x, 0.0],
            covariance: Covariance::Isotropic(1.0),
            count: per_component,
        };
        GeneratorSpec::GaussianMixture {
            components: vec![component(-offset), component(offset)],
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            GeneratorSpec::GaussianMixture { seed, .. }
            | GeneratorSpec::UniformInterval { seed, .. } => *seed,
        }
    }

    pub fn with_seed(mut self, new_seed: u64) -> Self {
        match &mut self {
            GeneratorSpec::GaussianMixture { seed, .. }
            | GeneratorSpec::UniformInterval { seed, .. } => *seed = new_seed,
        }
        self
    }
}

/// Draws the point set described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<PointSet> {
    match spec {
        GeneratorSpec::GaussianMixture { components, seed } => gaussian_mixture(components, *seed),
        GeneratorSpec::UniformInterval {
            low,
            high,
            count,
            seed,
        } => {
            if *count == 0 {
                return Err(Error::Validation(
                    "uniform-interval count must be at least 1".into(),
                ));
            }
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(Error::Validation(format!(
                    "invalid interval [{low}, {high}]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let values: Vec<f64> = (0..*count)
                .map(|_| rng.random_range(*low..=*high))
                .collect();
            PointSet::from_scalars(&values)
        }
    }
}

fn gaussian_mixture(components: &[GaussianComponent], seed: u64) -> Result<PointSet> {
    let first = components
        .first()
        .ok_or_else(|| Error::Validation("gaussian-mixture needs at least one component".into()))?;
    let dim = first.mean.len();
    if dim == 0 {
        return Err(Error::Validation(
            "component mean must have at least one coordinate".into(),
        ));
    }

    let mut factors = Vec::with_capacity(components.len());
    for (c, comp) in components.iter().enumerate() {
        if comp.mean.len() != dim {
            return Err(Error::Validation(format!(
                "component {c} has dimension {}, expected {dim}",
                comp.mean.len()
            )));
        }
        if comp.count == 0 {
            return Err(Error::Validation(format!("component {c} has zero count")));
        }
        factors.push(cholesky_factor(&comp.covariance, dim).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("component {c}: {msg}")),
            other => other,
        })?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = components.iter().map(|c| c.count).sum();
    let mut coords = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    let mut z = vec![0.0; dim];
    for (c, (comp, lower)) in components.iter().zip(&factors).enumerate() {
        for _ in 0..comp.count {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            for r in 0..dim {
                let offset: f64 = (0..=r).map(|k| lower[r * dim + k] * z[k]).sum();
                coords.push(comp.mean[r] + offset);
            }
            labels.push(c as i64);
        }
    }
    PointSet::new(coords, dim, Some(labels))
}

/// Lower-triangular `L` with `L L^T = covariance`, row-major `dim x dim`.
fn cholesky_factor(cov: &Covariance, dim: usize) -> Result<Vec<f64>> {
    let mut matrix = vec![0.0; dim * dim];
    match cov {
        Covariance::Isotropic(v) => (0..dim).for_each(|i| matrix[i * dim + i] = *v),
        Covariance::Diagonal(diag) => {
            if diag.len() != dim {
                return Err(Error::Validation(format!(
                    "diagonal has {} entries, expected {dim}",
                    diag.len()
                )));
            }
            diag.iter()
                .enumerate()
                .for_each(|(i, v)| matrix[i * dim + i] = *v);
        }
        Covariance::Full(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::Validation(format!("covariance must be {dim}x{dim}")));
            }
            for i in 0..dim {
                for j in 0..dim {
                    if (rows[i][j] - rows[j][i]).abs() > 1e-12 * (1.0 + rows[i][j].abs()) {
                        return Err(Error::Validation("covariance is not symmetric".into()));
                    }
                    matrix[i * dim + j] = rows[i][j];
                }
            }
        }
    }

    let mut lower = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let dot: f64 = (0..j)
                .map(|k| lower[i * dim + k] * lower[j * dim + k])
                .sum();
            let value = matrix[i * dim + j] - dot;
            if i == j {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::Validation(
                        "covariance is not positive-definite".into(),
                    ));
                }
                lower[i * dim + i] = value.sqrt();
            } else {
                lower[i * dim + j] = value / lower[j * dim + j];
            }
        }
    }
    Ok(lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blob_mixture_is_labelled_and_bounded() {
        let ps = generate(&GeneratorSpec::two_gaussians(5.0, 100, 7)).unwrap();
        assert_eq!(ps.len(), 200);
        assert_eq!(ps.dim(), 2);
        let gt = ps.ground_truth().unwrap();
        assert_eq!(gt.iter().filter(|l| **l == 0).count(), 100);
        assert_eq!(gt.iter().filter(|l| **l == 1).count(), 100);
        for (i, &label) in gt.iter().enumerate() {
            let mean = if label == 0 { [-5.0, 0.0] } else { [5.0, 0.0] };
            let p = ps.point(i);
            let dist = ((p[0] - mean[0]).powi(2) + (p[1] - mean[1]).powi(2)).sqrt();
            assert!(dist < 6.0, "point {i} at distance {dist}");
        }
    }

    #[test]
    fn uniform_interval_in_range() {
        let spec = GeneratorSpec::UniformInterval {
            low: -1.0,
            high: 1.0,
            count: 50,
            seed: 1,
        };
        let ps = generate(&spec).unwrap();
        assert_eq!(ps.len(), 50);
        assert_eq!(ps.dim(), 1);
        assert!(ps.coords().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = GeneratorSpec::two_gaussians(2.0, 50, 11);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        let bits = |p: &PointSet| p.coords().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = generate(&spec.clone().with_seed(12)).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let spec = GeneratorSpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: vec![0.0, 0.0],
                covariance: Covariance::Full(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
                count: 10,
            }],
            seed: 0,
        };
        assert!(matches!(generate(&spec), Err(Error::Validation(_))));
        let spec = GeneratorSpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: vec![0.0],
                covariance: Covariance::Isotropic(0.0),
                count: 10,
            }],
            seed: 0,
        };
        assert!(matches!(generate(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn full_covariance_matches_sample_statistics() {
        let spec = GeneratorSpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: vec![1.0, -2.0],
                covariance: Covariance::Full(vec![vec![4.0, 1.2], vec![1.2, 1.0]]),
                count: 20_000,
            }],
            seed: 3,
        };
        let ps = generate(&spec).unwrap();
        let n = ps.len() as f64;
        let mean: Vec<f64> = (0..2)
            .map(|c| (0..ps.len()).map(|i| ps.point(i)[c]).sum::<f64>() / n)
            .collect();
        let cov = |a: usize, b: usize| {
            (0..ps.len())
                .map(|i| (ps.point(i)[a] - mean[a]) * (ps.point(i)[b] - mean[b]))
                .sum::<f64>()
                / n
        };
        assert!((mean[0] - 1.0).abs() < 0.05 && (mean[1] + 2.0).abs() < 0.05);
        assert!((cov(0, 0) - 4.0).abs() < 0.15);
        assert!((cov(0, 1) - 1.2).abs() < 0.08);
        assert!((cov(1, 1) - 1.0).abs() < 0.05);
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{"kind":"gaussian-mixture","seed":7,"components":[
            {"mean":[-5,0],"covariance":{"isotropic":1.0},"count":3},
            {"mean":[5,0],"covariance":{"diagonal":[1,2]},"count":2}]}"#;
        let spec: GeneratorSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.seed(), 7);
        assert_eq!(generate(&spec).unwrap().len(), 5);
        let json = r#"{"kind":"uniform-interval","seed":1,"low":-1,"high":1,"count":4}"#;
        let spec: GeneratorSpec = serde_json::from_str(json).unwrap();
        assert_eq!(generate(&spec).unwrap().len(), 4);
    }
}
