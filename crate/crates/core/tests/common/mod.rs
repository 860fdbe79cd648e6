//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use border_peel::neighbors::Neighbor;
use border_peel::{
    generate, ClusteringResult, Covariance, GaussianComponent, GeneratorSpec, PeelParams,
    PeelState, PointSet, NOISE,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random point set; with `lattice` the coordinates are small integers, so
/// equal distances and duplicate points are common.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, lattice: bool) -> PointSet {
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for _ in 0..dim {
            coords.push(if lattice {
                rng.random_range(-3i32..=3) as f64
            } else {
                rng.random_range(-10.0..10.0)
            });
        }
    }
    // a few exact duplicates of earlier rows
    for _ in 0..n / 10 {
        let (src, dst) = (rng.random_range(0..n), rng.random_range(0..n));
        for c in 0..dim {
            coords[dst * dim + c] = coords[src * dim + c];
        }
    }
    PointSet::new(coords, dim, None).unwrap()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Full sort of every candidate by `(distance, index)`.
pub fn oracle_knn(
    points: &PointSet,
    ids: &[usize],
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = ids
        .iter()
        .filter(|&&j| Some(j) != exclude)
        .map(|&j| Neighbor {
            index: j,
            distance_sq: sq(points.point(j), query),
        })
        .collect();
    all.sort_by(|a, b| {
        a.distance_sq
            .total_cmp(&b.distance_sq)
            .then(a.index.cmp(&b.index))
    });
    all.truncate(k);
    all
}

pub fn oracle_radius(
    points: &PointSet,
    ids: &[usize],
    query: &[f64],
    r: f64,
    exclude: Option<usize>,
) -> Vec<usize> {
    let mut out: Vec<usize> = ids
        .iter()
        .copied()
        .filter(|&j| Some(j) != exclude && sq(points.point(j), query).sqrt() <= r)
        .collect();
    out.sort_unstable();
    out
}

/// Noise labels become fresh singleton classes.
fn canonical(labels: &[i64]) -> Vec<i64> {
    let mut next = labels.iter().copied().max().unwrap_or(0).max(0) + 1;
    labels
        .iter()
        .map(|&l| {
            if l < 0 {
                next += 1;
                next
            } else {
                l
            }
        })
        .collect()
}

/// ARI from the 2x2 pair-agreement table, enumerating every pair.
pub fn pair_count_ari(a: &[i64], b: &[i64]) -> f64 {
    let (a, b) = (canonical(a), canonical(b));
    let (mut both, mut only_a, mut only_b, mut neither) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1,
                (true, false) => only_a += 1,
                (false, true) => only_b += 1,
                (false, false) => neither += 1,
            }
        }
    }
    let num = 2 * (neither * both - only_a * only_b);
    let den = (neither + only_a) * (only_a + both) + (neither + only_b) * (only_b + both);
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn marginals(labels: &[i64]) -> HashMap<i64, usize> {
    let mut m = HashMap::new();
    for &l in labels {
        *m.entry(l).or_insert(0) += 1;
    }
    m
}

/// AMI (max normaliser) with the expected MI summed over explicit
/// hypergeometric probabilities.
pub fn oracle_ami(a: &[i64], b: &[i64]) -> f64 {
    let (a, b) = (canonical(a), canonical(b));
    let n = a.len();
    let nf = n as f64;
    let ma = marginals(&a);
    let mb = marginals(&b);
    let mut joint: HashMap<(i64, i64), usize> = HashMap::new();
    for (x, y) in a.iter().zip(&b) {
        *joint.entry((*x, *y)).or_insert(0) += 1;
    }
    let h = |m: &HashMap<i64, usize>| -> f64 {
        m.values()
            .map(|&c| c as f64 / nf)
            .map(|p| -p * p.ln())
            .sum()
    };
    let (ha, hb) = (h(&ma), h(&mb));
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let c = c as f64;
            c / nf * (nf * c / (ma[&x] as f64 * mb[&y] as f64)).ln()
        })
        .sum();
    let mut emi = 0.0;
    for &ai in ma.values() {
        for &bj in mb.values() {
            for nij in 1..=ai.min(bj) {
                if n + nij < ai + bj {
                    continue;
                }
                let p = binom(ai, nij) * binom(n - ai, bj - nij) / binom(n, bj);
                let x = nij as f64;
                emi += p * x / nf * (nf * x / (ai as f64 * bj as f64)).ln();
            }
        }
    }
    (mi - emi) / (ha.max(hb) - emi)
}

/// Random Gaussian mixture for invariant runs.
pub fn random_mixture(seed: u64) -> PointSet {
    let mut r = rng(seed ^ 0x5eed);
    let dim = *[1usize, 2, 2, 3].choose(&mut r).unwrap();
    let n_comp = r.random_range(1..=4);
    let components = (0..n_comp)
        .map(|_| GaussianComponent {
            mean: (0..dim).map(|_| r.random_range(-8.0..8.0)).collect(),
            covariance: Covariance::Isotropic(r.random_range(0.3..2.0)),
            count: r.random_range(20..90),
        })
        .collect();
    generate(&GeneratorSpec::GaussianMixture { components, seed }).unwrap()
}

pub fn random_params(seed: u64) -> PeelParams {
    let mut r = rng(seed ^ 0xa11ce);
    PeelParams {
        k: r.random_range(4..=15),
        peel_fraction: r.random_range(0.05..0.2),
        c: r.random_range(1.5..4.0),
        ..PeelParams::default()
    }
}

/// Structural checks on a finished run; returns a description of the first
/// violation.
pub fn check_structure(
    points: &PointSet,
    result: &ClusteringResult,
    state: &PeelState,
) -> Result<(), String> {
    let n = points.len();
    let lambda = state.lambda;

    // nested active sets: each iteration removes exactly its peeled layer
    let mut active = vec![true; n];
    for rec in &result.trace.iterations {
        let before = active.iter().filter(|a| **a).count();
        if before != rec.active_before {
            return Err(format!(
                "iteration {}: active_before {} != {before}",
                rec.iteration, rec.active_before
            ));
        }
        if rec.peeled.is_empty() {
            return Err(format!("iteration {} peeled nothing", rec.iteration));
        }
        for &p in &rec.peeled {
            if !active[p] {
                return Err(format!("point {p} peeled twice"));
            }
            if state.peeled_at[p] != Some(rec.iteration) {
                return Err(format!("point {p} peeled_at disagrees with trace"));
            }
            active[p] = false;
        }
    }
    if active != state.active {
        return Err("final active set disagrees with trace".into());
    }
    let mut cores: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    cores.sort_unstable();
    if cores != result.core_ids {
        return Err("core ids disagree with the final active set".into());
    }

    // thresholds capped by lambda
    for i in 0..n {
        if !(state.thresholds[i] <= lambda && state.core_thresholds[i] <= lambda) {
            return Err(format!("threshold of {i} exceeds lambda"));
        }
        if state.thresholds[i].is_nan() || state.thresholds[i] < 0.0 {
            return Err(format!("threshold of {i} is negative"));
        }
    }

    // association chains: point to a later-peeled or core point within lambda
    for i in 0..n {
        match (state.peeled_at[i], state.rho[i]) {
            (None, Some(_)) => return Err(format!("core point {i} has an association")),
            (Some(t), Some(j)) => {
                if let Some(tj) = state.peeled_at[j] {
                    if tj <= t {
                        return Err(format!("{i} (t={t}) links to {j} peeled at {tj}"));
                    }
                }
                if points.distance(i, j) > lambda {
                    return Err(format!("association {i} -> {j} longer than lambda"));
                }
            }
            _ => {}
        }
    }
    for i in 0..n {
        let mut cur = i;
        let mut steps = 0;
        while let Some(next) = state.rho[cur] {
            cur = next;
            steps += 1;
            if steps > n {
                return Err(format!("cycle through {i}"));
            }
        }
    }

    for (i, &b) in result.confidence.iter().enumerate() {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(format!("initial density influence of {i} is {b}"));
        }
    }
    if result.labels.labels().iter().any(|&l| l < NOISE) {
        return Err("label below noise".into());
    }
    Ok(())
}
