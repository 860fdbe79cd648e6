use super::Neighbor;
use crate::dataset::{squared_euclidean, PointSet};

/// Exhaustive k-nearest search over `ids`, ordered by `(distance, index)`.
pub fn knn(
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
            distance_sq: squared_euclidean(query, points.point(j)),
        })
        .collect();
    all.sort_unstable_by(Neighbor::cmp_key);
    all.truncate(k);
    all
}

/// Every member of `ids` within `radius` of `query`, ordered by `(distance, index)`.
pub fn within_radius(
    points: &PointSet,
    ids: &[usize],
    query: &[f64],
    radius: f64,
    exclude: Option<usize>,
) -> Vec<Neighbor> {
    let mut hits: Vec<Neighbor> = ids
        .iter()
        .filter(|&&j| Some(j) != exclude)
        .map(|&j| Neighbor {
            index: j,
            distance_sq: squared_euclidean(query, points.point(j)),
        })
        .filter(|nb| nb.distance() <= radius)
        .collect();
    hits.sort_unstable_by(Neighbor::cmp_key);
    hits
}
