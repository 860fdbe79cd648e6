//! Exact k-nearest and reverse k-nearest neighbor queries over the active
//! subset of a [`PointSet`].
//!
//! Neighbor lists are ordered by ascending distance with ties broken by
//! ascending point index. Both backends compute distances identically, so
//! their outputs agree bit for bit.

pub mod brute;
mod kdtree;

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::dataset::PointSet;
use crate::error::{Error, Result};
use kdtree::KdTree;

/// Above this dimension the kd-tree stops paying for itself.
pub const KD_TREE_MAX_DIM: usize = 20;

/// Distance used for neighbor ranking. Only Euclidean distance is backed by
/// the density-influence kernel; the enum is the hook for other metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// kd-tree up to [`KD_TREE_MAX_DIM`] dimensions, brute force above.
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance_sq: f64,
}

impl Neighbor {
    #[inline]
    pub fn distance(&self) -> f64 {
        self.distance_sq.sqrt()
    }

    pub(crate) fn cmp_key(a: &Neighbor, b: &Neighbor) -> Ordering {
        a.distance_sq
            .total_cmp(&b.distance_sq)
            .then(a.index.cmp(&b.index))
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Brute,
    Kd(KdTree),
}

/// Immutable neighbor index over a subset of the points.
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    points: &'a PointSet,
    ids: Vec<usize>,
    member: Vec<bool>,
    metric: Metric,
    engine: Engine,
}

impl<'a> NeighborIndex<'a> {
    /// Index over the points whose `active` flag is set. Needs at least two.
    pub fn build(points: &'a PointSet, active: &[bool], metric: Metric) -> Result<Self> {
        Self::build_with(points, active, metric, Backend::Auto)
    }

    pub fn build_with(
        points: &'a PointSet,
        active: &[bool],
        metric: Metric,
        backend: Backend,
    ) -> Result<Self> {
        if active.len() != points.len() {
            return Err(Error::Validation(format!(
                "active mask has {} entries for {} points",
                active.len(),
                points.len()
            )));
        }
        let ids: Vec<usize> = (0..points.len()).filter(|&i| active[i]).collect();
        if ids.len() < 2 {
            return Err(Error::Degenerate(format!(
                "neighbor index needs at least 2 active points, got {}",
                ids.len()
            )));
        }
        Ok(Self::over_ids(points, ids, metric, backend))
    }

    /// Index over an explicit id list; may hold a single point. Used for
    /// searches among peeled or non-border points, which are queried from
    /// outside the indexed set.
    pub(crate) fn over_ids(
        points: &'a PointSet,
        ids: Vec<usize>,
        metric: Metric,
        backend: Backend,
    ) -> Self {
        let mut member = vec![false; points.len()];
        ids.iter().for_each(|&i| member[i] = true);
        let use_tree = match backend {
            Backend::BruteForce => false,
            Backend::KdTree => true,
            Backend::Auto => points.dim() <= KD_TREE_MAX_DIM,
        };
        let engine = if use_tree && ids.len() > 1 {
            Engine::Kd(KdTree::build(points, &ids))
        } else {
            Engine::Brute
        };
        Self {
            points,
            ids,
            member,
            metric,
            engine,
        }
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Indexed point ids, ascending.
    pub fn active_ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.member.get(i).copied().unwrap_or(false)
    }

    /// The `min(k, |active| - 1)` nearest active neighbors of active point `i`.
    pub fn knn(&self, i: usize, k: usize) -> Result<Vec<Neighbor>> {
        if !self.contains(i) {
            return Err(Error::Query(format!("point {i} is not active")));
        }
        if k == 0 {
            return Err(Error::Query("k must be at least 1".into()));
        }
        Ok(self.knn_point(self.points.point(i), k, Some(i)))
    }

    /// Nearest indexed points to an arbitrary query location.
    pub fn knn_point(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        match &self.engine {
            Engine::Brute => brute::knn(self.points, &self.ids, query, k, exclude),
            Engine::Kd(tree) => tree.knn(self.points, query, k, exclude),
        }
    }

    /// Indexed points with distance `<= radius` from `query`.
    pub fn within_radius(
        &self,
        query: &[f64],
        radius: f64,
        exclude: Option<usize>,
    ) -> Vec<Neighbor> {
        match &self.engine {
            Engine::Brute => brute::within_radius(self.points, &self.ids, query, radius, exclude),
            Engine::Kd(tree) => tree.within_radius(self.points, query, radius, exclude),
        }
    }

    /// kNN lists for every active point, aligned with [`Self::active_ids`].
    /// Computed in parallel; the result does not depend on thread count.
    pub fn knn_all(&self, k: usize) -> Vec<Vec<Neighbor>> {
        self.ids
            .par_iter()
            .map(|&i| self.knn_point(self.points.point(i), k, Some(i)))
            .collect()
    }
}

/// Forward kNN lists and their inversion over the active set.
#[derive(Debug, Clone)]
pub struct ReverseNeighborMap {
    k: usize,
    forward: Vec<Vec<Neighbor>>,
    reverse: Vec<Vec<usize>>,
}

impl ReverseNeighborMap {
    /// Effective neighbor count, `min(k, |active| - 1)`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Active points that count `i` among their k nearest, ascending.
    pub fn reverse(&self, i: usize) -> &[usize] {
        &self.reverse[i]
    }

    /// The k nearest neighbors of `i` (empty if `i` is inactive).
    pub fn forward(&self, i: usize) -> &[Neighbor] {
        &self.forward[i]
    }

    pub fn total_reverse(&self) -> usize {
        self.reverse.iter().map(Vec::len).sum()
    }
}

/// Inverts the kNN relation over the active points of `index`.
pub fn reverse_knn(index: &NeighborIndex<'_>, k: usize) -> Result<ReverseNeighborMap> {
    if k == 0 {
        return Err(Error::Query("k must be at least 1".into()));
    }
    let n = index.points().len();
    let lists = index.knn_all(k);
    let mut forward = vec![Vec::new(); n];
    let mut reverse = vec![Vec::new(); n];
    for (&j, list) in index.active_ids().iter().zip(lists) {
        for nb in &list {
            reverse[nb.index].push(j);
        }
        forward[j] = list;
    }
    // ids are visited in ascending order, so each reverse list is already sorted
    Ok(ReverseNeighborMap {
        k: k.min(index.len() - 1),
        forward,
        reverse,
    })
}
