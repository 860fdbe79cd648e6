//! Clustering of the core points left after peeling, and propagation of the
//! core labels back along association chains.

use serde::{Deserialize, Serialize};

use crate::dataset::{ClusterLabels, PointSet, NOISE};
use crate::error::{Error, Result};
use crate::neighbors::{Backend, Metric, NeighborIndex};
use crate::peeling::{run_peeling, PeelParams, PeelState, PeelingTrace};

/// Minimum cluster size used when none is given: 10 below 1000 points, 30
/// from 1000 points on.
pub fn default_min_cluster_size(n: usize) -> usize {
    if n < 1000 {
        10
    } else {
        30
    }
}

#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
        true
    }
}

/// Core points joined whenever `d(x_i, x_j) <= max(l_i, l_j)`, together with
/// the connected components of that relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityGraph {
    nodes: Vec<usize>,
    edges: Vec<(usize, usize)>,
    components: Vec<usize>,
    n_components: usize,
    slot: Vec<Option<usize>>,
}

impl ReachabilityGraph {
    /// Core point ids, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Component of a core point. Components are numbered by their smallest
    /// member.
    pub fn component_of(&self, point: usize) -> Option<usize> {
        self.slot
            .get(point)
            .copied()
            .flatten()
            .map(|s| self.components[s])
    }

    /// Members of each component, ascending.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_components];
        for (&p, &c) in self.nodes.iter().zip(&self.components) {
            groups[c].push(p);
        }
        groups
    }
}

/// Builds the reachability graph over `cores` using per-point thresholds
/// `thresholds` (indexed by point id). Edges come from one radius query per
/// core, which covers `d <= max(l_i, l_j)` from whichever side has the larger
/// threshold.
pub fn merge_cores(
    points: &PointSet,
    cores: &[usize],
    thresholds: &[f64],
) -> Result<ReachabilityGraph> {
    merge_cores_with(points, cores, thresholds, Backend::Auto)
}

pub fn merge_cores_with(
    points: &PointSet,
    cores: &[usize],
    thresholds: &[f64],
    backend: Backend,
) -> Result<ReachabilityGraph> {
    if cores.is_empty() {
        return Err(Error::Validation("no core points to merge".into()));
    }
    let mut nodes = cores.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let mut slot = vec![None; points.len()];
    for (s, &p) in nodes.iter().enumerate() {
        slot[p] = Some(s);
    }

    let index = NeighborIndex::over_ids(points, nodes.clone(), Metric::Euclidean, backend);
    let mut edges: Vec<(usize, usize)> = nodes
        .iter()
        .flat_map(|&i| {
            index
                .within_radius(points.point(i), thresholds[i], Some(i))
                .into_iter()
                .map(move |nb| (i.min(nb.index), i.max(nb.index)))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();

    let mut sets = DisjointSet::new(nodes.len());
    for &(a, b) in &edges {
        sets.union(slot[a].unwrap(), slot[b].unwrap());
    }
    let mut root_label = vec![usize::MAX; nodes.len()];
    let mut components = Vec::with_capacity(nodes.len());
    let mut n_components = 0;
    for s in 0..nodes.len() {
        let root = sets.find(s);
        if root_label[root] == usize::MAX {
            root_label[root] = n_components;
            n_components += 1;
        }
        components.push(root_label[root]);
    }

    Ok(ReachabilityGraph {
        nodes,
        edges,
        components,
        n_components,
        slot,
    })
}

/// Labels every point by following its association chain to a core point.
/// Chains that end at an unassigned peeled point yield noise, and clusters
/// with fewer than `min_cluster_size` members become noise.
pub fn propagate_labels(
    graph: &ReachabilityGraph,
    state: &PeelState,
    min_cluster_size: usize,
) -> Result<ClusterLabels> {
    let n = state.len();
    // resolved[i]: None = not yet visited, Some(None) = noise, Some(Some(c)) = component c
    let mut resolved: Vec<Option<Option<usize>>> = vec![None; n];
    let mut path = Vec::new();
    for start in 0..n {
        if resolved[start].is_some() {
            continue;
        }
        path.clear();
        let mut cur = start;
        let outcome = loop {
            if let Some(done) = resolved[cur] {
                break done;
            }
            if state.peeled_at[cur].is_none() {
                let c = graph.component_of(cur).ok_or_else(|| {
                    Error::Invariant(format!(
                        "unpeeled point {cur} is missing from the core graph"
                    ))
                })?;
                resolved[cur] = Some(Some(c));
                break Some(c);
            }
            path.push(cur);
            if path.len() > n {
                return Err(Error::Invariant(format!(
                    "association cycle through point {start}"
                )));
            }
            match state.rho[cur] {
                Some(next) => cur = next,
                None => break None,
            }
        };
        for &p in &path {
            resolved[p] = Some(outcome);
        }
    }

    let mut sizes = vec![0usize; graph.n_components()];
    for c in resolved.iter().flatten().flatten() {
        sizes[*c] += 1;
    }
    let raw: Vec<i64> = resolved
        .iter()
        .map(|r| match r {
            Some(Some(c)) if sizes[*c] >= min_cluster_size => *c as i64,
            _ => NOISE,
        })
        .collect();
    Ok(ClusterLabels::from_assignments(&raw))
}

/// Output of a full clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: ClusterLabels,
    /// Points that survived peeling.
    pub core_ids: Vec<usize>,
    /// Initial density influence of each point; higher means more central.
    pub confidence: Vec<f64>,
    pub trace: PeelingTrace,
    pub min_cluster_size: usize,
}

/// Runs peeling, merges the core points and propagates labels.
pub fn cluster(
    points: &PointSet,
    params: &PeelParams,
    min_cluster_size: Option<usize>,
) -> Result<ClusteringResult> {
    let (result, _) = cluster_with_state(points, params, min_cluster_size)?;
    Ok(result)
}

/// Like [`cluster`], also returning the final peeling state.
pub fn cluster_with_state(
    points: &PointSet,
    params: &PeelParams,
    min_cluster_size: Option<usize>,
) -> Result<(ClusteringResult, PeelState)> {
    let min_cluster_size =
        min_cluster_size.unwrap_or_else(|| default_min_cluster_size(points.len()));
    if min_cluster_size == 0 {
        return Err(Error::Validation(
            "minimum cluster size must be at least 1".into(),
        ));
    }
    let (state, trace) = run_peeling(points, params)?;
    let core_ids = state.active_ids();
    let graph = merge_cores_with(points, &core_ids, &state.core_thresholds, params.backend)?;
    let labels = propagate_labels(&graph, &state, min_cluster_size)?;
    let result = ClusteringResult {
        labels,
        core_ids,
        confidence: state.initial_b.clone(),
        trace,
        min_cluster_size,
    };
    Ok((result, state))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceRanking {
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
}

/// The `top_m` most and least confident members of `cluster`. Ties are
/// ordered by point id.
pub fn confidence_ranking(
    labels: &ClusterLabels,
    confidence: &[f64],
    cluster: i64,
    top_m: usize,
) -> Result<ConfidenceRanking> {
    if cluster < 0 || cluster as usize >= labels.n_clusters() {
        return Err(Error::Query(format!(
            "unknown cluster {cluster}; result has {} clusters",
            labels.n_clusters()
        )));
    }
    if confidence.len() != labels.len() {
        return Err(Error::Validation(
            "confidence and labels differ in length".into(),
        ));
    }
    let mut members = labels.members(cluster);
    members.sort_by(|&a, &b| confidence[b].total_cmp(&confidence[a]).then(a.cmp(&b)));
    let top = members.iter().take(top_m).copied().collect();
    members.sort_by(|&a, &b| confidence[a].total_cmp(&confidence[b]).then(a.cmp(&b)));
    let bottom = members.iter().take(top_m).copied().collect();
    Ok(ConfidenceRanking { top, bottom })
}

impl ClusteringResult {
    pub fn rank(&self, cluster: i64, top_m: usize) -> Result<ConfidenceRanking> {
        confidence_ranking(&self.labels, &self.confidence, cluster, top_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_by_max_threshold() {
        let ps = PointSet::from_scalars(&[0.0, 1.0, 10.0]).unwrap();
        let g = merge_cores(&ps, &[0, 1, 2], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.partition(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn merge_is_transitive() {
        let ps = PointSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let g = merge_cores(&ps, &[0, 1, 2], &[1.5, 1.5, 1.5]).unwrap();
        assert_eq!(g.n_components(), 1);
        assert!(!g.edges().contains(&(0, 2)));
    }

    #[test]
    fn merge_uses_larger_threshold() {
        let ps = PointSet::from_scalars(&[0.0, 3.0]).unwrap();
        let g = merge_cores(&ps, &[0, 1], &[0.5, 3.0]).unwrap();
        assert_eq!(g.n_components(), 1);
    }

    #[test]
    fn single_core_and_empty_cores() {
        let ps = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let g = merge_cores(&ps, &[1], &[0.1, 0.1]).unwrap();
        assert_eq!(g.n_components(), 1);
        assert_eq!(g.component_of(1), Some(0));
        assert_eq!(g.component_of(0), None);
        assert!(merge_cores(&ps, &[], &[0.1, 0.1]).is_err());
    }

    fn chain_state() -> (PointSet, PeelState) {
        // 0 -> 1 -> 2 (core); 3 unassigned; 4 core far away
        let ps = PointSet::from_scalars(&[0.0, 1.0, 2.0, 50.0, 100.0]).unwrap();
        let mut state = PeelState::new(5, 1.0);
        for (i, t, rho) in [(0, 1, Some(1)), (1, 2, Some(2)), (3, 1, None)] {
            state.active[i] = false;
            state.peeled_at[i] = Some(t);
            state.rho[i] = rho;
        }
        (ps, state)
    }

    #[test]
    fn labels_follow_association_chains() {
        let (ps, state) = chain_state();
        let g = merge_cores(&ps, &state.active_ids(), &state.thresholds).unwrap();
        let labels = propagate_labels(&g, &state, 1).unwrap();
        assert_eq!(labels.labels(), &[0, 0, 0, NOISE, 1]);
        assert_eq!(labels.n_clusters(), 2);
    }

    #[test]
    fn small_clusters_become_noise() {
        let (ps, state) = chain_state();
        let g = merge_cores(&ps, &state.active_ids(), &state.thresholds).unwrap();
        let labels = propagate_labels(&g, &state, 2).unwrap();
        assert_eq!(labels.labels(), &[0, 0, 0, NOISE, NOISE]);
        let labels = propagate_labels(&g, &state, 10).unwrap();
        assert_eq!(labels.n_clusters(), 0);
        assert_eq!(labels.n_noise(), 5);
    }

    #[test]
    fn cycle_is_reported() {
        let (ps, mut state) = chain_state();
        state.active[2] = false;
        state.peeled_at[2] = Some(3);
        state.rho[2] = Some(0);
        let g = merge_cores(&ps, &state.active_ids(), &state.thresholds).unwrap();
        assert!(matches!(
            propagate_labels(&g, &state, 1),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn ranking_orders_and_clamps() {
        let labels = ClusterLabels::from_assignments(&[0, 0, 0, 1]);
        let conf = [0.1, 0.9, 0.5, 0.3];
        let r = confidence_ranking(&labels, &conf, 0, 1).unwrap();
        assert_eq!((r.top, r.bottom), (vec![1], vec![0]));
        let r = confidence_ranking(&labels, &conf, 0, 10).unwrap();
        assert_eq!(r.top, vec![1, 2, 0]);
        assert_eq!(r.bottom, vec![0, 2, 1]);
        let r = confidence_ranking(&labels, &conf, 0, 0).unwrap();
        assert!(r.top.is_empty() && r.bottom.is_empty());
    }

    #[test]
    fn ranking_ties_and_unknown_cluster() {
        let labels = ClusterLabels::from_assignments(&[0, 0, 0]);
        let conf = [0.5, 0.5, 0.2];
        let r = confidence_ranking(&labels, &conf, 0, 2).unwrap();
        assert_eq!(r.top, vec![0, 1]);
        assert_eq!(r.bottom, vec![2, 0]);
        assert!(matches!(
            confidence_ranking(&labels, &conf, 99, 1),
            Err(Error::Query(_))
        ));
        assert!(matches!(
            confidence_ranking(&labels, &conf, -1, 1),
            Err(Error::Query(_))
        ));
    }

    #[test]
    fn min_cluster_size_defaults() {
        assert_eq!(default_min_cluster_size(999), 10);
        assert_eq!(default_min_cluster_size(1000), 30);
    }
}
