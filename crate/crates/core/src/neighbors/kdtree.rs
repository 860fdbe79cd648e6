//! Exact kd-tree over a subset of a point set.
//!
//! Results match the brute-force scan exactly, including the order of equal
//! distances: candidates are ranked by `(squared distance, index)` and a
//! subtree is skipped only when its lower bound is strictly worse than the
//! current k-th candidate.

use std::collections::BinaryHeap;

use super::Neighbor;
use crate::dataset::{squared_euclidean, PointSet};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct KdTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl KdTree {
    pub(crate) fn build(points: &PointSet, ids: &[usize]) -> Self {
        let mut tree = KdTree {
            nodes: Vec::with_capacity(2 * ids.len() / LEAF_SIZE + 1),
            order: ids.to_vec(),
        };
        tree.build_node(points, 0, ids.len());
        tree
    }

    fn build_node(&mut self, points: &PointSet, start: usize, end: usize) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return slot;
        }

        let dim = points.dim();
        let slice = &self.order[start..end];
        let (mut axis, mut widest) = (0, f64::NEG_INFINITY);
        for a in 0..dim {
            let (lo, hi) = slice
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = points.point(i)[a];
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        if widest <= 0.0 {
            // all coordinates identical: nothing to split on
            return slot;
        }

        let mid = (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points.point(a)[axis]
                .total_cmp(&points.point(b)[axis])
                .then(a.cmp(&b))
        });
        let value = points.point(self.order[start + mid])[axis];
        let left = self.build_node(points, start, start + mid);
        let right = self.build_node(points, start + mid, end);
        self.nodes[slot] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        slot
    }

    pub(crate) fn knn(
        &self,
        points: &PointSet,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<Neighbor> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_node(points, 0, query, k, exclude, &mut heap);
        let mut out: Vec<Neighbor> = heap.into_iter().map(|c: Candidate| c.0).collect();
        out.sort_unstable_by(Neighbor::cmp_key);
        out
    }

    fn knn_node(
        &self,
        points: &PointSet,
        node: usize,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if Some(j) == exclude {
                        continue;
                    }
                    let cand = Candidate(Neighbor {
                        index: j,
                        distance_sq: squared_euclidean(query, points.point(j)),
                    });
                    if heap.len() < k {
                        heap.push(cand);
                    } else if heap.peek().is_some_and(|worst| cand < *worst) {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_node(points, near, query, k, exclude, heap);
                let bound = diff * diff;
                if heap.len() < k
                    || heap
                        .peek()
                        .is_some_and(|worst| bound <= worst.0.distance_sq)
                {
                    self.knn_node(points, far, query, k, exclude, heap);
                }
            }
        }
    }

    pub(crate) fn within_radius(
        &self,
        points: &PointSet,
        query: &[f64],
        radius: f64,
        exclude: Option<usize>,
    ) -> Vec<Neighbor> {
        let mut out = Vec::new();
        // loosened so that rounding of radius^2 never prunes a point with distance <= radius
        let bound = radius * radius * (1.0 + 1e-9);
        let mut stack = vec![0];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &j in &self.order[start..end] {
                        if Some(j) == exclude {
                            continue;
                        }
                        let nb = Neighbor {
                            index: j,
                            distance_sq: squared_euclidean(query, points.point(j)),
                        };
                        if nb.distance() <= radius {
                            out.push(nb);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = query[axis] - value;
                    let (near, far) = if diff < 0.0 {
                        (left, right)
                    } else {
                        (right, left)
                    };
                    stack.push(near);
                    if diff * diff <= bound {
                        stack.push(far);
                    }
                }
            }
        }
        out.sort_unstable_by(Neighbor::cmp_key);
        out
    }
}

/// Max-heap entry keyed on `(distance, index)`.
#[derive(Debug, Clone, Copy)]
struct Candidate(Neighbor);

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        Neighbor::cmp_key(&self.0, &other.0)
    }
}
