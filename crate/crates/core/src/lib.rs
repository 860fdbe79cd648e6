//! Border-Peeling clustering.
//!
//! Points are peeled off in layers: at each iteration the points with the
//! lowest density influence (a locally scaled Gaussian kernel summed over
//! reverse k-nearest neighbors) are classified as border points, linked to a
//! nearby inner point and removed. The points that survive form
//! well-separated cores; cores are grouped by reachability and every peeled
//! point inherits the label at the end of its association chain.
//!
//! ```
//! use border_peel::{cluster, generate, GeneratorSpec, PeelParams};
//!
//! let points = generate(&GeneratorSpec::two_gaussians(5.0, 200, 7)).unwrap();
//! let result = cluster(&points, &PeelParams::default(), None).unwrap();
//! assert_eq!(result.labels.n_clusters(), 2);
//! ```

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod export;
pub mod generate;
pub mod lemma;
pub mod metrics;
pub mod neighbors;
pub mod peeling;

pub use clustering::{
    cluster, cluster_with_state, confidence_ranking, default_min_cluster_size, merge_cores,
    propagate_labels, ClusteringResult, ConfidenceRanking, ReachabilityGraph,
};
pub use dataset::{load_csv, read_csv, ClusterLabels, PointSet, NOISE};
pub use error::{Error, Result};
pub use export::ResultDocument;
pub use generate::{generate, Covariance, GaussianComponent, GeneratorSpec};
pub use lemma::lemma1_expectation;
pub use metrics::{
    adjusted_mutual_information, adjusted_rand_index, score_run, ContingencyTable, ScoreReport,
};
pub use neighbors::{reverse_knn, Backend, Metric, NeighborIndex, ReverseNeighborMap};
pub use peeling::{
    estimate_lambda, run_peeling, PeelParams, PeelState, PeelingTrace, TerminationReason,
};
