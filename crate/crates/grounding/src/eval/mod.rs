//! The evaluation battery: Spearman similarity/relatedness scoring,
//! k-means + purity categorization, per-relation cosine profiling with
//! per-concept normalization, and nearest-neighbor space diffing.

pub mod bless;
pub mod clustering;
pub mod neighbors;
pub mod report;
pub mod similarity;

pub use bless::{bless_profile, BlessScoreMatrix, ConceptScores, DistributionSummary};
pub use clustering::{categorize, kmeans, kmeans_runs, purity, CategorizationResult, KmeansResult, KmeansRun};
pub use neighbors::{neighbor_diff, top_k_neighbors, NeighborDiff};
pub use similarity::{average_ranks, cosine, evaluate_similarity, spearman_rho, SimilarityResult};
