//! Semantic similarity and cluster structure.

mod cosine;
mod embed;
mod kmeans;
mod silhouette;
mod tfidf;

pub use cosine::{centroid_cosines, mean_pairwise_cosine, normalize};
pub use embed::{
    decode_response, embed, EmbedderKind, EmbeddingProviderSpec, Embeddings, MAX_BATCH,
};
pub use kmeans::{kmeans, ClusterConfig, KMeansResult};
pub use silhouette::{silhouette, silhouette_samples};
pub use tfidf::{tfidf_fit_transform, SparseVector, TfidfModel};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
