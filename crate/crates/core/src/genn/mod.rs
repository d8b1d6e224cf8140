//! Graph similarity network used as a learned A* heuristic.

pub mod dynamic;
pub mod heuristic;
pub mod model;
pub mod network;

pub use dynamic::{
    build_cache, exact_dynamic_update, masked_similarity, predict_similarity, EmbeddingCache, EmbeddingStrategy,
    LayerCache,
};
pub use heuristic::GennHeuristic;
pub use model::{FeatureConfig, GennModel};
pub use network::{
    attention_pool, clamp_similarity, gcn_forward, ged_to_similarity, init_features, normalized_adjacency,
    ntn_score, similarity_to_h,
};
