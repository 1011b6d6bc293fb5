//! Latent-space embedding of a graph: biased walks, co-occurrence
//! neighborhoods, a distance-softmax likelihood, and the isotropic Gaussian
//! fitted to the result.

mod model;
mod train;
mod walk;

pub use model::{fit_gaussian, EmbeddingSet, LatentModel};
pub use train::{
    initial_embedding, objective, objective_gradient, optimize, optimize_neighborhoods,
    OptimizerMode, TrainParams, TrainedEmbedding,
};
pub use walk::{
    build_neighborhoods, next_step, sample_walks, transition_weights, NeighborhoodSet, WalkParams,
};
