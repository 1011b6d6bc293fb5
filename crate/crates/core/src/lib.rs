//! Two competing influences spreading over a social graph whose users are
//! embedded in a latent space, with information overload.
//!
//! The pipeline is: load or generate a graph, embed it with biased random
//! walks, fit an isotropic Gaussian to the embedding, add latent links
//! between users closer than the influence range, then either simulate the
//! competition or solve its mean-field trajectory.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod harness;
pub mod latent;
pub mod sim;
pub mod special;
pub mod trajectory;

pub use error::{Error, Result};
pub use graph::Graph;
pub use trajectory::{Trajectory, TrajectoryPoint};
