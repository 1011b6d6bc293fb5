//! Softmax-over-distances objective and its gradient ascent.
//!
//! For node `i` with neighborhood counts `c_ij` and `S_i = Σ_j c_ij`:
//!
//! ```text
//! O = −Σ_i [ Σ_j c_ij·l(i,j) + S_i·ln Σ_w exp(−l(i,w)) ],   l(i,j) = ‖v_i − v_j‖²
//! ```
//!
//! The inner sum over `w` runs over every node, `i` included. Everything is
//! evaluated exactly (full softmax), which costs `O(n²·d)` per pass.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{sq_dist, EmbeddingSet};
use super::walk::{build_neighborhoods, sample_walks, NeighborhoodSet, WalkParams};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerMode {
    /// One exact gradient step per epoch with step-halving, so the objective
    /// never decreases.
    #[default]
    FullBatch,
    /// One pass over shuffled center nodes per epoch, updating after each.
    Stochastic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub mode: OptimizerMode,
    pub rng_seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            dim: 128,
            epochs: 50,
            learning_rate: 0.05,
            mode: OptimizerMode::FullBatch,
            rng_seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::param("embedding dimension must be at least 1"));
        }
        if self.epochs < 1 {
            return Err(Error::param("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Result of [`optimize`]: the embedding and the objective after each epoch
/// (index 0 is the initial value).
#[derive(Debug, Clone)]
pub struct TrainedEmbedding {
    pub embeddings: EmbeddingSet,
    pub objective_history: Vec<f64>,
}

fn check_consistent(emb: &EmbeddingSet, nbhd: &NeighborhoodSet) -> Result<()> {
    if emb.node_count() != nbhd.node_count() {
        return Err(Error::param(format!(
            "embedding has {} nodes but neighborhoods cover {}",
            emb.node_count(),
            nbhd.node_count()
        )));
    }
    Ok(())
}

/// Per-node log partition `ln Σ_w exp(−l(i,w))`. Always ≥ 0 since `w = i`
/// contributes `exp(0)`.
fn log_partitions(emb: &EmbeddingSet) -> Vec<f64> {
    let n = emb.node_count();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let vi = emb.vector(i);
            let z: f64 = (0..n).map(|w| (-sq_dist(vi, emb.vector(w))).exp()).sum();
            z.ln()
        })
        .collect()
}

fn objective_with(emb: &EmbeddingSet, nbhd: &NeighborhoodSet, log_z: &[f64]) -> f64 {
    let per_node: f64 = (0..emb.node_count())
        .into_par_iter()
        .map(|i| {
            let attract: f64 = nbhd
                .of(i)
                .iter()
                .map(|&(j, c)| c as f64 * emb.sq_dist(i, j))
                .sum();
            attract + nbhd.size(i) as f64 * log_z[i]
        })
        .sum();
    -per_node
}

pub fn objective(emb: &EmbeddingSet, nbhd: &NeighborhoodSet) -> Result<f64> {
    check_consistent(emb, nbhd)?;
    Ok(objective_with(emb, nbhd, &log_partitions(emb)))
}

/// Objective value and its exact gradient with respect to every coordinate.
pub fn objective_gradient(emb: &EmbeddingSet, nbhd: &NeighborhoodSet) -> Result<(f64, Vec<f64>)> {
    check_consistent(emb, nbhd)?;
    let n = emb.node_count();
    let d = emb.dim();
    let log_z = log_partitions(emb);
    let value = objective_with(emb, nbhd, &log_z);

    // S_i / Z_i weights the softmax terms from both ends of a pair.
    let weight: Vec<f64> = (0..n)
        .map(|i| nbhd.size(i) as f64 * (-log_z[i]).exp())
        .collect();
    let mut incoming: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, c) in nbhd.of(i) {
            incoming[j].push((i, c));
        }
    }

    let grad: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|k| {
            let vk = emb.vector(k);
            let mut g = vec![0.0; d];
            for w in 0..n {
                if w == k {
                    continue;
                }
                let vw = emb.vector(w);
                let coef = 2.0 * (weight[k] + weight[w]) * (-sq_dist(vk, vw)).exp();
                for ((gx, a), b) in g.iter_mut().zip(vk).zip(vw) {
                    *gx += coef * (a - b);
                }
            }
            for &(j, c) in nbhd.of(k).iter().chain(&incoming[k]) {
                let vj = emb.vector(j);
                let coef = -2.0 * c as f64;
                for ((gx, a), b) in g.iter_mut().zip(vk).zip(vj) {
                    *gx += coef * (a - b);
                }
            }
            g
        })
        .collect();
    Ok((value, grad))
}

/// Gradient of the single center term of node `i`, applied in place with
/// step `scale`.
fn stochastic_step(data: &mut [f64], dim: usize, nbhd: &NeighborhoodSet, i: usize, scale: f64) {
    let n = data.len() / dim;
    let vi: Vec<f64> = data[i * dim..(i + 1) * dim].to_vec();
    let size = nbhd.size(i) as f64;
    if size == 0.0 {
        return;
    }
    let mut e = vec![0.0; n];
    let mut z = 0.0;
    for (w, ew) in e.iter_mut().enumerate() {
        *ew = (-sq_dist(&vi, &data[w * dim..(w + 1) * dim])).exp();
        z += *ew;
    }
    // coefficient on (v_i − v_w) for w's gradient; v_i's gradient is minus
    // the sum of these.
    let mut coef: Vec<f64> = e.iter().map(|&ew| -2.0 * size * ew / z).collect();
    for &(j, c) in nbhd.of(i) {
        coef[j] += 2.0 * c as f64;
    }
    coef[i] = 0.0;
    let mut gi = vec![0.0; dim];
    for (w, &cw) in coef.iter().enumerate() {
        if cw == 0.0 {
            continue;
        }
        let vw = &mut data[w * dim..(w + 1) * dim];
        for ((x, a), gx) in vw.iter_mut().zip(&vi).zip(gi.iter_mut()) {
            let delta = cw * (a - *x);
            *gx -= delta;
            *x += scale * delta;
        }
    }
    for (x, gx) in data[i * dim..(i + 1) * dim].iter_mut().zip(&gi) {
        *x += scale * gx;
    }
}

/// Draws the starting embedding: i.i.d. uniform on `[−0.5/d, 0.5/d]`.
pub fn initial_embedding(n: usize, dim: usize, rng_seed: u64) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let half = 0.5 / dim as f64;
    let data = (0..n * dim)
        .map(|_| rng.random_range(-half..=half))
        .collect();
    EmbeddingSet::from_raw(dim, data)
}

/// Maximum number of step halvings tried before a full-batch epoch gives up
/// and keeps the current point.
const MAX_HALVINGS: usize = 40;

/// Gradient ascent on the objective for a fixed neighborhood set.
pub fn optimize_neighborhoods(
    nbhd: &NeighborhoodSet,
    train: &TrainParams,
) -> Result<TrainedEmbedding> {
    train.validate()?;
    let n = nbhd.node_count();
    let mut emb = initial_embedding(n, train.dim, train.rng_seed);
    // Steps are scaled by the mean neighborhood size so that the learning
    // rate does not depend on how many walks were sampled.
    let mean_size = (nbhd.total_size() as f64 / n.max(1) as f64).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(train.rng_seed);
    rng.set_stream(1);

    let mut history = vec![objective(&emb, nbhd)?];
    let mut lr = train.learning_rate;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=train.epochs {
        match train.mode {
            OptimizerMode::FullBatch => {
                let (current, grad) = objective_gradient(&emb, nbhd)?;
                if !current.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                let mut accepted = None;
                for _ in 0..MAX_HALVINGS {
                    let step = lr / mean_size;
                    let data = emb
                        .as_slice()
                        .iter()
                        .zip(&grad)
                        .map(|(x, g)| x + step * g)
                        .collect();
                    let candidate = EmbeddingSet::from_raw(train.dim, data);
                    let value = objective(&candidate, nbhd)?;
                    if value.is_finite() && value >= current {
                        accepted = Some((candidate, value));
                        break;
                    }
                    lr *= 0.5;
                }
                match accepted {
                    Some((candidate, value)) => {
                        emb = candidate;
                        history.push(value);
                    }
                    None => history.push(current),
                }
            }
            OptimizerMode::Stochastic => {
                order.shuffle(&mut rng);
                let scale = lr / mean_size;
                for &i in &order {
                    stochastic_step(emb.as_mut_slice(), train.dim, nbhd, i, scale);
                }
                let value = objective(&emb, nbhd)?;
                if !value.is_finite() || emb.as_slice().iter().any(|x| !x.is_finite()) {
                    return Err(Error::Diverged { epoch });
                }
                history.push(value);
            }
        }
    }
    Ok(TrainedEmbedding {
        embeddings: emb,
        objective_history: history,
    })
}

/// Full embedding pipeline: walks, neighborhoods, then gradient ascent.
pub fn optimize(graph: &Graph, walk: &WalkParams, train: &TrainParams) -> Result<TrainedEmbedding> {
    train.validate()?;
    let walks = sample_walks(graph, walk, train.rng_seed)?;
    let nbhd = build_neighborhoods(&walks, walk.window, graph.node_count())?;
    optimize_neighborhoods(&nbhd, train)
}
