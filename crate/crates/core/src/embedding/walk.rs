//! Second-order biased random walks and co-occurrence neighborhoods.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Walk-sampling parameters.
///
/// `walk_length` counts visited nodes, including the start node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    /// Return bias: the node just left gets weight `1/p`.
    pub return_bias: f64,
    /// In-out bias: nodes not adjacent to the previous node get weight `1/q`.
    pub inout_bias: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Co-occurrence radius used when turning walks into neighborhoods.
    pub window: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            return_bias: 1.0,
            inout_bias: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            window: 10,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.return_bias > 0.0 && self.return_bias.is_finite()) {
            return Err(Error::param("return bias p must be positive"));
        }
        if !(self.inout_bias > 0.0 && self.inout_bias.is_finite()) {
            return Err(Error::param("in-out bias q must be positive"));
        }
        if self.walk_length < 2 {
            return Err(Error::param("walk length must be at least 2"));
        }
        if self.walks_per_node < 1 {
            return Err(Error::param("walks per node must be at least 1"));
        }
        if self.window < 1 || self.window >= self.walk_length {
            return Err(Error::param(format!(
                "window must satisfy 1 <= window < walk_length ({}), got {}",
                self.walk_length, self.window
            )));
        }
        Ok(())
    }
}

/// Unnormalized transition weights out of `current`, having arrived from
/// `previous`. Returned in neighbor order of `current`.
pub fn transition_weights(
    graph: &Graph,
    previous: usize,
    current: usize,
    params: &WalkParams,
) -> Vec<(usize, f64)> {
    graph
        .neighbors(current)
        .iter()
        .map(|&x| (x, edge_weight(graph, previous, x, params)))
        .collect()
}

fn edge_weight(graph: &Graph, previous: usize, candidate: usize, params: &WalkParams) -> f64 {
    if candidate == previous {
        1.0 / params.return_bias
    } else if graph.has_edge(previous, candidate) {
        1.0
    } else {
        1.0 / params.inout_bias
    }
}

/// Draws the next node of a walk that moved `previous -> current`.
///
/// Returns `None` when `current` has no neighbors.
pub fn next_step<R: Rng + ?Sized>(
    graph: &Graph,
    previous: usize,
    current: usize,
    params: &WalkParams,
    rng: &mut R,
) -> Option<usize> {
    let neighbors = graph.neighbors(current);
    if neighbors.is_empty() {
        return None;
    }
    if params.return_bias == 1.0 && params.inout_bias == 1.0 {
        return Some(neighbors[rng.random_range(0..neighbors.len())]);
    }
    let total: f64 = neighbors
        .iter()
        .map(|&x| edge_weight(graph, previous, x, params))
        .sum();
    let mut target = rng.random::<f64>() * total;
    for &x in neighbors {
        target -= edge_weight(graph, previous, x, params);
        if target < 0.0 {
            return Some(x);
        }
    }
    neighbors.last().copied()
}

fn walk_from<R: Rng>(graph: &Graph, start: usize, params: &WalkParams, rng: &mut R) -> Vec<usize> {
    let first = graph.neighbors(start);
    if first.is_empty() {
        return vec![start];
    }
    let mut walk = Vec::with_capacity(params.walk_length);
    walk.push(start);
    walk.push(first[rng.random_range(0..first.len())]);
    while walk.len() < params.walk_length {
        let cur = walk[walk.len() - 1];
        let prev = walk[walk.len() - 2];
        match next_step(graph, prev, cur, params, rng) {
            Some(next) => walk.push(next),
            None => break,
        }
    }
    walk
}

/// Samples `walks_per_node` walks from every node.
///
/// Each start node draws from its own ChaCha stream of `rng_seed`, so the
/// result does not depend on thread scheduling. Walks are returned grouped by
/// start node.
pub fn sample_walks(graph: &Graph, params: &WalkParams, rng_seed: u64) -> Result<Vec<Vec<usize>>> {
    params.validate()?;
    if graph.node_count() == 0 {
        return Err(Error::param("cannot sample walks on an empty graph"));
    }
    let per_node: Vec<Vec<Vec<usize>>> = (0..graph.node_count())
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(start as u64);
            (0..params.walks_per_node)
                .map(|_| walk_from(graph, start, params, &mut rng))
                .collect()
        })
        .collect();
    Ok(per_node.into_iter().flatten().collect())
}

/// Per-node multiset of co-occurring nodes, stored as sorted `(node, count)`
/// runs.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSet {
    entries: Vec<Vec<(usize, u32)>>,
}

impl NeighborhoodSet {
    /// Builds a neighborhood set directly from `(node, context)` multiset
    /// entries; mostly useful for tests and small hand-made instances.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut maps: Vec<HashMap<usize, u32>> = vec![HashMap::new(); n];
        for (i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange { id: i.max(j), n });
            }
            if i != j {
                *maps[i].entry(j).or_default() += 1;
            }
        }
        Ok(Self::from_maps(maps))
    }

    fn from_maps(maps: Vec<HashMap<usize, u32>>) -> Self {
        let entries = maps
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, u32)> = m.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect();
        NeighborhoodSet { entries }
    }

    pub fn node_count(&self) -> usize {
        self.entries.len()
    }

    /// Distinct members of `N_S(i)` with multiplicities.
    pub fn of(&self, i: usize) -> &[(usize, u32)] {
        &self.entries[i]
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.entries[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.entries[i][pos].1)
            .unwrap_or(0)
    }

    /// `|N_S(i)|` counted with multiplicity.
    pub fn size(&self, i: usize) -> u64 {
        self.entries[i].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn total_size(&self) -> u64 {
        (0..self.node_count()).map(|i| self.size(i)).sum()
    }
}

/// Collects, for every node, the nodes found within `window` positions of
/// any of its occurrences. A node never counts as its own neighbor.
pub fn build_neighborhoods(
    walks: &[Vec<usize>],
    window: usize,
    n: usize,
) -> Result<NeighborhoodSet> {
    if walks.is_empty() {
        return Err(Error::param("no walks to build neighborhoods from"));
    }
    let mut maps: Vec<HashMap<usize, u32>> = vec![HashMap::new(); n];
    for walk in walks {
        for (pos, &node) in walk.iter().enumerate() {
            if node >= n {
                return Err(Error::NodeOutOfRange { id: node, n });
            }
            let lo = pos.saturating_sub(window);
            let hi = (pos + window).min(walk.len() - 1);
            for &ctx in &walk[lo..=hi] {
                if ctx != node {
                    *maps[node].entry(ctx).or_default() += 1;
                }
            }
        }
    }
    Ok(NeighborhoodSet::from_maps(maps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn unbiased_weights_are_uniform() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (1, 3), (2, 3)]).unwrap();
        let w = transition_weights(&g, 0, 1, &WalkParams::default());
        assert!(w.iter().all(|&(_, x)| x == 1.0));
    }

    #[test]
    fn path_graph_weights() {
        let params = WalkParams {
            return_bias: 1.0,
            inout_bias: 0.5,
            ..WalkParams::default()
        };
        let w = transition_weights(&path3(), 0, 1, &params);
        assert_eq!(w, vec![(0, 1.0), (2, 2.0)]);
        let total: f64 = w.iter().map(|x| x.1).sum();
        assert!((w[1].1 / total - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn star_graph_weights() {
        // center 0, leaves 1..=5
        let g = Graph::from_edges(6, (1..6).map(|l| (0, l))).unwrap();
        let params = WalkParams {
            return_bias: 4.0,
            inout_bias: 0.25,
            ..WalkParams::default()
        };
        for (x, w) in transition_weights(&g, 3, 0, &params) {
            if x == 3 {
                assert_eq!(w, 0.25);
            } else {
                assert_eq!(w, 4.0);
            }
        }
    }

    #[test]
    fn isolated_start_gives_singleton_walk() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let walks = sample_walks(&g, &WalkParams::default(), 1).unwrap();
        let from_two: Vec<_> = walks.iter().filter(|w| w[0] == 2).collect();
        assert_eq!(from_two.len(), 10);
        assert!(from_two.iter().all(|w| w.as_slice() == [2]));
    }

    #[test]
    fn walks_have_requested_shape_and_follow_edges() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let params = WalkParams {
            return_bias: 2.0,
            inout_bias: 0.5,
            walk_length: 12,
            walks_per_node: 3,
            window: 4,
        };
        let walks = sample_walks(&g, &params, 9).unwrap();
        assert_eq!(walks.len(), 15);
        for w in &walks {
            assert_eq!(w.len(), 12);
            for pair in w.windows(2) {
                assert!(g.has_edge(pair[0], pair[1]));
            }
        }
        assert_eq!(walks, sample_walks(&g, &params, 9).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        let bad = WalkParams {
            window: 80,
            ..WalkParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = WalkParams {
            inout_bias: 0.0,
            ..WalkParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn neighborhoods_from_walks() {
        let n = build_neighborhoods(&[vec![0, 1, 2]], 1, 3).unwrap();
        assert_eq!(n.count(1, 0), 1);
        assert_eq!(n.count(1, 2), 1);
        assert_eq!(n.count(0, 2), 0);

        let n = build_neighborhoods(&[vec![0, 1, 0]], 1, 2).unwrap();
        assert_eq!(n.of(0), &[(1, 2)]);
        assert_eq!(n.size(0), 2);
        assert_eq!(n.count(0, 0), 0);

        // saturated window sees the whole walk
        let n = build_neighborhoods(&[vec![3, 1, 4, 0, 2]], 4, 5).unwrap();
        for i in 0..5 {
            assert_eq!(n.of(i).len(), 4);
        }
    }

    #[test]
    fn empty_walk_list_is_rejected() {
        assert!(build_neighborhoods(&[], 2, 3).is_err());
    }
}
