//! Agent-based competition between two influences on a (recovered) graph.
//!
//! Each step one riser is drawn uniformly from the uninfected users with at
//! least one influenced neighbor and adopts one influence for good. Before
//! overload the choice is proportional to `a·k1` versus `b·k2`, where `k1`
//! and `k2` count the riser's neighbors holding each influence. Overload
//! starts the first time a riser sees more than `δ_c` influenced neighbors;
//! from then on a riser weighs powers only with probability
//! `e^{−μ(t − t_c)}` and otherwise applies a priority [`Strategy`].

mod strategy;

pub use strategy::{
    strategy_first, strategy_highest_degree, strategy_latest, strategy_most_similar, ArrivalDist,
    ArrivalSampler, Strategy,
};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::PowerPair;
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Influence {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetitionConfig {
    pub powers: PowerPair,
    /// Influence range `r` (squared latent distance) used to recover the graph.
    pub range: f64,
    /// Capacity `δ_c`: a riser with more influenced neighbors is overloaded.
    pub capacity: usize,
    /// Decay rate `μ` of the discrimination probability.
    pub decay: f64,
    pub strategy: Strategy,
    pub arrival: ArrivalDist,
    /// Seed counts `(X1(t0), X2(t0))`.
    pub seeds: (usize, usize),
    /// Stop once this many users are influenced. `None` runs to exhaustion.
    pub horizon: Option<usize>,
    pub rng_seed: u64,
    /// Connect probability `p(r, σ²)` of the latent model, used only to log
    /// the predicted onset `δ_c / p`.
    pub connect_prob: Option<f64>,
}

impl CompetitionConfig {
    pub fn new(powers: PowerPair, seeds: (usize, usize)) -> Self {
        CompetitionConfig {
            powers,
            range: 1.0,
            capacity: usize::MAX,
            decay: 10.0,
            strategy: Strategy::default(),
            arrival: ArrivalDist::default(),
            seeds,
            horizon: None,
            rng_seed: 0,
            connect_prob: None,
        }
    }

    pub fn validate(&self, graph: &Graph, embeddings: Option<&EmbeddingSet>) -> Result<()> {
        let n = graph.node_count();
        let (s1, s2) = self.seeds;
        if s1 == 0 || s2 == 0 {
            return Err(Error::param(format!(
                "each influence needs at least one seed, got ({s1}, {s2})"
            )));
        }
        if s1 + s2 > n {
            return Err(Error::TooManySeeds {
                requested: s1 + s2,
                n,
            });
        }
        if let Some(h) = self.horizon {
            if h > n || h < s1 + s2 {
                return Err(Error::param(format!(
                    "horizon {h} must lie between the seed total {} and n = {n}",
                    s1 + s2
                )));
            }
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::param(format!(
                "range must be positive, got {}",
                self.range
            )));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::param(format!(
                "decay must be positive, got {}",
                self.decay
            )));
        }
        if let Some(p) = self.connect_prob {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::param(format!(
                    "connect probability must lie in (0, 1], got {p}"
                )));
            }
        }
        self.arrival.sampler()?;
        if self.strategy == Strategy::MostSimilar {
            match embeddings {
                None => {
                    return Err(Error::config("strategy most_similar needs embeddings"));
                }
                Some(e) if e.node_count() != n => {
                    return Err(Error::config(format!(
                        "embeddings cover {} nodes, graph has {n}",
                        e.node_count()
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Predicted overload onset `δ_c / p(r, σ²)`, if the connect
    /// probability is known.
    pub fn predicted_trigger(&self) -> Option<f64> {
        if self.capacity == usize::MAX {
            return None;
        }
        self.connect_prob.map(|p| self.capacity as f64 / p)
    }

    /// `key=value` pairs echoed into trajectory CSV headers.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let cap = if self.capacity == usize::MAX {
            "none".to_string()
        } else {
            self.capacity.to_string()
        };
        let mut out = vec![
            ("a".to_string(), self.powers.a.to_string()),
            ("b".to_string(), self.powers.b.to_string()),
            ("range".to_string(), self.range.to_string()),
            ("capacity".to_string(), cap),
            ("decay".to_string(), self.decay.to_string()),
            ("strategy".to_string(), self.strategy.to_string()),
            ("arrival".to_string(), self.arrival.to_string()),
            (
                "seeds".to_string(),
                format!("{},{}", self.seeds.0, self.seeds.1),
            ),
            ("rng_seed".to_string(), self.rng_seed.to_string()),
        ];
        if let Some(h) = self.horizon {
            out.push(("horizon".to_string(), h.to_string()));
        }
        out
    }
}

/// Mutable state of a single run.
#[derive(Debug, Clone)]
pub struct SimState {
    labels: Vec<Option<Influence>>,
    /// Influenced-neighbor counts per node, by influence.
    k1: Vec<u32>,
    k2: Vec<u32>,
    /// Uninfected nodes with at least one influenced neighbor.
    eligible: Vec<usize>,
    /// Position of each node in `eligible`, or `usize::MAX`.
    slot: Vec<usize>,
    x1: usize,
    x2: usize,
    onset: Option<usize>,
}

impl SimState {
    pub fn label(&self, i: usize) -> Option<Influence> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<Influence>] {
        &self.labels
    }

    /// Influenced-neighbor counts `(k1, k2)` of node `i`.
    pub fn counts(&self, i: usize) -> (u32, u32) {
        (self.k1[i], self.k2[i])
    }

    pub fn x1(&self) -> usize {
        self.x1
    }

    pub fn x2(&self) -> usize {
        self.x2
    }

    /// Current time, the number of influenced users.
    pub fn t(&self) -> usize {
        self.x1 + self.x2
    }

    /// Time at which overload started, if it has.
    pub fn onset(&self) -> Option<usize> {
        self.onset
    }

    pub fn is_overloaded(&self) -> bool {
        self.onset.is_some()
    }

    pub fn eligible(&self) -> &[usize] {
        &self.eligible
    }

    fn mark_overloaded(&mut self) {
        if self.onset.is_none() {
            self.onset = Some(self.t());
        }
    }

    /// Labels `node` and updates its neighbors' counts and eligibility.
    pub fn infect(&mut self, graph: &Graph, node: usize, label: Influence) {
        debug_assert!(self.labels[node].is_none(), "labels never change once set");
        self.labels[node] = Some(label);
        match label {
            Influence::First => self.x1 += 1,
            Influence::Second => self.x2 += 1,
        }
        self.remove_eligible(node);
        for &w in graph.neighbors(node) {
            let counter = match label {
                Influence::First => &mut self.k1[w],
                Influence::Second => &mut self.k2[w],
            };
            *counter += 1;
            if self.labels[w].is_none() && self.slot[w] == usize::MAX {
                self.slot[w] = self.eligible.len();
                self.eligible.push(w);
            }
        }
    }

    fn remove_eligible(&mut self, node: usize) {
        let pos = self.slot[node];
        if pos == usize::MAX {
            return;
        }
        self.eligible.swap_remove(pos);
        if let Some(&moved) = self.eligible.get(pos) {
            self.slot[moved] = pos;
        }
        self.slot[node] = usize::MAX;
    }
}

/// Places the seeds uniformly at random without replacement.
pub fn init_state<R: Rng + ?Sized>(
    graph: &Graph,
    seeds: (usize, usize),
    rng: &mut R,
) -> Result<SimState> {
    let n = graph.node_count();
    let total = seeds.0 + seeds.1;
    if total > n {
        return Err(Error::TooManySeeds {
            requested: total,
            n,
        });
    }
    let mut state = SimState {
        labels: vec![None; n],
        k1: vec![0; n],
        k2: vec![0; n],
        eligible: Vec::new(),
        slot: vec![usize::MAX; n],
        x1: 0,
        x2: 0,
        onset: None,
    };
    for (rank, node) in sample(rng, n, total).into_iter().enumerate() {
        let label = if rank < seeds.0 {
            Influence::First
        } else {
            Influence::Second
        };
        state.infect(graph, node, label);
    }
    Ok(state)
}

/// Uniform draw among eligible users; `None` once nobody can rise.
pub fn pick_riser<R: Rng + ?Sized>(state: &SimState, rng: &mut R) -> Option<usize> {
    if state.eligible.is_empty() {
        None
    } else {
        Some(state.eligible[rng.random_range(0..state.eligible.len())])
    }
}

/// Adopts `First` with probability `a·k1 / (a·k1 + b·k2)`.
pub fn decide_pre_overload<R: Rng + ?Sized>(
    k1: u32,
    k2: u32,
    powers: PowerPair,
    rng: &mut R,
) -> Influence {
    let w1 = powers.a * k1 as f64;
    let w2 = powers.b * k2 as f64;
    debug_assert!(w1 + w2 > 0.0, "riser must have an influenced neighbor");
    if rng.random::<f64>() * (w1 + w2) < w1 {
        Influence::First
    } else {
        Influence::Second
    }
}

/// With probability `discrimination` decides as before overload, otherwise
/// defers to `fallback`.
pub fn decide_post_overload<R: Rng + ?Sized>(
    k1: u32,
    k2: u32,
    powers: PowerPair,
    discrimination: f64,
    rng: &mut R,
    fallback: impl FnOnce(&mut R) -> Influence,
) -> Influence {
    if rng.random::<f64>() < discrimination {
        decide_pre_overload(k1, k2, powers, rng)
    } else {
        fallback(rng)
    }
}

/// Outcome of one simulated competition.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// `(t, X1, X2)` after every step, starting with the seeds.
    pub trajectory: Trajectory,
    /// Time at which the first over-capacity riser appeared.
    pub trigger: Option<usize>,
    /// `δ_c / p(r, σ²)` when the connect probability is known.
    pub predicted_trigger: Option<f64>,
}

/// Runs one competition with the generator seeded from `config.rng_seed`.
pub fn run(
    graph: &Graph,
    embeddings: Option<&EmbeddingSet>,
    config: &CompetitionConfig,
) -> Result<RunResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    run_with_rng(graph, embeddings, config, &mut rng)
}

pub fn run_with_rng(
    graph: &Graph,
    embeddings: Option<&EmbeddingSet>,
    config: &CompetitionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RunResult> {
    config.validate(graph, embeddings)?;
    let arrival = config.arrival.sampler()?;
    let horizon = config.horizon.unwrap_or(graph.node_count());
    let mut state = init_state(graph, config.seeds, rng)?;
    let mut traj = Trajectory::default();
    traj.push(state.t() as f64, state.x1 as f64, state.x2 as f64);
    let mut scratch: Vec<usize> = Vec::new();

    while state.t() < horizon {
        let Some(riser) = pick_riser(&state, rng) else {
            break;
        };
        let (k1, k2) = state.counts(riser);
        if (k1 + k2) as usize > config.capacity {
            state.mark_overloaded();
        }
        let label = match state.onset {
            None => decide_pre_overload(k1, k2, config.powers, rng),
            Some(onset) => {
                let p = (-config.decay * (state.t() - onset) as f64).exp();
                decide_post_overload(k1, k2, config.powers, p, rng, |rng| {
                    scratch.clear();
                    scratch.extend(
                        graph
                            .neighbors(riser)
                            .iter()
                            .copied()
                            .filter(|&w| state.labels[w].is_some()),
                    );
                    apply_strategy(
                        config.strategy,
                        riser,
                        &scratch,
                        &state,
                        graph,
                        embeddings,
                        &arrival,
                        rng,
                    )
                })
            }
        };
        state.infect(graph, riser, label);
        traj.push(state.t() as f64, state.x1 as f64, state.x2 as f64);
    }

    Ok(RunResult {
        trajectory: traj,
        trigger: state.onset,
        predicted_trigger: config.predicted_trigger(),
    })
}

#[allow(clippy::too_many_arguments)]
fn apply_strategy<R: Rng + ?Sized>(
    strategy: Strategy,
    riser: usize,
    influenced: &[usize],
    state: &SimState,
    graph: &Graph,
    embeddings: Option<&EmbeddingSet>,
    arrival: &ArrivalSampler,
    rng: &mut R,
) -> Influence {
    let label = |w: usize| state.labels[w].expect("neighbor is influenced");
    match strategy {
        Strategy::First | Strategy::Latest => {
            let labels: Vec<Influence> = influenced.iter().map(|&w| label(w)).collect();
            if strategy == Strategy::First {
                strategy_first(&labels, arrival, rng)
            } else {
                strategy_latest(&labels, arrival, rng)
            }
        }
        Strategy::MostSimilar => {
            let emb = embeddings.expect("validated: most_similar has embeddings");
            let cands: Vec<(Influence, f64)> = influenced
                .iter()
                .map(|&w| (label(w), emb.sq_dist(riser, w)))
                .collect();
            strategy_most_similar(&cands, rng)
        }
        Strategy::HighestDegree => {
            let cands: Vec<(Influence, usize)> = influenced
                .iter()
                .map(|&w| (label(w), graph.neighbors(w).len()))
                .collect();
            strategy_highest_degree(&cands, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_power_law;

    fn powers(a: f64, b: f64) -> PowerPair {
        PowerPair::new(a, b).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l))).unwrap()
    }

    #[test]
    fn seeds_are_placed() {
        let g = generate_power_law(200, 2.5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = init_state(&g, (16, 24), &mut rng).unwrap();
        assert_eq!((s.x1(), s.x2(), s.t()), (16, 24, 40));
        let labelled = s.labels().iter().filter(|l| l.is_some()).count();
        assert_eq!(labelled, 40);
        for &e in s.eligible() {
            assert!(s.label(e).is_none());
            let (k1, k2) = s.counts(e);
            assert!(k1 + k2 > 0);
        }
        assert!(matches!(
            init_state(&g, (150, 51), &mut rng),
            Err(Error::TooManySeeds {
                requested: 201,
                n: 200
            })
        ));
    }

    #[test]
    fn two_node_graph_ends_at_once() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let cfg = CompetitionConfig::new(powers(1.0, 1.0), (1, 1));
        let res = run(&g, None, &cfg).unwrap();
        assert_eq!(res.trajectory.len(), 1);
    }

    #[test]
    fn horizon_at_seed_total() {
        let g = generate_power_law(300, 2.5, 2).unwrap();
        let mut cfg = CompetitionConfig::new(powers(1.0, 2.0), (16, 24));
        cfg.horizon = Some(40);
        let res = run(&g, None, &cfg).unwrap();
        assert_eq!(res.trajectory.len(), 1);
        assert_eq!(res.trajectory.points[0].t, 40.0);
    }

    #[test]
    fn isolated_node_never_rises() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = init_state(&g, (0, 0), &mut rng).unwrap();
        s.infect(&g, 0, Influence::First);
        assert_eq!(s.eligible(), &[1]);
        assert_eq!(pick_riser(&s, &mut rng), Some(1));
        s.infect(&g, 1, Influence::Second);
        s.infect(&g, 2, Influence::Second);
        assert_eq!(pick_riser(&s, &mut rng), None);
    }

    #[test]
    fn star_leaves_uniform() {
        let g = star(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut s = init_state(&g, (0, 0), &mut rng).unwrap();
        s.infect(&g, 0, Influence::First);
        let mut hits = [0usize; 6];
        for _ in 0..10_000 {
            hits[pick_riser(&s, &mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[0], 0);
        for &h in &hits[1..] {
            assert!((h as f64 - 2000.0).abs() < 200.0, "{hits:?}");
        }
    }

    #[test]
    fn pre_overload_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = powers(1.0, 3.0);
        let n = 100_000;
        let firsts = (0..n)
            .filter(|_| decide_pre_overload(1, 2, p, &mut rng) == Influence::First)
            .count();
        assert!((firsts as f64 / n as f64 - 1.0 / 7.0).abs() < 0.01);
        assert!((0..100).all(|_| decide_pre_overload(3, 0, p, &mut rng) == Influence::First));
    }

    #[test]
    fn post_overload_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = powers(1.0, 1.0);
        assert_eq!(
            decide_post_overload(1, 1, p, 0.0, &mut rng, |_| Influence::Second),
            Influence::Second
        );
        let n = 50_000;
        let firsts = (0..n)
            .filter(|_| {
                decide_post_overload(3, 7, p, (-1.0f64).exp(), &mut rng, |r| {
                    if r.random::<f64>() < 0.3 {
                        Influence::First
                    } else {
                        Influence::Second
                    }
                }) == Influence::First
            })
            .count();
        assert!((firsts as f64 / n as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn conservation_and_determinism() {
        let g = generate_power_law(500, 2.5, 3).unwrap();
        let mut cfg = CompetitionConfig::new(powers(1.0, 2.0), (16, 24));
        cfg.capacity = 5;
        cfg.strategy = Strategy::HighestDegree;
        cfg.rng_seed = 11;
        let a = run(&g, None, &cfg).unwrap();
        let b = run(&g, None, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.trigger.is_some());
        for p in &a.trajectory.points {
            assert_eq!(p.x1 + p.x2, p.t);
        }
    }

    #[test]
    fn most_similar_needs_embeddings() {
        let g = generate_power_law(100, 2.5, 3).unwrap();
        let mut cfg = CompetitionConfig::new(powers(1.0, 2.0), (4, 4));
        cfg.strategy = Strategy::MostSimilar;
        assert!(matches!(run(&g, None, &cfg), Err(Error::Config(_))));
    }
}
