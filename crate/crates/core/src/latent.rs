//! Latent distance law, connect probability, overload onset and latent-link
//! recovery.
//!
//! Under an isotropic Gaussian `N(u, σ² I)` in `d` dimensions the squared
//! distance between two random users is `Gamma(d/2, rate 1/(4σ²))`, so the
//! probability that a pair sits within squared distance `r` is the
//! regularized lower incomplete gamma `P(d/2, r/(4σ²))`.

use std::path::Path;

use rayon::prelude::*;

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::special::{ln_gamma, regularized_lower_gamma};

fn check_variance(variance: f64) -> Result<()> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::param(format!(
            "variance must be positive, got {variance}"
        )));
    }
    Ok(())
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    Ok(())
}

/// Gamma law of the squared latent distance between two random users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceLaw {
    pub shape: f64,
    pub rate: f64,
}

impl DistanceLaw {
    pub fn new(dim: usize, variance: f64) -> Result<Self> {
        check_dim(dim)?;
        check_variance(variance)?;
        Ok(DistanceLaw {
            shape: dim as f64 / 2.0,
            rate: 1.0 / (4.0 * variance),
        })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        if z == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => self.rate,
                _ => 0.0,
            };
        }
        let log = self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * z.ln()
            - self.rate * z;
        log.exp()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        regularized_lower_gamma(self.shape, self.rate * z)
    }
}

/// Density of the squared latent distance at `z`.
pub fn distance_pdf(z: f64, dim: usize, variance: f64) -> Result<f64> {
    Ok(DistanceLaw::new(dim, variance)?.pdf(z))
}

/// Probability that two random users lie within squared distance `range`.
pub fn connect_probability(range: f64, variance: f64, dim: usize) -> Result<f64> {
    if !(range > 0.0) {
        return Err(Error::param(format!(
            "influence range must be positive, got {range}"
        )));
    }
    Ok(DistanceLaw::new(dim, variance)?.cdf(range))
}

/// Inverse of [`connect_probability`] in `range`.
pub fn range_for_probability(prob: f64, variance: f64, dim: usize) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::param(format!(
            "target probability must be in (0,1), got {prob}"
        )));
    }
    let law = DistanceLaw::new(dim, variance)?;
    let mut lo = 0.0;
    let mut hi = law.mean().max(f64::MIN_POSITIVE);
    while law.cdf(hi) < prob {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if law.cdf(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Asymptotic tail expansion next to the exact value it approximates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectApprox {
    pub approx: f64,
    pub exact: f64,
    /// `|approx − exact| / exact`.
    pub relative_error: f64,
}

/// Evaluates `1 − T(a+1, x)/Γ(a+1)` with `a = d/2 − 1`, `x = r/(4σ²)` and
/// `T(a+1, x) = e^{−x} x^{a+1} / (x−a) · [1 − a/(x−a)² + 2a/(x−a)³]`, the
/// three-term expansion of the upper incomplete gamma.
///
/// The expansion blows up near `x = a`, so `|x − a| <= 1` is a domain error.
/// Far below `a` it is not meaningful either; values are returned as
/// computed.
pub fn connect_probability_approx(range: f64, variance: f64, dim: usize) -> Result<ConnectApprox> {
    let exact = connect_probability(range, variance, dim)?;
    let a = dim as f64 / 2.0 - 1.0;
    let x = range / (4.0 * variance);
    let gap = x - a;
    if gap.abs() <= 1.0 {
        return Err(Error::domain(format!(
            "expansion diverges near x = a (x = {x}, a = {a})"
        )));
    }
    let bracket = 1.0 - a / (gap * gap) + 2.0 * a / (gap * gap * gap);
    let log_lead = -x + (a + 1.0) * x.ln() - ln_gamma(a + 1.0);
    let tail = log_lead.exp() / gap * bracket;
    let approx = 1.0 - tail;
    Ok(ConnectApprox {
        approx,
        exact,
        relative_error: (approx - exact).abs() / exact,
    })
}

/// Step at which a typical riser's influenced neighborhood reaches the
/// capacity: `δ_c / p`.
pub fn overload_time(capacity: f64, connect_prob: f64) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(Error::param(format!(
            "capacity must be positive, got {capacity}"
        )));
    }
    if !(connect_prob > 0.0 && connect_prob <= 1.0) {
        return Err(Error::param(format!(
            "connect probability must be in (0,1], got {connect_prob}"
        )));
    }
    Ok(capacity / connect_prob)
}

/// Observed graph augmented with latent links.
#[derive(Debug, Clone)]
pub struct RecoveredGraph {
    pub graph: Graph,
    /// Added pairs `(u, v)`, `u < v`, sorted; none of them are observed edges.
    pub latent_edges: Vec<(usize, usize)>,
}

impl RecoveredGraph {
    pub fn is_latent(&self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        self.latent_edges.binary_search(&key).is_ok()
    }

    /// Edge list with `# latent` on every recovered edge.
    pub fn to_edge_list(&self) -> String {
        self.graph
            .to_edge_list_with(|u, v| self.is_latent(u, v).then_some("latent"))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

/// Adds an edge between every pair whose squared latent distance is
/// strictly below `range`.
pub fn recover_links(graph: &Graph, emb: &EmbeddingSet, range: f64) -> Result<RecoveredGraph> {
    let n = graph.node_count();
    if emb.node_count() != n {
        return Err(Error::param(format!(
            "graph has {n} nodes but embedding has {}",
            emb.node_count()
        )));
    }
    let shards: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let vi = emb.vector(i);
            ((i + 1)..n)
                .filter(|&j| {
                    let d: f64 = vi
                        .iter()
                        .zip(emb.vector(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    d < range && !graph.has_edge(i, j)
                })
                .collect()
        })
        .collect();

    let mut adj: Vec<Vec<usize>> = (0..n).map(|i| graph.neighbors(i).to_vec()).collect();
    let mut latent_edges = Vec::new();
    for (i, shard) in shards.into_iter().enumerate() {
        for j in shard {
            adj[i].push(j);
            adj[j].push(i);
            latent_edges.push((i, j));
        }
    }
    Ok(RecoveredGraph {
        graph: Graph::from_raw_adjacency(adj),
        latent_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_support_and_exponential_case() {
        assert_eq!(distance_pdf(-0.1, 2, 0.25).unwrap(), 0.0);
        for &z in &[0.0, 0.3, 1.0, 4.0] {
            let got = distance_pdf(z, 2, 0.25).unwrap();
            assert!((got - (-z).exp()).abs() < 1e-14);
        }
        assert!(distance_pdf(1.0, 2, 0.0).is_err());
        assert!(distance_pdf(1.0, 2, -1.0).is_err());
    }

    #[test]
    fn exponential_cdf() {
        let p = connect_probability(1.0, 0.25, 2).unwrap();
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((p - 0.632121).abs() < 1e-6);
    }

    #[test]
    fn cdf_limits() {
        assert!(connect_probability(1e-12, 0.25, 2).unwrap() < 1e-11);
        assert!(connect_probability(1e4, 0.25, 2).unwrap() > 1.0 - 1e-12);
        assert!(connect_probability(0.0, 0.25, 2).is_err());
    }

    #[test]
    fn high_dimension_near_mean() {
        let law = DistanceLaw::new(128, 0.0147).unwrap();
        assert!((law.mean() - 3.7632).abs() < 1e-12);
        let p = connect_probability(4.0, 0.0147, 128).unwrap();
        assert!(p > 0.5 && p < 1.0, "p = {p}");
    }

    #[test]
    fn approximation_exact_for_two_dimensions() {
        let out = connect_probability_approx(8.0, 0.25, 2).unwrap();
        assert!((out.approx - (1.0 - (-8.0f64).exp())).abs() < 1e-15);
        assert!(out.relative_error < 1e-14);
    }

    #[test]
    fn approximation_far_tail() {
        // d = 4, x = 50
        let out = connect_probability_approx(50.0, 0.25, 4).unwrap();
        assert!(out.relative_error < 0.01);
    }

    #[test]
    fn approximation_domain() {
        // d = 10 → a = 4; x = r/(4σ²) = 4
        assert!(matches!(
            connect_probability_approx(4.0, 0.25, 10),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn overload_time_is_a_ratio() {
        assert!((overload_time(30.0, 0.06).unwrap() - 500.0).abs() < 1e-9);
        assert_eq!(overload_time(2000.0, 1.0).unwrap(), 2000.0);
        let base = overload_time(10.0, 0.2).unwrap();
        assert_eq!(overload_time(20.0, 0.2).unwrap(), 2.0 * base);
        assert_eq!(overload_time(10.0, 0.4).unwrap(), 0.5 * base);
        assert!(overload_time(10.0, 0.0).is_err());
        assert!(overload_time(0.0, 0.5).is_err());
    }

    #[test]
    fn range_inversion() {
        let r = range_for_probability(0.15, 0.03, 8).unwrap();
        assert!((connect_probability(r, 0.03, 8).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn recovery_on_a_line() {
        let g = Graph::empty(3);
        let e = EmbeddingSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let rec = recover_links(&g, &e, 2.0).unwrap();
        assert_eq!(rec.graph.edge_count(), 1);
        assert!(rec.graph.has_edge(0, 1));
        assert_eq!(rec.latent_edges, vec![(0, 1)]);

        let none = recover_links(&g, &e, 0.0).unwrap();
        assert_eq!(none.graph.edge_count(), 0);

        let all = recover_links(&g, &e, 100.0).unwrap();
        assert_eq!(all.graph.edge_count(), 3);
    }

    #[test]
    fn recovery_keeps_observed_edges() {
        let g = Graph::from_edges(3, [(0, 2)]).unwrap();
        let e = EmbeddingSet::from_rows(&[vec![0.0], vec![0.5], vec![9.0]]).unwrap();
        let rec = recover_links(&g, &e, 1.0).unwrap();
        assert!(rec.graph.has_edge(0, 2));
        assert!(rec.graph.has_edge(0, 1));
        assert!(!rec.is_latent(0, 2));
        assert!(rec.is_latent(1, 0));
        let text = rec.to_edge_list();
        assert!(text.contains("0 1 # latent\n"));
        assert!(text.contains("0 2\n"));
    }
}
