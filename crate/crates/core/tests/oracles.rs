mod common;

use common::*;
use infcomp::analytic::{
    corollary_closed_form, post_overload, post_overload_rate, pre_overload, pre_overload_rate,
    InitialState, PowerPair,
};
use infcomp::embedding::{fit_gaussian, next_step, EmbeddingSet, WalkParams};
use infcomp::graph::{generate_power_law, Graph};
use infcomp::latent::{connect_probability, DistanceLaw};
use infcomp::special::regularized_lower_gamma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn powers(a: f64, b: f64) -> PowerPair {
    PowerPair::new(a, b).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn incomplete_gamma_matches_quadrature() {
    for &s in &[0.5, 1.0, 1.5, 4.0, 16.0, 64.0] {
        for &x in &[0.05, 0.5, 1.0, 3.0, 10.0, 40.0, 70.0] {
            let got = regularized_lower_gamma(s, x);
            let want = gamma_cdf_quad(s, 1.0, x);
            assert!(
                (got - want).abs() < 1e-8,
                "P({s}, {x}) = {got}, quadrature {want}"
            );
        }
    }
}

#[test]
fn distance_law_matches_quadrature() {
    for &(d, var) in &[(2usize, 0.25), (8, 0.1), (128, 0.0147)] {
        let law = DistanceLaw::new(d, var).unwrap();
        let (shape, rate) = (d as f64 / 2.0, 1.0 / (4.0 * var));
        assert_eq!(law.shape, shape);
        assert!(rel(law.rate, rate) < 1e-15);
        let mean = law.mean();
        for f in [0.2, 0.7, 1.0, 1.3, 2.5] {
            let z = f * mean;
            let want = gamma_cdf_quad(shape, rate, z);
            assert!((law.cdf(z) - want).abs() < 1e-8, "d={d} z={z}");
            assert!((connect_probability(z, var, d).unwrap() - want).abs() < 1e-8);
            assert!(rel(law.pdf(z), gamma_pdf(shape, rate, z)) < 1e-9);
        }
    }
}

#[test]
fn connect_probability_matches_sampled_pairs() {
    let (d, var) = (8, 0.1);
    let normal = Normal::new(0.0, f64::sqrt(var)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = 1.5;
    let trials = 100_000;
    let hits = (0..trials)
        .filter(|_| {
            let z: f64 = (0..d)
                .map(|_| (normal.sample(&mut rng) - normal.sample(&mut rng)).powi(2))
                .sum();
            z < r
        })
        .count();
    let p = connect_probability(r, var, d).unwrap();
    let freq = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((freq - p).abs() < 4.0 * se, "freq {freq} vs {p}");
}

#[test]
fn pre_overload_matches_forward_integration() {
    for &(a, b, x1, x2) in &[
        (1.0, 2.0, 16.0, 24.0),
        (2.0, 1.0, 16.0, 24.0),
        (1.0, 1.0, 10.0, 30.0),
        (3.0, 1.0, 5.0, 35.0),
    ] {
        let pw = powers(a, b);
        let init = InitialState::new(x1, x2).unwrap();
        let t0 = init.t0;
        let mut samples = Vec::new();
        let mut next = t0 * 1.5;
        rk4(
            |_, y| {
                let (d1, d2) = pre_overload_rate(pw, y[0], y[1]);
                [d1, d2]
            },
            t0,
            [x1, x2],
            10.0 * t0,
            1e-3,
            |t, y| {
                if t >= next - 1e-9 {
                    samples.push((t, y));
                    next += t0 * 0.5;
                }
            },
        );
        let grid: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let tr = pre_overload(pw, init, &grid).unwrap();
        for (p, (_, y)) in tr.points.iter().zip(&samples) {
            assert!(rel(p.x1, y[0]) < 1e-4, "a={a} b={b} t={} x1", p.t);
            assert!(rel(p.x2, y[1]) < 1e-4, "a={a} b={b} t={} x2", p.t);
        }
    }
}

#[test]
fn post_overload_matches_forward_integration() {
    for &(a, b, decay) in &[(1.0, 2.0, 0.05), (2.0, 1.0, 0.02), (1.0, 3.0, 0.1)] {
        let pw = powers(a, b);
        let anchor = InitialState::new(16.0, 24.0).unwrap();
        let tc = anchor.t0;
        let linearized = |t: f64| (1.0 - decay * (t - tc)).max(0.0);
        let mut samples = Vec::new();
        let mut next = tc + 2.0;
        rk4(
            |t, y| {
                let (d1, d2) = post_overload_rate(pw, linearized(t), y[0], y[1]);
                [d1, d2]
            },
            tc,
            [anchor.x1, anchor.x2],
            10.0 * tc,
            1e-3,
            |t, y| {
                if t >= next - 1e-9 {
                    samples.push((t, y));
                    next += 2.0;
                }
            },
        );
        let grid: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let tr = post_overload(pw, decay, anchor, &grid).unwrap();
        for (p, (_, y)) in tr.points.iter().zip(&samples) {
            assert!(
                rel(p.x1, y[0]) < 1e-4,
                "a={a} b={b} t={} x1 {} vs {}",
                p.t,
                p.x1,
                y[0]
            );
            assert!(
                rel(p.x2, y[1]) < 1e-4,
                "a={a} b={b} t={} x2 {} vs {}",
                p.t,
                p.x2,
                y[1]
            );
        }
    }
}

#[test]
fn closed_forms_match_root_finder() {
    let init = InitialState::new(16.0, 24.0).unwrap();
    for &(ratio, a, b) in &[(1.0, 1.0, 1.0), (0.5, 1.0, 2.0), (2.0, 2.0, 1.0)] {
        let grid = [50.0, 400.0, 2000.0, 1e6];
        let tr = pre_overload(powers(a, b), init, &grid).unwrap();
        for p in &tr.points {
            let (x1, x2) = corollary_closed_form(ratio, init, p.t).unwrap();
            assert!((x1 - p.x1).abs() <= 1e-8 * p.t, "ratio {ratio} t {}", p.t);
            assert!((x2 - p.x2).abs() <= 1e-8 * p.t, "ratio {ratio} t {}", p.t);
        }
    }
}

#[test]
fn weaker_influence_grows_as_a_power() {
    // With a > b the loser obeys C2·x2^{a/b} + x2 = t, so x2 / t^{b/a} tends
    // to C2^{-b/a}.
    let (a, b) = (2.0, 1.0);
    let init = InitialState::new(16.0, 24.0).unwrap();
    let c2 = init.x1 / init.x2.powf(a / b);
    let limit = c2.powf(-b / a);
    let tr = pre_overload(powers(a, b), init, &[1e4, 1e6, 1e8]).unwrap();
    let scaled: Vec<f64> = tr.points.iter().map(|p| p.x2 / p.t.powf(b / a)).collect();
    assert!(rel(scaled[1], limit) < rel(scaled[0], limit));
    assert!(rel(scaled[2], limit) < 1e-3, "{scaled:?} vs {limit}");
}

#[test]
fn biased_walk_frequencies() {
    // Arriving at 1 from 0: returning weighs 1/p, node 4 (adjacent to 0)
    // weighs 1, nodes 2 and 3 weigh 1/q.
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (1, 3), (1, 4), (2, 3), (0, 4)]).unwrap();
    let params = WalkParams {
        return_bias: 0.5,
        inout_bias: 2.0,
        ..WalkParams::default()
    };
    let weights = [(0usize, 2.0), (2, 0.5), (3, 0.5), (4, 1.0)];
    let total: f64 = weights.iter().map(|w| w.1).sum();
    let mut counts = [0usize; 5];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trials = 100_000;
    for _ in 0..trials {
        counts[next_step(&g, 0, 1, &params, &mut rng).unwrap()] += 1;
    }
    for (node, w) in weights {
        let f = counts[node] as f64 / trials as f64;
        assert!((f - w / total).abs() < 0.01, "node {node}: {f}");
    }
    assert_eq!(counts[1], 0);
}

#[test]
fn gaussian_fit_is_consistent() {
    let (d, var) = (8, 0.3);
    let normal = Normal::new(1.0, f64::sqrt(var)).unwrap();
    let error_at = |n: usize, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| normal.sample(&mut rng)).collect();
        let fit = fit_gaussian(&EmbeddingSet::new(d, data).unwrap()).unwrap();
        (fit.variance - var).abs()
    };
    let small: f64 = (0..20).map(|s| error_at(100, s)).sum::<f64>() / 20.0;
    let large: f64 = (0..20).map(|s| error_at(10_000, 100 + s)).sum::<f64>() / 20.0;
    assert!(large < small / 3.0, "{small} -> {large}");
    assert!(large < 0.01);
}

#[test]
fn generated_degrees_follow_the_exponent() {
    let g = generate_power_law(20_000, 2.5, 3).unwrap();
    let degrees: Vec<usize> = (0..g.node_count()).map(|i| g.neighbors(i).len()).collect();
    let fitted = power_law_mle(&degrees, 3);
    assert!((fitted - 2.5).abs() < 0.2, "fitted exponent {fitted}");
}
