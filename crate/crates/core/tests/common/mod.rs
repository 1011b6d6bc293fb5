//! Reference computations that do not go through the library's own
//! numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `ln Γ(s)` for `s` a positive multiple of 1/2, by exact recurrence from
/// `Γ(1) = 1` or `Γ(1/2) = √π`.
pub fn ln_gamma_half_integer(s: f64) -> f64 {
    let twice = (2.0 * s).round();
    assert!((2.0 * s - twice).abs() < 1e-12 && twice >= 1.0, "{s}");
    let (mut x, mut acc) = if (twice as u64).is_multiple_of(2) {
        (1.0, 0.0)
    } else {
        (0.5, 0.5 * PI.ln())
    };
    while x < s - 0.25 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Composite Simpson rule with `panels` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let m = panels + panels % 2;
    let h = (hi - lo) / m as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    sum * h / 3.0
}

/// Gamma(shape, rate) density evaluated in log space.
pub fn gamma_pdf(shape: f64, rate: f64, z: f64) -> f64 {
    if z < 0.0 || (z == 0.0 && shape > 1.0) {
        return 0.0;
    }
    if z == 0.0 && shape == 1.0 {
        return rate;
    }
    (shape * rate.ln() + (shape - 1.0) * z.ln() - rate * z - ln_gamma_half_integer(shape)).exp()
}

/// Gamma(shape, rate) CDF by quadrature of the density. Accurate to about
/// 1e-10 for the shapes used in the tests.
pub fn gamma_cdf_quad(shape: f64, rate: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if shape < 2.0 {
        // Substitute z = u² to smooth the density's behavior at 0.
        let ln_norm = std::f64::consts::LN_2 + shape * rate.ln() - ln_gamma_half_integer(shape);
        let integrand = |u: f64| {
            if u == 0.0 {
                if 2.0 * shape - 1.0 == 0.0 {
                    ln_norm.exp()
                } else {
                    0.0
                }
            } else {
                (ln_norm + (2.0 * shape - 1.0) * u.ln() - rate * u * u).exp()
            }
        };
        return simpson(integrand, 0.0, z.sqrt(), 20_000);
    }
    simpson(|x| gamma_pdf(shape, rate, x), 0.0, z, 20_000)
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`. Sorts in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the one-sample KS statistic `d` with `n` samples.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Classical fourth-order Runge–Kutta from `(t0, y0)` to `t1` with step `h`
/// (the last step is shortened to land on `t1`). Calls `record` after every
/// full step with the current time and state.
pub fn rk4(
    f: impl Fn(f64, [f64; 2]) -> [f64; 2],
    t0: f64,
    y0: [f64; 2],
    t1: f64,
    h: f64,
    mut record: impl FnMut(f64, [f64; 2]),
) -> [f64; 2] {
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    let mut t = t0;
    let mut y = y0;
    while t < t1 - 1e-12 {
        let step = h.min(t1 - t);
        let k1 = f(t, y);
        let k2 = f(t + step / 2.0, add(y, k1, step / 2.0));
        let k3 = f(t + step / 2.0, add(y, k2, step / 2.0));
        let k4 = f(t + step, add(y, k3, step));
        for i in 0..2 {
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += step;
        record(t, y);
    }
    y
}

/// Central difference of `f` along coordinate `i`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// Discrete power-law exponent by maximum likelihood over `k >= k_min`,
/// using the continuous approximation with the usual half-step shift.
pub fn power_law_mle(degrees: &[usize], k_min: usize) -> f64 {
    let tail: Vec<f64> = degrees
        .iter()
        .filter(|&&k| k >= k_min)
        .map(|&k| k as f64)
        .collect();
    let shift = k_min as f64 - 0.5;
    let s: f64 = tail.iter().map(|k| (k / shift).ln()).sum();
    1.0 + tail.len() as f64 / s
}
