use crate::error::{Error, Result};

/// Relative bracket width at which bisection hands over to Newton.
const BISECT_TOL: f64 = 1e-6;
/// Relative Newton step accepted as converged.
pub(crate) const NEWTON_TOL: f64 = 1e-10;
const MAX_BISECT: usize = 200;
const MAX_NEWTON: usize = 60;

/// Solves `K·x^k + x = t` for `x ∈ (0, t)`, with `K = exp(log_coef) > 0`
/// and `k > 0`.
///
/// The left side is strictly increasing from 0 to `t + K·t^k`, so the root
/// is always bracketed by `(0, t)`. Geometric bisection narrows it to a
/// relative width of 1e-6, then Newton polishes to 1e-10 and beyond. A
/// Newton step that leaves the bracket is replaced by a bisection step.
pub(crate) fn solve_power_balance(log_coef: f64, exponent: f64, t: f64) -> Result<f64> {
    let fail = |message: String| Error::Solver { t, message };
    if !(t > 0.0) || !t.is_finite() {
        return Err(fail("time must be positive and finite".into()));
    }
    if !(exponent > 0.0) || !log_coef.is_finite() {
        return Err(fail(format!(
            "invalid coefficients (ln K = {log_coef}, k = {exponent})"
        )));
    }
    let residual = |x: f64| (log_coef + exponent * x.ln()).exp() + x - t;
    let slope = |x: f64| exponent * (log_coef + (exponent - 1.0) * x.ln()).exp() + 1.0;

    let mut hi = t;
    let top = residual(hi);
    if top == 0.0 {
        // K·t^k is below the resolution of t.
        return Ok(t);
    }
    if top < 0.0 {
        return Err(fail("root not bracketed by (0, t)".into()));
    }
    // Walk the lower end down geometrically; the root can be many orders of
    // magnitude below t when K is large.
    let mut lo = 0.5 * t;
    while residual(lo) >= 0.0 {
        hi = lo;
        lo *= 1e-3;
        if lo < f64::MIN_POSITIVE {
            return Err(fail("root below the smallest positive double".into()));
        }
    }
    let mut iter = 0;
    while hi / lo - 1.0 > BISECT_TOL && iter < MAX_BISECT {
        let mid = (lo * hi).sqrt();
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - r / slope(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            return Ok(x);
        }
    }
    let rel = (hi - lo) / hi;
    if rel <= NEWTON_TOL {
        Ok(x)
    } else {
        Err(fail(format!("did not converge (relative bracket {rel:e})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_case_matches_formula() {
        // C x² + x = t  →  x = (√(4Ct+1) − 1) / 2C
        let c: f64 = 0.09375;
        for &t in &[40.0, 100.0, 1e4, 1e7] {
            let x = solve_power_balance(c.ln(), 2.0, t).unwrap();
            let want = ((4.0 * c * t + 1.0).sqrt() - 1.0) / (2.0 * c);
            assert!((x - want).abs() <= 1e-13 * want, "t={t}: {x} vs {want}");
        }
    }

    #[test]
    fn linear_case() {
        // K x + x = t
        let x = solve_power_balance(1.5f64.ln(), 1.0, 10.0).unwrap();
        assert!((x - 4.0).abs() < 1e-13);
    }

    #[test]
    fn extreme_coefficients() {
        let x = solve_power_balance(300.0, 2.0, 50.0).unwrap();
        assert!(x > 0.0 && x < 1e-60);
        let x = solve_power_balance(-300.0, 0.5, 50.0).unwrap();
        assert!((x - 50.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_power_balance(0.0, 2.0, 0.0).is_err());
        assert!(solve_power_balance(f64::NAN, 2.0, 1.0).is_err());
        assert!(solve_power_balance(0.0, -1.0, 1.0).is_err());
    }
}
