//! Mean-field trajectories of the two competing influences.
//!
//! With `t` users infected at time `t`, the expected counts obey
//!
//! ```text
//! dx1/dt = p(t)·a·x1/(a·x1 + b·x2) + (1 − p(t))·x1/(x1 + x2)
//! ```
//!
//! (and symmetrically for `x2`), where `p ≡ 1` before overload. Before
//! overload the solution is the implicit law `C1·x1^{b/a} + x1 = t`. After
//! overload `p` is replaced by its linearization `p̂(t) = max(0, 1 − μ(t − t_c))`,
//! which gives a time-dependent coefficient until `t_c + 1/μ` and linear
//! (share-preserving) growth afterwards.
//!
//! Each count is solved from its own implicit equation; conservation
//! `x1 + x2 = t` is checked, never imposed.

mod ordering;
mod roots;

pub use ordering::{rho, theorem4_check, OrderingPoint, OrderingReport};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Conservation tolerance, relative to `t`.
pub const CONSERVATION_TOL: f64 = 1e-6;

/// Influence powers of the two competitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair {
    pub a: f64,
    pub b: f64,
}

impl PowerPair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::param(format!(
                "influence powers must be positive and finite, got a={a}, b={b}"
            )));
        }
        Ok(PowerPair { a, b })
    }
}

/// Expected counts at the start of a regime. By convention `t0 = x1 + x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub t0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl InitialState {
    /// Builds a state from the two counts; `t0` is their sum.
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        Self::at(x1 + x2, x1, x2)
    }

    pub fn at(t0: f64, x1: f64, x2: f64) -> Result<Self> {
        if !(x1 > 0.0 && x2 > 0.0 && x1.is_finite() && x2.is_finite()) {
            return Err(Error::param(format!(
                "initial counts must be positive, got x1={x1}, x2={x2}"
            )));
        }
        if (x1 + x2 - t0).abs() > 1e-9 * t0 {
            return Err(Error::param(format!(
                "initial counts must sum to t0 ({x1} + {x2} != {t0})"
            )));
        }
        Ok(InitialState { t0, x1, x2 })
    }
}

fn check_grid(grid: &[f64], start: f64) -> Result<()> {
    let slack = 1e-12 * start.abs();
    if let Some(&first) = grid.first() {
        if first < start - slack {
            return Err(Error::param(format!(
                "time grid starts at {first}, before the regime start {start}"
            )));
        }
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("time grid must be strictly increasing"));
    }
    Ok(())
}

fn conserved(t: f64, x1: f64, x2: f64) -> Result<()> {
    let gap = (x1 + x2 - t).abs();
    if gap > CONSERVATION_TOL * t {
        return Err(Error::Solver {
            t,
            message: format!("x1 + x2 = {} misses t by {gap:e}", x1 + x2),
        });
    }
    Ok(())
}

/// Right-hand side of the pre-overload mean-field ODE.
pub fn pre_overload_rate(powers: PowerPair, x1: f64, x2: f64) -> (f64, f64) {
    let denom = powers.a * x1 + powers.b * x2;
    (powers.a * x1 / denom, powers.b * x2 / denom)
}

/// Right-hand side of the post-overload mean-field ODE with discrimination
/// probability `p`.
pub fn post_overload_rate(powers: PowerPair, p: f64, x1: f64, x2: f64) -> (f64, f64) {
    let (d1, d2) = pre_overload_rate(powers, x1, x2);
    let total = x1 + x2;
    (
        p * d1 + (1.0 - p) * x1 / total,
        p * d2 + (1.0 - p) * x2 / total,
    )
}

/// Solves `C1·x1^{b/a} + x1 = t` and `C2·x2^{a/b} + x2 = t` on each grid
/// point, with `C1 = x2(t0)/x1(t0)^{b/a}` and `C2 = x1(t0)/x2(t0)^{a/b}`.
pub fn pre_overload(powers: PowerPair, init: InitialState, grid: &[f64]) -> Result<Trajectory> {
    check_grid(grid, init.t0)?;
    let (k1, k2) = (powers.b / powers.a, powers.a / powers.b);
    let log_c1 = init.x2.ln() - k1 * init.x1.ln();
    let log_c2 = init.x1.ln() - k2 * init.x2.ln();
    let mut out = Trajectory::default();
    for &t in grid {
        let x1 = roots::solve_power_balance(log_c1, k1, t)?;
        let x2 = roots::solve_power_balance(log_c2, k2, t)?;
        conserved(t, x1, x2)?;
        out.push(t, x1, x2);
    }
    Ok(out)
}

/// Closed forms available for `a/b ∈ {1/2, 1, 2}`.
pub fn corollary_closed_form(ratio: f64, init: InitialState, t: f64) -> Result<(f64, f64)> {
    let close = |v: f64| (ratio - v).abs() <= 1e-12 * v;
    let (x1_0, x2_0, t0) = (init.x1, init.x2, init.t0);
    if close(1.0) {
        return Ok((x1_0 / t0 * t, x2_0 / t0 * t));
    }
    // For a/b = 1/2 the weaker count is quadratic-implicit and the stronger
    // one square-root-implicit; a/b = 2 swaps the roles.
    let (weak0, strong0, swap) = if close(0.5) {
        (x1_0, x2_0, false)
    } else if close(2.0) {
        (x2_0, x1_0, true)
    } else {
        return Err(Error::param(format!(
            "closed form only exists for a/b in {{1/2, 1, 2}}, got {ratio}"
        )));
    };
    let c_weak = strong0 / (weak0 * weak0);
    let c_strong = weak0 / strong0.sqrt();
    let weak = ((4.0 * c_weak * t + 1.0).sqrt() - 1.0) / (2.0 * c_weak);
    let strong =
        t - 0.5 * (c_strong * (4.0 * t + c_strong * c_strong).sqrt() - c_strong * c_strong);
    Ok(if swap { (strong, weak) } else { (weak, strong) })
}

/// Probability that an overloaded riser still weighs influence powers.
///
/// Exact mode: `e^{−μ(t − t_c)}`. Linearized: `max(0, 1 − μ(t − t_c))`.
pub fn discrimination_prob(t: f64, decay: f64, onset: f64, linearized: bool) -> Result<f64> {
    if t < onset {
        return Err(Error::domain(format!(
            "discrimination probability is defined from the overload onset {onset}, got t = {t}"
        )));
    }
    let elapsed = t - onset;
    Ok(if linearized {
        if t >= onset + 1.0 / decay {
            0.0
        } else {
            (1.0 - decay * elapsed).max(0.0)
        }
    } else {
        (-decay * elapsed).exp()
    })
}

/// Post-overload regime anchored at the state reached at the onset.
///
/// Constants are kept in log form: `C3` carries `t_c^{((b−a)/a)μ t_c}`,
/// which overflows for realistic onsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverloadRegime {
    pub powers: PowerPair,
    pub decay: f64,
    pub onset: f64,
    pub anchor: InitialState,
    pub log_c3: f64,
    pub log_c4: f64,
}

impl OverloadRegime {
    pub fn new(powers: PowerPair, decay: f64, anchor: InitialState) -> Result<Self> {
        if !(decay > 0.0 && decay.is_finite()) {
            return Err(Error::param(format!(
                "decay rate must be positive, got {decay}"
            )));
        }
        let (a, b, tc) = (powers.a, powers.b, anchor.t0);
        let log_c3 = anchor.x2.ln()
            - ((b - a) / a) * decay * tc * tc.ln()
            - ((a - b) / a) * decay * tc
            - (b / a) * anchor.x1.ln();
        let log_c4 = anchor.x1.ln()
            - ((a - b) / b) * decay * tc * tc.ln()
            - ((b - a) / b) * decay * tc
            - (a / b) * anchor.x2.ln();
        Ok(OverloadRegime {
            powers,
            decay,
            onset: tc,
            anchor,
            log_c3,
            log_c4,
        })
    }

    /// End of the transition window, `t_c + 1/μ`.
    pub fn stabilization_time(&self) -> f64 {
        self.onset + 1.0 / self.decay
    }

    pub fn c3(&self) -> f64 {
        self.log_c3.exp()
    }

    pub fn c4(&self) -> f64 {
        self.log_c4.exp()
    }

    /// `ln` of the time-varying coefficients multiplying `x1^{b/a}` and
    /// `x2^{a/b}` in the transition-window equations. Written relative to the
    /// anchor to avoid huge cancelling terms.
    fn log_coefficients(&self, t: f64) -> (f64, f64) {
        let (a, b, mu, tc) = (self.powers.a, self.powers.b, self.decay, self.onset);
        let ln_ratio = (t / tc).ln();
        let dt = t - tc;
        let base1 = self.anchor.x2.ln() - (b / a) * self.anchor.x1.ln();
        let base2 = self.anchor.x1.ln() - (a / b) * self.anchor.x2.ln();
        (
            base1 + ((b - a) / a) * mu * tc * ln_ratio + ((a - b) / a) * mu * dt,
            base2 + ((a - b) / b) * mu * tc * ln_ratio + ((b - a) / b) * mu * dt,
        )
    }

    fn window_point(&self, t: f64) -> Result<(f64, f64)> {
        let (a, b) = (self.powers.a, self.powers.b);
        let (l1, l2) = self.log_coefficients(t);
        let x1 = roots::solve_power_balance(l1, b / a, t)?;
        let x2 = roots::solve_power_balance(l2, a / b, t)?;
        conserved(t, x1, x2)?;
        Ok((x1, x2))
    }

    /// Residual of the transition-window equation for `x1`, relative to `t`.
    pub fn residual_x1(&self, t: f64, x1: f64) -> f64 {
        let (l1, _) = self.log_coefficients(t);
        ((l1 + (self.powers.b / self.powers.a) * x1.ln()).exp() + x1 - t) / t
    }

    /// Residual of the transition-window equation for `x2`, relative to `t`.
    pub fn residual_x2(&self, t: f64, x2: f64) -> f64 {
        let (_, l2) = self.log_coefficients(t);
        ((l2 + (self.powers.a / self.powers.b) * x2.ln()).exp() + x2 - t) / t
    }

    /// Expected counts at time `t >= t_c`.
    pub fn at(&self, t: f64) -> Result<(f64, f64)> {
        if t < self.onset * (1.0 - 1e-12) {
            return Err(Error::domain(format!(
                "post-overload solution starts at {}, got t = {t}",
                self.onset
            )));
        }
        let ts = self.stabilization_time();
        if t < ts {
            self.window_point(t)
        } else {
            let (x1s, x2s) = self.window_point(ts)?;
            Ok((x1s / ts * t, x2s / ts * t))
        }
    }
}

/// Post-overload trajectory on `grid`, anchored at `anchor` (whose `t0` is
/// the overload onset).
pub fn post_overload(
    powers: PowerPair,
    decay: f64,
    anchor: InitialState,
    grid: &[f64],
) -> Result<Trajectory> {
    check_grid(grid, anchor.t0)?;
    let regime = OverloadRegime::new(powers, decay, anchor)?;
    let mut out = Trajectory::default();
    for &t in grid {
        let (x1, x2) = regime.at(t)?;
        out.push(t, x1, x2);
    }
    Ok(out)
}

/// Mean-field trajectory over both regimes: pre-overload from `init` until
/// `onset`, then post-overload anchored at the mean-field state at `onset`.
/// With `overload = None` the pre-overload law holds throughout.
pub fn mean_field(
    powers: PowerPair,
    init: InitialState,
    overload: Option<(f64, f64)>,
    grid: &[f64],
) -> Result<Trajectory> {
    let Some((decay, onset)) = overload else {
        return pre_overload(powers, init, grid);
    };
    check_grid(grid, init.t0)?;
    let anchor = if onset <= init.t0 {
        init
    } else {
        let at_onset = pre_overload(powers, init, &[onset])?;
        let p = at_onset.points[0];
        InitialState::at(onset, p.x1, p.x2)?
    };
    let split = grid.partition_point(|&t| t < anchor.t0);
    let mut out = pre_overload(powers, init, &grid[..split])?;
    let post = post_overload(powers, decay, anchor, &grid[split..])?;
    out.points.extend(post.points);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn init_40() -> InitialState {
        InitialState::new(16.0, 24.0).unwrap()
    }

    #[test]
    fn equal_powers_preserve_shares() {
        let p = PowerPair::new(1.5, 1.5).unwrap();
        let grid = [40.0, 77.0, 200.0, 1e4];
        let tr = pre_overload(p, init_40(), &grid).unwrap();
        for pt in &tr.points {
            assert!((pt.x1 - 16.0 / 40.0 * pt.t).abs() <= 1e-9 * pt.t);
        }
    }

    #[test]
    fn half_power_example() {
        let p = PowerPair::new(1.0, 2.0).unwrap();
        let tr = pre_overload(p, init_40(), &[100.0]).unwrap();
        let c1: f64 = 0.09375;
        let want = ((4.0 * c1 * 100.0 + 1.0).sqrt() - 1.0) / (2.0 * c1);
        assert!((tr.points[0].x1 - want).abs() < 1e-9);
        assert!((tr.points[0].x1 - 27.7591).abs() < 1e-4);
    }

    #[test]
    fn stronger_takes_all() {
        let p = PowerPair::new(1.0, 2.0).unwrap();
        let tr = pre_overload(p, init_40(), &[1e6]).unwrap();
        let pt = tr.points[0];
        assert!(pt.share2() > 0.99);
        assert!(pt.share1() < 0.01);
    }

    #[test]
    fn corollary_cases() {
        let (x1, x2) = corollary_closed_form(1.0, init_40(), 200.0).unwrap();
        assert!((x1 - 80.0).abs() < 1e-12 && (x2 - 120.0).abs() < 1e-12);
        let (x1, _) = corollary_closed_form(0.5, init_40(), 100.0).unwrap();
        assert!((x1 - 27.7591).abs() < 1e-4);
        assert!(corollary_closed_form(3.0, init_40(), 100.0).is_err());
    }

    #[test]
    fn discrimination_modes() {
        assert_eq!(discrimination_prob(5.0, 10.0, 5.0, false).unwrap(), 1.0);
        assert_eq!(discrimination_prob(5.0, 10.0, 5.0, true).unwrap(), 1.0);
        assert_eq!(discrimination_prob(5.1, 10.0, 5.0, true).unwrap(), 0.0);
        assert_eq!(discrimination_prob(9.0, 10.0, 5.0, true).unwrap(), 0.0);
        let e = discrimination_prob(100.1, 10.0, 100.0, false).unwrap();
        assert!((e - (-1.0f64).exp()).abs() < 1e-12);
        assert!((e - 0.367879).abs() < 1e-6);
        assert!(discrimination_prob(4.0, 10.0, 5.0, false).is_err());
    }

    #[test]
    fn post_overload_equal_powers_is_linear() {
        let p = PowerPair::new(2.0, 2.0).unwrap();
        let anchor = InitialState::new(30.0, 70.0).unwrap();
        let regime = OverloadRegime::new(p, 10.0, anchor).unwrap();
        assert!((regime.log_c3 - (70.0f64 / 30.0).ln()).abs() < 1e-12);
        let tr = post_overload(p, 10.0, anchor, &[100.0, 100.05, 100.1, 150.0, 500.0]).unwrap();
        for pt in &tr.points {
            assert!((pt.share1() - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn post_overload_stable_shares() {
        let p = PowerPair::new(1.0, 2.0).unwrap();
        let anchor = InitialState::new(30.0, 70.0).unwrap();
        let tr = post_overload(p, 10.0, anchor, &[120.0, 240.0]).unwrap();
        let (a, b) = (tr.points[0], tr.points[1]);
        assert!((a.x1 / a.t - b.x1 / b.t).abs() < 1e-12);
    }

    #[test]
    fn post_overload_window_residuals() {
        let p = PowerPair::new(1.0, 2.0).unwrap();
        let anchor = InitialState::new(30.0, 70.0).unwrap();
        let regime = OverloadRegime::new(p, 10.0, anchor).unwrap();
        for i in 0..50 {
            let t = 100.0 + 0.1 * i as f64 / 50.0;
            let (x1, x2) = regime.at(t).unwrap();
            assert!(regime.residual_x1(t, x1).abs() < 1e-9);
            assert!(regime.residual_x2(t, x2).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_validation() {
        let p = PowerPair::new(1.0, 2.0).unwrap();
        assert!(pre_overload(p, init_40(), &[30.0]).is_err());
        assert!(pre_overload(p, init_40(), &[50.0, 45.0]).is_err());
        assert!(InitialState::at(41.0, 16.0, 24.0).is_err());
        assert!(InitialState::new(0.0, 24.0).is_err());
        assert!(PowerPair::new(0.0, 1.0).is_err());
    }

    #[test]
    fn mean_field_switches_regime() {
        let p = PowerPair::new(1.0, 2.0).unwrap();
        let grid: Vec<f64> = (40..=2000).step_by(10).map(|t| t as f64).collect();
        let tr = mean_field(p, init_40(), Some((10.0, 200.0)), &grid).unwrap();
        let before = tr.share1_at(200.0).unwrap();
        let after = tr.share1_at(2000.0).unwrap();
        assert!((before - after).abs() < 0.01);
        let free = mean_field(p, init_40(), None, &grid).unwrap();
        assert!(free.share1_at(2000.0).unwrap() < after);
    }
}
