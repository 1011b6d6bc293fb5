//! Comparison of the free-running and overloaded regimes from a shared
//! initial state.

use super::{post_overload, pre_overload, InitialState, PowerPair};
use crate::error::Result;

/// Gain factor of the winner's coefficient after `Δ` time units of
/// overload: `[e / (1 + Δ/t0)^{t0/Δ}]^{((a−b)/a)μΔ}`.
pub fn rho(elapsed: f64, t0: f64, decay: f64, a: f64, b: f64) -> f64 {
    if elapsed == 0.0 || a == b {
        return 1.0;
    }
    let bracket = elapsed - t0 * (elapsed / t0).ln_1p();
    (((a - b) / a) * decay * bracket).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingPoint {
    pub t: f64,
    /// Winner's count without overload.
    pub winner_free: f64,
    /// Winner's count with overload starting at `t0`.
    pub winner_overloaded: f64,
    pub loser_free: f64,
    pub loser_overloaded: f64,
    /// Overloaded winner count does not exceed the free one.
    pub winner_ok: bool,
    /// Overloaded loser count is not below the free one.
    pub loser_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    pub points: Vec<OrderingPoint>,
    /// Largest violation of either inequality, as a share of `t`.
    pub max_violation: f64,
}

impl OrderingReport {
    /// Number of grid points where a violation exceeds `tol` (share units).
    pub fn violations(&self, tol: f64) -> usize {
        self.points
            .iter()
            .filter(|p| {
                (p.winner_overloaded - p.winner_free) / p.t > tol
                    || (p.loser_free - p.loser_overloaded) / p.t > tol
            })
            .count()
    }
}

/// Compares free-running growth with overload starting at `init.t0`. The
/// winner is the influence with the larger power (`I1` on ties).
pub fn theorem4_check(
    powers: PowerPair,
    decay: f64,
    init: InitialState,
    grid: &[f64],
) -> Result<OrderingReport> {
    let free = pre_overload(powers, init, grid)?;
    let over = post_overload(powers, decay, init, grid)?;
    let first_wins = powers.a >= powers.b;
    let mut max_violation = 0.0f64;
    let points = free
        .points
        .iter()
        .zip(&over.points)
        .map(|(f, o)| {
            let (wf, wo, lf, lo) = if first_wins {
                (f.x1, o.x1, f.x2, o.x2)
            } else {
                (f.x2, o.x2, f.x1, o.x1)
            };
            max_violation = max_violation.max((wo - wf) / f.t).max((lf - lo) / f.t);
            OrderingPoint {
                t: f.t,
                winner_free: wf,
                winner_overloaded: wo,
                loser_free: lf,
                loser_overloaded: lo,
                winner_ok: wo <= wf,
                loser_ok: lo >= lf,
            }
        })
        .collect();
    Ok(OrderingReport {
        points,
        max_violation: max_violation.max(0.0),
    })
}
