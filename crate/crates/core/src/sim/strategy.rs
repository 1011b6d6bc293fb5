//! Priority rules an overloaded riser falls back on.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Uniform};

use super::Influence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Adopt the influence whose message arrives first.
    #[default]
    First,
    /// Adopt the influence whose message arrives last.
    Latest,
    /// Copy the influenced neighbor closest in the latent space.
    MostSimilar,
    /// Copy the influenced neighbor with the largest degree.
    HighestDegree,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::First,
        Strategy::Latest,
        Strategy::MostSimilar,
        Strategy::HighestDegree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::First => "first",
            Strategy::Latest => "latest",
            Strategy::MostSimilar => "most_similar",
            Strategy::HighestDegree => "highest_degree",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown strategy {s:?} (expected first, latest, most_similar or highest_degree)"
                ))
            })
    }
}

/// Distribution of message arrival times for the first/latest rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalDist {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl Default for ArrivalDist {
    fn default() -> Self {
        ArrivalDist::Exponential { rate: 1.0 }
    }
}

impl ArrivalDist {
    pub fn sampler(&self) -> Result<ArrivalSampler> {
        let bad = |e: &dyn fmt::Display| Error::param(format!("arrival distribution {self}: {e}"));
        Ok(match *self {
            ArrivalDist::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(bad(&"rate must be positive"));
                }
                ArrivalSampler::Exponential(Exp::new(rate).map_err(|e| bad(&e))?)
            }
            ArrivalDist::Uniform { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(bad(&"need lo < hi"));
                }
                ArrivalSampler::Uniform(Uniform::new(lo, hi).map_err(|e| bad(&e))?)
            }
            ArrivalDist::LogNormal { mu, sigma } => {
                if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
                    return Err(bad(&"sigma must be positive"));
                }
                ArrivalSampler::LogNormal(LogNormal::new(mu, sigma).map_err(|e| bad(&e))?)
            }
        })
    }
}

impl fmt::Display for ArrivalDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrivalDist::Exponential { rate } => write!(f, "exponential({rate})"),
            ArrivalDist::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            ArrivalDist::LogNormal { mu, sigma } => write!(f, "lognormal({mu},{sigma})"),
        }
    }
}

impl FromStr for ArrivalDist {
    type Err = Error;

    /// Parses `exponential(rate)`, `uniform(lo,hi)` or `lognormal(mu,sigma)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::config(format!(
                "bad arrival distribution {s:?} (expected exponential(rate), uniform(lo,hi) or lognormal(mu,sigma))"
            ))
        };
        let s = s.trim();
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let dist = match (name.trim(), nums.as_slice()) {
            ("exponential", &[rate]) => ArrivalDist::Exponential { rate },
            ("uniform", &[lo, hi]) => ArrivalDist::Uniform { lo, hi },
            ("lognormal", &[mu, sigma]) => ArrivalDist::LogNormal { mu, sigma },
            _ => return Err(bad()),
        };
        dist.sampler()?;
        Ok(dist)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ArrivalSampler {
    Exponential(Exp<f64>),
    Uniform(Uniform<f64>),
    LogNormal(LogNormal<f64>),
}

impl Distribution<f64> for ArrivalSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArrivalSampler::Exponential(d) => d.sample(rng),
            ArrivalSampler::Uniform(d) => d.sample(rng),
            ArrivalSampler::LogNormal(d) => d.sample(rng),
        }
    }
}

/// Index of the best key under `better`, ties broken uniformly by reservoir
/// sampling.
fn select_uniform_tie<R: Rng + ?Sized>(
    keys: impl Iterator<Item = f64>,
    better: impl Fn(f64, f64) -> bool,
    rng: &mut R,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut ties = 0u32;
    for (i, k) in keys.enumerate() {
        match best {
            None => {
                best = Some((i, k));
                ties = 1;
            }
            Some((_, b)) if better(k, b) => {
                best = Some((i, k));
                ties = 1;
            }
            Some((_, b)) if k == b => {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    best = Some((i, k));
                }
            }
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}

/// Labels of the influenced neighbors; each gets an i.i.d. arrival time and
/// the earliest wins. Panics on an empty slice.
pub fn strategy_first<R: Rng + ?Sized>(
    labels: &[Influence],
    arrival: &ArrivalSampler,
    rng: &mut R,
) -> Influence {
    let times: Vec<f64> = labels.iter().map(|_| arrival.sample(rng)).collect();
    let idx = select_uniform_tie(times.into_iter(), |a, b| a < b, rng)
        .expect("strategy needs at least one influenced neighbor");
    labels[idx]
}

/// As [`strategy_first`], but the latest arrival wins.
pub fn strategy_latest<R: Rng + ?Sized>(
    labels: &[Influence],
    arrival: &ArrivalSampler,
    rng: &mut R,
) -> Influence {
    let times: Vec<f64> = labels.iter().map(|_| arrival.sample(rng)).collect();
    let idx = select_uniform_tie(times.into_iter(), |a, b| a > b, rng)
        .expect("strategy needs at least one influenced neighbor");
    labels[idx]
}

/// `(label, squared latent distance to the riser)` per influenced neighbor.
pub fn strategy_most_similar<R: Rng + ?Sized>(
    candidates: &[(Influence, f64)],
    rng: &mut R,
) -> Influence {
    let idx = select_uniform_tie(candidates.iter().map(|c| c.1), |a, b| a < b, rng)
        .expect("strategy needs at least one influenced neighbor");
    candidates[idx].0
}

/// `(label, degree)` per influenced neighbor.
pub fn strategy_highest_degree<R: Rng + ?Sized>(
    candidates: &[(Influence, usize)],
    rng: &mut R,
) -> Influence {
    let idx = select_uniform_tie(candidates.iter().map(|c| c.1 as f64), |a, b| a > b, rng)
        .expect("strategy needs at least one influenced neighbor");
    candidates[idx].0
}
