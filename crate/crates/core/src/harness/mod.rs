//! Monte Carlo replication, analytic comparison and the end-to-end
//! experiment pipeline.

mod pipeline;
mod spec;

pub use pipeline::{
    competition_config, prepare, run_experiment, run_experiment_file, run_metadata, summarize_runs,
    ExperimentOutput, Prepared, Summary,
};
pub use spec::{ExperimentSpec, GraphSource, RangeChoice, SPEC_KEYS};

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sim::{run_with_rng, CompetitionConfig, RunResult};
use crate::trajectory::Trajectory;

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;

pub const MEAN_CSV_HEADER: &str = "t,fraction,share1,share1_ci95,share2,share2_ci95";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPoint {
    pub t: f64,
    pub share1: f64,
    /// Half-width of the 95% normal-approximation interval; 0 for one run.
    pub ci1: f64,
    pub share2: f64,
    pub ci2: f64,
}

/// Per-step mean shares over replications aligned on the step count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeanTrajectory {
    pub points: Vec<MeanPoint>,
    pub runs: usize,
}

impl MeanTrajectory {
    /// Aligns runs on step index. A run that stopped early keeps its final
    /// shares for the remaining steps.
    pub fn from_runs(runs: &[&Trajectory]) -> Result<Self> {
        let Some(first) = runs.first().and_then(|r| r.first()) else {
            return Err(Error::param("need at least one non-empty run"));
        };
        let t0 = first.t;
        if runs.iter().any(|r| r.first().map(|p| p.t) != Some(t0)) {
            return Err(Error::param("runs start at different times"));
        }
        let steps = runs.iter().map(|r| r.len()).max().unwrap_or(0);
        let r = runs.len() as f64;
        let mut points = Vec::with_capacity(steps);
        let mut shares = vec![0.0; runs.len()];
        for k in 0..steps {
            for (s, run) in shares.iter_mut().zip(runs) {
                let p = &run.points[k.min(run.len() - 1)];
                *s = p.share1();
            }
            let (m1, ci1) = mean_ci(&shares);
            let m2 = shares.iter().map(|s| 1.0 - s).sum::<f64>() / r;
            points.push(MeanPoint {
                t: t0 + k as f64,
                share1: m1,
                ci1,
                share2: m2,
                ci2: ci1,
            });
        }
        Ok(MeanTrajectory {
            points,
            runs: runs.len(),
        })
    }

    pub fn last(&self) -> Option<&MeanPoint> {
        self.points.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# runs={}\n{MEAN_CSV_HEADER}\n", self.runs);
        let end = self.last().map_or(1.0, |p| p.t);
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.t,
                p.t / end,
                p.share1,
                p.ci1,
                p.share2,
                p.ci2
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut runs = 0;
        let mut points = Vec::new();
        let mut seen_header = false;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(("runs", v)) = rest.trim().split_once('=') {
                    runs = v
                        .trim()
                        .parse()
                        .map_err(|_| err(idx + 1, format!("bad run count {v:?}")))?;
                }
                continue;
            }
            if !seen_header {
                if line != MEAN_CSV_HEADER {
                    return Err(err(idx + 1, format!("expected header {MEAN_CSV_HEADER:?}")));
                }
                seen_header = true;
                continue;
            }
            let f = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(idx + 1, e.to_string()))?;
            if f.len() != 6 {
                return Err(err(
                    idx + 1,
                    format!("expected 6 columns, found {}", f.len()),
                ));
            }
            points.push(MeanPoint {
                t: f[0],
                share1: f[2],
                ci1: f[3],
                share2: f[4],
                ci2: f[5],
            });
        }
        if !seen_header {
            return Err(err(0, "missing CSV header".into()));
        }
        Ok(MeanTrajectory { points, runs })
    }
}

/// Sample mean and 95% half-width; the half-width is 0 for fewer than two
/// samples.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

#[derive(Debug, Clone)]
pub struct MonteCarlo {
    /// Runs in replication order.
    pub runs: Vec<RunResult>,
    pub mean: MeanTrajectory,
}

impl MonteCarlo {
    /// Observed onsets of the runs that became overloaded.
    pub fn triggers(&self) -> Vec<usize> {
        self.runs.iter().filter_map(|r| r.trigger).collect()
    }

    pub fn mean_trigger(&self) -> Option<f64> {
        let t = self.triggers();
        (!t.is_empty()).then(|| t.iter().sum::<usize>() as f64 / t.len() as f64)
    }
}

/// Generator for replication `index`: stream `index` of the master seed.
pub fn replication_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

/// `replications` independent runs in parallel, one RNG stream each.
pub fn monte_carlo(
    graph: &Graph,
    embeddings: Option<&EmbeddingSet>,
    config: &CompetitionConfig,
    replications: usize,
    master_seed: u64,
) -> Result<MonteCarlo> {
    if replications < 1 {
        return Err(Error::param("replications must be at least 1"));
    }
    config.validate(graph, embeddings)?;
    let runs = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(master_seed, i);
            run_with_rng(graph, embeddings, config, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let trajs: Vec<&Trajectory> = runs.iter().map(|r| &r.trajectory).collect();
    let mean = MeanTrajectory::from_runs(&trajs)?;
    Ok(MonteCarlo { runs, mean })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonPoint {
    pub t: f64,
    pub empirical: f64,
    pub ci: f64,
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub points: Vec<ComparisonPoint>,
    /// Mean absolute error of the `I1` share over the overlap.
    pub mae: f64,
    /// Breakdown by regime: before overload, inside `[t_c, t_c + 1/μ)`, and
    /// after. `None` when a branch has no points.
    pub mae_pre: Option<f64>,
    pub mae_window: Option<f64>,
    pub mae_stabilized: Option<f64>,
}

/// Compares mean simulated `I1` shares with an analytic trajectory over
/// their common time range. `regime` is `(onset, decay)` when the analytic
/// side includes overload.
pub fn compare(
    empirical: &MeanTrajectory,
    analytic: &Trajectory,
    regime: Option<(f64, f64)>,
) -> Result<ComparisonReport> {
    let points: Vec<ComparisonPoint> = empirical
        .points
        .iter()
        .filter_map(|p| {
            analytic.share1_at(p.t).map(|a| ComparisonPoint {
                t: p.t,
                empirical: p.share1,
                ci: p.ci1,
                analytic: a,
            })
        })
        .collect();
    if points.is_empty() {
        return Err(Error::domain(
            "empirical and analytic trajectories do not overlap",
        ));
    }
    let mae_of = |pred: &dyn Fn(f64) -> bool| {
        let errs: Vec<f64> = points
            .iter()
            .filter(|p| pred(p.t))
            .map(|p| (p.empirical - p.analytic).abs())
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    };
    let mae = mae_of(&|_| true).unwrap_or(0.0);
    let (mae_pre, mae_window, mae_stabilized) = match regime {
        None => (Some(mae), None, None),
        Some((onset, decay)) => {
            let end = onset + 1.0 / decay;
            (
                mae_of(&|t| t < onset),
                mae_of(&|t| t >= onset && t < end),
                mae_of(&|t| t >= end),
            )
        }
    };
    Ok(ComparisonReport {
        points,
        mae,
        mae_pre,
        mae_window,
        mae_stabilized,
    })
}
