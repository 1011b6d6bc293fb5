//! Load or generate, embed, fit, recover, simulate, solve, report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::spec::{ExperimentSpec, GraphSource, RangeChoice};
use super::{compare, monte_carlo, ComparisonReport, MeanTrajectory};
use crate::analytic::{mean_field, InitialState, PowerPair};
use crate::embedding::{fit_gaussian, optimize, EmbeddingSet, LatentModel};
use crate::error::{Error, Result};
use crate::graph::{generate_power_law, load_edge_list, Graph};
use crate::latent::{connect_probability, range_for_probability, recover_links, RecoveredGraph};
use crate::sim::{CompetitionConfig, RunResult};
use crate::trajectory::Trajectory;

/// Everything upstream of the simulation.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: Graph,
    pub embeddings: EmbeddingSet,
    pub model: LatentModel,
    pub range: f64,
    /// `p(r, σ²)` under the fitted model.
    pub connect_prob: f64,
    pub recovered: RecoveredGraph,
}

pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    let graph = match &spec.graph {
        GraphSource::File(path) => load_edge_list(path),
        GraphSource::PowerLaw {
            nodes,
            exponent,
            seed,
        } => generate_power_law(*nodes, *exponent, *seed),
    }
    .map_err(|e| e.at_stage("graph"))?;
    let embeddings = optimize(&graph, &spec.walk, &spec.train)
        .map_err(|e| e.at_stage("embed"))?
        .embeddings;
    let model = fit_gaussian(&embeddings).map_err(|e| e.at_stage("fit"))?;
    let dim = embeddings.dim();
    let (range, connect_prob) = match spec.range {
        RangeChoice::Range(r) => (r, connect_probability(r, model.variance, dim)),
        RangeChoice::ConnectTarget(p) => (
            range_for_probability(p, model.variance, dim).map_err(|e| e.at_stage("recover"))?,
            Ok(p),
        ),
    };
    let connect_prob = connect_prob.map_err(|e| e.at_stage("recover"))?;
    let recovered = recover_links(&graph, &embeddings, range).map_err(|e| e.at_stage("recover"))?;
    Ok(Prepared {
        graph,
        embeddings,
        model,
        range,
        connect_prob,
        recovered,
    })
}

pub fn competition_config(spec: &ExperimentSpec, prepared: &Prepared) -> CompetitionConfig {
    CompetitionConfig {
        powers: spec.powers,
        range: prepared.range,
        capacity: spec.capacity.unwrap_or(usize::MAX),
        decay: spec.decay,
        strategy: spec.strategy,
        arrival: spec.arrival,
        seeds: spec.seeds,
        horizon: spec.horizon,
        rng_seed: spec.seed,
        connect_prob: Some(prepared.connect_prob),
    }
}

/// Header pairs written at the top of each per-run CSV. They carry
/// everything [`summarize_runs`] needs.
pub fn run_metadata(
    config: &CompetitionConfig,
    index: usize,
    run: &RunResult,
    nodes: usize,
    analytic: bool,
) -> Vec<(String, String)> {
    let mut meta = config.metadata();
    meta.extend([
        ("run".to_string(), index.to_string()),
        ("nodes".to_string(), nodes.to_string()),
        ("connect_prob".to_string(), opt_text(config.connect_prob)),
        (
            "trigger".to_string(),
            opt_text(run.trigger.map(|t| t as f64)),
        ),
        (
            "predicted_trigger".to_string(),
            opt_text(run.predicted_trigger),
        ),
        ("analytic".to_string(), analytic.to_string()),
    ]);
    meta
}

/// Aggregate view of a set of per-run CSVs.
#[derive(Debug, Clone)]
pub struct Summary {
    pub text: String,
    pub mean: MeanTrajectory,
    pub analytic: Option<Trajectory>,
    pub report: Option<ComparisonReport>,
}

fn meta_get<'a>(meta: &'a [(String, String)], key: &str, path: &Path) -> Result<&'a str> {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("missing `# {key}=` header"),
        })
}

fn meta_parse<T: std::str::FromStr>(
    meta: &[(String, String)],
    key: &str,
    path: &Path,
) -> Result<T> {
    let raw = meta_get(meta, key, path)?;
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("bad `{key}` header value {raw:?}"),
    })
}

fn opt_text(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

/// Rebuilds the mean trajectory, the analytic solution and `summary.txt`
/// from per-run CSVs alone. Paths are taken in the given order.
pub fn summarize_runs(paths: &[PathBuf]) -> Result<Summary> {
    if paths.is_empty() {
        return Err(Error::param("no run files to summarize"));
    }
    let mut trajs = Vec::with_capacity(paths.len());
    let mut triggers = Vec::new();
    let mut first_meta: Option<Vec<(String, String)>> = None;
    for path in paths {
        let (tr, meta) = Trajectory::read_csv(path)?;
        match meta_get(&meta, "trigger", path)? {
            "none" => {}
            raw => triggers.push(meta_parse::<usize>(&meta, "trigger", path).map_err(|_| {
                Error::Parse {
                    path: path.clone(),
                    line: 0,
                    message: format!("bad trigger {raw:?}"),
                }
            })?),
        }
        if let Some(m0) = &first_meta {
            for key in [
                "a", "b", "seeds", "capacity", "decay", "strategy", "analytic",
            ] {
                if meta_get(&meta, key, path)? != meta_get(m0, key, &paths[0])? {
                    return Err(Error::config(format!(
                        "{} disagrees with {} on `{key}`",
                        path.display(),
                        paths[0].display()
                    )));
                }
            }
        } else {
            first_meta = Some(meta);
        }
        trajs.push(tr);
    }
    let meta = first_meta.expect("at least one run");
    let p0 = &paths[0];
    let powers = PowerPair::new(meta_parse(&meta, "a", p0)?, meta_parse(&meta, "b", p0)?)?;
    let decay: f64 = meta_parse(&meta, "decay", p0)?;
    let analytic_on: bool = meta_parse(&meta, "analytic", p0)?;
    let predicted: Option<f64> = match meta_get(&meta, "predicted_trigger", p0)? {
        "none" => None,
        _ => Some(meta_parse(&meta, "predicted_trigger", p0)?),
    };

    let refs: Vec<&Trajectory> = trajs.iter().collect();
    let mean = MeanTrajectory::from_runs(&refs)?;
    let observed = (!triggers.is_empty())
        .then(|| triggers.iter().sum::<usize>() as f64 / triggers.len() as f64);

    let (analytic, report) = if analytic_on {
        let start = trajs[0].points[0];
        let init = InitialState::new(start.x1, start.x2).map_err(|e| e.at_stage("analytic"))?;
        let grid: Vec<f64> = mean.points.iter().map(|p| p.t).collect();
        let regime = observed.map(|onset| (decay, onset));
        let tr = mean_field(powers, init, regime, &grid).map_err(|e| e.at_stage("analytic"))?;
        let rep = compare(&mean, &tr, observed.map(|o| (o, decay)))
            .map_err(|e| e.at_stage("analytic"))?;
        (Some(tr), Some(rep))
    } else {
        (None, None)
    };

    let last = *mean.last().expect("non-empty mean");
    let final1: Vec<f64> = trajs
        .iter()
        .map(|t| t.last().expect("non-empty run").share1())
        .collect();
    let (f1, ci) = super::mean_ci(&final1);
    let winner = if f1 > 0.5 {
        "I1"
    } else if f1 < 0.5 {
        "I2"
    } else {
        "tie"
    };

    let mut text = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(text, "{k} = {v}");
    };
    line("runs", paths.len().to_string());
    for key in [
        "a", "b", "seeds", "capacity", "decay", "strategy", "arrival",
    ] {
        line(key, meta_get(&meta, key, p0)?.to_string());
    }
    line("final_t", last.t.to_string());
    line("final_share1", f1.to_string());
    line("final_share1_ci95", ci.to_string());
    line("final_share2", (1.0 - f1).to_string());
    line("winner", winner.to_string());
    line("triggered_runs", triggers.len().to_string());
    line("trigger_observed_mean", opt_text(observed));
    line(
        "trigger_observed_min",
        opt_text(triggers.iter().min().map(|&t| t as f64)),
    );
    line(
        "trigger_observed_max",
        opt_text(triggers.iter().max().map(|&t| t as f64)),
    );
    line("trigger_predicted", opt_text(predicted));
    line(
        "trigger_observed_fraction",
        opt_text(observed.map(|o| o / last.t)),
    );
    if let Some(rep) = &report {
        line("analytic_mae", rep.mae.to_string());
        line("analytic_mae_pre", opt_text(rep.mae_pre));
        line("analytic_mae_window", opt_text(rep.mae_window));
        line("analytic_mae_stabilized", opt_text(rep.mae_stabilized));
    }
    Ok(Summary {
        text,
        mean,
        analytic,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

/// Tracks what a run created so a failure can undo it.
struct Outputs {
    created_dirs: Vec<PathBuf>,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir)?;
            self.created_dirs.push(dir.to_path_buf());
        }
        Ok(())
    }

    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        self.files.push(path.clone());
        fs::write(&path, contents)?;
        Ok(())
    }

    fn cleanup(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir_all(d);
        }
    }
}

/// Loads an experiment file and runs it.
pub fn run_experiment_file(path: impl AsRef<Path>) -> Result<ExperimentOutput> {
    let spec = ExperimentSpec::load(path).map_err(|e| e.at_stage("spec"))?;
    run_experiment(&spec)
}

/// Runs the whole pipeline and writes `embeddings.txt`, `runs/run_NNNN.csv`,
/// `mean.csv`, `analytic.csv` (when enabled) and `summary.txt` under the
/// output directory. On failure every file written so far is removed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = Outputs {
        created_dirs: Vec::new(),
        files: Vec::new(),
    };
    match run_into(spec, &mut out) {
        Ok(summary) => Ok(ExperimentOutput {
            out_dir: spec.out_dir.clone(),
            files: out.files,
            summary,
        }),
        Err(e) => {
            out.cleanup();
            Err(e)
        }
    }
}

fn run_into(spec: &ExperimentSpec, out: &mut Outputs) -> Result<Summary> {
    spec.validate().map_err(|e| e.at_stage("spec"))?;
    let prepared = prepare(spec)?;
    let io = |e: Error| e.at_stage("output");
    out.dir(&spec.out_dir).map_err(io)?;
    out.write(
        spec.out_dir.join("embeddings.txt"),
        &prepared.embeddings.to_text(),
    )
    .map_err(io)?;

    let config = competition_config(spec, &prepared);
    let mc = monte_carlo(
        &prepared.recovered.graph,
        Some(&prepared.embeddings),
        &config,
        spec.replications,
        spec.seed,
    )
    .map_err(|e| e.at_stage("simulate"))?;

    let runs_dir = spec.out_dir.join("runs");
    out.dir(&runs_dir).map_err(io)?;
    let mut run_paths = Vec::with_capacity(mc.runs.len());
    for (i, run) in mc.runs.iter().enumerate() {
        let meta = run_metadata(&config, i, run, prepared.graph.node_count(), spec.analytic);
        let path = runs_dir.join(format!("run_{i:04}.csv"));
        out.write(path.clone(), &run.trajectory.to_csv(&meta))
            .map_err(io)?;
        run_paths.push(path);
    }

    let summary = summarize_runs(&run_paths).map_err(|e| match e {
        Error::Stage { .. } => e,
        other => other.at_stage("report"),
    })?;
    out.write(spec.out_dir.join("mean.csv"), &summary.mean.to_csv())
        .map_err(io)?;
    if let Some(tr) = &summary.analytic {
        out.write(spec.out_dir.join("analytic.csv"), &tr.to_csv(&[]))
            .map_err(io)?;
    }
    out.write(spec.out_dir.join("summary.txt"), &summary.text)
        .map_err(io)?;
    Ok(summary)
}
