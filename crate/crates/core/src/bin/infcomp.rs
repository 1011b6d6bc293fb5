use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infcomp::analytic::{mean_field, InitialState, PowerPair};
use infcomp::embedding::{
    fit_gaussian, optimize, EmbeddingSet, OptimizerMode, TrainParams, WalkParams,
};
use infcomp::graph::{generate_power_law, load_edge_list};
use infcomp::harness::{
    compare, monte_carlo, run_experiment, run_metadata, summarize_runs, ExperimentSpec,
    MeanTrajectory, SPEC_KEYS,
};
use infcomp::latent::{connect_probability, range_for_probability, recover_links};
use infcomp::sim::{ArrivalDist, CompetitionConfig, Strategy};
use infcomp::trajectory::{log_grid, Trajectory, DEFAULT_GRID_POINTS};
use infcomp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "infcomp",
    version,
    about = "Competing influences under information overload"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a power-law configuration-model graph.
    Generate {
        #[arg(long, default_value_t = 2000)]
        nodes: usize,
        #[arg(long, default_value_t = 2.5)]
        exponent: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output edge list.
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a graph and report the fitted latent variance.
    Embed(EmbedArgs),
    /// Add latent links between users closer than the influence range.
    Recover {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Influence range r (squared latent distance).
        #[arg(
            long,
            conflicts_with = "connect_target",
            required_unless_present = "connect_target"
        )]
        range: Option<f64>,
        /// Pick r so that p(r, sigma^2) equals this value.
        #[arg(long)]
        connect_target: Option<f64>,
        /// Output edge list; latent edges are marked `# latent`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run Monte Carlo simulations on a (recovered) graph.
    Simulate(SimulateArgs),
    /// Solve the mean-field trajectory.
    Solve {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Initial counts `x1,x2`; t0 is their sum.
        #[arg(long, default_value = "16,24")]
        seeds: String,
        /// Last time point.
        #[arg(long)]
        end: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        points: usize,
        /// Overload onset t_c; omit for no overload.
        #[arg(long)]
        onset: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        decay: f64,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a mean simulated trajectory with an analytic one.
    Compare {
        /// Mean-trajectory CSV written by `simulate` or `experiment`.
        #[arg(long)]
        empirical: PathBuf,
        /// Trajectory CSV written by `solve`.
        #[arg(long)]
        analytic: PathBuf,
        /// Overload onset, to split the error by regime.
        #[arg(long)]
        onset: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        decay: f64,
    },
    /// Run a whole experiment described by a `key = value` file.
    #[command(after_help = SPEC_KEYS)]
    Experiment {
        spec: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the replication count.
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Rebuild summary.txt from per-run CSVs.
    Summarize {
        /// Directory holding `run_*.csv` files.
        runs: PathBuf,
    },
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    learning_rate: f64,
    #[arg(long)]
    stochastic: bool,
    #[arg(long, default_value_t = 20)]
    walk_length: usize,
    #[arg(long, default_value_t = 5)]
    walks_per_node: usize,
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Return bias p.
    #[arg(short = 'p', long, default_value_t = 1.0)]
    return_bias: f64,
    /// In-out bias q.
    #[arg(short = 'q', long, default_value_t = 1.0)]
    inout_bias: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output embedding file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Graph to simulate on, usually the output of `recover`.
    #[arg(long)]
    graph: PathBuf,
    /// Needed by the most_similar strategy.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value = "16,24")]
    seeds: String,
    /// Overload capacity; omit for none.
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    decay: f64,
    #[arg(long, default_value = "first")]
    strategy: Strategy,
    #[arg(long, default_value = "exponential(1)")]
    arrival: ArrivalDist,
    #[arg(long)]
    horizon: Option<usize>,
    /// Connect probability p(r, sigma^2), logged as the predicted onset.
    #[arg(long)]
    connect_prob: Option<f64>,
    #[arg(long, default_value_t = 1)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also solve and compare the mean-field trajectory.
    #[arg(long)]
    analytic: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_seeds(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("seeds must look like `16,24`, got {s:?}"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

fn embed(args: EmbedArgs) -> Result<()> {
    let graph = load_edge_list(&args.graph).map_err(|e| e.at_stage("graph"))?;
    let walk = WalkParams {
        return_bias: args.return_bias,
        inout_bias: args.inout_bias,
        walk_length: args.walk_length,
        walks_per_node: args.walks_per_node,
        window: args.window,
    };
    let train = TrainParams {
        dim: args.dim,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        mode: if args.stochastic {
            OptimizerMode::Stochastic
        } else {
            OptimizerMode::FullBatch
        },
        rng_seed: args.seed,
    };
    let trained = optimize(&graph, &walk, &train).map_err(|e| e.at_stage("embed"))?;
    let model = fit_gaussian(&trained.embeddings).map_err(|e| e.at_stage("fit"))?;
    trained.embeddings.write(&args.out)?;
    println!("nodes = {}", graph.node_count());
    println!(
        "objective = {}",
        trained
            .objective_history
            .last()
            .copied()
            .unwrap_or(f64::NAN)
    );
    println!("variance = {}", model.variance);
    Ok(())
}

fn recover(
    graph: &Path,
    embeddings: &Path,
    range: Option<f64>,
    target: Option<f64>,
    out: &Path,
) -> Result<()> {
    let g = load_edge_list(graph).map_err(|e| e.at_stage("graph"))?;
    let emb = EmbeddingSet::read(embeddings).map_err(|e| e.at_stage("embed"))?;
    let model = fit_gaussian(&emb).map_err(|e| e.at_stage("fit"))?;
    let r = match (range, target) {
        (Some(r), _) => r,
        (None, Some(p)) => range_for_probability(p, model.variance, emb.dim())?,
        (None, None) => return Err(Error::Config("need --range or --connect-target".into())),
    };
    let p = connect_probability(r, model.variance, emb.dim())?;
    let rec = recover_links(&g, &emb, r).map_err(|e| e.at_stage("recover"))?;
    rec.write(out)?;
    println!("variance = {}", model.variance);
    println!("range = {r}");
    println!("connect_prob = {p}");
    println!("latent_edges = {}", rec.latent_edges.len());
    println!("edges = {}", rec.graph.edge_count());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let graph = load_edge_list(&args.graph).map_err(|e| e.at_stage("graph"))?;
    let emb = args
        .embeddings
        .as_ref()
        .map(EmbeddingSet::read)
        .transpose()
        .map_err(|e| e.at_stage("embed"))?;
    let config = CompetitionConfig {
        powers: PowerPair::new(args.a, args.b)?,
        range: 1.0,
        capacity: args.capacity.unwrap_or(usize::MAX),
        decay: args.decay,
        strategy: args.strategy,
        arrival: args.arrival,
        seeds: parse_seeds(&args.seeds)?,
        horizon: args.horizon,
        rng_seed: args.seed,
        connect_prob: args.connect_prob,
    };
    let mc = monte_carlo(&graph, emb.as_ref(), &config, args.replications, args.seed)
        .map_err(|e| e.at_stage("simulate"))?;
    fs::create_dir_all(&args.out)?;
    let mut paths = Vec::new();
    for (i, run) in mc.runs.iter().enumerate() {
        let meta = run_metadata(&config, i, run, graph.node_count(), args.analytic);
        let path = args.out.join(format!("run_{i:04}.csv"));
        run.trajectory.write_csv(&path, &meta)?;
        paths.push(path);
    }
    write_summary(&args.out, &paths)
}

fn write_summary(dir: &Path, paths: &[PathBuf]) -> Result<()> {
    let summary = summarize_runs(paths).map_err(|e| e.at_stage("report"))?;
    summary.mean.write_csv(dir.join("mean.csv"))?;
    if let Some(tr) = &summary.analytic {
        tr.write_csv(dir.join("analytic.csv"), &[])?;
    }
    fs::write(dir.join("summary.txt"), &summary.text)?;
    print!("{}", summary.text);
    Ok(())
}

fn summarize(dir: &Path) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("run_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    let summary = summarize_runs(&paths).map_err(|e| e.at_stage("report"))?;
    let target = if dir.file_name().is_some_and(|n| n == "runs") {
        dir.parent().unwrap_or(dir).join("summary.txt")
    } else {
        dir.join("summary.txt")
    };
    fs::write(&target, &summary.text)?;
    print!("{}", summary.text);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    a: f64,
    b: f64,
    seeds: &str,
    end: f64,
    points: usize,
    onset: Option<f64>,
    decay: f64,
    out: &Path,
) -> Result<()> {
    let (x1, x2) = parse_seeds(seeds)?;
    let init = InitialState::new(x1 as f64, x2 as f64)?;
    let grid = log_grid(init.t0, end, points);
    let tr = mean_field(
        PowerPair::new(a, b)?,
        init,
        onset.map(|o| (decay, o)),
        &grid,
    )?;
    let mut meta = vec![
        ("a".to_string(), a.to_string()),
        ("b".to_string(), b.to_string()),
        ("seeds".to_string(), format!("{x1},{x2}")),
    ];
    if let Some(o) = onset {
        meta.push(("onset".to_string(), o.to_string()));
        meta.push(("decay".to_string(), decay.to_string()));
    }
    tr.write_csv(out, &meta)?;
    if let Some(p) = tr.last() {
        println!("final_t = {}", p.t);
        println!("final_share1 = {}", p.share1());
        println!("final_share2 = {}", p.share2());
    }
    Ok(())
}

fn compare_files(empirical: &Path, analytic: &Path, onset: Option<f64>, decay: f64) -> Result<()> {
    let emp = MeanTrajectory::parse_csv(&fs::read_to_string(empirical)?, empirical)?;
    let (ana, _) = Trajectory::read_csv(analytic)?;
    let rep = compare(&emp, &ana, onset.map(|o| (o, decay)))?;
    let show = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
    println!("points = {}", rep.points.len());
    println!("mae = {}", rep.mae);
    println!("mae_pre = {}", show(rep.mae_pre));
    println!("mae_window = {}", show(rep.mae_window));
    println!("mae_stabilized = {}", show(rep.mae_stabilized));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            nodes,
            exponent,
            seed,
            out,
        } => {
            let g = generate_power_law(nodes, exponent, seed)?;
            g.write_edge_list(&out)?;
            println!("nodes = {}", g.node_count());
            println!("edges = {}", g.edge_count());
            Ok(())
        }
        Command::Embed(args) => embed(args),
        Command::Recover {
            graph,
            embeddings,
            range,
            connect_target,
            out,
        } => recover(&graph, &embeddings, range, connect_target, &out),
        Command::Simulate(args) => simulate(args),
        Command::Solve {
            a,
            b,
            seeds,
            end,
            points,
            onset,
            decay,
            out,
        } => solve(a, b, &seeds, end, points, onset, decay, &out),
        Command::Compare {
            empirical,
            analytic,
            onset,
            decay,
        } => compare_files(&empirical, &analytic, onset, decay),
        Command::Experiment {
            spec,
            seed,
            out,
            replications,
        } => {
            let mut s = ExperimentSpec::load(&spec).map_err(|e| e.at_stage("spec"))?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(out) = out {
                s.out_dir = out;
            }
            if let Some(r) = replications {
                s.replications = r;
            }
            let res = run_experiment(&s)?;
            print!("{}", res.summary.text);
            Ok(())
        }
        Command::Summarize { runs } => summarize(&runs),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                if !msg.ends_with(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                src = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
