//! C ABI over `infcomp`.
//!
//! Graphs and embeddings cross the boundary as opaque handles that the
//! caller frees with the matching `*_free` function. Every fallible call
//! returns an [`InfcompStatus`]; on failure [`infcomp_last_error`] holds a
//! message for the calling thread. Results are written through out-pointers
//! into caller-owned memory. Panics are caught and reported as
//! [`InfcompStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use infcomp::analytic::{mean_field, InitialState, PowerPair};
use infcomp::embedding::{fit_gaussian, optimize, EmbeddingSet, TrainParams, WalkParams};
use infcomp::graph::{generate_power_law, load_edge_list, Graph};
use infcomp::latent::{connect_probability, overload_time, recover_links};
use infcomp::sim::{run, ArrivalDist, CompetitionConfig, Strategy};
use infcomp::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfcompStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Parse = 4,
    EmptyInput = 5,
    Io = 6,
    Domain = 7,
    Degenerate = 8,
    Diverged = 9,
    Solver = 10,
    /// The output buffer is too short; the required length was written.
    BufferTooSmall = 11,
    Panic = 12,
}

/// Opaque undirected graph.
pub struct InfcompGraph(Graph);

/// Opaque node embedding.
pub struct InfcompEmbedding(EmbeddingSet);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfcompStrategy {
    First = 0,
    Latest = 1,
    MostSimilar = 2,
    HighestDegree = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfcompArrival {
    /// `param1` is the rate.
    Exponential = 0,
    /// `param1`, `param2` are the bounds.
    Uniform = 1,
    /// `param1`, `param2` are the log-mean and log-standard deviation.
    LogNormal = 2,
}

/// Simulation parameters. Fill with [`infcomp_sim_config_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct InfcompSimConfig {
    pub a: f64,
    pub b: f64,
    pub seeds1: usize,
    pub seeds2: usize,
    /// Overload capacity; `SIZE_MAX` disables overload.
    pub capacity: usize,
    pub decay: f64,
    pub strategy: InfcompStrategy,
    pub arrival: InfcompArrival,
    pub arrival_param1: f64,
    pub arrival_param2: f64,
    /// Stop at this many influenced users; 0 runs to exhaustion.
    pub horizon: usize,
    pub rng_seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: InfcompStatus,
    message: String,
}

impl Failure {
    fn new(status: InfcompStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

fn status_of(e: &Error) -> InfcompStatus {
    match e {
        Error::Parameter(_) | Error::Config(_) | Error::TooManySeeds { .. } => {
            InfcompStatus::InvalidArgument
        }
        Error::Parse { .. } => InfcompStatus::Parse,
        Error::EmptyInput(_) => InfcompStatus::EmptyInput,
        Error::NodeOutOfRange { .. } => InfcompStatus::OutOfRange,
        Error::Domain(_) => InfcompStatus::Domain,
        Error::Degenerate(_) => InfcompStatus::Degenerate,
        Error::Diverged { .. } => InfcompStatus::Diverged,
        Error::Solver { .. } => InfcompStatus::Solver,
        Error::Io(_) => InfcompStatus::Io,
        Error::Stage { source, .. } => status_of(source),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(status_of(&e), e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> InfcompStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            InfcompStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {msg}"));
            InfcompStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(InfcompStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(InfcompStatus::NullPointer, format!("{name} is null")))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    let s = deref(p, "path")?;
    CStr::from_ptr(s)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure::new(InfcompStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    Ok(std::slice::from_raw_parts(deref(p, name)?, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    Ok(std::slice::from_raw_parts_mut(out(p, name)?, len))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn infcomp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads an edge list.
///
/// # Safety
/// `path` must be a nul-terminated string and `out_graph` writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_graph_load(
    path: *const c_char,
    out_graph: *mut *mut InfcompGraph,
) -> InfcompStatus {
    guard(|| {
        let dst = out(out_graph, "out_graph")?;
        let g = load_edge_list(path_arg(path)?)?;
        *dst = Box::into_raw(Box::new(InfcompGraph(g)));
        Ok(())
    })
}

/// Generates a power-law configuration-model graph.
///
/// # Safety
/// `out_graph` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_graph_generate(
    nodes: usize,
    exponent: f64,
    seed: u64,
    out_graph: *mut *mut InfcompGraph,
) -> InfcompStatus {
    guard(|| {
        let dst = out(out_graph, "out_graph")?;
        let g = generate_power_law(nodes, exponent, seed)?;
        *dst = Box::into_raw(Box::new(InfcompGraph(g)));
        Ok(())
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn infcomp_graph_free(graph: *mut InfcompGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infcomp_graph_node_count(graph: *const InfcompGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.node_count())
}

/// Number of undirected edges, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infcomp_graph_edge_count(graph: *const InfcompGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.edge_count())
}

/// # Safety
/// `graph` must be a live handle and `out_degree` writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_graph_degree(
    graph: *const InfcompGraph,
    node: usize,
    out_degree: *mut usize,
) -> InfcompStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let dst = out(out_degree, "out_degree")?;
        *dst = g.0.degree(node)?;
        Ok(())
    })
}

/// Writes the graph as an edge list.
///
/// # Safety
/// `graph` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn infcomp_graph_write(
    graph: *const InfcompGraph,
    path: *const c_char,
) -> InfcompStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        g.0.write_edge_list(path_arg(path)?)?;
        Ok(())
    })
}

/// Embeds a graph with the default walk parameters and full-batch training.
///
/// # Safety
/// `graph` must be a live handle and `out_embedding` writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_embed(
    graph: *const InfcompGraph,
    dim: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    out_embedding: *mut *mut InfcompEmbedding,
) -> InfcompStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let dst = out(out_embedding, "out_embedding")?;
        let walk = WalkParams {
            walk_length: 20,
            walks_per_node: 5,
            window: 3,
            ..WalkParams::default()
        };
        let train = TrainParams {
            dim,
            epochs,
            learning_rate,
            rng_seed: seed,
            ..TrainParams::default()
        };
        let trained = optimize(&g.0, &walk, &train)?;
        *dst = Box::into_raw(Box::new(InfcompEmbedding(trained.embeddings)));
        Ok(())
    })
}

/// Reads an embedding file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out_embedding` writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_embedding_load(
    path: *const c_char,
    out_embedding: *mut *mut InfcompEmbedding,
) -> InfcompStatus {
    guard(|| {
        let dst = out(out_embedding, "out_embedding")?;
        let e = EmbeddingSet::read(path_arg(path)?)?;
        *dst = Box::into_raw(Box::new(InfcompEmbedding(e)));
        Ok(())
    })
}

/// Releases an embedding. Null is ignored.
///
/// # Safety
/// `embedding` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn infcomp_embedding_free(embedding: *mut InfcompEmbedding) {
    if !embedding.is_null() {
        drop(Box::from_raw(embedding));
    }
}

/// Dimension, or 0 for a null handle.
///
/// # Safety
/// `embedding` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infcomp_embedding_dim(embedding: *const InfcompEmbedding) -> usize {
    embedding.as_ref().map_or(0, |e| e.0.dim())
}

/// Maximum-likelihood isotropic variance of the embedding.
///
/// # Safety
/// `embedding` must be a live handle and `out_variance` writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_embedding_variance(
    embedding: *const InfcompEmbedding,
    out_variance: *mut f64,
) -> InfcompStatus {
    guard(|| {
        let e = deref(embedding, "embedding")?;
        let dst = out(out_variance, "out_variance")?;
        *dst = fit_gaussian(&e.0)?.variance;
        Ok(())
    })
}

/// Observed graph plus every pair with squared latent distance below
/// `range`.
///
/// # Safety
/// Handles must be live and `out_graph` writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_recover(
    graph: *const InfcompGraph,
    embedding: *const InfcompEmbedding,
    range: f64,
    out_graph: *mut *mut InfcompGraph,
) -> InfcompStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let e = deref(embedding, "embedding")?;
        let dst = out(out_graph, "out_graph")?;
        let rec = recover_links(&g.0, &e.0, range)?;
        *dst = Box::into_raw(Box::new(InfcompGraph(rec.graph)));
        Ok(())
    })
}

/// `p(r, σ²)`, the probability that two users lie within squared distance
/// `range`.
///
/// # Safety
/// `out_prob` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_connect_probability(
    range: f64,
    variance: f64,
    dim: usize,
    out_prob: *mut f64,
) -> InfcompStatus {
    guard(|| {
        let dst = out(out_prob, "out_prob")?;
        *dst = connect_probability(range, variance, dim)?;
        Ok(())
    })
}

/// Predicted overload onset `capacity / p`.
///
/// # Safety
/// `out_time` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_overload_time(
    capacity: f64,
    connect_prob: f64,
    out_time: *mut f64,
) -> InfcompStatus {
    guard(|| {
        let dst = out(out_time, "out_time")?;
        *dst = overload_time(capacity, connect_prob)?;
        Ok(())
    })
}

/// Mean-field counts at each of `len` increasing `times`, starting from
/// `(x1, x2)` at `t0 = x1 + x2`. A finite `onset` switches to the
/// overloaded regime there; pass NaN for none.
///
/// # Safety
/// `times`, `out_x1` and `out_x2` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn infcomp_solve_mean_field(
    a: f64,
    b: f64,
    x1: f64,
    x2: f64,
    onset: f64,
    decay: f64,
    times: *const f64,
    len: usize,
    out_x1: *mut f64,
    out_x2: *mut f64,
) -> InfcompStatus {
    guard(|| {
        let grid = slice_in(times, len, "times")?;
        let o1 = slice_out(out_x1, len, "out_x1")?;
        let o2 = slice_out(out_x2, len, "out_x2")?;
        let overload = onset.is_finite().then_some((decay, onset));
        let tr = mean_field(
            PowerPair::new(a, b)?,
            InitialState::new(x1, x2)?,
            overload,
            grid,
        )?;
        for ((p, d1), d2) in tr.points.iter().zip(o1).zip(o2) {
            *d1 = p.x1;
            *d2 = p.x2;
        }
        Ok(())
    })
}

/// Fills `config` with two equal powers, seeds (16, 24), no overload,
/// decay 10, first-arrival strategy with exponential(1) arrivals.
///
/// # Safety
/// `config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_sim_config_default(
    config: *mut InfcompSimConfig,
) -> InfcompStatus {
    guard(|| {
        *out(config, "config")? = InfcompSimConfig {
            a: 1.0,
            b: 1.0,
            seeds1: 16,
            seeds2: 24,
            capacity: usize::MAX,
            decay: 10.0,
            strategy: InfcompStrategy::First,
            arrival: InfcompArrival::Exponential,
            arrival_param1: 1.0,
            arrival_param2: 0.0,
            horizon: 0,
            rng_seed: 0,
        };
        Ok(())
    })
}

fn core_config(c: &InfcompSimConfig) -> Result<CompetitionConfig, Failure> {
    let mut cfg = CompetitionConfig::new(PowerPair::new(c.a, c.b)?, (c.seeds1, c.seeds2));
    cfg.capacity = c.capacity;
    cfg.decay = c.decay;
    cfg.strategy = match c.strategy {
        InfcompStrategy::First => Strategy::First,
        InfcompStrategy::Latest => Strategy::Latest,
        InfcompStrategy::MostSimilar => Strategy::MostSimilar,
        InfcompStrategy::HighestDegree => Strategy::HighestDegree,
    };
    cfg.arrival = match c.arrival {
        InfcompArrival::Exponential => ArrivalDist::Exponential {
            rate: c.arrival_param1,
        },
        InfcompArrival::Uniform => ArrivalDist::Uniform {
            lo: c.arrival_param1,
            hi: c.arrival_param2,
        },
        InfcompArrival::LogNormal => ArrivalDist::LogNormal {
            mu: c.arrival_param1,
            sigma: c.arrival_param2,
        },
    };
    cfg.horizon = (c.horizon > 0).then_some(c.horizon);
    cfg.rng_seed = c.rng_seed;
    Ok(cfg)
}

/// Runs one simulation and writes the counts after every step into
/// `out_x1`/`out_x2` (the first entry is the seeds). `out_len` receives the
/// number of steps recorded; when it exceeds `capacity` nothing else is
/// written and [`InfcompStatus::BufferTooSmall`] is returned. `out_trigger`
/// receives the overload onset, or -1 when overload never happened.
///
/// # Safety
/// `graph` and `config` must be valid, `embedding` null or live, the output
/// arrays must hold `capacity` entries and the scalar outputs be writable.
#[no_mangle]
pub unsafe extern "C" fn infcomp_simulate(
    graph: *const InfcompGraph,
    embedding: *const InfcompEmbedding,
    config: *const InfcompSimConfig,
    out_x1: *mut usize,
    out_x2: *mut usize,
    capacity: usize,
    out_len: *mut usize,
    out_trigger: *mut i64,
) -> InfcompStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let cfg = core_config(deref(config, "config")?)?;
        let len_dst = out(out_len, "out_len")?;
        let trig_dst = out(out_trigger, "out_trigger")?;
        let emb = embedding.as_ref().map(|e| &e.0);
        let res = run(&g.0, emb, &cfg)?;
        let n = res.trajectory.len();
        *len_dst = n;
        *trig_dst = res.trigger.map_or(-1, |t| t as i64);
        if n > capacity {
            return Err(Failure::new(
                InfcompStatus::BufferTooSmall,
                format!("trajectory has {n} steps, buffer holds {capacity}"),
            ));
        }
        let o1 = slice_out(out_x1, n, "out_x1")?;
        let o2 = slice_out(out_x2, n, "out_x2")?;
        for ((p, d1), d2) in res.trajectory.points.iter().zip(o1).zip(o2) {
            *d1 = p.x1 as usize;
            *d2 = p.x2 as usize;
        }
        Ok(())
    })
}
