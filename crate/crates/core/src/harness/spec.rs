//! Flat `key = value` experiment files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analytic::PowerPair;
use crate::embedding::{OptimizerMode, TrainParams, WalkParams};
use crate::error::{Error, Result};
use crate::sim::{ArrivalDist, Strategy};

/// Reference for every key accepted in an experiment file. Shown by
/// `infcomp experiment --help`.
pub const SPEC_KEYS: &str = "\
Experiment file keys (one `key = value` per line, `#` starts a comment):
  graph           edge-list file, relative to the experiment file
  nodes           synthetic graph size (when no `graph` is given)
  exponent        synthetic power-law exponent            [2.5]
  graph_seed      synthetic graph seed                    [seed]
  dim             embedding dimension                     [8]
  epochs          training epochs                         [50]
  learning_rate   training step size                      [1.0]
  optimizer       full_batch | stochastic                 [full_batch]
  walk_length     nodes per walk                          [20]
  walks_per_node  walks started from each node            [5]
  window          co-occurrence radius                    [3]
  return_bias     walk return bias p                      [1]
  inout_bias      walk in-out bias q                      [1]
  embed_seed      walk and initialization seed            [seed]
  range           influence range r (squared distance)
  connect_target  choose r so that p(r, sigma^2) equals this instead
  a, b            influence powers                        [1, 1]
  seeds           initial counts `x1,x2`                  [16,24]
  capacity        overload capacity, or `none`            [none]
  decay           discrimination decay rate mu            [10]
  strategy        first | latest | most_similar | highest_degree [first]
  arrival         exponential(rate) | uniform(lo,hi) | lognormal(mu,sigma) [exponential(1)]
  horizon         stop at this many influenced users      [n]
  replications    Monte Carlo runs                        [100]
  seed            master seed                             [0]
  analytic        also solve the mean-field trajectory    [true]
  out             output directory, relative to the file  [out]
Exactly one of `range` and `connect_target` is required, and exactly one of
`graph` and `nodes`.";

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    PowerLaw {
        nodes: usize,
        exponent: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeChoice {
    Range(f64),
    ConnectTarget(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub graph: GraphSource,
    pub walk: WalkParams,
    pub train: TrainParams,
    pub range: RangeChoice,
    pub powers: PowerPair,
    pub seeds: (usize, usize),
    pub capacity: Option<usize>,
    pub decay: f64,
    pub strategy: Strategy,
    pub arrival: ArrivalDist,
    pub horizon: Option<usize>,
    pub replications: usize,
    pub seed: u64,
    pub analytic: bool,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    /// Parses experiment text; relative paths are resolved against `base`.
    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let mut kv = Keys::parse(text, path)?;
        let seed: u64 = kv.take("seed")?.unwrap_or(0);

        let graph = match (kv.raw("graph"), kv.take::<usize>("nodes")?) {
            (Some(_), Some(_)) => {
                return Err(Error::config("give either `graph` or `nodes`, not both"));
            }
            (Some(file), None) => GraphSource::File(base.join(file)),
            (None, Some(nodes)) => GraphSource::PowerLaw {
                nodes,
                exponent: kv.take("exponent")?.unwrap_or(2.5),
                seed: kv.take("graph_seed")?.unwrap_or(seed),
            },
            (None, None) => return Err(Error::config("missing `graph` or `nodes`")),
        };

        let walk = WalkParams {
            return_bias: kv.take("return_bias")?.unwrap_or(1.0),
            inout_bias: kv.take("inout_bias")?.unwrap_or(1.0),
            walk_length: kv.take("walk_length")?.unwrap_or(20),
            walks_per_node: kv.take("walks_per_node")?.unwrap_or(5),
            window: kv.take("window")?.unwrap_or(3),
        };
        let mode = match kv.raw("optimizer").as_deref() {
            None | Some("full_batch") => OptimizerMode::FullBatch,
            Some("stochastic") => OptimizerMode::Stochastic,
            Some(other) => {
                return Err(Error::config(format!(
                    "optimizer must be full_batch or stochastic, got {other:?}"
                )));
            }
        };
        let train = TrainParams {
            dim: kv.take("dim")?.unwrap_or(8),
            epochs: kv.take("epochs")?.unwrap_or(50),
            learning_rate: kv.take("learning_rate")?.unwrap_or(1.0),
            mode,
            rng_seed: kv.take("embed_seed")?.unwrap_or(seed),
        };

        let range = match (kv.take::<f64>("range")?, kv.take::<f64>("connect_target")?) {
            (Some(r), None) => RangeChoice::Range(r),
            (None, Some(p)) => RangeChoice::ConnectTarget(p),
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "give either `range` or `connect_target`, not both",
                ));
            }
            (None, None) => return Err(Error::config("missing `range` or `connect_target`")),
        };

        let powers = PowerPair::new(kv.take("a")?.unwrap_or(1.0), kv.take("b")?.unwrap_or(1.0))?;
        let seeds = match kv.raw("seeds") {
            None => (16, 24),
            Some(s) => parse_pair(&s)?,
        };
        let capacity = match kv.raw("capacity").as_deref() {
            None | Some("none") => None,
            Some(s) => Some(s.parse().map_err(|_| {
                Error::config(format!("capacity must be an integer or none, got {s:?}"))
            })?),
        };
        let spec = ExperimentSpec {
            graph,
            walk,
            train,
            range,
            powers,
            seeds,
            capacity,
            decay: kv.take("decay")?.unwrap_or(10.0),
            strategy: kv.take("strategy")?.unwrap_or_default(),
            arrival: kv.take("arrival")?.unwrap_or_default(),
            horizon: kv.take("horizon")?,
            replications: kv.take("replications")?.unwrap_or(100),
            seed,
            analytic: kv.take("analytic")?.unwrap_or(true),
            out_dir: base.join(kv.raw("out").unwrap_or_else(|| "out".into())),
        };
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::config("replications must be at least 1"));
        }
        match &self.graph {
            GraphSource::File(p) if !p.is_file() => {
                return Err(Error::config(format!(
                    "graph file {} does not exist",
                    p.display()
                )));
            }
            GraphSource::PowerLaw { nodes, .. } if *nodes < 2 => {
                return Err(Error::config("synthetic graph needs at least 2 nodes"));
            }
            _ => {}
        }
        match self.range {
            RangeChoice::Range(r) if !(r > 0.0 && r.is_finite()) => {
                return Err(Error::config(format!("range must be positive, got {r}")));
            }
            RangeChoice::ConnectTarget(p) if !(p > 0.0 && p < 1.0) => {
                return Err(Error::config(format!(
                    "connect_target must lie in (0, 1), got {p}"
                )));
            }
            _ => {}
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::config(format!(
                "decay must be positive, got {}",
                self.decay
            )));
        }
        if self.seeds.0 == 0 || self.seeds.1 == 0 {
            return Err(Error::config("both seed counts must be at least 1"));
        }
        self.walk.validate()?;
        self.train.validate()
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::config(format!("seeds must look like `16,24`, got {s:?}"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

/// Key/value pairs that must each be consumed exactly once.
struct Keys {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl Keys {
    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() || v.is_empty() {
                return Err(err(format!("expected `key = value`, got {line:?}")));
            }
            if entries.insert(k.clone(), (idx + 1, v)).is_some() {
                return Err(err(format!("duplicate key `{k}`")));
            }
        }
        Ok(Keys {
            path: path.to_path_buf(),
            entries,
        })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| Error::Parse {
                path: self.path.clone(),
                line,
                message: format!("bad value for `{key}`: {e}"),
            }),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(Error::Parse {
                path: self.path,
                line,
                message: format!("unknown key `{k}`"),
            }),
        }
    }
}
