//! Undirected simple graphs: edge-list I/O and a power-law configuration-model
//! generator.
//!
//! Everything downstream of loading treats a [`Graph`] as read-only.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Header directive written by [`Graph::to_edge_list`] so that isolated nodes
/// and node ids survive a round trip through the text format.
const NODES_DIRECTIVE: &str = "# nodes";

/// Immutable undirected graph over contiguous node ids `0..n`.
///
/// Adjacency lists are sorted, free of duplicates and self-loops, and
/// symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
    /// Original id of each node when the graph was loaded from a file.
    original_ids: Option<Vec<u64>>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Self-loops and duplicate edges
    /// are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(Error::NodeOutOfRange { id: u, n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { id: v, n });
            }
            if u == v {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_raw_adjacency(adj))
    }

    /// Sorts and deduplicates raw (already symmetric) adjacency lists.
    pub(crate) fn from_raw_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        let mut degree_sum = 0;
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            list.retain(|&j| j != i);
            degree_sum += list.len();
        }
        Graph {
            adj,
            edge_count: degree_sum / 2,
            original_ids: None,
        }
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
            original_ids: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.adj.get(i).map(Vec::len).ok_or(Error::NodeOutOfRange {
            id: i,
            n: self.node_count(),
        })
    }

    /// Sorted neighbor list of `i`. Panics if `i` is out of range.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj
            .get(i)
            .is_some_and(|list| list.binary_search(&j).is_ok())
    }

    /// Iterates every edge once as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Original file id for node `i`, or `i` itself for generated graphs.
    pub fn original_id(&self, i: usize) -> u64 {
        match &self.original_ids {
            Some(ids) => ids[i],
            None => i as u64,
        }
    }

    pub fn original_ids(&self) -> Option<&[u64]> {
        self.original_ids.as_deref()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adj.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count as f64 / self.node_count() as f64
    }

    /// Renders the edge-list text format. `marker` may tag individual edges
    /// with a trailing comment (used for recovered latent links).
    pub fn to_edge_list_with<F>(&self, mut marker: F) -> String
    where
        F: FnMut(usize, usize) -> Option<&'static str>,
    {
        let mut out = String::new();
        let _ = writeln!(out, "{NODES_DIRECTIVE} {}", self.node_count());
        for (u, v) in self.edges() {
            match marker(u, v) {
                Some(tag) => {
                    let _ = writeln!(out, "{u} {v} # {tag}");
                }
                None => {
                    let _ = writeln!(out, "{u} {v}");
                }
            }
        }
        out
    }

    pub fn to_edge_list(&self) -> String {
        self.to_edge_list_with(|_, _| None)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

/// Loads a whitespace-separated edge list.
///
/// Lines starting with `#` are comments, and anything after a `#` on an edge
/// line is ignored. Ids are remapped to `0..n` in ascending order of the
/// original ids, unless the file carries a `# nodes N` header (as written by
/// [`Graph::write_edge_list`]), in which case ids are taken verbatim and must
/// lie below `N`.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path)
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<Graph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut declared_nodes: Option<usize> = None;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix(NODES_DIRECTIVE) {
            if pairs.is_empty() && declared_nodes.is_none() {
                let n = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(lineno, format!("bad node count: {e}")))?;
                declared_nodes = Some(n);
            }
            continue;
        }
        let body = match trimmed.find('#') {
            Some(pos) => trimmed[..pos].trim(),
            None => trimmed,
        };
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_err(
                lineno,
                format!("expected two node ids, found {body:?}"),
            ));
        };
        let u = a
            .parse::<u64>()
            .map_err(|e| parse_err(lineno, format!("bad node id {a:?}: {e}")))?;
        let v = b
            .parse::<u64>()
            .map_err(|e| parse_err(lineno, format!("bad node id {b:?}: {e}")))?;
        pairs.push((u, v, lineno));
    }

    if pairs.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }

    if let Some(n) = declared_nodes {
        let mut edges = Vec::with_capacity(pairs.len());
        for (u, v, lineno) in pairs {
            if u >= n as u64 || v >= n as u64 {
                return Err(parse_err(
                    lineno,
                    format!("node id exceeds declared node count {n}"),
                ));
            }
            edges.push((u as usize, v as usize));
        }
        return Graph::from_edges(n, edges);
    }

    let mut index: BTreeMap<u64, usize> = BTreeMap::new();
    for &(u, v, _) in &pairs {
        index.insert(u, 0);
        index.insert(v, 0);
    }
    let mut original = Vec::with_capacity(index.len());
    for (slot, (id, pos)) in index.iter_mut().enumerate() {
        *pos = slot;
        original.push(*id);
    }
    let edges = pairs.iter().map(|(u, v, _)| (index[u], index[v]));
    let mut graph = Graph::from_edges(original.len(), edges)?;
    graph.original_ids = Some(original);
    Ok(graph)
}

/// Discrete power-law degree law `P(k) = C / k^λ` on `1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeModel {
    exponent: f64,
    normalization: f64,
    k_max: usize,
}

impl DegreeModel {
    pub fn new(exponent: f64, k_max: usize) -> Result<Self> {
        if !(exponent > 1.0) || !exponent.is_finite() {
            return Err(Error::param(format!(
                "power-law exponent must be > 1, got {exponent}"
            )));
        }
        if k_max < 1 {
            return Err(Error::param("degree support must contain k = 1"));
        }
        let total: f64 = (1..=k_max).map(|k| (k as f64).powf(-exponent)).sum();
        Ok(DegreeModel {
            exponent,
            normalization: 1.0 / total,
            k_max,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k == 0 || k > self.k_max {
            0.0
        } else {
            self.normalization * (k as f64).powf(-self.exponent)
        }
    }

    pub fn mean(&self) -> f64 {
        (1..=self.k_max).map(|k| k as f64 * self.pmf(k)).sum()
    }

    fn cdf_table(&self) -> Vec<f64> {
        let mut acc = 0.0;
        (1..=self.k_max)
            .map(|k| {
                acc += self.pmf(k);
                acc
            })
            .collect()
    }
}

fn draw_degree<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c < u).min(cdf.len() - 1) + 1
}

/// Stub-matching rounds attempted before leftover stubs are discarded.
const REPAIR_ROUNDS: usize = 64;

/// Samples a graph whose degree sequence is drawn from `C/k^λ` on `1..n-1`.
///
/// Stubs are shuffled and paired; pairs that would form a self-loop or a
/// repeated edge are rejected and their stubs re-paired in further rounds.
/// Stubs still unmatched after the last round are dropped, so realized
/// degrees can fall below the drawn ones and isolated nodes may appear.
pub fn generate_power_law(n: usize, exponent: f64, rng_seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::param(format!("need at least 2 nodes, got {n}")));
    }
    let model = DegreeModel::new(exponent, n - 1)?;
    let cdf = model.cdf_table();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut degrees: Vec<usize> = (0..n).map(|_| draw_degree(&cdf, &mut rng)).collect();
    while degrees.iter().sum::<usize>() % 2 == 1 {
        let i = rng.random_range(0..n);
        degrees[i] = draw_degree(&cdf, &mut rng);
    }

    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| std::iter::repeat_n(i, d))
        .collect();

    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    for _ in 0..REPAIR_ROUNDS {
        if stubs.len() < 2 {
            break;
        }
        stubs.shuffle(&mut rng);
        let mut rejected = Vec::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                rejected.extend_from_slice(pair);
            } else {
                edges.push((u, v));
            }
        }
        if rejected.len() == stubs.len() {
            // Nothing left can be paired (e.g. all stubs on one node).
            break;
        }
        stubs = rejected;
    }

    Graph::from_edges(n, edges)
}
