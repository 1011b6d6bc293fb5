use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-node latent vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("embedding dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "{} values do not form rows of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::param(format!(
                "non-finite coordinate for node {}",
                pos / dim
            )));
        }
        Ok(EmbeddingSet { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::param("rows have differing dimensions"));
        }
        Self::new(dim, rows.concat())
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        EmbeddingSet { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Squared Euclidean distance `l(i, j)`.
    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.vector(i), self.vector(j))
    }

    /// Text form: header `n d`, then `id v_1 ... v_d` per node.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.node_count(), self.dim);
        for i in 0..self.node_count() {
            let _ = write!(out, "{i}");
            for x in self.vector(i) {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing `n d` header".into()))?;
        let mut hdr = header.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(n)), Some(Ok(dim)), None) = (hdr.next(), hdr.next(), hdr.next()) else {
            return Err(err(hline + 1, format!("bad header {header:?}")));
        };
        if dim == 0 {
            return Err(err(hline + 1, "dimension must be at least 1".into()));
        }
        let mut data = vec![f64::NAN; n * dim];
        let mut filled = vec![false; n];
        for (idx, line) in lines {
            let mut tok = line.split_whitespace();
            let id: usize = tok
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e| err(idx + 1, format!("bad node id: {e}")))?;
            if id >= n {
                return Err(err(idx + 1, format!("node id {id} >= {n}")));
            }
            let values: Vec<f64> = tok
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(idx + 1, format!("bad coordinate: {e}")))?;
            if values.len() != dim {
                return Err(err(
                    idx + 1,
                    format!("expected {dim} coordinates, found {}", values.len()),
                ));
            }
            data[id * dim..(id + 1) * dim].copy_from_slice(&values);
            filled[id] = true;
        }
        if let Some(missing) = filled.iter().position(|f| !f) {
            return Err(err(0, format!("no vector for node {missing}")));
        }
        Self::new(dim, data)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Isotropic Gaussian `N(u, σ² I)` fitted to an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl LatentModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Maximum-likelihood isotropic Gaussian: per-coordinate sample mean and
/// `σ² = Σ_i ‖v_i − u‖² / (n·d)`.
pub fn fit_gaussian(embeddings: &EmbeddingSet) -> Result<LatentModel> {
    let n = embeddings.node_count();
    let d = embeddings.dim();
    if n < 2 {
        return Err(Error::param(format!(
            "need at least 2 embedded nodes to fit a variance, got {n}"
        )));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(embeddings.vector(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let ss: f64 = (0..n).map(|i| sq_dist(embeddings.vector(i), &mean)).sum();
    let variance = ss / (n * d) as f64;
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::Degenerate(format!(
            "fitted variance is {variance}; all embeddings coincide"
        )));
    }
    Ok(LatentModel { mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_fit() {
        let e = EmbeddingSet::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let m = fit_gaussian(&e).unwrap();
        assert_eq!(m.mean, vec![1.0, 0.0]);
        assert!((m.variance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let e = EmbeddingSet::from_rows(&vec![vec![1.5, -2.0]; 4]).unwrap();
        assert!(matches!(fit_gaussian(&e), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_point_is_rejected() {
        let e = EmbeddingSet::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(fit_gaussian(&e), Err(Error::Parameter(_))));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let e = EmbeddingSet::from_rows(&[vec![0.1, -3.25e-7, 1.0 / 3.0], vec![1e300, -0.0, 2.5]])
            .unwrap();
        let back = EmbeddingSet::parse(&e.to_text(), Path::new("x")).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn parse_errors() {
        let p = Path::new("e.txt");
        assert!(EmbeddingSet::parse("2 2\n0 1 2\n", p).is_err());
        assert!(EmbeddingSet::parse("2 2\n0 1 2\n1 1\n", p).is_err());
        assert!(EmbeddingSet::parse("1 2\n3 1 2\n", p).is_err());
        assert!(EmbeddingSet::parse("", p).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(EmbeddingSet::new(1, vec![0.0, f64::NAN]).is_err());
    }
}
