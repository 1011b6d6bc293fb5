//! Time-indexed `(t, x1, x2)` sequences shared by the simulator and the
//! analytic solver, plus their CSV form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "t,x1,x2,share1,share2";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
}

impl TrajectoryPoint {
    pub fn share1(&self) -> f64 {
        self.x1 / (self.x1 + self.x2)
    }

    pub fn share2(&self) -> f64 {
        self.x2 / (self.x1 + self.x2)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(points: Vec<TrajectoryPoint>) -> Self {
        Trajectory { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<&TrajectoryPoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    pub fn push(&mut self, t: f64, x1: f64, x2: f64) {
        self.points.push(TrajectoryPoint { t, x1, x2 });
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.t)
    }

    /// Share of influence 1, linearly interpolated in `t`. `None` outside
    /// the covered range.
    pub fn share1_at(&self, t: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        let last = pts.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let idx = pts.partition_point(|p| p.t < t);
        if idx < pts.len() && pts[idx].t == t {
            return Some(pts[idx].share1());
        }
        let (lo, hi) = (&pts[idx - 1], &pts[idx]);
        let w = (t - lo.t) / (hi.t - lo.t);
        Some(lo.share1() + w * (hi.share1() - lo.share1()))
    }

    /// CSV text; `metadata` pairs become leading `# key=value` lines.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.t,
                p.x1,
                p.x2,
                p.share1(),
                p.share2()
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, metadata: &[(String, String)]) -> Result<()> {
        fs::write(path, self.to_csv(metadata))?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<(Self, Vec<(String, String)>)> {
        let path = path.as_ref();
        Self::parse_csv(&fs::read_to_string(path)?, path)
    }

    /// Parses CSV text, returning the trajectory and its `# key=value`
    /// metadata. The share columns are recomputed rather than trusted.
    pub fn parse_csv(text: &str, path: &Path) -> Result<(Self, Vec<(String, String)>)> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut meta = Vec::new();
        let mut points = Vec::new();
        let mut seen_header = false;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if !seen_header {
                if line != CSV_HEADER {
                    return Err(err(idx + 1, format!("expected header {CSV_HEADER:?}")));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(err(
                    idx + 1,
                    format!("expected 5 columns, found {}", fields.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| err(idx + 1, format!("bad number {s:?}: {e}")))
            };
            points.push(TrajectoryPoint {
                t: num(fields[0])?,
                x1: num(fields[1])?,
                x2: num(fields[2])?,
            });
        }
        if !seen_header {
            return Err(err(0, "missing CSV header".into()));
        }
        Ok((Trajectory { points }, meta))
    }
}

/// `count` log-spaced points from `start` to `end` inclusive.
pub fn log_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (ls, le) = (start.ln(), end.ln());
            let mut grid: Vec<f64> = (0..count)
                .map(|i| (ls + (le - ls) * i as f64 / (count - 1) as f64).exp())
                .collect();
            grid[0] = start;
            grid[count - 1] = end;
            grid
        }
    }
}

/// Default analytic grid: 200 log-spaced points.
pub const DEFAULT_GRID_POINTS: usize = 200;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_metadata() {
        let mut tr = Trajectory::default();
        tr.push(40.0, 16.0, 24.0);
        tr.push(41.0, 16.0, 25.0);
        tr.push(41.5, 16.25, 25.25);
        let meta = vec![("seed".to_string(), "7".to_string())];
        let text = tr.to_csv(&meta);
        assert!(text.starts_with("# seed=7\nt,x1,x2,share1,share2\n40,16,24,0.4,0.6\n"));
        let (back, back_meta) = Trajectory::parse_csv(&text, Path::new("x")).unwrap();
        assert_eq!(back, tr);
        assert_eq!(back_meta, meta);
    }

    #[test]
    fn interpolation() {
        let tr = Trajectory::new(vec![
            TrajectoryPoint {
                t: 10.0,
                x1: 5.0,
                x2: 5.0,
            },
            TrajectoryPoint {
                t: 20.0,
                x1: 20.0,
                x2: 0.0,
            },
        ]);
        assert_eq!(tr.share1_at(10.0), Some(0.5));
        assert_eq!(tr.share1_at(15.0), Some(0.75));
        assert_eq!(tr.share1_at(20.0), Some(1.0));
        assert_eq!(tr.share1_at(25.0), None);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(40.0, 4000.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 40.0);
        assert_eq!(g[199], 4000.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
