//! Optimizer trajectories and the quantities derived directly from them.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered iterates `W_0, ..., W_m` of an optimizer in `R^D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    data: Vec<f64>,
    dim: usize,
}

impl Trajectory {
    /// Builds a trajectory from row-major coordinates.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("trajectory dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::arg(format!(
                "{} coordinates do not split into points of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(Trajectory { data, dim })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInput)?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::arg(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(data, dim)
    }

    /// One-dimensional trajectory from scalar iterates.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points (`m + 1`).
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The trailing `count` points (all of them when `count >= len`).
    pub fn tail(&self, count: usize) -> Trajectory {
        let n = self.len();
        let start = n.saturating_sub(count);
        Trajectory {
            data: self.data[start * self.dim..].to_vec(),
            dim: self.dim,
        }
    }

    /// The leading `count` points.
    pub fn head(&self, count: usize) -> Trajectory {
        let end = count.min(self.len()).max(1);
        Trajectory {
            data: self.data[..end * self.dim].to_vec(),
            dim: self.dim,
        }
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Result<Trajectory> {
        Trajectory::from_flat(self.data.iter().map(|v| v * c).collect(), self.dim)
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(distance(self.point(i), self.point(j)));
            }
        }
        best
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lag-`k` differences `W_{j+k} - W_j` of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSeries {
    data: Vec<f64>,
    dim: usize,
    lag: usize,
}

impl IncrementSeries {
    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn delta(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn deltas(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.deltas().map(norm).collect()
    }

    /// Coordinate `c` of every increment.
    pub fn coordinate(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.deltas().map(move |d| d[c])
    }
}

pub fn increments(t: &Trajectory, lag: usize) -> Result<IncrementSeries> {
    if lag == 0 {
        return Err(Error::arg("lag must be positive"));
    }
    let n = t.len();
    if lag >= n {
        return Err(Error::arg(format!(
            "lag {lag} must be smaller than the trajectory length {n}"
        )));
    }
    let mut data = Vec::with_capacity((n - lag) * t.dim);
    for j in 0..n - lag {
        let (a, b) = (t.point(j), t.point(j + lag));
        data.extend(b.iter().zip(a).map(|(x, y)| x - y));
    }
    Ok(IncrementSeries {
        data,
        dim: t.dim,
        lag,
    })
}

/// Standard-deviation convention for the running normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdConvention {
    /// Divide the sum of squares by the number of points.
    #[default]
    Population,
    /// Divide by the number of points minus one.
    Sample,
}

/// Output of [`normalize_by_running_std`].
#[derive(Debug, Clone)]
pub struct NormalizedTrajectory {
    pub trajectory: Trajectory,
    /// First index at which every coordinate has positive running spread.
    /// Points before it are returned unscaled. `None` means no index qualifies
    /// and the whole trajectory is unscaled.
    pub first_scaled: Option<usize>,
    pub convention: StdConvention,
}

impl NormalizedTrajectory {
    pub fn degenerate(&self) -> bool {
        self.first_scaled.is_none()
    }

    /// Number of leading points left unscaled.
    pub fn unscaled_prefix(&self) -> usize {
        self.first_scaled.unwrap_or(self.trajectory.len())
    }
}

/// Divides point `k` coordinate-wise by the standard deviation of points `0..=k`.
pub fn normalize_by_running_std(
    t: &Trajectory,
    convention: StdConvention,
) -> Result<NormalizedTrajectory> {
    let n = t.len();
    if n < 2 {
        return Err(Error::arg(
            "running-std normalization needs at least two points",
        ));
    }
    let dim = t.dim;
    let mut mean = vec![0.0; dim];
    let mut m2 = vec![0.0; dim];
    let mut out = Vec::with_capacity(n * dim);
    let mut first_scaled = None;
    let mut std = vec![0.0; dim];

    for (k, p) in t.points().enumerate() {
        let count = (k + 1) as f64;
        for c in 0..dim {
            // Welford update.
            let delta = p[c] - mean[c];
            mean[c] += delta / count;
            m2[c] += delta * (p[c] - mean[c]);
        }
        let denom = match convention {
            StdConvention::Population => count,
            StdConvention::Sample => (count - 1.0).max(1.0),
        };
        let mut all_positive = true;
        for c in 0..dim {
            std[c] = if k == 0 { 0.0 } else { (m2[c] / denom).sqrt() };
            if !(std[c] > 0.0) {
                all_positive = false;
            }
        }
        if first_scaled.is_none() && all_positive {
            first_scaled = Some(k);
        }
        if first_scaled.is_some() {
            out.extend(p.iter().zip(&std).map(|(x, s)| x / s));
        } else {
            out.extend_from_slice(p);
        }
    }
    Ok(NormalizedTrajectory {
        trajectory: Trajectory { data: out, dim },
        first_scaled,
        convention,
    })
}

/// Divides every point coordinate-wise by the standard deviation of the whole
/// trajectory. Coordinates with zero spread are left unscaled.
pub fn normalize_by_std(t: &Trajectory, convention: StdConvention) -> Result<Trajectory> {
    let n = t.len();
    if n < 2 {
        return Err(Error::arg("std normalization needs at least two points"));
    }
    let dim = t.dim;
    let denom = match convention {
        StdConvention::Population => n as f64,
        StdConvention::Sample => (n - 1) as f64,
    };
    let std: Vec<f64> = (0..dim)
        .map(|c| {
            let col: Vec<f64> = t.points().map(|p| p[c]).collect();
            let m = crate::stats::mean(&col);
            let sq: Vec<f64> = col.iter().map(|x| (x - m) * (x - m)).collect();
            (crate::stats::pairwise_sum(&sq) / denom).sqrt()
        })
        .collect();
    let data = t
        .data
        .chunks(dim)
        .flat_map(|p| {
            p.iter()
                .zip(&std)
                .map(|(x, s)| if *s > 0.0 { x / s } else { *x })
        })
        .collect();
    Ok(Trajectory { data, dim })
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .enumerate()
        .map(|(col, cell)| {
            let cell = cell.trim();
            cell.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                column: col + 1,
                cell: cell.to_string(),
            })
        })
        .collect()
}

/// Parses trajectory CSV text: one iterate per row, comma-separated columns.
pub fn parse_trajectory(text: &str, has_header: bool) -> Result<Trajectory> {
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    let mut header_pending = has_header;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let row = parse_row(line, lineno)?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Format {
                    line: lineno,
                    msg: format!("row has {} columns, expected {d}", row.len()),
                })
            }
            _ => {}
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format {
                line: lineno,
                msg: format!("non-finite value in column {}", col + 1),
            });
        }
        data.extend(row);
    }
    let dim = dim.ok_or(Error::EmptyInput)?;
    Trajectory::from_flat(data, dim)
}

pub fn load_trajectory(path: impl AsRef<Path>, has_header: bool) -> Result<Trajectory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, has_header)
}

/// Formats a value with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory<W: Write>(t: &Trajectory, mut w: W) -> std::io::Result<()> {
    let mut line = String::new();
    for p in t.points() {
        line.clear();
        for (c, v) in p.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&format_f64(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn save_trajectory(t: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_trajectory(t, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
