//! Spatial diagnostics for trajectories treated as point patterns.

use serde::{Deserialize, Serialize};

use crate::grid::RadiusGrid;
use crate::stats::linear_fit;
use crate::trajectory::{distance, Trajectory};

fn pairwise_distances(w: &Trajectory) -> Vec<f64> {
    let n = w.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(distance(w.point(i), w.point(j)));
        }
    }
    out
}

/// Ripley-type K-function curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFunctionCurve {
    pub radii: RadiusGrid,
    pub values: Vec<f64>,
    pub n: usize,
    pub diameter: f64,
}

impl KFunctionCurve {
    /// Log-log slope of `K(r)` over the radii in `[r_lo, r_hi]` with positive values.
    pub fn log_slope(&self, r_lo: f64, r_hi: f64) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .radii
            .radii()
            .iter()
            .zip(&self.values)
            .filter(|(r, v)| **r >= r_lo && **r <= r_hi && **v > 0.0)
            .map(|(r, v)| (r.ln(), v.ln()))
            .unzip();
        (xs.len() >= 2).then(|| linear_fit(&xs, &ys).slope)
    }
}

/// `K(r) = diam(W)/n · #{(i, j) : i ≠ j, |w_i - w_j| <= r}`.
///
/// The prefactor `diam(W)/n` follows the trajectory-clustering variant of the
/// estimator rather than the classical `area / n²` normalization; for `r`
/// beyond the diameter every ordered pair counts and `K = diam · (n - 1)`.
pub fn k_function(w: &Trajectory, radii: &RadiusGrid) -> KFunctionCurve {
    let n = w.len();
    let mut d = pairwise_distances(w);
    d.sort_by(f64::total_cmp);
    let diameter = d.last().copied().unwrap_or(0.0);
    let scale = diameter / n as f64;
    let values = radii
        .radii()
        .iter()
        .map(|r| scale * (2 * d.partition_point(|v| *v <= *r)) as f64)
        .collect();
    KFunctionCurve {
        radii: radii.clone(),
        values,
        n,
        diameter,
    }
}

/// Greedy cover counts and the Dudley entropy integral built on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringProfile {
    pub radii: RadiusGrid,
    pub counts: Vec<usize>,
    /// `(1/rho) ∫_0^rho sqrt(log N_r) dr` by the trapezoidal rule on
    /// `{0} ∪ radii ∪ {rho}`. A diagnostic: greedy counts overestimate the
    /// minimal cover, and the chaining constant is not included.
    pub dudley_value: f64,
    pub distinct_points: usize,
}

/// Farthest-point ordering: `radius[k]` is the covering radius achieved by the
/// first `k + 1` centres. Non-increasing, and zero once every distinct point is
/// a centre.
fn farthest_point_radii(w: &Trajectory) -> Vec<f64> {
    let n = w.len();
    let mut nearest: Vec<f64> = (0..n).map(|j| distance(w.point(0), w.point(j))).collect();
    let mut radii = Vec::new();
    loop {
        let (far, &r) =
            nearest.iter().enumerate().fold(
                (0, &0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        radii.push(r);
        if r == 0.0 {
            break;
        }
        for j in 0..n {
            let d = distance(w.point(far), w.point(j));
            if d < nearest[j] {
                nearest[j] = d;
            }
        }
    }
    radii
}

/// Greedy farthest-point covers by closed balls, one count per radius.
pub fn covering_numbers(w: &Trajectory, radii: &RadiusGrid) -> CoveringProfile {
    let cover = farthest_point_radii(w);
    let distinct = cover.len();
    let count_at = |r: f64| {
        cover
            .iter()
            .position(|c| *c <= r)
            .map_or(distinct, |k| k + 1)
    };
    let counts: Vec<usize> = radii.radii().iter().map(|r| count_at(*r)).collect();

    let rho = radii.rho();
    let mut nodes: Vec<(f64, usize)> = vec![(0.0, distinct)];
    nodes.extend(
        radii
            .radii()
            .iter()
            .zip(&counts)
            .filter(|(r, _)| **r < rho)
            .map(|(r, c)| (*r, *c)),
    );
    nodes.push((rho, count_at(rho)));
    let h = |c: usize| (c as f64).ln().sqrt();
    let integral: f64 = nodes
        .windows(2)
        .map(|s| 0.5 * (s[1].0 - s[0].0) * (h(s[0].1) + h(s[1].1)))
        .sum();

    CoveringProfile {
        radii: radii.clone(),
        counts,
        dudley_value: integral / rho,
        distinct_points: distinct,
    }
}
