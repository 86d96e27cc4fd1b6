//! Tail exponents of optimizer transition kernels.
//!
//! The lower tail exponent `alpha` describes how fast the kernel's ball mass
//! vanishes, `P(x, B_r(x)) ≈ c r^alpha` as `r -> 0`. It is estimated two
//! ways: by a power-law fit to the reciprocal increment norms
//! ([`lower_tail_exponent_reciprocal`]), and by the log-log slope of the
//! empirical ball-mass curve ([`ball_mass_curve`], [`exponent_from_ball_mass`]).
//! [`stable_index`] estimates the index of alpha-stable increments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadiusGrid;
use crate::stats::{linear_fit, median, pairwise_sum};
use crate::trajectory::{increments, Trajectory};

/// Sample size below which [`fit_power_law`] attaches a warning.
pub const POWER_LAW_MIN_SAMPLES: usize = 50;

/// Number of quantile candidates for the power-law cutoff.
pub const XMIN_CANDIDATES: usize = 100;

/// Default mass window for the ball-mass slope.
pub const DEFAULT_MASS_WINDOW: (f64, f64) = (0.01, 0.2);

/// Continuous power-law fit to the upper tail of a positive sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFitResult {
    /// Exponent of the survival function, `P(X >= x) ~ x^{-alpha_survival}`.
    pub alpha_survival: f64,
    /// Exponent of the density, `alpha_survival + 1`.
    pub alpha_density: f64,
    pub x_min: f64,
    pub ks_distance: f64,
    pub n_tail: usize,
    /// Samples excluded before fitting (zero-length increments).
    pub dropped: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

fn check_positive_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::arg(format!(
            "power-law samples must be positive and finite, found {bad}"
        )));
    }
    Ok(())
}

/// MLE and KS distance for the tail `sorted[start..]` with cutoff `sorted[start]`.
/// `None` when the tail has fewer than two points or no log spread.
fn fit_tail(sorted: &[f64], start: usize) -> Option<(f64, f64)> {
    let tail = &sorted[start..];
    let n = tail.len();
    if n < 2 {
        return None;
    }
    let x_min = tail[0];
    let logs: Vec<f64> = tail.iter().map(|x| (x / x_min).ln()).collect();
    let spread = pairwise_sum(&logs);
    if !(spread > 0.0) {
        return None;
    }
    let alpha_s = n as f64 / spread;
    let nf = n as f64;
    let mut ks: f64 = 0.0;
    for (i, l) in logs.iter().enumerate() {
        // fitted CDF 1 - (x / x_min)^{-alpha_s}
        let cdf = -(-alpha_s * l).exp_m1();
        ks = ks.max(cdf - i as f64 / nf).max((i + 1) as f64 / nf - cdf);
    }
    Some((alpha_s, ks.clamp(0.0, 1.0)))
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn low_sample_warnings(n: usize) -> Vec<String> {
    if n < POWER_LAW_MIN_SAMPLES {
        vec![format!(
            "only {n} samples; power-law fits below {POWER_LAW_MIN_SAMPLES} are unreliable"
        )]
    } else {
        Vec::new()
    }
}

/// Fits a continuous power law, choosing the cutoff that minimizes the KS distance
/// over a 100-point quantile grid of the sample.
pub fn fit_power_law(samples: &[f64]) -> Result<TailFitResult> {
    check_positive_samples(samples)?;
    let sorted = sorted_copy(samples);
    let n = sorted.len();
    if sorted[0] == sorted[n - 1] {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let mut best: Option<(usize, f64, f64)> = None;
    let mut last_start = usize::MAX;
    for q in 0..XMIN_CANDIDATES {
        let idx = q * n / XMIN_CANDIDATES;
        // first occurrence of the candidate value so ties stay in the tail
        let start = sorted.partition_point(|x| *x < sorted[idx]);
        if start == last_start {
            continue;
        }
        last_start = start;
        if let Some((alpha_s, ks)) = fit_tail(&sorted, start) {
            if best.is_none_or(|(_, _, b)| ks < b) {
                best = Some((start, alpha_s, ks));
            }
        }
    }
    let (start, alpha_s, ks) = best.ok_or_else(|| {
        Error::Degenerate("no cutoff leaves a tail with positive log-spread".into())
    })?;
    Ok(TailFitResult {
        alpha_survival: alpha_s,
        alpha_density: alpha_s + 1.0,
        x_min: sorted[start],
        ks_distance: ks,
        n_tail: n - start,
        dropped: 0,
        warnings: low_sample_warnings(n),
    })
}

/// Power-law fit with a caller-chosen cutoff.
pub fn fit_power_law_with_xmin(samples: &[f64], x_min: f64) -> Result<TailFitResult> {
    check_positive_samples(samples)?;
    if !(x_min.is_finite() && x_min > 0.0) {
        return Err(Error::arg("x_min must be positive"));
    }
    let sorted = sorted_copy(samples);
    let start = sorted.partition_point(|x| *x < x_min);
    let n_tail = sorted.len() - start;
    if n_tail < 2 {
        return Err(Error::InsufficientData {
            what: format!("samples at or above x_min = {x_min}"),
            needed: 2,
            have: n_tail,
        });
    }
    let tail = &sorted[start..];
    let logs: Vec<f64> = tail.iter().map(|x| (x / x_min).ln()).collect();
    let spread = pairwise_sum(&logs);
    if !(spread > 0.0) {
        return Err(Error::Degenerate("tail has zero log-spread".into()));
    }
    let alpha_s = n_tail as f64 / spread;
    let nf = n_tail as f64;
    let mut ks: f64 = 0.0;
    for (i, l) in logs.iter().enumerate() {
        let cdf = -(-alpha_s * l).exp_m1();
        ks = ks.max(cdf - i as f64 / nf).max((i + 1) as f64 / nf - cdf);
    }
    Ok(TailFitResult {
        alpha_survival: alpha_s,
        alpha_density: alpha_s + 1.0,
        x_min,
        ks_distance: ks.clamp(0.0, 1.0),
        n_tail,
        dropped: 0,
        warnings: low_sample_warnings(sorted.len()),
    })
}

/// Lower tail exponent from the reciprocals of the lag-1 increment norms.
///
/// `P(|ΔW| <= r) ~ c r^alpha` is equivalent to `P(1/|ΔW| >= y) ~ c y^{-alpha}`,
/// so the survival exponent of the fit is the lower tail exponent.
pub fn lower_tail_exponent_reciprocal(t: &Trajectory) -> Result<TailFitResult> {
    let needed = POWER_LAW_MIN_SAMPLES;
    if t.len() < needed + 1 {
        return Err(Error::InsufficientData {
            what: "trajectory points".into(),
            needed: needed + 1,
            have: t.len(),
        });
    }
    let norms = increments(t, 1)?.norms();
    let recips: Vec<f64> = norms
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| 1.0 / v)
        .collect();
    let dropped = norms.len() - recips.len();
    if recips.len() < needed {
        return Err(Error::InsufficientData {
            what: "nonzero increments".into(),
            needed,
            have: recips.len(),
        });
    }
    let mut fit = fit_power_law(&recips)?;
    fit.dropped = dropped;
    Ok(fit)
}

/// Empirical ball masses `P̂(x, B_r(x))` of the lag-averaged kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMassCurve {
    pub radii: RadiusGrid,
    pub masses: Vec<f64>,
    pub lags: Vec<usize>,
}

fn check_lags(t: &Trajectory, lags: &[usize]) -> Result<()> {
    if lags.is_empty() {
        return Err(Error::arg("lag set is empty"));
    }
    if let Some(bad) = lags.iter().find(|&&k| k == 0 || k >= t.len()) {
        return Err(Error::arg(format!(
            "lag {bad} outside 1..{} for a trajectory of {} points",
            t.len(),
            t.len()
        )));
    }
    Ok(())
}

fn masses_from_norms(norms: &mut [f64], radii: &[f64]) -> Vec<f64> {
    norms.sort_by(f64::total_cmp);
    let n = norms.len() as f64;
    radii
        .iter()
        .map(|r| norms.partition_point(|v| *v <= *r) as f64 / n)
        .collect()
}

/// Fraction of lag-`k` increments with norm `<= r`, averaged over the lag set.
pub fn ball_mass_curve(
    t: &Trajectory,
    lags: &[usize],
    radii: &RadiusGrid,
) -> Result<BallMassCurve> {
    check_lags(t, lags)?;
    let mut acc = vec![0.0; radii.len()];
    for &k in lags {
        let mut norms = increments(t, k)?.norms();
        for (a, m) in acc
            .iter_mut()
            .zip(masses_from_norms(&mut norms, radii.radii()))
        {
            *a += m;
        }
    }
    let masses = acc.into_iter().map(|a| a / lags.len() as f64).collect();
    Ok(BallMassCurve {
        radii: radii.clone(),
        masses,
        lags: lags.to_vec(),
    })
}

/// Pointwise minimum of the ball-mass curves of `anchors` contiguous stretches of
/// the trajectory: a stand-in for the infimum over starting points.
pub fn ball_mass_curve_sup(
    t: &Trajectory,
    lags: &[usize],
    radii: &RadiusGrid,
    anchors: usize,
) -> Result<BallMassCurve> {
    check_lags(t, lags)?;
    if anchors == 0 {
        return Err(Error::arg("need at least one anchor block"));
    }
    let mut lowest = vec![f64::INFINITY; radii.len()];
    for &k in lags {
        let norms = increments(t, k)?.norms();
        if norms.len() < anchors {
            return Err(Error::InsufficientData {
                what: format!("lag-{k} increments for {anchors} anchor blocks"),
                needed: anchors,
                have: norms.len(),
            });
        }
        for b in 0..anchors {
            let lo = b * norms.len() / anchors;
            let hi = (b + 1) * norms.len() / anchors;
            let mut block = norms[lo..hi].to_vec();
            for (l, m) in lowest
                .iter_mut()
                .zip(masses_from_norms(&mut block, radii.radii()))
            {
                *l = l.min(m);
            }
        }
    }
    Ok(BallMassCurve {
        radii: radii.clone(),
        masses: lowest,
        lags: lags.to_vec(),
    })
}

/// Log-log slope of a ball-mass curve over a mass window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMassExponent {
    pub alpha: f64,
    pub points: usize,
    pub r_squared: f64,
}

/// Least-squares slope of `log mass` against `log r` over the radii whose
/// masses lie in `window` (and strictly inside `(0, 1)`).
pub fn exponent_from_ball_mass(
    curve: &BallMassCurve,
    window: (f64, f64),
) -> Result<BallMassExponent> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::arg(format!("mass window ({lo}, {hi}) is empty")));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .radii
        .radii()
        .iter()
        .zip(&curve.masses)
        .filter(|(_, m)| **m >= lo && **m <= hi && **m > 0.0 && **m < 1.0)
        .map(|(r, m)| (r.ln(), m.ln()))
        .unzip();
    if xs.len() < 5 {
        return Err(Error::InsufficientData {
            what: format!("radii with mass in [{lo}, {hi}]"),
            needed: 5,
            have: xs.len(),
        });
    }
    let fit = linear_fit(&xs, &ys);
    Ok(BallMassExponent {
        alpha: fit.slope,
        points: xs.len(),
        r_squared: fit.r_squared,
    })
}

/// Block-sum estimate of an alpha-stable index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableIndexResult {
    pub alpha_hat: f64,
    pub per_block: Vec<f64>,
    pub block_size: usize,
    /// Zero values among `|X|` and `|Y|` left out of the log-means.
    pub dropped_zeros: usize,
}

/// Log-moment estimator: with `Y_j` the sums of `K` consecutive samples,
/// `1/alpha = (mean log|Y| - mean log|X|) / log K`, clipped to `(0, 2]`.
pub fn stable_index(samples: &[f64], block_size: usize) -> Result<StableIndexResult> {
    let k = block_size;
    if k < 2 {
        return Err(Error::arg("block size must be at least 2"));
    }
    if samples.len() < 10 * k {
        return Err(Error::InsufficientData {
            what: format!("samples for block size {k}"),
            needed: 10 * k,
            have: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("samples must be finite"));
    }
    let n = samples.len() / k * k;
    let xs = &samples[..n];
    let peak = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Err(Error::Degenerate("all samples are zero".into()));
    }
    // Rescale by a power of two (exact) so the estimate is bit-identical under
    // power-of-two rescaling of the input.
    let unit = 2f64.powi(-(peak.log2().floor() as i32));
    let mut dropped = 0;
    let log_x: Vec<f64> = xs
        .iter()
        .filter_map(|x| {
            let v = (x * unit).abs();
            if v > 0.0 {
                Some(v.ln())
            } else {
                dropped += 1;
                None
            }
        })
        .collect();
    let log_y: Vec<f64> = xs
        .chunks_exact(k)
        .filter_map(|c| {
            let v = c.iter().map(|x| x * unit).sum::<f64>().abs();
            if v > 0.0 {
                Some(v.ln())
            } else {
                dropped += 1;
                None
            }
        })
        .collect();
    if log_x.is_empty() || log_y.is_empty() {
        return Err(Error::Degenerate("no nonzero block sums".into()));
    }
    let mean_x = pairwise_sum(&log_x) / log_x.len() as f64;
    let mean_y = pairwise_sum(&log_y) / log_y.len() as f64;
    let inv_alpha = (mean_y - mean_x) / (k as f64).ln();
    let alpha_hat = if inv_alpha > 0.5 {
        1.0 / inv_alpha
    } else {
        2.0
    };
    Ok(StableIndexResult {
        alpha_hat,
        per_block: Vec::new(),
        block_size: k,
        dropped_zeros: dropped,
    })
}

/// Lag-1 increments of the given coordinates, concatenated coordinate by coordinate.
pub fn pooled_increments(t: &Trajectory, coords: &[usize]) -> Result<Vec<f64>> {
    let inc = increments(t, 1)?;
    let mut out = Vec::with_capacity(coords.len() * inc.len());
    for &c in coords {
        if c >= t.dim() {
            return Err(Error::arg(format!(
                "coordinate {c} out of range for dimension {}",
                t.dim()
            )));
        }
        out.extend(inc.coordinate(c));
    }
    Ok(out)
}

/// [`stable_index`] per coordinate block, summarized by the median over blocks.
/// Blocks hold zero-based coordinate indices and must partition `0..D`.
pub fn layerwise_stable_index(
    t: &Trajectory,
    blocks: &[Vec<usize>],
    block_size: usize,
) -> Result<StableIndexResult> {
    if blocks.is_empty() {
        return Err(Error::arg("no coordinate blocks given"));
    }
    let mut seen = vec![false; t.dim()];
    for b in blocks {
        if b.is_empty() {
            return Err(Error::arg("empty coordinate block"));
        }
        for &c in b {
            if c >= t.dim() {
                return Err(Error::arg(format!(
                    "coordinate {c} out of range for dimension {}",
                    t.dim()
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::arg(format!(
                    "coordinate {c} appears in more than one block"
                )));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::arg(format!(
            "blocks do not cover coordinate {missing}"
        )));
    }
    let mut per_block = Vec::with_capacity(blocks.len());
    let mut dropped = 0;
    for b in blocks {
        let r = stable_index(&pooled_increments(t, b)?, block_size)?;
        per_block.push(r.alpha_hat);
        dropped += r.dropped_zeros;
    }
    Ok(StableIndexResult {
        alpha_hat: median(&per_block),
        per_block,
        block_size,
        dropped_zeros: dropped,
    })
}
