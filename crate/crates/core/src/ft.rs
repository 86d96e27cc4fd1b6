//! Normalized Fernique–Talagrand functional of a finite point set.
//!
//! For a finite set `W = {w_1, ..., w_n}` and truncation radius `rho`, the
//! normalized functional is
//!
//! ```text
//! gamma_2^rho(W) = inf_p max_i (1/rho) ∫_0^rho sqrt(log(1 / p(B_r(w_i)))) dr
//! ```
//!
//! where `p` ranges over probability vectors on `W` and distances are
//! truncated at `rho`. For an atomic measure the ball mass
//! `r -> p(B_r(w_i))` is a step function, so the integral is an exact finite
//! sum over the sorted row `i` of the truncated Gram matrix: the segment
//! between consecutive sorted distances carries the cumulative mass of every
//! atom at or below its left end, and the trailing segment up to `rho`
//! carries mass 1 and contributes nothing.
//!
//! The objective is convex in `p`. It is minimized over the simplex through
//! the softmax parametrization `p = softmax(z)` with a subgradient method
//! (see [`FtOptions`]).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seed;
use crate::trajectory::{distance, Trajectory};
use crate::weights::{softmax_into, SimplexWeights};

/// Lower clip applied to cumulative ball masses before taking logs.
pub const MASS_FLOOR: f64 = 1e-300;

/// Truncated pairwise distances `min(rho, |w_i - w_j|)` with per-row sort order.
#[derive(Debug, Clone)]
pub struct TruncatedGram {
    n: usize,
    rho: f64,
    entries: Vec<f64>,
    sorted: Vec<f64>,
    order: Vec<usize>,
    // Compact form used by the objective: for row i, the sorted neighbours
    // strictly inside rho and the (rho-normalized) length of the segment that
    // starts at each of them.
    row_start: Vec<usize>,
    seg_index: Vec<usize>,
    seg_len: Vec<f64>,
}

impl TruncatedGram {
    pub fn new(w: &Trajectory, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let n = w.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = distance(w.point(i), w.point(j)).min(rho);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        let mut sorted = vec![0.0; n * n];
        let mut order = vec![0usize; n * n];
        let mut row_start = Vec::with_capacity(n + 1);
        let mut seg_index = Vec::new();
        let mut seg_len = Vec::new();
        let mut perm: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            let row = &entries[i * n..(i + 1) * n];
            perm.clear();
            perm.extend(0..n);
            // Stable sort keeps ties in index order, except that the row's own
            // point always comes first so each sorted row starts at 0.
            perm.sort_by(|&a, &b| {
                row[a]
                    .total_cmp(&row[b])
                    .then_with(|| (a != i).cmp(&(b != i)))
            });
            row_start.push(seg_index.len());
            for (k, &j) in perm.iter().enumerate() {
                sorted[i * n + k] = row[j];
                order[i * n + k] = j;
            }
            let inside: Vec<usize> = perm.iter().copied().filter(|&j| row[j] < rho).collect();
            for (k, &j) in inside.iter().enumerate() {
                let here = row[j] / rho;
                let next = match inside.get(k + 1) {
                    Some(&nj) => row[nj] / rho,
                    None => 1.0,
                };
                seg_index.push(j);
                seg_len.push(next - here);
            }
        }
        row_start.push(seg_index.len());
        Ok(TruncatedGram {
            n,
            rho,
            entries,
            sorted,
            order,
            row_start,
            seg_index,
            seg_len,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Row `i` in ascending order.
    pub fn sorted_row(&self, i: usize) -> &[f64] {
        &self.sorted[i * self.n..(i + 1) * self.n]
    }

    /// Permutation that sorts row `i`.
    pub fn sort_order(&self, i: usize) -> &[usize] {
        &self.order[i * self.n..(i + 1) * self.n]
    }

    fn segments(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_start[i], self.row_start[i + 1]);
        (&self.seg_index[a..b], &self.seg_len[a..b])
    }

    /// Normalized integral for row `i`: `(1/rho) ∫_0^rho sqrt(|log p(B_r(w_i))|) dr`.
    fn row_value(&self, i: usize, p: &[f64]) -> f64 {
        let (idx, len) = self.segments(i);
        let mut cum = 0.0;
        let mut acc = 0.0;
        for (&j, &l) in idx.iter().zip(len) {
            cum += p[j];
            if l > 0.0 {
                acc += l * cum.clamp(MASS_FLOOR, 1.0).ln().abs().sqrt();
            }
        }
        acc
    }

    /// Objective value and the lowest-index maximizing row.
    fn evaluate(&self, p: &[f64]) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for i in 0..self.n {
            let v = self.row_value(i, p);
            if v > best {
                best = v;
                arg = i;
            }
        }
        (best, arg)
    }

    /// Gradient of row `i` with respect to `p`, written into `grad` (zeroed first).
    fn row_gradient(&self, i: usize, p: &[f64], grad: &mut [f64], scratch: &mut Vec<f64>) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (idx, len) = self.segments(i);
        scratch.clear();
        let mut cum = 0.0;
        for (&j, &l) in idx.iter().zip(len) {
            cum += p[j];
            let m = cum.clamp(MASS_FLOOR, 1.0);
            let s = (-m.ln()).max(1e-12);
            // d/dm sqrt(-log m) = -1 / (2 m sqrt(-log m))
            scratch.push(if l > 0.0 {
                -l / (2.0 * m * s.sqrt())
            } else {
                0.0
            });
        }
        let mut suffix = 0.0;
        for (k, &j) in idx.iter().enumerate().rev() {
            suffix += scratch[k];
            grad[j] = suffix;
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "rho must be positive and finite, got {rho}"
        )))
    }
}

/// `gamma_2^rho` objective at the atomic measure `p`.
pub fn ft_objective(g: &TruncatedGram, p: &SimplexWeights) -> Result<f64> {
    if p.len() != g.n {
        return Err(Error::arg(format!(
            "weights have length {}, gram matrix has {} points",
            p.len(),
            g.n
        )));
    }
    Ok(g.evaluate(p.as_slice()).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FtMethod {
    Subgradient,
    Uniform,
    Oracle,
}

impl FtMethod {
    pub fn label(self) -> &'static str {
        match self {
            FtMethod::Subgradient => "subgradient",
            FtMethod::Uniform => "uniform",
            FtMethod::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FtEstimate {
    pub value: f64,
    pub weights: SimplexWeights,
    pub objective_trace: Vec<f64>,
    pub method: FtMethod,
    /// Objective variation across one grid step around the optimum (oracle only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_error: Option<f64>,
}

/// Settings for the softmax-parametrized subgradient method.
///
/// Each iteration takes the subgradient of the lowest-index maximizing row,
/// pulls it back through the softmax and steps by `step / sqrt(t)`. The first
/// restart starts from `z = 0` (uniform weights), the others from standard
/// normal logits drawn from `seed.derive(restart)`. The best objective value
/// seen in any restart is returned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtOptions {
    pub iterations: usize,
    pub restarts: usize,
    pub step: f64,
    pub seed: Seed,
}

impl Default for FtOptions {
    fn default() -> Self {
        FtOptions {
            iterations: 2000,
            restarts: 5,
            step: 0.5,
            seed: Seed(0),
        }
    }
}

impl FtOptions {
    pub fn with_seed(seed: Seed) -> Self {
        FtOptions {
            seed,
            ..Default::default()
        }
    }
}

/// Truncation radius: `B / L` when both are supplied, else 1.
pub fn default_rho(loss_bound: Option<f64>, lipschitz: Option<f64>) -> f64 {
    match (loss_bound, lipschitz) {
        (Some(b), Some(l)) if b > 0.0 && l > 0.0 => b / l,
        _ => 1.0,
    }
}

struct RestartOutcome {
    value: f64,
    weights: Vec<f64>,
    trace: Vec<f64>,
}

fn run_restart(g: &TruncatedGram, opts: &FtOptions, restart: usize) -> RestartOutcome {
    let n = g.n;
    let mut z = vec![0.0; n];
    if restart > 0 {
        let mut rng = opts.seed.derive(restart as u64).rng();
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
    let mut p = vec![0.0; n];
    let mut grad_p = vec![0.0; n];
    let mut scratch = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_p = vec![1.0 / n as f64; n];
    let mut trace = Vec::with_capacity(opts.iterations);

    for t in 1..=opts.iterations.max(1) {
        softmax_into(&z, &mut p);
        let (value, row) = g.evaluate(&p);
        trace.push(value);
        if value < best {
            best = value;
            best_p.copy_from_slice(&p);
        }
        if t == opts.iterations.max(1) {
            break;
        }
        g.row_gradient(row, &p, &mut grad_p, &mut scratch);
        let inner: f64 = p.iter().zip(&grad_p).map(|(a, b)| a * b).sum();
        let step = opts.step / (t as f64).sqrt();
        let gnorm = p
            .iter()
            .zip(&grad_p)
            .map(|(a, b)| {
                let g = a * (b - inner);
                g * g
            })
            .sum::<f64>()
            .sqrt();
        if !(gnorm > 0.0) {
            continue;
        }
        for k in 0..n {
            z[k] -= step * p[k] * (grad_p[k] - inner) / gnorm;
        }
    }
    RestartOutcome {
        value: best,
        weights: best_p,
        trace,
    }
}

/// Minimizes the objective over the simplex for the points of `w`.
pub fn estimate_gamma2(w: &Trajectory, rho: f64, opts: &FtOptions) -> Result<FtEstimate> {
    check_rho(rho)?;
    if opts.step <= 0.0 || !opts.step.is_finite() {
        return Err(Error::arg("optimizer step must be positive"));
    }
    let g = TruncatedGram::new(w, rho)?;
    Ok(minimize(&g, opts))
}

/// [`estimate_gamma2`] on a precomputed Gram matrix.
pub fn minimize(g: &TruncatedGram, opts: &FtOptions) -> FtEstimate {
    let n = g.n;
    let uniform = SimplexWeights::uniform(n);
    let uniform_value = g.evaluate(uniform.as_slice()).0;
    if n == 1 {
        return FtEstimate {
            value: uniform_value,
            weights: uniform,
            objective_trace: vec![uniform_value],
            method: FtMethod::Uniform,
            grid_error: None,
        };
    }

    let outcomes: Vec<RestartOutcome> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| run_restart(g, opts, r))
        .collect();
    // Lowest restart index wins ties, independent of scheduling.
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one restart");

    if best.value < uniform_value {
        let weights = normalized(best.weights);
        FtEstimate {
            value: best.value,
            weights,
            objective_trace: best.trace,
            method: FtMethod::Subgradient,
            grid_error: None,
        }
    } else {
        FtEstimate {
            value: uniform_value,
            weights: uniform,
            objective_trace: best.trace,
            method: FtMethod::Uniform,
            grid_error: None,
        }
    }
}

fn normalized(mut p: Vec<f64>) -> SimplexWeights {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    SimplexWeights::new(p).expect("softmax output is a probability vector")
}

/// Largest set accepted by [`brute_force_gamma2`].
pub const ORACLE_MAX_POINTS: usize = 6;

/// Exhaustive minimum over simplex points whose coordinates are multiples of `1/q`.
pub fn brute_force_gamma2(w: &Trajectory, rho: f64, grid_resolution: usize) -> Result<FtEstimate> {
    check_rho(rho)?;
    let n = w.len();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::Size(format!(
            "simplex-grid oracle supports at most {ORACLE_MAX_POINTS} points, got {n}"
        )));
    }
    if grid_resolution == 0 {
        return Err(Error::arg("grid resolution must be positive"));
    }
    let g = TruncatedGram::new(w, rho)?;
    let q = grid_resolution;

    let mut counts = vec![0usize; n];
    let mut p = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut best_counts = counts.clone();
    enumerate_compositions(q, 0, &mut counts, &mut |c| {
        for (pk, ck) in p.iter_mut().zip(c) {
            *pk = *ck as f64 / q as f64;
        }
        let v = g.evaluate(&p).0;
        if v < best {
            best = v;
            best_counts.copy_from_slice(c);
        }
    });

    // Resolution: how much the objective moves across one grid step.
    let mut grid_error: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b || best_counts[a] == 0 {
                continue;
            }
            let mut c = best_counts.clone();
            c[a] -= 1;
            c[b] += 1;
            for (pk, ck) in p.iter_mut().zip(&c) {
                *pk = *ck as f64 / q as f64;
            }
            grid_error = grid_error.max((g.evaluate(&p).0 - best).abs());
        }
    }

    let weights = best_counts.iter().map(|c| *c as f64 / q as f64).collect();
    Ok(FtEstimate {
        value: best,
        weights: normalized(weights),
        objective_trace: vec![best],
        method: FtMethod::Oracle,
        grid_error: Some(grid_error),
    })
}

fn enumerate_compositions(
    remaining: usize,
    pos: usize,
    counts: &mut [usize],
    f: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        f(counts);
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        enumerate_compositions(remaining - c, pos + 1, counts, f);
    }
}
