//! Seeded generators for the processes used to validate the estimators.
//!
//! Every generator starts at the origin (the perturbed gradient-descent model
//! may override its start) and draws all randomness from one ChaCha stream
//! seeded by [`ProcessSpec::seed`], so a spec reproduces its path bit for bit.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seed;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    /// `W_{k+1} = W_k + sigma ⊙ Z_k` with standard normal `Z_k`.
    /// `sigma` holds one value (shared) or one per coordinate.
    GaussianWalk { sigma: Vec<f64> },
    /// `W_{k+1} = W_k + scale * S_k` with i.i.d. symmetric alpha-stable coordinates.
    StableLevyWalk { alpha: f64, scale: f64 },
    /// Planar walk `W_{k+1} = W_k + (cos U_k, sin U_k) Z_k` with
    /// `U_k ~ U(-pi, pi)` and beta-prime step lengths `Z_k ~ β'(alpha, beta)`.
    BetaPrimeWalk { alpha: f64, beta: f64 },
    /// `W_{k+1} = W_k - step (c ⊙ W_k + Z_k)` for `f(w) = ½ Σ c_i w_i²`,
    /// `Z_k ~ N(0, diag(noise))`.
    PerturbedGdQuadratic {
        step: f64,
        curvature: Vec<f64>,
        noise: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<Vec<f64>>,
    },
}

impl ProcessKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProcessKind::GaussianWalk { .. } => "gaussian_walk",
            ProcessKind::StableLevyWalk { .. } => "stable_levy_walk",
            ProcessKind::BetaPrimeWalk { .. } => "beta_prime_walk",
            ProcessKind::PerturbedGdQuadratic { .. } => "perturbed_gd_quadratic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    pub dim: usize,
    pub steps: usize,
    pub seed: Seed,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, dim: usize, steps: usize, seed: Seed) -> Self {
        ProcessSpec {
            kind,
            dim,
            steps,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::arg("dimension must be at least 1"));
        }
        if self.steps == 0 {
            return Err(Error::arg("steps must be at least 1"));
        }
        let per_coord = |name: &str, v: &[f64], positive: bool| -> Result<()> {
            if v.len() != 1 && v.len() != self.dim {
                return Err(Error::arg(format!(
                    "{name} needs 1 or {} values, got {}",
                    self.dim,
                    v.len()
                )));
            }
            let ok = v
                .iter()
                .all(|x| x.is_finite() && if positive { *x > 0.0 } else { *x >= 0.0 });
            if !ok {
                return Err(Error::arg(format!("{name} values out of range")));
            }
            Ok(())
        };
        match &self.kind {
            ProcessKind::GaussianWalk { sigma } => per_coord("sigma", sigma, false),
            ProcessKind::StableLevyWalk { alpha, scale } => {
                check_stable_alpha(*alpha)?;
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::arg("stable scale must be positive"));
                }
                Ok(())
            }
            ProcessKind::BetaPrimeWalk { alpha, beta } => {
                check_shapes(*alpha, *beta)?;
                if self.dim != 2 {
                    return Err(Error::arg(format!(
                        "beta-prime walk is planar, dimension must be 2 (got {})",
                        self.dim
                    )));
                }
                Ok(())
            }
            ProcessKind::PerturbedGdQuadratic {
                step,
                curvature,
                noise,
                start,
            } => {
                if !(step.is_finite() && *step > 0.0) {
                    return Err(Error::arg("gradient step must be positive"));
                }
                per_coord("curvature", curvature, false)?;
                per_coord("noise", noise, false)?;
                if let Some(s) = start {
                    if s.len() != self.dim || s.iter().any(|v| !v.is_finite()) {
                        return Err(Error::arg(
                            "start point must be finite with the process dimension",
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_stable_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "stable index must lie in (0, 2], got {alpha}"
        )))
    }
}

fn check_shapes(alpha: f64, beta: f64) -> Result<()> {
    if alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "beta-prime shapes must be positive, got ({alpha}, {beta})"
        )))
    }
}

fn broadcast(v: &[f64], c: usize) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        v[c]
    }
}

pub fn simulate(spec: &ProcessSpec) -> Result<Trajectory> {
    spec.validate()?;
    let dim = spec.dim;
    let mut rng = spec.seed.rng();
    let mut data = Vec::with_capacity((spec.steps + 1) * dim);
    let mut w = match &spec.kind {
        ProcessKind::PerturbedGdQuadratic { start: Some(s), .. } => s.clone(),
        _ => vec![0.0; dim],
    };
    data.extend_from_slice(&w);
    for _ in 0..spec.steps {
        match &spec.kind {
            ProcessKind::GaussianWalk { sigma } => {
                for (c, x) in w.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x += broadcast(sigma, c) * z;
                }
            }
            ProcessKind::StableLevyWalk { alpha, scale } => {
                for x in w.iter_mut() {
                    *x += scale * stable_draw(*alpha, &mut rng);
                }
            }
            ProcessKind::BetaPrimeWalk { alpha, beta } => {
                let u = PI * (2.0 * rng.gen::<f64>() - 1.0);
                let z = beta_prime_draw(*alpha, *beta, &mut rng);
                w[0] += u.cos() * z;
                w[1] += u.sin() * z;
            }
            ProcessKind::PerturbedGdQuadratic {
                step,
                curvature,
                noise,
                ..
            } => {
                for (c, x) in w.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    let grad = broadcast(curvature, c) * *x;
                    *x -= step * (grad + broadcast(noise, c).sqrt() * z);
                }
            }
        }
        data.extend_from_slice(&w);
    }
    Trajectory::from_flat(data, dim)
}

/// Natural log of a `Gamma(shape, 1)` draw (Marsaglia–Tsang squeeze/reject).
///
/// Shapes below one use `G(shape) = G(shape + 1) · U^{1/shape}`; working in
/// log space keeps tiny shapes from underflowing to zero.
pub fn ln_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        return ln_gamma_draw(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

fn beta_prime_draw<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let ln_ratio = ln_gamma_draw(alpha, rng) - ln_gamma_draw(beta, rng);
    ln_ratio.exp().clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Draw from `β'(alpha, beta)` as the ratio of two independent gamma draws.
pub fn beta_prime_sample<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    check_shapes(alpha, beta)?;
    Ok(beta_prime_draw(alpha, beta, rng))
}

/// Chambers–Mallows–Stuck transform for a symmetric alpha-stable variable with
/// unit scale (characteristic function `exp(-|t|^alpha)`), from an angle
/// `v ∈ (-pi/2, pi/2)` and a unit exponential `w`. Odd in `v`.
pub fn stable_from_parts(alpha: f64, v: f64, w: f64) -> f64 {
    if alpha == 1.0 {
        return v.tan();
    }
    let cv = v.cos();
    (alpha * v).sin() / cv.powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

fn stable_draw<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v = PI * (u - 0.5);
    let w: f64 = rng.sample(Exp1);
    stable_from_parts(alpha, v, w)
}

/// Symmetric alpha-stable draw with unit scale; at `alpha = 2` this is
/// Gaussian with variance 2.
pub fn stable_sample<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    check_stable_alpha(alpha)?;
    Ok(stable_draw(alpha, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};
    use crate::stats::{ks_two_sample, median, sample_std};
    use crate::trajectory::{increments, norm};

    fn gaussian(dim: usize, steps: usize, sigma: f64, seed: u64) -> ProcessSpec {
        ProcessSpec::new(
            ProcessKind::GaussianWalk { sigma: vec![sigma] },
            dim,
            steps,
            Seed(seed),
        )
    }

    #[test]
    fn gaussian_walk_is_reproducible() {
        let spec = gaussian(2, 2, 1.0, 42);
        let a = simulate(&spec).unwrap();
        let b = simulate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a.point(0), &[0.0, 0.0]);
        for d in increments(&a, 1).unwrap().deltas() {
            assert!(norm(d) > 0.0);
        }
        assert_ne!(a, simulate(&gaussian(2, 2, 1.0, 43)).unwrap());
    }

    #[test]
    fn spec_validation() {
        let bp = |dim| {
            ProcessSpec::new(
                ProcessKind::BetaPrimeWalk {
                    alpha: 0.5,
                    beta: 3.5,
                },
                dim,
                10,
                Seed(0),
            )
        };
        assert!(simulate(&bp(3)).is_err());
        assert!(simulate(&bp(2)).is_ok());
        let st = |alpha| {
            ProcessSpec::new(
                ProcessKind::StableLevyWalk { alpha, scale: 1.0 },
                1,
                10,
                Seed(0),
            )
        };
        assert!(simulate(&st(2.5)).is_err());
        assert!(simulate(&st(0.0)).is_err());
        assert!(simulate(&st(2.0)).is_ok());
        assert!(simulate(&gaussian(0, 3, 1.0, 0)).is_err());
        assert!(simulate(&gaussian(2, 0, 1.0, 0)).is_err());
        let bad_sigma = ProcessSpec::new(
            ProcessKind::GaussianWalk {
                sigma: vec![1.0, 2.0, 3.0],
            },
            2,
            3,
            Seed(0),
        );
        assert!(simulate(&bad_sigma).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ProcessSpec::new(
            ProcessKind::PerturbedGdQuadratic {
                step: 0.1,
                curvature: vec![1.0],
                noise: vec![0.5],
                start: None,
            },
            3,
            5,
            Seed(9),
        );
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"perturbed_gd_quadratic\""));
        let back: ProcessSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn stable_alpha_two_matches_gaussian_walk() {
        let stable = simulate(&ProcessSpec::new(
            ProcessKind::StableLevyWalk {
                alpha: 2.0,
                scale: 1.0,
            },
            1,
            10_000,
            Seed(5),
        ))
        .unwrap();
        let gauss = simulate(&gaussian(1, 10_000, 2f64.sqrt(), 6)).unwrap();
        let a: Vec<f64> = increments(&stable, 1).unwrap().coordinate(0).collect();
        let b: Vec<f64> = increments(&gauss, 1).unwrap().coordinate(0).collect();
        let d = ks_two_sample(&a, &b);
        // c(0.001) = 1.949 for the two-sample KS test
        let crit = 1.949 * ((a.len() + b.len()) as f64 / (a.len() * b.len()) as f64).sqrt();
        assert!(d < crit, "KS {d} >= {crit}");
    }

    #[test]
    fn stable_variance_at_two() {
        let mut rng = Seed(1).rng();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| stable_sample(2.0, &mut rng).unwrap())
            .collect();
        let var = sample_std(&xs).powi(2);
        assert!((1.94..=2.06).contains(&var), "variance {var}");
    }

    #[test]
    fn stable_cauchy_cdf_at_one() {
        let mut rng = Seed(2).rng();
        let n = 100_000;
        let below = (0..n)
            .filter(|_| stable_sample(1.0, &mut rng).unwrap() <= 1.0)
            .count();
        let f = below as f64 / n as f64;
        assert!((f - 0.75).abs() < 0.01, "empirical CDF {f}");
    }

    #[test]
    fn stable_transform_is_odd() {
        for &alpha in &[0.3, 1.0, 1.5, 2.0] {
            for &(v, w) in &[(0.3, 0.7), (1.2, 2.5), (0.01, 0.1)] {
                assert_eq!(
                    stable_from_parts(alpha, -v, w),
                    -stable_from_parts(alpha, v, w)
                );
            }
        }
        assert!(stable_sample(2.1, &mut Seed(0).rng()).is_err());
    }

    /// CDF of β'(a, b) at x by quadrature of the (unnormalized) density.
    fn beta_prime_cdf(a: f64, b: f64, x: f64) -> f64 {
        let dens = |t: f64| t.powf(a - 1.0) * (1.0 + t).powf(-a - b);
        let opts = QuadOptions::relative(1e-11);
        let below = integrate(dens, 0.0, x, opts).unwrap().value;
        let above = integrate_to_infinity(dens, x, opts).unwrap().value;
        below / (below + above)
    }

    #[test]
    fn beta_prime_median_by_quadrature() {
        let (a, b) = (0.5, 3.5);
        // bisection for the analytic median
        let (mut lo, mut hi) = (1e-6, 10.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if beta_prime_cdf(a, b, mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x_half = 0.5 * (lo + hi);
        let mut rng = Seed(3).rng();
        let n = 100_000;
        let below = (0..n)
            .filter(|_| beta_prime_sample(a, b, &mut rng).unwrap() <= x_half)
            .count();
        let f = below as f64 / n as f64;
        assert!(
            (f - 0.5).abs() < 0.01,
            "empirical CDF at analytic median {f}"
        );
    }

    #[test]
    fn beta_prime_unit_shapes_median() {
        // density (1+x)^-2, CDF x/(1+x), median 1
        assert!((beta_prime_cdf(1.0, 1.0, 1.0) - 0.5).abs() < 1e-9);
        let mut rng = Seed(4).rng();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| beta_prime_sample(1.0, 1.0, &mut rng).unwrap())
            .collect();
        let m = median(&xs);
        assert!((0.97..=1.03).contains(&m), "median {m}");
    }

    #[test]
    fn beta_prime_rejects_bad_shapes() {
        let mut rng = Seed(0).rng();
        assert!(beta_prime_sample(0.0, 1.0, &mut rng).is_err());
        assert!(beta_prime_sample(1.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn beta_prime_tiny_shape_stays_positive() {
        let mut rng = Seed(8).rng();
        for _ in 0..10_000 {
            let z = beta_prime_sample(0.01, 3.5, &mut rng).unwrap();
            assert!(z > 0.0 && z.is_finite());
        }
    }

    #[test]
    fn gaussian_lag_variance_scales_with_lag() {
        let t = simulate(&gaussian(1, 100_000, 1.0, 10)).unwrap();
        let v1 = sample_std(&increments(&t, 1).unwrap().coordinate(0).collect::<Vec<_>>()).powi(2);
        let v4 = sample_std(&increments(&t, 4).unwrap().coordinate(0).collect::<Vec<_>>()).powi(2);
        // lag-4 increments overlap, so the ratio is noisier than i.i.d. sampling
        assert!((v4 / v1 - 4.0).abs() < 0.15, "ratio {}", v4 / v1);
    }

    #[test]
    fn stable_walk_has_heavier_tail() {
        let g = simulate(&gaussian(1, 100_000, 2f64.sqrt(), 11)).unwrap();
        let s = simulate(&ProcessSpec::new(
            ProcessKind::StableLevyWalk {
                alpha: 1.5,
                scale: 1.0,
            },
            1,
            100_000,
            Seed(12),
        ))
        .unwrap();
        // 99.9% quantile of |N(0, 2)| is sqrt(2) * 3.2905
        let q = 2f64.sqrt() * 3.290_526_731_491_926;
        let exceed = |t: &Trajectory| {
            increments(t, 1)
                .unwrap()
                .norms()
                .iter()
                .filter(|v| **v > q)
                .count()
        };
        assert!(exceed(&s) > exceed(&g), "{} vs {}", exceed(&s), exceed(&g));
    }

    #[test]
    fn noiseless_gd_contracts_monotonically() {
        let spec = ProcessSpec::new(
            ProcessKind::PerturbedGdQuadratic {
                step: 0.3,
                curvature: vec![1.0, 5.0, 0.2],
                noise: vec![0.0],
                start: Some(vec![1.0, -2.0, 3.0]),
            },
            3,
            200,
            Seed(0),
        );
        let t = simulate(&spec).unwrap();
        let norms: Vec<f64> = t.points().map(norm).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
        assert!(*norms.last().unwrap() < 1e-3);
    }
}
