//! Plug-in evaluation of the generalization bounds and their special functions.
//!
//! All bounds hold up to universal constants that are not known explicitly;
//! they enter as `k1`, `k2` (default 1). The chaining argument behind them
//! gives constants in the hundreds, which is likely far from tight, so the
//! values here are meant for comparing runs, not as certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::BallMassCurve;
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Bound `B` on the loss.
    pub loss_bound: f64,
    /// Lipschitz constant `L` of the loss.
    pub lipschitz: f64,
    pub rho: f64,
    /// Number of training samples.
    pub n: f64,
    pub delta: f64,
    pub gamma2: f64,
    /// `I_∞(X, W)`, supplied by the caller.
    pub mutual_info_inf: f64,
    /// `I_1(X, W)`, supplied by the caller.
    pub mutual_info_1: f64,
    pub k1: f64,
    pub k2: f64,
    /// Probability that the empirical risk exceeds `B` for unbounded losses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unbounded_tail_prob: Option<f64>,
}

impl Default for BoundInputs {
    fn default() -> Self {
        BoundInputs {
            loss_bound: 1.0,
            lipschitz: 1.0,
            rho: 1.0,
            n: 1.0,
            delta: 0.05,
            gamma2: 0.0,
            mutual_info_inf: 0.0,
            mutual_info_1: 0.0,
            k1: 1.0,
            k2: 1.0,
            unbounded_tail_prob: None,
        }
    }
}

impl BoundInputs {
    /// `L_rho = max(B, L rho)`.
    pub fn l_rho(&self) -> f64 {
        self.loss_bound.max(self.lipschitz * self.rho)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("loss bound", self.loss_bound),
            ("Lipschitz constant", self.lipschitz),
            ("rho", self.rho),
            ("n", self.n),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::arg(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        let nonneg = [
            ("gamma2", self.gamma2),
            ("I_inf", self.mutual_info_inf),
            ("I_1", self.mutual_info_1),
            ("k1", self.k1),
            ("k2", self.k2),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::arg(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if let Some(p) = self.unbounded_tail_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::arg(format!(
                    "tail probability must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// High-probability bound
/// `k1 L_rho (gamma2 / sqrt(n) + sqrt((log(1/delta) + I_∞) / n))`.
pub fn theorem1_high_prob_bound(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    let sqrt_n = inp.n.sqrt();
    let info = ((1.0 / inp.delta).ln() + inp.mutual_info_inf) / inp.n;
    Ok(inp.k1 * inp.l_rho() * (inp.gamma2 / sqrt_n + info.sqrt()))
}

/// Probability with which [`theorem1_high_prob_bound`] holds: `1 - delta`, less
/// the caller-supplied tail probability for unbounded losses.
pub fn theorem1_confidence(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    Ok(1.0 - inp.delta - inp.unbounded_tail_prob.unwrap_or(0.0))
}

/// Expectation bound `k2 L_rho (E gamma2 + sqrt(I_1)) / sqrt(n)`, with `gamma2`
/// standing in for its expectation.
pub fn theorem1_expectation_bound(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    Ok(inp.k2 * inp.l_rho() * (inp.gamma2 + inp.mutual_info_1.sqrt()) / inp.n.sqrt())
}

/// `gamma2 <= sqrt(pi alpha) / (2 rho C_rho)` for Ahlfors lower-regular
/// trajectories with exponent `alpha` and constant `C_rho`.
pub fn corollary1_bound(alpha: f64, rho: f64, c_rho: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::arg(format!("alpha must be positive, got {alpha}")));
    }
    if !(rho.is_finite() && rho > 0.0 && c_rho.is_finite() && c_rho > 0.0) {
        return Err(Error::arg("rho and C_rho must be positive"));
    }
    if rho * c_rho > 1.0 {
        return Err(Error::arg(format!(
            "rho * C_rho must not exceed 1 (got {})",
            rho * c_rho
        )));
    }
    Ok((std::f64::consts::PI * alpha).sqrt() / (2.0 * rho * c_rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelFunctional {
    pub value: f64,
    /// Leading radii dropped because their empirical mass is zero.
    pub trimmed: usize,
}

/// `(1/rho) ∫_0^rho sqrt(log(3^{D+2} / P(r))) dr` with `P` the empirical ball
/// mass, integrated with the trapezoidal rule over the curve's radii up to `rho`.
/// The integrand is held constant on `[0, r_first]` and `[r_last, rho]`.
pub fn kernel_functional(curve: &BallMassCurve, rho: f64, dim: usize) -> Result<KernelFunctional> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::arg("rho must be positive"));
    }
    if dim == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    let offset = (dim as f64 + 2.0) * 3f64.ln();
    let inside: Vec<(f64, f64)> = curve
        .radii
        .radii()
        .iter()
        .zip(&curve.masses)
        .filter(|(r, _)| **r <= rho)
        .map(|(r, m)| (*r, *m))
        .collect();
    let trimmed = inside.iter().take_while(|(_, m)| *m <= 0.0).count();
    let pts = &inside[trimmed..];
    if pts.is_empty() {
        return Err(Error::Degenerate(
            "every ball mass on [0, rho] is zero".into(),
        ));
    }
    let h = |m: f64| (offset - m.min(1.0).ln()).sqrt();
    let (r0, m0) = pts[0];
    let (rn, mn) = pts[pts.len() - 1];
    let mut acc = r0 * h(m0);
    for s in pts.windows(2) {
        acc += 0.5 * (s[1].0 - s[0].0) * (h(s[0].1) + h(s[1].1));
    }
    acc += (rho - rn) * h(mn);
    Ok(KernelFunctional {
        value: acc / rho,
        trimmed,
    })
}

/// Relative tolerance of [`j_integral`].
pub const J_REL_TOL: f64 = 1e-6;

/// `∫_x0^∞ σ^{β-1} e^{-σ} dσ` (upper incomplete gamma) by quadrature, valid
/// for any real `β` when `x0 > 0`.
fn upper_gamma_tail(beta: f64, x0: f64) -> Result<f64> {
    let opts = QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_intervals: 400,
    };
    let split = x0.max(1.0);
    let far = integrate_to_infinity(|s| s.powf(beta - 1.0) * (-s).exp(), split, opts)?.value;
    if x0 >= 1.0 {
        return Ok(far);
    }
    // σ = e^y removes the power singularity at the origin
    let near = integrate(|y| (beta * y).exp() * (-y.exp()).exp(), x0.ln(), 0.0, opts)?.value;
    Ok(near + far)
}

/// `J(a, D) = (1/T) ∫_0^1 ∫_{1/T}^∞ v^{D/2-1} s^{D/2-2} e^{-a s v rho²} ds dv`.
///
/// The outer variable is mapped by `v = u^{2/D}` (turning `v^{D/2-1} dv` into
/// `(2/D) du`) and the inner one by `σ = a rho² v s`, after which the inner
/// integral is an upper incomplete gamma function evaluated by quadrature.
pub fn j_integral(a: f64, t_horizon: f64, rho: f64, dim: usize) -> Result<f64> {
    for (name, v) in [("a", a), ("T", t_horizon), ("rho", rho)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::arg(format!("{name} must be positive, got {v}")));
        }
    }
    if dim == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    let d = dim as f64;
    let c = a * rho * rho;
    let beta = d / 2.0 - 1.0;
    let mut inner_err: Option<Error> = None;
    let outer = integrate(
        |u| {
            let v = u.powf(2.0 / d).max(f64::MIN_POSITIVE);
            let cv = c * v;
            match upper_gamma_tail(beta, cv / t_horizon) {
                Ok(g) => cv.powf(-beta) * g,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        QuadOptions {
            rel_tol: J_REL_TOL,
            abs_tol: 0.0,
            max_intervals: 1000,
        },
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    let scale = 2.0 / (d * t_horizon);
    match outer {
        Ok(r) => Ok(scale * r.value),
        Err(Error::Convergence { estimate, error }) => Err(Error::Convergence {
            estimate: scale * estimate,
            error: scale * error,
        }),
        Err(e) => Err(e),
    }
}

/// Both sides of the Gaussian radial-integral sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussRadialCheck {
    /// `∫_0^r u^{D-1} e^{-a u²} du`.
    pub integral: f64,
    /// `(r^D / 2) I_rho(a, D)` with `I_rho(a, D) = ∫_0^1 v^{D/2-1} e^{-a v rho²} dv`.
    pub lower: f64,
    /// `r^D / D`.
    pub upper: f64,
    pub holds: bool,
}

/// Slack allowed in [`gauss_radial_bounds_check`].
pub const GAUSS_CHECK_SLACK: f64 = 1e-10;

pub fn gauss_radial_bounds_check(a: f64, r: f64, rho: f64, dim: usize) -> Result<GaussRadialCheck> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::arg(format!("a must be positive, got {a}")));
    }
    if dim == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    if !(r > 0.0 && r.is_finite() && rho.is_finite()) {
        return Err(Error::arg("r must be positive"));
    }
    if r > rho {
        return Err(Error::arg(format!("r = {r} exceeds rho = {rho}")));
    }
    let d = dim as f64;
    let opts = QuadOptions::relative(1e-13);
    let integral = integrate(|u| u.powf(d - 1.0) * (-a * u * u).exp(), 0.0, r, opts)?.value;
    let i_rho =
        2.0 / d * integrate(|u| (-a * rho * rho * u.powf(2.0 / d)).exp(), 0.0, 1.0, opts)?.value;
    let rd = r.powf(d);
    let lower = 0.5 * rd * i_rho;
    let upper = rd / d;
    Ok(GaussRadialCheck {
        integral,
        lower,
        upper,
        holds: lower <= integral + GAUSS_CHECK_SLACK && integral <= upper + GAUSS_CHECK_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadiusGrid;

    fn base() -> BoundInputs {
        BoundInputs {
            n: 100.0,
            delta: (-1.0f64).exp(),
            ..Default::default()
        }
    }

    #[test]
    fn high_prob_example() {
        assert!((theorem1_high_prob_bound(&base()).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn high_prob_homogeneity() {
        let mut inp = BoundInputs {
            gamma2: 0.7,
            mutual_info_inf: 2.0,
            ..base()
        };
        let a = theorem1_high_prob_bound(&inp).unwrap();
        inp.n *= 2.0;
        let b = theorem1_high_prob_bound(&inp).unwrap();
        assert!((b - a / 2f64.sqrt()).abs() < 1e-15);
        inp.n /= 2.0;
        inp.lipschitz = 2.0;
        assert_eq!(inp.l_rho(), 2.0);
        assert!((theorem1_high_prob_bound(&inp).unwrap() - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn delta_out_of_range() {
        for delta in [0.0, 1.0, 1.5] {
            assert!(theorem1_high_prob_bound(&BoundInputs { delta, ..base() }).is_err());
        }
    }

    #[test]
    fn confidence_accounts_for_tail() {
        let inp = BoundInputs {
            delta: 0.05,
            unbounded_tail_prob: Some(0.01),
            ..base()
        };
        assert!((theorem1_confidence(&inp).unwrap() - 0.94).abs() < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let inp = BoundInputs {
            gamma2: 1.0,
            n: 4.0,
            ..Default::default()
        };
        assert_eq!(theorem1_expectation_bound(&inp).unwrap(), 0.5);
        let inp = BoundInputs {
            mutual_info_1: 4.0,
            n: 9.0,
            ..Default::default()
        };
        assert_eq!(theorem1_expectation_bound(&inp).unwrap(), 2.0 / 3.0);
        let inp3 = BoundInputs {
            k2: 3.0,
            ..inp.clone()
        };
        assert_eq!(
            theorem1_expectation_bound(&inp3).unwrap(),
            3.0 * theorem1_expectation_bound(&inp).unwrap()
        );
    }

    #[test]
    fn corollary_examples() {
        let one = corollary1_bound(1.0, 1.0, 1.0).unwrap();
        assert!((one - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((one - 0.886_226_925_452_758).abs() < 1e-15);
        assert_eq!(corollary1_bound(4.0, 1.0, 1.0).unwrap(), 2.0 * one);
        assert!(corollary1_bound(1.0, 1.5, 1.0).is_err());
    }

    fn analytic_curve(alpha: f64, count: usize) -> BallMassCurve {
        let radii: Vec<f64> = (1..=count).map(|i| i as f64 / count as f64).collect();
        let masses = radii.iter().map(|r| r.powf(alpha)).collect();
        BallMassCurve {
            radii: RadiusGrid::from_radii(radii).unwrap(),
            masses,
            lags: vec![1],
        }
    }

    #[test]
    fn kernel_functional_unit_mass() {
        for dim in 1..5 {
            let mut c = analytic_curve(1.0, 50);
            c.masses = vec![1.0; 50];
            let v = kernel_functional(&c, 1.0, dim).unwrap().value;
            assert!((v - ((dim as f64 + 2.0) * 3f64.ln()).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_functional_matches_quadrature() {
        for alpha in [0.5, 1.0, 2.0] {
            let c = analytic_curve(alpha, 100_000);
            let v = kernel_functional(&c, 1.0, 2).unwrap().value;
            let exact = integrate(
                |r| (4.0 * 3f64.ln() - alpha * r.ln()).sqrt(),
                0.0,
                1.0,
                QuadOptions::relative(1e-12),
            )
            .unwrap()
            .value;
            assert!((v - exact).abs() < 1e-4, "alpha {alpha}: {v} vs {exact}");
        }
    }

    #[test]
    fn kernel_functional_monotone_and_trimming() {
        let c = analytic_curve(1.0, 100);
        let v = kernel_functional(&c, 1.0, 2).unwrap().value;
        let mut half = c.clone();
        half.masses.iter_mut().for_each(|m| *m *= 0.5);
        assert!(kernel_functional(&half, 1.0, 2).unwrap().value > v);

        let mut z = c.clone();
        z.masses[0] = 0.0;
        z.masses[1] = 0.0;
        assert_eq!(kernel_functional(&z, 1.0, 2).unwrap().trimmed, 2);
        z.masses.iter_mut().for_each(|m| *m = 0.0);
        assert!(matches!(
            kernel_functional(&z, 1.0, 2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn j_integral_closed_forms() {
        // D = 2, a = T = rho = 1: ∫_0^1 E1(v) dv = E1(1) + 1 - 1/e
        let e1_of_one = 0.219_383_934_395_520_3;
        let exact = e1_of_one + 1.0 - (-1.0f64).exp();
        let j = j_integral(1.0, 1.0, 1.0, 2).unwrap();
        assert!(((j - exact) / exact).abs() < 1e-6, "{j} vs {exact}");
        // D = 4: ∫_0^1 e^{-v}... reduces to 1 - 1/e
        let j4 = j_integral(1.0, 1.0, 1.0, 4).unwrap();
        assert!(((j4 - (1.0 - (-1.0f64).exp())) / j4).abs() < 1e-6);
    }

    #[test]
    fn j_integral_reference_values() {
        // computed independently from the incomplete-gamma form
        // (1/T) ∫_0^T c^{-D/2} γ(D/2, c/x) dx, c = a rho²
        let table = [
            ((1.0, 1.0, 1.0, 1), 1.671_795_977_406_415_5),
            ((1.0, 1.0, 1.0, 3), 0.657_750_276_921_646_7),
            ((0.5, 10.0, 0.5, 3), 0.459_267_080_352_022_8),
            ((4.0, 10.0, 1.0, 4), 0.020_604_997_122_772_54),
            ((2.0, 1.0, 0.5, 1), 2.128_930_612_362_862),
        ];
        for ((a, t, rho, d), want) in table {
            let got = j_integral(a, t, rho, d).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "J({a},{t},{rho},{d}) = {got}, want {want}"
            );
        }
    }

    fn j_riemann(a: f64, t_horizon: f64, rho: f64, dim: usize, nodes: usize) -> f64 {
        // v = x², s = 1 / (T y), midpoint rule on the unit square
        let d = dim as f64;
        let c = a * rho * rho;
        let h = 1.0 / nodes as f64;
        let mut total = 0.0;
        for i in 0..nodes {
            let y = (i as f64 + 0.5) * h;
            let s = 1.0 / (t_horizon * y);
            let mut row = 0.0;
            for j in 0..nodes {
                let x = (j as f64 + 0.5) * h;
                let v = x * x;
                row += v.powf(d / 2.0 - 1.0) * 2.0 * x * (-c * s * v).exp();
            }
            total += row * s.powf(d / 2.0 - 2.0) / (t_horizon * y * y);
        }
        total * h * h / t_horizon
    }

    #[test]
    fn j_integral_matches_riemann_sum() {
        for (a, t, rho, d) in [(1.0, 1.0, 1.0, 2), (1.0, 1.0, 1.0, 3), (2.0, 10.0, 0.5, 2)] {
            let want = j_riemann(a, t, rho, d, 1000);
            let got = j_integral(a, t, rho, d).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-4,
                "J({a},{t},{rho},{d}) = {got}, sum {want}"
            );
        }
    }

    #[test]
    fn j_integral_decreasing_in_a() {
        for d in 1..=4 {
            let mut last = f64::INFINITY;
            for a in [0.5, 1.0, 2.0, 4.0] {
                let j = j_integral(a, 1.0, 1.0, d).unwrap();
                assert!(j < last);
                last = j;
            }
        }
    }

    #[test]
    fn j_integral_argument_errors() {
        assert!(j_integral(0.0, 1.0, 1.0, 2).is_err());
        assert!(j_integral(1.0, -1.0, 1.0, 2).is_err());
        assert!(j_integral(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn gauss_check_examples() {
        let c = gauss_radial_bounds_check(1.0, 0.5, 1.0, 2).unwrap();
        assert!(c.holds, "{c:?}");
        // D = 2 closed form: (1 - e^{-a r²}) / (2a)
        assert!((c.integral - (1.0 - (-0.25f64).exp()) / 2.0).abs() < 1e-14);

        let c = gauss_radial_bounds_check(1e-12, 0.7, 1.0, 3).unwrap();
        assert!((c.integral - c.upper).abs() < 1e-12);

        for d in 1..=5 {
            let c = gauss_radial_bounds_check(2.0, 0.8, 0.8, d).unwrap();
            assert!((c.lower - c.integral).abs() < 1e-10, "{c:?}");
            assert!(c.holds);
        }
        assert!(gauss_radial_bounds_check(1.0, 2.0, 1.0, 2).is_err());
    }

    #[test]
    fn gauss_check_random_grid() {
        use rand::Rng;
        let mut rng = crate::seed::Seed(11).rng();
        for _ in 0..100 {
            let a = 10f64.powf(rng.gen_range(-2.0..1.0));
            let rho = rng.gen_range(0.1..2.0);
            let r = rho * rng.gen_range(0.01..1.0);
            let d = rng.gen_range(1..=6);
            let c = gauss_radial_bounds_check(a, r, rho, d).unwrap();
            assert!(c.holds, "{a} {r} {rho} {d}: {c:?}");
        }
    }
}
