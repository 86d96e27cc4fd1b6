use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use ftchain_core::bounds::{
    corollary1_bound, kernel_functional, theorem1_confidence, theorem1_expectation_bound,
    theorem1_high_prob_bound, BoundInputs,
};
use ftchain_core::experiments::{emit_report_with, run_study, Normalization, StudyKind, StudySpec};
use ftchain_core::exponents::{
    ball_mass_curve, ball_mass_curve_sup, exponent_from_ball_mass, fit_power_law,
    fit_power_law_with_xmin, layerwise_stable_index, lower_tail_exponent_reciprocal,
    pooled_increments, stable_index,
};
use ftchain_core::ft::{default_rho, estimate_gamma2};
use ftchain_core::simulate::simulate;
use ftchain_core::spatial::{covering_numbers, k_function};
use ftchain_core::trajectory::{
    format_f64, increments, load_trajectory, normalize_by_running_std, save_trajectory,
};
use ftchain_core::{
    Error, FtOptions, ProcessKind, ProcessSpec, RadiusGrid, Result, Seed, StdConvention, Trajectory,
};

use crate::args::*;

pub struct Ctx {
    pub verbose: u8,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("ftchain: {}", msg.as_ref());
        }
    }
}

pub fn run(cmd: &Command, ctx: &Ctx) -> Result<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a, ctx),
        Command::Gamma2(a) => cmd_gamma2(a, ctx),
        Command::TailFit(a) => cmd_tail_fit(a),
        Command::StableIndex(a) => cmd_stable_index(a),
        Command::Ballmass(a) => cmd_ballmass(a),
        Command::Kfunction(a) => cmd_kfunction(a),
        Command::Cover(a) => cmd_cover(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Study(a) => cmd_study(a, ctx),
        Command::Analyze(a) => cmd_analyze(a, ctx),
    }
}

/// Resolved flags of a run, without output paths or thread count.
fn config<T: Serialize>(command: &str, args: &T) -> Value {
    let mut map = Map::new();
    map.insert("command".into(), json!(command));
    if let Value::Object(fields) = serde_json::to_value(args).expect("arguments serialize") {
        map.extend(fields.into_iter().filter(|(_, v)| !v.is_null()));
    }
    Value::Object(map)
}

fn report(config: Value, body: Value) -> Value {
    let mut map = Map::new();
    map.insert("config".into(), config);
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    Value::Object(map)
}

fn emit(value: &Value, out: &OutputArgs) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io(Path::new("<stdout>"), e)),
    }
}

fn write_curve(path: &Path, columns: (&str, &str), xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut text = format!("{},{}\n", columns.0, columns.1);
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(text, "{},{}", format_f64(*x), format_f64(*y));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load(input: &InputArgs) -> Result<Trajectory> {
    load_trajectory(&input.input, input.header)
}

fn load_samples(input: &InputArgs) -> Result<Vec<f64>> {
    let t = load(input)?;
    if t.dim() != 1 {
        return Err(Error::arg(format!(
            "raw samples must be a single column, found {}",
            t.dim()
        )));
    }
    Ok(t.as_flat().to_vec())
}

fn section<T: Serialize>(r: Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("result serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn convention(c: ConventionArg) -> StdConvention {
    match c {
        ConventionArg::Population => StdConvention::Population,
        ConventionArg::Sample => StdConvention::Sample,
    }
}

fn ft_options(o: &OptimizerArgs) -> FtOptions {
    FtOptions {
        iterations: o.iterations,
        restarts: o.restarts,
        step: o.step,
        seed: Seed(o.seed),
    }
}

/// Log-spaced radii, with missing ends taken from `auto`.
fn radius_grid(r: &RadiiArgs, auto: (f64, f64)) -> Result<RadiusGrid> {
    let lo = r.r_min.unwrap_or(auto.0);
    let hi = r.r_max.unwrap_or(auto.1);
    RadiusGrid::log_spaced(lo, hi, r.radii)
}

fn positive_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| *v > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo.is_finite() && hi > lo {
        (lo, hi)
    } else if lo.is_finite() {
        (lo / 10.0, lo * 10.0)
    } else {
        (1e-3, 1.0)
    }
}

fn cmd_simulate(a: &SimulateArgs, ctx: &Ctx) -> Result<()> {
    let kind = match a.kind {
        KindArg::GaussianWalk => ProcessKind::GaussianWalk {
            sigma: a.sigma.clone(),
        },
        KindArg::StableLevyWalk => ProcessKind::StableLevyWalk {
            alpha: a.alpha,
            scale: a.scale,
        },
        KindArg::BetaPrimeWalk => ProcessKind::BetaPrimeWalk {
            alpha: a.alpha,
            beta: a.beta,
        },
        KindArg::PerturbedGdQuadratic => ProcessKind::PerturbedGdQuadratic {
            step: a.gd_step,
            curvature: a.curvature.clone(),
            noise: a.noise.clone(),
            start: a.start.clone(),
        },
    };
    let spec = ProcessSpec::new(kind, a.dim, a.steps, Seed(a.seed));
    let t = simulate(&spec)?;
    save_trajectory(&t, &a.trajectory)?;
    ctx.note(format!(
        "wrote {} points to {}",
        t.len(),
        a.trajectory.display()
    ));
    let body = json!({ "process": spec, "points": t.len(), "dim": t.dim() });
    emit(&report(config("simulate", a), body), &a.out)
}

fn cmd_gamma2(a: &Gamma2Args, ctx: &Ctx) -> Result<()> {
    let raw = load(&a.input)?;
    let rho = a
        .rho
        .unwrap_or_else(|| default_rho(a.loss_bound, a.lipschitz));
    let mut body = Map::new();
    let t = if a.normalize {
        let nt = normalize_by_running_std(&raw, convention(a.std_convention))?;
        body.insert("unscaled_prefix".into(), json!(nt.unscaled_prefix()));
        nt.trajectory
    } else {
        raw
    };
    ctx.note(format!(
        "estimating gamma2 on {} points, rho = {rho}",
        t.len()
    ));
    let est = estimate_gamma2(&t, rho, &ft_options(&a.opt))?;
    body.insert("gamma2".into(), json!(est.value));
    body.insert("weights".into(), json!(est.weights));
    body.insert("method".into(), json!(est.method.label()));
    body.insert("n".into(), json!(t.len()));
    body.insert("rho".into(), json!(rho));
    body.insert("seed".into(), json!(a.opt.seed));
    emit(&report(config("gamma2", a), Value::Object(body)), &a.out)
}

fn cmd_tail_fit(a: &TailFitArgs) -> Result<()> {
    let fit = if a.raw {
        let s = load_samples(&a.input)?;
        match a.xmin {
            Some(x) => fit_power_law_with_xmin(&s, x)?,
            None => fit_power_law(&s)?,
        }
    } else {
        if a.xmin.is_some() {
            return Err(Error::arg("--xmin applies to --raw samples only"));
        }
        lower_tail_exponent_reciprocal(&load(&a.input)?)?
    };
    emit(&report(config("tail-fit", a), json!(fit)), &a.out)
}

/// Parses 1-based ranges such as `1-3,4,5-8` into zero-based blocks.
pub fn parse_blocks(spec: &str) -> Result<Vec<Vec<usize>>> {
    let bad = || {
        Error::arg(format!(
            "cannot parse blocks '{spec}' (expected e.g. 1-3,4,5-8)"
        ))
    };
    spec.split(',')
        .map(|part| {
            let part = part.trim();
            let (lo, hi) = match part.split_once('-') {
                Some((l, h)) => (l.trim().parse::<usize>(), h.trim().parse::<usize>()),
                None => (part.parse::<usize>(), part.parse::<usize>()),
            };
            match (lo, hi) {
                (Ok(l), Ok(h)) if l >= 1 && l <= h => Ok((l - 1..h).collect()),
                _ => Err(bad()),
            }
        })
        .collect()
}

fn cmd_stable_index(a: &StableIndexArgs) -> Result<()> {
    let res = if a.raw {
        if a.blocks.is_some() {
            return Err(Error::arg(
                "--blocks applies to trajectories, not --raw samples",
            ));
        }
        stable_index(&load_samples(&a.input)?, a.block_size)?
    } else {
        let t = load(&a.input)?;
        match &a.blocks {
            Some(s) => layerwise_stable_index(&t, &parse_blocks(s)?, a.block_size)?,
            None => {
                let coords: Vec<usize> = (0..t.dim()).collect();
                stable_index(&pooled_increments(&t, &coords)?, a.block_size)?
            }
        }
    };
    emit(&report(config("stable-index", a), json!(res)), &a.out)
}

fn cmd_ballmass(a: &BallmassArgs) -> Result<()> {
    let t = load(&a.input)?;
    let mut norms = Vec::new();
    for &k in &a.lags {
        if k >= 1 && k < t.len() {
            norms.extend(increments(&t, k)?.norms());
        }
    }
    let radii = radius_grid(&a.radii, positive_range(norms.into_iter()))?;
    let curve = match a.sup_anchors {
        Some(n) => ball_mass_curve_sup(&t, &a.lags, &radii, n)?,
        None => ball_mass_curve(&t, &a.lags, &radii)?,
    };
    if let Some(path) = &a.curve.curve {
        write_curve(path, ("r", "mass"), radii.radii(), &curve.masses)?;
    }
    let mut body = Map::new();
    body.insert(
        "mode".into(),
        json!(if a.sup_anchors.is_some() {
            "sup"
        } else {
            "average"
        }),
    );
    body.insert("r_range".into(), json!([radii.radii()[0], radii.rho()]));
    body.insert(
        "exponent".into(),
        section(exponent_from_ball_mass(&curve, (a.window_lo, a.window_hi))),
    );
    if let Some(rho) = a.rho {
        body.insert(
            "kernel_functional".into(),
            section(kernel_functional(&curve, rho, t.dim())),
        );
    }
    emit(&report(config("ballmass", a), Value::Object(body)), &a.out)
}

fn cmd_kfunction(a: &KfunctionArgs) -> Result<()> {
    let t = load(&a.input)?;
    let diam = t.diameter();
    let radii = radius_grid(&a.radii, positive_range([diam * 1e-3, diam].into_iter()))?;
    let k = k_function(&t, &radii);
    if let Some(path) = &a.curve.curve {
        write_curve(path, ("r", "k"), radii.radii(), &k.values)?;
    }
    let body = json!({
        "n": k.n,
        "diameter": k.diameter,
        "slope": k.log_slope(a.slope_lo, a.slope_hi),
        "r_range": [radii.radii()[0], radii.rho()],
    });
    emit(&report(config("kfunction", a), body), &a.out)
}

fn cmd_cover(a: &CoverArgs) -> Result<()> {
    let t = load(&a.input)?;
    let radii = RadiusGrid::linear(a.rho, a.radii)?;
    let c = covering_numbers(&t, &radii);
    if let Some(path) = &a.curve.curve {
        let counts: Vec<f64> = c.counts.iter().map(|&n| n as f64).collect();
        write_curve(path, ("r", "count"), radii.radii(), &counts)?;
    }
    let body = json!({
        "dudley_value": c.dudley_value,
        "distinct_points": c.distinct_points,
        "counts": c.counts,
    });
    emit(&report(config("cover", a), body), &a.out)
}

fn cmd_bound(a: &BoundArgs) -> Result<()> {
    let inp = BoundInputs {
        loss_bound: a.loss_bound,
        lipschitz: a.lipschitz,
        rho: a.rho,
        n: a.n,
        delta: a.delta,
        gamma2: a.gamma2,
        mutual_info_inf: a.i_inf,
        mutual_info_1: a.i_one,
        k1: a.k1,
        k2: a.k2,
        unbounded_tail_prob: a.tail_prob,
    };
    let mut body = Map::new();
    body.insert("l_rho".into(), json!(inp.l_rho()));
    body.insert(
        "high_prob_bound".into(),
        json!(theorem1_high_prob_bound(&inp)?),
    );
    body.insert("confidence".into(), json!(theorem1_confidence(&inp)?));
    body.insert(
        "expectation_bound".into(),
        json!(theorem1_expectation_bound(&inp)?),
    );
    if let (Some(alpha), Some(c)) = (a.alpha, a.c_rho) {
        body.insert(
            "gamma2_ahlfors_bound".into(),
            json!(corollary1_bound(alpha, a.rho, c)?),
        );
    }
    body.insert("note".into(), json!("up to the universal constants k1, k2"));
    emit(&report(config("bound", a), Value::Object(body)), &a.out)
}

fn cmd_study(a: &StudyArgs, ctx: &Ctx) -> Result<()> {
    let kind = match a.name {
        StudyArg::Figure1Ordering => StudyKind::Figure1Ordering,
        StudyArg::AppendixCCurve => StudyKind::AppendixCCurve,
        StudyArg::GaussianDimension => StudyKind::GaussianDimension,
        StudyArg::ExponentComparison => StudyKind::ExponentComparison,
    };
    let mut spec = StudySpec::preset(kind);
    if let Some(v) = a.replicates {
        spec.replicates = v;
    }
    if let Some(v) = a.seed {
        spec.seed = Seed(v);
    }
    if let Some(v) = &a.grid {
        spec.grid = v.clone();
    }
    if let Some(v) = a.steps {
        spec.steps = v;
    }
    if let Some(v) = a.dim {
        spec.dim = v;
    }
    if let Some(v) = a.rho {
        spec.rho = v;
    }
    if let Some(v) = a.beta {
        spec.beta = v;
    }
    if let Some(v) = a.normalization {
        spec.normalization = match v {
            NormalizationArg::Running => Normalization::Running,
            NormalizationArg::Global => Normalization::Global,
            NormalizationArg::None => Normalization::None,
        };
    }
    if let Some(v) = a.std_convention {
        spec.convention = convention(v);
    }
    if let Some(v) = a.iterations {
        spec.iterations = v;
    }
    if let Some(v) = a.restarts {
        spec.restarts = v;
    }
    if let Some(v) = a.step {
        spec.step = v;
    }
    if let Some(v) = a.block_size {
        spec.block_size = v;
    }
    ctx.note(format!(
        "running {} ({} grid points x {} replicates)",
        kind.label(),
        spec.grid.len(),
        spec.replicates
    ));
    let result = run_study(&spec)?;
    let extra = json!({ "config": config("study", a) });
    let files = emit_report_with(&result, &a.out_dir, Some(&extra))?;
    for f in files {
        println!("{}", f.display());
    }
    for (name, ok) in &result.verdicts {
        ctx.note(format!("{name}: {ok}"));
    }
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs, ctx: &Ctx) -> Result<()> {
    let full = load(&a.input)?;
    if a.window == 0 {
        return Err(Error::arg("window must be positive"));
    }
    let t = full.tail(a.window);
    ctx.note(format!(
        "analyzing the last {} of {} points",
        t.len(),
        full.len()
    ));

    let gamma2 = estimate_gamma2(&t, a.rho, &ft_options(&a.opt))
        .map(|e| json!({ "value": e.value, "method": e.method.label() }));

    let norms = if t.len() > 1 {
        increments(&t, 1)?.norms()
    } else {
        Vec::new()
    };
    let ball = radius_grid(&a.radii, positive_range(norms.into_iter())).and_then(|radii| {
        let curve = ball_mass_curve(&t, &[1], &radii)?;
        let fit = exponent_from_ball_mass(&curve, (a.window_lo, a.window_hi))?;
        Ok(json!({
            "alpha": fit.alpha,
            "points": fit.points,
            "r_squared": fit.r_squared,
            "r_range": [radii.radii()[0], radii.rho()],
        }))
    });

    let coords: Vec<usize> = (0..t.dim()).collect();
    let stable = pooled_increments(&t, &coords).and_then(|x| stable_index(&x, a.block_size));

    let diam = t.diameter();
    let k_slope =
        radius_grid(&a.radii, positive_range([diam * 1e-3, diam].into_iter())).map(|radii| {
            let k = k_function(&t, &radii);
            let window = [0.01 * diam, 0.1 * diam];
            json!({ "slope": k.log_slope(window[0], window[1]), "slope_window": window })
        });

    let body = json!({
        "points_total": full.len(),
        "points_analyzed": t.len(),
        "dim": t.dim(),
        "gamma2": section(gamma2),
        "tail_fit": section(lower_tail_exponent_reciprocal(&t)),
        "ball_mass": section(ball),
        "stable_index": section(stable),
        "k_function": section(k_slope),
    });
    emit(&report(config("analyze", a), body), &a.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_one_based() {
        assert_eq!(parse_blocks("1-2,3").unwrap(), vec![vec![0, 1], vec![2]]);
        assert!(parse_blocks("0-2").is_err());
        assert!(parse_blocks("3-1").is_err());
        assert!(parse_blocks("a").is_err());
    }

    #[test]
    fn config_drops_nulls_and_outputs() {
        let a = TailFitArgs {
            input: InputArgs {
                input: "x.csv".into(),
                header: false,
            },
            raw: true,
            xmin: None,
            out: OutputArgs {
                output: Some("o.json".into()),
            },
        };
        let c = config("tail-fit", &a);
        assert_eq!(
            c,
            json!({"command": "tail-fit", "input": "x.csv", "header": false, "raw": true})
        );
    }
}
