//! Seeded simulation studies and their reports.
//!
//! Every study runs a grid of parameter values times a number of replicates.
//! Cell `(g, r)` draws all of its randomness from `seed.derive(g).derive(r)`,
//! so results do not depend on how rayon schedules the cells.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{
    ball_mass_curve, exponent_from_ball_mass, lower_tail_exponent_reciprocal, pooled_increments,
    stable_index, DEFAULT_MASS_WINDOW,
};
use crate::ft::{estimate_gamma2, FtOptions};
use crate::grid::RadiusGrid;
use crate::seed::Seed;
use crate::simulate::{simulate, ProcessKind, ProcessSpec};
use crate::stats::{linear_fit, mean_ci95, spearman};
use crate::trajectory::{
    format_f64, normalize_by_running_std, normalize_by_std, StdConvention, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Normalized stable paths against a Brownian path; grid holds stable
    /// indices, with 2 standing for the Gaussian walk.
    Figure1Ordering,
    /// FT functional of the normalized beta-prime walk; grid holds the shape `alpha`.
    AppendixCCurve,
    /// Ball-mass exponent of Gaussian walks; grid holds the dimension.
    GaussianDimension,
    /// Reciprocal-increment tail fit against the stable index; grid holds stable indices.
    ExponentComparison,
}

impl StudyKind {
    pub const ALL: [StudyKind; 4] = [
        StudyKind::Figure1Ordering,
        StudyKind::AppendixCCurve,
        StudyKind::GaussianDimension,
        StudyKind::ExponentComparison,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StudyKind::Figure1Ordering => "figure1_ordering",
            StudyKind::AppendixCCurve => "appendix_c_curve",
            StudyKind::GaussianDimension => "gaussian_dimension",
            StudyKind::ExponentComparison => "exponent_comparison",
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        StudyKind::ALL
            .into_iter()
            .find(|k| k.label() == label)
            .ok_or_else(|| {
                let known: Vec<_> = StudyKind::ALL.iter().map(|k| k.label()).collect();
                Error::arg(format!(
                    "unknown study '{label}' (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

/// How simulated paths are rescaled before the FT functional is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Point `k` divided by the coordinate-wise std of points `0..=k`.
    Running,
    /// Every point divided by the coordinate-wise std of the whole path.
    Global,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub study: StudyKind,
    pub replicates: usize,
    pub seed: Seed,
    pub grid: Vec<f64>,
    /// Steps per simulated path (the path has `steps + 1` points).
    pub steps: usize,
    /// Dimension of the simulated paths; ignored by `gaussian_dimension`,
    /// whose grid sets it.
    pub dim: usize,
    /// Truncation radius for the FT studies.
    pub rho: f64,
    /// Second beta-prime shape.
    pub beta: f64,
    pub normalization: Normalization,
    pub convention: StdConvention,
    pub iterations: usize,
    pub restarts: usize,
    pub step: f64,
    /// Block size of the stable-index estimator.
    pub block_size: usize,
    pub mass_window: (f64, f64),
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

impl StudySpec {
    /// The default configuration of each study.
    pub fn preset(study: StudyKind) -> Self {
        let base = StudySpec {
            study,
            replicates: 100,
            seed: Seed(20240229),
            grid: Vec::new(),
            steps: 100,
            dim: 2,
            rho: 1.0,
            beta: 3.5,
            normalization: Normalization::Running,
            convention: StdConvention::Population,
            iterations: 2000,
            restarts: 5,
            step: 0.5,
            block_size: 10,
            mass_window: DEFAULT_MASS_WINDOW,
        };
        match study {
            StudyKind::Figure1Ordering => StudySpec {
                grid: vec![1.5, 2.0],
                steps: 1000,
                normalization: Normalization::Global,
                iterations: 300,
                restarts: 1,
                ..base
            },
            StudyKind::AppendixCCurve => StudySpec {
                grid: log_grid(1e-2, 1.0, 10),
                rho: 0.25,
                ..base
            },
            StudyKind::GaussianDimension => StudySpec {
                replicates: 20,
                grid: vec![1.0, 2.0, 3.0],
                steps: 10_000,
                ..base
            },
            StudyKind::ExponentComparison => StudySpec {
                replicates: 20,
                grid: vec![1.0, 1.25, 1.5, 1.75, 2.0],
                steps: 10_000,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::arg("replicates must be at least 1"));
        }
        if self.grid.is_empty() {
            return Err(Error::arg("study grid is empty"));
        }
        if self.grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::arg("study grid values must be finite"));
        }
        if self.steps == 0 || self.dim == 0 {
            return Err(Error::arg("steps and dimension must be positive"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::arg("rho must be positive"));
        }
        if self.study == StudyKind::GaussianDimension
            && self.grid.iter().any(|g| g.fract() != 0.0 || *g < 1.0)
        {
            return Err(Error::arg(
                "gaussian_dimension grid must hold positive integers",
            ));
        }
        Ok(())
    }

    fn ft_options(&self, seed: Seed) -> FtOptions {
        FtOptions {
            iterations: self.iterations,
            restarts: self.restarts,
            step: self.step,
            seed,
        }
    }
}

/// Mean and normal-approximation 95% interval per grid point, with the raw
/// replicate values (`raw[g][r]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSeries {
    pub mean: Vec<f64>,
    pub lo95: Vec<f64>,
    pub hi95: Vec<f64>,
    #[serde(skip)]
    pub raw: Vec<Vec<f64>>,
}

impl StatSeries {
    fn from_raw(raw: Vec<Vec<f64>>) -> Self {
        let mut s = StatSeries {
            mean: Vec::new(),
            lo95: Vec::new(),
            hi95: Vec::new(),
            raw,
        };
        for values in &s.raw {
            let (m, lo, hi) = mean_ci95(values);
            s.mean.push(m);
            s.lo95.push(lo);
            s.hi95.push(hi);
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyResult {
    pub spec: StudySpec,
    pub stats: BTreeMap<String, StatSeries>,
    pub verdicts: BTreeMap<String, bool>,
    pub diagnostics: BTreeMap<String, f64>,
    pub runtime_seconds: f64,
}

impl StudyResult {
    /// The statistic written to `<study>.csv`.
    pub fn headline(&self) -> &str {
        match self.spec.study {
            StudyKind::Figure1Ordering | StudyKind::AppendixCCurve => "gamma2",
            StudyKind::GaussianDimension => "ball_mass_alpha",
            StudyKind::ExponentComparison => "stable_index",
        }
    }
}

type Cell = Vec<(&'static str, f64)>;

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

pub fn run_study(spec: &StudySpec) -> Result<StudyResult> {
    spec.validate()?;
    let start = Instant::now();
    let cells: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|g| (0..spec.replicates).map(move |r| (g, r)))
        .collect();
    let outputs: Vec<Cell> = cells
        .par_iter()
        .map(|&(g, r)| run_cell(spec, g, spec.seed.derive(g as u64).derive(r as u64)))
        .collect::<Result<_>>()?;

    let mut raw: BTreeMap<&'static str, Vec<Vec<f64>>> = BTreeMap::new();
    for (&(g, _), cell) in cells.iter().zip(&outputs) {
        for &(name, v) in cell {
            let per_grid = raw
                .entry(name)
                .or_insert_with(|| vec![Vec::with_capacity(spec.replicates); spec.grid.len()]);
            per_grid[g].push(v);
        }
    }
    let stats: BTreeMap<String, StatSeries> = raw
        .into_iter()
        .map(|(k, v)| (k.to_string(), StatSeries::from_raw(v)))
        .collect();

    let mut verdicts = BTreeMap::new();
    let mut diagnostics = BTreeMap::new();
    match spec.study {
        StudyKind::Figure1Ordering => {
            let s = &stats["gamma2"];
            verdicts.insert(
                "means_increasing_in_index".into(),
                strictly_increasing(&s.mean),
            );
            let disjoint = (1..s.mean.len()).all(|i| s.hi95[i - 1] < s.lo95[i]);
            verdicts.insert("intervals_disjoint".into(), disjoint);
        }
        StudyKind::AppendixCCurve => {
            let s = &stats["gamma2"];
            verdicts.insert("strictly_increasing".into(), strictly_increasing(&s.mean));
            diagnostics.insert("spearman".into(), spearman(&spec.grid, &s.mean));
            let logs: Vec<f64> = spec.grid.iter().map(|a| a.ln()).collect();
            let roots: Vec<f64> = spec.grid.iter().map(|a| a.sqrt()).collect();
            let log_fit = linear_fit(&logs, &s.mean);
            diagnostics.insert("log_fit_slope".into(), log_fit.slope);
            diagnostics.insert("log_fit_r_squared".into(), log_fit.r_squared);
            diagnostics.insert(
                "sqrt_fit_r_squared".into(),
                linear_fit(&roots, &s.mean).r_squared,
            );
        }
        StudyKind::GaussianDimension => {
            let s = &stats["ball_mass_alpha"];
            for (d, m) in spec.grid.iter().zip(&s.mean) {
                verdicts.insert(format!("within_0.25_of_dim_{d}"), (m - d).abs() <= 0.25);
            }
        }
        StudyKind::ExponentComparison => {
            let si = &stats["stable_index"];
            let tail = &stats["reciprocal_alpha"];
            diagnostics.insert(
                "spearman_index_vs_grid".into(),
                spearman(&spec.grid, &si.mean),
            );
            diagnostics.insert(
                "spearman_index_vs_tail".into(),
                spearman(&si.mean, &tail.mean),
            );
            verdicts.insert("index_increasing".into(), strictly_increasing(&si.mean));
        }
    }
    Ok(StudyResult {
        spec: spec.clone(),
        stats,
        verdicts,
        diagnostics,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

fn walk(alpha: f64) -> ProcessKind {
    if alpha >= 2.0 {
        ProcessKind::GaussianWalk { sigma: vec![1.0] }
    } else {
        ProcessKind::StableLevyWalk { alpha, scale: 1.0 }
    }
}

fn path(kind: ProcessKind, dim: usize, steps: usize, seed: Seed) -> Result<Trajectory> {
    simulate(&ProcessSpec::new(kind, dim, steps, seed))
}

fn run_cell(spec: &StudySpec, g: usize, seed: Seed) -> Result<Cell> {
    let x = spec.grid[g];
    let sim_seed = seed.derive(0);
    let opt_seed = seed.derive(1);
    match spec.study {
        StudyKind::Figure1Ordering | StudyKind::AppendixCCurve => {
            let (kind, dim) = if spec.study == StudyKind::AppendixCCurve {
                (
                    ProcessKind::BetaPrimeWalk {
                        alpha: x,
                        beta: spec.beta,
                    },
                    2,
                )
            } else {
                (walk(x), spec.dim)
            };
            let t = path(kind, dim, spec.steps, sim_seed)?;
            let (t, prefix) = match spec.normalization {
                Normalization::Running => {
                    let nt = normalize_by_running_std(&t, spec.convention)?;
                    let prefix = nt.unscaled_prefix();
                    (nt.trajectory, Some(prefix))
                }
                Normalization::Global => (normalize_by_std(&t, spec.convention)?, None),
                Normalization::None => (t, None),
            };
            let est = estimate_gamma2(&t, spec.rho, &spec.ft_options(opt_seed))?;
            let mut cell = vec![("gamma2", est.value)];
            if let Some(p) = prefix {
                cell.push(("unscaled_prefix", p as f64));
            }
            Ok(cell)
        }
        StudyKind::GaussianDimension => {
            let t = path(walk(2.0), x as usize, spec.steps, sim_seed)?;
            let radii = RadiusGrid::log_spaced(1e-3, 10.0, 200)?;
            let curve = ball_mass_curve(&t, &[1], &radii)?;
            let fit = exponent_from_ball_mass(&curve, spec.mass_window)?;
            Ok(vec![("ball_mass_alpha", fit.alpha)])
        }
        StudyKind::ExponentComparison => {
            let t = path(walk(x), spec.dim, spec.steps, sim_seed)?;
            let coords: Vec<usize> = (0..spec.dim).collect();
            let si = stable_index(&pooled_increments(&t, &coords)?, spec.block_size)?;
            let tail = lower_tail_exponent_reciprocal(&t)?;
            Ok(vec![
                ("stable_index", si.alpha_hat),
                ("reciprocal_alpha", tail.alpha_survival),
            ])
        }
    }
}

#[derive(Serialize)]
struct StatJson<'a> {
    mean: &'a [f64],
    lo95: &'a [f64],
    hi95: &'a [f64],
}

#[derive(Serialize)]
struct ReportJson<'a> {
    study: &'static str,
    spec: &'a StudySpec,
    grid: &'a [f64],
    stats: BTreeMap<&'a str, StatJson<'a>>,
    verdicts: &'a BTreeMap<String, bool>,
    diagnostics: &'a BTreeMap<String, f64>,
    seed: Seed,
    runtime_seconds: f64,
}

/// JSON summary of a study, with `extra` merged in at the top level.
pub fn report_json(result: &StudyResult, extra: Option<&serde_json::Value>) -> serde_json::Value {
    let report = ReportJson {
        study: result.spec.study.label(),
        spec: &result.spec,
        grid: &result.spec.grid,
        stats: result
            .stats
            .iter()
            .map(|(k, s)| {
                (
                    k.as_str(),
                    StatJson {
                        mean: &s.mean,
                        lo95: &s.lo95,
                        hi95: &s.hi95,
                    },
                )
            })
            .collect(),
        verdicts: &result.verdicts,
        diagnostics: &result.diagnostics,
        seed: result.spec.seed,
        runtime_seconds: result.runtime_seconds,
    };
    let mut value = serde_json::to_value(report).expect("report is serializable");
    if let (Some(serde_json::Value::Object(extra)), serde_json::Value::Object(map)) =
        (extra, &mut value)
    {
        for (k, v) in extra {
            map.insert(k.clone(), v.clone());
        }
    }
    value
}

/// CSV with columns `grid, mean, lo95, hi95` for one statistic.
pub fn report_csv(result: &StudyResult, stat: &str) -> Result<String> {
    let s = result
        .stats
        .get(stat)
        .ok_or_else(|| Error::arg(format!("study has no statistic '{stat}'")))?;
    let mut out = String::from("grid,mean,lo95,hi95\n");
    for (i, x) in result.spec.grid.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_f64(*x),
            format_f64(s.mean[i]),
            format_f64(s.lo95[i]),
            format_f64(s.hi95[i])
        );
    }
    Ok(out)
}

/// Writes `<study>.json` and one CSV per statistic: `<study>.csv` for the
/// headline statistic, `<study>_<stat>.csv` for the others.
pub fn emit_report(result: &StudyResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    emit_report_with(result, out_dir, None)
}

pub fn emit_report_with(
    result: &StudyResult,
    out_dir: &Path,
    extra: Option<&serde_json::Value>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let label = result.spec.study.label();
    let mut written = Vec::new();
    let json_path = out_dir.join(format!("{label}.json"));
    let mut text =
        serde_json::to_string_pretty(&report_json(result, extra)).expect("report is serializable");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    written.push(json_path);
    for stat in result.stats.keys() {
        let name = if stat == result.headline() {
            format!("{label}.csv")
        } else {
            format!("{label}_{stat}.csv")
        };
        let path = out_dir.join(name);
        std::fs::write(&path, report_csv(result, stat)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(study: StudyKind) -> StudySpec {
        let mut s = StudySpec::preset(study);
        s.replicates = 4;
        s.iterations = 50;
        s.restarts = 1;
        s.steps = s.steps.min(2000);
        s
    }

    #[test]
    fn labels_round_trip() {
        for k in StudyKind::ALL {
            assert_eq!(StudyKind::from_label(k.label()).unwrap(), k);
        }
        assert!(StudyKind::from_label("figure_9")
            .unwrap_err()
            .is_argument_error());
    }

    #[test]
    fn presets() {
        let c = StudySpec::preset(StudyKind::AppendixCCurve);
        assert_eq!(c.grid.len(), 10);
        assert!((c.grid[0] - 1e-2).abs() < 1e-15 && (c.grid[9] - 1.0).abs() < 1e-15);
        assert_eq!(
            (c.steps, c.rho, c.beta, c.replicates),
            (100, 0.25, 3.5, 100)
        );
        for k in StudyKind::ALL {
            StudySpec::preset(k).validate().unwrap();
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let mut s = small(StudyKind::AppendixCCurve);
        s.grid.clear();
        assert!(run_study(&s).unwrap_err().is_argument_error());
        s.grid = vec![0.5];
        s.replicates = 0;
        assert!(run_study(&s).is_err());
    }

    #[test]
    fn result_shapes_and_intervals() {
        for k in StudyKind::ALL {
            let mut s = small(k);
            if k == StudyKind::Figure1Ordering {
                s.steps = 100;
            }
            let r = run_study(&s).unwrap();
            for st in r.stats.values() {
                assert_eq!(st.mean.len(), s.grid.len());
                for g in 0..s.grid.len() {
                    assert_eq!(st.raw[g].len(), s.replicates);
                    assert!(st.lo95[g] <= st.mean[g] && st.mean[g] <= st.hi95[g]);
                }
            }
            assert!(r.stats.contains_key(r.headline()));
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut s = small(StudyKind::AppendixCCurve);
        s.grid.truncate(3);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let three = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let a = one.install(|| run_study(&s)).unwrap();
        let b = three.install(|| run_study(&s)).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(
            report_csv(&a, "gamma2").unwrap(),
            report_csv(&b, "gamma2").unwrap()
        );
    }

    #[test]
    fn emit_names_and_schema() {
        let mut s = small(StudyKind::AppendixCCurve);
        s.grid.truncate(2);
        let r = run_study(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&r, dir.path()).unwrap();
        let names: Vec<_> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert!(names.contains(&"appendix_c_curve.json".to_string()));
        assert!(names.contains(&"appendix_c_curve.csv".to_string()));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
        for key in [
            "study",
            "spec",
            "grid",
            "stats",
            "verdicts",
            "seed",
            "runtime_seconds",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["stats"]["gamma2"]["mean"].as_array().unwrap().len(), 2);
        let csv = std::fs::read_to_string(dir.path().join("appendix_c_curve.csv")).unwrap();
        assert_eq!(csv.lines().next(), Some("grid,mean,lo95,hi95"));
        assert_eq!(csv.lines().count(), 3);
    }
}
