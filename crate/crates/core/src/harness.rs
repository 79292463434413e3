//! Monte Carlo drivers for CDF-error, coverage and timing studies.
//!
//! Every random quantity is keyed by `(master seed, stage, index)` so a run is
//! reproduced exactly from its config, whatever the worker count.

use crate::bootstrap::{
    baseline_eg, baseline_ss, ecdf_of, mb_linear, mb_multiplicative, mb_quadratic, BootstrapRun, MultiplierSpec,
};
use crate::counts::{count_exact, LocalStats};
use crate::error::{Error, Result};
use crate::expansion::{empirical_coefficients, grid, one_term_expansion, phi_cdf, McSizes};
use crate::graph::{sample_graph, Graph, GraphonKind, GraphonSpec};
use crate::interval::{
    corrected_count_ci, corrected_smooth_ci, percentile_ci, percentile_smooth_ci, CiResult,
};
use crate::motif::Motif;
use crate::population::{population_cross_moments, population_moments};
use crate::rng::{domain, stream_key, with_workers};
use crate::sketch::{sketch_local, SketchPlan};
use crate::smooth::{bootstrap_smooth, f_hat, sigma_f_emp, SmoothFunctional};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

/// Stream tag of the observed datasets, kept apart from the truth datasets.
const OBSERVED: u64 = 0x4f42_5345_5256_4544;

pub const PRESETS: [&str; 5] = ["fig1-sbm-triangle", "fig2-coverage", "fig3-timing", "tableA1", "tableA2"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodName {
    MbM,
    MbQ,
    MbL,
    MbLApx,
    Eg,
    Ss,
    /// One-term Edgeworth expansion.
    Ew,
    Normal,
}

impl MethodName {
    pub fn label(&self) -> &'static str {
        match self {
            MethodName::MbM => "MB-M",
            MethodName::MbQ => "MB-Q",
            MethodName::MbL => "MB-L",
            MethodName::MbLApx => "MB-L-apx",
            MethodName::Eg => "EG",
            MethodName::Ss => "SS",
            MethodName::Ew => "EW",
            MethodName::Normal => "normal",
        }
    }

    fn is_bootstrap(&self) -> bool {
        !matches!(self, MethodName::Ew | MethodName::Normal)
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "mbm" => MethodName::MbM,
            "mbq" => MethodName::MbQ,
            "mbl" => MethodName::MbL,
            "mblapx" => MethodName::MbLApx,
            "eg" => MethodName::Eg,
            "ss" => MethodName::Ss,
            "ew" | "edgeworth" => MethodName::Ew,
            "normal" | "phi" => MethodName::Normal,
            _ => return Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        })
    }
}

impl TryFrom<String> for MethodName {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodName> for String {
    fn from(m: MethodName) -> String {
        m.label().to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    CdfError,
    Coverage,
    Timing,
}

/// Where bootstrap replicates are centered before comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// At the whole-graph statistic.
    #[default]
    Statistic,
    /// At the mean of the replicates.
    BootstrapMean,
}

/// Scale of the Monte Carlo truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    /// Population `σ`; expansions use `p1`.
    Population,
    /// Per-dataset `σ̂`; expansions use `q1`.
    #[default]
    Dataset,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lo: -3.0, hi: 3.0, step: 0.1 }
    }
}

fn default_repeats() -> usize {
    1
}
fn default_level() -> f64 {
    0.95
}
fn default_timing_repeats() -> usize {
    5
}
fn default_true() -> bool {
    true
}
fn default_ss_fraction() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: ExperimentKind,
    pub graphon: GraphonSpec,
    #[serde(default)]
    pub n: usize,
    /// Count functional; exclusive with `function`.
    #[serde(default)]
    pub motif: Option<String>,
    /// Smooth functional such as `"3T/V"`.
    #[serde(default)]
    pub function: Option<String>,
    pub methods: Vec<MethodName>,
    #[serde(default)]
    pub b: usize,
    /// Monte Carlo datasets.
    pub m: usize,
    #[serde(default)]
    pub grid: GridSpec,
    pub seed: u64,
    #[serde(default)]
    pub centering: Centering,
    #[serde(default)]
    pub standardization: Standardization,
    /// Independent observed datasets per CDF-error row.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Known parameter for coverage; computed from the graphon when absent.
    #[serde(default)]
    pub truth: Option<f64>,
    /// Sizes swept by timing runs.
    #[serde(default)]
    pub ns: Vec<usize>,
    #[serde(default = "default_timing_repeats")]
    pub timing_repeats: usize,
    #[serde(default = "default_true")]
    pub warmup: bool,
    /// 0 uses the global pool.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_ss_fraction")]
    pub ss_fraction: f64,
    #[serde(default)]
    pub mc: McSizes,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// Count or smooth target of an experiment.
#[derive(Clone)]
pub enum Target {
    Count(Motif),
    Smooth(SmoothFunctional),
}

impl Target {
    fn motifs(&self) -> Vec<Motif> {
        match self {
            Target::Count(m) => vec![m.clone()],
            Target::Smooth(f) => f.motifs.clone(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Target::Count(m) => m.name(),
            Target::Smooth(f) => f.name(),
        }
    }
}

impl ExperimentConfig {
    pub fn target(&self) -> Result<Target> {
        match (&self.motif, &self.function) {
            (Some(m), None) => Ok(Target::Count(Motif::parse(m)?)),
            (None, Some(f)) => Ok(Target::Smooth(SmoothFunctional::parse(f)?)),
            _ => Err(Error::InvalidArgument("set exactly one of motif and function".into())),
        }
    }

    pub fn grid_points(&self) -> Result<Vec<f64>> {
        grid(self.grid.lo, self.grid.hi, self.grid.step)
    }

    fn rho(&self) -> f64 {
        self.graphon.rho
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.graphon.validate()?;
        let target = self.target()?;
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if self.kind != ExperimentKind::Timing {
            if self.m == 0 {
                return bad("M must be at least 1".into());
            }
            let r = target.motifs().iter().map(|m| m.r()).max().unwrap_or(2);
            if self.n < r {
                return bad(format!("n = {} below motif size {r}", self.n));
            }
        }
        if !(self.grid.step > 0.0) {
            return bad(format!("grid step {} must be positive", self.grid.step));
        }
        self.grid_points()?;
        if self.methods.iter().any(|m| m.is_bootstrap()) && self.b == 0 {
            return bad("B must be positive for bootstrap methods".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} outside (0,1)", self.level));
        }
        if !(self.ss_fraction > 0.0 && self.ss_fraction < 1.0) {
            return bad(format!("ss_fraction {} outside (0,1)", self.ss_fraction));
        }
        if self.kind == ExperimentKind::Timing && (self.ns.is_empty() || self.timing_repeats == 0) {
            return bad("timing needs a nonempty ns sweep and at least one repeat".into());
        }
        Ok(())
    }
}

/// Named desk-scale configurations.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig {
        kind: ExperimentKind::CdfError,
        graphon: GraphonSpec::sbm_g(1.0),
        n: 160,
        motif: Some("triangle".into()),
        function: None,
        methods: vec![],
        b: 2_000,
        m: 10_000,
        grid: GridSpec::default(),
        seed: 20_240_601,
        centering: Centering::Statistic,
        standardization: Standardization::Dataset,
        repeats: 1,
        level: 0.95,
        truth: None,
        ns: vec![],
        timing_repeats: 5,
        warmup: true,
        workers: 0,
        ss_fraction: 0.5,
        mc: McSizes::default(),
        output_dir: None,
    };
    use MethodName::*;
    Ok(match name {
        // M = 10⁴ truth datasets and 30 observed graphs instead of the
        // paper's 10⁶; only orderings are meaningful at this size.
        "fig1-sbm-triangle" => ExperimentConfig {
            methods: vec![MbQ, MbL, Eg, Ss, Ew, Normal],
            centering: Centering::BootstrapMean,
            repeats: 30,
            ..base
        },
        "fig2-coverage" => ExperimentConfig {
            kind: ExperimentKind::Coverage,
            n: 200,
            methods: vec![MbQ],
            m: 200,
            ..base
        },
        "fig3-timing" => ExperimentConfig {
            kind: ExperimentKind::Timing,
            motif: Some("fourcycle".into()),
            methods: vec![MbL, MbLApx],
            b: 1_000,
            m: 1,
            ns: vec![500, 1_000, 2_000, 4_000],
            ..base
        },
        // Standardized count against p̂1; M = 10⁴ instead of 10⁶.
        "tableA1" => ExperimentConfig {
            methods: vec![Ew, Normal],
            b: 0,
            standardization: Standardization::Population,
            ..base
        },
        // Studentized transitivity against q̂1; M = 10⁴ instead of 10⁶.
        "tableA2" => ExperimentConfig {
            motif: None,
            function: Some("3T/V".into()),
            methods: vec![Ew, Normal],
            b: 0,
            standardization: Standardization::Dataset,
            ..base
        },
        _ => return Err(Error::InvalidArgument(format!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))),
    })
}

/// Graph of truth dataset `d`.
pub fn truth_dataset(cfg: &ExperimentConfig, d: usize) -> Result<Graph> {
    Ok(sample_graph(&cfg.graphon, cfg.n, stream_key(cfg.seed, domain::DATASET, d as u64))?.0)
}

/// Graph of observed dataset `k`.
pub fn observed_dataset(cfg: &ExperimentConfig, k: usize) -> Result<Graph> {
    Ok(sample_graph(&cfg.graphon, cfg.n, stream_key(cfg.seed, OBSERVED, k as u64))?.0)
}

fn stats_for(g: &Graph, target: &Target, pairwise: bool, instances: bool) -> Result<Vec<LocalStats<f64>>> {
    target.motifs().iter().map(|m| count_exact(g, m, pairwise, instances)).collect()
}

/// Population centering and scale of the target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopulationTarget {
    /// `θ` for counts, `f(μ)` for smooth functionals.
    pub value: f64,
    /// `r τ` for counts, `σ_f` for smooth functionals.
    pub sigma: f64,
}

pub fn population_target(cfg: &ExperimentConfig) -> Result<PopulationTarget> {
    match cfg.target()? {
        Target::Count(m) => {
            let pm = population_moments(&cfg.graphon, &m, &cfg.mc)?;
            Ok(PopulationTarget { value: pm.theta, sigma: m.r() as f64 * pm.tau })
        }
        Target::Smooth(f) => {
            if !matches!(cfg.graphon.kind, GraphonKind::Sbm { .. }) {
                return Err(Error::MissingTruth(format!("{} needs a block model or a supplied truth", f.name())));
            }
            let cm = population_cross_moments(&cfg.graphon, &f.motifs)?;
            let rho = cfg.rho();
            let pw: Vec<f64> = f.motifs.iter().map(|m| rho.powi(m.s() as i32)).collect();
            let r: Vec<f64> = f.motifs.iter().map(|m| m.r() as f64).collect();
            let mu: Vec<f64> = cm.theta.iter().zip(&pw).map(|(t, p)| t / p).collect();
            let a = f.grad(&mu);
            let d = mu.len();
            let mut v = 0.0;
            for i in 0..d {
                for j in 0..d {
                    v += a[i] * a[j] * r[i] * r[j] * cm.lambda[i][j] / (pw[i] * pw[j]);
                }
            }
            Ok(PopulationTarget { value: f.eval(&mu), sigma: v.sqrt() })
        }
    }
}

/// Standardized statistics of `M` truth datasets, in dataset order.
pub fn truth_sample(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let target = cfg.target()?;
    let pop = population_target(cfg)?;
    let sqn = (cfg.n as f64).sqrt();
    let rho = cfg.rho();
    let values: Result<Vec<f64>> = (0..cfg.m)
        .into_par_iter()
        .map(|d| {
            let g = truth_dataset(cfg, d)?;
            let stats = stats_for(&g, &target, false, false)?;
            let (est, sigma) = match &target {
                Target::Count(m) => {
                    let sigma = match cfg.standardization {
                        Standardization::Population => pop.sigma,
                        Standardization::Dataset => m.r() as f64 * stats[0].tau_hat,
                    };
                    (stats[0].t_hat, sigma)
                }
                Target::Smooth(f) => {
                    let sigma = match cfg.standardization {
                        Standardization::Population => pop.sigma,
                        Standardization::Dataset => sigma_f_emp(f, &stats, rho)?,
                    };
                    (f_hat(f, &stats, rho)?, sigma)
                }
            };
            if !(sigma > 0.0) {
                return Err(Error::Degenerate(format!("truth dataset {d} has zero scale")));
            }
            Ok(sqn * (est - pop.value) / sigma)
        })
        .collect();
    values
}

fn center(values: Vec<f64>, centering: Centering) -> Vec<f64> {
    match centering {
        Centering::Statistic => values,
        Centering::BootstrapMean => {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            values.into_iter().map(|v| v - mean).collect()
        }
    }
}

/// CDF of one method on the grid, computed from observed dataset `k`.
pub fn method_curve(cfg: &ExperimentConfig, method: MethodName, k: usize) -> Result<Vec<f64>> {
    let target = cfg.target()?;
    let grid = cfg.grid_points()?;
    if method == MethodName::Normal {
        return Ok(grid.iter().map(|&x| phi_cdf(x)).collect());
    }
    let g = observed_dataset(cfg, k)?;
    let weights = MultiplierSpec::gaussian_product(stream_key(cfg.seed, domain::WEIGHT, k as u64));
    let resample_seed = stream_key(cfg.seed, domain::RESAMPLE, k as u64);
    let from_run = |run: BootstrapRun<f64>| ecdf_of(&center(run.replicates, cfg.centering), &grid);
    match target {
        Target::Count(m) => {
            let need_h2 = matches!(method, MethodName::MbQ | MethodName::Ew);
            let stats = || count_exact::<f64>(&g, &m, need_h2, method == MethodName::MbM);
            Ok(match method {
                MethodName::MbM => from_run(mb_multiplicative(&stats()?, &weights, cfg.b)?),
                MethodName::MbQ => from_run(mb_quadratic(&stats()?, &weights, cfg.b)?),
                MethodName::MbL => from_run(mb_linear(&stats()?, &weights, cfg.b)?),
                MethodName::MbLApx => {
                    let plan = SketchPlan::default_for(cfg.n, stream_key(cfg.seed, domain::SKETCH, k as u64));
                    from_run(mb_linear(&sketch_local::<f64>(&g, &m, &plan)?, &weights, cfg.b)?)
                }
                MethodName::Eg => from_run(baseline_eg(&g, &m, cfg.b, resample_seed)?),
                MethodName::Ss => {
                    let sub = ((cfg.n as f64 * cfg.ss_fraction).round() as usize).clamp(m.r(), cfg.n - 1);
                    from_run(baseline_ss(&g, &m, sub, cfg.b, resample_seed)?)
                }
                MethodName::Ew => {
                    let co = empirical_coefficients(&stats()?)?;
                    match cfg.standardization {
                        Standardization::Population => one_term_expansion(cfg.n, &grid, |x| co.p1(x)),
                        Standardization::Dataset => one_term_expansion(cfg.n, &grid, |x| co.q1(x)),
                    }
                }
                MethodName::Normal => unreachable!(),
            })
        }
        Target::Smooth(f) => {
            let stats = stats_for(&g, &Target::Smooth(f.clone()), true, false)?;
            match method {
                MethodName::MbQ => {
                    let out = bootstrap_smooth(&f, &stats, cfg.rho(), &weights, cfg.b)?;
                    Ok(ecdf_of(&center(out.replicates, cfg.centering), &grid))
                }
                MethodName::Ew => {
                    let out = bootstrap_smooth(&f, &stats, cfg.rho(), &weights, 1)?;
                    match cfg.standardization {
                        Standardization::Population => Ok(one_term_expansion(cfg.n, &grid, |x| out.p1(x))),
                        Standardization::Dataset => {
                            if out.q1(0.0).is_none() {
                                return Err(Error::Unsupported(format!("studentized expansion for {}", f.name())));
                            }
                            Ok(one_term_expansion(cfg.n, &grid, |x| out.q1(x).unwrap()))
                        }
                    }
                }
                other => Err(Error::Unsupported(format!("{other} for smooth functionals"))),
            }
        }
    }
}

/// Sup distance of one curve to the truth ECDF, with the binomial standard
/// error of the truth at the maximizing grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveError {
    pub error: f64,
    pub at: f64,
    pub budget: f64,
}

pub fn curve_error(truth_cdf: &[f64], curve: &[f64], grid: &[f64], m: usize) -> Result<CurveError> {
    if truth_cdf.len() != curve.len() || grid.len() != curve.len() {
        return Err(Error::LengthMismatch { left: truth_cdf.len(), right: curve.len() });
    }
    let mut best = (0usize, -1.0);
    for (i, (a, b)) in truth_cdf.iter().zip(curve).enumerate() {
        let e = (a - b).abs();
        if e > best.1 {
            best = (i, e);
        }
    }
    let f = truth_cdf[best.0];
    Ok(CurveError { error: best.1, at: grid[best.0], budget: (f * (1.0 - f) / m as f64).sqrt() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfErrorRow {
    pub method: MethodName,
    pub mean: f64,
    /// Standard error over repeats (0 for a single repeat).
    pub stderr: f64,
    /// Largest truth Monte Carlo standard error over repeats.
    pub budget: f64,
    pub repeats: usize,
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfErrorTable {
    pub target: String,
    pub n: usize,
    pub m: usize,
    pub b: usize,
    pub seed: u64,
    pub rows: Vec<CdfErrorRow>,
}

impl CdfErrorTable {
    pub fn row(&self, method: MethodName) -> Option<&CdfErrorRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// `a` beats `b` by more than three times the larger budget.
    pub fn separated(&self, a: MethodName, b: MethodName) -> Option<bool> {
        let (x, y) = (self.row(a)?, self.row(b)?);
        Some(y.mean - x.mean > 3.0 * x.budget.max(y.budget))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["target", "method", "n", "M", "B", "repeats", "sup_error_mean", "sup_error_stderr", "mc_budget"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                self.target.clone(),
                r.method.to_string(),
                self.n.to_string(),
                self.m.to_string(),
                self.b.to_string(),
                r.repeats.to_string(),
                r.mean.to_string(),
                r.stderr.to_string(),
                r.budget.to_string(),
            ])
            .map_err(csv_err)?;
        }
        into_string(w)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Sup-distance of each method to the Monte Carlo truth, over `repeats` observed graphs.
pub fn run_cdf_error(cfg: &ExperimentConfig) -> Result<CdfErrorTable> {
    cfg.validate()?;
    with_workers(cfg.workers, || {
        let grid = cfg.grid_points()?;
        let truth = truth_sample(cfg)?;
        let truth_cdf = ecdf_of(&truth, &grid);
        let mut rows = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let per: Vec<CurveError> = (0..cfg.repeats)
                .map(|k| curve_error(&truth_cdf, &method_curve(cfg, method, k)?, &grid, cfg.m))
                .collect::<Result<_>>()?;
            let errors: Vec<f64> = per.iter().map(|c| c.error).collect();
            let (mean, stderr) = mean_stderr(&errors);
            let budget = per.iter().map(|c| c.budget).fold(0.0, f64::max);
            rows.push(CdfErrorRow { method, mean, stderr, budget, repeats: cfg.repeats, errors });
        }
        Ok(CdfErrorTable { target: cfg.target()?.name(), n: cfg.n, m: cfg.m, b: cfg.b, seed: cfg.seed, rows })
    })
}

/// Interval flavor in a coverage study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Percentile,
    Corrected,
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntervalKind::Percentile => "percentile",
            IntervalKind::Corrected => "corrected",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageRow {
    pub method: MethodName,
    pub interval: IntervalKind,
    pub coverage: f64,
    pub stderr: f64,
    pub mean_width: f64,
    pub datasets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageTable {
    pub target: String,
    pub truth: f64,
    pub n: usize,
    pub b: usize,
    pub level: f64,
    pub seed: u64,
    pub rows: Vec<CoverageRow>,
}

impl CoverageTable {
    pub fn row(&self, method: MethodName, interval: IntervalKind) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.method == method && r.interval == interval)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["target", "method", "interval", "n", "B", "level", "truth", "datasets", "coverage", "coverage_stderr", "mean_width"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                self.target.clone(),
                r.method.to_string(),
                r.interval.to_string(),
                self.n.to_string(),
                self.b.to_string(),
                self.level.to_string(),
                self.truth.to_string(),
                r.datasets.to_string(),
                r.coverage.to_string(),
                r.stderr.to_string(),
                r.mean_width.to_string(),
            ])
            .map_err(csv_err)?;
        }
        into_string(w)
    }
}

/// Fraction of intervals containing `truth`, its binomial standard error and the mean width.
pub fn coverage_of(intervals: &[CiResult<f64>], truth: f64) -> (f64, f64, f64) {
    let k = intervals.len() as f64;
    let hit = intervals.iter().filter(|c| c.contains(truth)).count() as f64 / k;
    let width = intervals.iter().map(|c| c.width()).sum::<f64>() / k;
    (hit, (hit * (1.0 - hit) / k).sqrt(), width)
}

/// The parameter an interval should cover: supplied, or computed from the graphon.
pub fn coverage_truth(cfg: &ExperimentConfig) -> Result<f64> {
    if let Some(t) = cfg.truth {
        return Ok(t);
    }
    Ok(population_target(cfg)?.value)
}

/// Percentile and corrected intervals for dataset `d` under each bootstrap method.
pub fn dataset_intervals(cfg: &ExperimentConfig, d: usize) -> Result<Vec<(MethodName, IntervalKind, CiResult<f64>)>> {
    let target = cfg.target()?;
    let g = truth_dataset(cfg, d)?;
    let weights = MultiplierSpec::gaussian_product(stream_key(cfg.seed, domain::WEIGHT, d as u64));
    let mut out = vec![];
    match &target {
        Target::Count(m) => {
            let want_m = cfg.methods.contains(&MethodName::MbM);
            let stats = count_exact::<f64>(&g, m, true, want_m)?;
            for &method in &cfg.methods {
                let run = match method {
                    MethodName::MbQ => mb_quadratic(&stats, &weights, cfg.b)?,
                    MethodName::MbL => mb_linear(&stats, &weights, cfg.b)?,
                    MethodName::MbM => mb_multiplicative(&stats, &weights, cfg.b)?,
                    other => return Err(Error::Unsupported(format!("{other} in coverage studies"))),
                };
                out.push((method, IntervalKind::Percentile, percentile_ci(&run, cfg.level)?));
                out.push((method, IntervalKind::Corrected, corrected_count_ci(&run, &stats, cfg.level)?));
            }
        }
        Target::Smooth(f) => {
            let stats = stats_for(&g, &target, true, false)?;
            for &method in &cfg.methods {
                if method != MethodName::MbQ {
                    return Err(Error::Unsupported(format!("{method} for smooth functionals")));
                }
                let boot = bootstrap_smooth(f, &stats, cfg.rho(), &weights, cfg.b)?;
                out.push((method, IntervalKind::Percentile, percentile_smooth_ci(&boot, cfg.level)?));
                if boot.b1_hat.is_some() {
                    out.push((method, IntervalKind::Corrected, corrected_smooth_ci(&boot, cfg.level)?));
                }
            }
        }
    }
    Ok(out)
}

/// Coverage of percentile and corrected intervals over `M` datasets.
pub fn run_coverage(cfg: &ExperimentConfig, truth: Option<f64>) -> Result<CoverageTable> {
    cfg.validate()?;
    let truth = match truth {
        Some(t) => t,
        None => coverage_truth(cfg)?,
    };
    with_workers(cfg.workers, || {
        let per: Vec<Vec<(MethodName, IntervalKind, CiResult<f64>)>> =
            (0..cfg.m).into_par_iter().map(|d| dataset_intervals(cfg, d)).collect::<Result<_>>()?;
        let mut rows = vec![];
        for (slot, (method, kind, _)) in per[0].iter().enumerate() {
            let cis: Vec<CiResult<f64>> = per.iter().map(|v| v[slot].2.clone()).collect();
            let (coverage, stderr, mean_width) = coverage_of(&cis, truth);
            rows.push(CoverageRow { method: *method, interval: *kind, coverage, stderr, mean_width, datasets: cfg.m });
        }
        Ok(CoverageTable { target: cfg.target()?.name(), truth, n: cfg.n, b: cfg.b, level: cfg.level, seed: cfg.seed, rows })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Precompute,
    Replicate,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Precompute => "precompute",
            Phase::Replicate => "replicate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub method: MethodName,
    pub n: usize,
    pub phase: Phase,
    /// Median wall time in seconds.
    pub seconds: f64,
    pub samples: Vec<f64>,
    pub b: usize,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingTable {
    pub target: String,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn get(&self, method: MethodName, n: usize, phase: Phase) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.method == method && r.n == n && r.phase == phase)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["target", "method", "n", "phase", "B", "workers", "repeats", "median_seconds"]).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                self.target.clone(),
                r.method.to_string(),
                r.n.to_string(),
                r.phase.to_string(),
                r.b.to_string(),
                r.workers.to_string(),
                r.samples.len().to_string(),
                r.seconds.to_string(),
            ])
            .map_err(csv_err)?;
        }
        into_string(w)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median of `repeats` timed calls after an optional untimed one.
fn timed<R>(warmup: bool, repeats: usize, mut f: impl FnMut() -> Result<R>) -> Result<(Vec<f64>, R)> {
    if warmup {
        f()?;
    }
    let mut samples = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let t = Instant::now();
        let out = f()?;
        samples.push(t.elapsed().as_secs_f64());
        last = Some(out);
    }
    Ok((samples, last.expect("at least one repeat")))
}

/// Wall time of the precompute and replicate phases across the `ns` sweep.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingTable> {
    cfg.validate()?;
    let Target::Count(motif) = cfg.target()? else {
        return Err(Error::Unsupported("timing runs take a motif".into()));
    };
    let workers = if cfg.workers == 0 { rayon::current_num_threads() } else { cfg.workers };
    with_workers(cfg.workers, || {
        let mut rows = vec![];
        for (idx, &n) in cfg.ns.iter().enumerate() {
            let (g, _) = sample_graph(&cfg.graphon, n, stream_key(cfg.seed, domain::DATASET, idx as u64))?;
            let weights = MultiplierSpec::gaussian_product(stream_key(cfg.seed, domain::WEIGHT, idx as u64));
            let seed = stream_key(cfg.seed, domain::RESAMPLE, idx as u64);
            for &method in &cfg.methods {
                let mut push = |phase, samples: Vec<f64>| {
                    rows.push(TimingRow { method, n, phase, seconds: median(samples.clone()), samples, b: cfg.b, workers });
                };
                let pre = |h2: bool, inst: bool| timed(cfg.warmup, cfg.timing_repeats, || count_exact::<f64>(&g, &motif, h2, inst));
                match method {
                    MethodName::MbL | MethodName::MbQ | MethodName::MbM => {
                        let (t, stats) = pre(method == MethodName::MbQ, method == MethodName::MbM)?;
                        push(Phase::Precompute, t);
                        let (t, _) = timed(cfg.warmup, cfg.timing_repeats, || match method {
                            MethodName::MbL => mb_linear(&stats, &weights, cfg.b),
                            MethodName::MbQ => mb_quadratic(&stats, &weights, cfg.b),
                            _ => mb_multiplicative(&stats, &weights, cfg.b),
                        })?;
                        push(Phase::Replicate, t);
                    }
                    MethodName::MbLApx => {
                        let plan = SketchPlan::default_for(n, stream_key(cfg.seed, domain::SKETCH, idx as u64));
                        let (t, stats) =
                            timed(cfg.warmup, cfg.timing_repeats, || sketch_local::<f64>(&g, &motif, &plan))?;
                        push(Phase::Precompute, t);
                        let (t, _) = timed(cfg.warmup, cfg.timing_repeats, || mb_linear(&stats, &weights, cfg.b))?;
                        push(Phase::Replicate, t);
                    }
                    MethodName::Eg => {
                        let (t, _) = timed(cfg.warmup, cfg.timing_repeats, || baseline_eg(&g, &motif, cfg.b, seed))?;
                        push(Phase::Replicate, t);
                    }
                    MethodName::Ss => {
                        let sub = ((n as f64 * cfg.ss_fraction).round() as usize).clamp(motif.r(), n - 1);
                        let (t, _) = timed(cfg.warmup, cfg.timing_repeats, || baseline_ss(&g, &motif, sub, cfg.b, seed))?;
                        push(Phase::Replicate, t);
                    }
                    MethodName::Ew => {
                        let (t, _) = timed(cfg.warmup, cfg.timing_repeats, || {
                            empirical_coefficients(&count_exact::<f64>(&g, &motif, true, false)?)
                        })?;
                        push(Phase::Precompute, t);
                    }
                    MethodName::Normal => {}
                }
            }
        }
        Ok(TimingTable { target: motif.name(), rows })
    })
}

/// Output of any experiment kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentOutput {
    CdfError(CdfErrorTable),
    Coverage(CoverageTable),
    Timing(TimingTable),
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> Result<String> {
        match self {
            ExperimentOutput::CdfError(t) => t.to_csv(),
            ExperimentOutput::Coverage(t) => t.to_csv(),
            ExperimentOutput::Timing(t) => t.to_csv(),
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    Ok(match cfg.kind {
        ExperimentKind::CdfError => ExperimentOutput::CdfError(run_cdf_error(cfg)?),
        ExperimentKind::Coverage => ExperimentOutput::Coverage(run_coverage(cfg, cfg.truth)?),
        ExperimentKind::Timing => ExperimentOutput::Timing(run_timing(cfg)?),
    })
}
