//! Seeded data generation and the experiment drivers: estimator comparison,
//! MSE comparison, and the null expectation curve of `m_τ`.
//!
//! Every `(cell, replication)` pair draws from its own ChaCha8 stream:
//! the generator is seeded with `seed` and the stream number is
//! `cell << 32 | replication`, so results do not depend on scheduling.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{eb_fit_with, log_grid, mmle, simple_estimator, MmleOptions, SimpleEstimatorParams};
use crate::hierarchical::{hb_fit_with, HbOptions, PriorFamily, TauPrior};
use crate::posterior::{c_u_estimate, expected_m_tau_null_with, CoordinatePosterior};
use crate::special::IntegralSettings;

pub const RNG_SCHEME: &str = "ChaCha8Rng::seed_from_u64(seed), stream = (cell << 32) | replication";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EstimatorComparison,
    Mse,
    MtauCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Figure2,
    Figure3,
    Figure4,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Figure2, Preset::Figure3, Preset::Figure4, Preset::Custom];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Figure2 => "figure2",
            Preset::Figure3 => "figure3",
            Preset::Figure4 => "figure4",
            Preset::Custom => "custom",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            invalid(format!("unknown preset '{s}'; valid presets are figure2, figure3, figure4, custom"))
        })
    }
}

/// Law of the first `p` coordinates of the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalLaw {
    /// Every signal equals `A`.
    Fixed,
    /// Signals drawn from `N(A, 1)`.
    Gaussian,
}

/// Law of the remaining `n − p` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NullLaw {
    Zero,
    Gaussian { sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EbSimple,
    EbMmle,
    /// Hierarchical Bayes with a half-Cauchy prior on `τ`.
    HbCauchy,
    /// Hierarchical Bayes with a Cauchy prior truncated to `[1/n, 1]`.
    HbTruncatedCauchy,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::EbSimple, Method::EbMmle, Method::HbCauchy, Method::HbTruncatedCauchy];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::EbSimple => "eb_simple",
            Method::EbMmle => "eb_mmle",
            Method::HbCauchy => "hb_cauchy",
            Method::HbTruncatedCauchy => "hb_truncated_cauchy",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Log-uniform `τ` grid of the curve experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGridSpec {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl TauGridSpec {
    pub fn values(&self) -> Vec<f64> {
        log_grid(self.lower, self.upper, self.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub p_values: Vec<usize>,
    pub a_values: Vec<f64>,
    pub signal_law: SignalLaw,
    pub null_law: NullLaw,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub mmle_grid_size: usize,
    pub hb_grid_size: usize,
    pub rel_tol: f64,
    pub tau_grid: TauGridSpec,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

const DEFAULT_SEED: u64 = 20_170_101;

impl ExperimentConfig {
    /// Estimator comparison: `n = 100`, `A ∈ {1, 4, 7}`, signals `N(A, 1)`,
    /// nulls `N(0, 0.5²)`, 200 replications.
    pub fn figure2() -> Self {
        Self {
            experiment: ExperimentKind::EstimatorComparison,
            n: 100,
            p_values: vec![5, 10, 15, 20, 25],
            a_values: vec![1.0, 4.0, 7.0],
            signal_law: SignalLaw::Gaussian,
            null_law: NullLaw::Gaussian { sd: 0.5 },
            replications: 200,
            seed: DEFAULT_SEED,
            methods: vec![Method::EbSimple, Method::EbMmle],
            mmle_grid_size: 200,
            hb_grid_size: 400,
            rel_tol: 1e-10,
            tau_grid: Self::figure4().tau_grid,
            threads: None,
        }
    }

    /// MSE comparison: `n = 400`, `p ∈ {20, 200}`, fixed signals
    /// `A = 1..10`, zero nulls, 50 replications, all four methods.
    pub fn figure3() -> Self {
        Self {
            experiment: ExperimentKind::Mse,
            n: 400,
            p_values: vec![20, 200],
            a_values: (1..=10).map(f64::from).collect(),
            signal_law: SignalLaw::Fixed,
            null_law: NullLaw::Zero,
            replications: 50,
            methods: Method::ALL.to_vec(),
            ..Self::figure2()
        }
    }

    /// `E₀ m_τ` on 40 log-spaced points of `[1e−6, 0.99]`.
    pub fn figure4() -> Self {
        Self {
            experiment: ExperimentKind::MtauCurve,
            n: 1,
            p_values: vec![],
            a_values: vec![],
            signal_law: SignalLaw::Fixed,
            null_law: NullLaw::Zero,
            replications: 1,
            seed: DEFAULT_SEED,
            methods: vec![],
            mmle_grid_size: 200,
            hb_grid_size: 400,
            rel_tol: 1e-10,
            tau_grid: TauGridSpec { lower: 1e-6, upper: 0.99, points: 40 },
            threads: None,
        }
    }

    pub fn preset(preset: Preset) -> Option<Self> {
        match preset {
            Preset::Figure2 => Some(Self::figure2()),
            Preset::Figure3 => Some(Self::figure3()),
            Preset::Figure4 => Some(Self::figure4()),
            Preset::Custom => None,
        }
    }

    pub fn settings(&self) -> IntegralSettings {
        IntegralSettings { rel_tol: self.rel_tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| invalid(format!("config field '{name}': {msg}"));
        if self.experiment == ExperimentKind::MtauCurve {
            let g = &self.tau_grid;
            if !(g.lower > 0.0 && g.upper < 1.0 && g.lower <= g.upper) || g.points == 0 {
                return Err(field("tau_grid", format!("needs 0 < lower <= upper < 1 and points >= 1, got {g:?}")));
            }
            if g.points > 1 && g.lower == g.upper {
                return Err(field("tau_grid", "lower == upper with more than one point".into()));
            }
        } else {
            if self.n < 2 {
                return Err(field("n", format!("must be at least 2, got {}", self.n)));
            }
            if self.p_values.is_empty() {
                return Err(field("p_values", "must not be empty".into()));
            }
            if let Some(p) = self.p_values.iter().find(|&&p| p > self.n) {
                return Err(field("p_values", format!("{p} exceeds n = {}", self.n)));
            }
            if self.a_values.is_empty() || self.a_values.iter().any(|a| !a.is_finite()) {
                return Err(field("a_values", "must be a non-empty list of finite numbers".into()));
            }
            if self.methods.is_empty() {
                return Err(field("methods", "must not be empty".into()));
            }
            if self.experiment == ExperimentKind::EstimatorComparison
                && !(self.methods.contains(&Method::EbSimple) && self.methods.contains(&Method::EbMmle))
            {
                return Err(field("methods", "estimator_comparison needs eb_simple and eb_mmle".into()));
            }
            if let NullLaw::Gaussian { sd } = self.null_law {
                if !(sd.is_finite() && sd > 0.0) {
                    return Err(field("null_sd", format!("must be positive, got {sd}")));
                }
            }
        }
        if self.replications == 0 {
            return Err(field("replications", "must be at least 1".into()));
        }
        if self.mmle_grid_size < 2 {
            return Err(field("mmle_grid_size", "must be at least 2".into()));
        }
        if self.hb_grid_size < 50 {
            return Err(field("hb_grid_size", "must be at least 50".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-3) {
            return Err(field("rel_tol", format!("must lie in (0, 1e-3), got {}", self.rel_tol)));
        }
        if self.threads == Some(0) {
            return Err(field("threads", "must be at least 1".into()));
        }
        Ok(())
    }

    /// The flat file form; feeding it back through [`ConfigFile::resolve`]
    /// reproduces this configuration.
    pub fn to_file(&self, preset: Preset) -> ConfigFile {
        let (null_law, null_sd) = match self.null_law {
            NullLaw::Zero => ("zero".to_string(), None),
            NullLaw::Gaussian { sd } => ("gaussian".to_string(), Some(sd)),
        };
        ConfigFile {
            preset: preset.as_str().to_string(),
            experiment: Some(self.experiment),
            n: Some(self.n),
            p_values: Some(self.p_values.clone()),
            a_values: Some(self.a_values.clone()),
            signal_law: Some(self.signal_law),
            null_law: Some(null_law),
            null_sd,
            replications: Some(self.replications),
            seed: Some(self.seed),
            methods: Some(self.methods.clone()),
            mmle_grid_size: Some(self.mmle_grid_size),
            hb_grid_size: Some(self.hb_grid_size),
            rel_tol: Some(self.rel_tol),
            threads: self.threads,
            tau_grid: Some(self.tau_grid),
        }
    }
}

/// Experiment configuration as written in a TOML file: a preset plus
/// optional overrides of any field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: String,
    pub experiment: Option<ExperimentKind>,
    pub n: Option<usize>,
    pub p_values: Option<Vec<usize>>,
    pub a_values: Option<Vec<f64>>,
    pub signal_law: Option<SignalLaw>,
    /// `"zero"` or `"gaussian"`.
    pub null_law: Option<String>,
    pub null_sd: Option<f64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<Method>>,
    pub mmle_grid_size: Option<usize>,
    pub hb_grid_size: Option<usize>,
    pub rel_tol: Option<f64>,
    pub threads: Option<usize>,
    pub tau_grid: Option<TauGridSpec>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("invalid config: {}", e.to_string().trim_end())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<(Preset, ExperimentConfig)> {
        let preset: Preset = self.preset.parse()?;
        let mut cfg = match ExperimentConfig::preset(preset) {
            Some(c) => c,
            None => {
                let kind = self
                    .experiment
                    .ok_or_else(|| invalid("config field 'experiment': required for the custom preset"))?;
                match kind {
                    ExperimentKind::EstimatorComparison => ExperimentConfig::figure2(),
                    ExperimentKind::Mse => ExperimentConfig::figure3(),
                    ExperimentKind::MtauCurve => ExperimentConfig::figure4(),
                }
            }
        };
        if let Some(k) = self.experiment {
            if preset != Preset::Custom && k != cfg.experiment {
                return Err(invalid(format!(
                    "config field 'experiment': preset {} runs {:?}; use preset = \"custom\" to change it",
                    preset.as_str(),
                    cfg.experiment
                )));
            }
            cfg.experiment = k;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )* };
        }
        take!(n, p_values, a_values, signal_law, replications, seed, methods, mmle_grid_size, hb_grid_size, rel_tol, tau_grid);
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        let sd_default = match cfg.null_law {
            NullLaw::Gaussian { sd } => sd,
            NullLaw::Zero => 0.5,
        };
        match self.null_law.as_deref() {
            None => {
                if let (Some(sd), NullLaw::Gaussian { .. }) = (self.null_sd, cfg.null_law) {
                    cfg.null_law = NullLaw::Gaussian { sd };
                } else if self.null_sd.is_some() {
                    return Err(invalid("config field 'null_sd': only valid with null_law = \"gaussian\""));
                }
            }
            Some("zero") => {
                if self.null_sd.is_some() {
                    return Err(invalid("config field 'null_sd': only valid with null_law = \"gaussian\""));
                }
                cfg.null_law = NullLaw::Zero;
            }
            Some("gaussian") => cfg.null_law = NullLaw::Gaussian { sd: self.null_sd.unwrap_or(sd_default) },
            Some(other) => {
                return Err(invalid(format!(
                    "config field 'null_law': unknown value '{other}'; expected \"zero\" or \"gaussian\""
                )))
            }
        }
        cfg.validate()?;
        Ok((preset, cfg))
    }
}

/// Truth and observations of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
}

/// The generator of replication `rep` in cell `cell`.
pub fn cell_rng(seed: u64, cell: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | rep as u64);
    rng
}

/// Draws `θ₀` (signals in the first `p` positions) and `Y = θ₀ + ε`.
pub fn generate_truth<R: Rng>(
    n: usize,
    p: usize,
    a: f64,
    signal_law: SignalLaw,
    null_law: NullLaw,
    rng: &mut R,
) -> Sample {
    let mut theta = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i < p {
            match signal_law {
                SignalLaw::Fixed => a,
                SignalLaw::Gaussian => a + rng.sample::<f64, _>(StandardNormal),
            }
        } else {
            match null_law {
                NullLaw::Zero => 0.0,
                NullLaw::Gaussian { sd } => sd * rng.sample::<f64, _>(StandardNormal),
            }
        };
        theta.push(v);
    }
    let y = theta.iter().map(|t| t + rng.sample::<f64, _>(StandardNormal)).collect();
    Sample { theta, y }
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    /// Sum of squared errors over the first `p` coordinates.
    pub sse_nonzero: f64,
    /// Sum of squared errors over the remaining coordinates.
    pub sse_zero: f64,
    /// `τ̂`, or the posterior mean of `τ`.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub cell: usize,
    pub rep: usize,
    pub p: usize,
    pub a: f64,
    pub methods: Vec<MethodOutcome>,
}

/// Posterior means and the reported `τ` of one method.
pub fn fit_method(
    method: Method,
    y: &[f64],
    mmle_grid_size: usize,
    hb_grid_size: usize,
    settings: &IntegralSettings,
) -> Result<(Vec<CoordinatePosterior>, f64)> {
    let n = y.len();
    match method {
        Method::EbSimple => {
            let tau = simple_estimator(y, SimpleEstimatorParams::default())?;
            Ok((eb_fit_with(y, tau, settings)?, tau))
        }
        Method::EbMmle => {
            let opts = MmleOptions { grid_size: mmle_grid_size, parallel: false, settings: *settings, ..Default::default() };
            let tau = mmle(y, &opts)?.tau_hat;
            Ok((eb_fit_with(y, tau, settings)?, tau))
        }
        Method::HbCauchy | Method::HbTruncatedCauchy => {
            let family =
                if method == Method::HbCauchy { PriorFamily::HalfCauchy } else { PriorFamily::TruncatedCauchy };
            let prior = TauPrior::new(family, n)?;
            let opts = HbOptions { grid_size: hb_grid_size, settings: *settings, parallel: false, ..Default::default() };
            let fit = hb_fit_with(y, &prior, &opts)?;
            let tau = fit.posterior.mean_tau();
            Ok((fit.coordinates, tau))
        }
    }
}

/// Runs every method of `config` on replication `rep` of cell `(p, a)`.
pub fn run_replication(config: &ExperimentConfig, cell: usize, p: usize, a: f64, rep: usize) -> Result<RepOutcome> {
    let mut rng = cell_rng(config.seed, cell, rep);
    let sample = generate_truth(config.n, p, a, config.signal_law, config.null_law, &mut rng);
    let settings = config.settings();
    let mut methods = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let (fit, tau) = fit_method(method, &sample.y, config.mmle_grid_size, config.hb_grid_size, &settings)?;
        let (mut sse_nonzero, mut sse_zero) = (0.0, 0.0);
        for (i, (c, t)) in fit.iter().zip(&sample.theta).enumerate() {
            let e = (c.mean - t).powi(2);
            if i < p {
                sse_nonzero += e;
            } else {
                sse_zero += e;
            }
        }
        methods.push(MethodOutcome { method, sse_nonzero, sse_zero, tau });
    }
    Ok(RepOutcome { cell, rep, p, a, methods })
}

/// One aggregated line of the result table. Errors are sums of squared
/// errors over coordinates, averaged over replications, so
/// `mse_overall = mse_nonzero + mse_zero`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub p: usize,
    pub a: f64,
    pub mse_overall: f64,
    /// NaN when `p = 0`.
    pub mse_nonzero: f64,
    pub mse_zero: f64,
    pub mean_tau: f64,
    pub se_overall: f64,
    pub se_nonzero: f64,
    pub se_zero: f64,
    pub se_tau: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub preset: Preset,
    pub config: ExperimentConfig,
    pub wall_time_secs: f64,
    pub library_version: &'static str,
    pub rng_scheme: &'static str,
    pub c_u_estimate: Option<f64>,
}

impl RunMetadata {
    fn new(preset: Preset, config: &ExperimentConfig, started: Instant) -> Self {
        Self {
            preset,
            config: config.clone(),
            wall_time_secs: started.elapsed().as_secs_f64(),
            library_version: env!("CARGO_PKG_VERSION"),
            rng_scheme: RNG_SCHEME,
            c_u_estimate: None,
        }
    }

    /// TOML sidecar: run information followed by the resolved config.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Run<'a> {
            library_version: &'a str,
            wall_time_secs: f64,
            rng_scheme: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            c_u_estimate: Option<f64>,
        }
        #[derive(Serialize)]
        struct Sidecar<'a> {
            run: Run<'a>,
            config: ConfigFile,
        }
        let s = Sidecar {
            run: Run {
                library_version: self.library_version,
                wall_time_secs: self.wall_time_secs,
                rng_scheme: self.rng_scheme,
                c_u_estimate: self.c_u_estimate,
            },
            config: self.config.to_file(self.preset),
        };
        toml::to_string(&s).expect("metadata serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    /// Per-replication outcomes in `(cell, replication)` order.
    pub replicates: Vec<RepOutcome>,
    pub metadata: RunMetadata,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| invalid(format!("cannot start thread pool: {e}"))),
    }
}

/// Cells in output order: `p` outer, `A` inner.
pub fn cells(config: &ExperimentConfig) -> Vec<(usize, f64)> {
    config.p_values.iter().flat_map(|&p| config.a_values.iter().map(move |&a| (p, a))).collect()
}

fn run_table(preset: Preset, config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let cells = cells(config);
    let tasks: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..config.replications).map(move |r| (c, r))).collect();
    let outcomes: Vec<Result<RepOutcome>> = with_pool(config.threads, || {
        tasks.par_iter().map(|&(c, r)| run_replication(config, c, cells[c].0, cells[c].1, r)).collect()
    })?;
    let replicates = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (c, &(p, a)) in cells.iter().enumerate() {
        let reps = &replicates[c * config.replications..(c + 1) * config.replications];
        for (k, &method) in config.methods.iter().enumerate() {
            let col = |f: fn(&MethodOutcome) -> f64| reps.iter().map(|r| f(&r.methods[k])).collect::<Vec<_>>();
            let (mse_nonzero, se_nonzero) =
                if p == 0 { (f64::NAN, f64::NAN) } else { mean_se(&col(|m| m.sse_nonzero)) };
            let (mse_zero, se_zero) = mean_se(&col(|m| m.sse_zero));
            let (mse_overall, se_overall) = mean_se(&col(|m| m.sse_nonzero + m.sse_zero));
            let (mean_tau, se_tau) = mean_se(&col(|m| m.tau));
            rows.push(ResultRow {
                method,
                p,
                a,
                mse_overall,
                mse_nonzero,
                mse_zero,
                mean_tau,
                se_overall,
                se_nonzero,
                se_zero,
                se_tau,
                replications: config.replications,
            });
        }
    }
    Ok(ExperimentResult { rows, replicates, metadata: RunMetadata::new(preset, config, started) })
}

/// Mean `τ̂_M` and `τ̂_S` (and the plug-in MSE) per `(p, A)` cell.
pub fn run_estimator_comparison(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.experiment != ExperimentKind::EstimatorComparison {
        return Err(invalid("run_estimator_comparison needs experiment = estimator_comparison"));
    }
    run_table(Preset::Figure2, config)
}

/// MSE of the posterior mean per `(p, A)` cell and method.
pub fn run_mse_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.experiment != ExperimentKind::Mse {
        return Err(invalid("run_mse_experiment needs experiment = mse"));
    }
    run_table(Preset::Figure3, config)
}

impl ExperimentResult {
    pub fn row(&self, method: Method, p: usize, a: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.p == p && r.a == a)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "method",
            "p",
            "A",
            "mse_overall",
            "mse_nonzero",
            "mse_zero",
            "mean_tau",
            "se_mse_overall",
            "se_mse_nonzero",
            "se_mse_zero",
            "se_mean_tau",
            "replications",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record(&[
                r.method.as_str().to_string(),
                r.p.to_string(),
                r.a.to_string(),
                r.mse_overall.to_string(),
                r.mse_nonzero.to_string(),
                r.mse_zero.to_string(),
                r.mean_tau.to_string(),
                r.se_overall.to_string(),
                r.se_nonzero.to_string(),
                r.se_zero.to_string(),
                r.se_tau.to_string(),
                r.replications.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtauPoint {
    pub tau: f64,
    pub e0_mtau: f64,
    /// `−(2^{3/2}/π^{3/2}) τ/ζ_τ`.
    pub asymptote: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtauCurve {
    pub points: Vec<MtauPoint>,
    pub metadata: RunMetadata,
}

impl MtauCurve {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["tau", "e0_mtau", "asymptote"]).expect("in-memory write");
        for p in &self.points {
            w.write_record(&[p.tau.to_string(), p.e0_mtau.to_string(), p.asymptote.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// The small-`τ` asymptote `−(2^{3/2}/π^{3/2}) τ/ζ_τ` of `E₀ m_τ`.
pub fn mtau_asymptote(tau: f64) -> Result<f64> {
    let zeta = crate::special::zeta(tau)?;
    Ok(-(2.0f64.powf(1.5) / std::f64::consts::PI.powf(1.5)) * tau / zeta)
}

/// Tabulates `E₀ m_τ` and its asymptote on a `τ` grid inside `(0, 1)`.
pub fn run_mtau_curve(taus: &[f64], settings: &IntegralSettings) -> Result<Vec<MtauPoint>> {
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(invalid(format!("tau grid must lie inside (0, 1), got {t}")));
    }
    taus.par_iter()
        .map(|&tau| {
            Ok(MtauPoint { tau, e0_mtau: expected_m_tau_null_with(tau, settings)?, asymptote: mtau_asymptote(tau)? })
        })
        .collect()
}

/// The output of [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Table(ExperimentResult),
    Curve(MtauCurve),
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> String {
        match self {
            ExperimentOutput::Table(t) => t.to_csv(),
            ExperimentOutput::Curve(c) => c.to_csv(),
        }
    }

    pub fn metadata(&self) -> &RunMetadata {
        match self {
            ExperimentOutput::Table(t) => &t.metadata,
            ExperimentOutput::Curve(c) => &c.metadata,
        }
    }
}

/// Runs whichever experiment `config` describes.
pub fn run_experiment(preset: Preset, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::EstimatorComparison | ExperimentKind::Mse => {
            let mut t = run_table(preset, config)?;
            if config.methods.iter().any(|m| matches!(m, Method::HbCauchy | Method::HbTruncatedCauchy)) {
                t.metadata.c_u_estimate = Some(c_u_estimate());
            }
            Ok(ExperimentOutput::Table(t))
        }
        ExperimentKind::MtauCurve => {
            let started = Instant::now();
            let points = with_pool(config.threads, || run_mtau_curve(&config.tau_grid.values(), &config.settings()))??;
            let mut metadata = RunMetadata::new(preset, config, started);
            metadata.c_u_estimate = Some(c_u_estimate());
            Ok(ExperimentOutput::Curve(MtauCurve { points, metadata }))
        }
    }
}
