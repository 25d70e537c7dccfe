//! Empirical-Bayes estimators of `τ` and the plug-in posterior fit.

use rayon::prelude::*;

use crate::error::{check_observations, invalid, Error, Result};
use crate::posterior::{likelihood_and_score, log_marginal_likelihood_with, CoordinatePosterior};
use crate::quadrature::brent_minimize;
use crate::special::{IntegralSettings, KernelTable};

/// Constants of the threshold estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleEstimatorParams {
    pub c1: f64,
    pub c2: f64,
}

impl Default for SimpleEstimatorParams {
    fn default() -> Self {
        Self { c1: 2.0, c2: 1.0 }
    }
}

impl SimpleEstimatorParams {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        let p = Self { c1, c2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `max(#{|y_i| ≥ sqrt(c1 log n)} / (c2 n), 1/n)`, capped at 1.
pub fn simple_estimator(y: &[f64], params: SimpleEstimatorParams) -> Result<f64> {
    check_observations(y)?;
    params.validate()?;
    let n = y.len() as f64;
    let threshold = (params.c1 * n.ln()).sqrt();
    let count = y.iter().filter(|v| v.abs() >= threshold).count() as f64;
    Ok((count / (params.c2 * n)).max(1.0 / n).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryFlag {
    Interior,
    AtLower,
    AtUpper,
}

impl BoundaryFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryFlag::Interior => "interior",
            BoundaryFlag::AtLower => "at_lower",
            BoundaryFlag::AtUpper => "at_upper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmleOptions {
    /// Points of the log-uniform scan over `[1/n, 1]` (default 200).
    pub grid_size: usize,
    /// Tolerance of the refinement, in `log τ`.
    pub log_tau_tol: f64,
    pub max_iter: usize,
    pub keep_profile: bool,
    /// Evaluate the scan in parallel; the result does not depend on it.
    pub parallel: bool,
    pub settings: IntegralSettings,
}

impl Default for MmleOptions {
    fn default() -> Self {
        Self {
            grid_size: 200,
            log_tau_tol: 1e-9,
            max_iter: 200,
            keep_profile: false,
            parallel: true,
            settings: IntegralSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmleResult {
    pub tau_hat: f64,
    pub log_likelihood_at_max: f64,
    pub n_evaluations: usize,
    /// `(τ, M_τ)` on the scan grid, when requested.
    pub profile: Option<Vec<(f64, f64)>>,
    pub boundary_flag: BoundaryFlag,
    /// False when the refinement did not converge; `tau_hat` is then the
    /// best scanned point.
    pub converged: bool,
}

/// Log-uniform grid of `size` points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..size)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == size - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (size - 1) as f64).exp()
            }
        })
        .collect()
}

/// `(τ, M_τ(Y))` for every `τ` in `taus`.
pub fn likelihood_profile(
    y: &[f64],
    taus: &[f64],
    settings: &IntegralSettings,
    parallel: bool,
) -> Result<Vec<(f64, f64)>> {
    check_observations(y)?;
    let eval = |&t: &f64| log_marginal_likelihood_with(y, t, settings).map(|m| (t, m));
    if parallel {
        taus.par_iter().map(eval).collect()
    } else {
        taus.iter().map(eval).collect()
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Maximizer of the log marginal likelihood over `[1/n, 1]`.
///
/// A log-uniform scan locates the best grid point (smallest `τ` on ties);
/// Brent's method then refines in `log τ` between its neighbours.
pub fn mmle(y: &[f64], options: &MmleOptions) -> Result<MmleResult> {
    check_observations(y)?;
    if options.grid_size < 1 {
        return Err(invalid("mmle grid_size must be at least 1"));
    }
    let n = y.len();
    let lo = 1.0 / n as f64;
    let settings = options.settings;

    if n == 1 {
        let m = log_marginal_likelihood_with(y, 1.0, &settings)?;
        return Ok(MmleResult {
            tau_hat: 1.0,
            log_likelihood_at_max: m,
            n_evaluations: 1,
            profile: options.keep_profile.then(|| vec![(1.0, m)]),
            boundary_flag: BoundaryFlag::AtUpper,
            converged: true,
        });
    }

    let grid = log_grid(lo, 1.0, options.grid_size);
    let profile = likelihood_profile(y, &grid, &settings, options.parallel)?;
    let mut n_evaluations = grid.len();
    let i = argmax_first(profile.iter().map(|p| p.1)).expect("non-empty grid");
    let (mut tau_hat, mut best) = profile[i];

    let mut converged = true;
    if grid.len() > 1 {
        let u_lo = grid[i.saturating_sub(1)].ln();
        let u_hi = grid[(i + 1).min(grid.len() - 1)].ln();
        let mut failure = None;
        let found = brent_minimize(
            |u| match log_marginal_likelihood_with(y, u.exp(), &settings) {
                Ok(m) => -m,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            u_lo,
            u_hi,
            options.log_tau_tol,
            options.max_iter,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        n_evaluations += found.evaluations;
        converged = found.converged;
        let candidate = found.x.exp().clamp(lo, 1.0);
        if -found.fx > best {
            tau_hat = candidate;
            best = -found.fx;
        }
    }

    let u = tau_hat.ln();
    let boundary_flag = if (u - lo.ln()).abs() <= 1e-6 {
        BoundaryFlag::AtLower
    } else if u.abs() <= 1e-6 {
        BoundaryFlag::AtUpper
    } else {
        BoundaryFlag::Interior
    };
    Ok(MmleResult {
        tau_hat,
        log_likelihood_at_max: best,
        n_evaluations,
        profile: options.keep_profile.then_some(profile),
        boundary_flag,
        converged,
    })
}

/// Plug-in posterior means and variances at `τ̂ ∈ [1/n, 1]`.
pub fn eb_fit(y: &[f64], tau_hat: f64) -> Result<Vec<CoordinatePosterior>> {
    eb_fit_with(y, tau_hat, &IntegralSettings::default())
}

pub fn eb_fit_with(y: &[f64], tau_hat: f64, settings: &IntegralSettings) -> Result<Vec<CoordinatePosterior>> {
    check_observations(y)?;
    let lo = 1.0 / y.len() as f64;
    // allow a few ulps so estimators computed as exp(log τ) are accepted
    if !(tau_hat >= lo * (1.0 - 1e-12) && tau_hat <= 1.0 + 1e-12) {
        return Err(invalid(format!("tau_hat must lie in [1/n, 1] = [{lo}, 1], got {tau_hat}")));
    }
    fit_at(y, tau_hat, settings)
}

pub(crate) fn fit_at(y: &[f64], tau: f64, settings: &IntegralSettings) -> Result<Vec<CoordinatePosterior>> {
    let max_abs = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let table = KernelTable::new(tau, max_abs, *settings)?;
    y.iter()
        .map(|&v| {
            let s = table.sums(v);
            if !s.converged {
                return Err(Error::Accuracy { what: "eb_fit", rel_error: s.rel_err });
            }
            Ok(CoordinatePosterior::from_sums(v, tau, &s, false))
        })
        .collect()
}

/// Derivative of `M_τ` in `τ` at the MMLE; close to zero for interior maxima.
pub fn score_at(y: &[f64], tau: f64, settings: &IntegralSettings) -> Result<f64> {
    Ok(likelihood_and_score(y, tau, settings)?.1)
}
