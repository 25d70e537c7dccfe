//! Hyperpriors on `τ` and the full-Bayes posterior by quadrature over `τ`.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{check_observations, invalid, Error, Result};
use crate::estimators::log_grid;
use crate::posterior::CoordinatePosterior;
use crate::special::{IntegralSettings, KernelTable, LN_SQRT_2PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorFamily {
    TruncatedCauchy,
    Uniform,
    Reciprocal,
    HalfCauchy,
}

impl PriorFamily {
    pub const ALL: [PriorFamily; 4] =
        [PriorFamily::TruncatedCauchy, PriorFamily::Uniform, PriorFamily::Reciprocal, PriorFamily::HalfCauchy];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorFamily::TruncatedCauchy => "truncated_cauchy",
            PriorFamily::Uniform => "uniform",
            PriorFamily::Reciprocal => "reciprocal",
            PriorFamily::HalfCauchy => "half_cauchy",
        }
    }
}

impl fmt::Display for PriorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PriorFamily::ALL.into_iter().find(|f| f.as_str() == s).ok_or_else(|| {
            invalid(format!(
                "unknown prior family '{s}'; expected one of truncated_cauchy, uniform, reciprocal, half_cauchy"
            ))
        })
    }
}

/// A hyperprior on `τ` with its support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauPrior {
    pub family: PriorFamily,
    pub lower: f64,
    /// `+∞` for the half-Cauchy.
    pub upper: f64,
    log_norm: f64,
}

impl TauPrior {
    /// The family on its default support: `[1/n, 1]`, or `(0, ∞)` for the
    /// half-Cauchy.
    pub fn new(family: PriorFamily, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("prior support needs n >= 1"));
        }
        match family {
            PriorFamily::HalfCauchy => Ok(Self { family, lower: 0.0, upper: f64::INFINITY, log_norm: 0.0 }),
            _ => Self::with_support(family, 1.0 / n as f64, 1.0),
        }
    }

    /// A bounded family on `[lower, upper]`.
    pub fn with_support(family: PriorFamily, lower: f64, upper: f64) -> Result<Self> {
        if family == PriorFamily::HalfCauchy {
            if lower == 0.0 && upper == f64::INFINITY {
                return Self::new(family, 1);
            }
            return Err(invalid("half_cauchy has fixed support (0, inf); use truncated_cauchy for a bounded range"));
        }
        if !(lower > 0.0 && upper.is_finite() && upper > lower) {
            return Err(invalid(format!("degenerate prior support [{lower}, {upper}]")));
        }
        let log_norm = match family {
            PriorFamily::TruncatedCauchy => (upper.atan() - lower.atan()).ln(),
            PriorFamily::Uniform => (upper - lower).ln(),
            PriorFamily::Reciprocal => (upper / lower).ln().ln(),
            PriorFamily::HalfCauchy => unreachable!(),
        };
        Ok(Self { family, lower, upper, log_norm })
    }

    pub fn contains(&self, tau: f64) -> bool {
        match self.family {
            PriorFamily::HalfCauchy => tau > 0.0 && tau < f64::INFINITY,
            _ => tau >= self.lower && tau <= self.upper,
        }
    }

    /// Normalized log density; `−∞` outside the support.
    pub fn log_density(&self, tau: f64) -> f64 {
        if !self.contains(tau) {
            return f64::NEG_INFINITY;
        }
        match self.family {
            PriorFamily::TruncatedCauchy => -(tau * tau).ln_1p() - self.log_norm,
            PriorFamily::Uniform => -self.log_norm,
            PriorFamily::Reciprocal => -tau.ln() - self.log_norm,
            PriorFamily::HalfCauchy => FRAC_2_PI.ln() - (tau * tau).ln_1p(),
        }
    }
}

/// Discrete approximation of `π(τ | Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauPosterior {
    /// Strictly increasing `τ` values inside the prior support.
    pub grid: Vec<f64>,
    /// Normalized log masses (quadrature weights included).
    pub log_weights: Vec<f64>,
    /// Log marginal evidence `log ∫ π(τ) e^{M_τ(Y)} dτ`.
    pub normalizer: f64,
}

impl TauPosterior {
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn mean_tau(&self) -> f64 {
        self.grid.iter().zip(&self.log_weights).map(|(t, w)| t * w.exp()).sum()
    }

    /// `Π(τ > threshold | Y)`.
    pub fn tail_mass(&self, threshold: f64) -> f64 {
        if self.grid.first().is_some_and(|&t| threshold < t) {
            return 1.0;
        }
        self.grid
            .iter()
            .zip(&self.log_weights)
            .filter(|(t, _)| **t > threshold)
            .fold(0.0, |acc, (_, w)| acc + w.exp())
            .min(1.0)
    }
}

/// `Π(τ > threshold | Y)`.
pub fn tau_tail_mass(posterior: &TauPosterior, threshold: f64) -> Result<f64> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(invalid(format!("threshold must be positive, got {threshold}")));
    }
    Ok(posterior.tail_mass(threshold))
}

/// `log π(τ) + M_τ(Y)`; `−∞` outside the prior support.
pub fn log_tau_posterior_unnorm(tau: f64, y: &[f64], prior: &TauPrior) -> Result<f64> {
    check_observations(y)?;
    if !prior.contains(tau) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(prior.log_density(tau) + crate::posterior::log_marginal_likelihood(y, tau)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HbOptions {
    /// At least 50 (default 400).
    pub grid_size: usize,
    pub settings: IntegralSettings,
    pub parallel: bool,
    /// Grid points whose normalized log weight is below this are left out
    /// of the coordinate mixtures.
    pub log_weight_cutoff: f64,
}

impl Default for HbOptions {
    fn default() -> Self {
        Self { grid_size: 400, settings: IntegralSettings::default(), parallel: true, log_weight_cutoff: -50.0 }
    }
}

impl HbOptions {
    pub fn with_grid(grid_size: usize) -> Self {
        Self { grid_size, ..Default::default() }
    }
}

// Grid nodes with their log quadrature weight (prior density and Jacobian
// included). Bounded priors: trapezoid in log τ. Half-Cauchy: π(τ)dτ = (2/π)du
// with u = arctan τ, trapezoid in log u; the cell below the first node is
// lumped into it.
fn nodes(prior: &TauPrior, n: usize, grid_size: usize) -> Vec<(f64, f64)> {
    let trap = |i: usize, h: f64| if i == 0 || i == grid_size - 1 { 0.5 * h } else { h };
    match prior.family {
        PriorFamily::HalfCauchy => {
            let u_lo = (1e-3 / n as f64).atan();
            let u_hi = FRAC_PI_2 * (1.0 - 1e-6);
            let h = (u_hi / u_lo).ln() / (grid_size - 1) as f64;
            log_grid(u_lo, u_hi, grid_size)
                .into_iter()
                .enumerate()
                .map(|(i, u)| {
                    let mut w = trap(i, h) * u;
                    if i == 0 {
                        w += u;
                    }
                    (u.tan(), FRAC_2_PI.ln() + w.ln())
                })
                .collect()
        }
        _ => {
            let h = (prior.upper / prior.lower).ln() / (grid_size - 1) as f64;
            log_grid(prior.lower, prior.upper, grid_size)
                .into_iter()
                .enumerate()
                .map(|(i, t)| (t, prior.log_density(t) + (trap(i, h) * t).ln()))
                .collect()
        }
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn max_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < 50 {
        return Err(invalid(format!("grid_size must be at least 50, got {grid_size}")));
    }
    Ok(())
}

fn map_maybe_par<T: Sync, R: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Posterior of `τ` on a deterministic grid.
pub fn tau_posterior(y: &[f64], prior: &TauPrior, grid_size: usize) -> Result<TauPosterior> {
    tau_posterior_with(y, prior, &HbOptions::with_grid(grid_size))
}

pub fn tau_posterior_with(y: &[f64], prior: &TauPrior, options: &HbOptions) -> Result<TauPosterior> {
    check_observations(y)?;
    check_grid(options.grid_size)?;
    let nodes = nodes(prior, y.len(), options.grid_size);
    let top = max_abs(y);
    let settings = options.settings;
    let n = y.len() as f64;
    let loglik: Vec<Result<f64>> = map_maybe_par(&nodes, options.parallel, |&(tau, _)| {
        let table = KernelTable::new(tau, top, settings)?;
        let base = n * ((tau / std::f64::consts::PI).ln() - LN_SQRT_2PI);
        Ok(base + y.iter().map(|&v| table.log_s0(v)).sum::<f64>())
    });
    let mut log_mass = Vec::with_capacity(nodes.len());
    for ((_, lw), m) in nodes.iter().zip(loglik) {
        log_mass.push(lw + m?);
    }
    let normalizer = log_sum_exp(&log_mass);
    if !normalizer.is_finite() {
        return Err(Error::Accuracy { what: "tau_posterior", rel_error: f64::INFINITY });
    }
    Ok(TauPosterior {
        grid: nodes.iter().map(|p| p.0).collect(),
        log_weights: log_mass.iter().map(|m| m - normalizer).collect(),
        normalizer,
    })
}

/// Result of a hierarchical fit.
#[derive(Debug, Clone, PartialEq)]
pub struct HbFit {
    pub posterior: TauPosterior,
    pub coordinates: Vec<CoordinatePosterior>,
}

/// Posterior means and variances of `θ` with `τ` integrated out.
pub fn hb_fit(y: &[f64], prior: &TauPrior, grid_size: usize) -> Result<Vec<CoordinatePosterior>> {
    Ok(hb_fit_with(y, prior, &HbOptions::with_grid(grid_size))?.coordinates)
}

pub fn hb_fit_with(y: &[f64], prior: &TauPrior, options: &HbOptions) -> Result<HbFit> {
    let posterior = tau_posterior_with(y, prior, options)?;
    let active: Vec<(f64, f64)> = posterior
        .grid
        .iter()
        .zip(&posterior.log_weights)
        .filter(|(_, w)| **w >= options.log_weight_cutoff)
        .map(|(t, w)| (*t, w.exp()))
        .collect();
    let kept: f64 = active.iter().map(|a| a.1).sum();
    let top = max_abs(y);
    let settings = options.settings;

    // per node: (E θ_i, E θ_i²) for every coordinate
    let moments: Vec<Result<Vec<(f64, f64)>>> = map_maybe_par(&active, options.parallel, |&(tau, _)| {
        let table = KernelTable::new(tau, top, settings)?;
        y.iter()
            .map(|&v| {
                let s = table.sums(v);
                if !s.converged {
                    return Err(Error::Accuracy { what: "hb_fit", rel_error: s.rel_err });
                }
                let m = s.posterior_mean(v);
                Ok((m, s.posterior_variance(v) + m * m))
            })
            .collect()
    });

    let mut first = vec![0.0; y.len()];
    let mut second = vec![0.0; y.len()];
    for ((_, w), node) in active.iter().zip(moments) {
        let w = w / kept;
        for (i, (m, s)) in node?.into_iter().enumerate() {
            first[i] += w * m;
            second[i] += w * s;
        }
    }
    let mean_tau = posterior.mean_tau();
    let coordinates = y
        .iter()
        .zip(first.iter().zip(&second))
        .map(|(&v, (&m, &s))| CoordinatePosterior {
            y: v,
            tau: mean_tau,
            mean: m,
            variance: (s - m * m).max(f64::MIN_POSITIVE),
            cumulant4: None,
            quantiles: None,
        })
        .collect();
    Ok(HbFit { posterior, coordinates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_scalar, QuadOptions};

    #[test]
    fn priors_integrate_to_one() {
        let opts = QuadOptions { rel_tol: 1e-13, ..Default::default() };
        for fam in [PriorFamily::TruncatedCauchy, PriorFamily::Uniform, PriorFamily::Reciprocal] {
            let p = TauPrior::new(fam, 400).unwrap();
            let r = integrate_scalar(|t| p.log_density(t).exp(), &[p.lower, 0.01, 0.1, p.upper], &opts);
            assert!((r.value[0] - 1.0).abs() < 1e-8, "{fam}: {}", r.value[0]);
        }
        let hc = TauPrior::new(PriorFamily::HalfCauchy, 10).unwrap();
        // compactified: τ = tan u
        let r = integrate_scalar(
            |u: f64| hc.log_density(u.tan()).exp() / u.cos().powi(2),
            &[0.0, FRAC_PI_2 * (1.0 - 1e-15)],
            &opts,
        );
        assert!((r.value[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn log_density_outside_support() {
        let p = TauPrior::new(PriorFamily::Uniform, 100).unwrap();
        assert_eq!(p.log_density(0.001), f64::NEG_INFINITY);
        assert_eq!(p.log_density(1.5), f64::NEG_INFINITY);
        assert_eq!(log_tau_posterior_unnorm(2.0, &[1.0], &p).unwrap(), f64::NEG_INFINITY);
        let c = TauPrior::new(PriorFamily::TruncatedCauchy, 100).unwrap();
        let ratio = (c.log_density(0.2) - c.log_density(0.7)).exp();
        assert!((ratio - (1.0 + 0.49) / (1.0 + 0.04)).abs() < 1e-14);
    }

    #[test]
    fn support_validation() {
        assert!(TauPrior::with_support(PriorFamily::Uniform, 0.5, 0.5).is_err());
        assert!(TauPrior::with_support(PriorFamily::Uniform, 0.0, 0.5).is_err());
        assert!(TauPrior::with_support(PriorFamily::HalfCauchy, 0.1, 1.0).is_err());
        assert_eq!("reciprocal".parse::<PriorFamily>().unwrap(), PriorFamily::Reciprocal);
        assert!("cauchy".parse::<PriorFamily>().is_err());
        assert!(TauPrior::new(PriorFamily::Uniform, 1).is_err());
        let p = TauPrior::new(PriorFamily::Uniform, 10).unwrap();
        assert!(tau_posterior(&[1.0; 10], &p, 49).is_err());
    }

    #[test]
    fn weights_normalized_and_tail_mass_limits() {
        let y: Vec<f64> = (0..50).map(|i| if i < 5 { 6.0 } else { 0.1 * (i as f64).sin() }).collect();
        for fam in PriorFamily::ALL {
            let prior = TauPrior::new(fam, y.len()).unwrap();
            let post = tau_posterior(&y, &prior, 200).unwrap();
            let total: f64 = post.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-10, "{fam}");
            assert!(post.grid.windows(2).all(|w| w[1] > w[0]));
            assert!((post.tail_mass(post.grid[0] * 0.5) - 1.0).abs() < 1e-10);
            assert_eq!(post.tail_mass(*post.grid.last().unwrap()), 0.0);
        }
    }

    #[test]
    fn degenerate_prior_matches_plug_in() {
        let y = [0.0, 0.5, -2.0, 4.0, 7.0];
        let tau0 = 0.2;
        let prior = TauPrior::with_support(PriorFamily::Uniform, tau0 * (1.0 - 1e-7), tau0 * (1.0 + 1e-7)).unwrap();
        let hb = hb_fit(&y, &prior, 60).unwrap();
        let eb = crate::estimators::eb_fit(&y, tau0).unwrap();
        for (h, e) in hb.iter().zip(&eb) {
            assert!((h.mean - e.mean).abs() < 1e-4);
            assert!((h.variance - e.variance).abs() < 1e-4);
        }
        assert_eq!(hb[0].mean, 0.0);
    }
}
