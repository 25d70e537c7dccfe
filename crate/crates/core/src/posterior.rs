//! Per-coordinate posterior summaries, the score `m_τ`, the log marginal
//! likelihood and the null expectation of the score.

use std::sync::OnceLock;

use crate::error::{check_finite, check_observations, check_tau, invalid, Error, Result};
use crate::quadrature::{find_root, integrate_scalar};
use crate::special::{
    kernel_quadrature, kernel_sums, normal_cdf, normal_sf, IntegralSettings, KernelSums, KernelTable,
};

/// Posterior summary of one coordinate `θ_i` given `Y_i = y` and `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinatePosterior {
    pub y: f64,
    /// `τ` for plug-in fits; the posterior mean of `τ` for hierarchical fits.
    pub tau: f64,
    pub mean: f64,
    pub variance: f64,
    pub cumulant4: Option<f64>,
    /// `(probability, quantile)` pairs, when requested.
    pub quantiles: Option<Vec<(f64, f64)>>,
}

impl CoordinatePosterior {
    pub fn from_sums(y: f64, tau: f64, sums: &KernelSums, with_cumulant4: bool) -> Self {
        Self {
            y,
            tau,
            mean: sums.posterior_mean(y),
            variance: sums.posterior_variance(y),
            cumulant4: with_cumulant4.then(|| sums.cumulant4(y)),
            quantiles: None,
        }
    }
}

fn checked_sums(y: f64, tau: f64, settings: &IntegralSettings) -> Result<KernelSums> {
    let sums = kernel_sums(y, tau, settings)?;
    if !sums.converged {
        return Err(Error::Accuracy { what: "posterior integrals", rel_error: sums.rel_err });
    }
    Ok(sums)
}

/// `E(θ | Y = y, τ) = y I_{1/2}(y) / I_{−1/2}(y)`.
pub fn posterior_mean(y: f64, tau: f64) -> Result<f64> {
    Ok(checked_sums(y, tau, &IntegralSettings::default())?.posterior_mean(y))
}

/// `var(θ | Y = y, τ)`.
pub fn posterior_variance(y: f64, tau: f64) -> Result<f64> {
    Ok(checked_sums(y, tau, &IntegralSettings::default())?.posterior_variance(y))
}

/// Fourth posterior cumulant of `θ`.
pub fn posterior_cumulant4(y: f64, tau: f64) -> Result<f64> {
    Ok(checked_sums(y, tau, &IntegralSettings::default())?.cumulant4(y))
}

/// `m_τ(y) = y² (I_{1/2} − I_{3/2}) / I_{−1/2} − I_{1/2} / I_{−1/2}`.
pub fn m_tau(y: f64, tau: f64) -> Result<f64> {
    Ok(checked_sums(y, tau, &IntegralSettings::default())?.m_tau(y))
}

/// Mean, variance and optionally the fourth cumulant in one pass.
pub fn coordinate_posterior(
    y: f64,
    tau: f64,
    with_cumulant4: bool,
    settings: &IntegralSettings,
) -> Result<CoordinatePosterior> {
    let sums = checked_sums(y, tau, settings)?;
    Ok(CoordinatePosterior::from_sums(y, tau, &sums, with_cumulant4))
}

fn max_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `M_τ(Y) = Σ log ψ_τ(y_i)`.
pub fn log_marginal_likelihood(y: &[f64], tau: f64) -> Result<f64> {
    log_marginal_likelihood_with(y, tau, &IntegralSettings::default())
}

pub fn log_marginal_likelihood_with(y: &[f64], tau: f64, settings: &IntegralSettings) -> Result<f64> {
    check_observations(y)?;
    let table = KernelTable::new(tau, max_abs(y), *settings)?;
    Ok(y.iter().map(|&v| table.log_marginal_density(v)).sum())
}

/// `dM_τ(Y)/dτ = (1/τ) Σ m_τ(y_i)`.
pub fn score(y: &[f64], tau: f64) -> Result<f64> {
    Ok(likelihood_and_score(y, tau, &IntegralSettings::default())?.1)
}

/// `(M_τ(Y), dM_τ(Y)/dτ)` sharing one moment table.
pub fn likelihood_and_score(y: &[f64], tau: f64, settings: &IntegralSettings) -> Result<(f64, f64)> {
    check_observations(y)?;
    let table = KernelTable::new(tau, max_abs(y), *settings)?;
    let base = (tau / std::f64::consts::PI).ln() - crate::special::LN_SQRT_2PI;
    let mut loglik = 0.0;
    let mut msum = 0.0;
    for &v in y {
        let s = table.sums(v);
        loglik += base + s.log_s0();
        msum += s.m_tau(v);
    }
    Ok((loglik, msum / tau))
}

/// Numerical estimate of `C_u = sup_{y,τ} m_τ(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MTauBounds {
    /// `max(1, max over the grid)`: `m_τ(y) → 1` as `y → ∞` for every `τ`.
    pub c_u_estimate: f64,
    /// Largest value actually observed on the grid.
    pub grid_max: f64,
    pub argmax_y: f64,
    pub argmax_tau: f64,
    pub grid_spec: String,
}

impl MTauBounds {
    /// Scans `y ∈ [0, 50 ζ_τ]` (201 points; `[0, 50]` when `τ = 1`) for
    /// `τ = 2^{−j}`, `j = 0..=30`.
    pub fn compute(settings: &IntegralSettings) -> Result<Self> {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for j in 0..=30 {
            let tau = 0.5f64.powi(j);
            let top = if j == 0 { 50.0 } else { 50.0 * (-2.0 * tau.ln()).sqrt() };
            let table = KernelTable::new(tau, top, *settings)?;
            for i in 0..=200 {
                let y = top * i as f64 / 200.0;
                let m = table.sums(y).m_tau(y);
                if m > best.0 {
                    best = (m, y, tau);
                }
            }
        }
        Ok(Self {
            c_u_estimate: best.0.max(1.0),
            grid_max: best.0,
            argmax_y: best.1,
            argmax_tau: best.2,
            grid_spec: "tau = 2^-j for j = 0..30; y in 201 equispaced points on [0, 50*zeta_tau] ([0, 50] at tau = 1)"
                .to_string(),
        })
    }
}

/// The cached [`MTauBounds`] at default accuracy.
pub fn m_tau_bounds() -> &'static MTauBounds {
    static CACHE: OnceLock<MTauBounds> = OnceLock::new();
    CACHE.get_or_init(|| {
        MTauBounds::compute(&IntegralSettings::default()).expect("C_u grid uses valid arguments")
    })
}

pub fn c_u_estimate() -> f64 {
    m_tau_bounds().c_u_estimate
}

/// `E₀ m_τ(Y)` for `Y ~ N(0, 1)`.
pub fn expected_m_tau_null(tau: f64) -> Result<f64> {
    expected_m_tau_null_with(tau, &IntegralSettings::default())
}

pub fn expected_m_tau_null_with(tau: f64, settings: &IntegralSettings) -> Result<f64> {
    const CUTOFF: f64 = 40.0;
    check_tau(tau)?;
    if tau >= 1.0 {
        return Err(invalid(format!("expected_m_tau_null needs 0 < tau < 1, got {tau}")));
    }
    let table = KernelTable::new(tau, CUTOFF, *settings)?;
    let zeta = (-2.0 * tau.ln()).sqrt();
    let mut pts = vec![0.0, 1.0];
    pts.push(zeta);
    if let Ok(k) = crate::special::kappa(tau) {
        pts.push(k);
    }
    pts.push(zeta + 4.0);
    pts.push(10.0);
    pts.retain(|&p| p < CUTOFF);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.push(CUTOFF);
    let inv_sqrt_2pi = (-crate::special::LN_SQRT_2PI).exp();
    let res = integrate_scalar(
        |y| table.sums(y).m_tau(y) * inv_sqrt_2pi * (-0.5 * y * y).exp(),
        &pts,
        &settings.quad(),
    );
    if !res.converged {
        return Err(Error::Accuracy { what: "expected_m_tau_null", rel_error: res.max_rel_err() });
    }
    // beyond the cutoff m_τ ≤ C_u; the tail mass underflows to zero anyway
    let tail = 2.0 * normal_sf(CUTOFF);
    let tail_bound = if tail > 0.0 { tail * c_u_estimate() } else { 0.0 };
    Ok(2.0 * res.value[0] + tail_bound)
}

/// Posterior CDF of `θ` at `t`, mixed over `(τ_j, w_j)` components.
///
/// Given the shrinkage weight `z`, `θ ~ N(z y, z)`, so the CDF is the
/// posterior expectation of `Φ((t − z y)/√z)`.
fn mixture_cdf(
    y: f64,
    t: f64,
    components: &[(f64, f64, f64)],
    settings: &IntegralSettings,
) -> Result<f64> {
    let mut total = 0.0;
    for &(tau, weight, log_norm) in components {
        let (v, err, ok) = kernel_quadrature(y, tau, settings, |z, _| [normal_cdf((t - z * y) / z.sqrt())]);
        // the series value of the normalizer is the reference; only the
        // quadrature of the CDF numerator can fail
        let norm = log_norm.exp();
        if !ok && err[0] > 1e-6 * norm {
            return Err(Error::Accuracy { what: "posterior_interval", rel_error: err[0] / norm });
        }
        total += weight * (v[0] / norm);
    }
    Ok(total.clamp(0.0, 1.0))
}

fn invert_cdf(
    y: f64,
    p: f64,
    components: &[(f64, f64, f64)],
    center: f64,
    halfwidth: f64,
    settings: &IntegralSettings,
) -> Result<f64> {
    let f = |t: f64| mixture_cdf(y, t, components, settings).map(|c| c - p);
    let mut lo = center - halfwidth;
    let mut hi = center + halfwidth;
    let mut width = halfwidth;
    for _ in 0..60 {
        if f(lo)? < 0.0 {
            break;
        }
        width *= 2.0;
        lo = center - width;
    }
    width = halfwidth;
    for _ in 0..60 {
        if f(hi)? > 0.0 {
            break;
        }
        width *= 2.0;
        hi = center + width;
    }
    let mut failure = None;
    let root = find_root(
        |t| match f(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        1e-10 * (1.0 + center.abs() + halfwidth),
        200,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    root.ok_or(Error::Accuracy { what: "posterior_interval", rel_error: f64::INFINITY })
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("level must lie in (0, 1), got {level}")))
    }
}

/// Equal-tailed credible interval for `θ` under a single `τ`.
pub fn posterior_interval(y: f64, tau: f64, level: f64) -> Result<(f64, f64)> {
    mixture_interval(y, &[(tau, 1.0)], level, &IntegralSettings::default())
}

/// Equal-tailed credible interval for `θ` when the posterior is a mixture
/// over `τ` with the given `(τ, weight)` pairs (weights summing to one).
pub fn mixture_interval(
    y: f64,
    components: &[(f64, f64)],
    level: f64,
    settings: &IntegralSettings,
) -> Result<(f64, f64)> {
    check_finite("y", y)?;
    check_level(level)?;
    if components.is_empty() {
        return Err(invalid("mixture_interval needs at least one component"));
    }
    let mut comps = Vec::with_capacity(components.len());
    let (mut mean, mut second) = (0.0, 0.0);
    for &(tau, w) in components {
        let sums = checked_sums(y, tau, settings)?;
        let (m, v) = (sums.posterior_mean(y), sums.posterior_variance(y));
        mean += w * m;
        second += w * (v + m * m);
        comps.push((tau, w, sums.log_s0()));
    }
    let sd = (second - mean * mean).max(0.0).sqrt();
    let halfwidth = 8.0 * sd + y.abs() + 1e-8;
    let alpha = 0.5 * (1.0 - level);
    let lower = invert_cdf(y, alpha, &comps, mean, halfwidth, settings)?;
    let upper = invert_cdf(y, 1.0 - alpha, &comps, mean, halfwidth, settings)?;
    Ok((lower, upper))
}
