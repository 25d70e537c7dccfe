//! The integrals `I_k(y) = ∫₀¹ z^k e^{y²z/2} / N(z) dz`, `N(z) = τ² + (1−τ²)z`,
//! and the densities built from them.
//!
//! Everything is carried in the scaled form `e^{−y²/2} I_k(y)`, which is the
//! expectation of `c_{n+k+1/2}` under a Poisson(`y²/2`) weight on `n`, where
//! `c_m = ∫₀¹ z^{m−1/2} / N(z) dz` depends on `τ` alone. The moments obey the
//! exact recurrence `(1−τ²) c_{m+1} + τ² c_m = 1/(m+1/2)`, run forward when
//! `τ² ≤ 1/2` and backward otherwise, so it never amplifies rounding error.
//! [`KernelTable`] caches the moments for one `τ` and then every observation
//! costs a short Poisson sum.
//!
//! The adaptive quadrature route ([`kernel_sums_quadrature`]) integrates the
//! same quantities directly. It serves very large `|y|`, seeds the backward
//! recurrence, and is the independent cross-check in the tests.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{check_finite, check_tau, invalid, Error, Result};
use crate::quadrature::{integrate, integrate_scalar, QuadOptions};

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest `y²/2` handled by the moment-table series.
const SERIES_MAX_A: f64 = 5.0e4;
/// Beyond this `y²/2` the two-term Laplace expansion at `z = 1` is exact to
/// machine precision.
const ASYMPTOTIC_A: f64 = 1.0e12;

/// Number of components tracked by [`KernelSums`].
pub const N_COMPONENTS: usize = 8;

/// Accuracy settings shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralSettings {
    /// Target relative accuracy (default `1e-10`).
    pub rel_tol: f64,
    /// Maximum bisection depth of the adaptive quadrature (default 60).
    pub max_depth: u32,
    pub max_panels: usize,
}

impl Default for IntegralSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_depth: 60, max_panels: 4000 }
    }
}

impl IntegralSettings {
    /// The same settings with the tolerance divided by `factor`.
    pub fn tightened(self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol / factor, ..self }
    }

    pub(crate) fn quad(&self) -> QuadOptions {
        QuadOptions {
            rel_tol: self.rel_tol,
            abs_tol: 0.0,
            max_depth: self.max_depth,
            max_panels: self.max_panels,
        }
    }

    // Relative truncation threshold of the Poisson series.
    fn series_eps(&self) -> f64 {
        (self.rel_tol * 1e-4).max(1e-17)
    }
}

/// Half-integer index `k` of `I_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IkIndex {
    MinusHalf,
    Half,
    ThreeHalves,
    FiveHalves,
    SevenHalves,
}

impl IkIndex {
    pub const ALL: [IkIndex; 5] = [
        IkIndex::MinusHalf,
        IkIndex::Half,
        IkIndex::ThreeHalves,
        IkIndex::FiveHalves,
        IkIndex::SevenHalves,
    ];

    pub fn value(self) -> f64 {
        self.offset() as f64 - 0.5
    }

    /// Integer shift `k + 1/2`.
    pub fn offset(self) -> usize {
        match self {
            IkIndex::MinusHalf => 0,
            IkIndex::Half => 1,
            IkIndex::ThreeHalves => 2,
            IkIndex::FiveHalves => 3,
            IkIndex::SevenHalves => 4,
        }
    }

    pub fn from_value(k: f64) -> Result<Self> {
        IkIndex::ALL
            .into_iter()
            .find(|i| i.value() == k)
            .ok_or_else(|| invalid(format!("k must be one of -1/2, 1/2, 3/2, 5/2, 7/2; got {k}")))
    }
}

/// `log(e^{−y²/2} I_k(y))` with its accuracy estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIk {
    pub k: IkIndex,
    pub y: f64,
    pub tau: f64,
    pub log_value: f64,
    pub est_rel_error: f64,
    /// Set when the adaptive route stopped before reaching the tolerance.
    pub accuracy_warning: bool,
}

/// Scaled integrals of `z^{−1/2} e^{−y²(1−z)/2} / N(z)` against the weights
///
/// | index | weight |
/// |---|---|
/// | 0..=4 | `z^j` (so entry `j` is `I_{j−1/2}`) |
/// | 5 | `z (1−z)` (so `I_{1/2} − I_{3/2}`) |
/// | 6 | `1 − z` |
/// | 7 | `(1 − z)²` |
///
/// The actual scaled value of entry `i` is `exp(log_scale) * sums[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSums {
    pub log_scale: f64,
    pub sums: [f64; N_COMPONENTS],
    pub rel_err: f64,
    pub converged: bool,
}

impl KernelSums {
    /// `log(e^{−y²/2} I_{−1/2}(y))`.
    pub fn log_s0(&self) -> f64 {
        self.log_scale + self.sums[0].ln()
    }

    pub fn log_component(&self, i: usize) -> f64 {
        self.log_scale + self.sums[i].ln()
    }

    /// Posterior mean of the shrinkage weight `z` (`I_{1/2}/I_{−1/2}`).
    pub fn mean_z(&self) -> f64 {
        self.sums[1] / self.sums[0]
    }

    pub fn posterior_mean(&self, y: f64) -> f64 {
        y * self.mean_z()
    }

    /// `y² Var(z) + E z`, with `Var(z)` formed from moments of `1 − z`.
    pub fn posterior_variance(&self, y: f64) -> f64 {
        let s0 = self.sums[0];
        let m1 = self.sums[6] / s0;
        let m2 = self.sums[7] / s0;
        let var_z = (m2 - m1 * m1).max(0.0);
        y * y * var_z + self.mean_z()
    }

    /// The score summand `y²(I_{1/2} − I_{3/2})/I_{−1/2} − I_{1/2}/I_{−1/2}`.
    pub fn m_tau(&self, y: f64) -> f64 {
        y * y * (self.sums[5] / self.sums[0]) - self.mean_z()
    }

    /// Fourth posterior cumulant, `d⁴/dy⁴ log I_{−1/2}(y)`.
    pub fn cumulant4(&self, y: f64) -> f64 {
        let s0 = self.sums[0];
        let mu = |j: usize| self.sums[j] / s0;
        let (y2, y3, y4) = (y * y, y * y * y, y * y * y * y);
        let a1 = y * mu(1);
        let a2 = mu(1) + y2 * mu(2);
        let a3 = 3.0 * y * mu(2) + y3 * mu(3);
        let a4 = 3.0 * mu(2) + 6.0 * y2 * mu(3) + y4 * mu(4);
        a4 - 4.0 * a3 * a1 - 3.0 * a2 * a2 + 12.0 * a2 * a1 * a1 - 6.0 * a1.powi(4)
    }
}

/// Moments `∫₀¹ z^{m−1/2} (1−z)^j / N(z) dz` for `j = 0, 1, 2`, cached for
/// one value of `τ`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    tau: f64,
    settings: IntegralSettings,
    c: Vec<f64>,
    d: Vec<f64>,
    e: Vec<f64>,
    max_a: f64,
}

// ∫₀¹ z^{m−1/2} (1−z)^j dz = B(m + 1/2, j + 1)
fn beta_half(m: usize, j: usize) -> f64 {
    let x = m as f64 + 0.5;
    match j {
        0 => 1.0 / x,
        1 => 1.0 / (x * (x + 1.0)),
        _ => 2.0 / (x * (x + 1.0) * (x + 2.0)),
    }
}

fn table_len(a: f64) -> usize {
    (a + 14.0 * a.sqrt() + 48.0).ceil() as usize + 6
}

/// `∫₀¹ z^{m−1/2} (1−z)^j / N(z) dz` for `j = 0, 1, 2` by quadrature in
/// `v = 1 − z`.
fn moments_by_quadrature(m: usize, tau: f64, settings: &IntegralSettings) -> ([f64; 3], bool) {
    let s2 = 1.0 - tau * tau;
    let p = m as f64 - 0.5;
    let scale = 1.0 / (m as f64 + 1.0);
    let mut pts = vec![0.0];
    for c in [1.0, 4.0, 16.0, 64.0] {
        if c * scale < 1.0 {
            pts.push(c * scale);
        }
    }
    pts.push(1.0);
    let r = integrate(
        |v: f64| {
            if v >= 1.0 {
                return [0.0; 3];
            }
            let base = if p == 0.0 { 1.0 } else { (p * (-v).ln_1p()).exp() } / (1.0 - s2 * v);
            [base, base * v, base * v * v]
        },
        &pts,
        &settings.quad(),
    );
    (r.value, r.converged)
}

impl KernelTable {
    /// Builds the moment table for `τ`, sized for observations with
    /// `|y| ≤ max_abs_y`.
    pub fn new(tau: f64, max_abs_y: f64, settings: IntegralSettings) -> Result<Self> {
        check_tau(tau)?;
        check_finite("max_abs_y", max_abs_y)?;
        let max_a = (0.5 * max_abs_y * max_abs_y).min(SERIES_MAX_A);
        let len = table_len(max_a);
        let t2 = tau * tau;
        let s2 = 1.0 - t2;
        let mut c = vec![0.0; len];
        let mut d = vec![0.0; len];
        let mut e = vec![0.0; len];

        if t2 <= 0.5 {
            // Forward: the error factor per step is τ²/(1−τ²) ≤ 1.
            let s = s2.sqrt();
            let c0 = 2.0 * (s / tau).atan() / (tau * s);
            let c1 = (2.0 - t2 * c0) / s2;
            let c2 = (beta_half(1, 0) - t2 * c1) / s2;
            c[0] = c0;
            d[0] = c0 - c1;
            e[0] = d[0] - (c1 - c2);
            for m in 0..len - 1 {
                c[m + 1] = (beta_half(m, 0) - t2 * c[m]) / s2;
                d[m + 1] = (beta_half(m, 1) - t2 * d[m]) / s2;
                e[m + 1] = (beta_half(m, 2) - t2 * e[m]) / s2;
            }
        } else {
            // Backward from a quadrature start: the factor is |1−τ²|/τ² < 1.
            let top = len - 1;
            let (start, _) = moments_by_quadrature(top, tau, &settings);
            c[top] = start[0];
            d[top] = start[1];
            e[top] = start[2];
            for m in (0..top).rev() {
                c[m] = (beta_half(m, 0) - s2 * c[m + 1]) / t2;
                d[m] = (beta_half(m, 1) - s2 * d[m + 1]) / t2;
                e[m] = (beta_half(m, 2) - s2 * e[m + 1]) / t2;
            }
        }
        Ok(Self { tau, settings, c, d, e, max_a })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn settings(&self) -> &IntegralSettings {
        &self.settings
    }

    /// Raw moment `∫₀¹ z^{m−1/2} / N(z) dz`, if tabulated.
    pub fn moment(&self, m: usize) -> Option<f64> {
        self.c.get(m).copied()
    }

    /// All kernel sums at `y`; falls back to quadrature when `|y|` exceeds
    /// the table.
    pub fn sums(&self, y: f64) -> KernelSums {
        let a = 0.5 * y * y;
        if a <= self.max_a {
            self.series::<true>(a)
        } else if a <= SERIES_MAX_A {
            KernelTable::new(self.tau, y.abs(), self.settings)
                .map(|t| t.series::<true>(a))
                .unwrap_or_else(|_| kernel_sums_quadrature(y, self.tau, &self.settings))
        } else {
            kernel_sums_quadrature(y, self.tau, &self.settings)
        }
    }

    /// `log(e^{−y²/2} I_{−1/2}(y))` only; cheaper than [`Self::sums`].
    pub fn log_s0(&self, y: f64) -> f64 {
        let a = 0.5 * y * y;
        if a <= self.max_a {
            self.series::<false>(a).log_s0()
        } else {
            self.sums(y).log_s0()
        }
    }

    /// `log ψ_τ(y)`, the log marginal density of one observation.
    pub fn log_marginal_density(&self, y: f64) -> f64 {
        (self.tau / PI).ln() + self.log_s0(y) - LN_SQRT_2PI
    }

    fn components(&self, n: usize) -> [f64; N_COMPONENTS] {
        let c = &self.c;
        [c[n], c[n + 1], c[n + 2], c[n + 3], c[n + 4], self.d[n + 1], self.d[n], self.e[n]]
    }

    fn series<const FULL: bool>(&self, a: f64) -> KernelSums {
        let eps = self.settings.series_eps();
        let mode = a.floor() as usize;
        let log_pmf_mode = if a == 0.0 {
            0.0
        } else {
            -a + mode as f64 * a.ln() - libm::lgamma(mode as f64 + 1.0)
        };
        let ncomp = if FULL { N_COMPONENTS } else { 1 };
        let mut acc = [0.0; N_COMPONENTS];
        let mut terms = 0usize;

        let add = |acc: &mut [f64; N_COMPONENTS], w: f64, n: usize| {
            if FULL {
                let comp = self.components(n);
                for i in 0..N_COMPONENTS {
                    acc[i] += w * comp[i];
                }
            } else {
                acc[0] += w * self.c[n];
            }
        };

        // upward from the mode; weights are relative to the mode's pmf
        let limit = self.c.len() - 5;
        let mut w = 1.0;
        let mut wsum = 0.0;
        let mut n = mode;
        loop {
            add(&mut acc, w, n);
            wsum += w;
            terms += 1;
            let ratio = a / (n as f64 + 1.0);
            w *= ratio;
            n += 1;
            let next_ratio = a / (n as f64 + 1.0);
            if next_ratio < 1.0 && w / (1.0 - next_ratio) < eps * wsum {
                break;
            }
            if n >= limit || w == 0.0 {
                break;
            }
        }

        // downward; remaining mass below n is at most n·w_n
        let maxima = [self.c[0], self.c[1], self.c[2], self.c[3], self.c[4], self.d[1], self.d[0], self.e[0]];
        let mut w = 1.0;
        let mut n = mode;
        while n > 0 {
            w *= n as f64 / a;
            n -= 1;
            add(&mut acc, w, n);
            terms += 1;
            let rest = w * n as f64;
            if (0..ncomp).all(|i| rest * maxima[i] < eps * acc[i]) {
                break;
            }
        }

        KernelSums {
            log_scale: log_pmf_mode,
            sums: acc,
            rel_err: eps + (terms as f64).sqrt() * 4.0 * f64::EPSILON,
            converged: true,
        }
    }
}

/// Kernel sums for one `(y, τ)`, choosing the cheapest accurate route.
pub fn kernel_sums(y: f64, tau: f64, settings: &IntegralSettings) -> Result<KernelSums> {
    check_finite("y", y)?;
    check_tau(tau)?;
    let a = 0.5 * y * y;
    if a <= SERIES_MAX_A {
        Ok(KernelTable::new(tau, y.abs(), *settings)?.series::<true>(a))
    } else {
        Ok(kernel_sums_quadrature(y, tau, settings))
    }
}

/// Generic adaptive quadrature of `∫₀¹ z^{−1/2} e^{−y²(1−z)/2} h(z, 1−z) / N(z) dz`.
///
/// The interval is split at `z = 1/2`. Below it the variable is `u = ln z`,
/// which turns the endpoint singularity and the `τ²`-wide spike of `1/N(z)`
/// into a smooth bump; above it the variable is `v = 1 − z`, so the boundary
/// layer of width `2/y²` at `z = 1` is resolved without cancellation.
/// The omitted piece `[0, z_lo]` is bounded and folded into the error.
pub fn kernel_quadrature<const N: usize, H>(
    y: f64,
    tau: f64,
    settings: &IntegralSettings,
    h: H,
) -> ([f64; N], [f64; N], bool)
where
    H: Fn(f64, f64) -> [f64; N],
{
    let a = 0.5 * y * y;
    let t2 = tau * tau;
    let s2 = 1.0 - t2;
    let z_peak = if s2 > 0.0 { (t2 / s2).min(1.0) } else { 1.0 };
    let z_lo = 1e-28 * z_peak;
    let (u_lo, u_hi) = (z_lo.ln(), 0.5f64.ln());

    let mut pts_u = vec![u_lo];
    let u_peak = z_peak.ln();
    for off in [-24.0, -8.0, -2.0, 0.0, 2.0, 8.0] {
        let u = u_peak + off;
        if u > u_lo && u < u_hi {
            pts_u.push(u);
        }
    }
    pts_u.push(u_hi);

    let opts = settings.quad();
    let lower = integrate(
        |u: f64| {
            let z = u.exp();
            let omz = -u.exp_m1();
            let f = z.sqrt() * (-a * omz).exp() / (t2 + s2 * z);
            let hv = h(z, omz);
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = f * hv[i];
            }
            out
        },
        &pts_u,
        &opts,
    );

    let mut pts_v = vec![0.0];
    if a > 0.0 {
        for c in [1.0, 6.0, 30.0] {
            let v = c / a;
            if v < 0.5 {
                pts_v.push(v);
            }
        }
    }
    pts_v.push(0.5);
    let upper = integrate(
        |v: f64| {
            let z = 1.0 - v;
            let f = (-a * v).exp() / (z.sqrt() * (1.0 - s2 * v));
            let hv = h(z, v);
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = f * hv[i];
            }
            out
        },
        &pts_v,
        &opts,
    );

    // crude bound for the dropped [0, z_lo] piece
    let h0 = h(z_lo, 1.0);
    let tail_scale = 2.0 * z_lo.sqrt() * (-a).exp() / t2.min(1.0);

    let mut value = [0.0; N];
    let mut err = [0.0; N];
    for i in 0..N {
        value[i] = lower.value[i] + upper.value[i];
        err[i] = lower.abs_err[i] + upper.abs_err[i] + tail_scale * h0[i].abs();
    }
    (value, err, lower.converged && upper.converged)
}

/// The eight [`KernelSums`] components computed by adaptive quadrature.
pub fn kernel_sums_quadrature(y: f64, tau: f64, settings: &IntegralSettings) -> KernelSums {
    let a = 0.5 * y * y;
    if a > ASYMPTOTIC_A {
        return asymptotic_sums(a, tau);
    }
    let (value, err, converged) = kernel_quadrature(y, tau, settings, |z, omz| {
        let z2 = z * z;
        [1.0, z, z2, z2 * z, z2 * z2, z * omz, omz, omz * omz]
    });
    let rel_err = value
        .iter()
        .zip(&err)
        .map(|(v, e)| if *v > 0.0 { e / v } else { f64::INFINITY })
        .fold(0.0, f64::max);
    KernelSums { log_scale: 0.0, sums: value, rel_err, converged: converged && rel_err <= settings.rel_tol }
}

// Laplace expansion at z = 1 for enormous |y|; relative error O(a^{-2}).
fn asymptotic_sums(a: f64, tau: f64) -> KernelSums {
    let s2 = 1.0 - tau * tau;
    let mut sums = [0.0; N_COMPONENTS];
    for (j, slot) in sums.iter_mut().take(5).enumerate() {
        let slope = s2 - (j as f64 - 0.5);
        *slot = 1.0 + slope / a;
    }
    sums[5] = (1.0 + 2.0 * (s2 - 0.5) / a) / a;
    sums[6] = (1.0 + 2.0 * (s2 + 0.5) / a) / a;
    sums[7] = 2.0 / (a * a);
    KernelSums { log_scale: -a.ln(), sums, rel_err: 4.0 / (a * a), converged: true }
}

/// `log(e^{−y²/2} I_k(y))`.
pub fn scaled_ik(y: f64, tau: f64, k: IkIndex) -> Result<ScaledIk> {
    scaled_ik_with(y, tau, k, &IntegralSettings::default())
}

pub fn scaled_ik_with(y: f64, tau: f64, k: IkIndex, settings: &IntegralSettings) -> Result<ScaledIk> {
    let sums = kernel_sums(y, tau, settings)?;
    Ok(ScaledIk {
        k,
        y,
        tau,
        log_value: sums.log_component(k.offset()),
        est_rel_error: sums.rel_err,
        accuracy_warning: !sums.converged,
    })
}

/// `log ψ_τ(y) = log(τ/π) + log I_{−1/2}(y) + log φ(y)`.
pub fn log_marginal_density(y: f64, tau: f64) -> Result<f64> {
    let sums = kernel_sums(y, tau, &IntegralSettings::default())?;
    if !sums.converged {
        return Err(Error::Accuracy { what: "log_marginal_density", rel_error: sums.rel_err });
    }
    Ok((tau / PI).ln() + sums.log_s0() - LN_SQRT_2PI)
}

/// Marginal prior density `g_τ(θ)` of one coordinate under the horseshoe.
///
/// With `λ = cot w` the half-line becomes `(0, π/2)` and
/// `g_τ(θ) = 2/(π|θ|) ∫ r φ(r) dw`, `r = |θ| tan(w) / τ`.
pub fn prior_density(theta: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    check_finite("theta", theta)?;
    if theta == 0.0 {
        return Err(Error::PoleAtZero);
    }
    let ratio = theta.abs() / tau;
    // g = (2/πτ) ∫ φ(r) r / (r² + ratio²) dr, integrated in s = ln r
    let knee = ratio.ln();
    let lo = knee.min(0.0) - 40.0;
    let hi = 40f64.ln();
    let mut pts = vec![lo];
    for c in [knee - 3.0, knee, knee + 3.0, -3.0, 0.0, 4f64.ln()] {
        if c > lo && c < hi {
            pts.push(c);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.push(hi);
    let opts = QuadOptions { rel_tol: 1e-12, ..Default::default() };
    let res = integrate_scalar(
        |s| {
            let r2 = (2.0 * s).exp();
            (-0.5 * r2 - LN_SQRT_2PI).exp() * r2 / (r2 + ratio * ratio)
        },
        &pts,
        &opts,
    );
    if !res.converged {
        return Err(Error::Accuracy { what: "prior_density", rel_error: res.max_rel_err() });
    }
    Ok(2.0 / (PI * tau) * res.value[0])
}

/// `∫₁^y u^k e^u du` for `y ≥ 1`.
pub fn incomplete_exp_integral(y: f64, k: f64) -> Result<f64> {
    check_finite("k", k)?;
    if y.is_nan() || y < 1.0 || y.is_infinite() {
        return Err(invalid(format!("incomplete_exp_integral needs finite y >= 1, got {y}")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    // e^y ∫₀^{y−1} (y−t)^k e^{−t} dt
    let len = y - 1.0;
    let mut pts = vec![0.0];
    for c in [1.0, 8.0, 40.0] {
        if c < len {
            pts.push(c);
        }
    }
    pts.push(len);
    let opts = QuadOptions { rel_tol: 1e-13, ..Default::default() };
    let res = integrate_scalar(|t| (k * (y - t).ln() - t).exp(), &pts, &opts);
    if !res.converged {
        return Err(Error::Accuracy { what: "incomplete_exp_integral", rel_error: res.max_rel_err() });
    }
    Ok(res.value[0] * y.exp())
}

/// `ζ_τ = sqrt(2 log(1/τ))`, defined for `0 < τ < 1`.
pub fn zeta(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if tau >= 1.0 {
        return Err(Error::Domain { what: "zeta", detail: format!("needs tau < 1, got {tau}") });
    }
    Ok((-2.0 * tau.ln()).sqrt())
}

/// `κ_τ`, the root above `√2` of `e^{κ²/2} = κ²/(2τ)`; needs `τ < 1/e`.
pub fn kappa(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let l = -tau.ln();
    if l <= 1.0 {
        return Err(Error::Domain { what: "kappa", detail: format!("needs tau < 1/e, got {tau}") });
    }
    // Solve x − ln x = L for x = κ²/2 > 1, Newton in t = ln x.
    let zeta = (2.0 * l).sqrt();
    let k0 = zeta + 2.0 * zeta.ln() / zeta;
    let (mut lo, mut hi) = (0.0_f64, (l + (2.0 * l).ln() + 1.0).ln());
    let mut t = (0.5 * k0 * k0).ln();
    if !(t > lo && t < hi) {
        t = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let x = t.exp();
        let f = x - t - l;
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if f.abs() <= 1e-15 * l {
            break;
        }
        let step = f / (x - 1.0);
        let next = t - step;
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Ok((2.0 * t.exp()).sqrt())
}

/// `τ_n(p) = (p/n) sqrt(log(n/p))`.
pub fn tau_n(p: usize, n: usize) -> Result<f64> {
    if p == 0 || p > n {
        return Err(invalid(format!("tau_n needs 0 < p <= n, got p={p}, n={n}")));
    }
    let r = p as f64 / n as f64;
    Ok(r * (-r.ln()).sqrt())
}

/// `t_n = C_u π^{3/2} τ_n(p)`.
pub fn t_n(p: usize, n: usize, c_u: f64) -> Result<f64> {
    Ok(c_u * PI.powf(1.5) * tau_n(p, n)?)
}

/// `τ` together with its derived threshold scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageScales {
    pub tau: f64,
    pub zeta: f64,
    /// Only defined for `τ < 1/e`.
    pub kappa: Option<f64>,
}

impl ShrinkageScales {
    pub fn new(tau: f64) -> Result<Self> {
        let zeta = zeta(tau)?;
        Ok(Self { tau, zeta, kappa: kappa(tau).ok() })
    }
}

/// Standard normal upper tail `P(Z > x)`.
pub(crate) fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}
