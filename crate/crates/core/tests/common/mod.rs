//! Independent oracles for the integration tests, built straight from the
//! hierarchy `θ | λ ~ N(0, λ²τ²)`, `λ ~ C⁺(0, 1)`, with their own fixed
//! Gauss-Legendre rule (no code shared with the library's integrals).
#![allow(dead_code)]

use std::f64::consts::PI;

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let mut q0 = 1.0;
                let mut q1 = x;
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                out.push((x, 2.0 / ((1.0 - x * x) * dq * dq)));
                break;
            }
        }
    }
    out
}

/// Composite Gauss-Legendre nodes on [a, b] with panels no wider than `width`.
pub fn panel_nodes(a: f64, b: f64, width: f64, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let panels = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for j in 0..panels {
        let mid = a + (j as f64 + 0.5) * h;
        for &(x, w) in rule {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, width: f64) -> f64 {
    let rule = gauss_legendre(20);
    panel_nodes(a, b, width, &rule).iter().map(|&(x, w)| w * f(x)).sum()
}

/// Prior density `g_τ(θ)` through `u = 1/(1+λ²τ²)` followed by `t = −ln(1−u)`:
/// `g = (τ/π) ∫₀^∞ φ(θ √(eᵗ−1)) / (τ² + (1−τ²)e^{−t}) dt`.
pub fn prior_density_oracle(theta: f64, tau: f64) -> f64 {
    let t2 = theta * theta;
    let t_max = (1.0 + 1600.0 / t2).ln();
    let f = |t: f64| {
        let x2 = t2 * t.exp_m1();
        (-0.5 * x2).exp() / (2.0 * PI).sqrt() / (tau * tau + (1.0 - tau * tau) * (-t).exp())
    };
    // for large |θ| the mass sits within ~1/θ² of t = 0
    tau / PI * integrate(f, 0.0, t_max, (t_max / 80.0).min(0.5))
}

/// Precomputed `|θ|` nodes carrying `weight · g_τ(|θ|)`, for convolutions
/// `∫ h(θ) φ(y − θ) g_τ(θ) dθ` with `|y|` well below `reach − 40`.
pub struct Convolution {
    pub tau: f64,
    nodes: Vec<(f64, f64)>,
}

impl Convolution {
    pub fn new(tau: f64, reach: f64) -> Self {
        let rule = gauss_legendre(20);
        let mut nodes = Vec::new();
        // |θ| < 1 in s = ln|θ| (log pole of g at 0), linear beyond
        for (s, w) in panel_nodes(-45.0, 0.0, 0.5, &rule) {
            let r = s.exp();
            nodes.push((r, w * r * prior_density_oracle(r, tau)));
        }
        for (r, w) in panel_nodes(1.0, reach, 0.25, &rule) {
            nodes.push((r, w * prior_density_oracle(r, tau)));
        }
        Self { tau, nodes }
    }

    pub fn integral(&self, y: f64, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .map(|&(r, wg)| wg * (h(r) * phi(y - r) + h(-r) * phi(y + r)))
            .sum()
    }

    pub fn density(&self, y: f64) -> f64 {
        self.integral(y, |_| 1.0)
    }

    /// Posterior moments `E[θ^j | y]` for `j = 1..=4`.
    pub fn moments(&self, y: f64) -> [f64; 4] {
        let z = self.density(y);
        [1, 2, 3, 4].map(|j| self.integral(y, |t| t.powi(j)) / z)
    }

    /// Posterior CDF of `θ` on the node set, as (θ, F(θ)) sorted by θ.
    pub fn cdf(&self, y: f64) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .flat_map(|&(r, wg)| [(r, wg * phi(y - r)), (-r, wg * phi(y + r))])
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        pts.iter()
            .map(|&(t, w)| {
                acc += w;
                (t, acc / total)
            })
            .collect()
    }
}

/// Linear interpolation of the quantile `q` on a sorted CDF table.
pub fn invert(cdf: &[(f64, f64)], q: f64) -> f64 {
    let i = cdf.partition_point(|p| p.1 < q);
    if i == 0 {
        return cdf[0].0;
    }
    let (t0, f0) = cdf[i - 1];
    let (t1, f1) = cdf[i];
    t0 + (q - f0) / (f1 - f0) * (t1 - t0)
}

/// `∫_t^∞ φ(y − θ) g_τ(θ) dθ` for `t > 0`.
pub fn upper_tail(y: f64, tau: f64, t: f64) -> f64 {
    let f = |r: f64| phi(y - r) * prior_density_oracle(r, tau);
    let mut total = 0.0;
    if t < 1.0 {
        total += integrate(|s| f(s.exp()) * s.exp(), t.ln(), 0.0, 0.25);
    }
    let a = t.max(1.0);
    total + integrate(f, a, a.max(y.abs()) + 40.0, 0.25)
}

/// Posterior quantile of `θ`: node-set estimate polished by Newton steps on
/// the exact tail integrals.
pub fn quantile(conv: &Convolution, y: f64, q: f64) -> f64 {
    let tau = conv.tau;
    let z = conv.density(y);
    let mut t = invert(&conv.cdf(y), q);
    for _ in 0..20 {
        let cdf = if t > 0.0 { 1.0 - upper_tail(y, tau, t) / z } else { upper_tail(-y, tau, -t) / z };
        let dens = phi(y - t) * prior_density_oracle(t, tau) / z;
        let step = (cdf - q) / dens;
        t -= step;
        if step.abs() < 1e-12 * t.abs().max(1e-300) {
            break;
        }
    }
    t
}
