//! Acceptance criteria 1-10. Runs as a plain binary (no libtest harness) so
//! that every criterion prints one verdict line; exits non-zero if any fails.
//!
//! Calibrated bands used below:
//! - criterion 3: 5% at y = 0, 15% at κ_τ and ζ_τ (convergence there is O(1/ζ_τ));
//! - criterion 4: ratio to the asymptote in [0.8, 1.2] for τ ≤ 1e-5;
//! - criterion 2: m_τ monotonicity allows 1e-12 absolute slack, because for
//!   τ ≤ 1e-6 and large y the true increments are below double resolution.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use horseshoe::quadrature::{integrate_scalar, QuadOptions};
use horseshoe::simulation::{cell_rng, fit_method, generate_truth, Sample};
use horseshoe::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("score-likelihood consistency", criterion_1),
        ("posterior bound suite", criterion_2),
        ("asymptotic anchors of m_tau", criterion_3),
        ("null expectation curve of m_tau", criterion_4),
        ("density normalizations", criterion_5),
        ("estimator comparison, desk scale", criterion_6),
        ("MSE comparison, desk scale", criterion_7),
        ("MMLE concentration proxy", criterion_8),
        ("tau-posterior concentration proxy", criterion_9),
        ("quadrature self-consistency", criterion_10),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !only.is_empty() && !only.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| verdict(false, format!("panicked: {}", panic_message(&e))));
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {number:>2} [{}] {name}: {} ({secs:.1} s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n = 50;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let tau = (rng.random::<f64>() * (1.0 / n as f64).ln()).exp();
        let p = rng.random_range(0..=15);
        let a = 8.0 * rng.random::<f64>();
        let null = if rng.random::<bool>() { NullLaw::Zero } else { NullLaw::Gaussian { sd: 0.5 } };
        let Sample { y, .. } = generate_truth(n, p, a, SignalLaw::Gaussian, null, &mut rng);
        let s = score(&y, tau).unwrap();
        let h = 1e-4 * tau;
        let fd = (log_marginal_likelihood(&y, tau + h).unwrap() - log_marginal_likelihood(&y, tau - h).unwrap())
            / (2.0 * h);
        worst = worst.max((s - fd).abs() / s.abs());
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-6 && within(elapsed, 10.0),
        format!("max relative deviation {worst:.2e} (limit 1e-6) over 100 draws"),
    )
}

fn criterion_2() -> Verdict {
    let c_u = c_u_estimate();
    let taus = [1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 0.99];
    let mut violations = Vec::new();
    let mut checks = 0;
    for &tau in &taus {
        let mut prev_m = f64::NEG_INFINITY;
        for i in 0..=80 {
            let y = 0.25 * i as f64;
            let cp = coordinate_posterior(y, tau, false, &IntegralSettings::default()).unwrap();
            let m = m_tau(y, tau).unwrap();
            if y != 0.0 {
                let r = cp.mean / y;
                if !(0.0..=1.0).contains(&r) {
                    violations.push(format!("mean/y={r} at y={y} tau={tau}"));
                }
            }
            if !(cp.variance > 0.0 && cp.variance <= 1.0 + y * y) {
                violations.push(format!("variance={} at y={y} tau={tau}", cp.variance));
            }
            if !(-1.0..=c_u).contains(&m) {
                violations.push(format!("m={m} at y={y} tau={tau}"));
            }
            if m < prev_m - 1e-12 {
                violations.push(format!("m decreases {prev_m} -> {m} at y={y} tau={tau}"));
            }
            prev_m = m;
            checks += 4;
        }
    }
    verdict(
        violations.is_empty(),
        format!("{} violations in {checks} checks (C_u estimate {c_u}); {}", violations.len(), violations.join("; ")),
    )
}

fn criterion_3() -> Verdict {
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    let e0 = rel(m_tau(0.0, 1e-4).unwrap(), -2e-4 / PI);
    let tau = 1e-8;
    let k = kappa(tau).unwrap();
    let z = zeta(tau).unwrap();
    let ek = rel(m_tau(k, tau).unwrap(), 1.0 / (PI + 1.0));
    let ez = rel(m_tau(z, tau).unwrap(), 2.0 / (PI * z * z));
    verdict(
        e0 <= 0.05 && ek <= 0.15 && ez <= 0.15,
        format!("rel. errors: y=0 {e0:.4} (<=0.05), y=kappa {ek:.4} (<=0.15), y=zeta {ez:.4} (<=0.15)"),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let taus = ExperimentConfig::figure4().tau_grid.values();
    let curve = run_mtau_curve(&taus, &IntegralSettings::default()).unwrap();
    let elapsed = start.elapsed();
    let all_negative = curve.iter().all(|p| p.e0_mtau < 0.0);
    let ratios: Vec<f64> = curve.iter().filter(|p| p.tau <= 1e-5).map(|p| p.e0_mtau / p.asymptote).collect();
    let in_band = ratios.iter().all(|r| (0.8..=1.2).contains(r));
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    verdict(
        all_negative && in_band && !ratios.is_empty() && within(elapsed, 60.0),
        format!(
            "{} points, all negative: {all_negative}; ratio to asymptote for tau<=1e-5 in [{lo:.4}, {hi:.4}] ({} points)",
            curve.len(),
            ratios.len()
        ),
    )
}

// Geometric breakpoints 10^k between lo and hi (both > 0).
fn geometric_points(lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut x = 10f64.powf(lo.log10().floor() + 1.0);
    while x < hi {
        pts.push(x);
        x *= 10.0;
    }
    pts.push(hi);
    pts
}

fn criterion_5() -> Verdict {
    let opts = QuadOptions { rel_tol: 1e-10, max_panels: 20_000, ..Default::default() };
    let big = 1e6;
    let c_tail = 4.0 / (PI * (2.0 * PI).sqrt());
    let mut details = Vec::new();
    let mut pass = true;
    for &tau in &[0.01, 0.1, 1.0] {
        // both densities decay like 2τ/(π√(2π) x²); the two tails beyond `big` carry 4τ/(π√(2π) big)
        let mut pts = vec![0.0];
        pts.extend(geometric_points(0.5, big));
        let psi = integrate_scalar(|y| log_marginal_density(y, tau).unwrap().exp(), &pts, &opts);
        let psi_total = 2.0 * psi.value[0] + c_tail * tau / big;

        let mut pts = vec![0.0];
        pts.extend(geometric_points(1e-14, big));
        let g = integrate_scalar(|t| if t == 0.0 { 0.0 } else { prior_density(t, tau).unwrap() }, &pts, &opts);
        let g_total = 2.0 * g.value[0] + c_tail * tau / big;

        let (ep, eg) = ((psi_total - 1.0).abs(), (g_total - 1.0).abs());
        pass &= ep <= 1e-6 && eg <= 1e-5 && psi.converged && g.converged;
        details.push(format!("tau={tau}: |int psi - 1|={ep:.1e}, |int g - 1|={eg:.1e}"));
    }
    verdict(pass, details.join("; "))
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let config = ExperimentConfig::figure2();
    let result = run_estimator_comparison(&config).unwrap();
    let elapsed = start.elapsed();
    let k_s = config.methods.iter().position(|&m| m == Method::EbSimple).unwrap();
    let k_m = config.methods.iter().position(|&m| m == Method::EbMmle).unwrap();

    let mut problems = Vec::new();
    let mut min_z = f64::INFINITY;
    for (c, &(p, a)) in simulation::cells(&config).iter().enumerate() {
        let reps = &result.replicates[c * config.replications..(c + 1) * config.replications];
        let diffs: Vec<f64> = reps.iter().map(|r| r.methods[k_m].tau - r.methods[k_s].tau).collect();
        let (d, se) = mean_se(&diffs);
        let z = if se > 0.0 { d / se } else if d > 0.0 { f64::INFINITY } else { 0.0 };
        min_z = min_z.min(z);
        if d < 0.0 {
            problems.push(format!("mean MMLE below simple estimator at p={p}, A={a}"));
        } else if z < 3.0 {
            problems.push(format!("separation only {z:.2} SE at p={p}, A={a}"));
        }
    }
    let mut rhos = Vec::new();
    for &a in &config.a_values {
        for method in [Method::EbSimple, Method::EbMmle] {
            let ps: Vec<f64> = config.p_values.iter().map(|&p| p as f64).collect();
            let means: Vec<f64> =
                config.p_values.iter().map(|&p| result.row(method, p, a).unwrap().mean_tau).collect();
            let rho = spearman(&ps, &means);
            if rho < 0.99 {
                problems.push(format!("{method} at A={a}: Spearman {rho:.3}"));
            }
            rhos.push(rho);
        }
    }
    let min_rho = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        problems.is_empty() && within(elapsed, 300.0),
        format!(
            "{} cells x {} replications; min paired separation {min_z:.1} SE; min Spearman {min_rho:.3}{}",
            result.rows.len() / 2,
            config.replications,
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn figure3_cell() -> ExperimentConfig {
    ExperimentConfig { p_values: vec![20], a_values: vec![7.0], ..ExperimentConfig::figure3() }
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let config = figure3_cell();
    let result = run_mse_experiment(&config).unwrap();
    let elapsed = start.elapsed();
    let mse = |m: Method| result.row(m, 20, 7.0).unwrap();
    let all_below = Method::ALL.iter().all(|&m| mse(m).mse_overall < 40.0);
    let (a, b) = (mse(Method::EbMmle).mse_overall, mse(Method::HbTruncatedCauchy).mse_overall);
    let close = (a - b).abs() / a.min(b) <= 0.15;
    let listing: Vec<String> = Method::ALL
        .iter()
        .map(|&m| {
            let r = mse(m);
            format!("{m} {:.2}±{:.2} (nonzero {:.2}, zero {:.2})", r.mse_overall, r.se_overall, r.mse_nonzero, r.mse_zero)
        })
        .collect();
    verdict(
        all_below && close && within(elapsed, 600.0),
        format!(
            "overall MSE (limit 40): {}; eb_mmle vs hb_truncated_cauchy differ by {:.1}% (limit 15%)",
            listing.join(", "),
            100.0 * (a - b).abs() / a.min(b)
        ),
    )
}

fn criterion_8() -> Verdict {
    let config = figure3_cell();
    let n = config.n;
    let upper = 10.0 * tau_n(20, n).unwrap();
    let reps = 200;
    let mut inside = 0;
    let mut taus = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = cell_rng(config.seed, 0, rep);
        let s = generate_truth(n, 20, 7.0, config.signal_law, config.null_law, &mut rng);
        let t = mmle(&s.y, &MmleOptions::default()).unwrap().tau_hat;
        if t >= 1.0 / n as f64 && t <= upper {
            inside += 1;
        }
        taus.push(t);
    }
    let frac = inside as f64 / reps as f64;
    let (m, _) = mean_se(&taus);
    verdict(
        frac >= 0.95,
        format!(
            "{inside}/{reps} = {:.1}% of MMLEs in [1/n, {upper:.4}] (need >= 95%); mean MMLE {m:.4}",
            100.0 * frac
        ),
    )
}

fn criterion_9() -> Verdict {
    let config = figure3_cell();
    let n = config.n;
    let c_u = c_u_estimate();
    let tn = t_n(20, n, c_u).unwrap();
    let threshold = (n as f64).ln() * tn;
    let prior = TauPrior::new(PriorFamily::TruncatedCauchy, n).unwrap();
    let reps = 50;
    let mut ok = 0;
    let (mut worst, mut worst5, mut worst_10tau) = (0.0f64, 0.0f64, 0.0f64);
    let ten_tau_n = 10.0 * tau_n(20, n).unwrap();
    for rep in 0..reps {
        let mut rng = cell_rng(config.seed, 0, rep);
        let s = generate_truth(n, 20, 7.0, config.signal_law, config.null_law, &mut rng);
        let post = tau_posterior(&s.y, &prior, 400).unwrap();
        let mass = tau_tail_mass(&post, threshold).unwrap();
        worst = worst.max(mass);
        worst5 = worst5.max(post.tail_mass(5.0 * tn));
        worst_10tau = worst_10tau.max(post.tail_mass(ten_tau_n));
        if mass <= 0.1 {
            ok += 1;
        }
    }
    let frac = ok as f64 / reps as f64;
    verdict(
        frac >= 0.9,
        format!(
            "{ok}/{reps} replications with mass above (log n) t_n = {threshold:.3} at most 0.1 (need >= 90%); \
             t_n = {tn:.4} with C_u = {c_u}; max mass above (log n) t_n {worst:.2e}, above 5 t_n {worst5:.2e}, \
             above 10 tau_n {worst_10tau:.2e}"
        ),
    )
}

fn rel_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn criterion_10() -> Verdict {
    let coarse = IntegralSettings::default();
    let fine = coarse.tightened(10.0);
    let mut worst: f64 = 0.0;
    let mut where_ = String::new();
    let mut track = |label: String, a: f64, b: f64| {
        let r = rel_change(a, b);
        if r > worst {
            worst = r;
            where_ = label;
        }
    };

    // criterion 6 subset: estimator means and plug-in posterior means
    let f2 = ExperimentConfig::figure2();
    for (c, &(p, a)) in simulation::cells(&f2).iter().enumerate() {
        if !matches!((p, a as i64), (5, 1) | (15, 4) | (25, 7)) {
            continue;
        }
        for rep in 0..10 {
            let mut rng = cell_rng(f2.seed, c, rep);
            let s = generate_truth(f2.n, p, a, f2.signal_law, f2.null_law, &mut rng);
            for m in [Method::EbSimple, Method::EbMmle] {
                let (fa, ta) = fit_method(m, &s.y, 200, 400, &coarse).unwrap();
                let (fb, tb) = fit_method(m, &s.y, 400, 800, &fine).unwrap();
                track(format!("fig2 {m} tau p={p} A={a}"), ta, tb);
                for (x, y) in fa.iter().zip(&fb) {
                    track(format!("fig2 {m} mean p={p} A={a}"), x.mean, y.mean);
                }
            }
        }
    }

    // criteria 7-9: all four methods on the MSE scenario
    let f3 = figure3_cell();
    for rep in 0..4 {
        let mut rng = cell_rng(f3.seed, 0, rep);
        let s = generate_truth(f3.n, 20, 7.0, f3.signal_law, f3.null_law, &mut rng);
        for m in Method::ALL {
            let (fa, ta) = fit_method(m, &s.y, 200, 400, &coarse).unwrap();
            let (fb, tb) = fit_method(m, &s.y, 400, 800, &fine).unwrap();
            track(format!("fig3 {m} tau"), ta, tb);
            for (x, y) in fa.iter().zip(&fb) {
                track(format!("fig3 {m} mean"), x.mean, y.mean);
            }
        }
        let prior = TauPrior::new(PriorFamily::TruncatedCauchy, f3.n).unwrap();
        let pa = tau_posterior_with(&s.y, &prior, &HbOptions { grid_size: 400, settings: coarse, ..Default::default() })
            .unwrap();
        let pb = tau_posterior_with(&s.y, &prior, &HbOptions { grid_size: 800, settings: fine, ..Default::default() })
            .unwrap();
        track("tau posterior mean".into(), pa.mean_tau(), pb.mean_tau());
    }
    verdict(
        worst < 1e-3,
        format!("largest relative change {worst:.2e} (limit 1e-3) at {where_}"),
    )
}
