//! Globally adaptive Gauss–Kronrod (10/21) quadrature over vector-valued
//! integrands, plus the bounded scalar minimizer and root finder used by the
//! estimators.
//!
//! Every component of the integrand gets its own error estimate and the
//! subdivision loop keeps bisecting the panel with the worst error relative
//! to its component tolerance. That lets one pass compute several moments of
//! the same density while still demanding relative accuracy on the small ones.

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_502_438,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections applied to any one starting panel.
    pub max_depth: u32,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_depth: 60,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub abs_err: [f64; N],
    pub converged: bool,
    pub evaluations: usize,
}

impl<const N: usize> QuadResult<N> {
    /// Largest relative error estimate over the components.
    pub fn max_rel_err(&self) -> f64 {
        self.value
            .iter()
            .zip(&self.abs_err)
            .map(|(v, e)| if *v == 0.0 { if *e == 0.0 { 0.0 } else { f64::INFINITY } } else { e / v.abs() })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    depth: u32,
    value: [f64; N],
    err: [f64; N],
    frozen: bool,
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn gk21<const N: usize, F>(f: &mut F, a: f64, b: f64) -> ([f64; N], [f64; N])
where
    F: FnMut(f64) -> [f64; N],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut res_k = [0.0; N];
    let mut res_g = [0.0; N];
    let mut resabs = [0.0; N];
    for i in 0..N {
        res_k[i] = WGK[10] * fc[i];
        resabs[i] = (WGK[10] * fc[i]).abs();
    }

    let mut fv1 = [[0.0; N]; 10];
    let mut fv2 = [[0.0; N]; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            res_k[i] += WGK[j] * s;
            resabs[i] += WGK[j] * (f1[i].abs() + f2[i].abs());
            if j % 2 == 1 {
                res_g[i] += WG[j / 2] * s;
            }
        }
        fv1[j] = f1;
        fv2[j] = f2;
    }

    let mut value = [0.0; N];
    let mut err = [0.0; N];
    for i in 0..N {
        let mean = 0.5 * res_k[i];
        let mut resasc = WGK[10] * (fc[i] - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv1[j][i] - mean).abs() + (fv2[j][i] - mean).abs());
        }
        value[i] = res_k[i] * half;
        err[i] = rescale_error(
            (res_k[i] - res_g[i]) * half,
            resabs[i] * half.abs(),
            resasc * half.abs(),
        );
    }
    (value, err)
}

/// Integrates a vector-valued function over `[points[0], points[last]]`,
/// using the interior points as initial panel boundaries.
///
/// Degenerate (zero-width) panels are skipped.
pub fn integrate<const N: usize, F>(mut f: F, points: &[f64], opts: &QuadOptions) -> QuadResult<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let mut panels: Vec<Panel<N>> = Vec::with_capacity(64);
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, err) = gk21(&mut f, w[0], w[1]);
            evaluations += 21;
            panels.push(Panel { a: w[0], b: w[1], depth: 0, value, err, frozen: false });
        }
    }

    loop {
        let mut total = [0.0; N];
        let mut total_err = [0.0; N];
        for p in &panels {
            for i in 0..N {
                total[i] += p.value[i];
                total_err[i] += p.err[i];
            }
        }
        let mut tol = [0.0; N];
        let mut done = true;
        for i in 0..N {
            tol[i] = (opts.rel_tol * total[i].abs()).max(opts.abs_tol);
            if total_err[i] > tol[i] {
                done = false;
            }
        }
        if total.iter().chain(&total_err).any(|v| !v.is_finite()) {
            return QuadResult { value: total, abs_err: total_err, converged: false, evaluations };
        }
        if done || panels.len() >= opts.max_panels {
            return QuadResult { value: total, abs_err: total_err, converged: done, evaluations };
        }

        // Worst panel, measured against each component's tolerance.
        let mut worst: Option<(usize, f64)> = None;
        for (k, p) in panels.iter().enumerate() {
            if p.frozen {
                continue;
            }
            let score = (0..N)
                .map(|i| {
                    if tol[i] > 0.0 {
                        p.err[i] / tol[i]
                    } else if p.err[i] > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max);
            if worst.is_none_or(|(_, s)| score > s) {
                worst = Some((k, score));
            }
        }
        let Some((k, _)) = worst else {
            return QuadResult { value: total, abs_err: total_err, converged: false, evaluations };
        };

        let p = panels[k];
        let mid = 0.5 * (p.a + p.b);
        if p.depth >= opts.max_depth || !(mid > p.a && mid < p.b) {
            panels[k].frozen = true;
            continue;
        }
        let (v1, e1) = gk21(&mut f, p.a, mid);
        let (v2, e2) = gk21(&mut f, mid, p.b);
        evaluations += 42;
        panels[k] = Panel { a: p.a, b: mid, depth: p.depth + 1, value: v1, err: e1, frozen: false };
        panels.push(Panel { a: mid, b: p.b, depth: p.depth + 1, value: v2, err: e2, frozen: false });
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, points: &[f64], opts: &QuadOptions) -> QuadResult<1>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| [f(x)], points, opts)
}

/// Result of a bounded one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Brent's method (golden section with parabolic steps) on `[lo, hi]`.
pub fn brent_minimize<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut evaluations = 1;
    let (mut d, mut e) = (0.0_f64, 0.0_f64);

    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = xtol + f64::EPSILON.sqrt() * 1e-3 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Minimum { x, fx, evaluations, converged: true };
        }

        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }

        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        evaluations += 1;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x, fx, evaluations, converged: false }
}

/// Finds a root of `f` in a bracketing interval with the Illinois variant of
/// regula falsi, falling back to bisection when the secant step stalls.
/// Returns `None` when `[lo, hi]` does not bracket a sign change.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        // keep the step well inside the bracket
        let lo_c = a.min(b) + 0.01 * (b - a).abs();
        let hi_c = a.max(b) - 0.01 * (b - a).abs();
        if !(c > lo_c && c < hi_c) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Some(0.5 * (a + b))
}
