use std::fs;

use horseshoe::{
    eb_fit, hb_fit_with, likelihood_profile, log_grid, mixture_interval, mmle, simple_estimator, ConfigFile,
    CoordinatePosterior, HbOptions, IntegralSettings, MmleOptions, PriorFamily, SimpleEstimatorParams, TauPrior,
};
use rayon::prelude::*;

use crate::io::{emit, read_observations, write_atomic, CliError, Report};
use crate::{FitArgs, ProfileArgs, SimulateArgs};

const HB_DEFAULT_GRID: usize = 400;
const MMLE_DEFAULT_GRID: usize = 200;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FitMethod {
    EbMmle { grid_size: usize },
    EbSimple(SimpleEstimatorParams),
    Hb { family: PriorFamily, grid_size: usize },
}

impl FitMethod {
    fn name(&self) -> String {
        match self {
            FitMethod::EbMmle { .. } => "eb_mmle".into(),
            FitMethod::EbSimple(_) => "eb_simple".into(),
            FitMethod::Hb { family, .. } => format!("hb_{family}"),
        }
    }
}

// Checks every flag combination before the input is read.
fn resolve_method(args: &FitArgs) -> Result<FitMethod, CliError> {
    let name = args.method.as_str();
    let hb_family = match name {
        "eb_mmle" | "eb_simple" => None,
        "hb" => Some(args.prior.unwrap_or(PriorFamily::TruncatedCauchy)),
        _ => match name.strip_prefix("hb_") {
            Some(f) => {
                let family: PriorFamily = f.parse().map_err(|e: horseshoe::Error| usage(format!("--method: {e}")))?;
                if args.prior.is_some_and(|p| p != family) {
                    return Err(usage(format!("--prior {} conflicts with --method {name}", args.prior.unwrap())));
                }
                Some(family)
            }
            None => {
                return Err(usage(format!(
                    "unknown method '{name}' (expected eb_mmle, eb_simple, hb or hb_<prior>)"
                )))
            }
        },
    };
    if hb_family.is_none() && args.prior.is_some() {
        return Err(usage("--prior applies only to hierarchical methods"));
    }
    if name != "eb_simple" && (args.c1.is_some() || args.c2.is_some()) {
        return Err(usage("--c1 and --c2 apply only to --method eb_simple"));
    }
    if let Some(level) = args.level {
        if !(level > 0.0 && level < 1.0) {
            return Err(usage(format!("--level must lie strictly between 0 and 1, got {level}")));
        }
    }
    let method = match (name, hb_family) {
        ("eb_simple", _) => {
            if args.grid_size.is_some() {
                return Err(usage("--grid-size does not apply to --method eb_simple"));
            }
            let defaults = SimpleEstimatorParams::default();
            let params = SimpleEstimatorParams::new(args.c1.unwrap_or(defaults.c1), args.c2.unwrap_or(defaults.c2))?;
            FitMethod::EbSimple(params)
        }
        (_, Some(family)) => {
            let grid_size = args.grid_size.unwrap_or(HB_DEFAULT_GRID);
            if grid_size < 50 {
                return Err(usage(format!("--grid-size must be at least 50 for hierarchical methods, got {grid_size}")));
            }
            FitMethod::Hb { family, grid_size }
        }
        _ => {
            let grid_size = args.grid_size.unwrap_or(MMLE_DEFAULT_GRID);
            if grid_size < 1 {
                return Err(usage("--grid-size must be at least 1"));
            }
            FitMethod::EbMmle { grid_size }
        }
    };
    Ok(method)
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let method = resolve_method(args)?;
    let y = read_observations(&args.input)?;
    let n = y.len();
    let settings = IntegralSettings::default();

    let mut report_meta: Vec<(&str, String)> = vec![("method", method.name()), ("n", n.to_string())];
    // Mixture components (τ, weight) behind each coordinate posterior.
    let (coords, components): (Vec<CoordinatePosterior>, Vec<(f64, f64)>) = match method {
        FitMethod::EbSimple(params) => {
            let tau = simple_estimator(&y, params)?;
            report_meta.push(("c1", params.c1.to_string()));
            report_meta.push(("c2", params.c2.to_string()));
            report_meta.push(("tau_hat", tau.to_string()));
            (eb_fit(&y, tau)?, vec![(tau, 1.0)])
        }
        FitMethod::EbMmle { grid_size } => {
            let r = mmle(&y, &MmleOptions { grid_size, ..Default::default() })?;
            report_meta.push(("grid_size", grid_size.to_string()));
            report_meta.push(("tau_hat", r.tau_hat.to_string()));
            report_meta.push(("boundary", r.boundary_flag.as_str().to_string()));
            (eb_fit(&y, r.tau_hat)?, vec![(r.tau_hat, 1.0)])
        }
        FitMethod::Hb { family, grid_size } => {
            let prior = TauPrior::new(family, n)?;
            let options = HbOptions::with_grid(grid_size);
            let fit = hb_fit_with(&y, &prior, &options)?;
            report_meta.push(("prior", family.to_string()));
            report_meta.push(("grid_size", grid_size.to_string()));
            report_meta.push(("tau_posterior_mean", fit.posterior.mean_tau().to_string()));
            let kept: Vec<(f64, f64)> = fit
                .posterior
                .grid
                .iter()
                .zip(&fit.posterior.log_weights)
                .filter(|(_, &lw)| lw >= options.log_weight_cutoff)
                .map(|(&t, &lw)| (t, lw.exp()))
                .collect();
            let total: f64 = kept.iter().map(|c| c.1).sum();
            (fit.coordinates, kept.into_iter().map(|(t, w)| (t, w / total)).collect())
        }
    };

    let intervals = match args.level {
        Some(level) => {
            let iv: Result<Vec<(f64, f64)>, _> =
                y.par_iter().map(|&v| mixture_interval(v, &components, level, &settings)).collect();
            report_meta.push(("level", level.to_string()));
            Some(iv?)
        }
        None => None,
    };

    let mut columns = vec!["index", "y", "post_mean", "post_var"];
    if intervals.is_some() {
        columns.extend(["lower", "upper"]);
    }
    let mut report = Report::new(&columns);
    for (k, v) in report_meta {
        report.meta(k, v);
    }
    for (i, c) in coords.iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), y[i].to_string(), c.mean.to_string(), c.variance.to_string()];
        if let Some(iv) = &intervals {
            row.push(iv[i].0.to_string());
            row.push(iv[i].1.to_string());
        }
        report.row(row);
    }
    emit(args.out.as_deref(), &report.finish())
}

pub fn simulate(args: &SimulateArgs, threads: Option<usize>) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.config.display())))?;
    let bad_config = |e: horseshoe::Error| usage(format!("{}: {e}", args.config.display()));
    let (preset, mut config) = ConfigFile::parse(&text).and_then(|f| f.resolve()).map_err(bad_config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if threads.is_some() {
        config.threads = threads;
    }
    config.validate().map_err(bad_config)?;

    let output = horseshoe::run_experiment(preset, &config)?;
    let meta = output.metadata();
    let mut csv = String::new();
    for (k, v) in [
        ("preset", preset.as_str().to_string()),
        ("seed", config.seed.to_string()),
        ("library_version", meta.library_version.to_string()),
        ("rng", meta.rng_scheme.to_string()),
    ] {
        csv.push_str(&format!("# {k} = {v}\n"));
    }
    csv.push_str(&output.to_csv());
    write_atomic(&args.out, &csv)?;
    write_atomic(&args.out.with_extension("meta.toml"), &meta.to_toml())
}

pub fn profile(args: &ProfileArgs) -> Result<(), CliError> {
    if args.grid_size < 1 {
        return Err(usage("--grid-size must be at least 1"));
    }
    for (flag, v) in [("--lower", args.lower), ("--upper", args.upper)] {
        if v.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return Err(usage(format!("{flag} must be finite and positive")));
        }
    }
    let y = read_observations(&args.input)?;
    let n = y.len() as f64;
    let lower = args.lower.unwrap_or(1.0 / n);
    let upper = args.upper.unwrap_or(1.0);
    if lower > upper || (lower == upper && args.grid_size > 1) {
        return Err(usage(format!("empty tau grid: lower {lower} must be below upper {upper}")));
    }
    let grid = log_grid(lower, upper, args.grid_size);
    let profile = likelihood_profile(&y, &grid, &IntegralSettings::default(), true)?;
    let best = horseshoe::estimators::argmax_first(profile.iter().map(|p| p.1)).expect("non-empty grid");

    let mut report = Report::new(&["tau", "log_likelihood", "is_mmle"]);
    report.meta("n", y.len());
    report.meta("grid", format!("log-uniform, {} points on [{lower}, {upper}]", args.grid_size));
    report.meta("tau_at_max", profile[best].0);
    for (i, (t, m)) in profile.iter().enumerate() {
        report.row([t.to_string(), m.to_string(), u8::from(i == best).to_string()]);
    }
    emit(args.out.as_deref(), &report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn fit_args(flags: &[&str]) -> FitArgs {
        #[derive(Parser)]
        struct Wrap {
            #[command(flatten)]
            fit: FitArgs,
        }
        let mut argv = vec!["fit", "y.txt"];
        argv.extend(flags);
        Wrap::try_parse_from(argv).unwrap().fit
    }

    #[test]
    fn method_resolution() {
        assert_eq!(resolve_method(&fit_args(&[])).unwrap(), FitMethod::EbMmle { grid_size: 200 });
        assert_eq!(
            resolve_method(&fit_args(&["--method", "hb"])).unwrap(),
            FitMethod::Hb { family: PriorFamily::TruncatedCauchy, grid_size: 400 }
        );
        assert_eq!(
            resolve_method(&fit_args(&["--method", "hb_reciprocal", "--prior", "reciprocal", "--grid-size", "90"]))
                .unwrap(),
            FitMethod::Hb { family: PriorFamily::Reciprocal, grid_size: 90 }
        );
        let simple = resolve_method(&fit_args(&["--method", "eb_simple", "--c2", "0.5"])).unwrap();
        assert_eq!(simple, FitMethod::EbSimple(SimpleEstimatorParams { c1: 2.0, c2: 0.5 }));
        assert_eq!(simple.name(), "eb_simple");
        assert!(resolve_method(&fit_args(&["--method", "eb_simple", "--grid-size", "10"])).is_err());
        assert!(resolve_method(&fit_args(&["--grid-size", "0"])).is_err());
    }
}
