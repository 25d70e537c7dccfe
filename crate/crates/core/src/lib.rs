//! Horseshoe-prior estimation for the sparse normal means model.
//!
//! Observations `Y_i = θ_i + ε_i` with standard normal noise, and
//! `θ_i | λ_i, τ ~ N(0, λ_i² τ²)`, `λ_i` half-Cauchy. The crate evaluates the
//! integrals behind the marginal likelihood and posterior moments
//! ([`special`]), per-coordinate posterior summaries ([`posterior`]),
//! empirical-Bayes estimates of `τ` ([`estimators`]), the full-Bayes
//! posterior with a hyperprior on `τ` ([`hierarchical`]) and a seeded
//! simulation harness ([`simulation`]).

pub mod error;
pub mod estimators;
pub mod hierarchical;
pub mod posterior;
pub mod quadrature;
pub mod simulation;
pub mod special;

pub use error::{check_observations, Error, Result};
pub use estimators::{
    eb_fit, eb_fit_with, likelihood_profile, log_grid, mmle, simple_estimator, BoundaryFlag, MmleOptions,
    MmleResult, SimpleEstimatorParams,
};
pub use hierarchical::{
    hb_fit, hb_fit_with, log_tau_posterior_unnorm, tau_posterior, tau_posterior_with, tau_tail_mass, HbFit,
    HbOptions, PriorFamily, TauPosterior, TauPrior,
};
pub use posterior::{
    c_u_estimate, coordinate_posterior, expected_m_tau_null, likelihood_and_score, log_marginal_likelihood,
    log_marginal_likelihood_with, m_tau, m_tau_bounds, mixture_interval, posterior_cumulant4, posterior_interval,
    posterior_mean, posterior_variance, score, CoordinatePosterior, MTauBounds,
};
pub use simulation::{
    generate_truth, run_estimator_comparison, run_experiment, run_mse_experiment, run_mtau_curve, ConfigFile,
    ExperimentConfig, ExperimentKind, ExperimentOutput, ExperimentResult, Method, MtauCurve, MtauPoint, NullLaw,
    Preset, ResultRow, SignalLaw,
};
pub use special::{
    incomplete_exp_integral, kappa, kernel_sums, kernel_sums_quadrature, log_marginal_density, prior_density,
    scaled_ik, scaled_ik_with, t_n, tau_n, zeta, IkIndex, IntegralSettings, KernelSums, KernelTable, ScaledIk,
    ShrinkageScales,
};
