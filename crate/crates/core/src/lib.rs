//! Simultaneous two-sided bandwidth selection for the fuzzy regression
//! discontinuity estimator.
//!
//! The outcome and treatment limits on each side of the cutoff are estimated
//! by local linear regression, one bandwidth per side. Bandwidths minimize a
//! plug-in MSE criterion that keeps the second-order bias term, so the rule
//! stays well defined when the leading biases on the two sides can cancel.
//!
//! [`simlab`] holds the simulation designs and a seeded, data-parallel Monte
//! Carlo engine. Parallelism is behind the default `parallel` feature; without
//! it every loop runs sequentially with identical results.

pub mod error;
pub mod estimator;
pub mod exec;
pub mod kernel;
pub mod local_poly;
pub mod pilot;
pub mod sample;
pub mod selector;
pub mod simlab;
pub mod simplex;

pub use error::{Error, Result};
pub use estimator::{frd_estimate, sharp_estimate, FrdEstimate};
pub use exec::Execution;
pub use kernel::{compute_moments, eval_kernel, KernelMoments, KernelSpec};
pub use local_poly::{estimate_level, fit_boundary, BoundaryFit};
pub use pilot::{assemble_pilots, PilotEstimates};
pub use sample::{load_csv, Response, Sample, Side};
pub use selector::{
    afo_bandwidths, compute_coefficients, default_bounds, minimize_mmse, mmse_objective,
    select_bandwidths, AmseCoefficients, BandwidthPair, Bounds, Mode, Regime, Selection,
};
pub use simlab::{
    draw_sample, mean_outcome, run_monte_carlo, run_monte_carlo_with, treatment_prob,
    trimmed_stats, Arm, Design, DgpSpec, McConfig, McSummary, Method,
};
