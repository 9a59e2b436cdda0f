//! Simulation designs and the Monte Carlo engine.
//!
//! Each replication owns a ChaCha stream selected by its index, so a run is a
//! pure function of `(spec, method, reps, kernel)` no matter how replications
//! are scheduled across threads.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::frd_estimate;
use crate::exec::{map_indexed, Execution};
use crate::kernel::KernelSpec;
use crate::sample::Sample;
use crate::selector::{select_bandwidths, Mode, Regime};

pub const DEFAULT_ERROR_SD: f64 = 0.1295;
pub const DEFAULT_TRIM: f64 = 0.05;
pub const CDF_POINTS: usize = 200;
/// Shift of the normal CDF on either side of the cutoff.
const PROPENSITY_SHIFT: f64 = 1.28;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `P(D = 1 | X = x)`: `Φ(x + 1.28)` for `x >= 0`, `Φ(x − 1.28)` below.
pub fn treatment_prob(x: f64) -> f64 {
    if x >= 0.0 {
        normal_cdf(x + PROPENSITY_SHIFT)
    } else {
        normal_cdf(x - PROPENSITY_SHIFT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Design1,
    Design2,
}

impl Design {
    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Design::Design1),
            2 => Ok(Design::Design2),
            other => Err(Error::InvalidArgument(format!("unknown design {other}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Design::Design1 => 1,
            Design::Design2 => 2,
        }
    }

    /// Intercepts `(α_1, α_0)` of the treated and control mean functions.
    fn intercepts(self) -> (f64, f64) {
        match self {
            Design::Design1 => (-0.17, 4.13),
            Design::Design2 => (0.0975, 0.0225),
        }
    }

    /// Quintic coefficients (degree 1..=5) for `x > 0` and `x <= 0`.
    fn slopes(self) -> ([f64; 5], [f64; 5]) {
        match self {
            Design::Design1 => (
                [18.49, -54.8, 74.3, -45.02, 9.83],
                [2.99, 3.28, 1.45, 0.22, 0.03],
            ),
            Design::Design2 => (
                [5.76, -42.56, 120.90, -139.71, 55.59],
                [-2.26, -13.14, -30.89, -31.98, -12.1],
            ),
        }
    }

    /// The local average treatment effect at the cutoff, `α_1 − α_0`.
    pub fn true_tau(self) -> f64 {
        let (a1, a0) = self.intercepts();
        a1 - a0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Treated,
    Control,
}

/// `E[Y(1) | X = x]` or `E[Y(0) | X = x]` for the design.
pub fn mean_outcome(design: Design, arm: Arm, x: f64) -> f64 {
    let (a1, a0) = design.intercepts();
    let alpha = match arm {
        Arm::Treated => a1,
        Arm::Control => a0,
    };
    let (right, left) = design.slopes();
    let b = if x > 0.0 { right } else { left };
    alpha + x * (b[0] + x * (b[1] + x * (b[2] + x * (b[3] + x * b[4]))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub design: Design,
    pub n: usize,
    pub error_sd: f64,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(design: Design, n: usize, seed: u64) -> Self {
        DgpSpec {
            design,
            n,
            error_sd: DEFAULT_ERROR_SD,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 50 {
            return Err(Error::InvalidArgument(format!("n must be at least 50, got {}", self.n)));
        }
        if !(self.error_sd > 0.0 && self.error_sd.is_finite()) {
            return Err(Error::InvalidArgument("error_sd must be positive".into()));
        }
        Ok(())
    }
}

/// Generator for replication `rep_index`.
pub fn replication_rng(seed: u64, rep_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep_index);
    rng
}

/// Draw one dataset: `X = 2Z − 1` with `Z ~ Beta(2, 4)`,
/// `D ~ Bernoulli(treatment_prob(X))`, `Y = mean_outcome(D, X) + ε`.
pub fn draw_sample(spec: &DgpSpec, rep_index: u64) -> Result<Sample> {
    spec.validate()?;
    let mut rng = replication_rng(spec.seed, rep_index);
    let beta = Beta::new(2.0, 4.0).expect("valid beta parameters");
    let noise = Normal::new(0.0, spec.error_sd).expect("validated sd");
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    let mut d = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let xi = 2.0 * beta.sample(&mut rng) - 1.0;
        let treated = rng.random::<f64>() < treatment_prob(xi);
        let arm = if treated { Arm::Treated } else { Arm::Control };
        let yi = mean_outcome(spec.design, arm, xi) + noise.sample(&mut rng);
        x.push(xi);
        y.push(yi);
        d.push(treated as u8 as f64);
    }
    Sample::new(x, y, d, 0.0)
}

/// Bias and root mean square of `errors` after discarding the
/// `ceil(trim_fraction · R)` entries with the largest magnitude. At least one
/// entry always survives unless `trim_fraction` is 1.
pub fn trimmed_stats(errors: &[f64], trim_fraction: f64) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("no errors to summarize".into()));
    }
    if !(0.0..=1.0).contains(&trim_fraction) {
        return Err(Error::InvalidArgument(format!("trim fraction {trim_fraction} outside [0, 1]")));
    }
    let survivors = trimmed_survivors(errors, trim_fraction);
    if survivors.is_empty() {
        return Err(Error::AllTrimmed);
    }
    let m = survivors.len() as f64;
    let bias = survivors.iter().sum::<f64>() / m;
    let rmse = (survivors.iter().map(|e| e * e).sum::<f64>() / m).sqrt();
    Ok((bias, rmse))
}

fn trimmed_survivors(errors: &[f64], trim_fraction: f64) -> Vec<f64> {
    let r = errors.len();
    // guard against 6 * (1/6) landing a hair above 1
    let mut drop = ((trim_fraction * r as f64) - 1e-9).ceil().max(0.0) as usize;
    if trim_fraction < 1.0 {
        drop = drop.min(r - 1);
    }
    let mut idx: Vec<usize> = (0..r).collect();
    idx.sort_by(|&a, &b| errors[a].abs().total_cmp(&errors[b].abs()));
    idx.truncate(r.saturating_sub(drop));
    idx.into_iter().map(|i| errors[i]).collect()
}

/// Bandwidth rule being benchmarked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Coefficients built for the ratio estimand.
    MmseF,
    /// Coefficients built from the outcome equation alone; the resulting
    /// bandwidths are reused for the denominator.
    MmseS,
}

impl Method {
    pub fn mode(self) -> Mode {
        match self {
            Method::MmseF => Mode::Fuzzy,
            Method::MmseS => Mode::Sharp,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::MmseF => "mmse-f",
            Method::MmseS => "mmse-s",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mmse-f" => Ok(Method::MmseF),
            "mmse-s" => Ok(Method::MmseS),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// What one successful replication records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub h_plus: f64,
    pub h_minus: f64,
    pub tau_hat: f64,
    pub error: f64,
    pub regime: Regime,
}

/// Draw, select and estimate for replication `rep_index`.
pub fn run_replication(
    spec: &DgpSpec,
    method: Method,
    rep_index: u64,
    kernel: KernelSpec,
) -> Result<RepOutcome> {
    let sample = draw_sample(spec, rep_index)?;
    let sel = select_bandwidths(&sample, kernel, method.mode(), Execution::Sequential)?;
    let bw = sel.bandwidths;
    let est = frd_estimate(&sample, bw.h_plus, bw.h_minus, kernel)?;
    Ok(RepOutcome {
        h_plus: bw.h_plus,
        h_minus: bw.h_minus,
        tau_hat: est.tau,
        error: est.tau - spec.design.true_tau(),
        regime: bw.regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub method: Method,
    pub design: Design,
    pub n: usize,
    pub seed: u64,
    pub true_tau: f64,
    pub h_plus_mean: f64,
    pub h_plus_sd: f64,
    pub h_minus_mean: f64,
    pub h_minus_sd: f64,
    pub bias_trimmed: f64,
    pub rmse_trimmed: f64,
    /// Empirical CDF of `|τ̂ − τ|` over successful replications.
    pub cdf: Vec<CdfPoint>,
    pub reps_total: usize,
    pub reps_failed: usize,
    /// Successful replications whose bandwidth landed on the search box edge.
    pub boundary_clamped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub reps: usize,
    pub kernel: KernelSpec,
    pub trim_fraction: f64,
    pub cdf_points: usize,
    /// Largest CDF threshold; defaults to the largest surviving `|error|`
    /// after trimming.
    pub cdf_upper: Option<f64>,
    pub execution: Execution,
}

impl McConfig {
    pub fn new(reps: usize, kernel: KernelSpec) -> Self {
        McConfig {
            reps,
            kernel,
            trim_fraction: DEFAULT_TRIM,
            cdf_points: CDF_POINTS,
            cdf_upper: None,
            execution: Execution::Parallel,
        }
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fraction of `abs_errors` at or below each of `points` evenly spaced
/// thresholds on `(0, upper]`.
pub fn empirical_cdf(abs_errors: &[f64], upper: f64, points: usize) -> Vec<CdfPoint> {
    let mut sorted = abs_errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len().max(1) as f64;
    (1..=points)
        .map(|k| {
            let threshold = upper * k as f64 / points as f64;
            let below = sorted.partition_point(|&e| e <= threshold);
            CdfPoint {
                threshold,
                fraction: below as f64 / total,
            }
        })
        .collect()
}

/// Aggregate per-replication results. Failed replications are counted and
/// excluded.
pub fn summarize(
    spec: &DgpSpec,
    method: Method,
    outcomes: &[Result<RepOutcome>],
    cfg: &McConfig,
) -> Result<McSummary> {
    let ok: Vec<&RepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    if ok.is_empty() {
        return Err(Error::AllTrimmed);
    }
    let hp: Vec<f64> = ok.iter().map(|o| o.h_plus).collect();
    let hm: Vec<f64> = ok.iter().map(|o| o.h_minus).collect();
    let errors: Vec<f64> = ok.iter().map(|o| o.error).collect();
    let (h_plus_mean, h_plus_sd) = mean_sd(&hp);
    let (h_minus_mean, h_minus_sd) = mean_sd(&hm);
    let (bias_trimmed, rmse_trimmed) = trimmed_stats(&errors, cfg.trim_fraction)?;

    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    let upper = cfg.cdf_upper.unwrap_or_else(|| {
        trimmed_survivors(&errors, cfg.trim_fraction)
            .iter()
            .map(|e| e.abs())
            .fold(0.0, f64::max)
    });
    let upper = if upper > 0.0 { upper } else { f64::MIN_POSITIVE };

    Ok(McSummary {
        method,
        design: spec.design,
        n: spec.n,
        seed: spec.seed,
        true_tau: spec.design.true_tau(),
        h_plus_mean,
        h_plus_sd,
        h_minus_mean,
        h_minus_sd,
        bias_trimmed,
        rmse_trimmed,
        cdf: empirical_cdf(&abs, upper, cfg.cdf_points),
        reps_total: outcomes.len(),
        reps_failed: outcomes.len() - ok.len(),
        boundary_clamped: ok.iter().filter(|o| o.regime == Regime::BoundaryClamped).count(),
    })
}

/// Every replication of a run, in index order.
pub fn run_replications(
    spec: &DgpSpec,
    method: Method,
    reps: usize,
    kernel: KernelSpec,
    exec: Execution,
) -> Vec<Result<RepOutcome>> {
    map_indexed(reps, exec, |i| run_replication(spec, method, i as u64, kernel))
}

/// Monte Carlo experiment with default trimming and CDF settings.
pub fn run_monte_carlo(
    spec: &DgpSpec,
    method: Method,
    reps: usize,
    kernel: KernelSpec,
) -> Result<McSummary> {
    run_monte_carlo_with(spec, method, &McConfig::new(reps, kernel))
}

pub fn run_monte_carlo_with(spec: &DgpSpec, method: Method, cfg: &McConfig) -> Result<McSummary> {
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    spec.validate()?;
    let outcomes = run_replications(spec, method, cfg.reps, cfg.kernel, cfg.execution);
    summarize(spec, method, &outcomes, cfg)
}
