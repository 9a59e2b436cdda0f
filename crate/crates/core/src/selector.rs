//! Two-sided bandwidth selection.
//!
//! Pilot estimates are turned into the bias and variance coefficients of the
//! MSE expansion, and the feasible criterion
//!
//! ```text
//! {φ+ h+² − φ− h−²}² + {ψ+ h+³ − ψ− h−³}² + v/(n f) · {ω+/h+ + ω−/h−}
//! ```
//!
//! is minimized jointly over `(h+, h−)`. Because the cubic bias term is kept,
//! the same criterion works whether or not the leading bias terms can cancel.
//! The closed-form first-order optimal pair is provided for both curvature
//! regimes as an oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::kernel::{KernelMoments, KernelSpec};
use crate::pilot::{assemble_pilots, PilotEstimates};
use crate::sample::{Sample, Side};
use crate::simplex::{minimize_box, SimplexOptions};

/// Nodes per axis of the coarse logarithmic search grid.
pub const GRID_POINTS: usize = 60;

/// Whether the selector targets the ratio estimand or only its numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Fuzzy,
    Sharp,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fuzzy" => Ok(Mode::Fuzzy),
            "sharp" => Ok(Mode::Sharp),
            other => Err(Error::InvalidArgument(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmseCoefficients {
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub v: f64,
    pub f: f64,
    #[serde(rename = "tauD")]
    pub tau_d: f64,
    pub n: usize,
}

impl AmseCoefficients {
    /// `v / (n f)`, the common scale of the variance term.
    pub fn variance_scale(&self) -> f64 {
        self.v / (self.n as f64 * self.f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    OppositeSign,
    SameSign,
    BoundaryClamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPair {
    pub h_plus: f64,
    pub h_minus: f64,
    pub regime: Regime,
    pub objective_value: f64,
}

/// Search box for each bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub plus: (f64, f64),
    pub minus: (f64, f64),
}

impl Bounds {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Bounds {
            plus: (lo, hi),
            minus: (lo, hi),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("plus", self.plus), ("minus", self.minus)] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} bounds must satisfy 0 < lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

fn zeta(sign: f64, m2: f64, m3: f64, slope_ratio: f64, mom: &KernelMoments) -> f64 {
    let curv = 0.5 * m2 * slope_ratio;
    sign * (mom.xi1 * (curv + m3 / 6.0) - mom.xi2 * curv)
}

fn side_sign(side: Side) -> f64 {
    match side {
        Side::Plus => -1.0,
        Side::Minus => 1.0,
    }
}

/// Bias and variance coefficients from pilots. In sharp mode the treatment
/// terms are dropped and the denominator is fixed at one.
pub fn compute_coefficients(
    pilots: &PilotEstimates,
    moments: &KernelMoments,
    mode: Mode,
    n: usize,
) -> AmseCoefficients {
    let ratio = pilots.f1 / pilots.f;
    let side = |s: Side| -> (f64, f64, f64) {
        let sg = side_sign(s);
        let zy = zeta(sg, pilots.m2y(s), pilots.m3y(s), ratio, moments);
        let var = pilots.variances(s);
        match mode {
            Mode::Fuzzy => {
                let t = pilots.tau;
                let zd = zeta(sg, pilots.m2d(s), pilots.m3d(s), ratio, moments);
                let phi = moments.c1 * (pilots.m2y(s) - t * pilots.m2d(s));
                let psi = zy - t * zd;
                let omega = var.sig2y + t * t * var.sig2d - 2.0 * t * var.sigyd;
                (phi, psi, omega.max(0.0))
            }
            Mode::Sharp => (moments.c1 * pilots.m2y(s), zy, var.sig2y.max(0.0)),
        }
    };
    let (phi_plus, psi_plus, omega_plus) = side(Side::Plus);
    let (phi_minus, psi_minus, omega_minus) = side(Side::Minus);
    AmseCoefficients {
        phi_plus,
        phi_minus,
        psi_plus,
        psi_minus,
        omega_plus,
        omega_minus,
        v: moments.v,
        f: pilots.f,
        tau_d: match mode {
            Mode::Fuzzy => pilots.tau_d,
            Mode::Sharp => 1.0,
        },
        n,
    }
}

/// The feasible MSE criterion, unscaled by the denominator jump.
#[inline]
pub fn mmse_objective(h_plus: f64, h_minus: f64, c: &AmseCoefficients) -> f64 {
    let (hp2, hm2) = (h_plus * h_plus, h_minus * h_minus);
    let first = c.phi_plus * hp2 - c.phi_minus * hm2;
    let second = c.psi_plus * hp2 * h_plus - c.psi_minus * hm2 * h_minus;
    first * first
        + second * second
        + c.variance_scale() * (c.omega_plus / h_plus + c.omega_minus / h_minus)
}

fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == k - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (k - 1) as f64).exp()
            }
        })
        .collect()
}

fn on_bound(h: f64, (lo, hi): (f64, f64)) -> bool {
    const REL: f64 = 1e-7;
    (h / lo).ln().abs() < REL || (h / hi).ln().abs() < REL
}

/// Global minimizer of [`mmse_objective`] over `bounds`: a 60×60 logarithmic
/// grid, then a Nelder–Mead polish in log coordinates from the best node.
///
/// Grid ties are broken by the smallest `h+ + h−`, so the result does not
/// depend on the evaluation order.
pub fn minimize_mmse(
    coeffs: &AmseCoefficients,
    bounds: Bounds,
    exec: Execution,
) -> Result<BandwidthPair> {
    if !(coeffs.omega_plus > 0.0) && !(coeffs.omega_minus > 0.0) {
        return Err(Error::DegenerateObjective);
    }
    bounds.validate()?;
    let gp = log_grid(bounds.plus.0, bounds.plus.1, GRID_POINTS);
    let gm = log_grid(bounds.minus.0, bounds.minus.1, GRID_POINTS);

    let values = map_indexed(GRID_POINTS * GRID_POINTS, exec, |k| {
        let v = mmse_objective(gp[k / GRID_POINTS], gm[k % GRID_POINTS], coeffs);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    });
    let best = (0..values.len())
        .min_by(|&a, &b| {
            values[a].total_cmp(&values[b]).then_with(|| {
                let sa = gp[a / GRID_POINTS] + gm[a % GRID_POINTS];
                let sb = gp[b / GRID_POINTS] + gm[b % GRID_POINTS];
                sa.total_cmp(&sb)
            })
        })
        .expect("grid is non-empty");
    let (ip, im) = (best / GRID_POINTS, best % GRID_POINTS);

    let lo = [bounds.plus.0.ln(), bounds.minus.0.ln()];
    let hi = [bounds.plus.1.ln(), bounds.minus.1.ln()];
    let step = [
        (hi[0] - lo[0]) / (GRID_POINTS - 1) as f64,
        (hi[1] - lo[1]) / (GRID_POINTS - 1) as f64,
    ];
    let polished = minimize_box(
        |z: &[f64]| mmse_objective(z[0].exp(), z[1].exp(), coeffs),
        &[gp[ip].ln(), gm[im].ln()],
        &step,
        &lo,
        &hi,
        SimplexOptions::default(),
    );

    let (mut h_plus, mut h_minus, mut value) = (gp[ip], gm[im], values[best]);
    if polished.fx < value {
        h_plus = polished.x[0].exp().clamp(bounds.plus.0, bounds.plus.1);
        h_minus = polished.x[1].exp().clamp(bounds.minus.0, bounds.minus.1);
        value = mmse_objective(h_plus, h_minus, coeffs);
        if value > values[best] {
            // exp/ln round trip lost the improvement
            h_plus = gp[ip];
            h_minus = gm[im];
            value = values[best];
        }
    }

    let regime = if on_bound(h_plus, bounds.plus) || on_bound(h_minus, bounds.minus) {
        Regime::BoundaryClamped
    } else if coeffs.phi_plus * coeffs.phi_minus < 0.0 {
        Regime::OppositeSign
    } else {
        Regime::SameSign
    };
    Ok(BandwidthPair {
        h_plus,
        h_minus,
        regime,
        objective_value: value,
    })
}

/// Closed-form first-order optimal bandwidths.
///
/// With curvatures of opposite sign the pair balances squared leading bias
/// against variance and shrinks like `n^(-1/5)`. With equal signs the leading
/// bias is cancelled by `φ+ h+² = φ− h−²` and the cubic bias is traded off
/// against variance, giving `n^(-1/7)`. `objective_value` is
/// [`mmse_objective`] at the returned pair.
pub fn afo_bandwidths(c: &AmseCoefficients) -> Result<BandwidthPair> {
    let prod = c.phi_plus * c.phi_minus;
    if prod == 0.0 || !prod.is_finite() {
        return Err(Error::ZeroCurvature);
    }
    let n = c.n as f64;
    let (theta, lambda, rate, regime) = if prod < 0.0 {
        if !(c.omega_plus > 0.0) {
            return Err(Error::AssumptionViolated(
                "opposite-sign closed form needs omega_plus > 0".into(),
            ));
        }
        let lambda = (-(c.phi_plus * c.omega_minus) / (c.phi_minus * c.omega_plus)).cbrt();
        let gap = c.phi_plus * (c.phi_plus - lambda * lambda * c.phi_minus);
        if !(gap > 0.0) {
            return Err(Error::AssumptionViolated(format!(
                "phi_plus (phi_plus - lambda^2 phi_minus) = {gap} is not positive"
            )));
        }
        let theta = (c.v * c.omega_plus / (4.0 * c.f * gap)).powf(0.2);
        (theta, lambda, -0.2, Regime::OppositeSign)
    } else {
        let lambda = (c.phi_plus / c.phi_minus).sqrt();
        let cubic = c.psi_plus - lambda.powi(3) * c.psi_minus;
        let scale = c.psi_plus.abs() + (lambda.powi(3) * c.psi_minus).abs();
        if cubic == 0.0 || cubic.abs() <= 1e-14 * scale {
            return Err(Error::AssumptionViolated(
                "psi_plus - (phi_plus/phi_minus)^(3/2) psi_minus = 0".into(),
            ));
        }
        let num = c.v * (c.omega_plus + c.omega_minus / lambda);
        let theta = (num / (6.0 * c.f * cubic * cubic)).powf(1.0 / 7.0);
        (theta, lambda, -1.0 / 7.0, Regime::SameSign)
    };
    let h_plus = theta * n.powf(rate);
    let h_minus = lambda * h_plus;
    if !(h_plus > 0.0 && h_minus > 0.0 && h_plus.is_finite() && h_minus.is_finite()) {
        return Err(Error::AssumptionViolated(format!(
            "closed form produced ({h_plus}, {h_minus})"
        )));
    }
    Ok(BandwidthPair {
        h_plus,
        h_minus,
        regime,
        objective_value: mmse_objective(h_plus, h_minus, c),
    })
}

/// Default search box: from the distance to the third-nearest observation on
/// each side up to that side's farthest observation.
pub fn default_bounds(sample: &Sample) -> Result<Bounds> {
    let side = |s: Side| -> Result<(f64, f64)> {
        let d = sample.side_distances(s);
        if d.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "{} side has {} observations; bandwidth search needs 3",
                s.name(),
                d.len()
            )));
        }
        let (lo, hi) = (d[2], d[d.len() - 1]);
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InsufficientData(format!(
                "{} side has no room for a bandwidth search ({lo}, {hi})",
                s.name()
            )));
        }
        Ok((lo, hi))
    };
    Ok(Bounds {
        plus: side(Side::Plus)?,
        minus: side(Side::Minus)?,
    })
}

/// Everything produced by [`select_bandwidths`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub bandwidths: BandwidthPair,
    pub pilots: PilotEstimates,
    pub coefficients: AmseCoefficients,
    pub bounds: Bounds,
}

/// Pilots → coefficients → MMSE minimization over the default bounds.
pub fn select_bandwidths(
    sample: &Sample,
    kernel: KernelSpec,
    mode: Mode,
    exec: Execution,
) -> Result<Selection> {
    let pilots = assemble_pilots(sample, kernel)?;
    let coefficients = compute_coefficients(&pilots, &kernel.moments(), mode, sample.len());
    let bounds = default_bounds(sample)?;
    let bandwidths = minimize_mmse(&coefficients, bounds, exec)?;
    Ok(Selection {
        bandwidths,
        pilots,
        coefficients,
        bounds,
    })
}
