//! Plug-in pilot estimates for the MSE expansion: design density and its
//! slope at the cutoff, one-sided curvatures, residual (co)variances and the
//! treatment-probability jump.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::local_poly::{fit_boundary, weighted_poly_fit};
use crate::sample::{Response, Sample, Side};

/// Rule-of-thumb scale for the local linear pilot bandwidth.
pub const PILOT_BANDWIDTH_SCALE: f64 = 1.84;
/// Silverman constant for the Gaussian-reference density bandwidth.
pub const SILVERMAN_SCALE: f64 = 1.06;
/// Below this `|tau_D|` the ratio estimand is treated as unidentified.
pub const WEAK_DISCONTINUITY: f64 = 0.05;
/// Below this a side's treatment variance is treated as sharp.
pub const SHARP_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotEstimates {
    pub f: f64,
    pub f1: f64,
    #[serde(rename = "m2Y_plus")]
    pub m2y_plus: f64,
    #[serde(rename = "m2Y_minus")]
    pub m2y_minus: f64,
    #[serde(rename = "m3Y_plus")]
    pub m3y_plus: f64,
    #[serde(rename = "m3Y_minus")]
    pub m3y_minus: f64,
    #[serde(rename = "m2D_plus")]
    pub m2d_plus: f64,
    #[serde(rename = "m2D_minus")]
    pub m2d_minus: f64,
    #[serde(rename = "m3D_plus")]
    pub m3d_plus: f64,
    #[serde(rename = "m3D_minus")]
    pub m3d_minus: f64,
    #[serde(rename = "sig2Y_plus")]
    pub sig2y_plus: f64,
    #[serde(rename = "sig2Y_minus")]
    pub sig2y_minus: f64,
    #[serde(rename = "sig2D_plus")]
    pub sig2d_plus: f64,
    #[serde(rename = "sig2D_minus")]
    pub sig2d_minus: f64,
    #[serde(rename = "sigYD_plus")]
    pub sigyd_plus: f64,
    #[serde(rename = "sigYD_minus")]
    pub sigyd_minus: f64,
    #[serde(rename = "tauD")]
    pub tau_d: f64,
    pub tau: f64,
}

impl PilotEstimates {
    pub fn m2y(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.m2y_plus,
            Side::Minus => self.m2y_minus,
        }
    }

    pub fn m3y(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.m3y_plus,
            Side::Minus => self.m3y_minus,
        }
    }

    pub fn m2d(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.m2d_plus,
            Side::Minus => self.m2d_minus,
        }
    }

    pub fn m3d(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.m3d_plus,
            Side::Minus => self.m3d_minus,
        }
    }

    pub fn variances(&self, side: Side) -> Variances {
        match side {
            Side::Plus => Variances {
                sig2y: self.sig2y_plus,
                sig2d: self.sig2d_plus,
                sigyd: self.sigyd_plus,
            },
            Side::Minus => Variances {
                sig2y: self.sig2y_minus,
                sig2d: self.sig2d_minus,
                sigyd: self.sigyd_minus,
            },
        }
    }
}

/// One side's conditional variances of `Y` and `D` and their covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variances {
    pub sig2y: f64,
    pub sig2d: f64,
    pub sigyd: f64,
}

pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// `1.84 * sd(x) * n^(-1/5)` over the whole sample.
pub fn pilot_bandwidth(sample: &Sample) -> f64 {
    PILOT_BANDWIDTH_SCALE * std_dev(sample.x()) * (sample.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate of the running variable at the cutoff and
/// of its first derivative, with a Silverman bandwidth for the level and a
/// rate-inflated bandwidth `h_f * n^(1/5 - 1/7)` for the slope.
pub fn estimate_density(sample: &Sample) -> Result<(f64, f64)> {
    let n = sample.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "density estimation needs n >= 10, got {n}"
        )));
    }
    let sd = std_dev(sample.x());
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("running variable has zero spread".into()));
    }
    let nf = n as f64;
    let h_f = SILVERMAN_SCALE * sd * nf.powf(-0.2);
    let h_d = h_f * nf.powf(0.2 - 1.0 / 7.0);
    let c = sample.cutoff();
    let norm = 1.0 / (2.0 * PI).sqrt();

    let mut level = 0.0;
    let mut slope = 0.0;
    for &x in sample.x() {
        let u = (c - x) / h_f;
        level += (-0.5 * u * u).exp();
        let w = (c - x) / h_d;
        slope += -w * (-0.5 * w * w).exp();
    }
    let f = norm * level / (nf * h_f);
    let f1 = norm * slope / (nf * h_d * h_d);
    Ok((f, f1))
}

/// Second and third derivatives at the cutoff from a global quartic fitted by
/// ordinary least squares to every observation on `side`.
pub fn estimate_derivatives(sample: &Sample, response: Response, side: Side) -> Result<(f64, f64)> {
    let c = sample.cutoff();
    let idx = sample.side_indices(side);
    if idx.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "quartic pilot on the {} side needs 6 observations, got {}",
            side.name(),
            idx.len()
        )));
    }
    let resp = sample.response(response);
    let xs: Vec<f64> = idx.iter().map(|&i| sample.x()[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| resp[i]).collect();
    let ws = vec![1.0; xs.len()];
    let scale = xs.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
    let b = weighted_poly_fit(&xs, &ys, &ws, c, scale, 4)?;
    Ok((2.0 * b[2], 6.0 * b[3]))
}

/// Residual variances and covariance of `Y` and `D` from local linear fits on
/// one side with bandwidth `1.84 * sd(x_side) * n_side^(-1/5)`.
pub fn estimate_variances(sample: &Sample, side: Side, kernel: KernelSpec) -> Result<Variances> {
    let c = sample.cutoff();
    let idx = sample.side_indices(side);
    if idx.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "variance pilot on the {} side needs 10 observations, got {}",
            side.name(),
            idx.len()
        )));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| sample.x()[i]).collect();
    let h_v = PILOT_BANDWIDTH_SCALE * std_dev(&xs) * (xs.len() as f64).powf(-0.2);
    if !(h_v > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "no spread in x on the {} side",
            side.name()
        )));
    }
    let fit_y = fit_boundary(sample, Response::Y, side, h_v, 1, kernel)?;
    let fit_d = fit_boundary(sample, Response::D, side, h_v, 1, kernel)?;

    let (mut syy, mut sdd, mut syd) = (0.0, 0.0, 0.0);
    let mut count = 0usize;
    for &i in &idx {
        let x = sample.x()[i];
        if kernel.eval((x - c) / h_v) <= 0.0 {
            continue;
        }
        let ey = sample.y()[i] - fit_y.predict(x, c);
        let ed = sample.d()[i] - fit_d.predict(x, c);
        syy += ey * ey;
        sdd += ed * ed;
        syd += ey * ed;
        count += 1;
    }
    if count < 4 {
        return Err(Error::InsufficientData(format!(
            "{count} positive-weight observations for the {} variance pilot",
            side.name()
        )));
    }
    let dof = (count - 2) as f64;
    let sig2y = syy / dof;
    let mut sig2d = sdd / dof;
    let mut sigyd = syd / dof;
    if sig2d < SHARP_VARIANCE_FLOOR {
        sig2d = 0.0;
        sigyd = 0.0;
    }
    let bound = (sig2y * sig2d).sqrt();
    if sigyd.abs() > bound {
        sigyd = bound.copysign(sigyd);
    }
    Ok(Variances { sig2y, sig2d, sigyd })
}

/// Jump in the treatment probability at the cutoff from local linear fits on
/// both sides with the pilot bandwidth.
pub fn estimate_tau_d(sample: &Sample, kernel: KernelSpec) -> Result<f64> {
    let h = pilot_bandwidth(sample);
    jump(sample, Response::D, h, kernel).and_then(|t| {
        if t.abs() < WEAK_DISCONTINUITY {
            Err(Error::WeakDiscontinuity(t.abs()))
        } else {
            Ok(t)
        }
    })
}

fn jump(sample: &Sample, response: Response, h: f64, kernel: KernelSpec) -> Result<f64> {
    let plus = fit_boundary(sample, response, Side::Plus, h, 1, kernel)?.level();
    let minus = fit_boundary(sample, response, Side::Minus, h, 1, kernel)?.level();
    Ok(plus - minus)
}

/// Run every pilot estimator on `sample`.
pub fn assemble_pilots(sample: &Sample, kernel: KernelSpec) -> Result<PilotEstimates> {
    let (f, f1) = estimate_density(sample)?;
    let (m2y_plus, m3y_plus) = estimate_derivatives(sample, Response::Y, Side::Plus)?;
    let (m2y_minus, m3y_minus) = estimate_derivatives(sample, Response::Y, Side::Minus)?;
    let (m2d_plus, m3d_plus) = estimate_derivatives(sample, Response::D, Side::Plus)?;
    let (m2d_minus, m3d_minus) = estimate_derivatives(sample, Response::D, Side::Minus)?;
    let vp = estimate_variances(sample, Side::Plus, kernel)?;
    let vm = estimate_variances(sample, Side::Minus, kernel)?;
    let tau_d = estimate_tau_d(sample, kernel)?;
    let tau_y = jump(sample, Response::Y, pilot_bandwidth(sample), kernel)?;
    Ok(PilotEstimates {
        f,
        f1,
        m2y_plus,
        m2y_minus,
        m3y_plus,
        m3y_minus,
        m2d_plus,
        m2d_minus,
        m3d_plus,
        m3d_minus,
        sig2y_plus: vp.sig2y,
        sig2y_minus: vm.sig2y,
        sig2d_plus: vp.sig2d,
        sig2d_minus: vm.sig2d,
        sigyd_plus: vp.sigyd,
        sigyd_minus: vm.sigyd,
        tau_d,
        tau: tau_y / tau_d,
    })
}
