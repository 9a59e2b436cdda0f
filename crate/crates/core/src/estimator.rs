//! Local linear point estimates of the ratio (fuzzy) and numerator-only
//! (sharp) discontinuity parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::local_poly::fit_boundary;
use crate::sample::{Response, Sample, Side};

/// Below this `|tau_D|` the ratio is reported as invalid.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrdEstimate {
    pub tau: f64,
    #[serde(rename = "tauY")]
    pub tau_y: f64,
    #[serde(rename = "tauD")]
    pub tau_d: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    pub n_plus: usize,
    pub n_minus: usize,
}

struct Jumps {
    tau_y: f64,
    tau_d: f64,
    n_plus: usize,
    n_minus: usize,
}

fn jumps(sample: &Sample, h_plus: f64, h_minus: f64, kernel: KernelSpec, with_d: bool) -> Result<Jumps> {
    let yp = fit_boundary(sample, Response::Y, Side::Plus, h_plus, 1, kernel)?;
    let ym = fit_boundary(sample, Response::Y, Side::Minus, h_minus, 1, kernel)?;
    let tau_d = if with_d {
        let dp = fit_boundary(sample, Response::D, Side::Plus, h_plus, 1, kernel)?;
        let dm = fit_boundary(sample, Response::D, Side::Minus, h_minus, 1, kernel)?;
        dp.level() - dm.level()
    } else {
        1.0
    };
    Ok(Jumps {
        tau_y: yp.level() - ym.level(),
        tau_d,
        n_plus: yp.effective_n,
        n_minus: ym.effective_n,
    })
}

/// Ratio of the outcome jump to the treatment jump, with `h_plus` used for
/// both fits on the plus side and `h_minus` on the minus side.
pub fn frd_estimate(
    sample: &Sample,
    h_plus: f64,
    h_minus: f64,
    kernel: KernelSpec,
) -> Result<FrdEstimate> {
    let j = jumps(sample, h_plus, h_minus, kernel, true)?;
    if !(j.tau_d.abs() >= DENOMINATOR_FLOOR) {
        return Err(Error::DenominatorNearZero(j.tau_d.abs()));
    }
    Ok(FrdEstimate {
        tau: j.tau_y / j.tau_d,
        tau_y: j.tau_y,
        tau_d: j.tau_d,
        h_plus,
        h_minus,
        n_plus: j.n_plus,
        n_minus: j.n_minus,
    })
}

/// Outcome jump alone (denominator fixed at one).
pub fn sharp_estimate(sample: &Sample, h_plus: f64, h_minus: f64, kernel: KernelSpec) -> Result<f64> {
    jumps(sample, h_plus, h_minus, kernel, false).map(|j| j.tau_y)
}
