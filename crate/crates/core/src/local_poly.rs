//! One-sided kernel-weighted polynomial regression at the cutoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::sample::{Response, Sample, Side};

/// Smallest-to-largest singular value ratio below which a design is singular.
pub const SINGULAR_RATIO: f64 = 1e-10;

/// Result of a boundary fit. `coefficients[k]` estimates `m^(k)(c) / k!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFit {
    pub coefficients: Vec<f64>,
    pub side: Side,
    pub h: f64,
    pub effective_n: usize,
}

impl BoundaryFit {
    /// Fitted value at the cutoff.
    pub fn level(&self) -> f64 {
        self.coefficients[0]
    }

    /// Fitted polynomial evaluated at `x`.
    pub fn predict(&self, x: f64, cutoff: f64) -> f64 {
        let t = x - cutoff;
        self.coefficients.iter().rev().fold(0.0, |acc, &b| acc * t + b)
    }
}

/// Weighted least squares of `ys` on `(1, (x-c), ..., (x-c)^order)`.
///
/// Columns are built in the scaled variable `(x-c)/scale` and mapped back, so
/// conditioning does not depend on the units of `x`. Rows with zero weight
/// are dropped before the factorization.
pub fn weighted_poly_fit(
    xs: &[f64],
    ys: &[f64],
    ws: &[f64],
    cutoff: f64,
    scale: f64,
    order: usize,
) -> Result<Vec<f64>> {
    debug_assert!(xs.len() == ys.len() && xs.len() == ws.len());
    let p = order + 1;
    let rows: Vec<usize> = (0..xs.len()).filter(|&i| ws[i] > 0.0).collect();

    let mut distinct: Vec<f64> = rows.iter().map(|&i| xs[i]).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < p {
        return Err(Error::SingularDesign(format!(
            "{} distinct positive-weight x values for {p} coefficients",
            distinct.len()
        )));
    }

    let m = rows.len();
    let mut a = DMatrix::<f64>::zeros(m, p);
    let mut b = DVector::<f64>::zeros(m);
    for (r, &i) in rows.iter().enumerate() {
        let sw = ws[i].sqrt();
        let u = (xs[i] - cutoff) / scale;
        let mut pow = sw;
        for k in 0..p {
            a[(r, k)] = pow;
            pow *= u;
        }
        b[r] = sw * ys[i];
    }

    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin < SINGULAR_RATIO * smax {
        return Err(Error::SingularDesign(format!(
            "condition ratio {:.3e} below {SINGULAR_RATIO:e}",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::SingularDesign(e.to_string()))?;

    let mut out = Vec::with_capacity(p);
    let mut s = 1.0;
    for k in 0..p {
        out.push(sol[k] / s);
        s *= scale;
    }
    Ok(out)
}

/// Kernel-weighted polynomial fit of `response` on one side of the cutoff
/// with bandwidth `h`. Plus uses `x >= c`, minus uses `x < c`.
pub fn fit_boundary(
    sample: &Sample,
    response: Response,
    side: Side,
    h: f64,
    order: usize,
    kernel: KernelSpec,
) -> Result<BoundaryFit> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    if order < 1 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let c = sample.cutoff();
    let resp = sample.response(response);
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    let mut on_side = 0usize;
    for (i, &x) in sample.x().iter().enumerate() {
        if !side.contains(x, c) {
            continue;
        }
        on_side += 1;
        let w = kernel.eval((x - c) / h);
        if w > 0.0 {
            xs.push(x);
            ys.push(resp[i]);
            ws.push(w);
        }
    }
    if on_side == 0 {
        return Err(Error::EmptySide(side.name()));
    }
    let coefficients = weighted_poly_fit(&xs, &ys, &ws, c, h, order)?;
    Ok(BoundaryFit {
        coefficients,
        side,
        h,
        effective_n: xs.len(),
    })
}

/// Local linear estimate of the one-sided limit of `response` at the cutoff.
pub fn estimate_level(
    sample: &Sample,
    response: Response,
    side: Side,
    h: f64,
    kernel: KernelSpec,
) -> Result<f64> {
    fit_boundary(sample, response, side, h, 1, kernel).map(|f| f.level())
}
