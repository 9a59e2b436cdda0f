//! Boundary kernels and the one-sided moment constants that drive the
//! local linear bias and variance expansions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    #[default]
    Triangular,
    Uniform,
    Epanechnikov,
}

impl KernelSpec {
    pub const ALL: [KernelSpec; 3] = [
        KernelSpec::Triangular,
        KernelSpec::Uniform,
        KernelSpec::Epanechnikov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelSpec::Triangular => "triangular",
            KernelSpec::Uniform => "uniform",
            KernelSpec::Epanechnikov => "epanechnikov",
        }
    }

    /// Kernel weight `K(u)`; zero outside `[-1, 1]`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        let a = u.abs();
        if !(a <= 1.0) {
            return 0.0;
        }
        match self {
            KernelSpec::Triangular => 1.0 - a,
            KernelSpec::Uniform => 0.5,
            KernelSpec::Epanechnikov => 0.75 * (1.0 - u * u),
        }
    }

    /// Closed-form one-sided moments `∫_0^1 u^j K(u) du` for j = 0..=4.
    fn mu(self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (j, m) in out.iter_mut().enumerate() {
            let j = j as f64;
            *m = match self {
                // ∫ u^j (1-u) = 1/(j+1) - 1/(j+2)
                KernelSpec::Triangular => 1.0 / (j + 1.0) - 1.0 / (j + 2.0),
                KernelSpec::Uniform => 0.5 / (j + 1.0),
                KernelSpec::Epanechnikov => 0.75 * (1.0 / (j + 1.0) - 1.0 / (j + 3.0)),
            };
        }
        out
    }

    /// Closed-form one-sided moments `∫_0^1 u^j K(u)^2 du` for j = 0..=2.
    fn nu(self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, m) in out.iter_mut().enumerate() {
            let j = j as f64;
            *m = match self {
                // (1-u)^2 = 1 - 2u + u^2
                KernelSpec::Triangular => 1.0 / (j + 1.0) - 2.0 / (j + 2.0) + 1.0 / (j + 3.0),
                KernelSpec::Uniform => 0.25 / (j + 1.0),
                // (1-u^2)^2 = 1 - 2u^2 + u^4
                KernelSpec::Epanechnikov => {
                    0.5625 * (1.0 / (j + 1.0) - 2.0 / (j + 3.0) + 1.0 / (j + 5.0))
                }
            };
        }
        out
    }

    pub fn moments(self) -> KernelMoments {
        KernelMoments::from_raw(self.mu(), self.nu())
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "triangular" => Ok(KernelSpec::Triangular),
            "uniform" => Ok(KernelSpec::Uniform),
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            other => Err(Error::InvalidArgument(format!("unknown kernel '{other}'"))),
        }
    }
}

/// `K(u)` for the given family.
pub fn eval_kernel(spec: KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

/// One-sided moments of `spec` together with the derived constants.
pub fn compute_moments(spec: KernelSpec) -> KernelMoments {
    spec.moments()
}

/// One-sided kernel moments and the constants built from them.
///
/// `c1` is the leading boundary bias constant, `v` the variance constant and
/// `xi1`, `xi2` enter the second-order (cubic) bias term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMoments {
    pub mu: [f64; 5],
    pub nu: [f64; 3],
    pub c1: f64,
    pub v: f64,
    pub xi1: f64,
    pub xi2: f64,
}

impl KernelMoments {
    /// Derive the constants from raw moments.
    pub fn from_raw(mu: [f64; 5], nu: [f64; 3]) -> Self {
        let [m0, m1, m2, m3, m4] = mu;
        let [n0, n1, n2] = nu;
        let det = m0 * m2 - m1 * m1;
        let c1 = (m2 * m2 - m1 * m3) / (2.0 * det);
        let v = (m2 * m2 * n0 - 2.0 * m1 * m2 * n1 + m1 * m1 * n2) / (det * det);
        let xi1 = (m2 * m3 - m1 * m4) / det;
        let xi2 = (m2 * m2 - m1 * m3) * (m0 * m3 - m1 * m2) / (det * det);
        KernelMoments {
            mu,
            nu,
            c1,
            v,
            xi1,
            xi2,
        }
    }

    /// `μ_0 μ_2 − μ_1²`, the shared denominator.
    pub fn det(&self) -> f64 {
        self.mu[0] * self.mu[2] - self.mu[1] * self.mu[1]
    }
}
