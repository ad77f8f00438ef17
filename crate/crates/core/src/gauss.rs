//! Gaussian limit of the degree comparison and the asymptotic KRCC.
//!
//! For large entry length the pair (row-0 minus row-1 degree in the original
//! data, row-1 minus row-0 degree in the released data), scaled by `1/sqrt(m)`,
//! is a zero-mean bivariate Gaussian whose covariance depends only on the
//! source law and the obfuscating channel. The expected KRCC is the mass of
//! its negative quadrant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{BinaryChannel, BinaryDist};
use crate::scalar::Scalar;

/// Covariance of the limiting Gaussian pair `(N1, N2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussCov<T> {
    pub s11: T,
    pub s22: T,
    pub s12: T,
}

impl<T: Scalar> GaussCov<T> {
    pub fn new(s11: T, s22: T, s12: T) -> Result<Self> {
        if !(s11 >= T::zero()) || !(s22 >= T::zero()) {
            return Err(Error::Degenerate(format!(
                "negative variance ({}, {})",
                s11, s22
            )));
        }
        let bound = (s11 * s22).sqrt() + T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        if !(s12.abs() <= bound) {
            return Err(Error::Degenerate(format!(
                "covariance {} violates Cauchy-Schwarz bound {}",
                s12, bound
            )));
        }
        Ok(Self { s11, s22, s12 })
    }

    /// Correlation coefficient, clamped to `[-1, 1]`.
    pub fn rho(&self) -> Result<T> {
        if self.s11 <= T::zero() || self.s22 <= T::zero() {
            return Err(Error::Degenerate(
                "constant degree marginal; rank comparison undefined".to_string(),
            ));
        }
        let rho = self.s12 / (self.s11 * self.s22).sqrt();
        Ok(rho.max(-T::one()).min(T::one()))
    }

    /// Gershgorin lower bound on the smallest eigenvalue.
    pub fn lambda_star(&self) -> T {
        (self.s11 - self.s12.abs()).min(self.s22 - self.s12.abs())
    }
}

/// Covariance of the limiting pair for source `px` released through `obf`:
/// `s11 = 2 P_X(0) P_X(1)`, `s22 = 2 P_Y(0) P_Y(1)`,
/// `s12 = 2 P_X(1) (P_Y(1) - P_{Y|X}(1|1))`.
pub fn covariance_from_mechanism<T: Scalar>(
    px: &BinaryDist<T>,
    obf: &BinaryChannel<T>,
) -> GaussCov<T> {
    let two = T::lit(2.0);
    let py = obf.output(px);
    GaussCov {
        s11: two * px.p_zero() * px.p_one(),
        s22: two * py.p_zero() * py.p_one(),
        s12: two * px.p_one() * (py.p_one() - obf.transition(1, 1)),
    }
}

/// `P(N1 <= 0, N2 <= 0)` for a zero-mean Gaussian pair, via the quadrant
/// identity `1/4 + asin(rho) / (2 pi)`.
pub fn orthant_probability<T: Scalar>(cov: &GaussCov<T>) -> Result<T> {
    Ok(orthant_from_rho(cov.rho()?))
}

/// Quadrant mass as a function of the correlation alone.
pub fn orthant_from_rho<T: Scalar>(rho: T) -> T {
    let rho = rho.max(-T::one()).min(T::one());
    let q = T::lit(0.25) + rho.asin() / (T::lit(2.0) * T::PI());
    q.max(T::zero()).min(T::lit(0.5))
}

/// Expected KRCC of a single-letter mechanism as the entry length grows.
pub fn asymptotic_krcc<T: Scalar>(px: &BinaryDist<T>, obf: &BinaryChannel<T>) -> Result<T> {
    if px.is_degenerate() {
        return Err(Error::Degenerate("source law is a point mass".to_string()));
    }
    if obf.output(px).is_degenerate() {
        return Err(Error::Degenerate(
            "released law is a point mass".to_string(),
        ));
    }
    orthant_probability(&covariance_from_mechanism(px, obf))
}
