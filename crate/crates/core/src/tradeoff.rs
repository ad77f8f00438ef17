//! Privacy-utility points for a fixed obfuscating channel, the finite entry
//! length corrections around them, and region membership.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{asymptotic_krcc, covariance_from_mechanism};
use crate::prob::{
    capacity, compose_f_given_y, join, mutual_information, BinaryChannel, BinaryDist,
};
use crate::scalar::Scalar;

/// Multiplier of the multivariate Berry-Esseen bound: `42 * 2^(1/4) + 16`.
pub fn berry_esseen_constant<T: Scalar>() -> T {
    T::lit(42.0) * T::lit(2.0).powf(T::lit(0.25)) + T::lit(16.0)
}

/// An `(epsilon, delta)` pair: leakage in bits and expected KRCC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint<T> {
    pub epsilon: T,
    pub delta: T,
}

impl<T: Scalar> TradeoffPoint<T> {
    pub fn new(epsilon: T, delta: T) -> Result<Self> {
        if !(epsilon >= T::zero()) {
            return Err(Error::domain("epsilon", epsilon.as_f64(), "[0, inf)"));
        }
        if !(delta >= T::zero() && delta <= T::lit(0.5)) {
            return Err(Error::domain("delta", delta.as_f64(), "[0, 1/2]"));
        }
        Ok(Self { epsilon, delta })
    }
}

/// Dataset dimensions and the resolvability constant entering the finite-m
/// correction terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteMParams<T> {
    /// Number of rows.
    pub n: u64,
    /// Entry length.
    pub m: u64,
    /// Fingerprint length.
    pub q: u64,
    /// Resolvability constant; never derived, always supplied.
    pub b: T,
}

impl<T: Scalar> FiniteMParams<T> {
    pub fn new(n: u64, m: u64, q: u64) -> Self {
        Self {
            n,
            m,
            q,
            b: T::one(),
        }
    }

    pub fn with_b(mut self, b: T) -> Self {
        self.b = b;
        self
    }
}

/// Correction terms around the asymptotic corner for a finite entry length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteMBounds<T> {
    pub lambda_star: T,
    pub theta: T,
    pub gamma: T,
    pub zeta: T,
    /// Berry-Esseen gap on the expected KRCC.
    pub be_slack: T,
    /// Extra leakage allowance of the inner region.
    pub priv_slack: T,
}

impl<T: Scalar> FiniteMBounds<T> {
    /// True when the leakage of the asymptotic corner is exact, i.e. the
    /// channel capacity of `F | Y` does not exceed `log2(n) / q`.
    pub fn leakage_exact(&self) -> bool {
        self.zeta <= T::zero()
    }
}

/// Where a point falls relative to one channel's inner and outer regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    InsideInner,
    InsideOuterOnly,
    Outside,
}

/// Mutual information between the released symbol and a fingerprint symbol.
pub fn leakage<T: Scalar>(
    px: &BinaryDist<T>,
    obf: &BinaryChannel<T>,
    query: &BinaryChannel<T>,
) -> Result<T> {
    let (py, f_given_y) = compose_f_given_y(px, obf, query)?;
    Ok(mutual_information(&join(&py, &f_given_y)))
}

/// The corner `(leakage, asymptotic KRCC)` contributed by `obf`.
pub fn asymptotic_point<T: Scalar>(
    px: &BinaryDist<T>,
    obf: &BinaryChannel<T>,
    query: &BinaryChannel<T>,
) -> Result<TradeoffPoint<T>> {
    Ok(TradeoffPoint {
        epsilon: leakage(px, obf, query)?,
        delta: asymptotic_krcc(px, obf)?,
    })
}

/// Third-moment term
/// `2 P(X = Y) P(X != Y) + 2^(5/2) (P(0,0) P(1,1) + P(0,1) P(1,0))`.
pub fn gamma_term<T: Scalar>(px: &BinaryDist<T>, obf: &BinaryChannel<T>) -> T {
    let j = join(px, obf);
    let agree = j.agreement();
    let disagree = j.p01 + j.p10;
    T::lit(2.0) * agree * disagree + T::lit(2.0).powf(T::lit(2.5)) * (j.p00 * j.p11 + j.p01 * j.p10)
}

pub fn finite_m_bounds<T: Scalar>(
    px: &BinaryDist<T>,
    obf: &BinaryChannel<T>,
    query: &BinaryChannel<T>,
    params: &FiniteMParams<T>,
) -> Result<FiniteMBounds<T>> {
    let FiniteMParams { n, m, q, b } = *params;
    if n == 0 || m == 0 || q == 0 {
        return Err(Error::Config(format!(
            "n, m, q must be at least 1 (got {n}, {m}, {q})"
        )));
    }
    let cov = covariance_from_mechanism(px, obf);
    let lambda_star = cov.lambda_star();
    if !(lambda_star > T::zero()) {
        return Err(Error::Degenerate(format!(
            "Gershgorin eigenvalue bound {} is not positive; finite-m bound is vacuous",
            lambda_star
        )));
    }
    let theta = T::lit(4.0) / lambda_star.sqrt();
    let gamma = gamma_term(px, obf);

    let (_, f_given_y) = compose_f_given_y(px, obf, query)?;
    let resolvable = T::from_u64(n).unwrap().log2() / T::from_u64(q).unwrap();
    let zeta = (capacity(&f_given_y) - resolvable).max(T::zero());

    let m = T::from_u64(m).unwrap();
    let root_m = m.sqrt();
    let be_slack = berry_esseen_constant::<T>() * theta * gamma / root_m;
    let priv_slack = zeta + b * m.log2().powf(T::lit(1.5)) / root_m;

    Ok(FiniteMBounds {
        lambda_star,
        theta,
        gamma,
        zeta,
        be_slack,
        priv_slack,
    })
}

/// Classifies `point` against the inner and outer regions contributed by the
/// channel whose asymptotic corner is `corner`.
pub fn region_membership<T: Scalar>(
    point: &TradeoffPoint<T>,
    corner: &TradeoffPoint<T>,
    bounds: &FiniteMBounds<T>,
) -> Region {
    let inner = point.epsilon >= corner.epsilon + bounds.priv_slack
        && point.delta >= corner.delta + bounds.be_slack;
    if inner {
        return Region::InsideInner;
    }
    let outer = point.epsilon >= corner.epsilon && point.delta >= corner.delta - bounds.be_slack;
    if outer {
        Region::InsideOuterOnly
    } else {
        Region::Outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;
    use approx::assert_abs_diff_eq;

    fn bsc(c: f64) -> BinaryChannel<f64> {
        BinaryChannel::bsc(c).unwrap()
    }

    #[test]
    fn leakage_reference_values() {
        let u = BinaryDist::uniform();
        for q in [0.0, 0.1, 0.3] {
            assert!(leakage(&u, &bsc(0.5), &bsc(q)).unwrap().abs() < 1e-15);
        }
        let l = leakage(&u, &BinaryChannel::noiseless(), &bsc(0.1)).unwrap();
        assert_abs_diff_eq!(l, 1.0 - binary_entropy(0.1).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(l, 0.5310, epsilon = 1e-3);
        let l = leakage(&u, &bsc(0.1), &bsc(0.1)).unwrap();
        assert_abs_diff_eq!(l, 1.0 - binary_entropy(0.18).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(l, 0.3199, epsilon = 1e-3);
    }

    #[test]
    fn leakage_propagates_dead_symbol() {
        let stuck = BinaryChannel::new(1.0, 0.0).unwrap();
        assert!(leakage(&BinaryDist::uniform(), &stuck, &bsc(0.1)).is_err());
    }

    #[test]
    fn asymptotic_point_reference_values() {
        let u = BinaryDist::uniform();
        let p = asymptotic_point(&u, &BinaryChannel::noiseless(), &bsc(0.1)).unwrap();
        assert_abs_diff_eq!(p.epsilon, 0.5310, epsilon = 1e-3);
        assert_eq!(p.delta, 0.0);

        let p = asymptotic_point(&u, &bsc(0.5), &bsc(0.1)).unwrap();
        assert!(p.epsilon.abs() < 1e-15);
        assert_eq!(p.delta, 0.25);

        let p = asymptotic_point(&u, &bsc(0.25), &bsc(0.1)).unwrap();
        assert_abs_diff_eq!(
            p.epsilon,
            1.0 - binary_entropy(0.3).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(p.epsilon, 0.1187, epsilon = 1e-4);
        assert_abs_diff_eq!(p.delta, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn gamma_reference_values() {
        let u = BinaryDist::uniform();
        let g = gamma_term(&u, &bsc(0.1));
        let hand = 0.18 + 2f64.powf(2.5) * (0.45 * 0.45 + 0.05 * 0.05);
        assert_abs_diff_eq!(g, hand, epsilon = 1e-14);
        assert_abs_diff_eq!(g, 1.3397, epsilon = 1e-3);
        assert_abs_diff_eq!(
            gamma_term(&u, &BinaryChannel::noiseless()),
            2f64.sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(gamma_term(&u, &bsc(1.0)), 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn finite_m_reference_values() {
        let u = BinaryDist::uniform();
        let params = FiniteMParams::new(200, 100, 10);
        let b = finite_m_bounds(&u, &bsc(0.1), &bsc(0.1), &params).unwrap();
        assert_abs_diff_eq!(b.lambda_star, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(b.theta, 4.0 / 0.1f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.theta, 12.649, epsilon = 1e-3);

        let b = finite_m_bounds(&u, &bsc(0.5), &bsc(0.1), &params).unwrap();
        assert_abs_diff_eq!(b.lambda_star, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.theta, 5.657, epsilon = 1e-3);
    }

    #[test]
    fn zeta_clamps_when_fingerprint_is_short() {
        // Noiseless obfuscation has lambda* = 0, so exercise zeta through a
        // nearly noiseless channel whose F|Y capacity is just under 0.5310.
        let u = BinaryDist::uniform();
        let params = FiniteMParams::new(200, 100, 10);
        let b = finite_m_bounds(&u, &bsc(1e-6), &bsc(0.1), &params).unwrap();
        assert!(200f64.log2() / 10.0 > 0.5310);
        assert_eq!(b.zeta, 0.0);
        assert!(b.leakage_exact());

        // A long fingerprint makes log2(n)/q small and zeta positive.
        let params = FiniteMParams::new(200, 100, 100);
        let b = finite_m_bounds(&u, &bsc(1e-6), &bsc(0.1), &params).unwrap();
        let cap = 1.0 - binary_entropy(0.1 * (1.0 - 1e-6) + 1e-6 * 0.9).unwrap();
        assert_abs_diff_eq!(b.zeta, cap - 200f64.log2() / 100.0, epsilon = 1e-8);
    }

    #[test]
    fn finite_m_rejects_noiseless_and_zero_sizes() {
        let u = BinaryDist::uniform();
        let err = finite_m_bounds(
            &u,
            &BinaryChannel::noiseless(),
            &bsc(0.1),
            &FiniteMParams::new(200, 100, 10),
        );
        assert!(matches!(err, Err(Error::Degenerate(_))));
        let err = finite_m_bounds(&u, &bsc(0.1), &bsc(0.1), &FiniteMParams::new(200, 0, 10));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn slack_shrinks_at_inverse_root_rate() {
        let u = BinaryDist::uniform();
        let a = finite_m_bounds(
            &u,
            &bsc(0.1),
            &bsc(0.1),
            &FiniteMParams::new(200, 10_000, 10),
        )
        .unwrap();
        let b = finite_m_bounds(
            &u,
            &bsc(0.1),
            &bsc(0.1),
            &FiniteMParams::new(200, 40_000, 10),
        )
        .unwrap();
        assert_abs_diff_eq!(b.be_slack, a.be_slack / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn membership_cases() {
        let zero = FiniteMBounds {
            lambda_star: 0.1,
            theta: 12.0,
            gamma: 1.0,
            zeta: 0.0,
            be_slack: 0.0,
            priv_slack: 0.0,
        };
        let corner = TradeoffPoint::new(0.3, 0.1).unwrap();
        assert_eq!(
            region_membership(&corner, &corner, &zero),
            Region::InsideInner
        );

        let slack = FiniteMBounds {
            be_slack: 0.05,
            priv_slack: 0.02,
            ..zero
        };
        let below = TradeoffPoint::new(0.4, 0.04).unwrap();
        assert_eq!(region_membership(&below, &corner, &slack), Region::Outside);
        let between = TradeoffPoint::new(0.31, 0.1).unwrap();
        assert_eq!(
            region_membership(&between, &corner, &slack),
            Region::InsideOuterOnly
        );
        let left = TradeoffPoint::new(0.29, 0.4).unwrap();
        assert_eq!(region_membership(&left, &corner, &slack), Region::Outside);
    }

    #[test]
    fn membership_at_inner_boundary() {
        let u = BinaryDist::uniform();
        let corner = asymptotic_point(&u, &bsc(0.1), &bsc(0.1)).unwrap();
        assert_abs_diff_eq!(corner.epsilon, 0.3199, epsilon = 1e-3);
        assert_abs_diff_eq!(corner.delta, 0.10242, epsilon = 1e-5);
        let bounds =
            finite_m_bounds(&u, &bsc(0.1), &bsc(0.1), &FiniteMParams::new(200, 100, 10)).unwrap();
        let point = TradeoffPoint {
            epsilon: corner.epsilon + bounds.priv_slack,
            delta: corner.delta + bounds.be_slack,
        };
        assert_eq!(
            region_membership(&point, &corner, &bounds),
            Region::InsideInner
        );
    }

    #[test]
    fn point_validation() {
        assert!(TradeoffPoint::new(-0.1, 0.1).is_err());
        assert!(TradeoffPoint::new(0.1, 0.6).is_err());
        assert!(TradeoffPoint::new(0.0, 0.5).is_ok());
    }
}
