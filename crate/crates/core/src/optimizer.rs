//! The leakage-constrained search for the obfuscating channel with the
//! smallest asymptotic KRCC.
//!
//! Minimizing the KRCC under a leakage budget is the same as minimizing the
//! correlation of the limiting Gaussian pair. The correlation increases in
//! each flip probability separately, so the budget is always spent: the
//! optimum lies on the curve `leakage(p1, p2) = epsilon`. The solver walks
//! that curve on a grid of `p1` (solving for `p2` by bisection) and then
//! refines the best cell by golden-section search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{covariance_from_mechanism, orthant_from_rho};
use crate::prob::{
    binary_entropy_inverse, check_prob, joint_y_f, mutual_information, BinaryChannel, BinaryDist,
};
use crate::scalar::Scalar;
use crate::search::{bisect, golden_min};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig<T> {
    /// Leakage budget in bits.
    pub epsilon: T,
    /// Number of `p1` samples along the constraint curve.
    pub grid_resolution: usize,
    /// Tolerance on the achieved leakage and on correlation ties.
    pub tolerance: T,
    /// Restrict the search to symmetric channels `p1 = p2`.
    pub symmetric_only: bool,
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn new(epsilon: T) -> Self {
        Self {
            epsilon,
            grid_resolution: 400,
            tolerance: T::lit(1e-9),
            symmetric_only: false,
        }
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric_only = true;
        self
    }

    pub fn with_grid(mut self, grid_resolution: usize) -> Self {
        self.grid_resolution = grid_resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= T::zero()) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.grid_resolution < 16 {
            return Err(Error::Config(format!(
                "grid_resolution must be >= 16, got {}",
                self.grid_resolution
            )));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::Config(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Result of [`optimal_channel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalChannel<T> {
    pub channel: BinaryChannel<T>,
    /// Leakage actually achieved by `channel`.
    pub leakage: T,
    pub rho: T,
    /// Asymptotic KRCC of `channel`.
    pub delta: T,
    /// False when the budget exceeds what the noiseless channel leaks, in
    /// which case the noiseless channel is returned.
    pub constraint_active: bool,
}

/// `(p1 + p2 - 1)^2 / (P_Y(0) P_Y(1))`, the squared-correlation objective up
/// to the positive factor `P_X(0) P_X(1)`.
pub fn correlation_objective<T: Scalar>(px: &BinaryDist<T>, p1: T, p2: T) -> Result<T> {
    let p1 = check_prob("p1", p1)?;
    let p2 = check_prob("p2", p2)?;
    let py0 = (T::one() - p1) * px.p_zero() + p2 * px.p_one();
    let py1 = p1 * px.p_zero() + (T::one() - p2) * px.p_one();
    if py0 <= T::zero() || py1 <= T::zero() {
        return Err(Error::Degenerate(format!(
            "objective denominator vanishes at (p1, p2) = ({p1}, {p2})"
        )));
    }
    let a = p1 + p2 - T::one();
    Ok(a * a / (py0 * py1))
}

/// Determinant of the Hessian of `(a - 1)^2 / (1 - b^2)`, the objective in
/// the coordinates `a = p1 + p2`, `b = 2 P_X(0) p1 - 2 P_X(1) p2 + 1 - 2 P_X(0)`.
pub fn hessian_check<T: Scalar>(a: T, b: T) -> Result<T> {
    if !(b.abs() < T::one()) {
        return Err(Error::domain("b", b.as_f64(), "(-1, 1)"));
    }
    let am1 = a - T::one();
    let w = T::one() - b * b;
    Ok(T::lit(4.0) * am1 * am1 * w / w.powi(4))
}

/// Symmetric crossover `p = (h_b^{-1}(1 - epsilon) - q) / (1 - 2q)` for a
/// uniform source and `BSC(q)` query noise, clamped to `[0, 1/2]`.
pub fn symmetric_closed_form<T: Scalar>(q: T, epsilon: T) -> Result<T> {
    if !(q >= T::zero() && q < T::lit(0.5)) {
        return Err(Error::domain("q", q.as_f64(), "[0, 1/2)"));
    }
    if !(epsilon >= T::zero() && epsilon <= T::one()) {
        return Err(Error::domain("epsilon", epsilon.as_f64(), "[0, 1]"));
    }
    let x = binary_entropy_inverse(T::one() - epsilon)?;
    let p = (x - q) / (T::one() - T::lit(2.0) * q);
    Ok(p.max(T::zero()).min(T::lit(0.5)))
}

/// Leakage with no degeneracy error: a constant release leaks nothing.
fn leak<T: Scalar>(px: &BinaryDist<T>, p1: T, p2: T, query: &BinaryChannel<T>) -> T {
    let obf = BinaryChannel::new(p1, p2).unwrap_or_else(|_| BinaryChannel::noiseless());
    mutual_information(&joint_y_f(px, &obf, query))
}

/// Correlation of the limiting pair, or `+inf` when the release is constant.
fn correlation<T: Scalar>(px: &BinaryDist<T>, p1: T, p2: T) -> T {
    match BinaryChannel::new(p1, p2) {
        Ok(obf) => covariance_from_mechanism(px, &obf)
            .rho()
            .unwrap_or(T::infinity()),
        Err(_) => T::infinity(),
    }
}

#[derive(Clone, Copy)]
struct CurvePoint<T> {
    p1: T,
    p2: T,
    rho: T,
}

fn better<T: Scalar>(a: &CurvePoint<T>, b: &CurvePoint<T>, tol: T) -> bool {
    if a.rho < b.rho - tol {
        return true;
    }
    if a.rho > b.rho + tol {
        return false;
    }
    let (sa, sb) = (a.p1 + a.p2, b.p1 + b.p2);
    if sa != sb {
        return sa < sb;
    }
    a.p1 < b.p1
}

/// Channel minimizing the asymptotic KRCC subject to leakage `= epsilon`
/// (with `p1 + p2 <= 1`).
pub fn optimal_channel<T: Scalar>(
    px: &BinaryDist<T>,
    query: &BinaryChannel<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimalChannel<T>> {
    cfg.validate()?;
    if px.is_degenerate() {
        return Err(Error::Degenerate("source law is a point mass".to_string()));
    }
    let eps = cfg.epsilon;
    let tol = cfg.tolerance;
    let ceiling = leak(px, T::zero(), T::zero(), query);

    if eps >= ceiling {
        let channel = BinaryChannel::noiseless();
        return finish(px, query, channel, false);
    }
    if eps <= T::zero() {
        // Any channel with p1 + p2 = 1 releases data independent of the
        // source; the symmetric one is returned.
        let half = T::lit(0.5);
        return finish(px, query, BinaryChannel::new(half, half)?, true);
    }

    let point = if cfg.symmetric_only {
        symmetric_solution(px, query, eps)
    } else {
        general_solution(px, query, eps, cfg.grid_resolution, tol)?
    };
    let channel = BinaryChannel::new(point.p1, point.p2)?;
    let out = finish(px, query, channel, true)?;
    if (out.leakage - eps).abs() > tol.max(T::epsilon() * T::lit(64.0)) {
        return Err(Error::Infeasible(format!(
            "constraint curve solve missed the budget: leakage {} vs epsilon {}",
            out.leakage, eps
        )));
    }
    Ok(out)
}

fn finish<T: Scalar>(
    px: &BinaryDist<T>,
    query: &BinaryChannel<T>,
    channel: BinaryChannel<T>,
    constraint_active: bool,
) -> Result<OptimalChannel<T>> {
    let rho = covariance_from_mechanism(px, &channel).rho()?;
    Ok(OptimalChannel {
        channel,
        leakage: leak(px, channel.p1(), channel.p2(), query),
        rho,
        delta: orthant_from_rho(rho),
        constraint_active,
    })
}

fn symmetric_solution<T: Scalar>(
    px: &BinaryDist<T>,
    query: &BinaryChannel<T>,
    eps: T,
) -> CurvePoint<T> {
    let p = bisect(T::zero(), T::lit(0.5), |p| leak(px, p, p, query) - eps);
    CurvePoint {
        p1: p,
        p2: p,
        rho: correlation(px, p, p),
    }
}

/// `p2` on the constraint curve at this `p1`, if the curve crosses it.
fn curve_p2<T: Scalar>(px: &BinaryDist<T>, query: &BinaryChannel<T>, eps: T, p1: T) -> Option<T> {
    let hi = T::one() - p1;
    if leak(px, p1, T::zero(), query) < eps || hi <= T::zero() {
        return None;
    }
    Some(bisect(T::zero(), hi, |p2| leak(px, p1, p2, query) - eps))
}

fn general_solution<T: Scalar>(
    px: &BinaryDist<T>,
    query: &BinaryChannel<T>,
    eps: T,
    resolution: usize,
    tol: T,
) -> Result<CurvePoint<T>> {
    let step = T::one() / T::from_usize(resolution).unwrap();
    let samples: Vec<Option<CurvePoint<T>>> = (0..resolution)
        .map(|i| {
            let p1 = T::from_usize(i).unwrap() * step;
            curve_p2(px, query, eps, p1).map(|p2| CurvePoint {
                p1,
                p2,
                rho: correlation(px, p1, p2),
            })
        })
        .collect();

    let mut best: Option<(usize, CurvePoint<T>)> = None;
    for (i, s) in samples.iter().enumerate() {
        if let Some(s) = s {
            if best.is_none_or(|(_, b)| better(s, &b, tol)) {
                best = Some((i, *s));
            }
        }
    }
    let (idx, grid_best) = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no channel with p1 + p2 <= 1 leaks exactly {eps} bits"
        ))
    })?;

    let lo = T::from_usize(idx.saturating_sub(1)).unwrap() * step;
    let hi = (T::from_usize(idx + 1).unwrap() * step).min(T::one());
    let along_curve = |p1: T| match curve_p2(px, query, eps, p1) {
        Some(p2) => correlation(px, p1, p2),
        None => T::infinity(),
    };
    let (p1, rho) = golden_min(lo, hi, T::lit(1e-12), along_curve);
    let refined = curve_p2(px, query, eps, p1).map(|p2| CurvePoint { p1, p2, rho });
    Ok(match refined {
        Some(r) if r.rho < grid_best.rho => r,
        _ => grid_best,
    })
}
