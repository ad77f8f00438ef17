//! Exact probability algebra on the binary alphabet `{0, 1}`.
//!
//! All information quantities are in bits and use the `0 log 0 = 0`
//! convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{xlog2x, Scalar};
use crate::search::{bisect, golden_max};

/// Clamps `x` into `[0, 1]` when it is within the round-off slack, rejects it
/// otherwise.
pub(crate) fn check_prob<T: Scalar>(name: &'static str, x: T) -> Result<T> {
    let slack = T::prob_slack();
    if x.is_nan() || x < -slack || x > T::one() + slack {
        return Err(Error::domain(name, x.as_f64(), "[0, 1]"));
    }
    Ok(x.max(T::zero()).min(T::one()))
}

fn sum_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
}

/// A probability mass on `{0, 1}`, stored as the mass of symbol 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryDist<T> {
    p_one: T,
}

impl<T: Scalar> BinaryDist<T> {
    pub fn new(p_one: T) -> Result<Self> {
        Ok(Self {
            p_one: check_prob("p_one", p_one)?,
        })
    }

    pub fn uniform() -> Self {
        Self { p_one: T::lit(0.5) }
    }

    /// Point mass on `symbol`.
    pub fn point(symbol: u8) -> Self {
        Self {
            p_one: if symbol == 0 { T::zero() } else { T::one() },
        }
    }

    pub fn p_one(&self) -> T {
        self.p_one
    }

    pub fn p_zero(&self) -> T {
        T::one() - self.p_one
    }

    pub fn mass(&self, symbol: u8) -> T {
        if symbol == 0 {
            self.p_zero()
        } else {
            self.p_one
        }
    }

    /// True when one symbol carries all the mass.
    pub fn is_degenerate(&self) -> bool {
        self.p_one <= T::zero() || self.p_one >= T::one()
    }
}

/// Conditional law of a binary output given a binary input.
///
/// `p1` is `P(out = 1 | in = 0)` and `p2` is `P(out = 0 | in = 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryChannel<T> {
    p1: T,
    p2: T,
}

impl<T: Scalar> BinaryChannel<T> {
    pub fn new(p1: T, p2: T) -> Result<Self> {
        Ok(Self {
            p1: check_prob("p1", p1)?,
            p2: check_prob("p2", p2)?,
        })
    }

    /// Binary symmetric channel with crossover `c`.
    pub fn bsc(c: T) -> Result<Self> {
        Self::new(c, c)
    }

    pub fn noiseless() -> Self {
        Self {
            p1: T::zero(),
            p2: T::zero(),
        }
    }

    pub fn p1(&self) -> T {
        self.p1
    }

    pub fn p2(&self) -> T {
        self.p2
    }

    /// `P(out = output | in = input)`.
    pub fn transition(&self, input: u8, output: u8) -> T {
        match (input, output) {
            (0, 0) => T::one() - self.p1,
            (0, _) => self.p1,
            (_, 0) => self.p2,
            _ => T::one() - self.p2,
        }
    }

    /// Output law for the given input law.
    pub fn output(&self, input: &BinaryDist<T>) -> BinaryDist<T> {
        let p_one = input.p_zero() * self.p1 + input.p_one() * (T::one() - self.p2);
        BinaryDist {
            p_one: p_one.max(T::zero()).min(T::one()),
        }
    }
}

/// Joint law of two binary symbols; `pab` is `P(first = a, second = b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointBinary<T> {
    pub p00: T,
    pub p01: T,
    pub p10: T,
    pub p11: T,
}

impl<T: Scalar> JointBinary<T> {
    pub fn new(p00: T, p01: T, p10: T, p11: T) -> Result<Self> {
        let entries = [p00, p01, p10, p11];
        if entries.iter().any(|p| p.is_nan() || *p < T::zero()) {
            return Err(Error::Degenerate(
                "joint law has a negative entry".to_string(),
            ));
        }
        let total = p00 + p01 + p10 + p11;
        if (total - T::one()).abs() > sum_tolerance::<T>() {
            return Err(Error::domain("joint mass", total.as_f64(), "sum = 1"));
        }
        Ok(Self { p00, p01, p10, p11 })
    }

    pub fn get(&self, first: u8, second: u8) -> T {
        match (first, second) {
            (0, 0) => self.p00,
            (0, _) => self.p01,
            (_, 0) => self.p10,
            _ => self.p11,
        }
    }

    pub fn first(&self) -> BinaryDist<T> {
        BinaryDist {
            p_one: (self.p10 + self.p11).max(T::zero()).min(T::one()),
        }
    }

    pub fn second(&self) -> BinaryDist<T> {
        BinaryDist {
            p_one: (self.p01 + self.p11).max(T::zero()).min(T::one()),
        }
    }

    /// Probability that both symbols agree.
    pub fn agreement(&self) -> T {
        self.p00 + self.p11
    }
}

/// `h_b(x) = -x log2 x - (1 - x) log2 (1 - x)`.
pub fn binary_entropy<T: Scalar>(x: T) -> Result<T> {
    let x = check_prob("x", x)?;
    Ok(-(xlog2x(x) + xlog2x(T::one() - x)))
}

/// Inverse of [`binary_entropy`] on the branch `[0, 1/2]`, by bisection.
pub fn binary_entropy_inverse<T: Scalar>(h: T) -> Result<T> {
    let h = check_prob("h", h)?;
    if h <= T::zero() {
        return Ok(T::zero());
    }
    if h >= T::one() {
        return Ok(T::lit(0.5));
    }
    Ok(bisect(T::zero(), T::lit(0.5), |x| {
        -(xlog2x(x) + xlog2x(T::one() - x)) - h
    }))
}

/// Joint law of `(source, channel output)`.
pub fn join<T: Scalar>(source: &BinaryDist<T>, channel: &BinaryChannel<T>) -> JointBinary<T> {
    let (p0, p1) = (source.p_zero(), source.p_one());
    JointBinary {
        p00: p0 * channel.transition(0, 0),
        p01: p0 * channel.transition(0, 1),
        p10: p1 * channel.transition(1, 0),
        p11: p1 * channel.transition(1, 1),
    }
}

/// Mutual information between the two coordinates of `joint`, in bits.
pub fn mutual_information<T: Scalar>(joint: &JointBinary<T>) -> T {
    let first = joint.first();
    let second = joint.second();
    let mut total = T::zero();
    for a in 0..2u8 {
        for b in 0..2u8 {
            let p = joint.get(a, b);
            if p <= T::zero() {
                continue;
            }
            let product = first.mass(a) * second.mass(b);
            total = total + p * (p / product).log2();
        }
    }
    total.max(T::zero())
}

/// Joint law of `(Y, F)` where `Y` and `F` are both produced from one `X`
/// through `obf` and `query` respectively, independently given `X`.
pub fn joint_y_f<T: Scalar>(
    px: &BinaryDist<T>,
    obf: &BinaryChannel<T>,
    query: &BinaryChannel<T>,
) -> JointBinary<T> {
    let mut cells = [[T::zero(); 2]; 2];
    for x in 0..2u8 {
        for y in 0..2u8 {
            for f in 0..2u8 {
                cells[y as usize][f as usize] = cells[y as usize][f as usize]
                    + px.mass(x) * obf.transition(x, y) * query.transition(x, f);
            }
        }
    }
    JointBinary {
        p00: cells[0][0],
        p01: cells[0][1],
        p10: cells[1][0],
        p11: cells[1][1],
    }
}

/// Returns the law of `Y` and the induced channel `P(F | Y)` for the chain
/// `F <- X -> Y`.
pub fn compose_f_given_y<T: Scalar>(
    px: &BinaryDist<T>,
    obf: &BinaryChannel<T>,
    query: &BinaryChannel<T>,
) -> Result<(BinaryDist<T>, BinaryChannel<T>)> {
    let joint = joint_y_f(px, obf, query);
    let py = joint.first();
    for symbol in 0..2u8 {
        if py.mass(symbol) <= T::zero() {
            return Err(Error::DeadSymbol { symbol });
        }
    }
    let p1 = joint.p01 / py.p_zero();
    let p2 = joint.p10 / py.p_one();
    Ok((
        py,
        BinaryChannel {
            p1: p1.max(T::zero()).min(T::one()),
            p2: p2.max(T::zero()).min(T::one()),
        },
    ))
}

/// Capacity of `channel` in bits: the maximum of the mutual information over
/// input laws, found by golden-section search on the input probability.
pub fn capacity<T: Scalar>(channel: &BinaryChannel<T>) -> T {
    let tol = T::lit(1e-10);
    let (_, best) = golden_max(T::zero(), T::one(), tol, |p| {
        let input = BinaryDist { p_one: p };
        mutual_information(&join(&input, channel))
    });
    best
}

/// Input probability of symbol 1 attaining [`capacity`].
pub fn capacity_achieving_input<T: Scalar>(channel: &BinaryChannel<T>) -> BinaryDist<T> {
    let tol = T::lit(1e-10);
    let (p, _) = golden_max(T::zero(), T::one(), tol, |p| {
        let input = BinaryDist { p_one: p };
        mutual_information(&join(&input, channel))
    });
    BinaryDist { p_one: p }
}
