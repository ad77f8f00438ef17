//! Rank obfuscation for binary relational data.
//!
//! Models a dataset of `n` binary entries of length `m`, released through a
//! memoryless obfuscating channel. The crate computes the asymptotic Kendall
//! rank correlation (KRCC) between original and released degree rankings,
//! the mutual-information leakage about a noisy query, the trade-off region
//! between the two, the leakage-constrained channel that hides ranks best,
//! and Monte Carlo simulations of rank shuffling and fingerprint attacks.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the precision.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod gauss;
pub mod optimizer;
pub mod prob;
pub mod scalar;
mod search;
pub mod sim;
pub mod tradeoff;

pub use error::{Error, Result};
pub use gauss::{
    asymptotic_krcc, covariance_from_mechanism, orthant_from_rho, orthant_probability, GaussCov,
};
pub use optimizer::{
    correlation_objective, hessian_check, optimal_channel, symmetric_closed_form, OptimalChannel,
    OptimizerConfig,
};
pub use prob::{
    binary_entropy, binary_entropy_inverse, capacity, capacity_achieving_input, compose_f_given_y,
    join, joint_y_f, mutual_information, BinaryChannel, BinaryDist, JointBinary,
};
pub use scalar::Scalar;
pub use sim::{
    derive_seed, empirical_krcc, fingerprint_attack, generate_dataset, krcc_trials, obfuscate,
    AttackOutcome, AttackPlan, Dataset, Execution, KLetterMechanism, Stream, TieRule, TrialPlan,
    TrialSummary,
};
pub use tradeoff::{
    asymptotic_point, finite_m_bounds, gamma_term, leakage, region_membership, FiniteMBounds,
    FiniteMParams, Region, TradeoffPoint,
};

pub type BinaryDist64 = BinaryDist<f64>;
pub type BinaryChannel64 = BinaryChannel<f64>;
pub type JointBinary64 = JointBinary<f64>;
pub type GaussCov64 = GaussCov<f64>;
pub type TradeoffPoint64 = TradeoffPoint<f64>;
pub type FiniteMParams64 = FiniteMParams<f64>;
pub type FiniteMBounds64 = FiniteMBounds<f64>;
pub type OptimizerConfig64 = OptimizerConfig<f64>;
pub type OptimalChannel64 = OptimalChannel<f64>;
pub type KLetterMechanism64 = KLetterMechanism<f64>;

pub type BinaryDist32 = BinaryDist<f32>;
pub type BinaryChannel32 = BinaryChannel<f32>;
pub type JointBinary32 = JointBinary<f32>;
pub type GaussCov32 = GaussCov<f32>;
pub type TradeoffPoint32 = TradeoffPoint<f32>;
pub type FiniteMParams32 = FiniteMParams<f32>;
pub type FiniteMBounds32 = FiniteMBounds<f32>;
pub type OptimizerConfig32 = OptimizerConfig<f32>;
pub type OptimalChannel32 = OptimalChannel<f32>;
pub type KLetterMechanism32 = KLetterMechanism<f32>;
