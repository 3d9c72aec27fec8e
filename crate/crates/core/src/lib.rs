//! Delegated voting with paid representatives (DReps).
//!
//! Each DRep exerts an effort `x ∈ [0, 1/2]`, votes correctly with
//! probability `1/2 + x` and attracts delegation in proportion to its effort.
//! The crate computes weighted-majority success probabilities, equilibria of
//! reward mechanisms, and budget-optimal committee sizes.
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the success
//! probability enumeration and the reward rules also accept exact
//! [`num_rational::BigRational`] inputs.

pub mod cost;
pub mod error;
pub mod mechanism;
pub mod optimizer;
pub mod roots;
pub mod scalar;
pub mod success;
pub mod verify;

pub use cost::{CostFunction, Curvature, GeometricBounds};
pub use error::{Error, Result};
pub use mechanism::{EquilibriumReport, Existence, GridAudit, Mechanism, Trajectory};
pub use optimizer::{OptimizationResult, ThreeVsOne, Verdict};
pub use scalar::{parse_rational, Real, Scalar};
pub use success::{psucc_exact, psucc_symmetric, EffortProfile, TieRule};
pub use verify::{FailureKind, VerificationReport};

pub type Cost = CostFunction<f64>;
pub type Profile = EffortProfile<f64>;
pub type Bounds = GeometricBounds<f64>;
pub type Report = EquilibriumReport<f64>;
pub type Optimization = OptimizationResult<f64>;
pub type RationalProfile = EffortProfile<num_rational::BigRational>;
