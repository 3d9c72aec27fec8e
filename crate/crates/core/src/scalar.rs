//! Scalar abstractions.
//!
//! [`Scalar`] covers every number type the combinatorial parts of the crate
//! work with, including exact rationals. [`Real`] adds the transcendental
//! functions needed by cost curves, root finding and log-space binomials, so
//! it is only implemented for `f32` and `f64`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

use crate::error::{Error, Result};

/// Number type usable for efforts, weights and probabilities.
pub trait Scalar: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug {
    /// Absolute slack allowed when deciding that two quantities of magnitude
    /// `scale` are equal. Zero for exact types.
    fn tie_slack(scale: &Self) -> Self;

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `a == b` up to [`Scalar::tie_slack`] at the given scale.
    fn approx_eq(a: &Self, b: &Self, scale: &Self) -> bool {
        let slack = Self::tie_slack(scale);
        let d = a.clone() - b.clone();
        d <= slack && Self::zero() - d <= slack
    }

    /// `a >= b` up to [`Scalar::tie_slack`] at the given scale.
    fn approx_ge(a: &Self, b: &Self, scale: &Self) -> bool {
        a.clone() + Self::tie_slack(scale) >= *b
    }
}

fn max_one<T: Scalar>(scale: &T) -> T {
    if *scale > T::one() {
        scale.clone()
    } else {
        T::one()
    }
}

impl Scalar for f64 {
    fn tie_slack(scale: &Self) -> Self {
        1e-12 * max_one(&scale.abs())
    }
}

impl Scalar for f32 {
    fn tie_slack(scale: &Self) -> Self {
        1e-5 * max_one(&scale.abs())
    }
}

impl Scalar for BigRational {
    fn tie_slack(_scale: &Self) -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
}

/// Floating-point scalar with the analysis toolkit the cost models need.
pub trait Real: Scalar + Float + FloatConst + Send + Sync + 'static {
    /// Absolute tolerance for bisection in effort space.
    const BISECT_TOL: f64;
    /// Relative tolerance used when reporting a floating comparison as a tie.
    const REL_EPS: f64;

    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    fn bisect_tol() -> Self {
        Self::lit(Self::BISECT_TOL)
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const BISECT_TOL: f64 = 1e-12;
    const REL_EPS: f64 = 1e-12;
}

impl Real for f32 {
    const BISECT_TOL: f64 = 1e-6;
    const REL_EPS: f64 = 1e-5;
}

/// Floor of `num / den` that does not lose an exact integer ratio to rounding,
/// e.g. `1.0 / 0.1` still floors to 10.
pub fn robust_floor<T: Real>(num: T, den: T) -> T {
    let q = num / den;
    (q * (T::one() + T::lit(T::REL_EPS))).floor()
}

/// Exact rational from `"p/q"`, an integer or a finite decimal such as `"0.15"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Config(format!("`{}` is not an exact rational", s));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{}{}", int, frac).parse().map_err(|_| bad())?;
    let value = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -value } else { value })
}
