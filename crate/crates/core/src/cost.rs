//! Effort cost curves and the geometry of a budgeted cost.
//!
//! Every built-in family satisfies `c(0) = 0` and is strictly increasing on the
//! effort domain `[0, 1/2]`. The exponential-learning family diverges at `1/2`,
//! so its domain is the half-open `[0, 1/2)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::roots::{bisect, bisect_predicate};
use crate::scalar::{robust_floor, Real};

/// Default number of points used by grid scans over the effort domain.
pub const DEFAULT_GRID: usize = 10_000;

/// Second-difference magnitude treated as zero when classifying curvature.
const CURVATURE_TOL: f64 = 1e-8;

fn half<T: Real>() -> T {
    T::lit(0.5)
}

/// Monotone piecewise-cubic Hermite interpolant (PCHIP slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> MonotoneCubic<T> {
    /// Builds the interpolant through strictly increasing knots.
    pub fn new(knots: &[(T, T)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(domain("a cost table needs at least two knots"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
                return Err(domain("cost table knots must be strictly increasing in effort and cost"));
            }
        }
        let xs: Vec<T> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<T> = knots.iter().map(|k| k.1).collect();
        let n = xs.len();
        let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();

        let mut slopes = vec![T::zero(); n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                let w1 = T::lit(2.0) * h[k] + h[k - 1];
                let w2 = h[k] + T::lit(2.0) * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn knots(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn x_min(&self) -> T {
        self.xs[0]
    }

    pub fn x_max(&self) -> T {
        self.xs[self.xs.len() - 1]
    }

    pub fn y_max(&self) -> T {
        self.ys[self.ys.len() - 1]
    }

    fn locate(&self, x: T) -> (usize, T, T) {
        let k = self.xs.partition_point(|&k| k <= x).clamp(1, self.xs.len() - 1) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        (k, h, (x - self.xs[k]) / h)
    }

    /// Divided second differences `(x_k, c[x_{k-1}, x_k, x_{k+1}])` at interior knots.
    pub fn knot_curvature(&self) -> Vec<(T, T)> {
        let n = self.xs.len();
        (1..n.saturating_sub(1))
            .map(|k| {
                let d0 = (self.ys[k] - self.ys[k - 1]) / (self.xs[k] - self.xs[k - 1]);
                let d1 = (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k]);
                (self.xs[k], T::lit(2.0) * (d1 - d0) / (self.xs[k + 1] - self.xs[k - 1]))
            })
            .collect()
    }

    pub fn eval(&self, x: T) -> T {
        let (k, h, t) = self.locate(x);
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, x: T) -> T {
        let (k, h, t) = self.locate(x);
        let t2 = t * t;
        let six = T::lit(6.0);
        let d00 = six * t2 - six * t;
        let d10 = T::lit(3.0) * t2 - T::lit(4.0) * t + T::one();
        let d01 = six * t - six * t2;
        let d11 = T::lit(3.0) * t2 - T::lit(2.0) * t;
        (d00 * self.ys[k] + d01 * self.ys[k + 1]) / h + d10 * self.slopes[k] + d11 * self.slopes[k + 1]
    }

    pub fn second_derivative(&self, x: T) -> T {
        let (k, h, t) = self.locate(x);
        let six = T::lit(6.0);
        let twelve = T::lit(12.0);
        let e00 = twelve * t - six;
        let e10 = six * t - T::lit(4.0);
        let e01 = six - twelve * t;
        let e11 = six * t - T::lit(2.0);
        (e00 * self.ys[k] + e01 * self.ys[k + 1]) / (h * h) + (e10 * self.slopes[k] + e11 * self.slopes[k + 1]) / h
    }
}

fn end_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    let m = ((T::lit(2.0) * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        T::zero()
    } else if d0.signum() != d1.signum() && m.abs() > T::lit(3.0) * d0.abs() {
        T::lit(3.0) * d0
    } else {
        m
    }
}

/// A strictly increasing cost of effort with `c(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFunction<T> {
    /// `a·x`.
    Linear { slope: T },
    /// `x^β`.
    Power { exponent: T },
    /// `-(1/μ)·ln(1 - (2x)^(1/ξ))`, the cost of reaching success probability
    /// `1/2 + x` on an exponential learning curve with rate `μ` and complexity `ξ`.
    ExpLearning { rate: T, complexity: T },
    /// Monotone interpolation of measured `(effort, cost)` pairs.
    Tabulated(MonotoneCubic<T>),
}

/// Curvature class of a cost on its feasible range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curvature {
    Linear,
    Concave,
    Convex,
    ConcaveConvex,
}

/// Geometric quantities of a cost under budget `B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricBounds<T> {
    pub x_max: T,
    pub x_inflection: Option<T>,
    pub x_tangent: Option<T>,
    pub x_int: Option<T>,
    pub b_star: Option<T>,
    pub dreps_at_x_int: Option<u64>,
    pub dreps_at_x_tangent: Option<u64>,
}

/// `1 − (2x)^{1/ξ}` without cancellation near `x = 1/2`, where `2x − 1` is exact.
fn exp_gap<T: Real>(x: T, complexity: T) -> T {
    let two_x = T::lit(2.0) * x;
    let ln_two_x = if two_x > half() { (two_x - T::one()).ln_1p() } else { two_x.ln() };
    -(ln_two_x / complexity).exp_m1()
}

impl<T: Real> CostFunction<T> {
    pub fn linear(slope: T) -> Result<Self> {
        if !(slope > T::zero()) || !slope.is_finite() {
            return Err(domain("linear cost needs a positive finite slope"));
        }
        Ok(Self::Linear { slope })
    }

    pub fn power(exponent: T) -> Result<Self> {
        if !(exponent > T::zero()) || !exponent.is_finite() {
            return Err(domain("power cost needs a positive finite exponent"));
        }
        Ok(Self::Power { exponent })
    }

    pub fn exp_learning(rate: T, complexity: T) -> Result<Self> {
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(domain("learning rate must be positive"));
        }
        if !(complexity > T::one()) || !complexity.is_finite() {
            return Err(domain("learning complexity must exceed 1"));
        }
        Ok(Self::ExpLearning { rate, complexity })
    }

    /// Table over the full effort domain: first knot `(0, 0)`, last knot at effort `1/2`.
    pub fn tabulated(knots: &[(T, T)]) -> Result<Self> {
        let table = MonotoneCubic::new(knots)?;
        if table.x_min() != T::zero() || table.knots().next().map(|k| k.1) != Some(T::zero()) {
            return Err(domain("cost table must start at (0, 0)"));
        }
        if table.x_max() != half() {
            return Err(domain("cost table must end at effort 1/2"));
        }
        Ok(Self::Tabulated(table))
    }

    /// Exclusive upper end of the domain applies only to exponential learning.
    pub fn open_at_half(&self) -> bool {
        matches!(self, Self::ExpLearning { .. })
    }

    fn check_domain(&self, x: T) -> Result<()> {
        if x.is_nan() || x < T::zero() || x > half() {
            return Err(domain(format!("effort {:?} outside [0, 1/2]", x)));
        }
        if self.open_at_half() && x >= half() {
            return Err(domain("exponential-learning cost is infinite at effort 1/2"));
        }
        Ok(())
    }

    pub fn eval(&self, x: T) -> Result<T> {
        self.check_domain(x)?;
        let c = match self {
            Self::Linear { slope } => *slope * x,
            Self::Power { exponent } => x.powf(*exponent),
            Self::ExpLearning { rate, complexity } => -exp_gap(x, *complexity).ln() / *rate,
            Self::Tabulated(t) => t.eval(x),
        };
        if !c.is_finite() {
            return Err(domain(format!("cost at effort {:?} is not finite", x)));
        }
        Ok(c)
    }

    /// `c'(x)`; `+∞` at `x = 0` for families with vertical tangent at the origin.
    pub fn derivative(&self, x: T) -> Result<T> {
        self.check_domain(x)?;
        Ok(match self {
            Self::Linear { slope } => *slope,
            Self::Power { exponent } => {
                if x == T::zero() {
                    if *exponent < T::one() {
                        T::infinity()
                    } else if *exponent == T::one() {
                        T::one()
                    } else {
                        T::zero()
                    }
                } else {
                    *exponent * x.powf(*exponent - T::one())
                }
            }
            Self::ExpLearning { rate, complexity } => {
                if x == T::zero() {
                    return Ok(T::infinity());
                }
                let two_x = T::lit(2.0) * x;
                let inv_xi = complexity.recip();
                T::lit(2.0) * inv_xi * two_x.powf(inv_xi - T::one()) / (exp_gap(x, *complexity) * *rate)
            }
            Self::Tabulated(t) => t.derivative(x),
        })
    }

    /// Cost of the largest effort in the domain; `+∞` for exponential learning.
    pub fn max_cost(&self) -> T {
        match self {
            Self::ExpLearning { .. } => T::infinity(),
            _ => self.eval(half()).expect("1/2 is in the closed domain"),
        }
    }

    /// The effort whose cost is `t`. Fails with [`Error::Saturated`] when
    /// `t` exceeds the cost of effort `1/2`.
    pub fn inverse(&self, t: T) -> Result<T> {
        if t.is_nan() || t < T::zero() {
            return Err(domain(format!("cost {:?} must be nonnegative", t)));
        }
        if t > self.max_cost() {
            return Err(Error::Saturated(t.as_f64()));
        }
        Ok(match self {
            Self::Linear { slope } => t / *slope,
            Self::Power { exponent } => t.powf(exponent.recip()),
            Self::ExpLearning { rate, complexity } => {
                let x = (-(-*rate * t).exp_m1()).powf(*complexity) * half();
                // Huge costs round to 1/2, which is outside the open domain.
                if x >= half() {
                    half::<T>() - half::<T>() * T::epsilon()
                } else {
                    x
                }
            }
            Self::Tabulated(_) => {
                let f = |x: T| self.eval(x).expect("bracket stays in domain") - t;
                bisect(f, T::zero(), half(), T::bisect_tol()).expect("cost is monotone with c(0) = 0")
            }
        })
    }

    /// Largest affordable effort with budget `b`, capped at `1/2`.
    pub fn x_max(&self, b: T) -> T {
        match self.inverse(b) {
            Ok(x) => x,
            Err(_) => half(),
        }
    }

    /// `⌊B / c(x)⌋`, the number of DReps of effort `x` the budget pays for.
    pub fn dreps_max(&self, b: T, x: T) -> Result<u64> {
        if !(x > T::zero()) {
            return Err(domain("dreps_max needs a positive effort"));
        }
        let c = self.eval(x)?;
        let d = robust_floor(b, c);
        if d < T::one() {
            return Err(domain(format!("cost {:?} of effort {:?} exceeds budget {:?}", c, x, b)));
        }
        Ok(d.to_u64().unwrap_or(u64::MAX))
    }

    /// Concave-to-convex switch of a tabulated cost, located where the
    /// divided second differences of the knots change sign.
    fn numeric_inflection(&self) -> Option<T> {
        let Self::Tabulated(table) = self else { return None };
        let tol = T::lit(CURVATURE_TOL);
        let curv = table.knot_curvature();
        let mut concave_seen = false;
        for w in curv.windows(2) {
            let ((x0, s0), (x1, s1)) = (w[0], w[1]);
            if s0 < -tol {
                concave_seen = true;
            }
            if concave_seen && s0 <= tol && s1 > tol {
                // linear zero crossing between the two knots
                let s0 = s0.min(T::zero());
                let t = -s0 / (s1 - s0);
                return Some(x0 + t * (x1 - x0));
            }
        }
        None
    }

    pub fn curvature(&self) -> Curvature {
        match self {
            Self::Linear { .. } => Curvature::Linear,
            Self::Power { exponent } if *exponent == T::one() => Curvature::Linear,
            Self::Power { exponent } if *exponent < T::one() => Curvature::Concave,
            Self::Power { .. } => Curvature::Convex,
            Self::ExpLearning { .. } => Curvature::ConcaveConvex,
            Self::Tabulated(table) => {
                if self.numeric_inflection().is_some() {
                    return Curvature::ConcaveConvex;
                }
                let tol = T::lit(CURVATURE_TOL);
                let curv = table.knot_curvature();
                let neg = curv.iter().any(|c| c.1 < -tol);
                let pos = curv.iter().any(|c| c.1 > tol);
                match (neg, pos) {
                    (false, false) => Curvature::Linear,
                    (true, false) => Curvature::Concave,
                    // convex-then-concave tables have no concave-convex switch
                    (_, true) => Curvature::Convex,
                }
            }
        }
    }

    /// Effort where the cost switches from concave to convex, if any.
    pub fn inflection_point(&self) -> Option<T> {
        match self {
            Self::ExpLearning { complexity, .. } => {
                Some(half::<T>() * (T::one() - complexity.recip()).powf(*complexity))
            }
            Self::Tabulated(_) => self.numeric_inflection(),
            _ => None,
        }
    }

    /// `c(x) - x·c'(x)`; zero exactly where the ray from the origin touches `c`.
    pub fn tangency_gap(&self, x: T) -> Result<T> {
        Ok(self.eval(x)? - x * self.derivative(x)?)
    }

    /// Largest effort where the ray from the origin touches the cost restricted
    /// to the budget-feasible range. `None` when the cost is concave, convex or
    /// linear on that range. If the unrestricted tangency lies beyond `x_max`,
    /// the restricted tangency is `x_max` itself.
    pub fn tangent_point(&self, b: T) -> Option<T> {
        if self.curvature() != Curvature::ConcaveConvex {
            return None;
        }
        let infl = self.inflection_point()?;
        let x_max = self.x_max(b);
        if x_max <= infl {
            return None;
        }
        let g = |x: T| self.tangency_gap(x).unwrap_or(T::neg_infinity());
        if g(x_max) >= T::zero() {
            return Some(x_max);
        }
        bisect(g, infl, x_max, T::bisect_tol())
    }

    /// Origin tangency over the whole domain, without a budget cap.
    pub fn origin_tangency(&self) -> Option<T> {
        let probe = self.tangency_probe_budget();
        let x = self.tangent_point(probe)?;
        // Touching the probe cap means no interior tangency exists.
        if x >= self.x_max(probe) {
            None
        } else {
            Some(x)
        }
    }

    /// Budget large enough that the feasible range contains the tangency.
    pub fn tangency_probe_budget(&self) -> T {
        match self {
            Self::ExpLearning { .. } => T::lit(2.0) * self.eval(T::lit(0.499)).expect("0.499 < 1/2"),
            _ => self.max_cost(),
        }
    }

    /// Chord intersection: with `x₁ = x_max(B)` and slope `α = c(x₁)/x₁`, the
    /// largest `x ≤ x₁` such that `c(y) ≥ α·y` on `[0, x]`.
    pub fn intersect_point(&self, b: T) -> Result<T> {
        self.intersect_point_with(b, DEFAULT_GRID)
    }

    pub fn intersect_point_with(&self, b: T, grid: usize) -> Result<T> {
        if !(b > T::zero()) {
            return Err(domain("budget must be positive"));
        }
        if self.curvature() == Curvature::Convex {
            return Err(domain("chord intersection is undefined for a convex cost"));
        }
        let x1 = self.x_max(b);
        let alpha = self.eval(x1)? / x1;
        let slack = T::tie_slack(&b);
        let h = |y: T| self.eval(y).map(|c| c - alpha * y).unwrap_or(T::zero());
        let grid = grid.max(2);
        let step = x1 / T::from_count(grid);
        let mut prev = T::zero();
        for i in 1..grid {
            let y = step * T::from_count(i);
            if h(y) < -slack {
                let x = bisect_predicate(|z| h(z) >= -slack, prev, y, T::bisect_tol());
                if !(x > T::zero()) {
                    return Err(domain("cost lies below its chord from the origin; no concave start"));
                }
                return Ok(x);
            }
            prev = y;
        }
        Ok(x1)
    }

    pub fn bounds(&self, b: T) -> GeometricBounds<T> {
        let x_tangent = self.tangent_point(b);
        let x_int = self.intersect_point(b).ok();
        GeometricBounds {
            x_max: self.x_max(b),
            x_inflection: self.inflection_point(),
            x_tangent,
            x_int,
            b_star: self.origin_tangency().and_then(|x| self.eval(x).ok()),
            dreps_at_x_int: x_int.and_then(|x| self.dreps_max(b, x).ok()),
            dreps_at_x_tangent: x_tangent.and_then(|x| self.dreps_max(b, x).ok()),
        }
    }

    /// Loads `effort,cost` rows from a CSV file (optional header row).
    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
        let mut knots = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Config(format!("line {}: expected effort,cost", n + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(c)) => knots.push((T::lit(x), T::lit(c))),
                _ if n == 0 => continue,
                _ => return Err(Error::Config(format!("line {}: not a number", n + 1))),
            }
        }
        Self::tabulated(&knots)
    }
}

impl<T: Real> FromStr for CostFunction<T> {
    type Err = Error;

    /// `linear:<a>`, `power:<beta>`, `explearn:<mu>,<xi>` or `table:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').ok_or_else(|| Error::Config(format!("cost `{}` lacks a `kind:` prefix", s)))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| Error::Config(format!("`{}` is not a number", v)))
        };
        match kind.trim() {
            "linear" => Self::linear(num(args)?),
            "power" => Self::power(num(args)?),
            "explearn" => {
                let (mu, xi) = args
                    .split_once(',')
                    .ok_or_else(|| Error::Config("explearn needs `<mu>,<xi>`".into()))?;
                Self::exp_learning(num(mu)?, num(xi)?)
            }
            "table" => Self::load_table(args.trim()),
            other => Err(Error::Config(format!("unknown cost family `{}`", other))),
        }
    }
}

impl<T: Real + fmt::Display> fmt::Display for CostFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { slope } => write!(f, "linear:{}", slope),
            Self::Power { exponent } => write!(f, "power:{}", exponent),
            Self::ExpLearning { rate, complexity } => write!(f, "explearn:{},{}", rate, complexity),
            Self::Tabulated(t) => write!(f, "table[{} knots]", t.xs.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn second_difference(c: &CostFunction<f64>, x: f64, h: f64) -> f64 {
        c.eval(x - h).unwrap() - 2.0 * c.eval(x).unwrap() + c.eval(x + h).unwrap()
    }

    fn exp(mu: f64, xi: f64) -> CostFunction<f64> {
        CostFunction::exp_learning(mu, xi).unwrap()
    }

    #[test]
    fn eval_examples() {
        let lin = CostFunction::linear(1.0).unwrap();
        assert_eq!(lin.eval(0.0).unwrap(), 0.0);
        assert_relative_eq!(exp(1.0, 2.0).eval(0.125).unwrap(), 2f64.ln(), epsilon = 1e-12);
        let p4 = CostFunction::power(4.0).unwrap();
        // repeated squaring
        let sq = 0.3 * 0.3;
        assert_relative_eq!(p4.eval(0.3).unwrap(), sq * sq, epsilon = 1e-15);
        assert_relative_eq!(p4.eval(0.3).unwrap(), 0.0081, epsilon = 1e-15);
    }

    #[test]
    fn eval_domain_errors() {
        let lin = CostFunction::linear(1.0).unwrap();
        assert!(lin.eval(-0.1).is_err());
        assert!(lin.eval(0.6).is_err());
        assert!(lin.eval(0.5).is_ok());
        assert!(exp(1.0, 2.0).eval(0.5).is_err());
        assert!(lin.eval(f64::NAN).is_err());
    }

    #[test]
    fn constructor_validation() {
        assert!(CostFunction::linear(0.0).is_err());
        assert!(CostFunction::power(-1.0).is_err());
        assert!(CostFunction::exp_learning(1.0, 1.0).is_err());
        assert!(CostFunction::exp_learning(0.0, 2.0).is_err());
        assert!(CostFunction::tabulated(&[(0.0, 0.0), (0.25, 1.0)]).is_err());
        assert!(CostFunction::tabulated(&[(0.0, 0.1), (0.5, 1.0)]).is_err());
        assert!(CostFunction::tabulated(&[(0.0, 0.0), (0.3, 1.0), (0.5, 0.9)]).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(CostFunction::linear(2.0).unwrap().inverse(0.5).unwrap(), 0.25);
        let x = exp(1.0, 2.0).inverse(1.0).unwrap();
        let closed = (1.0 - (-1f64).exp()).powi(2) / 2.0;
        assert_relative_eq!(x, closed, epsilon = 1e-14);
        assert_relative_eq!(x, 0.199788, epsilon = 1e-6);
        // oracle: bisection directly on eval
        let c = exp(1.0, 2.0);
        let oracle = bisect(|y| c.eval(y).unwrap() - 1.0, 0.0, 0.4999, 1e-14).unwrap();
        assert_relative_eq!(x, oracle, epsilon = 1e-12);
        assert!(matches!(CostFunction::power(4.0).unwrap().inverse(2.0), Err(Error::Saturated(_))));
    }

    #[test]
    fn x_max_examples() {
        assert_eq!(CostFunction::linear(1.0).unwrap().x_max(2.0), 0.5);
        assert_relative_eq!(CostFunction::power(2.0).unwrap().x_max(0.04), 0.2, epsilon = 1e-15);
        assert_relative_eq!(exp(1.0, 2.0).x_max(2f64.ln()), 0.125, epsilon = 1e-12);
        assert!(exp(1.0, 2.0).x_max(1e6) < 0.5);
    }

    #[test]
    fn dreps_max_examples() {
        let lin = CostFunction::linear(1.0).unwrap();
        assert_eq!(lin.dreps_max(1.0, 0.25).unwrap(), 4);
        assert_eq!(CostFunction::power(2.0).unwrap().dreps_max(0.05, 0.1).unwrap(), 5);
        let c = exp(1.0, 2.0);
        let x = c.inverse(1.0).unwrap();
        assert_eq!(c.dreps_max(2.0, x).unwrap(), 2);
        assert!(lin.dreps_max(1.0, 0.0).is_err());
        assert!(lin.dreps_max(0.1, 0.2).is_err());
    }

    #[test]
    fn inflection_examples() {
        assert_eq!(exp(5.0, 2.0).inflection_point(), Some(0.125));
        assert_eq!(CostFunction::linear(3.0).unwrap().inflection_point(), None);
        let x3 = exp(1.0, 3.0).inflection_point().unwrap();
        assert_relative_eq!(x3, 0.5 * (2.0f64 / 3.0).powi(3), epsilon = 1e-15);
        assert_relative_eq!(x3, 0.148148, epsilon = 1e-6);
        // oracle: sign change of the numeric second difference
        let c = exp(1.0, 3.0);
        let h = 1e-4;
        let lo = second_difference(&c, x3 - 1e-3, h);
        let hi = second_difference(&c, x3 + 1e-3, h);
        assert!(lo < 0.0 && hi > 0.0);
    }

    #[test]
    fn tangent_examples() {
        let c = exp(1.0, 2.0);
        let xt = c.tangent_point(10.0).unwrap();
        assert!(xt > 0.125 && xt < c.x_max(10.0));
        // oracle: the tangency minimises the average cost c(y)/y
        let n = 200_000;
        let x_max = c.x_max(10.0);
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 1..=n {
            let y = x_max * i as f64 / n as f64;
            let avg = c.eval(y).unwrap() / y;
            if avg < best {
                best = avg;
                arg = y;
            }
        }
        assert!((arg - xt).abs() < 1e-4, "{} vs {}", arg, xt);
        assert!(CostFunction::power(1.0).unwrap().tangent_point(10.0).is_none());
        let xt2 = exp(2.0, 2.0).tangent_point(10.0).unwrap();
        assert!((xt - xt2).abs() < 1e-10);
    }

    #[test]
    fn tangent_degenerates_to_cap_for_small_budgets() {
        let c = exp(1.0, 2.0);
        let xt = c.origin_tangency().unwrap();
        let b_star = c.eval(xt).unwrap();
        let b = 0.9 * b_star;
        assert_eq!(c.tangent_point(b), Some(c.x_max(b)));
        // below the inflection cost the feasible range is concave
        assert_eq!(c.tangent_point(0.5), None);
    }

    #[test]
    fn intersect_examples() {
        let lin = CostFunction::linear(2.0).unwrap();
        assert_eq!(lin.intersect_point(0.3).unwrap(), lin.x_max(0.3));
        assert_eq!(lin.intersect_point(5.0).unwrap(), 0.5);

        let c = exp(1.0, 2.0);
        let xt = c.origin_tangency().unwrap();
        let b_star = c.eval(xt).unwrap();
        let xi = c.intersect_point(b_star).unwrap();
        assert!((xi - xt).abs() < 1e-9);
        assert_eq!(c.bounds(b_star).dreps_at_x_int, Some(1));

        // oracle: independent fine scan
        let b = 6.0;
        let x_int = c.intersect_point(b).unwrap();
        let x1 = c.x_max(b);
        let alpha = b / x1;
        let n = 1_000_000;
        let mut first_below = x1;
        for i in 1..n {
            let y = x1 * i as f64 / n as f64;
            if c.eval(y).unwrap() < alpha * y {
                first_below = y;
                break;
            }
        }
        assert!((first_below - x_int).abs() < 1e-5, "{} vs {}", first_below, x_int);

        assert!(CostFunction::power(2.0).unwrap().intersect_point(0.1).is_err());
    }

    #[test]
    fn bounds_ordering() {
        let c = exp(1.0, 2.0);
        for &b in &[0.3, 1.0, 2.0, 4.0, 8.0, 20.0] {
            let g = c.bounds(b);
            if let (Some(i), Some(t)) = (g.x_inflection, g.x_tangent) {
                assert!(i > 0.0 && i <= t);
            }
            if let (Some(xi), Some(xt)) = (g.x_int, g.x_tangent) {
                let b_star = g.b_star.unwrap();
                if b <= b_star {
                    assert!((xi - xt).abs() < 1e-9);
                    assert_eq!(g.dreps_at_x_int, Some(1));
                } else {
                    assert!(xi <= xt);
                }
            }
        }
    }

    #[test]
    fn config_strings() {
        let c: CostFunction<f64> = "explearn:1,2".parse().unwrap();
        assert_eq!(c, exp(1.0, 2.0));
        assert_eq!("power:4".parse::<CostFunction<f64>>().unwrap(), CostFunction::power(4.0).unwrap());
        assert_eq!(c.to_string(), "explearn:1,2");
        assert!("cubic:2".parse::<CostFunction<f64>>().is_err());
        assert!("linear".parse::<CostFunction<f64>>().is_err());
        assert!("linear:-1".parse::<CostFunction<f64>>().is_err());
    }

    #[test]
    fn table_from_csv() {
        let dir = std::env::temp_dir().join(format!("drep-cost-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cost.csv");
        let mut body = String::from("effort,cost\n");
        for i in 0..=10 {
            let x = i as f64 / 20.0;
            body.push_str(&format!("{},{}\n", x, x * x));
        }
        std::fs::write(&path, body).unwrap();
        let c: CostFunction<f64> = format!("table:{}", path.display()).parse().unwrap();
        assert_relative_eq!(c.eval(0.25).unwrap(), 0.0625, epsilon = 1e-12);
        assert_relative_eq!(c.inverse(0.0625).unwrap(), 0.25, epsilon = 1e-10);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn tabulated_s_curve_has_inflection() {
        let truth = exp(1.0, 2.0);
        let mut knots: Vec<(f64, f64)> = (0..=48).map(|i| {
            let x = i as f64 / 100.0;
            (x, truth.eval(x).unwrap())
        }).collect();
        knots.push((0.5, 12.0));
        let t = CostFunction::tabulated(&knots).unwrap();
        assert_eq!(t.curvature(), Curvature::ConcaveConvex);
        let xi = t.inflection_point().unwrap();
        assert!((xi - 0.125).abs() < 0.02, "{}", xi);
        assert!(t.tangent_point(5.0).is_some());
    }

    #[test]
    fn single_precision_family() {
        let c = CostFunction::<f32>::exp_learning(1.0, 2.0).unwrap();
        assert!((c.eval(0.125).unwrap() - std::f32::consts::LN_2).abs() < 1e-6);
        assert_eq!(c.inflection_point(), Some(0.125f32));
    }
}
