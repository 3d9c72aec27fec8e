//! Verification suites with machine-readable reports.
//!
//! Every failure is classified: an [`FailureKind::Implementation`] failure
//! means the code disagrees with an identity or oracle that must hold, while a
//! [`FailureKind::Claim`] failure means a conjectured or stated property of
//! the model itself did not hold for the recorded inputs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cost::CostFunction;
use crate::error::{domain, Error, Result};
use crate::mechanism::proportional_symmetric_eq;
use crate::scalar::robust_floor;
use crate::success::{
    compound_probs, psucc_exact, psucc_symmetric, psucc_upper_bound, psucc_voters, EffortProfile, TieRule, Voter,
};

/// Absolute tolerance on probabilities in every suite.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Implementation,
    Claim,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub check: String,
    pub inputs: BTreeMap<String, f64>,
    pub observed: f64,
    pub bound: f64,
}

impl Failure {
    fn new(kind: FailureKind, check: &str, inputs: &[(&str, f64)], observed: f64, bound: f64) -> Self {
        Failure {
            kind,
            check: check.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            observed,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub cases_run: usize,
    pub failures: Vec<Failure>,
    pub verdict: ReportVerdict,
}

impl VerificationReport {
    fn new(suite: &str, seed: u64, parameters: &[(&str, String)], cases_run: usize, failures: Vec<Failure>) -> Self {
        let verdict = if failures.is_empty() { ReportVerdict::Pass } else { ReportVerdict::Fail };
        VerificationReport {
            suite: suite.to_string(),
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            seed,
            cases_run,
            failures,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == ReportVerdict::Pass
    }

    pub fn count(&self, kind: FailureKind) -> usize {
        self.failures.iter().filter(|f| f.kind == kind).count()
    }
}

fn list<T: std::fmt::Debug>(v: &[T]) -> String {
    format!("{:?}", v)
}

/// Geometric grid of `size` points on `[hi·ratio, hi]`, ascending.
fn geometric_grid(hi: f64, ratio: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![hi];
    }
    let lo = hi * ratio;
    (0..size)
        .map(|i| lo * (hi / lo).powf(i as f64 / (size - 1) as f64))
        .collect()
}

/// Smallest grid effort relative to `x_max` in the monotonicity check.
pub const ASSUMPTION1_SPAN: f64 = 1e-3;

/// Effort at which a committee of `k = ⌊B/(ax)⌋` DReps is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontierEffort {
    /// The committee's budget-exhausting effort `min(1/2, B/(ak))`.
    Exhausting,
    /// The grid effort `x` itself, leaving part of the budget unspent.
    Grid,
}

fn frontier_point(a: f64, budget: f64, x: f64, mode: FrontierEffort) -> (u64, f64) {
    let k = robust_floor(budget, a * x) as u64;
    let effort = match mode {
        FrontierEffort::Exhausting => (budget / (a * k as f64)).min(0.5),
        FrontierEffort::Grid => x,
    };
    (k, effort)
}

/// For linear costs `a·x`, the success probability of `k = ⌊B/(ax)⌋` DReps
/// must not decrease as `x` grows, i.e. fewer and stronger DReps never do
/// worse.
///
/// Efforts form a geometric grid on `(0, min(1/2, B/a)]`. Each grid point is
/// evaluated once and every ordered pair `x ≤ x'` is compared.
pub fn check_assumption1(
    a_values: &[f64],
    x_grid_size: usize,
    budget: f64,
    mode: FrontierEffort,
) -> Result<VerificationReport> {
    if x_grid_size == 0 || !(budget > 0.0) {
        return Err(domain("grid must be nonempty and the budget positive"));
    }
    let mut failures = Vec::new();
    let mut cases = 0;
    for &a in a_values {
        let cost = CostFunction::linear(a)?;
        let grid = geometric_grid(cost.x_max(budget), ASSUMPTION1_SPAN, x_grid_size);
        let evals: Vec<(f64, u64, f64, f64)> = grid
            .par_iter()
            .map(|&x| {
                let (k, effort) = frontier_point(a, budget, x, mode);
                (x, k, effort, psucc_symmetric(effort, k, TieRule::Half))
            })
            .collect();
        for &(x, k, effort, p) in &evals {
            let upper = (0.5 + k as f64 * effort).min(1.0);
            if !(0.5..=upper + PROB_TOL).contains(&p) {
                let inputs = [("a", a), ("x", x), ("k", k as f64), ("effort", effort)];
                failures.push(Failure::new(FailureKind::Implementation, "probability range", &inputs, p, upper));
            }
        }
        for (i, &(x, k, _, p)) in evals.iter().enumerate() {
            for &(x2, k2, _, p2) in &evals[i..] {
                cases += 1;
                if p > p2 + PROB_TOL {
                    let inputs = [("a", a), ("x", x), ("k", k as f64), ("x_prime", x2), ("k_prime", k2 as f64)];
                    failures.push(Failure::new(FailureKind::Claim, "monotone along frontier", &inputs, p, p2));
                }
            }
        }
    }
    let params = [
        ("a_values", list(a_values)),
        ("x_grid_size", x_grid_size.to_string()),
        ("budget", budget.to_string()),
        ("effort", format!("{:?}", mode).to_lowercase()),
    ];
    Ok(VerificationReport::new("assumption1", 0, &params, cases, failures))
}

/// Halving the committee never hurts when ties count as success.
///
/// For each `k'`, the efforts are `x = B/(2ak')`, the right end of the class
/// `⌊B/(ax)⌋ = 2k'`, and `x' = min(1/2, B/(ak'))`, the budget-exhausting
/// effort of `k'` DReps. The capped `x' = 1/2` stands for `k'` DReps that
/// cannot spend the whole budget.
pub fn check_weaker_assumption(a: f64, budget: f64, kprime_values: &[u64]) -> Result<VerificationReport> {
    CostFunction::linear(a)?;
    if !(budget > 0.0) {
        return Err(domain("budget must be positive"));
    }
    let mut failures = Vec::new();
    for &kp in kprime_values {
        if kp == 0 {
            return Err(domain("k' must be positive"));
        }
        let x = budget / (a * (2 * kp) as f64);
        if x > 0.5 || robust_floor(budget, a * x) as u64 != 2 * kp {
            return Err(Error::Construction(format!("no effort in (0, 1/2] gives {} DReps", 2 * kp)));
        }
        let xp = (budget / (a * kp as f64)).min(0.5);
        let p = psucc_symmetric(x, 2 * kp, TieRule::Favor);
        let pp = psucc_symmetric(xp, kp, TieRule::Favor);
        let inputs = [("x", x), ("x_prime", xp), ("k_prime", kp as f64)];
        if x > xp {
            failures.push(Failure::new(FailureKind::Implementation, "construction order", &inputs, x, xp));
        }
        if p > pp + PROB_TOL {
            failures.push(Failure::new(FailureKind::Claim, "halved committee", &inputs, p, pp));
        }
    }
    let params = [("a", a.to_string()), ("budget", budget.to_string()), ("kprime_values", list(kprime_values))];
    Ok(VerificationReport::new("weaker", 0, &params, kprime_values.len(), failures))
}

/// Default ceiling for the last gap in [`check_limit_half`].
pub const LIMIT_CEILING: f64 = 0.01;

/// Committee size from which the normal approximation must match.
pub const NORMAL_FROM: u64 = 1000;

/// Relative tolerance of the normal approximation.
pub const NORMAL_REL_TOL: f64 = 0.2;

/// Accepted range of the log-log slope of the gap over the last three sizes.
pub const SLOPE_RANGE: (f64, f64) = (-0.6, -0.4);

/// Standard normal distribution function.
fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Least-squares slope of `ys` against `xs`.
fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Under the proportional rule with linear costs, the success gap
/// `δ(n) = P_succ − 1/2` of the symmetric equilibrium vanishes as `n` grows.
pub fn check_limit_half(a: f64, budget: f64, n_values: &[u64], ceiling: f64) -> Result<VerificationReport> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[1] <= w[0]) || n_values.iter().any(|n| n % 2 == 0 || *n < 3) {
        return Err(domain("sizes must be odd, at least 3 and increasing"));
    }
    let cost = CostFunction::linear(a)?;
    let rows: Vec<(u64, f64, f64)> = n_values
        .par_iter()
        .map(|&n| {
            let x = proportional_symmetric_eq(&cost, n as usize, budget)?;
            Ok((n, x, psucc_symmetric(x, n, TieRule::Half) - 0.5))
        })
        .collect::<Result<_>>()?;

    let mut failures = Vec::new();
    let mut cases = 0;
    for (i, &(n, x, delta)) in rows.iter().enumerate() {
        cases += 1;
        if !(delta > 0.0) {
            failures.push(Failure::new(FailureKind::Claim, "positive gap", &[("n", n as f64)], delta, 0.0));
        }
        if i > 0 && !(delta < rows[i - 1].2) {
            let prev = rows[i - 1].2;
            failures.push(Failure::new(FailureKind::Claim, "decreasing gap", &[("n", n as f64)], delta, prev));
        }
        if n >= NORMAL_FROM {
            cases += 1;
            let approx = normal_cdf(2.0 * x * (n as f64).sqrt()) - 0.5;
            let rel = (delta - approx).abs() / approx;
            if !(rel <= NORMAL_REL_TOL) {
                let inputs = [("n", n as f64), ("x", x), ("normal", approx)];
                failures.push(Failure::new(FailureKind::Implementation, "normal approximation", &inputs, delta, approx));
            }
        }
    }
    let (n_last, _, d_last) = *rows.last().expect("nonempty");
    cases += 1;
    if !(d_last <= ceiling) {
        failures.push(Failure::new(FailureKind::Claim, "gap ceiling", &[("n", n_last as f64)], d_last, ceiling));
    }
    if rows.len() >= 3 {
        cases += 1;
        let tail = &rows[rows.len() - 3..];
        let lx: Vec<f64> = tail.iter().map(|r| (r.0 as f64).ln()).collect();
        let ly: Vec<f64> = tail.iter().map(|r| r.2.ln()).collect();
        let slope = ls_slope(&lx, &ly);
        if !(SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope) {
            let bound = if slope < SLOPE_RANGE.0 { SLOPE_RANGE.0 } else { SLOPE_RANGE.1 };
            failures.push(Failure::new(FailureKind::Claim, "log-log slope", &[("n", n_last as f64)], slope, bound));
        }
    }
    let params = [
        ("a", a.to_string()),
        ("budget", budget.to_string()),
        ("n_values", list(n_values)),
        ("ceiling", ceiling.to_string()),
    ];
    Ok(VerificationReport::new("limit-half", 0, &params, cases, failures))
}

/// Largest profile drawn by [`check_pair_reduction`].
pub const PAIR_MAX_VOTERS: usize = 10;

fn random_efforts(rng: &mut ChaCha8Rng, max_len: usize, min_len: usize) -> Vec<f64> {
    let n = rng.gen_range(min_len..=max_len);
    (0..n)
        .map(|_| match rng.gen_range(0..10) {
            // exercise zero and maximal efforts explicitly
            0 => 0.0,
            1 => 0.5,
            _ => rng.gen_range(0.0..=0.5),
        })
        .collect()
}

fn draw_cases(samples: usize, seed: u64, max_len: usize, min_len: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(|_| random_efforts(&mut rng, max_len, min_len)).collect()
}

fn effort_inputs(efforts: &[f64]) -> Vec<(String, f64)> {
    efforts.iter().enumerate().map(|(i, &x)| (format!("x{}", i), x)).collect()
}

fn failure_for(kind: FailureKind, check: &str, efforts: &[f64], observed: f64, bound: f64) -> Failure {
    Failure {
        kind,
        check: check.to_string(),
        inputs: effort_inputs(efforts).into_iter().collect(),
        observed,
        bound,
    }
}

/// Merging two DReps into a compound voter: the pair votes together with
/// probability `P(S) = 1/2 + 2x₁x₂` and apart otherwise, so the tie-favouring
/// success probability must equal the two-branch mixture. Also checks that the
/// compound probabilities are bounded by those of single DReps of effort
/// `x₁ ± x₂`.
pub fn check_pair_reduction(samples: usize, seed: u64) -> Result<VerificationReport> {
    let cases = draw_cases(samples, seed, PAIR_MAX_VOTERS, 2);
    let results: Vec<Vec<Failure>> = cases
        .par_iter()
        .map(|efforts| pair_case(efforts))
        .collect::<Result<_>>()?;
    let failures = results.into_iter().flatten().collect();
    let params = [("samples", samples.to_string()), ("max_voters", PAIR_MAX_VOTERS.to_string())];
    Ok(VerificationReport::new("pairing", seed, &params, samples, failures))
}

fn pair_case(efforts: &[f64]) -> Result<Vec<Failure>> {
    let mut out = Vec::new();
    let (x1, x2) = (efforts[0].max(efforts[1]), efforts[0].min(efforts[1]));
    let rest: Vec<Voter<f64>> = efforts[2..].iter().map(|&x| Voter { weight: x, p_correct: 0.5 + x }).collect();
    let probs = compound_probs(x1, x2)?;
    if probs.p_plus > 0.5 + x1 + x2 + PROB_TOL {
        out.push(failure_for(FailureKind::Implementation, "compound plus bound", efforts, probs.p_plus, 0.5 + x1 + x2));
    }
    if let Some(pm) = probs.p_minus {
        if pm < 0.5 + x1 - x2 - PROB_TOL {
            out.push(failure_for(FailureKind::Implementation, "compound minus bound", efforts, pm, 0.5 + x1 - x2));
        }
    }

    let with = |weight: f64, p: f64| -> Result<f64> {
        let mut voters = vec![Voter { weight, p_correct: p }];
        voters.extend(rest.iter().cloned());
        psucc_voters(&voters, TieRule::Favor)
    };
    let mut mixture = probs.p_same * with(x1 + x2, probs.p_plus)?;
    if let Some(pm) = probs.p_minus {
        mixture += (1.0 - probs.p_same) * with(x1 - x2, pm)?;
    }
    let direct = psucc_exact(&EffortProfile::new(efforts.to_vec())?, TieRule::Favor)?;
    if (direct - mixture).abs() > PROB_TOL {
        out.push(failure_for(FailureKind::Implementation, "pair decomposition", efforts, direct, mixture));
    }
    Ok(out)
}

/// No profile succeeds with probability above `1/2 + Σx` (ties counting half).
pub fn check_upper_bound(samples: usize, seed: u64, max_voters: usize) -> Result<VerificationReport> {
    if max_voters == 0 {
        return Err(domain("profiles need at least one DRep"));
    }
    let cases = draw_cases(samples, seed, max_voters, 1);
    let results: Vec<Option<Failure>> = cases
        .par_iter()
        .map(|efforts| {
            let profile = EffortProfile::new(efforts.clone())?;
            let p = psucc_exact(&profile, TieRule::Half)?;
            let bound = psucc_upper_bound(&profile);
            Ok((p > bound + PROB_TOL).then(|| failure_for(FailureKind::Claim, "upper bound", efforts, p, bound)))
        })
        .collect::<Result<_>>()?;
    let params = [("samples", samples.to_string()), ("max_voters", max_voters.to_string())];
    Ok(VerificationReport::new("upper-bound", seed, &params, samples, results.into_iter().flatten().collect()))
}

/// The log-space symmetric formula against exhaustive enumeration on
/// `grid_size` efforts in `[0, 1/2]` and committees of `1..=k_max`.
pub fn check_oracle_equivalence(grid_size: usize, k_max: usize) -> Result<VerificationReport> {
    if grid_size < 2 {
        return Err(domain("grid needs at least two points"));
    }
    let mut inputs = Vec::new();
    for j in 0..grid_size {
        let x = 0.5 * j as f64 / (grid_size - 1) as f64;
        for k in 1..=k_max {
            for tie in [TieRule::Half, TieRule::Favor] {
                inputs.push((x, k, tie));
            }
        }
    }
    let results: Vec<Option<Failure>> = inputs
        .par_iter()
        .map(|&(x, k, tie)| {
            let exact = psucc_exact(&EffortProfile::symmetric(x, k, 0)?, tie)?;
            let sym = psucc_symmetric(x, k as u64, tie);
            let favor = if tie == TieRule::Favor { 1.0 } else { 0.0 };
            Ok(((exact - sym).abs() > PROB_TOL).then(|| {
                let inputs = [("x", x), ("k", k as f64), ("favor", favor)];
                Failure::new(FailureKind::Implementation, "oracle equivalence", &inputs, sym, exact)
            }))
        })
        .collect::<Result<_>>()?;
    let params = [("grid_size", grid_size.to_string()), ("k_max", k_max.to_string())];
    Ok(VerificationReport::new("oracle", 0, &params, inputs.len(), results.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn assumption1_small_grid() {
        let r = check_assumption1(&[1.0], 40, 1.0, FrontierEffort::Exhausting).unwrap();
        assert!(r.passed(), "{:?}", r.failures.first());
        assert_eq!(r.cases_run, 40 * 41 / 2);
        let single = check_assumption1(&[2.0], 1, 1.0, FrontierEffort::Exhausting).unwrap();
        assert!(single.passed());
        assert_eq!(single.cases_run, 1);
    }

    #[test]
    fn grid_effort_frontier_is_not_monotone() {
        // five DReps at 0.1728 beat four at 0.2062 although both fit the budget
        let r = check_assumption1(&[1.0], 40, 1.0, FrontierEffort::Grid).unwrap();
        assert!(r.count(FailureKind::Claim) > 0);
        assert_eq!(r.count(FailureKind::Implementation), 0);
        let p5 = psucc_symmetric(0.1728, 5, TieRule::Half);
        let p4 = psucc_symmetric(0.2062, 4, TieRule::Half);
        assert!(p5 > p4 + 1e-3);
    }

    #[test]
    fn weaker_small() {
        let r = check_weaker_assumption(1.0, 1.0, &[1, 2, 3]).unwrap();
        assert!(r.passed());
        assert_eq!(frontier_point(1.0, 1.0, 0.25, FrontierEffort::Exhausting), (4, 0.25));
        assert!(matches!(check_weaker_assumption(1.0, 2.0, &[1]), Err(Error::Construction(_))));
    }

    #[test]
    fn halving_fails_for_seven() {
        let r = check_weaker_assumption(1.0, 1.0, &[5, 6, 7, 8]).unwrap();
        assert_eq!(r.count(FailureKind::Claim), 1);
        assert_eq!(r.failures[0].inputs["k_prime"], 7.0);
        assert_relative_eq!(r.failures[0].observed, 0.7918389830532464, epsilon = 1e-12);
        assert_relative_eq!(r.failures[0].bound, 0.7882149899883795, epsilon = 1e-12);
    }

    #[test]
    fn limit_half_short() {
        let r = check_limit_half(1.0, 1.0, &[11, 101, 1001], 0.03).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert!(check_limit_half(1.0, 1.0, &[101, 11], LIMIT_CEILING).is_err());
        // an unreachable ceiling is a claim failure, not an implementation one
        let r = check_limit_half(1.0, 1.0, &[11, 101, 1001], 1e-6).unwrap();
        assert_eq!(r.count(FailureKind::Claim), 1);
        assert_eq!(r.count(FailureKind::Implementation), 0);
    }

    #[test]
    fn pair_examples() {
        assert!(pair_case(&[0.0, 0.0, 0.2, 0.1]).unwrap().is_empty());
        let probs = compound_probs(0.3, 0.1).unwrap();
        let mix = probs.p_same * probs.p_plus + (1.0 - probs.p_same) * probs.p_minus.unwrap();
        assert_relative_eq!(mix, 0.8, epsilon = 1e-12);
        assert_relative_eq!(psucc_exact(&EffortProfile::new(vec![0.3, 0.1]).unwrap(), TieRule::Favor).unwrap(), mix, epsilon = 1e-12);
        let r = check_pair_reduction(200, 7).unwrap();
        assert!(r.passed(), "{:?}", r.failures.first());
    }

    #[test]
    fn reports_are_reproducible() {
        let a = check_pair_reduction(50, 3).unwrap();
        let b = check_pair_reduction(50, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(draw_cases(5, 9, 6, 1), draw_cases(5, 9, 6, 1));
        assert_ne!(draw_cases(5, 9, 6, 1), draw_cases(5, 10, 6, 1));
    }

    #[test]
    fn upper_bound_and_oracle() {
        assert!(check_upper_bound(300, 1, 8).unwrap().passed());
        assert!(check_oracle_equivalence(6, 6).unwrap().passed());
    }

    #[test]
    fn normal_cdf_values() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(normal_cdf(1.959963984540054), 0.975, epsilon = 1e-12);
    }
}
