//! Budgeted committee design: the best symmetric effort for each committee
//! size, the best size overall, and the three-versus-one comparison.

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::{CostFunction, Curvature, GeometricBounds};
use crate::error::{domain, Error, Result};
use crate::mechanism::effort_grid;
use crate::scalar::Real;
use crate::success::{psucc_exact, psucc_symmetric, EffortProfile, TieRule};

/// Label attached to every bound that relies on the unproven monotonicity
/// conjecture for linear costs.
pub const CONDITIONAL_NOTE: &str = "conditional on Assumption 1";

/// Largest committee `asymmetric_opt_small` enumerates.
pub const MAX_ASYMMETRIC: usize = 4;

/// Slack on the budget constraint in grid searches.
pub const BUDGET_SLACK: f64 = 1e-12;

/// Best per-DRep effort when `k` DReps split `B` equally: `min(1/2, c⁻¹(B/k))`.
pub fn opt_symmetric_effort<T: Real>(cost: &CostFunction<T>, budget: T, k: usize) -> Result<T> {
    if !(budget > T::zero()) {
        return Err(domain("budget must be positive"));
    }
    if k == 0 {
        return Err(domain("committee size must be positive"));
    }
    let share = budget / T::from_count(k);
    let half = T::lit(0.5);
    if let CostFunction::ExpLearning { rate, complexity } = cost {
        let closed = (-(-*rate * share).exp_m1()).powf(*complexity) * half;
        debug_assert!(
            cost.inverse(share).map_or(true, |x| (x - closed).abs() <= T::lit(1e-10)),
            "closed form disagrees with inverse"
        );
        if closed < half {
            return Ok(closed);
        }
    }
    match cost.inverse(share) {
        Ok(x) => Ok(x.min(half)),
        Err(Error::Saturated(_)) => Ok(half),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommitteeEntry<T> {
    pub k: usize,
    pub x_star: T,
    pub cost_spent: T,
    pub p_succ: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult<T> {
    pub per_k: Vec<CommitteeEntry<T>>,
    pub k_star: usize,
    pub p_star: T,
    pub bounds: GeometricBounds<T>,
    /// At most `⌊B/c(x_int)⌋` DReps are optimal (concave-convex costs).
    pub bound_on_k: Option<u64>,
    /// At most `⌊B/c(x_tangent)⌋` DReps are optimal; see [`CONDITIONAL_NOTE`].
    pub conditional_bound_on_k: Option<u64>,
    pub conditional_note: Option<&'static str>,
}

/// Evaluates every committee size `1..=k_max` at its best symmetric effort.
/// Equal success probabilities resolve to the smaller committee.
pub fn opt_committee<T: Real>(
    cost: &CostFunction<T>,
    budget: T,
    k_max: usize,
    tie: TieRule,
) -> Result<OptimizationResult<T>> {
    if k_max == 0 {
        return Err(domain("k_max must be at least 1"));
    }
    let per_k: Result<Vec<CommitteeEntry<T>>> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let x_star = opt_symmetric_effort(cost, budget, k)?;
            Ok(CommitteeEntry {
                k,
                x_star,
                cost_spent: T::from_count(k) * cost.eval(x_star)?,
                p_succ: psucc_symmetric(x_star, k as u64, tie),
            })
        })
        .collect();
    let per_k = per_k?;
    let mut best = &per_k[0];
    for e in &per_k[1..] {
        if e.p_succ > best.p_succ && !T::approx_eq(&e.p_succ, &best.p_succ, &T::one()) {
            best = e;
        }
    }
    let (k_star, p_star) = (best.k, best.p_succ);

    let bounds = cost.bounds(budget);
    let concave_convex = cost.curvature() == Curvature::ConcaveConvex;
    let bound_on_k = if concave_convex { bounds.dreps_at_x_int } else { None };
    let conditional_bound_on_k = if concave_convex { bounds.dreps_at_x_tangent } else { None };
    Ok(OptimizationResult {
        per_k,
        k_star,
        p_star,
        bounds,
        bound_on_k,
        conditional_bound_on_k,
        conditional_note: conditional_bound_on_k.map(|_| CONDITIONAL_NOTE),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    One,
    Three,
    Tie,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::One => "one",
            Self::Three => "three",
            Self::Tie => "tie",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeVsOne<T> {
    pub budget: T,
    pub x_one: T,
    pub x_three: T,
    /// `(3x₃ − 4x₃³)/2`; three DReps win iff `x₁` is strictly below it.
    pub threshold: T,
    pub verdict: Verdict,
    pub p_one: T,
    pub p_three: T,
    pub direct_verdict: Verdict,
    pub agree: bool,
}

fn verdict_of<T: Real>(one: T, three: T) -> Verdict {
    if T::approx_eq(&one, &three, &T::one()) {
        Verdict::Tie
    } else if three > one {
        Verdict::Three
    } else {
        Verdict::One
    }
}

/// Closed-form three-versus-one criterion, cross-checked by comparing the two
/// success probabilities directly.
pub fn three_vs_one<T: Real>(cost: &CostFunction<T>, budget: T) -> Result<ThreeVsOne<T>> {
    let x_one = opt_symmetric_effort(cost, budget, 1)?;
    let x_three = opt_symmetric_effort(cost, budget, 3)?;
    let threshold = (T::lit(3.0) * x_three - T::lit(4.0) * x_three.powi(3)) / T::lit(2.0);
    let verdict = verdict_of(x_one, threshold);
    let p_one = psucc_symmetric(x_one, 1, TieRule::Half);
    let p_three = psucc_symmetric(x_three, 3, TieRule::Half);
    let direct_verdict = verdict_of(p_one, p_three);
    Ok(ThreeVsOne {
        budget,
        x_one,
        x_three,
        threshold,
        verdict,
        p_one,
        p_three,
        direct_verdict,
        agree: verdict == direct_verdict,
    })
}

/// `ln 3 / (ln 3 − ln 2)`: for `c(x) = x^β` with `β` above this, three DReps
/// beat one at small budgets; below it, one DRep always wins.
pub fn beta_star<T: Real>() -> T {
    let (l2, l3) = (T::LN_2(), T::lit(3.0).ln());
    l3 / (l3 - l2)
}

/// Budget below which three DReps beat one for `c(x) = x^β`:
/// `3^{3/2} · ((3^{1−1/β} − 2)/4)^{β/2}`.
pub fn budget_threshold_power<T: Real>(beta: T) -> Result<T> {
    if !(beta > beta_star::<T>()) {
        return Err(domain(format!("exponent {:?} must exceed beta* = {:?}", beta, beta_star::<T>())));
    }
    let three = T::lit(3.0);
    let base = (three.powf(T::one() - beta.recip()) - T::lit(2.0)) / T::lit(4.0);
    Ok(three.powf(T::lit(1.5)) * base.powf(beta / T::lit(2.0)))
}

/// Cost of the origin tangency point; below this budget a single DRep is optimal.
pub fn b_star_tangent<T: Real>(cost: &CostFunction<T>) -> Result<T> {
    if cost.curvature() != Curvature::ConcaveConvex {
        return Err(Error::NoTangent);
    }
    let x = cost.origin_tangency().ok_or(Error::NoTangent)?;
    cost.eval(x)
}

/// Budget resolution of [`b_three`].
pub const B_THREE_TOL: f64 = 1e-4;

const B_THREE_SCAN: usize = 1000;

/// Budget where the three-versus-one verdict first changes on `(0, search_hi]`.
///
/// A uniform scan finds the first decisive verdict change; bisection then
/// narrows it to [`B_THREE_TOL`]. Ties count as neither side.
pub fn b_three<T: Real>(cost: &CostFunction<T>, search_hi: T) -> Result<T> {
    if !(search_hi > T::zero()) {
        return Err(domain("search bound must be positive"));
    }
    let verdict = |b: T| three_vs_one(cost, b).map(|r| r.verdict);
    let mut start: Option<(T, Verdict)> = None;
    let mut bracket = None;
    for j in 1..=B_THREE_SCAN {
        let b = search_hi * T::from_count(j) / T::from_count(B_THREE_SCAN);
        let v = verdict(b)?;
        if v == Verdict::Tie {
            continue;
        }
        match start {
            None => start = Some((b, v)),
            Some((_, v0)) if v != v0 => {
                bracket = Some((start.unwrap(), b));
                break;
            }
            Some(_) => start = Some((b, v)),
        }
    }
    let Some(((mut lo, v0), mut hi)) = bracket else {
        return Err(Error::NoFlip(search_hi.as_f64()));
    };
    let tol = T::lit(B_THREE_TOL);
    while hi - lo > tol * T::lit(1e-3) {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if verdict(mid)? == v0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / T::lit(2.0))
}

/// Budget in `(0, search_hi]` where three DReps gain the most over one, found
/// by a uniform scan refined with golden-section search.
pub fn three_advantage_peak<T: Real>(cost: &CostFunction<T>, search_hi: T) -> Result<(T, T)> {
    let gap = |b: T| three_vs_one(cost, b).map(|r| r.p_three - r.p_one);
    let n = B_THREE_SCAN;
    let step = search_hi / T::from_count(n);
    let mut best = (step, gap(step)?);
    for j in 2..=n {
        let b = step * T::from_count(j);
        let g = gap(b)?;
        if g > best.1 {
            best = (b, g);
        }
    }
    let (mut lo, mut hi) = ((best.0 - step).max(step * T::lit(1e-6)), (best.0 + step).min(search_hi));
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    for _ in 0..100 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if gap(a)? >= gap(b)? {
            hi = b;
        } else {
            lo = a;
        }
    }
    let b = lo + (hi - lo) / T::lit(2.0);
    let g = gap(b)?;
    Ok(if g >= best.1 { (b, g) } else { best })
}

/// Exhaustive search over grid effort vectors of `n ≤ 4` DReps with
/// `Σ c(x_i) ≤ B`, maximising the success probability (ties counting half).
///
/// Returns efforts in nonincreasing order. Among equally good vectors the one
/// with fewer positive efforts, then the lexicographically largest, wins.
pub fn asymmetric_opt_small<T: Real>(
    cost: &CostFunction<T>,
    budget: T,
    n: usize,
    step: T,
) -> Result<(EffortProfile<T>, T)> {
    if n == 0 || n > MAX_ASYMMETRIC {
        return Err(domain(format!("committee size {} outside 1..={}", n, MAX_ASYMMETRIC)));
    }
    let grid = effort_grid(step, cost);
    let costs: Vec<T> = grid.iter().map(|&x| cost.eval(x)).collect::<Result<_>>()?;
    let limit = budget + T::lit(BUDGET_SLACK);

    // nonincreasing index vectors within budget, grouped by leading index
    let leads: Vec<usize> = (0..grid.len()).rev().filter(|&i| costs[i] <= limit).collect();
    let per_lead: Result<Vec<Option<(Vec<usize>, T)>>> = leads
        .par_iter()
        .map(|&lead| {
            let mut best: Option<(Vec<usize>, T)> = None;
            let mut idx = vec![lead];
            search(&grid, &costs, limit, n, costs[lead], &mut idx, &mut best)?;
            Ok(best)
        })
        .collect();
    let mut best: Option<(Vec<usize>, T)> = None;
    for cand in per_lead?.into_iter().flatten() {
        if better(&cand, &best) {
            best = Some(cand);
        }
    }
    let (idx, p) = best.expect("the zero vector is always feasible");
    Ok((EffortProfile::new(idx.iter().map(|&i| grid[i]).collect())?, p))
}

fn better<T: Real>(cand: &(Vec<usize>, T), best: &Option<(Vec<usize>, T)>) -> bool {
    let Some((bi, bp)) = best else { return true };
    let (ci, cp) = cand;
    if !T::approx_eq(cp, bp, &T::one()) {
        return cp > bp;
    }
    let support = |v: &[usize]| v.iter().filter(|&&i| i > 0).count();
    match support(ci).cmp(&support(bi)) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => ci > bi,
    }
}

fn search<T: Real>(
    grid: &[T],
    costs: &[T],
    limit: T,
    n: usize,
    spent: T,
    idx: &mut Vec<usize>,
    best: &mut Option<(Vec<usize>, T)>,
) -> Result<()> {
    if idx.len() == n {
        let profile = EffortProfile::new(idx.iter().map(|&i| grid[i]).collect())?;
        let cand = (idx.clone(), psucc_exact(&profile, TieRule::Half)?);
        if better(&cand, best) {
            *best = Some(cand);
        }
        return Ok(());
    }
    let top = *idx.last().expect("search starts with a leading index");
    for i in (0..=top).rev() {
        if spent + costs[i] > limit {
            continue;
        }
        idx.push(i);
        search(grid, costs, limit, n, spent + costs[i], idx, best)?;
        idx.pop();
    }
    Ok(())
}
