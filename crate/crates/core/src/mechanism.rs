//! Reward rules for DReps and their pure Nash equilibria.
//!
//! A DRep's delegation share is `w_i = x_i / Σx`. The four rules split a
//! budget `B` as follows:
//!
//! * `Proportional`: `w_i·B`.
//! * `Threshold(k)`: `B/k` to every DRep with `w_i ≥ 1/k`.
//! * `Variant1(k)`: `B` shared equally by the DReps with `w_i ≥ 1/k`.
//! * `Variant2(k)`: `B` shared among the same DReps in proportion to `w_i`.
//!
//! Equilibria are certified on an effort grid: a profile passes when no single
//! DRep can raise its utility by more than [`EQ_EPS`] with another grid effort.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::CostFunction;
use crate::error::{domain, Error, Result};
use crate::roots::bisect;
use crate::scalar::{Real, Scalar};
use crate::success::EffortProfile;

/// Utility gain below which a deviation does not count as an improvement.
pub const EQ_EPS: f64 = 1e-9;

/// Default effort grid resolution.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "k", rename_all = "lowercase")]
pub enum Mechanism {
    Proportional,
    Threshold(usize),
    Variant1(usize),
    Variant2(usize),
}

impl Mechanism {
    pub fn threshold(k: usize) -> Result<Self> {
        check_k(k).map(|_| Self::Threshold(k))
    }

    pub fn variant1(k: usize) -> Result<Self> {
        check_k(k).map(|_| Self::Variant1(k))
    }

    pub fn variant2(k: usize) -> Result<Self> {
        check_k(k).map(|_| Self::Variant2(k))
    }

    pub fn threshold_k(&self) -> Option<usize> {
        match *self {
            Self::Proportional => None,
            Self::Threshold(k) | Self::Variant1(k) | Self::Variant2(k) => Some(k),
        }
    }

    /// Whether effort `x` earns a share of at least `1/k` of `total`.
    fn qualifies<T: Scalar>(x: &T, total: &T, k: usize) -> bool {
        *x > T::zero() && T::approx_ge(&(x.clone() * T::from_count(k)), total, total)
    }

    /// Per-DRep payments for a profile; all zero when nobody exerts effort.
    pub fn rewards<T: Scalar>(&self, profile: &EffortProfile<T>, budget: &T) -> Vec<T> {
        let efforts = profile.efforts();
        let total = profile.total();
        if total == T::zero() {
            return vec![T::zero(); efforts.len()];
        }
        match *self {
            Self::Proportional => efforts.iter().map(|x| budget.clone() * x.clone() / total.clone()).collect(),
            Self::Threshold(k) => {
                let share = budget.clone() / T::from_count(k);
                efforts
                    .iter()
                    .map(|x| if Self::qualifies(x, &total, k) { share.clone() } else { T::zero() })
                    .collect()
            }
            Self::Variant1(k) => {
                let winners = efforts.iter().filter(|x| Self::qualifies(*x, &total, k)).count();
                efforts
                    .iter()
                    .map(|x| {
                        if Self::qualifies(x, &total, k) {
                            budget.clone() / T::from_count(winners)
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            }
            Self::Variant2(k) => {
                let qualifying = efforts
                    .iter()
                    .filter(|x| Self::qualifies(*x, &total, k))
                    .fold(T::zero(), |a, x| a + x.clone());
                efforts
                    .iter()
                    .map(|x| {
                        if Self::qualifies(x, &total, k) {
                            budget.clone() * x.clone() / qualifying.clone()
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            }
        }
    }

    /// Reward minus own cost for every DRep.
    pub fn utilities<T: Real>(&self, profile: &EffortProfile<T>, budget: T, cost: &CostFunction<T>) -> Result<Vec<T>> {
        self.rewards(profile, &budget)
            .into_iter()
            .zip(profile.efforts())
            .map(|(r, &x)| Ok(r - cost.eval(x)?))
            .collect()
    }

    fn utility_of<T: Real>(&self, profile: &EffortProfile<T>, i: usize, budget: T, cost: &CostFunction<T>) -> Result<T> {
        Ok(self.rewards(profile, &budget)[i] - cost.eval(profile.efforts()[i])?)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(domain(format!("threshold parameter k = {} must be at least 2", k)));
    }
    Ok(())
}

impl FromStr for Mechanism {
    type Err = Error;

    /// `proportional`, `threshold:<k>`, `variant1:<k>` or `variant2:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "proportional" {
            return Ok(Self::Proportional);
        }
        let (kind, k) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("unknown mechanism `{}`", s)))?;
        let k: usize = k.trim().parse().map_err(|_| Error::Config(format!("`{}` is not a committee size", k)))?;
        match kind {
            "threshold" => Self::threshold(k),
            "variant1" => Self::variant1(k),
            "variant2" => Self::variant2(k),
            _ => Err(Error::Config(format!("unknown mechanism `{}`", kind))),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Proportional => write!(f, "proportional"),
            Self::Threshold(k) => write!(f, "threshold:{}", k),
            Self::Variant1(k) => write!(f, "variant1:{}", k),
            Self::Variant2(k) => write!(f, "variant2:{}", k),
        }
    }
}

/// Symmetric equilibrium effort of the proportional rule with `n` DReps,
/// the root of `B(n-1)/n² = x·c'(x)`.
///
/// For linear costs this is `B(n-1)/(a n²)`. Other costs go through
/// bisection, assuming `x·c'(x)` is increasing.
pub fn proportional_symmetric_eq<T: Real>(cost: &CostFunction<T>, n: usize, budget: T) -> Result<T> {
    if n < 2 {
        return Err(domain("proportional equilibrium needs at least two DReps"));
    }
    let nf = T::from_count(n);
    let target = budget * (nf - T::one()) / (nf * nf);
    let half = T::lit(0.5);
    if let CostFunction::Linear { slope } = cost {
        let x = target / *slope;
        if x > half {
            return Err(Error::Infeasible(format!("x = {:?} exceeds 1/2", x.as_f64())));
        }
        return Ok(x);
    }
    let hi = if cost.open_at_half() { half - half * T::lit(1e-12) } else { half };
    let g = |x: T| {
        if x == T::zero() {
            -target
        } else {
            x * cost.derivative(x).expect("bracket stays in domain") - target
        }
    };
    if g(hi) < T::zero() {
        return Err(Error::Infeasible("first-order condition has no root in (0, 1/2]".into()));
    }
    bisect(g, T::zero(), hi, T::bisect_tol()).ok_or_else(|| Error::Infeasible("no sign change".into()))
}

/// Equilibrium existence verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Existence {
    Yes,
    No,
    Inconclusive,
}

/// Interval of symmetric efforts; `lo_open` excludes the lower end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffortInterval<T> {
    pub lo: T,
    pub hi: T,
    pub lo_open: bool,
}

impl<T: Real> EffortInterval<T> {
    pub fn contains(&self, x: T, slack: T) -> bool {
        let above = if self.lo_open { x > self.lo - slack } else { x >= self.lo - slack };
        above && x <= self.hi + slack
    }
}

/// A unilateral grid deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation<T> {
    pub player: usize,
    pub from: T,
    pub to: T,
    pub gain: T,
}

/// Outcome of a grid best-response audit of one profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridAudit<T> {
    pub profile: Vec<T>,
    pub is_equilibrium: bool,
    /// Most improving deviation; lowest player then lowest effort on ties.
    pub best_deviation: Option<Deviation<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport<T> {
    pub mechanism: Mechanism,
    pub exists: Existence,
    pub support_size: usize,
    pub effort_intervals: Vec<EffortInterval<T>>,
    pub certificates: Vec<GridAudit<T>>,
}

/// Symmetric efforts `x` at which `k` DReps form a Threshold(k) equilibrium:
/// `c(kx/(k-1)) ≥ B/k ≥ c(x)` while `kx/(k-1) ≤ 1/2`, or `B/k ≥ c(x)` once
/// the outsider's required effort `kx/(k-1)` exceeds `1/2`.
pub fn threshold_eq_range<T: Real>(cost: &CostFunction<T>, budget: T, k: usize) -> Result<EquilibriumReport<T>> {
    let mechanism = Mechanism::threshold(k)?;
    if !(budget > T::zero()) {
        return Err(domain("budget must be positive"));
    }
    let half = T::lit(0.5);
    let kf = T::from_count(k);
    let ratio = (kf - T::one()) / kf;
    // kx/(k-1) = 1/2 here; the boundary itself belongs to the first branch.
    let boundary = ratio * half;
    let share = budget / kf;

    let mut intervals = Vec::new();
    match cost.inverse(share) {
        Ok(x_star) => {
            let lo = ratio * x_star;
            let hi = x_star.min(boundary);
            if lo <= hi && hi > T::zero() {
                intervals.push(EffortInterval { lo, hi, lo_open: lo == T::zero() });
            }
            if x_star > boundary {
                intervals.push(EffortInterval { lo: boundary, hi: x_star, lo_open: true });
            }
        }
        Err(Error::Saturated(_)) => {
            // every effort is affordable; outsiders can never catch up once kx/(k-1) > 1/2
            let hi = if cost.open_at_half() { half - half * T::epsilon() } else { half };
            intervals.push(EffortInterval { lo: boundary, hi, lo_open: true });
        }
        Err(e) => return Err(e),
    }
    Ok(EquilibriumReport {
        mechanism,
        exists: if intervals.is_empty() { Existence::No } else { Existence::Yes },
        support_size: k,
        effort_intervals: intervals,
        certificates: Vec::new(),
    })
}

/// Grid `{0, h, 2h, ..., 1/2}` with `h ≈ step`, minus efforts the cost rejects.
pub fn effort_grid<T: Real>(step: T, cost: &CostFunction<T>) -> Vec<T> {
    let half = T::lit(0.5);
    let n = (half / step).round().to_usize().unwrap_or(1).max(1);
    (0..=n)
        .map(|j| half * T::from_count(j) / T::from_count(n))
        .filter(|&x| cost.eval(x).is_ok())
        .collect()
}

/// Audit a profile against every unilateral deviation on the effort grid.
pub fn is_grid_equilibrium<T: Real>(
    mechanism: Mechanism,
    profile: &EffortProfile<T>,
    budget: T,
    cost: &CostFunction<T>,
    step: T,
) -> Result<GridAudit<T>> {
    audit_on_grid(mechanism, profile, budget, cost, &effort_grid(step, cost), false)
}

fn audit_on_grid<T: Real>(
    mechanism: Mechanism,
    profile: &EffortProfile<T>,
    budget: T,
    cost: &CostFunction<T>,
    grid: &[T],
    stop_at_first: bool,
) -> Result<GridAudit<T>> {
    let eps = T::lit(EQ_EPS);
    let current = mechanism.utilities(profile, budget, cost)?;
    let mut best: Option<Deviation<T>> = None;
    'players: for (i, &x) in profile.efforts().iter().enumerate() {
        for &g in grid {
            if g == x {
                continue;
            }
            let gain = mechanism.utility_of(&profile.with_effort(i, g), i, budget, cost)? - current[i];
            if best.as_ref().map_or(gain > eps, |b| gain > b.gain) {
                best = Some(Deviation { player: i, from: x, to: g, gain });
                if stop_at_first {
                    break 'players;
                }
            }
        }
    }
    let is_equilibrium = best.as_ref().map_or(true, |b| b.gain <= eps);
    Ok(GridAudit { profile: profile.efforts().to_vec(), is_equilibrium, best_deviation: best })
}

/// Audits sample efforts inside and just outside each reported interval with
/// `n` DReps and records them as certificates.
pub fn certify<T: Real>(
    report: &mut EquilibriumReport<T>,
    n: usize,
    budget: T,
    cost: &CostFunction<T>,
    step: T,
) -> Result<()> {
    let k = report.support_size;
    if n < k {
        return Err(domain("population smaller than the support size"));
    }
    let grid = effort_grid(step, cost);
    let mut samples: Vec<T> = Vec::new();
    for iv in &report.effort_intervals {
        let inside: Vec<T> = grid.iter().copied().filter(|&x| x > T::zero() && iv.contains(x, T::zero())).collect();
        if let (Some(&a), Some(&b)) = (inside.first(), inside.last()) {
            samples.extend([a, inside[inside.len() / 2], b]);
        }
        if let Some(&below) = grid.iter().rev().find(|&&x| x > T::zero() && x < iv.lo) {
            samples.push(below);
        }
        if let Some(&above) = grid.iter().find(|&&x| x > iv.hi) {
            samples.push(above);
        }
    }
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite efforts"));
    samples.dedup();
    for x in samples {
        let profile = EffortProfile::symmetric(x, k, n - k)?;
        report.certificates.push(is_grid_equilibrium(report.mechanism, &profile, budget, cost, step)?);
    }
    Ok(())
}

/// One improving move in best-response dynamics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Move<T> {
    pub round: usize,
    pub player: usize,
    pub old_x: T,
    pub new_x: T,
    pub utility_gain: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub moves: Vec<Move<T>>,
    pub rounds: usize,
    /// A full round passed without any improving move.
    pub converged: bool,
    pub final_profile: Vec<T>,
}

impl<T: Real + fmt::Display> Trajectory<T> {
    /// `round,player,old_x,new_x,utility_gain` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,player,old_x,new_x,utility_gain\n");
        for m in &self.moves {
            out.push_str(&format!("{},{},{},{},{}\n", m.round, m.player, m.old_x, m.new_x, m.utility_gain));
        }
        out
    }
}

/// Round-robin exact grid best responses from `init`.
///
/// Each DRep in index order moves to its best grid effort (lowest effort
/// among equals) when that improves its utility by more than [`EQ_EPS`].
pub fn best_response_dynamics<T: Real>(
    mechanism: Mechanism,
    budget: T,
    cost: &CostFunction<T>,
    init: &EffortProfile<T>,
    step: T,
    max_rounds: usize,
) -> Result<Trajectory<T>> {
    let grid = effort_grid(step, cost);
    let eps = T::lit(EQ_EPS);
    let mut profile = init.clone();
    let mut moves = Vec::new();
    let mut rounds = 0;
    let mut converged = false;
    while rounds < max_rounds {
        rounds += 1;
        let mut moved = false;
        for i in 0..profile.len() {
            let now = mechanism.utility_of(&profile, i, budget, cost)?;
            let old_x = profile.efforts()[i];
            let mut best = (old_x, now);
            for &g in &grid {
                let u = mechanism.utility_of(&profile.with_effort(i, g), i, budget, cost)?;
                if u > best.1 + eps {
                    best = (g, u);
                }
            }
            if best.0 != old_x {
                moves.push(Move { round: rounds, player: i, old_x, new_x: best.0, utility_gain: best.1 - now });
                profile = profile.with_effort(i, best.0);
                moved = true;
            }
        }
        if !moved {
            converged = true;
            break;
        }
    }
    Ok(Trajectory { moves, rounds, converged, final_profile: profile.efforts().to_vec() })
}

/// Symmetric grid profiles `(x, ..., x, 0, ..., 0)` that pass the grid audit,
/// as `(support, x)` pairs. `support = 0` is the all-zero profile.
pub fn scan_symmetric_equilibria<T: Real>(
    mechanism: Mechanism,
    n: usize,
    budget: T,
    cost: &CostFunction<T>,
    step: T,
) -> Result<Vec<(usize, T)>> {
    let grid = effort_grid(step, cost);
    let mut candidates = vec![(0usize, T::zero())];
    for s in 1..=n {
        candidates.extend(grid.iter().filter(|&&x| x > T::zero()).map(|&x| (s, x)));
    }
    let found: Result<Vec<Option<(usize, T)>>> = candidates
        .par_iter()
        .map(|&(s, x)| {
            let profile = EffortProfile::symmetric(x, s, n - s)?;
            let audit = audit_on_grid(mechanism, &profile, budget, cost, &grid, true)?;
            Ok(audit.is_equilibrium.then_some((s, x)))
        })
        .collect();
    Ok(found?.into_iter().flatten().collect())
}

/// Every grid profile of `n` DReps (up to relabelling) that passes the audit.
/// The rules are anonymous, so nondecreasing effort vectors cover all classes.
pub fn scan_all_equilibria<T: Real>(
    mechanism: Mechanism,
    n: usize,
    budget: T,
    cost: &CostFunction<T>,
    step: T,
) -> Result<Vec<EffortProfile<T>>> {
    let grid = effort_grid(step, cost);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        classes.push(idx.clone());
        // next nondecreasing index vector
        let mut pos = n;
        while pos > 0 && idx[pos - 1] == grid.len() - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        idx[pos - 1] += 1;
        let v = idx[pos - 1];
        for slot in idx.iter_mut().skip(pos) {
            *slot = v;
        }
    }
    let found: Result<Vec<Option<EffortProfile<T>>>> = classes
        .par_iter()
        .map(|c| {
            let profile = EffortProfile::new(c.iter().map(|&j| grid[j]).collect())?;
            let audit = audit_on_grid(mechanism, &profile, budget, cost, &grid, true)?;
            Ok(audit.is_equilibrium.then_some(profile))
        })
        .collect();
    Ok(found?.into_iter().flatten().collect())
}
