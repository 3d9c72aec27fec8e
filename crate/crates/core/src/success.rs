//! Probability that a weighted majority of independent voters picks the
//! correct one of two outcomes.
//!
//! Voter `i` with effort `x_i` votes correctly with probability `1/2 + x_i`
//! and carries weight `x_i`. Summing `+x_i` for correct votes and `-x_i` for
//! wrong ones, the election succeeds when the sum is positive; a zero sum is
//! a tie resolved by [`TieRule`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{Real, Scalar};

/// Largest number of positive-effort voters [`psucc_exact`] will enumerate.
pub const MAX_ENUMERATED: usize = 24;

/// Below this many voters enumeration runs on the calling thread.
const PARALLEL_FROM: usize = 16;
/// Voters whose outcomes are fixed per parallel task.
const SPLIT_DEPTH: usize = 6;

/// Efforts `x_i ∈ [0, 1/2]` of the DReps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EffortProfile<T> {
    efforts: Vec<T>,
}

impl<T: Scalar> EffortProfile<T> {
    pub fn new(efforts: Vec<T>) -> Result<Self> {
        let half = T::half();
        for (i, x) in efforts.iter().enumerate() {
            if !(*x >= T::zero() && *x <= half) {
                return Err(domain(format!("effort {} = {:?} outside [0, 1/2]", i, x)));
            }
        }
        Ok(Self { efforts })
    }

    /// `k` DReps of effort `x` followed by `zeros` idle ones.
    pub fn symmetric(x: T, k: usize, zeros: usize) -> Result<Self> {
        let mut efforts = vec![x; k];
        efforts.extend(std::iter::repeat(T::zero()).take(zeros));
        Self::new(efforts)
    }

    pub fn efforts(&self) -> &[T] {
        &self.efforts
    }

    pub fn len(&self) -> usize {
        self.efforts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.efforts.is_empty()
    }

    pub fn total(&self) -> T {
        self.efforts.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    pub fn positive_count(&self) -> usize {
        self.efforts.iter().filter(|x| **x > T::zero()).count()
    }

    /// Delegation shares `x_i / Σx`; all zero when nobody exerts effort.
    pub fn weights(&self) -> Vec<T> {
        let total = self.total();
        if total == T::zero() {
            return vec![T::zero(); self.len()];
        }
        self.efforts.iter().map(|x| x.clone() / total.clone()).collect()
    }

    /// Copy with player `i` switched to effort `x`.
    pub fn with_effort(&self, i: usize, x: T) -> Self {
        let mut efforts = self.efforts.clone();
        efforts[i] = x;
        Self { efforts }
    }

    /// Independent voters with weight `x_i` and accuracy `1/2 + x_i`.
    pub fn voters(&self) -> Vec<Voter<T>> {
        self.efforts
            .iter()
            .filter(|x| **x > T::zero())
            .map(|x| Voter { weight: x.clone(), p_correct: T::half() + x.clone() })
            .collect()
    }
}

/// How an exact tie between the two outcomes is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Coin flip: a tie succeeds with probability 1/2.
    #[default]
    Half,
    /// A tie always resolves to the correct outcome.
    Favor,
}

impl TieRule {
    fn weight<T: Scalar>(self) -> T {
        match self {
            TieRule::Half => T::half(),
            TieRule::Favor => T::one(),
        }
    }
}

impl std::str::FromStr for TieRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(Self::Half),
            "favor" => Ok(Self::Favor),
            _ => Err(Error::Config(format!("unknown tie rule `{}`", s))),
        }
    }
}

/// A voter adding `+weight` to the score with probability `p_correct` and
/// `-weight` otherwise. Compound voters decouple accuracy from effort.
#[derive(Debug, Clone, PartialEq)]
pub struct Voter<T> {
    pub weight: T,
    pub p_correct: T,
}

struct Tally<T> {
    win: T,
    tie: T,
}

fn enumerate<T: Scalar>(voters: &[Voter<T>], score: T, prob: T, slack: &T, out: &mut Tally<T>) {
    if prob == T::zero() {
        return;
    }
    match voters.split_first() {
        None => {
            if score <= *slack && T::zero() - score.clone() <= *slack {
                out.tie = out.tie.clone() + prob;
            } else if score > T::zero() {
                out.win = out.win.clone() + prob;
            }
        }
        Some((v, rest)) => {
            let p = v.p_correct.clone();
            enumerate(rest, score.clone() + v.weight.clone(), prob.clone() * p.clone(), slack, out);
            enumerate(rest, score - v.weight.clone(), prob * (T::one() - p), slack, out);
        }
    }
}

fn tally<T: Scalar + Send + Sync>(voters: &[Voter<T>], slack: &T) -> Tally<T> {
    let zero = || Tally { win: T::zero(), tie: T::zero() };
    if voters.len() < PARALLEL_FROM {
        let mut out = zero();
        enumerate(voters, T::zero(), T::one(), slack, &mut out);
        return out;
    }
    let (head, rest) = voters.split_at(SPLIT_DEPTH);
    // Partial results are merged in prefix order, so the sum is schedule independent.
    let parts: Vec<Tally<T>> = (0..1usize << SPLIT_DEPTH)
        .into_par_iter()
        .map(|mask| {
            let mut score = T::zero();
            let mut prob = T::one();
            for (j, v) in head.iter().enumerate() {
                if mask >> j & 1 == 0 {
                    score = score + v.weight.clone();
                    prob = prob * v.p_correct.clone();
                } else {
                    score = score - v.weight.clone();
                    prob = prob * (T::one() - v.p_correct.clone());
                }
            }
            let mut out = zero();
            enumerate(rest, score, prob, slack, &mut out);
            out
        })
        .collect();
    parts.into_iter().fold(zero(), |a, b| Tally { win: a.win + b.win, tie: a.tie + b.tie })
}

/// Success probability of arbitrary independent voters by full enumeration.
pub fn psucc_voters<T: Scalar + Send + Sync>(voters: &[Voter<T>], tie: TieRule) -> Result<T> {
    let active: Vec<Voter<T>> = voters.iter().filter(|v| v.weight > T::zero()).cloned().collect();
    if active.len() > MAX_ENUMERATED {
        return Err(Error::TooManyVoters(active.len(), MAX_ENUMERATED));
    }
    let total = active.iter().fold(T::zero(), |a, v| a + v.weight.clone());
    let slack = T::tie_slack(&total);
    let t = tally(&active, &slack);
    Ok(t.win + t.tie * tie.weight::<T>())
}

/// Exact success probability of an effort profile.
pub fn psucc_exact<T: Scalar + Send + Sync>(profile: &EffortProfile<T>, tie: TieRule) -> Result<T> {
    psucc_voters(&profile.voters(), tie)
}

/// Success probability of `k` DReps with common effort `x`, summed in log space.
pub fn psucc_symmetric<T: Real>(x: T, k: u64, tie: TieRule) -> T {
    assert!(k >= 1, "committee must have at least one DRep");
    let half = T::lit(0.5);
    let x = x.max(T::zero()).min(half);
    if x == half {
        return T::one();
    }
    // zero effort makes every vote weightless, so the outcome is always a tie
    if x == T::zero() {
        return tie.weight();
    }
    let ln_p = (half + x).ln();
    let ln_q = (half - x).ln();
    let kf = |i: u64| T::from_u64(i).expect("count representable");

    // ln C(k, i) walked down from i = k; only the winning half and the tie are needed.
    let lowest = if k % 2 == 0 { k / 2 } else { k / 2 + 1 };
    let mut terms: Vec<T> = Vec::with_capacity((k - lowest + 1) as usize);
    let mut ln_binom = T::zero();
    let mut i = k;
    loop {
        terms.push(ln_binom + kf(i) * ln_p + kf(k - i) * ln_q);
        if i == lowest {
            break;
        }
        ln_binom = ln_binom + kf(i).ln() - kf(k - i + 1).ln();
        i -= 1;
    }
    let tie_term = if k % 2 == 0 { terms.pop() } else { None };

    let max = terms
        .iter()
        .copied()
        .chain(tie_term)
        .fold(T::neg_infinity(), T::max);
    let scaled = |lt: T| (lt - max).exp();
    let mut sum = Neumaier::default();
    for &lt in &terms {
        sum.add(scaled(lt));
    }
    if let Some(lt) = tie_term {
        sum.add(tie.weight::<T>() * scaled(lt));
    }
    (sum.total() * max.exp()).min(T::one())
}

/// Compensated summation with a fixed reduction order.
struct Neumaier<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Default for Neumaier<T> {
    fn default() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }
}

impl<T: Real> Neumaier<T> {
    fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp = self.comp + ((self.sum - t) + v);
        } else {
            self.comp = self.comp + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    fn total(&self) -> T {
        self.sum + self.comp
    }
}

/// `min(1, 1/2 + Σx)`: the success probability of one DRep carrying all the effort.
pub fn psucc_upper_bound<T: Scalar>(profile: &EffortProfile<T>) -> T {
    let bound = T::half() + profile.total();
    if bound > T::one() {
        T::one()
    } else {
        bound
    }
}

/// Behaviour of two DReps merged into one compound voter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundProbs<T> {
    /// Probability both DReps vote alike.
    pub p_same: T,
    /// Probability they are right, given they agree.
    pub p_plus: T,
    /// Probability the stronger one is right, given they disagree. `None` when
    /// disagreement is impossible (`4·x1·x2 = 1`).
    pub p_minus: Option<T>,
}

/// Compound-voter probabilities for efforts `x1 ≥ x2`.
pub fn compound_probs<T: Scalar>(x1: T, x2: T) -> Result<CompoundProbs<T>> {
    if x1 < x2 {
        return Err(domain("compound_probs expects x1 >= x2"));
    }
    let half = T::half();
    for x in [&x1, &x2] {
        if !(*x >= T::zero() && *x <= half) {
            return Err(domain(format!("effort {:?} outside [0, 1/2]", x)));
        }
    }
    let two = T::one() + T::one();
    let four_prod = two.clone() * two.clone() * x1.clone() * x2.clone();
    let p_same = half.clone() + two * x1.clone() * x2.clone();
    let p_plus = half.clone() + (x1.clone() + x2.clone()) / (T::one() + four_prod.clone());
    let p_minus = if four_prod < T::one() {
        Some(half + (x1 - x2) / (T::one() - four_prod))
    } else {
        None
    };
    Ok(CompoundProbs { p_same, p_plus, p_minus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn prof(v: &[f64]) -> EffortProfile<f64> {
        EffortProfile::new(v.to_vec()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Hand enumeration over the 2^n vote vectors via bit masks.
    fn brute(efforts: &[f64], tie_weight: f64) -> f64 {
        let n = efforts.len();
        let total: f64 = efforts.iter().sum();
        let mut p = 0.0;
        for mask in 0..1u32 << n {
            let mut prob = 1.0;
            let mut right = 0.0;
            for (i, &x) in efforts.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    prob *= 0.5 + x;
                    right += x;
                } else {
                    prob *= 0.5 - x;
                }
            }
            let d = 2.0 * right - total;
            if d.abs() <= 1e-12 {
                p += tie_weight * prob;
            } else if d > 0.0 {
                p += prob;
            }
        }
        p
    }

    #[test]
    fn exact_examples() {
        assert_eq!(psucc_exact(&prof(&[0.0, 0.0, 0.0]), TieRule::Half).unwrap(), 0.5);
        assert_eq!(psucc_exact(&prof(&[0.0, 0.0, 0.0]), TieRule::Favor).unwrap(), 1.0);
        assert_relative_eq!(psucc_exact(&prof(&[0.2, 0.1]), TieRule::Half).unwrap(), 0.7, epsilon = 1e-15);
        assert_relative_eq!(brute(&[0.2, 0.1], 0.5), 0.7, epsilon = 1e-15);
        let p = 0.6;
        assert_relative_eq!(psucc_exact(&prof(&[0.1, 0.1, 0.1]), TieRule::Half).unwrap(), p * p * p + 3.0 * p * p * (1.0 - p), epsilon = 1e-15);
        assert_relative_eq!(brute(&[0.1, 0.1, 0.1], 0.5), 0.648, epsilon = 1e-15);
    }

    #[test]
    fn exact_matches_bitmask_enumeration() {
        let cases: &[&[f64]] = &[&[0.3, 0.1, 0.2], &[0.05, 0.05, 0.1, 0.4], &[0.25, 0.25, 0.25, 0.25], &[0.1, 0.2, 0.3, 0.15, 0.05]];
        for c in cases {
            for (rule, w) in [(TieRule::Half, 0.5), (TieRule::Favor, 1.0)] {
                assert_relative_eq!(psucc_exact(&prof(c), rule).unwrap(), brute(c, w), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rational_mode_is_exact() {
        let profile = EffortProfile::new(vec![rat(1, 5), rat(1, 10)]).unwrap();
        assert_eq!(psucc_exact(&profile, TieRule::Half).unwrap(), rat(7, 10));
        // (0.1, 0.1): an exact tie on disagreement
        let profile = EffortProfile::new(vec![rat(1, 10), rat(1, 10)]).unwrap();
        assert_eq!(psucc_exact(&profile, TieRule::Half).unwrap(), rat(3, 5));
        assert_eq!(psucc_exact(&profile, TieRule::Favor).unwrap(), rat(3, 5) * rat(3, 5) + rat(2, 1) * rat(3, 5) * rat(2, 5));
    }

    #[test]
    fn near_tie_float_agrees_with_rational() {
        // 0.1 + 0.2 vs 0.3 is a tie only up to rounding
        let f = psucc_exact(&prof(&[0.1, 0.2, 0.3]), TieRule::Half).unwrap();
        let r = psucc_exact(&EffortProfile::new(vec![rat(1, 10), rat(1, 5), rat(3, 10)]).unwrap(), TieRule::Half).unwrap();
        assert_relative_eq!(f, num_traits::ToPrimitive::to_f64(&r).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn too_many_voters() {
        let p = prof(&[0.01; 25]);
        assert_eq!(psucc_exact(&p, TieRule::Half), Err(Error::TooManyVoters(25, 24)));
        // zero-effort voters do not count toward the limit
        let mut v = vec![0.01; 20];
        v.extend([0.0; 10]);
        assert!(psucc_exact(&prof(&v), TieRule::Half).is_ok());
    }

    #[test]
    fn parallel_split_matches_sequential() {
        let v: Vec<f64> = (0..18).map(|i| 0.01 + 0.02 * i as f64).collect();
        let v: Vec<f64> = v.into_iter().map(|x| x.min(0.5)).collect();
        let par = psucc_exact(&prof(&v), TieRule::Half).unwrap();
        let voters = prof(&v).voters();
        let total: f64 = v.iter().sum();
        let mut out = Tally { win: 0.0, tie: 0.0 };
        enumerate(&voters, 0.0, 1.0, &f64::tie_slack(&total), &mut out);
        assert_relative_eq!(par, out.win + 0.5 * out.tie, epsilon = 1e-13);
    }

    #[test]
    fn symmetric_examples() {
        assert_relative_eq!(psucc_symmetric(0.1, 1, TieRule::Half), 0.6, epsilon = 1e-15);
        assert_relative_eq!(psucc_symmetric(0.1, 2, TieRule::Half), 0.6, epsilon = 1e-15);
        assert_relative_eq!(psucc_symmetric(0.1, 2, TieRule::Half), psucc_exact(&prof(&[0.1, 0.1]), TieRule::Half).unwrap(), epsilon = 1e-15);
        assert_relative_eq!(psucc_symmetric(0.1, 3, TieRule::Half), 0.648, epsilon = 1e-14);
        assert_eq!(psucc_symmetric(0.5, 7, TieRule::Half), 1.0);
        assert_relative_eq!(psucc_symmetric(0.0, 6, TieRule::Half), 0.5, epsilon = 1e-15);
        assert_eq!(psucc_symmetric(0.0, 1, TieRule::Favor), 1.0);
    }

    #[test]
    fn symmetric_large_committee_is_finite() {
        let p = psucc_symmetric(1e-5, 1_000_000, TieRule::Half);
        assert!(p > 0.5 && p < 0.6);
        let q = psucc_symmetric(0.01, 1_000_000, TieRule::Half);
        assert_relative_eq!(q, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn upper_bound_examples() {
        assert_relative_eq!(psucc_upper_bound(&prof(&[0.2, 0.1])), 0.8, epsilon = 1e-15);
        assert_eq!(psucc_upper_bound(&prof(&[0.0, 0.0])), 0.5);
        assert_eq!(psucc_upper_bound(&prof(&[0.4, 0.3])), 1.0);
    }

    #[test]
    fn compound_examples() {
        let c = compound_probs(0.0, 0.0).unwrap();
        assert_eq!((c.p_plus, c.p_minus), (0.5, Some(0.5)));
        // conditional definitions p1p2 / P(S) and p1(1-p2) / P(not S)
        let (p1, p2) = (0.8, 0.6);
        let same = p1 * p2 + (1.0 - p1) * (1.0 - p2);
        let c = compound_probs(0.3, 0.1).unwrap();
        assert_relative_eq!(c.p_same, same, epsilon = 1e-15);
        assert_relative_eq!(c.p_plus, p1 * p2 / same, epsilon = 1e-12);
        assert_relative_eq!(c.p_minus.unwrap(), p1 * (1.0 - p2) / (1.0 - same), epsilon = 1e-12);
        assert_relative_eq!(c.p_plus, 0.857143, epsilon = 1e-6);
        assert_relative_eq!(c.p_minus.unwrap(), 0.727273, epsilon = 1e-6);
        let c = compound_probs(0.5, 0.5).unwrap();
        assert_eq!(c.p_plus, 1.0);
        assert_eq!(c.p_minus, None);
        assert!(compound_probs(0.1, 0.3).is_err());
    }

    #[test]
    fn weights_and_validation() {
        assert!(EffortProfile::new(vec![0.6]).is_err());
        assert!(EffortProfile::new(vec![-0.1]).is_err());
        assert_eq!(prof(&[0.0, 0.0]).weights(), vec![0.0, 0.0]);
        let w = prof(&[0.2, 0.1, 0.1]).weights();
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-15);
    }
}
