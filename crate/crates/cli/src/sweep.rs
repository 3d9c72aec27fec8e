//! One-parameter sweeps over budget, cost shape or committee size.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;

use drep_core::optimizer::{opt_committee, opt_symmetric_effort, three_vs_one};
use drep_core::{psucc_symmetric, Cost, CostFunction, TieRule};

use crate::output::num;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Budget,
    Beta,
    Mu,
    Xi,
    K,
}

impl FromStr for Variable {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "budget" => Self::Budget,
            "beta" => Self::Beta,
            "mu" => Self::Mu,
            "xi" => Self::Xi,
            "k" => Self::K,
            _ => return Err(CliError::Usage(format!("unknown sweep variable `{}`", s))),
        })
    }
}

impl Variable {
    fn name(self) -> &'static str {
        match self {
            Self::Budget => "budget",
            Self::Beta => "beta",
            Self::Mu => "mu",
            Self::Xi => "xi",
            Self::K => "k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// A quantity evaluated at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    XStar,
    PSucc,
    CostSpent,
    KStar,
    PStar,
    XMax,
    XInflection,
    XTangent,
    XInt,
    BStar,
    BoundOnK,
    ConditionalBoundOnK,
    Verdict3v1,
    POne,
    PThree,
}

const QUANTITIES: &[(&str, Quantity)] = &[
    ("x_star", Quantity::XStar),
    ("p_succ", Quantity::PSucc),
    ("cost_spent", Quantity::CostSpent),
    ("k_star", Quantity::KStar),
    ("p_star", Quantity::PStar),
    ("x_max", Quantity::XMax),
    ("x_inflection", Quantity::XInflection),
    ("x_tangent", Quantity::XTangent),
    ("x_int", Quantity::XInt),
    ("b_star", Quantity::BStar),
    ("bound_on_k", Quantity::BoundOnK),
    ("conditional_bound_on_k", Quantity::ConditionalBoundOnK),
    ("verdict_3v1", Quantity::Verdict3v1),
    ("p_one", Quantity::POne),
    ("p_three", Quantity::PThree),
];

impl FromStr for Quantity {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        QUANTITIES.iter().find(|(n, _)| *n == s).map(|&(_, q)| q).ok_or_else(|| {
            let known: Vec<&str> = QUANTITIES.iter().map(|(n, _)| *n).collect();
            CliError::Usage(format!("unknown output `{}`; expected one of {}", s, known.join(", ")))
        })
    }
}

impl Quantity {
    fn name(self) -> &'static str {
        QUANTITIES.iter().find(|(_, q)| *q == self).map(|(n, _)| *n).unwrap()
    }
}

/// `steps ≥ 2`, `from < to`, and `from > 0` on a log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: Variable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub scale: Scale,
    pub fixed: BTreeMap<String, String>,
    pub outputs: Vec<Quantity>,
}

const FIXED_KEYS: &[&str] = &["budget", "k", "k_max", "tie", "beta", "mu", "xi", "cost"];

impl SweepSpec {
    pub fn new(
        variable: Variable,
        (from, to, steps, scale): (f64, f64, usize, Scale),
        fixed: BTreeMap<String, String>,
        outputs: Vec<Quantity>,
    ) -> Result<Self, CliError> {
        if steps < 2 {
            return Err(CliError::Usage("a sweep needs at least 2 steps".into()));
        }
        if !(from < to) || !from.is_finite() || !to.is_finite() {
            return Err(CliError::Usage(format!("sweep range needs from < to, got {} .. {}", from, to)));
        }
        if scale == Scale::Log && !(from > 0.0) {
            return Err(CliError::Usage("a log-scale sweep needs a positive start".into()));
        }
        if outputs.is_empty() {
            return Err(CliError::Usage("a sweep needs at least one output".into()));
        }
        if let Some(k) = fixed.keys().find(|k| !FIXED_KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown fixed parameter `{}`", k)));
        }
        if fixed.contains_key(variable.name()) {
            return Err(CliError::Usage(format!("`{}` is both swept and fixed", variable.name())));
        }
        Ok(SweepSpec { variable, from, to, steps, scale, fixed, outputs })
    }

    /// Sweep values in order; integer sweeps drop repeats after rounding.
    pub fn points(&self) -> Vec<f64> {
        let n = self.steps - 1;
        let mut pts: Vec<f64> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                match self.scale {
                    Scale::Linear => self.from + t * (self.to - self.from),
                    Scale::Log => self.from * (self.to / self.from).powf(t),
                }
            })
            .collect();
        pts[n] = self.to;
        if self.variable == Variable::K {
            pts.iter_mut().for_each(|v| *v = v.round());
            pts.dedup();
        }
        pts
    }

    pub fn header(&self) -> Vec<&'static str> {
        std::iter::once(self.variable.name()).chain(self.outputs.iter().map(|q| q.name())).collect()
    }

    fn number(&self, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        match self.fixed.get(key) {
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("fixed `{}` = `{}` is not a number", key, v))),
            None => default.ok_or_else(|| CliError::Usage(format!("sweep over {} needs fixed `{}`", self.variable.name(), key))),
        }
    }

    fn point(&self, v: f64) -> Result<Point, CliError> {
        let get = |key: &str, default: Option<f64>| {
            if self.variable.name() == key {
                Ok(v)
            } else {
                self.number(key, default)
            }
        };
        let cost: Cost = match self.variable {
            Variable::Beta => CostFunction::power(v)?,
            Variable::Mu | Variable::Xi => CostFunction::exp_learning(get("mu", None)?, get("xi", None)?)?,
            Variable::Budget | Variable::K => match (self.fixed.get("cost"), self.fixed.get("beta")) {
                (Some(c), _) => c.parse()?,
                (None, Some(_)) => CostFunction::power(self.number("beta", None)?)?,
                (None, None) => CostFunction::exp_learning(self.number("mu", None)?, self.number("xi", None)?)?,
            },
        };
        let k = get("k", Some(1.0))?;
        if k < 1.0 || k.fract() != 0.0 {
            return Err(CliError::Usage(format!("committee size {} is not a positive integer", k)));
        }
        let k_max = self.number("k_max", Some(100.0))?;
        let tie = match self.fixed.get("tie").map(String::as_str) {
            None => TieRule::Half,
            Some(t) => t.parse()?,
        };
        Ok(Point { cost, budget: get("budget", None)?, k: k as usize, k_max: k_max as usize, tie })
    }

    /// Rows in sweep order; points are evaluated in parallel.
    pub fn run(&self) -> Result<Vec<Vec<String>>, CliError> {
        self.points()
            .par_iter()
            .map(|&v| {
                let p = self.point(v)?;
                let mut row = vec![num(v)];
                row.extend(p.evaluate(&self.outputs)?);
                Ok(row)
            })
            .collect()
    }
}

struct Point {
    cost: Cost,
    budget: f64,
    k: usize,
    k_max: usize,
    tie: TieRule,
}

fn opt_cell<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl Point {
    fn evaluate(&self, outputs: &[Quantity]) -> Result<Vec<String>, CliError> {
        use Quantity::*;
        let wants = |qs: &[Quantity]| outputs.iter().any(|q| qs.contains(q));
        let x_star = if wants(&[XStar, PSucc, CostSpent]) { Some(opt_symmetric_effort(&self.cost, self.budget, self.k)?) } else { None };
        let committee = if wants(&[KStar, PStar, BoundOnK, ConditionalBoundOnK]) {
            Some(opt_committee(&self.cost, self.budget, self.k_max, self.tie)?)
        } else {
            None
        };
        let bounds = if wants(&[XMax, XInflection, XTangent, XInt, BStar]) { Some(self.cost.bounds(self.budget)) } else { None };
        let duel = if wants(&[Verdict3v1, POne, PThree]) { Some(three_vs_one(&self.cost, self.budget)?) } else { None };
        let mut cells = Vec::with_capacity(outputs.len());
        for q in outputs {
            let b = bounds.as_ref();
            let cell = match q {
                XStar => num(x_star.unwrap()),
                PSucc => num(psucc_symmetric(x_star.unwrap(), self.k as u64, self.tie)),
                CostSpent => num(self.k as f64 * self.cost.eval(x_star.unwrap())?),
                KStar => committee.as_ref().unwrap().k_star.to_string(),
                PStar => num(committee.as_ref().unwrap().p_star),
                BoundOnK => opt_cell(committee.as_ref().unwrap().bound_on_k, |v| v.to_string()),
                ConditionalBoundOnK => opt_cell(committee.as_ref().unwrap().conditional_bound_on_k, |v| v.to_string()),
                XMax => num(b.unwrap().x_max),
                XInflection => opt_cell(b.unwrap().x_inflection, num),
                XTangent => opt_cell(b.unwrap().x_tangent, num),
                XInt => opt_cell(b.unwrap().x_int, num),
                BStar => opt_cell(b.unwrap().b_star, num),
                Verdict3v1 => duel.as_ref().unwrap().verdict.to_string(),
                POne => num(duel.as_ref().unwrap().p_one),
                PThree => num(duel.as_ref().unwrap().p_three),
            };
            cells.push(cell);
        }
        Ok(cells)
    }
}

/// Parses `name=value` pairs separated by commas.
pub fn parse_fixed(s: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for pair in crate::args::split_list(s) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("fixed parameter `{}` is not name=value", pair)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_scale(s: &str) -> Result<Scale, CliError> {
    match s {
        "linear" => Ok(Scale::Linear),
        "log" => Ok(Scale::Log),
        _ => Err(CliError::Usage(format!("unknown scale `{}`", s))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(variable: Variable, from: f64, to: f64, steps: usize, scale: Scale, fixed: &str, outputs: &[Quantity]) -> Result<SweepSpec, CliError> {
        SweepSpec::new(variable, (from, to, steps, scale), parse_fixed(fixed).unwrap(), outputs.to_vec())
    }

    #[test]
    fn invariants_are_enforced() {
        let q = [Quantity::XStar];
        assert!(spec(Variable::Budget, 1.0, 2.0, 1, Scale::Linear, "beta=2", &q).is_err());
        assert!(spec(Variable::Budget, 2.0, 1.0, 3, Scale::Linear, "beta=2", &q).is_err());
        assert!(spec(Variable::Budget, 0.0, 1.0, 3, Scale::Log, "beta=2", &q).is_err());
        assert!(spec(Variable::Budget, 0.1, 1.0, 3, Scale::Log, "budget=2", &q).is_err());
        assert!(spec(Variable::Budget, 0.1, 1.0, 3, Scale::Log, "gamma=2", &q).is_err());
        assert!(spec(Variable::Budget, 0.1, 1.0, 3, Scale::Log, "beta=2", &[]).is_err());
    }

    #[test]
    fn points_cover_both_ends() {
        let s = spec(Variable::Budget, 0.01, 10.0, 4, Scale::Log, "beta=2", &[Quantity::XStar]).unwrap();
        let p = s.points();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0], 0.01);
        assert_eq!(p[3], 10.0);
        assert!((p[1] - 0.1).abs() < 1e-15);
        let k = spec(Variable::K, 1.0, 4.0, 10, Scale::Linear, "beta=2,budget=1", &[Quantity::XStar]).unwrap();
        assert_eq!(k.points(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn budget_sweep_rows_follow_points() {
        let s = spec(Variable::Budget, 0.1, 1.0, 5, Scale::Linear, "cost=linear:1", &[Quantity::XStar, Quantity::PSucc]).unwrap();
        let rows = s.run().unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0], vec!["0.1", "0.1", "0.6"]);
        assert_eq!(rows[4], vec!["1", "0.5", "1"]);
    }

    #[test]
    fn shape_sweeps_build_their_family() {
        let s = spec(Variable::Xi, 1.5, 3.0, 3, Scale::Linear, "mu=1,budget=10", &[Quantity::XInflection]).unwrap();
        let rows = s.run().unwrap();
        assert_eq!(rows[1], vec!["2.25", &num(0.5 * (1.0 - 1.0 / 2.25f64).powf(2.25))]);
        let missing = spec(Variable::Mu, 0.5, 1.0, 2, Scale::Linear, "budget=1", &[Quantity::XStar]).unwrap();
        assert!(missing.run().is_err());
    }
}
