//! Command-line grammar and `--config` merging.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "drep", version, about = "Success probabilities, equilibria and committee sizes for delegated voting")]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON object of flag values; its entries override flags given on the command line.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,

    /// Seed for randomised suites; recorded in every artifact.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Success probability of an arbitrary effort profile.
    Psucc(PsuccArgs),
    /// Success probability of `k` DReps at a common effort.
    PsuccSym(PsuccSymArgs),
    /// Equilibria of a reward mechanism, optionally with best-response dynamics.
    Equilibrium(EquilibriumArgs),
    /// Best committee size at the budget-exhausting symmetric effort.
    Optimize(OptimizeArgs),
    /// One DRep against three under the same budget.
    #[command(name = "compare-3v1")]
    Compare3v1(CostBudget),
    /// Geometric quantities of a cost under a budget.
    Bounds(CostBudget),
    /// Run a verification suite and write its report.
    Verify(VerifyArgs),
    /// Evaluate requested quantities along a one-parameter sweep.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tie {
    Half,
    Favor,
}

impl From<Tie> for drep_core::TieRule {
    fn from(t: Tie) -> Self {
        match t {
            Tie::Half => drep_core::TieRule::Half,
            Tie::Favor => drep_core::TieRule::Favor,
        }
    }
}

#[derive(Debug, Args)]
pub struct PsuccArgs {
    /// Comma-separated efforts in [0, 1/2], decimal or `p/q`.
    #[arg(long)]
    pub efforts: String,
    #[arg(long, value_enum, default_value_t = Tie::Half)]
    pub tie: Tie,
    /// Evaluate in exact rational arithmetic and print a fraction.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct PsuccSymArgs {
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub k: u64,
    #[arg(long, value_enum, default_value_t = Tie::Half)]
    pub tie: Tie,
}

#[derive(Debug, Args)]
pub struct CostBudget {
    /// `linear:<a>`, `power:<beta>`, `explearn:<mu>,<xi>` or `table:<csv>`.
    #[arg(long)]
    pub cost: String,
    #[arg(long)]
    pub budget: f64,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    /// `proportional`, `threshold:<k>`, `variant1:<k>` or `variant2:<k>`.
    #[arg(long)]
    pub mechanism: String,
    #[arg(long)]
    pub cost: String,
    #[arg(long)]
    pub budget: f64,
    /// Number of DReps.
    #[arg(long)]
    pub n: usize,
    /// Effort grid spacing for scans and dynamics.
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Also scan every nondecreasing profile, not only symmetric ones.
    #[arg(long)]
    pub full_scan: bool,
    /// Run round-robin best-response dynamics.
    #[arg(long)]
    pub dynamics: bool,
    #[arg(long, default_value_t = 500)]
    pub rounds: usize,
    /// Starting efforts for the dynamics; all zero by default.
    #[arg(long)]
    pub init: Option<String>,
    /// CSV file for the dynamics trajectory.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// JSON report file; standard output by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub cost: String,
    #[arg(long)]
    pub budget: f64,
    /// Largest committee size evaluated.
    #[arg(long, default_value_t = 100)]
    pub k_max: usize,
    #[arg(long, value_enum, default_value_t = Tie::Half)]
    pub tie: Tie,
    /// CSV file; a JSON sidecar with the same stem is written beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Assumption1,
    Weaker,
    LimitHalf,
    Pairing,
    UpperBound,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Frontier {
    Exhausting,
    Grid,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// JSON report file; standard output by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Linear cost slopes (assumption1, comma-separated) or slope (weaker, limit-half).
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub budget: f64,
    /// Effort grid size (assumption1, oracle).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Committee effort used by assumption1.
    #[arg(long, value_enum, default_value_t = Frontier::Exhausting)]
    pub frontier: Frontier,
    /// Halved committee sizes for weaker, comma-separated.
    #[arg(long)]
    pub kprime: Option<String>,
    /// Odd electorate sizes for limit-half, comma-separated.
    #[arg(long)]
    pub n_values: Option<String>,
    #[arg(long, default_value_t = drep_core::verify::LIMIT_CEILING)]
    pub ceiling: f64,
    /// Random cases for pairing and upper-bound.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest committee for upper-bound and oracle.
    #[arg(long)]
    pub max_voters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `budget`, `beta`, `mu`, `xi` or `k`.
    #[arg(long)]
    pub variable: String,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    /// `linear` or `log`.
    #[arg(long, default_value = "linear")]
    pub scale: String,
    /// Cost for budget and k sweeps.
    #[arg(long)]
    pub cost: Option<String>,
    /// Remaining parameters as `name=value` pairs, comma-separated.
    #[arg(long, default_value = "")]
    pub fixed: String,
    /// Requested columns, comma-separated.
    #[arg(long, default_value = "x_star,p_succ")]
    pub outputs: String,
    /// CSV file; standard output by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Position of the `--config` value in `argv`, if any.
fn config_path(argv: &[String]) -> Result<Option<String>, CliError> {
    for (i, a) in argv.iter().enumerate() {
        if let Some(v) = a.strip_prefix("--config=") {
            return Ok(Some(v.to_string()));
        }
        if a == "--config" {
            return argv
                .get(i + 1)
                .cloned()
                .map(Some)
                .ok_or_else(|| CliError::Usage("--config needs a file".into()));
        }
    }
    Ok(None)
}

fn flag_value(key: &str, v: &Value) -> Result<Option<String>, CliError> {
    let s = match v {
        Value::Null | Value::Bool(false) => return Ok(None),
        Value::Bool(true) => return Ok(Some(String::new())),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|x| match x {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(CliError::Usage(format!("config `{}`: list items must be scalars", key))),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        Value::Object(map) => map
            .iter()
            .map(|(k, x)| match x {
                Value::String(s) => Ok(format!("{}={}", k, s)),
                Value::Number(n) => Ok(format!("{}={}", k, n)),
                _ => Err(CliError::Usage(format!("config `{}.{}` must be a scalar", key, k))),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
    };
    Ok(Some(s))
}

/// Appends the config file's entries as flags after the command line, so they
/// take precedence (flags override themselves). A `false` entry removes the
/// switch. Keys use flag spelling; underscores are accepted for dashes.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&argv)? else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("{}: {}", path, e)))?;
    let json: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path, e)))?;
    let Value::Object(entries) = json else {
        return Err(CliError::Usage(format!("{}: config must be a JSON object", path)));
    };
    let mut out: Vec<String> = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        if a == "--config" {
            skip = true;
            continue;
        }
        if a.starts_with("--config=") {
            continue;
        }
        out.push(a);
    }
    for (key, v) in &entries {
        let flag = format!("--{}", key.replace('_', "-"));
        match flag_value(key, v)? {
            None => out.retain(|a| a != &flag),
            Some(s) if s.is_empty() => out.push(flag),
            Some(s) => out.push(format!("{}={}", flag, s)),
        }
    }
    Ok(out)
}

/// Splits a comma-separated list, ignoring surrounding whitespace.
pub fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    split_list(s)
        .into_iter()
        .map(|t| t.parse().map_err(|_| CliError::Usage(format!("`{}` is not a valid {}", t, what))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn config_entries_follow_the_command_line() {
        let dir = std::env::temp_dir().join(format!("drep-args-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"budget": 2, "exact": false, "fixed": {"k": 3}, "a": [1, 2]}"#).unwrap();
        let merged = merge_config(argv(&format!("drep x --budget 1 --exact --config {}", path.display()))).unwrap();
        assert_eq!(merged, argv("drep x --budget 1 --a=1,2 --budget=2 --fixed=k=3"));
    }

    #[test]
    fn lists_parse_and_reject() {
        assert_eq!(parse_list::<u64>("1, 2,3", "size").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<u64>("1,x", "size").is_err());
    }
}
