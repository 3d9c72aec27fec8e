//! `drep`: command-line front end for the delegated-voting toolkit.
//!
//! Exit status: 0 on success, 1 when a verification suite fails, 2 on domain
//! errors, 64 on usage errors, 74 when an output file cannot be written.
//! `DREP_THREADS` sets the worker thread count.

mod args;
mod output;
mod sweep;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use drep_core::mechanism::{
    best_response_dynamics, certify, is_grid_equilibrium, proportional_symmetric_eq, scan_all_equilibria,
    scan_symmetric_equilibria, threshold_eq_range,
};
use drep_core::optimizer::{beta_star, budget_threshold_power, opt_committee, three_vs_one};
use drep_core::verify::{
    check_assumption1, check_limit_half, check_oracle_equivalence, check_pair_reduction, check_upper_bound,
    check_weaker_assumption, FrontierEffort,
};
use drep_core::{
    parse_rational, psucc_exact, psucc_symmetric, Cost, CostFunction, EffortProfile, FailureKind,
    Mechanism, VerificationReport,
};

use args::{parse_list, Cli, Command, Frontier, Suite};
use output::{num, to_json, Csv};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Argument parser diagnostics, already formatted.
    Parse(String),
    Domain(String),
    Verification(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Parse(_) => 64,
            Self::Domain(_) => 2,
            Self::Verification(_) => 1,
            Self::Io(_) => 74,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {}", m),
            Self::Parse(m) => write!(f, "{}", m),
            Self::Domain(m) => write!(f, "{}", m),
            Self::Verification(m) => write!(f, "verification failed: {}", m),
            Self::Io(m) => write!(f, "i/o error: {}", m),
        }
    }
}

impl From<drep_core::Error> for CliError {
    fn from(e: drep_core::Error) -> Self {
        match e {
            drep_core::Error::Config(m) => Self::Usage(m),
            other => Self::Domain(other.to_string()),
        }
    }
}

/// Seed and config hash stamped on every artifact.
struct Run {
    seed: u64,
    hash: String,
}

impl Run {
    fn csv(&self, header: &[&str]) -> Csv {
        Csv::new(self.seed, &self.hash, header)
    }

    fn provenance(&self) -> Value {
        json!({ "version": env!("CARGO_PKG_VERSION"), "seed": self.seed, "config": self.hash })
    }
}

fn cost(spec: &str) -> Result<Cost, CliError> {
    Ok(spec.parse()?)
}

fn positive_budget(b: f64) -> Result<f64, CliError> {
    if b > 0.0 && b.is_finite() {
        Ok(b)
    } else {
        Err(CliError::Domain(format!("budget must be positive and finite, got {}", b)))
    }
}

fn efforts(list: &str) -> Result<Vec<num_rational::BigRational>, CliError> {
    let items = args::split_list(list);
    if items.is_empty() {
        return Err(CliError::Usage("no efforts given".into()));
    }
    items.into_iter().map(|s| parse_rational(s).map_err(CliError::from)).collect()
}

fn psucc(a: args::PsuccArgs) -> Result<(), CliError> {
    let exact = efforts(&a.efforts)?;
    let tie = a.tie.into();
    if a.exact {
        let p = psucc_exact(&EffortProfile::new(exact)?, tie)?;
        println!("{}", p);
    } else {
        let xs = exact.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
        let p = psucc_exact(&EffortProfile::new(xs)?, tie)?;
        println!("{}", num(p));
    }
    Ok(())
}

fn psucc_sym(a: args::PsuccSymArgs) -> Result<(), CliError> {
    if !(0.0..=0.5).contains(&a.x) {
        return Err(CliError::Domain(format!("effort {} outside [0, 1/2]", a.x)));
    }
    if a.k == 0 {
        return Err(CliError::Domain("committee size must be positive".into()));
    }
    println!("{}", num(psucc_symmetric(a.x, a.k, a.tie.into())));
    Ok(())
}

fn equilibrium(a: args::EquilibriumArgs, run: &Run) -> Result<(), CliError> {
    let m: Mechanism = a.mechanism.parse()?;
    let c = cost(&a.cost)?;
    let b = positive_budget(a.budget)?;
    if a.n == 0 {
        return Err(CliError::Domain("at least one DRep is needed".into()));
    }
    if !(a.step > 0.0 && a.step <= 0.5) {
        return Err(CliError::Domain(format!("grid step {} outside (0, 1/2]", a.step)));
    }
    let mut report = json!({
        "mechanism": m.to_string(),
        "cost": c.to_string(),
        "budget": b,
        "n": a.n,
        "step": a.step,
    });
    match m {
        Mechanism::Threshold(k) => {
            let mut rep = threshold_eq_range(&c, b, k)?;
            if a.n > k {
                certify(&mut rep, a.n, b, &c, a.step)?;
            }
            report["analysis"] = serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?;
        }
        Mechanism::Proportional => {
            let x = proportional_symmetric_eq(&c, a.n, b)?;
            let audit = is_grid_equilibrium(m, &EffortProfile::symmetric(x, a.n, 0)?, b, &c, a.step)?;
            report["analysis"] = json!({ "symmetric_effort": x, "grid_audit": audit });
        }
        Mechanism::Variant1(_) | Mechanism::Variant2(_) => {}
    }
    let sym = scan_symmetric_equilibria(m, a.n, b, &c, a.step)?;
    report["symmetric_grid_equilibria"] = sym.iter().map(|&(s, x)| json!({ "support": s, "effort": x })).collect();
    if a.full_scan {
        let all = scan_all_equilibria(m, a.n, b, &c, a.step)?;
        report["grid_equilibria"] = all.iter().map(|p| json!(p.efforts())).collect();
    }
    if a.dynamics {
        let init = match &a.init {
            Some(s) => parse_list::<f64>(s, "effort")?,
            None => vec![0.0; a.n],
        };
        if init.len() != a.n {
            return Err(CliError::Usage(format!("--init has {} efforts for {} DReps", init.len(), a.n)));
        }
        let tr = best_response_dynamics(m, b, &c, &EffortProfile::new(init)?, a.step, a.rounds)?;
        report["dynamics"] = json!({
            "rounds": tr.rounds,
            "moves": tr.moves.len(),
            "converged": tr.converged,
            "final_profile": tr.final_profile,
        });
        if let Some(path) = &a.trajectory {
            let mut csv = run.csv(&["round", "player", "old_x", "new_x", "utility_gain"]);
            for mv in &tr.moves {
                csv.row(&[mv.round.to_string(), mv.player.to_string(), num(mv.old_x), num(mv.new_x), num(mv.utility_gain)]);
            }
            output::emit(Some(path), &csv.into_string())?;
        }
    }
    report["provenance"] = run.provenance();
    output::emit(a.out.as_deref(), &to_json(&report)?)
}

fn optimize(a: args::OptimizeArgs, run: &Run) -> Result<(), CliError> {
    let c = cost(&a.cost)?;
    let b = positive_budget(a.budget)?;
    if a.k_max == 0 {
        return Err(CliError::Domain("k-max must be positive".into()));
    }
    let r = opt_committee(&c, b, a.k_max, a.tie.into())?;
    let mut csv = run.csv(&["k", "x_star", "cost_spent", "p_succ"]);
    for e in &r.per_k {
        csv.row(&[e.k.to_string(), num(e.x_star), num(e.cost_spent), num(e.p_succ)]);
    }
    output::emit(a.out.as_deref(), &csv.into_string())?;
    let sidecar = json!({
        "cost": c.to_string(),
        "budget": b,
        "k_max": a.k_max,
        "tie": drep_core::TieRule::from(a.tie),
        "k_star": r.k_star,
        "p_star": r.p_star,
        "bounds": r.bounds,
        "bound_on_k": r.bound_on_k,
        "conditional_bound_on_k": r.conditional_bound_on_k,
        "conditional_note": r.conditional_note,
        "provenance": run.provenance(),
    });
    match &a.out {
        Some(path) => output::emit(Some(&path.with_extension("json")), &to_json(&sidecar)?),
        None => {
            eprintln!("k_star = {}, p_star = {}", r.k_star, num(r.p_star));
            Ok(())
        }
    }
}

fn compare(a: args::CostBudget) -> Result<(), CliError> {
    let c = cost(&a.cost)?;
    let r = three_vs_one(&c, positive_budget(a.budget)?)?;
    let mut v = serde_json::to_value(&r).map_err(|e| CliError::Io(e.to_string()))?;
    v["cost"] = json!(c.to_string());
    output::emit(None, &to_json(&v)?)
}

fn bounds(a: args::CostBudget) -> Result<(), CliError> {
    let c = cost(&a.cost)?;
    let b = positive_budget(a.budget)?;
    let mut v = serde_json::to_value(c.bounds(b)).map_err(|e| CliError::Io(e.to_string()))?;
    v["cost"] = json!(c.to_string());
    v["budget"] = json!(b);
    v["curvature"] = json!(c.curvature());
    if let CostFunction::Power { exponent } = c {
        v["beta_star"] = json!(beta_star::<f64>());
        v["b_star_power"] = json!(budget_threshold_power(exponent).ok());
    }
    output::emit(None, &to_json(&v)?)
}

fn verify(a: args::VerifyArgs, run: &Run) -> Result<(), CliError> {
    let floats = |s: &Option<String>, default: &str| parse_list::<f64>(s.as_deref().unwrap_or(default), "number");
    let single = |s: &Option<String>| -> Result<f64, CliError> {
        match floats(s, "1")?.as_slice() {
            [a] => Ok(*a),
            _ => Err(CliError::Usage("this suite takes a single slope --a".into())),
        }
    };
    let report: VerificationReport = match a.suite {
        Suite::Assumption1 => {
            let mode = match a.frontier {
                Frontier::Exhausting => FrontierEffort::Exhausting,
                Frontier::Grid => FrontierEffort::Grid,
            };
            check_assumption1(&floats(&a.a, "0.5,1,2,4")?, a.grid.unwrap_or(200), a.budget, mode)?
        }
        Suite::Weaker => {
            let ks = match &a.kprime {
                Some(s) => parse_list::<u64>(s, "committee size")?,
                None => (1..=20).collect(),
            };
            check_weaker_assumption(single(&a.a)?, a.budget, &ks)?
        }
        Suite::LimitHalf => {
            let ns = parse_list::<u64>(a.n_values.as_deref().unwrap_or("11,101,1001,10001,100001"), "electorate size")?;
            check_limit_half(single(&a.a)?, a.budget, &ns, a.ceiling)?
        }
        Suite::Pairing => check_pair_reduction(a.samples.unwrap_or(1000), run.seed)?,
        Suite::UpperBound => check_upper_bound(a.samples.unwrap_or(10_000), run.seed, a.max_voters.unwrap_or(12))?,
        Suite::Oracle => check_oracle_equivalence(a.grid.unwrap_or(50), a.max_voters.unwrap_or(16))?,
    };
    let mut v = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    v["provenance"] = run.provenance();
    output::emit(a.out.as_deref(), &to_json(&v)?)?;
    let summary = format!(
        "suite {}: {} cases, {} failures ({} implementation, {} claim)",
        report.suite,
        report.cases_run,
        report.failures.len(),
        report.count(FailureKind::Implementation),
        report.count(FailureKind::Claim)
    );
    if report.passed() {
        eprintln!("{}: pass", summary);
        Ok(())
    } else {
        Err(CliError::Verification(summary))
    }
}

fn sweep(a: args::SweepArgs, run: &Run) -> Result<(), CliError> {
    let mut fixed = sweep::parse_fixed(&a.fixed)?;
    if let Some(c) = a.cost {
        fixed.insert("cost".into(), c);
    }
    let spec = sweep::SweepSpec::new(
        a.variable.parse()?,
        (a.from, a.to, a.steps, sweep::parse_scale(&a.scale)?),
        fixed,
        parse_list(&a.outputs, "output")?,
    )?;
    let mut csv = run.csv(&spec.header());
    for row in spec.run()? {
        csv.row(&row);
    }
    output::emit(a.out.as_deref(), &csv.into_string())
}

fn set_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DREP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("DREP_THREADS = `{}` is not a thread count", v)))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let argv = args::merge_config(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{}", e);
            return Ok(());
        }
        Err(e) => return Err(CliError::Parse(e.render().to_string().trim_end().to_string())),
    };
    set_threads()?;
    let run = Run { seed: cli.seed, hash: output::config_hash(&argv[1..]) };
    match cli.command {
        Command::Psucc(a) => psucc(a),
        Command::PsuccSym(a) => psucc_sym(a),
        Command::Equilibrium(a) => equilibrium(a, &run),
        Command::Optimize(a) => optimize(a, &run),
        Command::Compare3v1(a) => compare(a),
        Command::Bounds(a) => bounds(a),
        Command::Verify(a) => verify(a, &run),
        Command::Sweep(a) => sweep(a, &run),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Parse(m)) => {
            eprintln!("{}", m);
            ExitCode::from(64)
        }
        Err(e) => {
            eprintln!("drep: {}", e);
            ExitCode::from(e.code())
        }
    }
}
