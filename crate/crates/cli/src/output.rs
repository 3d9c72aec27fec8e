//! Number formatting and artifact writing shared by all subcommands.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Significant digits of every floating-point value the tool prints.
pub const SIG_DIGITS: usize = 12;

/// `v` at [`SIG_DIGITS`] significant digits with trailing zeros removed.
/// Plain notation for exponents in `-4..15`, scientific otherwise.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".into() } else { t.into() }
}

/// Rounds every non-integer number in a JSON tree to [`SIG_DIGITS`].
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                let r: f64 = num(x).parse().unwrap_or(x);
                if let Some(m) = serde_json::Number::from_f64(r) {
                    *n = m;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Identifies an invocation: the resolved arguments after config merging.
pub fn config_hash(args: &[String]) -> String {
    let mut h = Sha256::new();
    for a in args {
        h.update(a.as_bytes());
        h.update([0u8]);
    }
    format!("{:x}", h.finalize())
}

pub fn provenance(seed: u64, hash: &str) -> String {
    format!("# drep {}, seed {}, config {}\n", env!("CARGO_PKG_VERSION"), seed, hash)
}

/// CSV body with a provenance line and a header row.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(seed: u64, hash: &str, header: &[&str]) -> Self {
        let mut text = provenance(seed, hash);
        text.push_str(&header.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {}", p.display(), e))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}
