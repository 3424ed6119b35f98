//! Number formatting and CSV/JSON output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::sweep::{CompareRow, SweepReport};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format {s:?}"))),
        }
    }
}

/// Shortest `%g`-like rendering with six significant digits.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    // Rounding can bump the exponent (9.999995 -> 1.00000e1).
    let (mantissa, e) = sci.split_once('e').expect("exponent");
    let e: i32 = e.parse().expect("exponent digits");
    if !(-5..6).contains(&e) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs());
    }
    let decimals = (5 - e).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const SWEEP_HEADER: &str = "n,protocol,dynamics,trials,p10,p50,p90,censored,rate,ratio,seed";

pub fn write_sweep<W: Write>(report: &SweepReport, format: Format, mut w: W) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "{SWEEP_HEADER}")?;
            for r in &report.rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.n,
                    r.protocol,
                    r.dynamics,
                    r.trials,
                    r.p10,
                    r.p50,
                    r.p90,
                    r.censored,
                    fmt_g(r.rate),
                    fmt_g(r.ratio),
                    r.seed
                )?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &report.rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub const COMPARE_HEADER: &str = "n,protocol,dynamics,trials,pi1,p50_dependent,p50_iid,ratio,censored_dependent,censored_iid,seed";

pub fn write_compare<W: Write>(rows: &[CompareRow], format: Format, mut w: W) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "{COMPARE_HEADER}")?;
            for r in rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.n,
                    r.protocol,
                    r.dynamics,
                    r.trials,
                    fmt_g(r.pi1),
                    r.p50_dependent,
                    r.p50_iid,
                    fmt_g(r.ratio),
                    r.censored_dependent,
                    r.censored_iid,
                    r.seed
                )?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}
