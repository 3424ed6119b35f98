//! Separation distances against their bounds, tabulated over `(n, k)` grids.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::report::fmt_g;
use super::ParamFamily;
use crate::dynamic_graph::edge_count;
use crate::edge_dynamics::{delta, rho};
use crate::error::{Error, Result};
use crate::markov_sst::{chernoff_tail_bound, find_ubs_constants, graph_separation, rho_envelope, ubs_bound};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReportConfig {
    pub family: ParamFamily,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<u64>,
    /// Block constants for the Chernoff column.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_d")]
    pub d: f64,
}

fn default_c() -> f64 {
    5.0
}

fn default_d() -> f64 {
    25.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub k: u64,
    pub s_exact: f64,
    /// `ρ|Δ|^k`, the single-edge envelope.
    pub edge_envelope: f64,
    /// `1 - (1 - ρ|Δ|^k)^|E|`.
    pub s_bound_rho: f64,
    pub ubs_mid: Option<f64>,
    pub ubs_outer: Option<f64>,
    pub ubs_valid: Option<bool>,
    /// `chernoff_tail_bound(D/C - 1 - l, ln n)`.
    pub chernoff: Option<f64>,
}

pub fn bound_report(config: &BoundReportConfig) -> Result<Vec<BoundRow>> {
    if config.n_grid.is_empty() || config.k_grid.is_empty() {
        return Err(Error::Config("empty n or k grid".into()));
    }
    let ubs = match config.family {
        ParamFamily::MarkovPowerGap { m, alpha_family, .. } => {
            let n0 = *config.n_grid.iter().min().expect("nonempty") as f64;
            let k0 = *config.k_grid.iter().min().expect("nonempty") as f64;
            find_ubs_constants(n0, m, alpha_family, k0).map(|(t, l)| (m, alpha_family, t, l))
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        config.family.validate(n)?;
        let params = config
            .family
            .markov_params(n)
            .ok_or_else(|| Error::Config("separation needs a Markov family".into()))??;
        let e = edge_count(n) as u64;
        let (rho_v, d) = (rho(&params)?, delta(&params).abs());
        let chernoff = match ubs {
            Some((_, _, _, l)) => chernoff_tail_bound(config.d / config.c - 1.0 - l, (n as f64).ln()).ok(),
            None => None,
        };
        for &k in &config.k_grid {
            let b = ubs.map(|(m, a, t, l)| ubs_bound(n as f64, m, a, k as f64, t, l));
            rows.push(BoundRow {
                n,
                k,
                s_exact: graph_separation(&params, e, k)?,
                edge_envelope: rho_v * d.powf(k as f64),
                s_bound_rho: rho_envelope(&params, e, k)?,
                ubs_mid: b.map(|b| b.mid),
                ubs_outer: b.map(|b| b.outer),
                ubs_valid: b.map(|b| b.valid),
                chernoff,
            });
        }
    }
    Ok(rows)
}

pub const BOUND_HEADER: &str = "n,k,s_exact,edge_envelope,s_bound_rho,s_bound_ubs,ubs_outer,ubs_valid,chernoff";

pub fn write_bounds<W: Write>(rows: &[BoundRow], mut w: W) -> Result<()> {
    let opt = |x: Option<f64>| x.map(fmt_g).unwrap_or_default();
    writeln!(w, "{BOUND_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.k,
            fmt_g(r.s_exact),
            fmt_g(r.edge_envelope),
            fmt_g(r.s_bound_rho),
            opt(r.ubs_mid),
            opt(r.ubs_outer),
            r.ubs_valid.map(|v| v.to_string()).unwrap_or_default(),
            opt(r.chernoff)
        )?;
    }
    Ok(())
}
