//! Experiment configuration, Monte Carlo sweeps over `n` grids, and
//! reporting.

pub mod bounds;
pub mod cli;
pub mod report;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::dynamic_graph::EdgeProcessSpec;
use crate::edge_dynamics::{markov_stationary, Hazard, MarkovEdgeParams, RenewalEdgeParams};
use crate::error::{Error, Result};

pub use bounds::{bound_report, BoundReportConfig, BoundRow};
pub use sweep::{
    dependent_vs_iid, flood_rate_check, run_sweep, CompareRow, CoupledFloodRow, FloodCheckConfig, FloodCheckReport,
    MonotonePair, SweepConfig, SweepReport, SweepRow,
};

/// `constant + coeff * n^(-exponent)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub coeff: f64,
    #[serde(default)]
    pub exponent: f64,
}

impl PowerLaw {
    pub const fn constant(c: f64) -> Self {
        Self { constant: c, coeff: 0.0, exponent: 0.0 }
    }

    pub const fn decay(coeff: f64, exponent: f64) -> Self {
        Self { constant: 0.0, coeff, exponent }
    }

    pub fn at(&self, n: usize) -> f64 {
        self.constant + self.coeff * (n as f64).powf(-self.exponent)
    }
}

/// Edge dynamics as a function of `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ParamFamily {
    /// Fixed Markov birth/death probabilities.
    Pq { p: f64, q: f64 },
    /// Every edge present forever.
    Complete,
    /// `P = ((1 - f, f), (1 - g, g))` with `|g - f| <= M / n^α`.
    MarkovPowerGap {
        f: PowerLaw,
        g: PowerLaw,
        m: f64,
        alpha_family: f64,
        #[serde(default)]
        gamma_limit: f64,
    },
    /// `p = a / n^k`, `q = 1`.
    MarkovSpecial { a: f64, k: f64 },
    /// Death probability `q`, birth chosen so that `π(1) = a / n`.
    MarkovSparse { a: f64, q: f64 },
    /// `p = a / n^k`, `q = 1 - α`: the dominating chain of the monotone
    /// coupling with `MarkovSpecial`.
    MarkovSpecialUpper { a: f64, k: f64, alpha: f64 },
    Iid { p: PowerLaw },
    /// Renewal hazard `1 - (i + 2) / ((i + 1) n^λ)`.
    RenewalExample { lambda: f64 },
    /// Constant renewal hazard `1 - g(n) / n^λ`.
    RenewalConstant { lambda: f64, g: PowerLaw },
}

impl ParamFamily {
    pub fn dynamics(&self) -> &'static str {
        match self {
            ParamFamily::Iid { .. } => "iid",
            ParamFamily::RenewalExample { .. } | ParamFamily::RenewalConstant { .. } => "renewal",
            _ => "markov",
        }
    }

    fn markov_pq(&self, n: usize) -> Option<(f64, f64)> {
        let nf = n as f64;
        match *self {
            ParamFamily::Pq { p, q } => Some((p, q)),
            ParamFamily::Complete => Some((1.0, 0.0)),
            ParamFamily::MarkovPowerGap { f, g, .. } => Some((f.at(n), 1.0 - g.at(n))),
            ParamFamily::MarkovSpecial { a, k } => Some((a / nf.powf(k), 1.0)),
            ParamFamily::MarkovSparse { a, q } => Some((a * q / (nf - a), q)),
            ParamFamily::MarkovSpecialUpper { a, k, alpha } => Some((a / nf.powf(k), 1.0 - alpha)),
            _ => None,
        }
    }

    /// Markov parameters at `n`, for Markov families.
    pub fn markov_params(&self, n: usize) -> Option<Result<MarkovEdgeParams>> {
        self.markov_pq(n).map(|(p, q)| MarkovEdgeParams::new(p, q))
    }

    /// Check family constants and, for the power-gap family, the hypothesis
    /// `|g(n) - f(n)| <= M / n^α`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 1 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("family constant {name} = {v} must be positive")))
            }
        };
        match *self {
            ParamFamily::MarkovPowerGap { f, g, m, alpha_family, .. } => {
                positive("M", m)?;
                positive("alpha_family", alpha_family)?;
                let gap = (g.at(n) - f.at(n)).abs();
                let allowed = m / (n as f64).powf(alpha_family);
                if gap > allowed * (1.0 + 1e-12) {
                    return Err(Error::Config(format!(
                        "hypothesis |g - f| <= M/n^alpha fails at n = {n}: {gap} > {allowed}"
                    )));
                }
            }
            ParamFamily::MarkovSpecial { a, k } => {
                positive("a", a)?;
                positive("k", k)?;
            }
            ParamFamily::MarkovSparse { a, q } => {
                positive("a", a)?;
                positive("q", q)?;
                if (n as f64) <= a * (1.0 + q) {
                    return Err(Error::Config(format!("n = {n} too small for pi(1) = {a}/n")));
                }
            }
            ParamFamily::MarkovSpecialUpper { a, k, alpha } => {
                positive("a", a)?;
                positive("k", k)?;
                positive("alpha", alpha)?;
            }
            ParamFamily::RenewalExample { lambda } | ParamFamily::RenewalConstant { lambda, .. } => {
                positive("lambda", lambda)?;
            }
            _ => {}
        }
        self.spec(n).map(|_| ())
    }

    pub fn spec(&self, n: usize) -> Result<EdgeProcessSpec> {
        if let Some((p, q)) = self.markov_pq(n) {
            let spec = EdgeProcessSpec::markov(n, p, q).map_err(|e| Error::Config(format!("n = {n}: {e}")))?;
            return Ok(spec);
        }
        let nf = n as f64;
        match *self {
            ParamFamily::Iid { p } => EdgeProcessSpec::iid(n, p.at(n)),
            ParamFamily::RenewalExample { lambda } => Ok(EdgeProcessSpec::renewal(
                n,
                RenewalEdgeParams::new(Hazard::RationalDecay { scale: nf.powf(lambda) })?,
            )),
            ParamFamily::RenewalConstant { lambda, g } => {
                let alpha = g.at(n) / nf.powf(lambda);
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::Config(format!("alpha_n = {alpha} outside [0, 1) at n = {n}")));
                }
                Ok(EdgeProcessSpec::renewal(n, RenewalEdgeParams::new(Hazard::Constant { value: 1.0 - alpha })?))
            }
            _ => unreachable!("markov families handled above"),
        }
    }

    /// Stationary presence probability at `n`, computed analytically.
    pub fn pi1(&self, n: usize) -> Result<f64> {
        if let Some(m) = self.markov_params(n) {
            return Ok(markov_stationary(&m?)?.1);
        }
        self.spec(n)?.pi1()
    }
}

/// Reference completion-time rate `r(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rate", rename_all = "snake_case")]
pub enum RateFamily {
    /// `ln n`
    Log,
    /// `log2 n`
    Log2,
    /// `ln n / ln(1 + n π(1))`
    FloodRate,
    /// `ln n / min(1, n π(1))`
    PushRate,
    /// `n^(k-1) ln n`
    SpecialPush { k: f64 },
}

impl RateFamily {
    pub fn eval(&self, n: usize, pi1: f64) -> f64 {
        let nf = n as f64;
        match *self {
            RateFamily::Log => nf.ln(),
            RateFamily::Log2 => nf.log2(),
            RateFamily::FloodRate => nf.ln() / (nf * pi1).ln_1p(),
            RateFamily::PushRate => nf.ln() / (nf * pi1).min(1.0),
            RateFamily::SpecialPush { k } => nf.powf(k - 1.0) * nf.ln(),
        }
    }

    /// Fail unless `r(n)` is positive and finite.
    pub fn check(&self, n: usize, pi1: f64) -> Result<f64> {
        let r = self.eval(n, pi1);
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::Config(format!("rate {self:?} is {r} at n = {n}")))
        }
    }
}

/// `max(10^3, 50 r(n))` rounds.
pub fn default_cap(rate: f64) -> u32 {
    (50.0 * rate).ceil().clamp(1000.0, u32::MAX as f64) as u32
}

/// Run `f` on a pool capped by `GOSSIPDYN_THREADS` when it is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("GOSSIPDYN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
