//! Per-edge stochastic processes: i.i.d. Bernoulli, two-state Markov and
//! stationary binary renewal, together with their stationary quantities.
//!
//! Every update rule here is a deterministic function of an explicit
//! uniform, so callers own the randomness and can couple processes by
//! feeding them the same draws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on tail sums for renewal quantities.
pub const DEFAULT_TRUNCATION_HORIZON: u64 = 1_000_000;
/// Default absolute tolerance for the truncated mean gap.
pub const DEFAULT_MEAN_TOL: f64 = 1e-12;

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParams(format!("{name} = {v} is not in [0, 1]")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IidEdgeParams {
    pub p: f64,
}

impl IidEdgeParams {
    pub fn new(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(Self { p })
    }
}

/// Two-state chain with birth probability `p = P(1|0)` and death
/// probability `q = P(0|1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovEdgeParams {
    pub p: f64,
    pub q: f64,
}

impl MarkovEdgeParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(Self { p, q })
    }

    /// `P(1 | bit)`.
    #[inline]
    pub fn birth_from(&self, bit: bool) -> f64 {
        if bit {
            1.0 - self.q
        } else {
            self.p
        }
    }
}

/// Stationary law `(λ0, λ1)` of the two-state chain.
pub fn markov_stationary(params: &MarkovEdgeParams) -> Result<(f64, f64)> {
    let s = params.p + params.q;
    if s <= 0.0 {
        return Err(Error::NoUniqueStationaryLaw);
    }
    Ok((params.q / s, params.p / s))
}

/// Second eigenvalue `1 - p - q` of the transition matrix.
pub fn delta(params: &MarkovEdgeParams) -> f64 {
    1.0 - params.p - params.q
}

/// `max{λ0/λ1, λ1/λ0, 1}`.
pub fn rho(params: &MarkovEdgeParams) -> Result<f64> {
    let (l0, l1) = markov_stationary(params).map_err(|_| Error::DegenerateStationaryLaw)?;
    if l0 <= 0.0 || l1 <= 0.0 {
        return Err(Error::DegenerateStationaryLaw);
    }
    Ok((l0 / l1).max(l1 / l0).max(1.0))
}

/// One Markov step: present next iff `u < P(1|bit)`.
#[inline]
pub fn step_markov(bit: bool, params: &MarkovEdgeParams, u: f64) -> bool {
    u < params.birth_from(bit)
}

/// Hazard `h(i) = P(Z = i | Z >= i)` of the inter-renewal gap `Z >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hazard {
    /// Geometric gaps.
    Constant { value: f64 },
    /// `h(i) = 1 - (i + 2) / ((i + 1) * scale)`; `scale` plays the role of `n^λ`.
    RationalDecay { scale: f64 },
    /// `h(i) = clamp(first + slope * (i - 1), floor, 1)`.
    Linear { first: f64, slope: f64, floor: f64 },
    /// Explicit values for `i = 1..=values.len()`, then `tail` forever.
    Table { values: Vec<f64>, tail: f64 },
}

impl Hazard {
    #[inline]
    pub fn at(&self, i: u64) -> f64 {
        debug_assert!(i >= 1);
        match self {
            Hazard::Constant { value } => *value,
            Hazard::RationalDecay { scale } => {
                let i = i as f64;
                1.0 - (i + 2.0) / ((i + 1.0) * scale)
            }
            Hazard::Linear { first, slope, floor } => {
                (first + slope * (i as f64 - 1.0)).clamp(*floor, 1.0)
            }
            Hazard::Table { values, tail } => values.get(i as usize - 1).copied().unwrap_or(*tail),
        }
    }

    /// `inf_{i >= 1} h(i)`.
    pub fn infimum(&self) -> f64 {
        match self {
            Hazard::Constant { value } => *value,
            // (i + 2) / (i + 1) is largest at i = 1
            Hazard::RationalDecay { scale } => 1.0 - 1.5 / scale,
            Hazard::Linear { first, slope, floor } => {
                if *slope < 0.0 {
                    *floor
                } else {
                    first.clamp(*floor, 1.0)
                }
            }
            Hazard::Table { values, tail } => values.iter().copied().fold(*tail, f64::min),
        }
    }

    fn validate(&self) -> Result<()> {
        let in_range = |v: f64| v > 0.0 && v <= 1.0;
        let ok = match self {
            Hazard::Constant { value } => in_range(*value),
            Hazard::RationalDecay { scale } => scale.is_finite() && *scale > 1.5,
            Hazard::Linear { first, slope, floor } => {
                in_range(*floor) && first.is_finite() && slope.is_finite()
            }
            Hazard::Table { values, tail } => in_range(*tail) && values.iter().all(|&v| in_range(v)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("hazard {self:?} must take values in (0, 1]")))
        }
    }
}

/// Stationary binary renewal edge. State 0 (absent) marks a renewal.
#[derive(Clone, Debug)]
pub struct RenewalEdgeParams {
    hazard: Hazard,
    minorization_alpha: f64,
    mean_gap: f64,
    truncation_horizon: u64,
    /// `P(delay <= t)` for `t < delay_cdf.len()`.
    delay_cdf: Vec<f64>,
}

impl RenewalEdgeParams {
    pub fn new(hazard: Hazard) -> Result<Self> {
        Self::with_horizon(hazard, DEFAULT_TRUNCATION_HORIZON)
    }

    pub fn with_horizon(hazard: Hazard, truncation_horizon: u64) -> Result<Self> {
        hazard.validate()?;
        let inf = hazard.infimum();
        if inf <= 0.0 {
            return Err(Error::InvalidParams(
                "hazard infimum must be positive (minorization fails)".into(),
            ));
        }
        let mean_gap = renewal_mean(&hazard, DEFAULT_MEAN_TOL, truncation_horizon)?;
        let delay_cdf = build_delay_cdf(&hazard, mean_gap, 1.0 - inf, truncation_horizon);
        Ok(Self {
            hazard,
            minorization_alpha: 1.0 - inf,
            mean_gap,
            truncation_horizon,
            delay_cdf,
        })
    }

    pub fn hazard(&self) -> &Hazard {
        &self.hazard
    }

    /// `α = 1 - inf h`.
    pub fn minorization_alpha(&self) -> f64 {
        self.minorization_alpha
    }

    /// `μ = E[Z]`.
    pub fn mean_gap(&self) -> f64 {
        self.mean_gap
    }

    pub fn truncation_horizon(&self) -> u64 {
        self.truncation_horizon
    }

    /// Stationary presence probability `1 - 1/μ`.
    pub fn pi1(&self) -> f64 {
        1.0 - 1.0 / self.mean_gap
    }

    /// `P(Z >= k) = prod_{j < k} (1 - h(j))`.
    pub fn survival(&self, k: u64) -> f64 {
        survival(&self.hazard, k)
    }
}

fn survival(hazard: &Hazard, k: u64) -> f64 {
    (1..k).map(|j| 1.0 - hazard.at(j)).product()
}

fn build_delay_cdf(hazard: &Hazard, mean: f64, alpha: f64, horizon: u64) -> Vec<f64> {
    let mut cdf = Vec::new();
    let mut acc = 0.0;
    let mut surv = 1.0; // survival(t + 1)
    for t in 0..horizon {
        acc += surv / mean;
        cdf.push(acc.min(1.0));
        surv *= 1.0 - hazard.at(t + 1);
        // remaining delay mass is at most surv / ((1 - alpha) mean)
        if surv / ((1.0 - alpha) * mean) < 1e-17 {
            break;
        }
    }
    cdf
}

/// `P(Z = i) = h(i) prod_{j < i} (1 - h(j))`.
pub fn gap_distribution(params: &RenewalEdgeParams, i: u64) -> Result<f64> {
    if i < 1 {
        return Err(Error::InvalidArgument("gap index must be >= 1".into()));
    }
    Ok(params.hazard.at(i) * params.survival(i))
}

/// `μ = Σ_{k>=1} P(Z >= k)` by truncated summation.
///
/// Stops once the geometric envelope on the remaining tail drops below `tol`.
pub fn renewal_mean(hazard: &Hazard, tol: f64, horizon: u64) -> Result<f64> {
    let alpha = 1.0 - hazard.infimum();
    if alpha >= 1.0 {
        return Err(Error::NonconvergentMean { horizon });
    }
    let mut sum = 0.0;
    let mut surv = 1.0;
    for k in 1..=horizon {
        sum += surv;
        surv *= 1.0 - hazard.at(k);
        if surv / (1.0 - alpha) < tol {
            return Ok(sum);
        }
    }
    Err(Error::NonconvergentMean { horizon })
}

/// Inverse-CDF draw from the delay law `P(t) = P(Z > t) / μ`, `t >= 0`.
pub fn stationary_delay_sample(params: &RenewalEdgeParams, u: f64) -> u64 {
    let cdf = &params.delay_cdf;
    let idx = cdf.partition_point(|&c| c <= u);
    if idx < cdf.len() {
        return idx as u64;
    }
    // Beyond the table: keep accumulating survival terms.
    let mut t = cdf.len() as u64;
    let mut acc = cdf.last().copied().unwrap_or(0.0);
    let mut surv = params.survival(t + 1);
    while t < params.truncation_horizon {
        acc += surv / params.mean_gap;
        if u < acc || surv == 0.0 {
            return t;
        }
        surv *= 1.0 - params.hazard.at(t + 1);
        t += 1;
    }
    t
}

/// One renewal step from candidate gap length `age`.
///
/// Returns `(present, new_age)`. A renewal (`u < h(age)`) sets the edge
/// absent and resets `age` to 1. Since `h >= 1 - α`, any `u < 1 - α` renews.
#[inline]
pub fn step_renewal(age: u64, params: &RenewalEdgeParams, u: f64) -> (bool, u64) {
    if u < params.hazard.at(age) {
        (false, 1)
    } else {
        (true, age + 1)
    }
}

/// Sufficient statistic of one edge process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeState {
    Iid,
    Markov { bit: bool },
    /// Candidate gap length of the next step; `age == 1` iff a renewal
    /// just happened, so the edge is present iff `age > 1`.
    Renewal { age: u64 },
}

impl EdgeState {
    pub fn is_present(&self) -> Option<bool> {
        match self {
            EdgeState::Iid => None,
            EdgeState::Markov { bit } => Some(*bit),
            EdgeState::Renewal { age } => Some(*age > 1),
        }
    }
}
