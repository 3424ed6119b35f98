//! Coupling from the past for edge-renewal graphs.
//!
//! Every renewal step renews whenever its uniform falls below `1 - α`, no
//! matter the edge's age. Scanning backward from an anchor for the first
//! time at which *all* edges take that branch gives a depth after which the
//! anchor state is a deterministic function of the window, independent of
//! the infinite past. Re-anchoring just before each coalescence point yields
//! a backward sequence of stationary times with i.i.d. geometric spacings.

use serde::Serialize;

use crate::dynamic_graph::{edge_count, GraphSnapshot};
use crate::edge_dynamics::{step_renewal, Hazard, RenewalEdgeParams};
use crate::error::{Error, Result};
use crate::markov_sst::chernoff_tail_bound;
use crate::stream::{keyed_uniform, time_key};
use fixedbitset::FixedBitSet;

/// Uniforms `U_t^e` for `t <= 0`, a pure function of `(seed, edge, time)`.
#[derive(Clone, Copy, Debug)]
pub struct UniformWindow {
    seed: u64,
}

impl UniformWindow {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn cell(&self, edge: u64, time: i64) -> f64 {
        keyed_uniform(time_key(self.seed, time), edge)
    }
}

#[derive(Clone, Debug)]
pub struct CftpResult {
    /// Coalescence happens at time `anchor - theta0`.
    pub theta0: u64,
    pub sample: GraphSnapshot,
    /// Uniform cells read.
    pub work: u64,
}

/// Probability that one time step coalesces: `(1 - α)^C(n,2)`.
pub fn coalescence_probability(alpha: f64, n: usize) -> f64 {
    (1.0 - alpha).powf(edge_count(n) as f64)
}

/// Fifty expected depths.
pub fn default_depth_limit(alpha: f64, n: usize) -> u64 {
    let p = coalescence_probability(alpha, n);
    if p <= 0.0 {
        return 0;
    }
    (50.0 / p).ceil().min(1e15) as u64
}

fn forced(alpha: f64, u: f64) -> bool {
    u < 1.0 - alpha
}

fn depth_with_work(alpha: f64, n: usize, window: &UniformWindow, anchor: i64, limit: u64) -> Result<(u64, u64)> {
    if alpha >= 1.0 {
        return Err(Error::InvalidParams("minorization requires α < 1".into()));
    }
    let m = edge_count(n) as u64;
    let mut work = 0u64;
    for i in 0..=limit {
        let key = time_key(window.seed, anchor - i as i64);
        let mut all = true;
        for e in 0..m {
            work += 1;
            if !forced(alpha, keyed_uniform(key, e)) {
                all = false;
                break;
            }
        }
        if all {
            return Ok((i, work));
        }
    }
    Err(Error::CoalescenceNotFound { limit })
}

/// Smallest `i >= 0` such that every edge's uniform at `anchor - i` is below
/// `1 - α`.
pub fn coalescing_depth(
    params: &RenewalEdgeParams,
    n: usize,
    window: &UniformWindow,
    anchor: i64,
    limit: u64,
) -> Result<u64> {
    depth_with_work(params.minorization_alpha(), n, window, anchor, limit).map(|(d, _)| d)
}

/// Run the renewal dynamics from `start` (ages given) through `end`, reading
/// the window at times `start + 1 ..= end`.
pub fn replay_from(
    params: &RenewalEdgeParams,
    n: usize,
    window: &UniformWindow,
    start: i64,
    ages: &[u64],
    end: i64,
) -> Result<GraphSnapshot> {
    let m = edge_count(n);
    if ages.len() != m || ages.iter().any(|&a| a < 1) {
        return Err(Error::InvalidArgument(format!("need {m} ages, each >= 1")));
    }
    let mut ages = ages.to_vec();
    for t in start + 1..=end {
        let key = time_key(window.seed, t);
        for (e, a) in ages.iter_mut().enumerate() {
            *a = step_renewal(*a, params, keyed_uniform(key, e as u64)).1;
        }
    }
    let mut presence = FixedBitSet::with_capacity(m);
    for (e, &a) in ages.iter().enumerate() {
        presence.set(e, a > 1);
    }
    Ok(GraphSnapshot::from_presence(n, presence))
}

/// Perfect sample of the graph at `anchor`.
///
/// Each edge is replayed from its own latest forced renewal in
/// `[anchor - θ, anchor]`; this equals replaying every edge from the common
/// renewal at `anchor - θ`.
pub fn perfect_sample_at(
    params: &RenewalEdgeParams,
    n: usize,
    window: &UniformWindow,
    anchor: i64,
    limit: u64,
) -> Result<CftpResult> {
    let alpha = params.minorization_alpha();
    let (theta0, mut work) = depth_with_work(alpha, n, window, anchor, limit)?;
    let m = edge_count(n);
    let mut presence = FixedBitSet::with_capacity(m);
    for e in 0..m as u64 {
        let mut t = anchor;
        loop {
            work += 1;
            if forced(alpha, window.cell(e, t)) {
                break;
            }
            t -= 1;
        }
        let mut age = 1;
        for s in t + 1..=anchor {
            work += 1;
            age = step_renewal(age, params, window.cell(e, s)).1;
        }
        presence.set(e as usize, age > 1);
    }
    Ok(CftpResult { theta0, sample: GraphSnapshot::from_presence(n, presence), work })
}

/// Perfect sample at time 0 with the default depth limit.
pub fn perfect_sample(params: &RenewalEdgeParams, n: usize, seed: u64) -> Result<CftpResult> {
    let limit = default_depth_limit(params.minorization_alpha(), n);
    perfect_sample_at(params, n, &UniformWindow::new(seed), 0, limit)
}

#[derive(Clone, Debug, Default)]
pub struct BackwardStationaryTimes {
    /// `t_1 = 0 > t_2 > ... > t_N`.
    pub times: Vec<i64>,
    /// Empty when only times were requested.
    pub samples: Vec<GraphSnapshot>,
    /// Coalescing depth of each pass.
    pub depths: Vec<u64>,
}

impl BackwardStationaryTimes {
    pub fn spacings(&self) -> Vec<u64> {
        self.times.windows(2).map(|w| (w[0] - w[1]) as u64).collect()
    }
}

fn backward_impl(
    params: &RenewalEdgeParams,
    n: usize,
    count: usize,
    seed: u64,
    keep: bool,
) -> Result<BackwardStationaryTimes> {
    if count < 1 {
        return Err(Error::InvalidArgument("need at least one stationary time".into()));
    }
    let alpha = params.minorization_alpha();
    let limit = default_depth_limit(alpha, n);
    let window = UniformWindow::new(seed);
    let mut out = BackwardStationaryTimes::default();
    let mut anchor = 0i64;
    for _ in 0..count {
        let depth = if keep {
            let res = perfect_sample_at(params, n, &window, anchor, limit)?;
            out.samples.push(res.sample);
            res.theta0
        } else {
            depth_with_work(alpha, n, &window, anchor, limit)?.0
        };
        out.times.push(anchor);
        out.depths.push(depth);
        anchor -= depth as i64 + 1;
    }
    Ok(out)
}

/// Repeated CFTP passes, each anchored one step before the previous
/// coalescence point.
pub fn backward_stationary_times(
    params: &RenewalEdgeParams,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<BackwardStationaryTimes> {
    backward_impl(params, n, count, seed, true)
}

/// As [`backward_stationary_times`] without the forward replays.
pub fn backward_times_only(
    params: &RenewalEdgeParams,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<BackwardStationaryTimes> {
    backward_impl(params, n, count, seed, false)
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCertificate {
    pub s_ratio: f64,
    /// `exp(-(1 - 1/s)^2 s r / 2)`.
    pub bound: f64,
    /// Fraction of trials with `-t_{ceil(C r)} > D r`.
    pub empirical: f64,
    pub trials: usize,
    /// `1 - (1 - α)^C(n,2)`.
    pub alpha_graph: f64,
}

/// Chernoff certificate for `P(-t_{C r} > D r)` with `s = D/C - 1`, next
/// to its empirical frequency over `trials` independent backward runs.
pub fn cftp_tail_certificate(
    alpha_n: f64,
    n: usize,
    c: f64,
    d: f64,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<TailCertificate> {
    let s_ratio = d / c - 1.0;
    let bound = chernoff_tail_bound(s_ratio, r)?;
    if !(0.0..1.0).contains(&alpha_n) {
        return Err(Error::InvalidParams(format!("α_n = {alpha_n} must lie in [0, 1)")));
    }
    let params = RenewalEdgeParams::new(Hazard::Constant { value: 1.0 - alpha_n })?;
    let index = (c * r).ceil().max(1.0) as usize;
    let threshold = d * r;
    let hits = (0..trials)
        .map(|i| {
            let run = backward_times_only(&params, n, index, crate::stream::derive_seed(seed, &[i as u64]))?;
            Ok((-(*run.times.last().expect("nonempty")) as f64 > threshold) as usize)
        })
        .sum::<Result<usize>>()?;
    Ok(TailCertificate {
        s_ratio,
        bound,
        empirical: hits as f64 / trials.max(1) as f64,
        trials,
        alpha_graph: 1.0 - coalescence_probability(alpha_n, n),
    })
}
