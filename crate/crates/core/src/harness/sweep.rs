//! Monte Carlo sweeps over `n` grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_cap, with_thread_cap, ParamFamily, RateFamily};
use crate::dynamic_graph::{coupled_advance, init_coupled, init_stationary, EdgeProcessSpec};
use crate::error::{Error, Result};
use crate::protocols::{flood_round, run, Completion, InformedSet, Protocol};
use crate::stats::quantile_sorted;
use crate::stream::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub protocol: Protocol,
    pub family: ParamFamily,
    pub rate: RateFamily,
    pub seed: u64,
    /// Round cap; `max(1000, 50 r(n))` when absent.
    #[serde(default)]
    pub cap: Option<u32>,
}

impl SweepConfig {
    /// Check every grid point before any simulation starts.
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("empty n grid".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.cap == Some(0) {
            return Err(Error::Config("cap must be positive".into()));
        }
        for &n in &self.n_grid {
            self.family.validate(n)?;
            if n > 1 {
                self.rate.check(n, self.family.pi1(n)?)?;
            }
        }
        Ok(())
    }

    fn rate_and_cap(&self, n: usize, pi1: f64) -> (f64, u32) {
        let rate = self.rate.eval(n, pi1);
        let cap = self.cap.unwrap_or_else(|| if rate.is_finite() { default_cap(rate) } else { 1000 });
        (rate, cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub protocol: Protocol,
    pub dynamics: String,
    pub trials: usize,
    pub p10: u32,
    pub p50: u32,
    pub p90: u32,
    pub censored: usize,
    pub rate: f64,
    /// `p50 / rate`.
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Completion time quantiles, with censored trials counted at the cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantiles {
    pub p10: u32,
    pub p50: u32,
    pub p90: u32,
    pub censored: usize,
}

pub fn summarize(completions: &[Completion]) -> Quantiles {
    let mut rounds: Vec<u32> = completions.iter().map(Completion::rounds_or_cap).collect();
    rounds.sort_unstable();
    Quantiles {
        p10: quantile_sorted(&rounds, 0.1),
        p50: quantile_sorted(&rounds, 0.5),
        p90: quantile_sorted(&rounds, 0.9),
        censored: completions.iter().filter(|c| c.is_censored()).count(),
    }
}

fn trial_rng(seed: u64, n: usize, trial: usize, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[n as u64, trial as u64, tag]))
}

/// One run from a uniform random source on a stationary start.
pub fn run_trial(spec: &EdgeProcessSpec, protocol: Protocol, cap: u32, seed: u64, trial: usize) -> Result<Completion> {
    let n = spec.n;
    let mut graphs = init_stationary(spec, derive_seed(seed, &[n as u64, trial as u64, 0]))?;
    let mut rng = trial_rng(seed, n, trial, 1);
    let source = rng.random_range(0..n);
    Ok(run(&mut graphs, protocol, source, cap, &mut rng)?.completion)
}

/// All trials of one grid point, in trial order.
pub fn run_trials(
    spec: &EdgeProcessSpec,
    protocol: Protocol,
    cap: u32,
    seed: u64,
    trials: usize,
) -> Result<Vec<Completion>> {
    with_thread_cap(|| (0..trials).into_par_iter().map(|t| run_trial(spec, protocol, cap, seed, t)).collect())
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let spec = config.family.spec(n)?;
        let (rate, cap) = config.rate_and_cap(n, config.family.pi1(n)?);
        let completions = run_trials(&spec, config.protocol, cap, config.seed, config.trials)?;
        let q = summarize(&completions);
        rows.push(SweepRow {
            n,
            protocol: config.protocol,
            dynamics: config.family.dynamics().to_string(),
            trials: config.trials,
            p10: q.p10,
            p50: q.p50,
            p90: q.p90,
            censored: q.censored,
            rate,
            ratio: q.p50 as f64 / rate,
            seed: config.seed,
        });
    }
    Ok(SweepReport { rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n: usize,
    pub protocol: Protocol,
    pub dynamics: String,
    pub trials: usize,
    pub pi1: f64,
    pub p50_dependent: u32,
    pub p50_iid: u32,
    /// `p50_dependent / p50_iid`.
    pub ratio: f64,
    pub censored_dependent: usize,
    pub censored_iid: usize,
    pub seed: u64,
}

/// Median completion under the family against an i.i.d. graph with the same
/// edge density, using common per-trial seeds.
pub fn dependent_vs_iid(config: &SweepConfig) -> Result<Vec<CompareRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let pi1 = config.family.pi1(n)?;
        if pi1 <= 0.0 {
            return Err(Error::DegenerateStationaryGraph);
        }
        let spec = config.family.spec(n)?;
        let iid = EdgeProcessSpec::iid(n, pi1)?;
        let (_, cap) = config.rate_and_cap(n, pi1);
        let dep = summarize(&run_trials(&spec, config.protocol, cap, config.seed, config.trials)?);
        let base = summarize(&run_trials(&iid, config.protocol, cap, config.seed, config.trials)?);
        rows.push(CompareRow {
            n,
            protocol: config.protocol,
            dynamics: config.family.dynamics().to_string(),
            trials: config.trials,
            pi1,
            p50_dependent: dep.p50,
            p50_iid: base.p50,
            ratio: dep.p50 as f64 / (base.p50.max(1)) as f64,
            censored_dependent: dep.censored,
            censored_iid: base.censored,
            seed: config.seed,
        });
    }
    Ok(rows)
}

/// Coupled pair: lower chain `p = a/n^k, q = 1`, upper chain
/// `p = a/n^k, q = 1 - alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonePair {
    pub a: f64,
    pub k: f64,
    pub alpha: f64,
}

impl MonotonePair {
    pub fn lower(&self) -> ParamFamily {
        ParamFamily::MarkovSpecial { a: self.a, k: self.k }
    }

    pub fn upper(&self) -> ParamFamily {
        ParamFamily::MarkovSpecialUpper { a: self.a, k: self.k, alpha: self.alpha }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloodCheckConfig {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub family: ParamFamily,
    pub seed: u64,
    #[serde(default)]
    pub cap: Option<u32>,
    #[serde(default)]
    pub monotone_pair: Option<MonotonePair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledFloodRow {
    pub n: usize,
    pub trials: usize,
    /// Rounds where the lower graph or informed set escaped the upper one.
    pub containment_violations: usize,
    /// Trials where the upper run finished strictly later.
    pub order_violations: usize,
    pub lower_p50: u32,
    pub upper_p50: u32,
    pub lower_censored: usize,
    pub upper_censored: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloodCheckReport {
    pub rows: Vec<SweepRow>,
    pub coupled: Vec<CoupledFloodRow>,
}

struct CoupledTrial {
    lower: Completion,
    upper: Completion,
    violations: usize,
}

fn coupled_flood_trial(
    lower: &EdgeProcessSpec,
    upper: &EdgeProcessSpec,
    cap: u32,
    seed: u64,
    trial: usize,
) -> Result<CoupledTrial> {
    let n = lower.n;
    let (mut lo, mut hi) = init_coupled(lower, upper, derive_seed(seed, &[n as u64, trial as u64, 2]))?;
    let source = trial_rng(seed, n, trial, 3).random_range(0..n);
    let mut a = InformedSet::single(n, source);
    let mut b = a.clone();
    let mut done_lo = a.is_complete().then_some(0);
    let mut done_hi = done_lo;
    let mut violations = 0;
    let mut round = 0;
    while (done_lo.is_none() || done_hi.is_none()) && round < cap {
        let (gl, gh) = coupled_advance(&mut lo, &mut hi)?;
        round += 1;
        a = flood_round(&gl, &a);
        b = flood_round(&gh, &b);
        if !gl.is_subgraph_of(&gh) || !a.is_subset(&b) {
            violations += 1;
        }
        if done_lo.is_none() && a.is_complete() {
            done_lo = Some(round);
        }
        if done_hi.is_none() && b.is_complete() {
            done_hi = Some(round);
        }
    }
    let finish = |d: Option<u32>| d.map_or(Completion::Censored(cap), Completion::Completed);
    Ok(CoupledTrial { lower: finish(done_lo), upper: finish(done_hi), violations })
}

/// FLOOD on a Markov family against `ln n / ln(1 + n π(1))`, plus the
/// monotone-coupling comparison when `monotone_pair` is set.
pub fn flood_rate_check(config: &FloodCheckConfig) -> Result<FloodCheckReport> {
    if config.family.markov_params(config.n_grid.first().copied().unwrap_or(2)).is_none() {
        return Err(Error::Config("flood check needs a Markov family".into()));
    }
    let sweep = SweepConfig {
        n_grid: config.n_grid.clone(),
        trials: config.trials,
        protocol: Protocol::Flood,
        family: config.family.clone(),
        rate: RateFamily::FloodRate,
        seed: config.seed,
        cap: config.cap,
    };
    let rows = run_sweep(&sweep)?.rows;
    let mut coupled = Vec::new();
    if let Some(ra) = config.monotone_pair {
        for &n in &config.n_grid {
            let (lf, uf) = (ra.lower(), ra.upper());
            lf.validate(n)?;
            uf.validate(n)?;
            let (ls, us) = (lf.spec(n)?, uf.spec(n)?);
            let rate = RateFamily::FloodRate.eval(n, lf.pi1(n)?);
            let cap = config.cap.unwrap_or_else(|| if rate.is_finite() { default_cap(rate) } else { 1000 });
            let trials: Vec<CoupledTrial> = with_thread_cap(|| {
                (0..config.trials)
                    .into_par_iter()
                    .map(|t| coupled_flood_trial(&ls, &us, cap, config.seed, t))
                    .collect::<Result<_>>()
            })?;
            let lower: Vec<Completion> = trials.iter().map(|t| t.lower).collect();
            let upper: Vec<Completion> = trials.iter().map(|t| t.upper).collect();
            let (ql, qu) = (summarize(&lower), summarize(&upper));
            coupled.push(CoupledFloodRow {
                n,
                trials: config.trials,
                containment_violations: trials.iter().map(|t| t.violations).sum(),
                order_violations: trials.iter().filter(|t| !t.upper.le(&t.lower)).count(),
                lower_p50: ql.p50,
                upper_p50: qu.p50,
                lower_censored: ql.censored,
                upper_censored: qu.censored,
            });
        }
    }
    Ok(FloodCheckReport { rows, coupled })
}
