//! Statistical validation suites for the strong-stationary-time machinery
//! and the CFTP sampler. Each check carries its statistic, the threshold
//! it was held to, and the verdict.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamic_graph::{edge_count, init_stationary, EdgeProcessSpec};
use crate::edge_dynamics::{markov_stationary, Hazard, MarkovEdgeParams, RenewalEdgeParams};
use crate::error::Result;
use crate::markov_sst::{
    refresh_coupling_run, refresh_coupling_times, sample_strong_uniform_time, two_state_power,
    RefreshCoupling, SeparationProfile,
};
use crate::renewal_cftp::{
    backward_stationary_times, backward_times_only, coalescence_probability, perfect_sample, replay_from,
    UniformWindow,
};
use crate::stats::{
    binomial_z, chi_square_sf, chi_square_stat, correlation, dkw_radius, ks_statistic, FOUR_SIGMA_TAIL,
};
use crate::stream::derive_seed;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `statistic <= threshold`.
    pub fn at_most(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self { name: name.into(), statistic, threshold, passed: statistic <= threshold }
    }

    /// Passes when `statistic > threshold`.
    pub fn above(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self { name: name.into(), statistic, threshold, passed: statistic > threshold }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SstValidationConfig {
    pub p: f64,
    pub q: f64,
    /// Vertices of the graph whose separation profile is sampled.
    pub profile_n: usize,
    pub sut_samples: usize,
    /// Block steps of the single-edge transition check.
    pub transition_steps: u64,
    /// Vertices of the refresh-coupling graph.
    pub refresh_n: usize,
    /// Stationary times recorded for the marginal and lag checks.
    pub refresh_count: usize,
    pub seed: u64,
}

impl Default for SstValidationConfig {
    fn default() -> Self {
        Self {
            p: 0.3,
            q: 0.45,
            profile_n: 6,
            sut_samples: 100_000,
            transition_steps: 1_000_000,
            refresh_n: 6,
            refresh_count: 200,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SstValidationReport {
    pub config: SstValidationConfig,
    pub lambda1: f64,
    pub checks: Vec<Check>,
}

/// Empirical survival of strong uniform times vs the exact profile, with
/// radius `eps` (DKW).
pub fn check_sut_law(params: MarkovEdgeParams, n_edges: u64, samples: usize, eps: f64, seed: u64) -> Result<Check> {
    let profile = SeparationProfile::new(params, n_edges, 64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..samples)
        .map(|_| sample_strong_uniform_time(&profile, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let d = ks_statistic(&draws, |k| profile.s(k));
    Ok(Check::at_most("strong_uniform_time_dkw", d, eps))
}

/// Single-edge refresh chain over `steps` blocks; chi-square of the
/// observed transitions against `P` (or `P^2` for two-step blocks).
/// Returns the p-value check at `min_p`.
pub fn check_refresh_transitions(params: MarkovEdgeParams, steps: u64, seed: u64, min_p: f64) -> Result<Check> {
    let spec = EdgeProcessSpec::markov(2, params.p, params.q)?;
    let mut state = init_stationary(&spec, seed)?;
    let mut counts = [[0u64; 2]; 2];
    let mut coupling = RefreshCoupling::new(&mut state)?;
    let block = coupling.block_len();
    let mut refreshed = fixedbitset::FixedBitSet::with_capacity(1);
    let mut prev = coupling.state().snapshot().has_edge(0, 1);
    for _ in 0..steps {
        let next = coupling.step(&mut refreshed).has_edge(0, 1);
        counts[prev as usize][next as usize] += 1;
        prev = next;
    }
    let pk = two_state_power(&params, block as i64)?;
    let mut cells = Vec::new();
    let mut dof = 0.0;
    for from in 0..2 {
        let total = (counts[from][0] + counts[from][1]) as f64;
        if total == 0.0 {
            continue;
        }
        for to in 0..2 {
            cells.push((counts[from][to] as f64, total * pk[from][to]));
        }
        if pk[from][0] > 0.0 && pk[from][1] > 0.0 {
            dof += 1.0;
        }
    }
    let stat = chi_square_stat(&cells);
    let pval = if dof > 0.0 { chi_square_sf(stat, dof) } else { 1.0 };
    Ok(Check::above("refresh_transition_chi2_pvalue", pval, min_p))
}

/// Snapshots at refresh stationary times: pooled presence frequency vs
/// `λ1` and lag-1 correlation of edge indicators, both at 4σ.
pub fn check_refresh_snapshots(params: MarkovEdgeParams, n: usize, count: usize, seed: u64) -> Result<Vec<Check>> {
    let spec = EdgeProcessSpec::markov(n, params.p, params.q)?;
    let (_, l1) = markov_stationary(&params)?;
    let mut state = init_stationary(&spec, seed)?;
    let rec = refresh_coupling_run(&mut state, count)?;
    let m = edge_count(n);
    let snaps = &rec.snapshots[1..];
    let ones: u64 = snaps.iter().map(|s| s.edge_count() as u64).sum();
    let z = binomial_z(ones, (snaps.len() * m) as u64, l1);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for w in snaps.windows(2) {
        for e in 0..m {
            xs.push(w[0].presence().contains(e) as u8 as f64);
            ys.push(w[1].presence().contains(e) as u8 as f64);
        }
    }
    let r = correlation(&xs, &ys);
    let counts: Vec<f64> = snaps.iter().map(|s| s.edge_count() as f64).collect();
    let rc = crate::stats::lag1_correlation(&counts);
    Ok(vec![
        Check::at_most("refresh_marginal_z", z.abs(), 4.0),
        Check::at_most("refresh_lag1_indicator_z", r.abs() * (xs.len() as f64).sqrt(), 4.0),
        Check::at_most("refresh_lag1_edge_count_z", rc.abs() * (counts.len() as f64).sqrt(), 4.0),
    ])
}

/// Refresh spacings have survival exactly `s(k)` when `Δ >= 0`; KS at the
/// 4σ level.
pub fn check_refresh_spacings(params: MarkovEdgeParams, n: usize, count: usize, seed: u64) -> Result<Check> {
    let spec = EdgeProcessSpec::markov(n, params.p, params.q)?;
    let mut state = init_stationary(&spec, seed)?;
    let rec = refresh_coupling_times(&mut state, count)?;
    let profile = SeparationProfile::new(params, edge_count(n) as u64, 0)?;
    let spacings = rec.spacings();
    let block = if crate::edge_dynamics::delta(&params) >= 0.0 { 1 } else { 2 };
    let scaled: Vec<u64> = spacings.iter().map(|s| s / block).collect();
    let d = if block == 1 {
        ks_statistic(&scaled, |k| profile.s(k))
    } else {
        let p2 = two_state_power(&params, 2)?;
        let two = MarkovEdgeParams::new(p2[0][1], p2[1][0])?;
        let prof2 = SeparationProfile::new(two, edge_count(n) as u64, 0)?;
        ks_statistic(&scaled, |k| prof2.s(k))
    };
    Ok(Check::at_most("refresh_spacing_ks", d, dkw_radius(scaled.len(), FOUR_SIGMA_TAIL)))
}

pub fn validate_sst(config: &SstValidationConfig) -> Result<SstValidationReport> {
    let params = MarkovEdgeParams::new(config.p, config.q)?;
    let (_, l1) = markov_stationary(&params)?;
    let mut checks = vec![
        check_sut_law(params, edge_count(config.profile_n) as u64, config.sut_samples, 0.01, config.seed)?,
        check_refresh_transitions(params, config.transition_steps, derive_seed(config.seed, &[1]), 1e-4)?,
    ];
    checks.extend(check_refresh_snapshots(
        params,
        config.refresh_n,
        config.refresh_count,
        derive_seed(config.seed, &[2]),
    )?);
    checks.push(check_refresh_spacings(
        params,
        config.refresh_n,
        config.refresh_count.max(2000),
        derive_seed(config.seed, &[3]),
    )?);
    Ok(SstValidationReport { config: config.clone(), lambda1: l1, checks })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CftpValidationConfig {
    pub hazard: Hazard,
    pub n: usize,
    pub samples: usize,
    /// Number of backward stationary times used for the spacing law.
    pub spacings: usize,
    /// Seeds for the past-independence check.
    pub past_seeds: usize,
    pub ages_per_seed: usize,
    pub seed: u64,
}

impl Default for CftpValidationConfig {
    fn default() -> Self {
        Self {
            hazard: Hazard::Constant { value: 0.5 },
            n: 6,
            samples: 10_000,
            spacings: 2_000,
            past_seeds: 1_000,
            ages_per_seed: 5,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KsStatistics {
    pub theta0: f64,
    pub spacing: f64,
    pub critical: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CftpValidationReport {
    pub theta0_histogram: Vec<u64>,
    pub marginal_estimate: f64,
    pub pi1_expected: f64,
    pub ks_statistics: KsStatistics,
    pub checks: Vec<Check>,
}

/// Rerun each sample's forward pass from arbitrary ages one step before
/// coalescence and count mismatches with the perfect sample.
pub fn past_independence_mismatches(
    params: &RenewalEdgeParams,
    n: usize,
    seeds: usize,
    ages_per_seed: usize,
    seed: u64,
) -> Result<u64> {
    let m = edge_count(n);
    let bad = (0..seeds as u64)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let s = derive_seed(seed, &[i]);
            let res = perfect_sample(params, n, s)?;
            let window = UniformWindow::new(s);
            let start = -(res.theta0 as i64) - 1;
            let mut bad = 0;
            for j in 0..ages_per_seed as u64 {
                let ages: Vec<u64> = (0..m as u64)
                    .map(|e| 1 + crate::stream::mix64(s ^ (j << 32) ^ e) % 64)
                    .collect();
                if replay_from(params, n, &window, start, &ages, 0)? != res.sample {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bad.iter().sum())
}

pub fn validate_cftp(config: &CftpValidationConfig) -> Result<CftpValidationReport> {
    let params = RenewalEdgeParams::new(config.hazard.clone())?;
    let n = config.n;
    let m = edge_count(n);
    let alpha = params.minorization_alpha();
    let beta = coalescence_probability(alpha, n);
    let results = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| perfect_sample(&params, n, derive_seed(config.seed, &[0, i])))
        .collect::<Result<Vec<_>>>()?;
    let depths: Vec<u64> = results.iter().map(|r| r.theta0).collect();
    let ones: u64 = results.iter().map(|r| r.sample.edge_count() as u64).sum();
    let pi1 = params.pi1();
    let total = (config.samples * m) as u64;
    let marginal = ones as f64 / total.max(1) as f64;
    let z = binomial_z(ones, total, pi1);

    let mut hist = vec![0u64; depths.iter().copied().max().unwrap_or(0) as usize + 1];
    for &d in &depths {
        hist[d as usize] += 1;
    }
    let ks_theta = ks_statistic(&depths, |k| (1.0 - beta).powf(k as f64 + 1.0));
    let back = backward_times_only(&params, n, config.spacings + 1, derive_seed(config.seed, &[1]))?;
    let spacings = back.spacings();
    let ks_spacing = ks_statistic(&spacings, |k| (1.0 - beta).powf(k as f64));
    let crit_theta = dkw_radius(depths.len(), FOUR_SIGMA_TAIL);
    let crit_spacing = dkw_radius(spacings.len(), FOUR_SIGMA_TAIL);

    let mismatches =
        past_independence_mismatches(&params, n, config.past_seeds, config.ages_per_seed, derive_seed(config.seed, &[2]))?;

    // consecutive backward samples: lag-1 correlation of edge counts
    let chain = backward_stationary_times(&params, n, 200.min(config.samples.max(3)), derive_seed(config.seed, &[3]))?;
    let counts: Vec<f64> = chain.samples.iter().map(|s| s.edge_count() as f64).collect();
    let lag = crate::stats::lag1_correlation(&counts);

    let checks = vec![
        Check::at_most("past_independence_mismatches", mismatches as f64, 0.0),
        Check::at_most("marginal_z", z.abs(), 4.0),
        Check::at_most("theta0_ks", ks_theta, crit_theta),
        Check::at_most("spacing_ks", ks_spacing, crit_spacing),
        Check::at_most("backward_lag1_edge_count_z", lag.abs() * (counts.len() as f64).sqrt(), 4.0),
    ];
    Ok(CftpValidationReport {
        theta0_histogram: hist,
        marginal_estimate: marginal,
        pi1_expected: pi1,
        ks_statistics: KsStatistics { theta0: ks_theta, spacing: ks_spacing, critical: crit_spacing },
        checks,
    })
}
