//! Monte Carlo checks of the simulator against analytic laws. Each check is
//! held to four standard errors (or the matching DKW radius).

use gossipdyn::dynamic_graph::{edge_count, init_stationary, EdgeProcessSpec};
use gossipdyn::edge_dynamics::{Hazard, MarkovEdgeParams, RenewalEdgeParams};
use gossipdyn::harness::{run_sweep, ParamFamily, PowerLaw, RateFamily, SweepConfig};
use gossipdyn::markov_sst::{refresh_coupling_times, RefreshCoupling};
use gossipdyn::protocols::Protocol;
use gossipdyn::renewal_cftp::{backward_stationary_times, cftp_tail_certificate, coalescing_depth, UniformWindow};
use gossipdyn::stats::{dkw_radius, ks_statistic, lag1_correlation, FOUR_SIGMA_TAIL};

/// z-score of the mean of independent per-edge time averages.
fn z_of_edge_averages(averages: &[f64], target: f64) -> f64 {
    let k = averages.len() as f64;
    let mean = averages.iter().sum::<f64>() / k;
    let var = averages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean - target) / (var / k).sqrt()
}

/// Per-edge fraction of time present over `steps` steps after the start.
fn presence_averages(spec: &EdgeProcessSpec, seed: u64, steps: usize) -> Vec<f64> {
    let mut state = init_stationary(spec, seed).unwrap();
    let m = spec.n_edges();
    let mut ones = vec![0u64; m];
    for _ in 0..steps {
        let snap = state.advance();
        for e in snap.presence().ones() {
            ones[e] += 1;
        }
    }
    ones.iter().map(|&c| c as f64 / steps as f64).collect()
}

#[test]
fn special_family_occupation_matches_stationary_law() {
    // p = a/n^k with a = 2, k = 1, n = 10
    let p = 2.0 / 10.0;
    let spec = EdgeProcessSpec::markov(40, p, 1.0).unwrap();
    let lambda1 = p / (1.0 + p);
    let z = z_of_edge_averages(&presence_averages(&spec, 11, 400), lambda1);
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn markov_long_run_density() {
    let spec = EdgeProcessSpec::markov(20, 0.3, 0.5).unwrap();
    let z = z_of_edge_averages(&presence_averages(&spec, 12, 3000), 0.375);
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn initial_edge_count_is_binomial() {
    let spec = EdgeProcessSpec::markov(100, 0.5, 0.5).unwrap();
    let seeds = 300u64;
    let counts: Vec<f64> =
        (0..seeds).map(|s| init_stationary(&spec, s).unwrap().snapshot().edge_count() as f64).collect();
    let mean = counts.iter().sum::<f64>() / seeds as f64;
    // Binomial(4950, 1/2): mean 2475, variance 1237.5
    let z = (mean - 2475.0) / (1237.5 / seeds as f64).sqrt();
    assert!(z.abs() < 4.0, "z = {z}");
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (seeds as f64 - 1.0);
    assert!((var / 1237.5 - 1.0).abs() < 0.35, "variance {var}");
}

#[test]
fn renewal_absent_fraction_is_one_over_mean() {
    let params = RenewalEdgeParams::new(Hazard::Table { values: vec![0.1, 0.3], tail: 0.6 }).unwrap();
    let target = 1.0 - 1.0 / params.mean_gap();
    let spec = EdgeProcessSpec::renewal(30, params);
    let z = z_of_edge_averages(&presence_averages(&spec, 13, 2000), target);
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn renewal_graph_is_stationary_and_edges_independent() {
    let params = RenewalEdgeParams::new(Hazard::RationalDecay { scale: 4.0 }).unwrap();
    let pi1 = params.pi1();
    let spec = EdgeProcessSpec::renewal(6, params);
    let m = edge_count(6);
    let seeds = 4000u64;
    for t in [0usize, 1, 7, 40] {
        let mut ones = 0u64;
        let (mut a, mut b, mut ab) = (0u64, 0u64, 0u64);
        for s in 0..seeds {
            let mut state = init_stationary(&spec, s).unwrap();
            for _ in 0..t {
                state.advance();
            }
            let snap = state.snapshot();
            ones += snap.edge_count() as u64;
            let (x, y) = (snap.presence().contains(0), snap.presence().contains(1));
            a += x as u64;
            b += y as u64;
            ab += (x && y) as u64;
        }
        let total = (seeds as usize * m) as f64;
        let z = (ones as f64 / total - pi1) / (pi1 * (1.0 - pi1) / total).sqrt();
        assert!(z.abs() < 4.0, "t = {t}: marginal z = {z}");
        let sf = seeds as f64;
        let cov = ab as f64 / sf - (a as f64 / sf) * (b as f64 / sf);
        let zc = cov / (pi1 * (1.0 - pi1) / sf.sqrt());
        assert!(zc.abs() < 4.0, "t = {t}: covariance z = {zc}");
    }
}

#[test]
fn iid_snapshots_are_uncorrelated_in_time() {
    let spec = EdgeProcessSpec::iid(12, 0.3).unwrap();
    let mut state = init_stationary(&spec, 14).unwrap();
    let counts: Vec<f64> = (0..5000).map(|_| state.advance().edge_count() as f64).collect();
    let r = lag1_correlation(&counts);
    assert!(r.abs() * (counts.len() as f64).sqrt() < 4.0, "lag-1 r = {r}");
}

#[test]
fn single_edge_refresh_spacings_are_geometric() {
    // p = q = 1/4: Δ = 1/2, each step refreshes with probability 1/2
    let spec = EdgeProcessSpec::markov(2, 0.25, 0.25).unwrap();
    let mut state = init_stationary(&spec, 15).unwrap();
    assert_eq!(RefreshCoupling::new(&mut state).unwrap().block_len(), 1);
    let rec = refresh_coupling_times(&mut state, 20_000).unwrap();
    let spacings: Vec<u64> = rec.spacings().iter().map(|s| s - 1).collect();
    // spacing - 1 ~ Geometric on {0, 1, ...}: P(X > k) = 2^-(k+1)
    let d = ks_statistic(&spacings, |k| 0.5f64.powi(k as i32 + 1));
    assert!(d <= dkw_radius(spacings.len(), FOUR_SIGMA_TAIL), "KS = {d}");
}

#[test]
fn one_edge_depth_zero_half_the_time() {
    let params = RenewalEdgeParams::new(Hazard::Constant { value: 0.5 }).unwrap();
    let seeds = 100_000u64;
    let zeros = (0..seeds)
        .filter(|&s| coalescing_depth(&params, 2, &UniformWindow::new(s), 0, 1000).unwrap() == 0)
        .count();
    let z = (zeros as f64 / seeds as f64 - 0.5) / (0.25 / seeds as f64).sqrt();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn backward_samples_are_uncorrelated() {
    let params = RenewalEdgeParams::new(Hazard::Constant { value: 0.6 }).unwrap();
    let run = backward_stationary_times(&params, 5, 400, 16).unwrap();
    let counts: Vec<f64> = run.samples.iter().map(|s| s.edge_count() as f64).collect();
    let r = lag1_correlation(&counts);
    assert!(r.abs() * (counts.len() as f64).sqrt() < 4.0, "lag-1 r = {r}");
    // disjoint windows: each pass starts before the previous coalescence
    for (w, d) in run.times.windows(2).zip(&run.depths) {
        assert_eq!(w[0] - w[1], *d as i64 + 1);
    }
}

#[test]
fn cftp_tail_below_chernoff_bound() {
    // α_n chosen so the graph-level α = 1 - (1 - α_n)^15 is at most 1/2
    let n = 6;
    let alpha_n = 1.0 - 0.5f64.powf(1.0 / 15.0);
    let cert = cftp_tail_certificate(alpha_n, n, 5.0, 25.0, (n as f64).ln(), 10_000, 17).unwrap();
    assert!(cert.alpha_graph <= 0.5 + 1e-12);
    assert!(cert.empirical <= cert.bound, "{cert:?}");
}

#[test]
fn push_on_iid_graphs_scales_like_log_n() {
    let grid = vec![64, 128, 256, 512, 1024];
    let report = run_sweep(&SweepConfig {
        n_grid: grid,
        trials: 100,
        protocol: Protocol::Push,
        family: ParamFamily::Iid { p: PowerLaw::decay(2.0, 1.0) },
        rate: RateFamily::Log2,
        seed: 18,
        cap: None,
    })
    .unwrap();
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    assert!(ratios.iter().all(|&r| (1.0..=6.0).contains(&r)), "{ratios:?}");
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 2.0, "{ratios:?}");
}

#[test]
fn flood_with_constant_density_is_flat() {
    let report = run_sweep(&SweepConfig {
        n_grid: vec![64, 256, 1024],
        trials: 40,
        protocol: Protocol::Flood,
        family: ParamFamily::Pq { p: 0.5, q: 0.5 },
        rate: RateFamily::FloodRate,
        seed: 19,
        cap: None,
    })
    .unwrap();
    for row in &report.rows {
        assert!(row.p50 <= 3 && row.censored == 0, "{row:?}");
        assert!(row.rate < 1.5);
    }
}

#[test]
fn markov_params_reject_out_of_range() {
    assert!(MarkovEdgeParams::new(1.2, 0.1).is_err());
}
