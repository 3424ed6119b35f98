//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one line per criterion. Exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use gossipdyn::dynamic_graph::{edge_count, init_stationary, EdgeProcessSpec, GraphSnapshot};
use gossipdyn::edge_dynamics::{delta, Hazard, MarkovEdgeParams, RenewalEdgeParams};
use gossipdyn::harness::{
    dependent_vs_iid, flood_rate_check, FloodCheckConfig, ParamFamily, PowerLaw, RateFamily, MonotonePair, SweepConfig,
};
use gossipdyn::markov_sst::{
    chernoff_tail_bound, graph_separation, refresh_coupling_times, rho_envelope, sample_strong_uniform_time,
    two_state_power, SeparationProfile,
};
use gossipdyn::protocols::{run, run_with, Protocol, StaticGraph};
use gossipdyn::stats::ks_statistic;
use gossipdyn::stream::derive_seed;
use gossipdyn::validation::{
    check_refresh_snapshots, check_refresh_transitions, past_independence_mismatches, validate_cftp, Check,
    CftpValidationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative float slack, applied additively in log space.
const SLACK: f64 = 1e-12;

enum Verdict {
    Pass,
    Fail,
    /// A failure that is a property of the stated bound itself, asserted as
    /// such. An unexpected pass is treated as a failure.
    KnownFail,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
}

fn checks_line(checks: &[Check]) -> String {
    checks
        .iter()
        .map(|c| format!("{}={:.4}{}{:.4}", c.name, c.statistic, if c.passed { "ok" } else { "!!" }, c.threshold))
        .collect::<Vec<_>>()
        .join(" ")
}

// --- oracles -------------------------------------------------------------

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn naive_powers(p: f64, q: f64, k_max: usize) -> Vec<[[f64; 2]; 2]> {
    let step = [[1.0 - p, p], [q, 1.0 - q]];
    let mut out = vec![[[1.0, 0.0], [0.0, 1.0]]];
    for k in 1..=k_max {
        out.push(matmul(out[k - 1], step));
    }
    out
}

/// Graph separation from iterated products: `1 - (min P^k(y|x)/λ(y))^E`.
fn naive_graph_separation(p: f64, q: f64, n_edges: u64, k_max: usize) -> Vec<f64> {
    let l1 = p / (p + q);
    let lam = [1.0 - l1, l1];
    naive_powers(p, q, k_max)
        .iter()
        .map(|m| {
            let mut min = f64::INFINITY;
            for x in 0..2 {
                for y in 0..2 {
                    min = min.min(m[x][y] / lam[y]);
                }
            }
            1.0 - min.min(1.0).powf(n_edges as f64)
        })
        .collect()
}

// --- criteria ------------------------------------------------------------

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p: f64 = rng.random();
        let q: f64 = rng.random();
        let params = MarkovEdgeParams::new(p, q).unwrap();
        for (k, m) in naive_powers(p, q, 100).iter().enumerate() {
            let c = two_state_power(&params, k as i64).unwrap();
            for x in 0..2 {
                for y in 0..2 {
                    worst = worst.max((c[x][y] - m[x][y]).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max |closed form - product| = {worst:.3e} over 200 pairs, k <= 100"))
}

/// `ln(1 - (1 - x)^e)` from `ln x`, without underflow.
fn ln_one_minus_pow(ln_x: f64, e: f64) -> f64 {
    if ln_x + e.ln() < -30.0 {
        // 1 - (1 - x)^e = e x (1 + O(e x))
        ln_x + e.ln()
    } else {
        (-(e * (-ln_x.exp()).ln_1p()).exp_m1()).ln()
    }
}

struct ChainCount {
    points: usize,
    first: usize,
    second: usize,
    worst_log_ratio: f64,
    library_mismatch: usize,
}

/// Chain `s_exact <= 1 - (1 - ρ|Δ|^k)^E <= n^2 (M/n^α)^k` over the grid,
/// evaluated in log space so that no point is lost to underflow. The exact
/// separation comes from the per-edge closed form: `|Δ|^k` for `Δ^k > 0`,
/// `|Δ|^k max(λ1/λ0, λ0/λ1)` for `Δ^k < 0`.
fn bound_chain(f: PowerLaw, g: PowerLaw, m: f64, alpha: f64) -> ChainCount {
    let mut c = ChainCount { points: 0, first: 0, second: 0, worst_log_ratio: f64::MIN, library_mismatch: 0 };
    for n in [8usize, 16, 32, 64, 128] {
        let (p, q) = (f.at(n), 1.0 - g.at(n));
        let params = MarkovEdgeParams::new(p, q).unwrap();
        let e = edge_count(n) as f64;
        let l1 = p / (p + q);
        let l0 = 1.0 - l1;
        let d = 1.0 - p - q;
        let ln_rho = (l1 / l0).max(l0 / l1).max(1.0).ln();
        for k in 4..=200u64 {
            let kf = k as f64;
            let ln_mid = 2.0 * (n as f64).ln() + kf * (m.ln() - alpha * (n as f64).ln());
            if ln_mid > 0.0 {
                continue;
            }
            c.points += 1;
            let ln_dk = kf * d.abs().ln();
            let negative = d < 0.0 && k % 2 == 1;
            let ln_edge = if negative { ln_dk + ln_rho } else { ln_dk };
            let ln_s = ln_one_minus_pow(ln_edge, e);
            let ln_env = ln_one_minus_pow(ln_dk + ln_rho, e);
            if ln_s > ln_env + SLACK {
                c.first += 1;
            }
            if ln_env > ln_mid + SLACK {
                c.second += 1;
            }
            c.worst_log_ratio = c.worst_log_ratio.max(ln_env - ln_mid);
            let lib = graph_separation(&params, e as u64, k).unwrap();
            if lib > 1e-290 && (lib.ln() - ln_s).abs() > 1e-9 {
                c.library_mismatch += 1;
            }
            let lib_env = rho_envelope(&params, e as u64, k).unwrap();
            if lib_env > 1e-290 && (lib_env.ln() - ln_env).abs() > 1e-9 {
                c.library_mismatch += 1;
            }
        }
    }
    c
}

fn criterion_2() -> Vec<Outcome> {
    // Oracle cross-check of the exact separation where it is resolvable in
    // double precision.
    let mut oracle_err = 0.0f64;
    for n in [8usize, 16] {
        let (p, q) = (0.5 + 1.0 / (n * n) as f64, 0.5);
        let params = MarkovEdgeParams::new(p, q).unwrap();
        let e = edge_count(n) as u64;
        let naive = naive_graph_separation(p, q, e, 6);
        for k in 1..=3u64 {
            let s = graph_separation(&params, e, k).unwrap();
            oracle_err = oracle_err.max((s - naive[k as usize]).abs() / naive[k as usize]);
        }
    }

    // Power-gap family with bounded ρ: f = 1/2 + 1/n^2, g = 1/2.
    let bounded = bound_chain(PowerLaw { constant: 0.5, coeff: 1.0, exponent: 2.0 }, PowerLaw::constant(0.5), 1.0, 2.0);
    let ok = bounded.first == 0 && bounded.second == 0 && bounded.library_mismatch == 0 && oracle_err < 1e-6;
    let a = outcome(
        ok,
        format!(
            "f=1/2+1/n^2, g=1/2, M=1, alpha=2: {} points, link violations {}/{}, max product/poly = {:.3}, library mismatches {}, oracle rel err {:.1e}",
            bounded.points,
            bounded.first,
            bounded.second,
            bounded.worst_log_ratio.exp(),
            bounded.library_mismatch,
            oracle_err
        ),
    );

    // f = 1/n^2, g = 0 has ρ = n^2, so the product bound is about
    // |E| n^{2-2k} and exceeds n^{2-2k} at every k.
    let example = bound_chain(PowerLaw::decay(1.0, 2.0), PowerLaw::constant(0.0), 1.0, 2.0);
    let b = Outcome {
        verdict: if example.first == 0 && example.library_mismatch == 0 && example.second == example.points {
            Verdict::KnownFail
        } else {
            Verdict::Fail
        },
        detail: format!(
            "f=1/n^2, g=0, M=1, alpha=2: s_exact <= product bound at all {} points ({} violations, {} library mismatches); product <= n^2(M/n^alpha)^k fails at {} of {} (max ratio {:.3e}, about |E| rho / n^2)",
            example.points,
            example.first,
            example.library_mismatch,
            example.second,
            example.points,
            example.worst_log_ratio.exp()
        ),
    };
    vec![a, b]
}

fn criterion_3() -> Outcome {
    let (p, q, n) = (0.3, 0.45, 6usize);
    let e = edge_count(n) as u64;
    let params = MarkovEdgeParams::new(p, q).unwrap();
    let profile = SeparationProfile::new(params, e, 64).unwrap();
    let oracle = naive_graph_separation(p, q, e, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws: Vec<u64> =
        (0..100_000).map(|_| sample_strong_uniform_time(&profile, &mut rng).unwrap()).collect();
    let d = ks_statistic(&draws, |k| oracle.get(k as usize).copied().unwrap_or(0.0));
    let agree = (0..=64).all(|k| (profile.s(k) - oracle[k as usize]).abs() < 1e-12);
    outcome(
        d <= 0.01 && agree,
        format!("sup_k |empirical - s(k)| = {d:.5} (band 0.01), profile matches product oracle: {agree}"),
    )
}

fn criterion_4() -> Outcome {
    let params = MarkovEdgeParams::new(0.3, 0.45).unwrap();
    let mut checks = vec![check_refresh_transitions(params, 1_000_000, 41, 1e-4).unwrap()];
    checks.extend(check_refresh_snapshots(params, 6, 200, 42).unwrap());
    outcome(checks.iter().all(|c| c.passed), format!("Delta = {:.2}: {}", delta(&params), checks_line(&checks)))
}

fn criterion_5() -> Outcome {
    let (c, d) = (5.0, 25.0);
    let l = 2.0;
    let s_ratio = d / c - 1.0 - l;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [16usize, 32] {
        let nf = n as f64;
        let r = nf.ln();
        let index = (c * r).ceil() as usize;
        let limit = d * r;
        let (p, q) = (0.5, 0.5 - 1.0 / (nf * nf));
        let spec = EdgeProcessSpec::markov(n, p, q).unwrap();
        let reps = 10_000u64;
        let exceed = (0..reps)
            .filter(|&i| {
                let mut state = init_stationary(&spec, derive_seed(5, &[n as u64, i])).unwrap();
                let rec = refresh_coupling_times(&mut state, index).unwrap();
                rec.times[index] as f64 > limit
            })
            .count();
        let empirical = exceed as f64 / reps as f64;
        let bound = chernoff_tail_bound(s_ratio, r).unwrap();
        ok &= empirical <= bound;
        parts.push(format!("n={n}: P(t_{index} > {limit:.1}) = {empirical:.4} <= {bound:.4}"));
    }
    outcome(ok, format!("s = {s_ratio}, {}", parts.join("; ")))
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let hazards = |n: usize| {
        [("const0.5", Hazard::Constant { value: 0.5 }), ("example", Hazard::RationalDecay { scale: n as f64 })]
    };
    // (a) past independence
    let params = RenewalEdgeParams::new(Hazard::Constant { value: 0.5 }).unwrap();
    let mismatches = past_independence_mismatches(&params, 4, 1000, 5, 61).unwrap();
    ok &= mismatches == 0;
    parts.push(format!("(a) mismatches {mismatches}/5000"));
    // (b) marginal
    for n in [4usize, 6] {
        for (name, h) in hazards(n) {
            let cfg = CftpValidationConfig {
                hazard: h,
                n,
                samples: 10_000,
                spacings: 10,
                past_seeds: 0,
                ages_per_seed: 0,
                seed: derive_seed(62, &[n as u64]),
            };
            let rep = validate_cftp(&cfg).unwrap();
            let m = (edge_count(n) * cfg.samples) as f64;
            let sigma = (rep.pi1_expected * (1.0 - rep.pi1_expected) / m).sqrt();
            let z = (rep.marginal_estimate - rep.pi1_expected) / sigma;
            ok &= z.abs() <= 4.0;
            parts.push(format!("(b) {name} n={n}: pi1 {:.4} vs {:.4} z={z:.2}", rep.marginal_estimate, rep.pi1_expected));
        }
    }
    // (c) spacing law, α = 0.3 at n = 4
    let cfg = CftpValidationConfig {
        hazard: Hazard::Constant { value: 0.7 },
        n: 4,
        samples: 2000,
        spacings: 10_000,
        past_seeds: 0,
        ages_per_seed: 0,
        seed: 63,
    };
    let rep = validate_cftp(&cfg).unwrap();
    let ks_ok = rep.ks_statistics.spacing <= rep.ks_statistics.critical;
    ok &= ks_ok;
    parts.push(format!(
        "(c) spacing KS {:.4} <= {:.4}",
        rep.ks_statistics.spacing, rep.ks_statistics.critical
    ));
    outcome(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for scale in [10.0f64, 100.0, 1000.0] {
        let x = 1.0 / scale;
        // P(Z = 1) = 1 - x, P(Z = i) = x^{i-1} / (i (i - 1)) for i >= 2
        let oracle = 1.0 + 0.5 * (x / (1.0 - x).powi(2) + 2.0 * x / (1.0 - x));
        let params = RenewalEdgeParams::new(Hazard::RationalDecay { scale }).unwrap();
        let mu = params.mean_gap();
        let pi = params.pi1();
        let good = mu > 1.0 && mu < 1.0 + 5.0 / scale && (0.25..=4.0).contains(&(pi * scale)) && (mu - oracle).abs() < 1e-10;
        ok &= good;
        parts.push(format!("n^l={scale}: mu={mu:.6} (closed form {oracle:.6}), pi1*n^l={:.3}", pi * scale));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0usize;
    for trial in 0..1000u64 {
        let n = rng.random_range(2..48usize);
        let protocol = Protocol::ALL[rng.random_range(0..4)];
        let (p, q) = (rng.random_range(0.02..1.0), rng.random_range(0.0..1.0));
        let spec = EdgeProcessSpec::markov(n, p, q).unwrap();
        let mut graphs = init_stationary(&spec, derive_seed(8, &[trial])).unwrap();
        let mut prng = ChaCha8Rng::seed_from_u64(trial);
        let source = prng.random_range(0..n);
        let res = run_with(&mut graphs, protocol, source, 5000, &mut prng, |_, before, after| {
            if !before.is_subset(after) {
                violations += 1;
            }
            if protocol == Protocol::Push && after.count() > 2 * before.count() {
                violations += 1;
            }
        })
        .unwrap();
        if protocol == Protocol::Push && !res.completion.is_censored() {
            let floor = (n as f64).log2().ceil() as u32;
            if res.completion.rounds_or_cap() < floor {
                violations += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut static_ok = true;
    for n in [2usize, 5, 17, 64] {
        let c = run(&mut StaticGraph(GraphSnapshot::complete(n)), Protocol::Flood, 0, 1000, &mut rng).unwrap();
        let pth = run(&mut StaticGraph(GraphSnapshot::path(n)), Protocol::Flood, 0, 1000, &mut rng).unwrap();
        static_ok &= c.completion.rounds_or_cap() == 1 && !c.completion.is_censored();
        static_ok &= pth.completion.rounds_or_cap() == (n - 1) as u32 && !pth.completion.is_censored();
    }
    outcome(
        violations == 0 && static_ok,
        format!("1000 randomized trials: {violations} violations; static complete/path flood exact: {static_ok}"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = FloodCheckConfig {
        n_grid: vec![64],
        trials: 500,
        family: ParamFamily::MarkovSpecial { a: 1.0, k: 2.0 },
        seed: 9,
        cap: None,
        monotone_pair: Some(MonotonePair { a: 1.0, k: 2.0, alpha: 0.3 }),
    };
    let rep = flood_rate_check(&cfg).unwrap();
    let row = &rep.coupled[0];
    outcome(
        row.containment_violations == 0 && row.order_violations == 0 && row.lower_censored == 0,
        format!(
            "n=64, 500 trials: containment violations {}, order violations {}, p50 lower {} upper {}, censored {}/{}",
            row.containment_violations,
            row.order_violations,
            row.lower_p50,
            row.upper_p50,
            row.lower_censored,
            row.upper_censored
        ),
    )
}

fn criterion_10() -> Outcome {
    let pow2 = |lo: usize, hi: usize| (lo.trailing_zeros()..=hi.trailing_zeros()).map(|e| 1usize << e).collect::<Vec<_>>();
    let cells = [
        ("a push p=q=1/2", Protocol::Push, ParamFamily::Pq { p: 0.5, q: 0.5 }, RateFamily::Log2, pow2(64, 1024)),
        (
            "b push special a=1 k=1.5",
            Protocol::Push,
            ParamFamily::MarkovSpecial { a: 1.0, k: 1.5 },
            RateFamily::SpecialPush { k: 1.5 },
            pow2(64, 512),
        ),
        ("c pull pi1=4/n", Protocol::Pull, ParamFamily::MarkovSparse { a: 4.0, q: 0.5 }, RateFamily::Log, pow2(128, 1024)),
        (
            "c pushpull pi1=4/n",
            Protocol::PushPull,
            ParamFamily::MarkovSparse { a: 4.0, q: 0.5 },
            RateFamily::Log,
            pow2(128, 1024),
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, protocol, family, rate, grid) in cells {
        let cfg = SweepConfig { n_grid: grid, trials: 200, protocol, family: family.clone(), rate, seed: 10, cap: None };
        let rows = dependent_vs_iid(&cfg).unwrap();
        let ratios: Vec<f64> =
            rows.iter().map(|r| r.p50_dependent as f64 / rate.eval(r.n, family.pi1(r.n).unwrap())).collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let spread = max / min;
        let iid_ok = rows.iter().all(|r| (0.25..=4.0).contains(&r.ratio));
        ok &= spread <= 4.0 && iid_ok;
        let dep: Vec<String> =
            rows.iter().map(|r| format!("{}:{}/{}", r.n, r.p50_dependent, r.p50_iid)).collect();
        parts.push(format!(
            "({name}) spread {spread:.2}, dep/iid in [{:.2},{:.2}], p50 dep/iid {}",
            rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min),
            rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max),
            dep.join(" ")
        ));
    }
    outcome(ok, parts.join("; "))
}

fn report(label: &str, o: &Outcome, elapsed: Duration) -> bool {
    let (tag, good) = match o.verdict {
        Verdict::Pass => ("PASS", true),
        Verdict::Fail => ("FAIL", false),
        Verdict::KnownFail => ("KNOWN-FAIL", true),
    };
    println!("criterion {label}: {tag} [{:.1}s] {}", elapsed.as_secs_f64(), o.detail);
    good
}

type Criterion = fn() -> Outcome;

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

/// Criteria named on the command line (`cargo test --test acceptance -- 2 7`),
/// or all of them.
fn selected(n: &str) -> bool {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    args.is_empty() || args.iter().any(|a| a == n)
}

fn main() {
    let mut all = true;
    if selected("1") {
        let (o, t) = timed(criterion_1);
        all &= report("1", &o, t);
    }
    if selected("2") {
        let (two, t) = timed(criterion_2);
        all &= report("2 (bounded-rho family)", &two[0], t);
        all &= report("2 (example family)", &two[1], t);
    }
    let rest: [(&str, Criterion); 8] = [
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
    ];
    for (label, f) in rest.into_iter().filter(|(l, _)| selected(l)) {
        let (o, t) = timed(f);
        all &= report(label, &o, t);
    }
    if !all {
        std::process::exit(1);
    }
}
