//! Small statistical helpers for the validation suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided normal tail mass beyond four standard deviations.
pub const FOUR_SIGMA_TAIL: f64 = 6.334_248_366_623_996e-5;

/// `(x - n p) / sqrt(n p (1 - p))`, zero when the variance vanishes and the
/// count matches exactly.
pub fn binomial_z(successes: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    let var = n * p * (1.0 - p);
    let diff = successes as f64 - n * p;
    if var <= 0.0 {
        return if diff.abs() < 1e-9 { 0.0 } else { f64::INFINITY };
    }
    diff / var.sqrt()
}

/// Upper tail `P(X > stat)` of a chi-square with `dof` degrees of freedom.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}

/// Pearson statistic over `(observed, expected)` cells.
pub fn chi_square_stat(cells: &[(f64, f64)]) -> f64 {
    cells
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum()
}

/// `sup_k |P_emp(X > k) - survival(k)|` for integer samples.
pub fn ks_statistic<F: Fn(u64) -> f64>(samples: &[u64], survival: F) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let max = *sorted.last().expect("nonempty");
    let mut worst = 0.0f64;
    let mut idx = 0;
    for k in 0..=max {
        while idx < sorted.len() && sorted[idx] <= k {
            idx += 1;
        }
        let emp = (sorted.len() - idx) as f64 / n;
        worst = worst.max((emp - survival(k)).abs());
    }
    worst
}

/// DKW radius with failure probability `tail` for `n` samples. Also a
/// conservative KS critical value for discrete laws.
pub fn dkw_radius(n: usize, tail: f64) -> f64 {
    ((2.0 / tail).ln() / (2.0 * n as f64)).sqrt()
}

/// Sample Pearson correlation; zero if either side is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Lag-1 autocorrelation of a series.
pub fn lag1_correlation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    correlation(&xs[..xs.len() - 1], &xs[1..])
}

/// Nearest-rank quantile of sorted data.
pub fn quantile_sorted<T: Copy>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}
