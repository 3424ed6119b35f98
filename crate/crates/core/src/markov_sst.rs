//! Separation distances of the product edge-Markov chain, their upper
//! bounds, strong uniform times, and the refresh coupling that produces
//! stationary times inside a running simulation.
//!
//! For one edge with `Δ = 1 - p - q` and stationary law `λ`,
//! `P^k(y|x) = λ(y) + Δ^k (1{x=y} - λ(y))`. The product chain over `|E|`
//! independent edges has separation `s(k) = 1 - (1 - s_edge(k))^|E|`.

use std::io::{self, Write};

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::Serialize;

use crate::dynamic_graph::{DynamicGraphState, GraphSnapshot};
use crate::edge_dynamics::{delta, markov_stationary, rho, MarkovEdgeParams};
use crate::error::{Error, Result};
use crate::stream::{keyed_uniform, time_key};

/// `m[x][y] = P^k(y | x)`.
pub type Matrix2 = [[f64; 2]; 2];

pub fn two_state_power(params: &MarkovEdgeParams, k: i64) -> Result<Matrix2> {
    if k < 0 {
        return Err(Error::InvalidArgument(format!("matrix power k = {k} is negative")));
    }
    let Ok((l0, l1)) = markov_stationary(params) else {
        // p = q = 0: the identity chain
        return Ok([[1.0, 0.0], [0.0, 1.0]]);
    };
    let dk = delta(params).powi(k.min(i32::MAX as i64) as i32);
    let lam = [l0, l1];
    let mut m = [[0.0; 2]; 2];
    for (x, row) in m.iter_mut().enumerate() {
        for (y, cell) in row.iter_mut().enumerate() {
            let diag = if x == y { 1.0 } else { 0.0 };
            *cell = lam[y] + dk * (diag - lam[y]);
        }
    }
    Ok(m)
}

fn delta_pow(params: &MarkovEdgeParams, k: u64) -> f64 {
    let d = delta(params);
    if k <= i32::MAX as u64 {
        d.powi(k as i32)
    } else {
        d.abs().powf(k as f64) * if d < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 }
    }
}

/// `1 - min_{x,y} P^k(y|x) / λ(y)` for a single edge.
///
/// Evaluated through `P^k(y|x)/λ(y) - 1 = Δ^k (1{x=y}/λ(y) - 1)` so that
/// tiny separations do not cancel against 1.
pub fn edge_separation(params: &MarkovEdgeParams, k: u64) -> Result<f64> {
    let (l0, l1) = markov_stationary(params).map_err(|_| Error::DegenerateStationaryLaw)?;
    if l0 <= 0.0 || l1 <= 0.0 {
        return Err(Error::DegenerateStationaryLaw);
    }
    let dk = delta_pow(params, k);
    // off-diagonal pairs give Δ^k, diagonal ones -Δ^k λ(1-y)/λ(y)
    let s = dk.max(-dk * l1 / l0).max(-dk * l0 / l1);
    Ok(s.clamp(0.0, 1.0))
}

/// `1 - (1 - x)^e` without cancellation.
fn one_minus_pow_complement(x: f64, e: f64) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    -(e * (-x).ln_1p()).exp_m1()
}

/// Separation of the product chain over `n_edges` independent edges.
pub fn graph_separation(params: &MarkovEdgeParams, n_edges: u64, k: u64) -> Result<f64> {
    Ok(one_minus_pow_complement(edge_separation(params, k)?, n_edges as f64))
}

/// `1 - (1 - ρ|Δ|^k)^|E|`.
pub fn rho_envelope(params: &MarkovEdgeParams, n_edges: u64, k: u64) -> Result<f64> {
    let x = rho(params)? * delta_pow(params, k).abs();
    Ok(one_minus_pow_complement(x.min(1.0), n_edges as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UbsBound {
    /// `n^2 (M / n^α)^k`
    pub mid: f64,
    /// `n^{-t (k - l)}`
    pub outer: f64,
    pub valid: bool,
}

/// The chain `n^2 (M/n^α)^k <= n^{-t(k-l)}`, evaluated in log space.
pub fn ubs_bound(n: f64, m: f64, alpha_family: f64, k: f64, t: f64, l: f64) -> UbsBound {
    let ln_n = n.ln();
    let mid = (2.0 * ln_n + k * (m.ln() - alpha_family * ln_n)).exp();
    let outer = (-t * (k - l) * ln_n).exp();
    UbsBound { mid, outer, valid: k > l && mid <= outer }
}

/// Constants `(t, l)` with `ubs_bound(n, M, α, k, t, l).valid` for every
/// `n >= n0` and every `k >= k0`.
///
/// Taking `t` at most `α - log_{n0} M` makes the exponent gap grow with `k`,
/// and `l = 2 / t` absorbs the `n^2` prefactor; `k0 > l` is then required.
pub fn find_ubs_constants(n0: f64, m: f64, alpha_family: f64, k0: f64) -> Option<(f64, f64)> {
    if n0 < 2.0 || m <= 0.0 || alpha_family <= 0.0 {
        return None;
    }
    let t_max = alpha_family - (m.ln() / n0.ln()).max(0.0);
    if t_max <= 0.0 {
        return None;
    }
    let t = t_max / 2.0;
    let l = 2.0 / t;
    (l < k0).then_some((t, l))
}

/// Constants of the polynomial bound attached to a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UbsConstants {
    pub n: f64,
    pub m: f64,
    pub alpha_family: f64,
}

/// Exact `s(k)` of the product chain for `k = 0..=k_max`, plus bounds.
#[derive(Clone, Debug)]
pub struct SeparationProfile {
    params: MarkovEdgeParams,
    n_edges: u64,
    values: Vec<f64>,
    rho_bound: Vec<f64>,
    ubs: Option<UbsConstants>,
}

impl SeparationProfile {
    pub fn new(params: MarkovEdgeParams, n_edges: u64, k_max: u64) -> Result<Self> {
        let values = (0..=k_max)
            .map(|k| graph_separation(&params, n_edges, k))
            .collect::<Result<Vec<_>>>()?;
        let rho_bound = (0..=k_max)
            .map(|k| rho_envelope(&params, n_edges, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, n_edges, values, rho_bound, ubs: None })
    }

    pub fn with_ubs(mut self, ubs: UbsConstants) -> Self {
        self.ubs = Some(ubs);
        self
    }

    pub fn params(&self) -> &MarkovEdgeParams {
        &self.params
    }

    pub fn n_edges(&self) -> u64 {
        self.n_edges
    }

    pub fn k_max(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rho_bounds(&self) -> &[f64] {
        &self.rho_bound
    }

    /// `s(k)`, tabulated or computed on demand.
    pub fn s(&self, k: u64) -> f64 {
        match self.values.get(k as usize) {
            Some(&v) => v,
            None => graph_separation(&self.params, self.n_edges, k).expect("validated at construction"),
        }
    }

    /// Middle term of the polynomial bound at `k`, if constants are attached.
    pub fn ubs_mid(&self, k: u64) -> Option<f64> {
        self.ubs
            .map(|u| ubs_bound(u.n, u.m, u.alpha_family, k as f64, 1.0, 0.0).mid)
    }

    /// CSV with columns `k,s_exact,s_bound_rho,s_bound_ubs`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,s_exact,s_bound_rho,s_bound_ubs")?;
        for k in 0..self.values.len() {
            let ubs = self.ubs_mid(k as u64).map(crate::harness::report::fmt_g).unwrap_or_default();
            writeln!(
                w,
                "{k},{},{},{ubs}",
                crate::harness::report::fmt_g(self.values[k]),
                crate::harness::report::fmt_g(self.rho_bound[k]),
            )?;
        }
        Ok(())
    }
}

/// Draw `T` with `P(T > k) = s(k)` by inverting the nonincreasing profile.
pub fn sample_strong_uniform_time<R: Rng + ?Sized>(profile: &SeparationProfile, rng: &mut R) -> Result<u64> {
    if profile.n_edges > 0 && delta(&profile.params).abs() >= 1.0 {
        return Err(Error::NoFiniteStrongUniformTime);
    }
    let u: f64 = rng.random();
    let mut k = 0;
    while profile.s(k) > u {
        k += 1;
    }
    Ok(k)
}

/// Doeblin form of the edge chain, `P = Δ I + (1 - Δ) Λ` when `Δ >= 0`.
///
/// Each block (one step, or two steps when `Δ < 0`, using `P^2` whose
/// parameter is `Δ^2`) consumes one uniform per edge. `u < refresh` means
/// the edge is redrawn from `λ`, as present iff `u < birth`; otherwise it
/// keeps its bit.
pub struct RefreshCoupling<'a> {
    state: &'a mut DynamicGraphState,
    block: u64,
    refresh: f64,
    birth: f64,
}

impl<'a> RefreshCoupling<'a> {
    pub fn new(state: &'a mut DynamicGraphState) -> Result<Self> {
        let params = *state
            .spec()
            .markov_params()
            .ok_or_else(|| Error::InvalidArgument("refresh coupling needs Markov edge dynamics".into()))?;
        let (_, l1) = markov_stationary(&params)?;
        let d = delta(&params);
        let (block, keep) = if d >= 0.0 { (1, d) } else { (2, d * d) };
        let refresh = 1.0 - keep;
        if refresh <= 0.0 {
            return Err(Error::InvalidArgument("Δ = ±1: edges never refresh".into()));
        }
        Ok(Self { state, block, refresh, birth: refresh * l1 })
    }

    /// Time units per block (1, or 2 when `Δ < 0`).
    pub fn block_len(&self) -> u64 {
        self.block
    }

    pub fn state(&self) -> &DynamicGraphState {
        self.state
    }

    /// Advance one block, marking refreshed edges in `refreshed`.
    pub fn step(&mut self, refreshed: &mut FixedBitSet) -> &GraphSnapshot {
        let t = self.state.time() + self.block;
        let key = time_key(self.state.seed(), t as i64);
        let n = self.state.n();
        let (refresh, birth) = (self.refresh, self.birth);
        let bits = self.state.markov_bits_mut().expect("checked at construction");
        refreshed.clear();
        refreshed.grow(bits.len());
        let mut presence = FixedBitSet::with_capacity(bits.len());
        for (e, b) in bits.iter_mut().enumerate() {
            let u = keyed_uniform(key, e as u64);
            if u < refresh {
                refreshed.insert(e);
                *b = u < birth;
            }
            presence.set(e, *b);
        }
        self.state.set_time_and_snapshot(t, GraphSnapshot::from_presence(n, presence));
        self.state.snapshot()
    }
}

/// Stationary times `t_0 = 0 < t_1 < ...` (relative to the start), with
/// the snapshots observed at them.
#[derive(Clone, Debug, Default)]
pub struct StationaryTimeRecord {
    pub times: Vec<u64>,
    /// Empty when the run was asked not to keep snapshots.
    pub snapshots: Vec<GraphSnapshot>,
}

impl StationaryTimeRecord {
    pub fn spacings(&self) -> Vec<u64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn refresh_impl(state: &mut DynamicGraphState, count: usize, keep: bool) -> Result<StationaryTimeRecord> {
    let start = state.time();
    let first = state.snapshot().clone();
    let m = state.spec().n_edges();
    let mut coupling = RefreshCoupling::new(state)?;
    let mut rec = StationaryTimeRecord { times: vec![0], snapshots: Vec::new() };
    if keep {
        rec.snapshots.push(first);
    }
    let mut pending = FixedBitSet::with_capacity(m);
    pending.insert_range(..);
    let mut refreshed = FixedBitSet::with_capacity(m);
    while rec.times.len() <= count {
        let snap = coupling.step(&mut refreshed);
        pending.difference_with(&refreshed);
        if pending.is_clear() {
            if keep {
                rec.snapshots.push(snap.clone());
            }
            rec.times.push(coupling.state().time() - start);
            pending.insert_range(..);
        }
    }
    Ok(rec)
}

/// Evolve `state` under the refresh coupling and record `count` stationary
/// times after `t_0 = 0`: `t_i` is the first time every edge has refreshed
/// since `t_{i-1}`.
pub fn refresh_coupling_run(state: &mut DynamicGraphState, count: usize) -> Result<StationaryTimeRecord> {
    refresh_impl(state, count, true)
}

/// As [`refresh_coupling_run`] without keeping snapshots.
pub fn refresh_coupling_times(state: &mut DynamicGraphState, count: usize) -> Result<StationaryTimeRecord> {
    refresh_impl(state, count, false)
}

/// `exp(-(1 - 1/s)^2 s r / 2)`.
pub fn chernoff_tail_bound(s_ratio: f64, r: f64) -> Result<f64> {
    if s_ratio.is_nan() || s_ratio <= 1.0 {
        return Err(Error::InvalidArgument(format!("Chernoff ratio s = {s_ratio} must exceed 1")));
    }
    Ok((-(1.0 - 1.0 / s_ratio).powi(2) * s_ratio * r / 2.0).exp())
}
