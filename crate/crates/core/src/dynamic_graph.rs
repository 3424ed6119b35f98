//! Joint state of all `n(n-1)/2` edge processes and the graph snapshots
//! they produce, one per round.

use std::io::{self, Write};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::edge_dynamics::{
    markov_stationary, stationary_delay_sample, step_markov, step_renewal, EdgeState,
    IidEdgeParams, MarkovEdgeParams, RenewalEdgeParams,
};
use crate::error::{Error, Result};
use crate::stream::{keyed_uniform, time_key};

/// Canonical index of the edge `{x, y}`, `x < y`.
#[inline]
pub fn edge_index(n: usize, x: usize, y: usize) -> usize {
    debug_assert!(x < y && y < n);
    x * n - x * (x + 1) / 2 + (y - x - 1)
}

#[inline]
pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[derive(Clone, Debug)]
pub enum EdgeProcess {
    Iid(IidEdgeParams),
    Markov(MarkovEdgeParams),
    Renewal(Arc<RenewalEdgeParams>),
}

#[derive(Clone, Debug)]
pub struct EdgeProcessSpec {
    pub n: usize,
    pub process: EdgeProcess,
}

impl EdgeProcessSpec {
    pub fn iid(n: usize, p: f64) -> Result<Self> {
        Ok(Self { n, process: EdgeProcess::Iid(IidEdgeParams::new(p)?) })
    }

    pub fn markov(n: usize, p: f64, q: f64) -> Result<Self> {
        let params = MarkovEdgeParams::new(p, q)?;
        markov_stationary(&params)?;
        Ok(Self { n, process: EdgeProcess::Markov(params) })
    }

    pub fn renewal(n: usize, params: RenewalEdgeParams) -> Self {
        Self { n, process: EdgeProcess::Renewal(Arc::new(params)) }
    }

    pub fn n_edges(&self) -> usize {
        edge_count(self.n)
    }

    /// Stationary probability that an edge is present.
    pub fn pi1(&self) -> Result<f64> {
        match &self.process {
            EdgeProcess::Iid(p) => Ok(p.p),
            EdgeProcess::Markov(m) => Ok(markov_stationary(m)?.1),
            EdgeProcess::Renewal(r) => Ok(r.pi1()),
        }
    }

    pub fn dynamics_name(&self) -> &'static str {
        match self.process {
            EdgeProcess::Iid(_) => "iid",
            EdgeProcess::Markov(_) => "markov",
            EdgeProcess::Renewal(_) => "renewal",
        }
    }

    pub fn markov_params(&self) -> Option<&MarkovEdgeParams> {
        match &self.process {
            EdgeProcess::Markov(m) => Some(m),
            _ => None,
        }
    }
}

/// The graph at one time: a presence bitset over canonical edge indices
/// plus CSR adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSnapshot {
    n: usize,
    presence: FixedBitSet,
    offsets: Vec<u32>,
    adjacency: Vec<u32>,
}

impl GraphSnapshot {
    pub fn from_presence(n: usize, presence: FixedBitSet) -> Self {
        assert_eq!(presence.len(), edge_count(n));
        let mut edges = Vec::with_capacity(presence.count_ones(..));
        let mut idx = 0;
        for x in 0..n {
            for y in x + 1..n {
                if presence.contains(idx) {
                    edges.push((x as u32, y as u32));
                }
                idx += 1;
            }
        }
        Self::build(n, presence, &edges)
    }

    /// Build from an arbitrary list of undirected pairs; self-loops and
    /// duplicates are ignored.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut presence = FixedBitSet::with_capacity(edge_count(n));
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a != b {
                presence.insert(edge_index(n, a.min(b), a.max(b)));
            }
        }
        Ok(Self::from_presence(n, presence))
    }

    pub fn empty(n: usize) -> Self {
        Self::from_presence(n, FixedBitSet::with_capacity(edge_count(n)))
    }

    pub fn complete(n: usize) -> Self {
        let mut presence = FixedBitSet::with_capacity(edge_count(n));
        presence.insert_range(..);
        Self::from_presence(n, presence)
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("in range")
    }

    /// Star centred at vertex 0.
    pub fn star(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|v| (0, v))).expect("in range")
    }

    fn build(n: usize, presence: FixedBitSet, edges: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0u32; n + 1];
        for &(x, y) in edges {
            offsets[x as usize + 1] += 1;
            offsets[y as usize + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut fill: Vec<u32> = offsets[..n].to_vec();
        let mut adjacency = vec![0u32; edges.len() * 2];
        for &(x, y) in edges {
            adjacency[fill[x as usize] as usize] = y;
            fill[x as usize] += 1;
            adjacency[fill[y as usize] as usize] = x;
            fill[y as usize] += 1;
        }
        Self { n, presence, offsets, adjacency }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.len() / 2
    }

    pub fn presence(&self) -> &FixedBitSet {
        &self.presence
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        x != y && self.presence.contains(edge_index(self.n, x.min(y), x.max(y)))
    }

    /// Neighbors of `v` without bounds checking beyond a panic.
    #[inline]
    pub fn adj(&self, v: usize) -> &[u32] {
        &self.adjacency[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn neighbors(&self, v: usize) -> Result<&[u32]> {
        if v >= self.n {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range for n = {}", self.n)));
        }
        Ok(self.adj(v))
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub fn is_subgraph_of(&self, other: &GraphSnapshot) -> bool {
        self.n == other.n && self.presence.is_subset(&other.presence)
    }

    /// One `u v` pair per line, `u < v`, in canonical order.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for x in 0..self.n {
            for &y in self.adj(x) {
                if (y as usize) > x {
                    writeln!(w, "{x} {y}")?;
                }
            }
        }
        Ok(())
    }
}

/// Free-function form of [`GraphSnapshot::neighbors`].
pub fn neighbors(snapshot: &GraphSnapshot, v: usize) -> Result<&[u32]> {
    snapshot.neighbors(v)
}

#[derive(Clone, Debug)]
pub(crate) enum EdgeStore {
    Iid,
    Markov(Vec<bool>),
    Renewal(Vec<u64>),
}

/// All edge processes of one trial.
#[derive(Clone, Debug)]
pub struct DynamicGraphState {
    spec: EdgeProcessSpec,
    seed: u64,
    time: u64,
    store: EdgeStore,
    current: GraphSnapshot,
}

/// Stationary initialization: Markov bits ~ Bernoulli(λ1), renewal ages
/// from the stationary delay law, i.i.d. edges drawn fresh.
pub fn init_stationary(spec: &EdgeProcessSpec, seed: u64) -> Result<DynamicGraphState> {
    let n = spec.n;
    let m = spec.n_edges();
    let key = time_key(seed, 0);
    let mut presence = FixedBitSet::with_capacity(m);
    let store = match &spec.process {
        EdgeProcess::Iid(p) => {
            for e in 0..m {
                if keyed_uniform(key, e as u64) < p.p {
                    presence.insert(e);
                }
            }
            EdgeStore::Iid
        }
        EdgeProcess::Markov(mp) => {
            let (_, l1) = markov_stationary(mp)?;
            let bits: Vec<bool> = (0..m).map(|e| keyed_uniform(key, e as u64) < l1).collect();
            for (e, &b) in bits.iter().enumerate() {
                presence.set(e, b);
            }
            EdgeStore::Markov(bits)
        }
        EdgeProcess::Renewal(r) => {
            // the stationary age and the stationary forward delay share one law
            let ages: Vec<u64> = (0..m)
                .map(|e| stationary_delay_sample(r, keyed_uniform(key, e as u64)) + 1)
                .collect();
            for (e, &a) in ages.iter().enumerate() {
                presence.set(e, a > 1);
            }
            EdgeStore::Renewal(ages)
        }
    };
    Ok(DynamicGraphState {
        spec: spec.clone(),
        seed,
        time: 0,
        store,
        current: GraphSnapshot::from_presence(n, presence),
    })
}

impl DynamicGraphState {
    pub fn spec(&self) -> &EdgeProcessSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Snapshot at the current time.
    pub fn snapshot(&self) -> &GraphSnapshot {
        &self.current
    }

    pub fn edge_state(&self, idx: usize) -> EdgeState {
        match &self.store {
            EdgeStore::Iid => EdgeState::Iid,
            EdgeStore::Markov(b) => EdgeState::Markov { bit: b[idx] },
            EdgeStore::Renewal(a) => EdgeState::Renewal { age: a[idx] },
        }
    }

    pub(crate) fn markov_bits_mut(&mut self) -> Option<&mut Vec<bool>> {
        match &mut self.store {
            EdgeStore::Markov(b) => Some(b),
            _ => None,
        }
    }

    pub(crate) fn set_time_and_snapshot(&mut self, time: u64, snapshot: GraphSnapshot) {
        self.time = time;
        self.current = snapshot;
    }

    /// Advance every edge by one step using the uniform of cell
    /// `(seed, edge, time + 1)`.
    pub fn advance(&mut self) -> &GraphSnapshot {
        let n = self.spec.n;
        let t = self.time + 1;
        let key = time_key(self.seed, t as i64);
        let mut presence = FixedBitSet::with_capacity(edge_count(n));
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(self.current.edge_count() + 16);
        let mut idx = 0usize;
        macro_rules! sweep {
            ($next:expr) => {
                for x in 0..n {
                    for y in x + 1..n {
                        let u = keyed_uniform(key, idx as u64);
                        if $next(idx, u) {
                            presence.insert(idx);
                            edges.push((x as u32, y as u32));
                        }
                        idx += 1;
                    }
                }
            };
        }
        match (&self.spec.process, &mut self.store) {
            (EdgeProcess::Iid(p), EdgeStore::Iid) => {
                let p = p.p;
                sweep!(|_, u: f64| u < p);
            }
            (EdgeProcess::Markov(mp), EdgeStore::Markov(bits)) => {
                sweep!(|i: usize, u: f64| {
                    let b = step_markov(bits[i], mp, u);
                    bits[i] = b;
                    b
                });
            }
            (EdgeProcess::Renewal(r), EdgeStore::Renewal(ages)) => {
                sweep!(|i: usize, u: f64| {
                    let (present, age) = step_renewal(ages[i], r, u);
                    ages[i] = age;
                    present
                });
            }
            _ => unreachable!("store matches spec by construction"),
        }
        self.time = t;
        self.current = GraphSnapshot::build(n, presence, &edges);
        &self.current
    }
}

/// Free-function form of [`DynamicGraphState::advance`].
pub fn advance(state: &mut DynamicGraphState) -> GraphSnapshot {
    state.advance().clone()
}

fn check_dominance(lower: &MarkovEdgeParams, upper: &MarkovEdgeParams) -> Result<()> {
    // x' <= x''  =>  P'(1|x') <= P''(1|x'')
    let ok = lower.birth_from(false) <= upper.birth_from(false)
        && lower.birth_from(false) <= upper.birth_from(true)
        && lower.birth_from(true) <= upper.birth_from(true);
    if ok {
        Ok(())
    } else {
        Err(Error::NoMonotoneCoupling)
    }
}

/// Initialize two Markov graphs from common uniforms so that, under the
/// dominance condition, `lower ⊆ upper` at time 0.
pub fn init_coupled(
    lower: &EdgeProcessSpec,
    upper: &EdgeProcessSpec,
    seed: u64,
) -> Result<(DynamicGraphState, DynamicGraphState)> {
    let (lp, up) = match (lower.markov_params(), upper.markov_params()) {
        (Some(l), Some(u)) if lower.n == upper.n => (*l, *u),
        _ => return Err(Error::NoMonotoneCoupling),
    };
    check_dominance(&lp, &up)?;
    let a = init_stationary(lower, seed)?;
    let b = init_stationary(upper, seed)?;
    if !a.snapshot().is_subgraph_of(b.snapshot()) {
        return Err(Error::NoMonotoneCoupling);
    }
    Ok((a, b))
}

/// Advance both graphs one step with the same uniform per edge (drawn from
/// `lower`'s stream), preserving `lower ⊆ upper`.
pub fn coupled_advance(
    lower: &mut DynamicGraphState,
    upper: &mut DynamicGraphState,
) -> Result<(GraphSnapshot, GraphSnapshot)> {
    let (lp, up) = match (lower.spec.markov_params(), upper.spec.markov_params()) {
        (Some(l), Some(u)) if lower.spec.n == upper.spec.n && lower.time == upper.time => (*l, *u),
        _ => return Err(Error::NoMonotoneCoupling),
    };
    check_dominance(&lp, &up)?;
    let n = lower.spec.n;
    let m = edge_count(n);
    let t = lower.time + 1;
    let key = time_key(lower.seed, t as i64);
    let lo_bits = lower.markov_bits_mut().expect("markov");
    let mut lo_presence = FixedBitSet::with_capacity(m);
    for (e, b) in lo_bits.iter_mut().enumerate() {
        *b = step_markov(*b, &lp, keyed_uniform(key, e as u64));
        lo_presence.set(e, *b);
    }
    let hi_bits = upper.markov_bits_mut().expect("markov");
    let mut hi_presence = FixedBitSet::with_capacity(m);
    for (e, b) in hi_bits.iter_mut().enumerate() {
        *b = step_markov(*b, &up, keyed_uniform(key, e as u64));
        hi_presence.set(e, *b);
    }
    let lo = GraphSnapshot::from_presence(n, lo_presence);
    let hi = GraphSnapshot::from_presence(n, hi_presence);
    lower.set_time_and_snapshot(t, lo.clone());
    upper.set_time_and_snapshot(t, hi.clone());
    Ok((lo, hi))
}
