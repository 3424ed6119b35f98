//! Synchronous rumor-spreading rounds (Push, Pull, Push-Pull, Flood) and
//! the run-to-completion loop.
//!
//! All choices within a round are made against the informed set as it was
//! at the start of the round. Vertices without neighbors do nothing.

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamic_graph::{DynamicGraphState, GraphSnapshot};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Push,
    Pull,
    PushPull,
    Flood,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Push, Protocol::Pull, Protocol::PushPull, Protocol::Flood];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Push => "push",
            Protocol::Pull => "pull",
            Protocol::PushPull => "pushpull",
            Protocol::Flood => "flood",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "push" => Ok(Protocol::Push),
            "pull" => Ok(Protocol::Pull),
            "pushpull" => Ok(Protocol::PushPull),
            "flood" => Ok(Protocol::Flood),
            other => Err(Error::Config(format!("unknown protocol '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InformedSet {
    bits: FixedBitSet,
    count: usize,
}

impl InformedSet {
    pub fn single(n: usize, source: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert(source);
        Self { bits, count: 1 }
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(n: usize, vs: I) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        for v in vs {
            bits.insert(v);
        }
        let count = bits.count_ones(..);
        Self { bits, count }
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn contains(&self, v: usize) -> bool {
        self.bits.contains(v)
    }

    pub fn is_complete(&self) -> bool {
        self.count == self.bits.len()
    }

    pub fn is_subset(&self, other: &InformedSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    fn insert(&mut self, v: usize) {
        if !self.bits.put(v) {
            self.count += 1;
        }
    }

    fn union_with(&mut self, other: &InformedSet) {
        self.bits.union_with(&other.bits);
        self.count = self.bits.count_ones(..);
    }
}

#[inline]
fn pick<R: Rng + ?Sized>(nbrs: &[u32], rng: &mut R) -> usize {
    nbrs[rng.random_range(0..nbrs.len())] as usize
}

/// Every informed vertex informs one uniformly chosen neighbor.
pub fn push_round<R: Rng + ?Sized>(snapshot: &GraphSnapshot, informed: &InformedSet, rng: &mut R) -> InformedSet {
    let mut next = informed.clone();
    for v in informed.iter() {
        let nbrs = snapshot.adj(v);
        if !nbrs.is_empty() {
            next.insert(pick(nbrs, rng));
        }
    }
    next
}

/// Every uninformed vertex asks one uniformly chosen neighbor.
pub fn pull_round<R: Rng + ?Sized>(snapshot: &GraphSnapshot, informed: &InformedSet, rng: &mut R) -> InformedSet {
    let mut next = informed.clone();
    for v in informed.bits.zeroes() {
        let nbrs = snapshot.adj(v);
        if !nbrs.is_empty() && informed.contains(pick(nbrs, rng)) {
            next.insert(v);
        }
    }
    next
}

/// Union of a push round and a pull round on the same start set. The push
/// half consumes the generator exactly like [`push_round`].
pub fn push_pull_round<R: Rng + ?Sized>(
    snapshot: &GraphSnapshot,
    informed: &InformedSet,
    rng: &mut R,
) -> InformedSet {
    let mut next = push_round(snapshot, informed, rng);
    next.union_with(&pull_round(snapshot, informed, rng));
    next
}

/// Informed vertices inform all their neighbors.
pub fn flood_round(snapshot: &GraphSnapshot, informed: &InformedSet) -> InformedSet {
    let mut next = informed.clone();
    for v in informed.iter() {
        for &u in snapshot.adj(v) {
            next.insert(u as usize);
        }
    }
    next
}

pub fn apply_round<R: Rng + ?Sized>(
    protocol: Protocol,
    snapshot: &GraphSnapshot,
    informed: &InformedSet,
    rng: &mut R,
) -> InformedSet {
    match protocol {
        Protocol::Push => push_round(snapshot, informed, rng),
        Protocol::Pull => pull_round(snapshot, informed, rng),
        Protocol::PushPull => push_pull_round(snapshot, informed, rng),
        Protocol::Flood => flood_round(snapshot, informed),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Completion {
    Completed(u32),
    /// Not complete after this many rounds.
    Censored(u32),
}

impl Completion {
    /// Rounds to completion, or the cap when censored.
    pub fn rounds_or_cap(&self) -> u32 {
        match *self {
            Completion::Completed(r) | Completion::Censored(r) => r,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, Completion::Censored(_))
    }

    /// Order with censored runs above every completed run.
    pub fn le(&self, other: &Completion) -> bool {
        match (self, other) {
            (Completion::Completed(a), Completion::Completed(b)) => a <= b,
            (Completion::Completed(_), Completion::Censored(_)) => true,
            (Completion::Censored(_), Completion::Completed(_)) => false,
            (Completion::Censored(_), Completion::Censored(_)) => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub completion: Completion,
    /// Informed count before round 1, then after each round.
    pub informed_trajectory: Vec<u32>,
    pub protocol: Protocol,
    pub seed: u64,
}

/// A sequence of graphs, one per round.
pub trait RoundGraphs {
    fn n(&self) -> usize;
    fn seed(&self) -> u64;
    fn next_graph(&mut self) -> &GraphSnapshot;
}

impl RoundGraphs for DynamicGraphState {
    fn n(&self) -> usize {
        DynamicGraphState::n(self)
    }

    fn seed(&self) -> u64 {
        DynamicGraphState::seed(self)
    }

    fn next_graph(&mut self) -> &GraphSnapshot {
        self.advance()
    }
}

/// The same graph every round.
#[derive(Clone, Debug)]
pub struct StaticGraph(pub GraphSnapshot);

impl RoundGraphs for StaticGraph {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn seed(&self) -> u64 {
        0
    }

    fn next_graph(&mut self) -> &GraphSnapshot {
        &self.0
    }
}

/// Run `protocol` from `source` until everyone is informed or `cap` rounds
/// have elapsed. Each round first advances the graph, then spreads on the
/// fresh snapshot.
pub fn run<G, R>(graphs: &mut G, protocol: Protocol, source: usize, cap: u32, rng: &mut R) -> Result<RunResult>
where
    G: RoundGraphs + ?Sized,
    R: Rng + ?Sized,
{
    run_with(graphs, protocol, source, cap, rng, |_, _, _| {})
}

/// As [`run`], calling `observe(round, before, after)` after every round.
pub fn run_with<G, R, F>(
    graphs: &mut G,
    protocol: Protocol,
    source: usize,
    cap: u32,
    rng: &mut R,
    mut observe: F,
) -> Result<RunResult>
where
    G: RoundGraphs + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(u32, &InformedSet, &InformedSet),
{
    let n = graphs.n();
    if source >= n {
        return Err(Error::InvalidArgument(format!("source {source} out of range for n = {n}")));
    }
    if cap < 1 {
        return Err(Error::InvalidArgument("cap must be at least 1".into()));
    }
    let mut informed = InformedSet::single(n, source);
    let mut trajectory = vec![1u32];
    let mut rounds = 0u32;
    while !informed.is_complete() && rounds < cap {
        let g = graphs.next_graph();
        let next = apply_round(protocol, g, &informed, rng);
        rounds += 1;
        observe(rounds, &informed, &next);
        informed = next;
        trajectory.push(informed.count() as u32);
    }
    let completion = if informed.is_complete() {
        Completion::Completed(rounds)
    } else {
        Completion::Censored(rounds)
    };
    Ok(RunResult { completion, informed_trajectory: trajectory, protocol, seed: graphs.seed() })
}
