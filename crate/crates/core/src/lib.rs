//! Randomized rumor spreading on dynamic random graphs.
//!
//! Edges evolve independently as i.i.d. Bernoulli, two-state Markov or
//! stationary renewal processes. On top of the simulator sit exact
//! separation distances for the edge-Markov chain, a refresh coupling that
//! realizes strong stationary times inside a run, a coupling-from-the-past
//! sampler for edge-renewal graphs, and a Monte Carlo harness comparing
//! completion times against i.i.d. baselines.

pub mod dynamic_graph;
pub mod edge_dynamics;
pub mod error;
pub mod harness;
pub mod markov_sst;
pub mod protocols;
pub mod renewal_cftp;
pub mod stats;
pub mod stream;
pub mod validation;

pub use error::{Error, Result};
