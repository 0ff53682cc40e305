//! Analytic and Monte-Carlo toolkit for a timely federated-update protocol.
//!
//! A parameter server trains a model with `n` clients. At each iteration it
//! waits for `m` clients to become available (availability gaps are
//! exponential with rate `lambda`), broadcasts the current model, and
//! aggregates the earliest `k` of the `m` returned local updates (uplink
//! delays are exponential with rate `mu_up`, local computation takes a fixed
//! `c`). The crate provides:
//!
//! - [`order_stats`]: moments of exponential order statistics via harmonic
//!   partial sums, the numeric bedrock of every closed form here.
//! - [`age_model`]: the exact per-client average age of information of the
//!   scheme, its decomposition, and a large-`n` approximation.
//! - [`protocol_sim`]: an event-driven simulator of the protocol and of two
//!   baseline selection schemes, with exact age-area accounting.
//! - [`sweep_opt`]: grid sweeps and argmin search for age-optimal `(m, k)`.
//! - [`fl_bench`]: a synthetic linear-regression federated training harness.
//!
//! All randomness is derived from explicit 64-bit seeds (see [`rng`]); equal
//! seeds give bit-identical results.

pub mod age_model;
pub mod error;
pub mod fl_bench;
pub mod order_stats;
pub mod protocol_sim;
pub mod rng;
pub mod sweep_opt;

pub use error::{Error, Result};
