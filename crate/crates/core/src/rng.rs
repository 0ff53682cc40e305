//! Deterministic random-number streams.
//!
//! Every stochastic component draws from a substream derived from a master
//! seed by the splitting rule `(seed, stream) -> ChaCha12 seeded with `seed`
//! and stream counter `stream``. Substreams with distinct stream ids are
//! statistically independent, and a given `(seed, stream)` pair always yields
//! the same sequence regardless of how many other substreams were used or in
//! which order, so parallel or reordered execution stays reproducible.
//!
//! Stream-id conventions used across the crate:
//!
//! - `protocol_sim::simulate`: the scheme index ([`SchemeKind::stream_id`]),
//!   so the three schemes of a comparison run on independent streams of the
//!   same master seed.
//! - `sweep_opt` simulated objective: `m * 2^32 + k` per grid point.
//! - `fl_bench::train`: the repeat index, one stream per repeat.
//!
//! [`SchemeKind::stream_id`]: crate::protocol_sim::SchemeKind::stream_id

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Derives the substream identified by `stream` from `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
