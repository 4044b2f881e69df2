//! Seeded uniform draws for the stochastic generators.
//!
//! Every draw comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`. Point `i` consumes exactly one `u64`, at word
//! position `2i` of the keystream, converted to `[0,1)` with 53 random
//! mantissa bits. Because ChaCha is a counter-mode cipher the draws can be
//! produced in parallel chunks and still match the sequential stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Recorded in provenance so outputs can be reproduced elsewhere.
pub const RNG_NAME: &str = "ChaCha8Rng/rand_chacha-0.9/seed_from_u64/u64-per-point";

const CHUNK: usize = 1 << 14;

/// The first `n` uniform `[0,1)` draws of the stream for `seed`.
pub fn uniform_draws(seed: u64, n: usize) -> Vec<f64> {
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = base.clone();
        rng.set_word_pos(2 * (c * CHUNK) as u128);
        for v in chunk.iter_mut() {
            *v = rng.random::<f64>();
        }
    });
    out
}
