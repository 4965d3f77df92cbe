//! Replayable random streams.
//!
//! Every trial draws from ChaCha8 keyed by the master seed, with the trial
//! index selecting the stream. ChaCha is a counter-mode generator, so trial
//! `i` produces the same numbers no matter which worker runs it or in what
//! order trials complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name printed by `--version`.
pub const PRNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), key = master seed, stream = trial index";

pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(master_seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}
