use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based generator with per-trial substreams: `(seed, trial)`
/// always yields the same stream no matter how trials are scheduled,
/// so parallel sweeps are reproducible and paired experiments can use
/// common random numbers.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
