use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based generator used by every stochastic routine.
pub type SimRng = ChaCha8Rng;

/// Independent stream `index` of the generator keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
