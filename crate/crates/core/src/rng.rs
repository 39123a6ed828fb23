//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by a 64-bit
//! seed and a stream id that names its purpose, so draws for different
//! purposes never overlap and parallel trials stay reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids. Keeping them distinct means that, for example, the
/// measurement vectors and the initial guess of one trial are independent
/// even when both are keyed by the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Measurement = 1,
    Mask = 2,
    Signal = 3,
    Init = 4,
    Noise = 5,
    Power = 6,
    Probe = 7,
}

/// SplitMix64 finalizer, used to turn structured seeds into well mixed keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `tag` (a trial index, grid index, channel...) under `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag.wrapping_add(0x6A09_E667_F3BC_C909)))
}

/// Generator for `purpose` under `seed`.
pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
