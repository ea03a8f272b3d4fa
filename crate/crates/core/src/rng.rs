//! Reproducible randomness. Every run has one seed; each (iteration, oracle)
//! pair gets its own ChaCha8 stream derived from it, so oracles are
//! independent across iterations and a trace never depends on how many
//! numbers some other oracle consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which oracle a substream feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    IncumbentNoise,
    TrialNoise,
    Gradient,
    Hessian,
    GradientSample,
    HessianSample,
    Other(u64),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::IncumbentNoise => 1,
            Stream::TrialNoise => 2,
            Stream::Gradient => 3,
            Stream::Hessian => 4,
            Stream::GradientSample => 5,
            Stream::HessianSample => 6,
            Stream::Other(t) => 0x100 + t,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `(run_seed, iteration, stream)`. `pass` distinguishes
/// repeated draws inside one iteration (the gradient accuracy loop).
pub fn substream(run_seed: u64, iteration: u64, stream: Stream, pass: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(run_seed),
        splitmix64(run_seed ^ splitmix64(iteration.wrapping_add(0x51))),
        splitmix64(stream.tag().wrapping_mul(0xA24B_AED4_963E_E407) ^ iteration),
        splitmix64(pass ^ splitmix64(stream.tag())),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Generator for auxiliary randomness that is not tied to an iteration
/// (problem instances, starting points, test fixtures).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
