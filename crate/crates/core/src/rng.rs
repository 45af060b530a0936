//! Counter-based standard normal draws.
//!
//! Every draw is addressed by `(seed, domain, stream, counter)`. The ChaCha
//! key holds `seed` and `domain`, the ChaCha stream id is `stream` and the
//! counter selects a fixed 4-word slot in the keystream, so any entry can be
//! regenerated independently of the others.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random domains; distinct domains never share keystream.
pub mod domain {
    pub const POOL: u64 = 0x706f_6f6c;
    pub const PATH: u64 = 0x7061_7468;
    pub const XI: u64 = 0x7869;
    pub const MU: u64 = 0x6d75;
    pub const STEP: u64 = 0x7374_6570;
}

const WORDS_PER_DRAW: u128 = 4;

/// Sequential view of one `(seed, domain, stream)` row.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, domain: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&domain.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Positions the stream so that the next draw is entry `counter`.
    pub fn seek(&mut self, counter: u64) {
        self.rng.set_word_pos(counter as u128 * WORDS_PER_DRAW);
    }

    /// Box–Muller (cosine branch); consumes exactly two `u64`.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = unit_open_closed(self.rng.next_u64());
        let u2 = unit_open_closed(self.rng.next_u64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }
}

/// Uniform in (0, 1].
fn unit_open_closed(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Single keyed draw.
pub fn keyed_normal(seed: u64, domain: u64, stream: u64, counter: u64) -> f64 {
    let mut s = NormalStream::new(seed, domain, stream);
    s.seek(counter);
    s.next_normal()
}

/// Derives a child seed, e.g. per Monte Carlo path or per time step.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed ^ tag.rotate_left(17) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for _ in 0..2 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}
