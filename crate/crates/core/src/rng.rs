//! Counter-addressed Gaussian and uniform draws.
//!
//! Every draw is a pure function of `(seed, stream, block, index)`: a block is
//! positioned directly inside a ChaCha8 keystream, so fields can be filled
//! block-by-block in any order (or in parallel) and still produce the same
//! numbers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded source of reproducible noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    seed: u64,
}

const WORDS_PER_U64: u128 = 2;

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn positioned(&self, stream: u64, word: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng.set_word_pos(word);
        rng
    }

    /// Fills `out` with standard normal draws for block `block` of `stream`.
    /// Blocks of the same length never overlap.
    pub fn gaussian_block(&self, stream: u64, block: u64, out: &mut [f64]) {
        let pairs = out.len().div_ceil(2) as u128;
        let stride = pairs * 2 * WORDS_PER_U64;
        let mut rng = self.positioned(stream, block as u128 * stride);
        for chunk in out.chunks_mut(2) {
            let (a, b) = box_muller(&mut rng);
            chunk[0] = a;
            if let Some(slot) = chunk.get_mut(1) {
                *slot = b;
            }
        }
    }

    /// `blocks * block_len` standard normals, block-major.
    pub fn gaussian_field(&self, stream: u64, blocks: usize, block_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; blocks * block_len];
        if block_len > 0 {
            for (b, chunk) in out.chunks_mut(block_len).enumerate() {
                self.gaussian_block(stream, b as u64, chunk);
            }
        }
        out
    }

    /// Uniform draws in `[0, 1)` for block `block` of `stream`.
    pub fn uniform_block(&self, stream: u64, block: u64, out: &mut [f64]) {
        let stride = out.len() as u128 * WORDS_PER_U64;
        let mut rng = self.positioned(stream, block as u128 * stride);
        for slot in out.iter_mut() {
            *slot = unit_open_right(rng.next_u64());
        }
    }

    pub fn uniform_field(&self, stream: u64, blocks: usize, block_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; blocks * block_len];
        if block_len > 0 {
            for (b, chunk) in out.chunks_mut(block_len).enumerate() {
                self.uniform_block(stream, b as u64, chunk);
            }
        }
        out
    }
}

/// `[0, 1)` with 53 bits of precision.
fn unit_open_right(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exactly two `u64` per pair, which keeps block positions computable.
fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // (0, 1] so the log is finite.
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = unit_open_right(rng.next_u64());
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}
