//! Seeded, splittable random streams with a fully documented draw sequence.
//!
//! Reproducibility contract: every random quantity in this crate is derived
//! from a ChaCha8 stream keyed by a 64-bit seed, so a (seed, stream) pair
//! pins the exact bit sequence independently of platform or library version.
//!
//! * Key derivation: the 256-bit ChaCha key is the little-endian
//!   concatenation of four successive SplitMix64 outputs seeded with the
//!   64-bit seed.
//! * Sub-streams: ChaCha's 64-bit stream counter (`set_stream`) selects
//!   independent streams for parallel trials without re-keying.
//! * `f64` in `[0, 1)`: top 53 bits of one `u64`, scaled by 2^-53.
//! * Normals: cartesian Box-Muller on two uniforms (the first mapped into
//!   `(0, 1]` to avoid `ln 0`); the pair is consumed in order, with the
//!   second value cached for the next call.
//! * Categorical draws: inverse-CDF lookup by binary search over a
//!   cumulative weight table.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A seeded ChaCha8 stream plus the scalar/vector draw primitives used by
/// the channel generator and the sketch sampler.
#[derive(Clone, Debug)]
pub struct SeedStream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeedStream {
    /// Stream 0 for the given seed.
    pub fn from_seed(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// An independent stream: same key, distinct ChaCha stream counter.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Self { rng, spare_normal: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_NEG_53
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller; generates two values per pair of
    /// uniforms and caches the second.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // Map into (0, 1] so the logarithm stays finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * TWO_NEG_53;
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Circularly-symmetric complex Gaussian with unit total variance:
    /// real and imaginary parts are independent `N(0, 1/2)`.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.standard_normal() * scale, self.standard_normal() * scale)
    }

    /// Draws an index with probability proportional to the weight encoded in
    /// a cumulative table (`cumulative[i]` = sum of weights `0..=i`). The
    /// table need not be normalized. Zero-weight indices are unreachable:
    /// their cumulative entry equals their predecessor's, so the strict
    /// binary-search bound skips them.
    pub fn categorical(&mut self, cumulative: &[f64]) -> usize {
        debug_assert!(!cumulative.is_empty());
        let total = *cumulative.last().unwrap();
        debug_assert!(total > 0.0);
        let target = self.next_f64() * total;
        let idx = cumulative.partition_point(|&c| c <= target);
        // Guard the rounding corner target == total.
        idx.min(cumulative.len() - 1)
    }
}

// ---------------------------------------------------------------------------
