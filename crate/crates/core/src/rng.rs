//! Keyed counter-based random streams.
//!
//! Every random variable consumed by the solvers is a pure function of a
//! [`StreamKey`]: the run seed, the particle id, the step index and a draw
//! counter. A particle's draws therefore never depend on how many draws other
//! particles consumed or on the order in which workers visit particles, which
//! makes parallel stepping bitwise reproducible.
//!
//! The generator hashes the key with two rounds of the SplitMix64 output
//! function (Stafford's "Mix13" constants). Particle id `0` is reserved for
//! ensemble-level draws.

use rand::RngCore;
use rand_distr::{Distribution, UnitSphere};

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const PARTICLE_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const STEP_SALT: u64 = 0xaef1_7502_108e_f2d9;
const LANE_SALT: u64 = 0x8bb8_4b93_962e_acc9;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(key: u64, word: u64, salt: u64) -> u64 {
    mix64(key ^ mix64(word.wrapping_mul(salt).wrapping_add(GOLDEN)))
}

/// Derives an independent seed from `seed` and a label. Used to separate the
/// initial-sampling, dynamics and reference streams of one run.
pub fn split_seed(seed: u64, label: u64) -> u64 {
    absorb(mix64(seed.wrapping_add(GOLDEN)), label, LANE_SALT)
}

/// Full coordinates of a single draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub particle_id: u64,
    pub step_index: u64,
    pub draw_counter: u64,
}

impl StreamKey {
    /// The 64 random bits addressed by this key.
    pub fn bits(&self) -> u64 {
        derive_stream(self.seed, self.particle_id, self.step_index).bits_at(self.draw_counter)
    }
}

/// A deterministic stream of 64-bit words addressed by a counter.
///
/// Streams are plain values: cloning one replays it, and [`Stream::fork`]
/// derives a statistically independent child stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    key: u64,
    counter: u64,
}

/// Returns the stream for particle `particle_id` at step `step_index`.
pub fn derive_stream(seed: u64, particle_id: u64, step_index: u64) -> Stream {
    let key = absorb(
        absorb(mix64(seed.wrapping_add(GOLDEN)), particle_id, PARTICLE_SALT),
        step_index,
        STEP_SALT,
    );
    Stream { key, counter: 0 }
}

impl Stream {
    /// Root stream for a seed, identical to `derive_stream(seed, 0, 0)`.
    pub fn from_seed(seed: u64) -> Self {
        derive_stream(seed, 0, 0)
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Moves the draw counter to `counter`. Solvers use this to place each
    /// random variable in a fixed slot regardless of branch outcomes.
    pub fn seek(&mut self, counter: u64) {
        self.counter = counter;
    }

    /// An independent child stream identified by `lane`.
    pub fn fork(&self, lane: u64) -> Stream {
        Stream {
            key: absorb(self.key, lane, LANE_SALT),
            counter: 0,
        }
    }

    #[inline]
    fn bits_at(&self, counter: u64) -> u64 {
        mix64(self.key ^ mix64(counter.wrapping_mul(GOLDEN).wrapping_add(STEP_SALT)))
    }

    #[inline]
    pub fn next_bits(&mut self) -> u64 {
        let out = self.bits_at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_bits() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi]`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.next_f64();
        // lo + u * (hi - lo) can round past hi when hi - lo is not exact.
        (lo + u * (hi - lo)).min(hi)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        (self.next_bits() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_bits()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_bits().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Returns `true` with probability `p`, consuming exactly one uniform draw.
pub fn sample_bernoulli(stream: &mut Stream, p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "Bernoulli probability must lie in [0, 1], got {p}"
        )));
    }
    Ok(stream.next_f64() < p)
}

/// A partner draw: `alpha` uniform on `[0, N)` and the 1-based index
/// `j = floor(alpha) + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partner {
    pub alpha: f64,
    pub j: usize,
}

impl Partner {
    pub fn from_alpha(alpha: f64, n: usize) -> Self {
        let j = (alpha.floor() as usize + 1).min(n);
        Partner { alpha, j }
    }

    /// 0-based storage index of the partner.
    pub fn index(&self) -> usize {
        self.j - 1
    }
}

/// Uniform partner selection among `n` particles. Selecting oneself is allowed.
pub fn sample_partner(stream: &mut Stream, n: usize) -> Partner {
    assert!(n >= 1, "partner selection needs at least one particle");
    let alpha = stream.next_f64() * n as f64;
    Partner::from_alpha(alpha, n)
}

/// Uniform draw on the unit sphere in three dimensions.
pub fn sample_unit_sphere(stream: &mut Stream) -> [f64; 3] {
    UnitSphere.sample(stream)
}
