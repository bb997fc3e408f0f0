//! Deterministic keyed random streams.
//!
//! Every stochastic quantity in the simulator comes out of a splitmix64
//! generator seeded from a `(seed, stream, frame, ordinal)` key. Keying each
//! draw site separately means a gating decision that skips one stage can
//! never shift the randomness consumed by another stage, and replaying a
//! frame in isolation reproduces exactly what a full run produced.
//!
//! Nothing here depends on process state, pointer addresses, or the standard
//! library's hash randomization, so results are stable across runs, builds,
//! and platforms with IEEE-754 doubles.

use std::f64::consts::PI;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const F64_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// Independent randomness consumers.
///
/// Each stage draws from its own stream so that enabling or disabling one
/// stage leaves every other stage's draws untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKind {
    /// Detection confidence jitter.
    Detect = 1,
    /// Face embedding perturbation.
    Embed = 2,
    /// Emotion classifier noise.
    Emotion = 3,
    /// Synthetic trace generation.
    TraceGen = 4,
    /// Enrollment embedding synthesis.
    Enroll = 5,
    /// Identity prototype construction.
    Prototype = 6,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64 generator with a cached Box-Muller spare.
#[derive(Debug, Clone)]
pub struct KeyedRng {
    state: u64,
    spare: Option<f64>,
}

impl KeyedRng {
    /// Generator seeded directly, without key derivation.
    pub fn from_seed(seed: u64) -> Self {
        Self { state: mix64(seed), spare: None }
    }

    /// Generator for one draw site.
    ///
    /// The key components are folded through the splitmix64 finalizer one at
    /// a time, so nearby frames and ordinals land in unrelated states.
    pub fn for_key(seed: u64, stream: StreamKind, frame: u64, ordinal: u64) -> Self {
        let mut state = mix64(seed ^ GOLDEN_GAMMA);
        state = mix64(state.wrapping_add(stream as u64));
        state = mix64(state.wrapping_add(frame));
        state = mix64(state.wrapping_add(ordinal));
        Self { state, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * F64_SCALE
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal draw via Box-Muller.
    ///
    /// Transforms produce two normals per uniform pair; the second is cached
    /// and returned by the next call, so a single generator yields an
    /// uninterrupted deterministic sequence.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let mut u1 = self.next_f64();
        while u1 == 0.0 {
            u1 = self.next_f64();
        }
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// FNV-1a 64-bit hash.
///
/// Used wherever a stable content hash is needed (identity keying, trace
/// fingerprints). The standard library hasher is explicitly unstable across
/// releases, so it is never used for anything that lands in a report.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET_BASIS: u64 = 0xCBF2_9CE4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01B3;
    bytes
        .iter()
        .fold(OFFSET_BASIS, |hash, &byte| (hash ^ u64::from(byte)).wrapping_mul(PRIME))
}
