//! Seeded randomness.
//!
//! Every random choice in the toolkit flows from a single root seed. The
//! generator is SplitMix64 (Steele, Lea & Flood), chosen because it is a
//! five-line algorithm that any language can reproduce bit for bit:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! return z ^ (z >> 31)
//! ```
//!
//! Bounded integers use rejection sampling (`below`), and per-purpose
//! streams are derived with [`derive_seed`].

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix(self.state)
    }

    /// Uniform integer in `0..bound`.
    ///
    /// Draws are rejected while they fall below `2^64 mod bound`, so the
    /// accepted range is an exact multiple of `bound` and `x % bound` is
    /// unbiased.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Uniform real in `[0, 1)` built from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// SplitMix64 output finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for one purpose (and optional index) from a
/// root seed.
///
/// `derive_seed(root, tag, index) = mix(mix(root ^ fnv1a64(tag)) ^ mix(index + 1))`
/// where `fnv1a64` is the 64-bit FNV-1a hash of the UTF-8 tag.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    mix(mix(root ^ fnv1a64(tag.as_bytes())) ^ mix(index.wrapping_add(1)))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Selects `n` distinct positions out of `0..len` with a partial
/// Fisher-Yates shuffle driven by `rng`, returned in ascending order.
///
/// Step `i` (for `i` in `0..n`) swaps slot `i` with slot `i + below(len - i)`;
/// the first `n` slots are the selection. When `n >= len` every position is
/// returned.
pub fn select_positions(len: usize, n: usize, rng: &mut SplitMix64) -> Vec<usize> {
    if n >= len {
        return (0..len).collect();
    }
    let mut slots: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let j = i + rng.below((len - i) as u64) as usize;
        slots.swap(i, j);
    }
    slots.truncate(n);
    slots.sort_unstable();
    slots
}
