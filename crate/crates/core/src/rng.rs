//! Deterministic random-number streams.
//!
//! Reproducibility across platforms and across worker counts is a repo
//! guarantee, so the generator is implemented here rather than pulled from a
//! crate whose bit stream may change between versions. The generator is
//! xoshiro256++ seeded through SplitMix64; independent streams are derived
//! from a root seed plus a list of integer tags (sample size, replication
//! index, purpose), so a replication always sees the same draws no matter
//! which thread runs it.

/// A deterministic stream of pseudo-random numbers.
#[derive(Debug, Clone)]
pub struct RngStream {
    s: [u64; 4],
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    /// Stream seeded directly from a 64-bit seed.
    pub fn seed_from(seed: u64) -> Self {
        Self::derive(seed, &[])
    }

    /// Independent stream identified by `(seed, tags...)`.
    ///
    /// Distinct tag lists yield statistically independent streams; the same
    /// tag list always yields the same stream.
    pub fn derive(seed: u64, tags: &[u64]) -> Self {
        let mut state = seed ^ 0x6a09_e667_f3bc_c908;
        let mut acc = splitmix64(&mut state);
        for &t in tags {
            state ^= t.wrapping_mul(0x9e37_79b9_7f4a_7c15);
            acc ^= splitmix64(&mut state);
        }
        let mut init = acc;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut init);
        }
        // xoshiro must not start from the all-zero state
        if s == [0, 0, 0, 0] {
            s[0] = 0x853c_49e6_748f_ea9b;
        }
        RngStream { s }
    }

    /// Next raw 64-bit output (xoshiro256++).
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in the open interval `(0, 1)`.
    ///
    /// Both endpoints are excluded so samples always lie strictly inside the
    /// cube, as density evaluation requires.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Lemire-style rejection keeps the draw exactly uniform.
        let mut x = self.next_u64();
        let mut m = (x as u128) * (n as u128);
        let mut lo = m as u64;
        if lo < n {
            let t = n.wrapping_neg() % n;
            while lo < t {
                x = self.next_u64();
                m = (x as u128) * (n as u128);
                lo = m as u64;
            }
        }
        (m >> 64) as u64
    }
}
