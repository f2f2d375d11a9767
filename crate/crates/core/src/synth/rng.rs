//! Reproducible random streams for fragment selection.
//!
//! Every output gets its own stream so results do not depend on execution
//! order. The recipe is fixed and must not change between releases:
//!
//! 1. `h = FNV-1a-64(seed as 8 LE bytes ‖ utt_id UTF-8 ‖ 0x00 ‖ variant as 4 LE bytes)`
//! 2. two SplitMix64 steps from `h` give the high and low halves of a 128-bit
//!    state for PCG-64 (XSL-RR 128/64, `rand_pcg::Pcg64`) on its default stream
//! 3. `below(n)` maps 64-bit outputs to `0..n` with Lemire's multiply-and-reject

use rand_core::Rng;
use rand_pcg::Pcg64;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const PCG_DEFAULT_STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream for output `variant` of utterance `utt_id`.
pub fn stream_seed(job_seed: u64, utt_id: &str, variant: u32) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &job_seed.to_le_bytes());
    h = fnv1a(h, utt_id.as_bytes());
    h = fnv1a(h, &[0]);
    fnv1a(h, &variant.to_le_bytes())
}

#[derive(Debug, Clone)]
pub struct SelectionRng(Pcg64);

impl SelectionRng {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let hi = splitmix64(&mut sm);
        let lo = splitmix64(&mut sm);
        Self(Pcg64::new((u128::from(hi) << 64) | u128::from(lo), PCG_DEFAULT_STREAM))
    }

    pub fn for_output(job_seed: u64, utt_id: &str, variant: u32) -> Self {
        Self::from_seed(stream_seed(job_seed, utt_id, variant))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform draw from `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "cannot draw from an empty range");
        let n = n as u64;
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
            }
        }
        (m >> 64) as usize
    }
}
