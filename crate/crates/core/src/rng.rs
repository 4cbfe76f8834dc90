//! Deterministic random streams keyed by `(root_seed, replicate_id, purpose_tag)`.
//!
//! The root seed is expanded into a ChaCha key; the `(replicate, purpose)` pair
//! selects one of the 2^64 independent ChaCha streams under that key.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Purpose tags used by the samplers when forking substreams.
pub mod purpose {
    pub const PRIOR: u32 = 1;
    pub const RESAMPLE: u32 = 2;
    pub const SWEEP: u32 = 3;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    root_seed: u64,
    replicate_id: u32,
    purpose_tag: u32,
    inner: ChaCha12Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the stream for a `(root_seed, replicate_id, purpose_tag)` triple.
pub fn make_stream(root_seed: u64, replicate_id: u32, purpose_tag: u32) -> RngStream {
    let mut state = root_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut inner = ChaCha12Rng::from_seed(key);
    inner.set_stream(((replicate_id as u64) << 32) | purpose_tag as u64);
    RngStream {
        root_seed,
        replicate_id,
        purpose_tag,
        inner,
    }
}

impl RngStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn replicate_id(&self) -> u32 {
        self.replicate_id
    }

    pub fn purpose_tag(&self) -> u32 {
        self.purpose_tag
    }

    /// Draws a fresh key from this stream and returns the sub-stream
    /// `(key, index, tag)`. Consumes exactly one `u64` from `self`.
    pub fn fork(&mut self, index: u32, tag: u32) -> RngStream {
        let key = self.inner.next_u64();
        make_stream(key, index, tag)
    }

    /// Key that determines a family of substreams, see [`RngStream::substream`].
    pub fn draw_key(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn substream(key: u64, index: u32, tag: u32) -> RngStream {
        make_stream(key, index, tag)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
