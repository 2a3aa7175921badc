//! Seeded, path-derived random streams.
//!
//! Every random draw in the toolkit comes from a stream derived from a
//! master seed and a path of context labels (test, topic, claim, condition).
//! Derivation hashes the path, so streams for distinct paths are independent
//! and a fixed `(master_seed, path)` always reproduces the same bytes —
//! regardless of evaluation order or worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const DERIVE_TAG: &[u8] = b"opinion-qc/stream/v1";

/// Stream id reserved for the root stream of a path; replicate substreams
/// use their index directly and must stay below this.
const ROOT_STREAM: u64 = u64::MAX;

/// A deterministic random stream bound to a `(master_seed, path)` pair.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: [u8; 32],
    rng: ChaCha8Rng,
}

/// Derive the stream for `(master_seed, path)`.
pub fn derive_rng(master_seed: u64, path: &[&str]) -> RngStream {
    let mut hasher = Sha256::new();
    hasher.update(DERIVE_TAG);
    hasher.update(master_seed.to_le_bytes());
    for label in path {
        // Length-prefixed so ["ab","c"] and ["a","bc"] hash differently.
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let seed: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(ROOT_STREAM);
    RngStream { seed, rng }
}

impl RngStream {
    /// Sibling stream for a replicate index, cheap enough to call inside
    /// bootstrap loops. Substreams of the same parent never overlap each
    /// other or the parent.
    pub fn substream(&self, index: u64) -> RngStream {
        assert!(index < ROOT_STREAM, "replicate index out of range");
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(index);
        RngStream {
            seed: self.seed,
            rng,
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}
