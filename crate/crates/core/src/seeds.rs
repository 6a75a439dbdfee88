//! Named, reproducible random streams derived from one master seed.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed. The stream
//! selector is `(kind << 32) | index`, where `kind` is the numeric value of
//! [`Stream`] and `index` distinguishes instances of the same kind (e.g. the
//! i-th graph state). Replications get their own master seed: the `r`-th
//! word pair of the stream with selector `u64::MAX`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Kinds of randomness consumed by a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Sbm = 1,
    Path = 2,
    Delays = 3,
    Labels = 4,
    Perturbation = 5,
    Message = 6,
    Oracle = 7,
}

const REPLICATION_SELECTOR: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, kind: Stream) -> StreamRng {
        self.indexed(kind, 0)
    }

    pub fn indexed(&self, kind: Stream, index: u32) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(((kind as u64) << 32) | index as u64);
        rng
    }

    /// Independent tree for replication `r`.
    pub fn replication(&self, r: u64) -> SeedTree {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(REPLICATION_SELECTOR);
        rng.set_word_pos(2 * r as u128);
        SeedTree::new(rng.next_u64())
    }
}
