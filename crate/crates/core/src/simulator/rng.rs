//! Counter-style keyed streams: every random quantity is addressed by
//! `(seed, replica, tag)` plus a stream number, so values never depend on
//! traversal order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic_rem::Objective;
use crate::rates::DrivingDistribution;

/// Leaves (and table entries) handled per work unit.
pub const CHUNK: u64 = 1 << 14;

pub(crate) const TAG_LEVEL: u64 = 0x0100;
pub(crate) const TAG_SUBSET: u64 = 0x0200;
pub(crate) const TAG_WORD: u64 = 0x0400;
pub(crate) const TAG_TREE: u64 = 0x0800;
pub(crate) const TAG_DIE: u64 = 0x0900;
pub(crate) const TAG_SAMPLE: u64 = 0x0a00;
pub(crate) const TAG_LDP: u64 = 0x0b00;
pub(crate) const TAG_CHECK: u64 = 0x0c00;
pub(crate) const TAG_BLOCK: u64 = 1 << 32;
const NODE_FLAG: u64 = 1 << 63;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub replica: u64,
    pub tag: u64,
}

impl StreamKey {
    pub fn new(seed: u64, replica: u64, tag: u64) -> Self {
        StreamKey { seed, replica, tag }
    }

    pub fn with_tag(self, tag: u64) -> Self {
        StreamKey { tag, ..self }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut state = self.seed;
        for x in [self.replica, self.tag] {
            state ^= splitmix(&mut state) ^ x;
            splitmix(&mut state);
        }
        let mut bytes = [0u8; 32];
        for part in bytes.chunks_mut(8) {
            part.copy_from_slice(&splitmix(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(stream);
        rng
    }
}

/// A node-variable law together with the map applied to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub dist: DrivingDistribution,
    pub objective: Objective,
}

impl Source {
    pub fn plain(dist: DrivingDistribution) -> Self {
        Source { dist, objective: Objective::Identity }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let raw = self.dist.sample_node(rng);
        match self.objective {
            Objective::Identity => raw,
            f => {
                let n = self.dist.n() as f64;
                n * f.apply(raw / n)
            }
        }
    }

    /// Entries `[c * CHUNK, c * CHUNK + len)` of the table addressed by `key`.
    pub fn chunk(&self, key: StreamKey, c: u64, len: usize) -> Vec<f64> {
        let mut rng = key.rng(c);
        (0..len).map(|_| self.draw(&mut rng)).collect()
    }

    pub fn table(&self, key: StreamKey, size: u64) -> Vec<f64> {
        let chunks = size.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let len = (size - c * CHUNK).min(CHUNK) as usize;
                self.chunk(key, c, len)
            })
            .collect()
    }

    /// Entry `idx` of the sparse (sampling-mode) table addressed by `key`.
    pub fn node(&self, key: StreamKey, idx: u64) -> f64 {
        let mut rng = key.with_tag(key.tag | NODE_FLAG).rng(idx);
        self.draw(&mut rng)
    }
}
