//! Seeded, reproducible random streams.
//!
//! A [`RandomStream`] is a `(seed, stream)` pair mapped onto a ChaCha8
//! generator: the seed is expanded by `seed_from_u64` and the stream index is
//! ChaCha's native stream selector, so every pair yields an independent,
//! platform-stable sequence.
//!
//! Monte-Carlo loops draw item `j` (one accepted sample, say) from stream
//! `stream + j`. Item `j` therefore sees the same randomness however the items
//! are split among workers, and two runs with equal seeds on nearby inputs
//! stay paired sample by sample. Independent phases of one computation get
//! distinct seeds through [`RandomStream::derive`], a splitmix64 mix of the
//! seed and a tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        RandomStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// The stream used for item `j`.
    pub fn item(&self, j: u64) -> RandomStream {
        RandomStream { seed: self.seed, stream: self.stream.wrapping_add(j) }
    }

    /// A stream for an independent phase, keyed by `tag`.
    pub fn derive(&self, tag: u64) -> RandomStream {
        let mixed = splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        RandomStream { seed: mixed, stream: self.stream }
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Items per accumulator in [`run_items`].
pub const BLOCK_ITEMS: u64 = 1 << 14;

/// Runs `item(acc, rng, j)` for `j in 0..total`, with `rng` positioned at the
/// start of [`RandomStream::item`]`(j)`. Items are grouped into consecutive
/// blocks of [`BLOCK_ITEMS`], one accumulator per block, returned in block
/// order (at least one). Blocks run on `workers` threads. Because the blocks
/// do not depend on `workers`, reductions over the result in order are
/// bit-identical for every worker count. The first error is returned.
pub fn run_items<A, E, F>(stream: RandomStream, total: u64, workers: usize, item: F) -> Result<Vec<A>, E>
where
    A: Default + Send,
    E: Send,
    F: Fn(&mut A, &mut ChaCha8Rng, u64) -> Result<(), E> + Sync,
{
    let blocks = total.div_ceil(BLOCK_ITEMS).max(1);
    let base = ChaCha8Rng::seed_from_u64(stream.seed);
    let job = |b: u64| -> Result<A, E> {
        let mut acc = A::default();
        for j in b * BLOCK_ITEMS..total.min((b + 1) * BLOCK_ITEMS) {
            let mut rng = base.clone();
            rng.set_stream(stream.stream.wrapping_add(j));
            item(&mut acc, &mut rng, j)?;
        }
        Ok(acc)
    };
    if workers > 1 && blocks > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| (0..blocks).into_par_iter().map(job).collect());
        }
    }
    (0..blocks).map(job).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_pair_same_sequence() {
        let a: Vec<u64> = (0..8).map(|_| 0).scan(RandomStream::with_stream(7, 3).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(RandomStream::with_stream(7, 3).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        let c: u64 = RandomStream::with_stream(7, 4).rng().random();
        assert_ne!(a[0], c);
        assert_ne!(RandomStream::new(1).derive(1), RandomStream::new(1).derive(2));
    }

    #[test]
    fn blocks_cover_items() {
        let parts: Vec<Vec<u64>> = run_items(RandomStream::new(0), 2 * BLOCK_ITEMS + 5, 3, |acc: &mut Vec<u64>, _, j| {
            acc.push(j);
            Ok::<_, ()>(())
        })
        .unwrap();
        assert_eq!(parts.iter().map(Vec::len).collect::<Vec<_>>(), vec![BLOCK_ITEMS as usize, BLOCK_ITEMS as usize, 5]);
        assert_eq!(parts.concat(), (0..2 * BLOCK_ITEMS + 5).collect::<Vec<_>>());
        let empty: Vec<u64> = run_items(RandomStream::new(0), 0, 4, |acc: &mut u64, _, _| {
            *acc += 1;
            Ok::<_, ()>(())
        })
        .unwrap();
        assert_eq!(empty, vec![0]);
    }

    #[test]
    fn float_sums_independent_of_workers() {
        let sum = |workers| -> f64 {
            let parts: Vec<f64> = run_items(RandomStream::new(5), 100_000, workers, |acc: &mut f64, rng, _| {
                *acc += rng.random::<f64>().ln();
                Ok::<_, ()>(())
            })
            .unwrap();
            parts.iter().sum()
        };
        assert_eq!(sum(1).to_bits(), sum(4).to_bits());
        assert_eq!(sum(1).to_bits(), sum(3).to_bits());
    }

    #[test]
    fn items_independent_of_split() {
        let s = RandomStream::with_stream(9, 2);
        let collect = |workers| -> Vec<u64> {
            let parts: Vec<Vec<u64>> = run_items(s, BLOCK_ITEMS + 1001, workers, |acc: &mut Vec<u64>, rng, _| {
                acc.push(rng.random());
                acc.push(rng.random());
                Ok::<_, ()>(())
            })
            .unwrap();
            parts.concat()
        };
        let one = collect(1);
        assert_eq!(one, collect(4));
        assert_eq!(one, collect(7));
        let mut direct = s.item(500).rng();
        assert_eq!(one[1000], direct.random::<u64>());
        assert_eq!(one[1001], direct.random::<u64>());
        assert_eq!(one.len(), 2 * (BLOCK_ITEMS as usize + 1001));
    }

    #[test]
    fn item_errors_propagate() {
        let r: Result<Vec<()>, u64> = run_items(RandomStream::new(0), 10, 3, |_, _, j| if j == 6 { Err(j) } else { Ok(()) });
        assert_eq!(r, Err(6));
    }
}
