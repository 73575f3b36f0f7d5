//! Seeded Monte Carlo sampling of `S_N`.
//!
//! Paths are generated in fixed-size shards. Shard `s` draws from its own
//! xoshiro256++ stream seeded from `(seed, s)`, and shard outputs are
//! concatenated in shard order, so the samples do not depend on how many
//! worker threads run.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use super::{AdditiveFunctional, ChainSpec};
use crate::error::Result;

/// Paths per shard.
pub const SHARD_PATHS: usize = 1 << 14;

/// Paths advanced together inside a shard.
const BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub n_paths: usize,
    pub seed: u64,
    /// Subtract the exact mean `E S_N` from every sample.
    pub centered: bool,
}

/// Samples of `S_N` in shard order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub sums: Vec<f64>,
    /// The exact mean that was subtracted, if centring was requested.
    pub subtracted_mean: Option<f64>,
}

/// Cumulative thresholds of one stochastic matrix in units of `2^-64`.
struct CutTable {
    cols: usize,
    cuts: Vec<u64>,
}

impl CutTable {
    fn from_rows<'a>(rows: impl Iterator<Item = &'a [f64]>, cols: usize) -> Self {
        let mut cuts = Vec::new();
        for row in rows {
            let mut acc = 0.0;
            for &p in &row[..cols - 1] {
                acc += p;
                cuts.push(to_threshold(acc));
            }
        }
        Self { cols, cuts }
    }

    #[inline(always)]
    fn draw(&self, x: usize, u: u64) -> usize {
        let w = self.cols - 1;
        let row = &self.cuts[x * w..x * w + w];
        if w <= 8 {
            row.iter().map(|&t| (u >= t) as usize).sum()
        } else {
            row.partition_point(|&t| u >= t)
        }
    }
}

fn to_threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else if p <= 0.0 {
        0
    } else {
        (p * 18446744073709551616.0) as u64
    }
}

struct Sampler {
    init: CutTable,
    steps: Vec<CutTable>,
    values: Vec<Vec<f64>>,
}

impl Sampler {
    fn new(chain: &ChainSpec, f: &AdditiveFunctional) -> Self {
        let mu = chain.mu1().to_vec();
        let init = CutTable::from_rows(std::iter::once(mu.as_slice()), mu.len());
        let mut steps = Vec::with_capacity(chain.n_steps());
        let mut values = Vec::with_capacity(chain.n_steps());
        for j in 1..=chain.n_steps() {
            let k = chain.kernel(j).as_standard_layout().into_owned();
            let cols = k.ncols();
            let flat = k.as_slice().expect("standard layout");
            steps.push(CutTable::from_rows(flat.chunks(cols), cols));
            values.push(f.table(j).as_standard_layout().iter().copied().collect());
        }
        Self { init, steps, values }
    }

    fn run_shard(&self, seed: u64, shard: u64, count: usize) -> Vec<f64> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(
            seed ^ shard.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let mut out = Vec::with_capacity(count);
        let mut done = 0;
        while done < count {
            let b = BATCH.min(count - done);
            let mut state = [0usize; BATCH];
            let mut sum = [0.0f64; BATCH];
            for s in state.iter_mut().take(b) {
                *s = self.init.draw(0, rng.next_u64());
            }
            for (table, vals) in self.steps.iter().zip(&self.values) {
                let cols = table.cols;
                for i in 0..b {
                    let x = state[i];
                    let y = table.draw(x, rng.next_u64());
                    sum[i] += vals[x * cols + y];
                    state[i] = y;
                }
            }
            out.extend_from_slice(&sum[..b]);
            done += b;
        }
        out
    }
}

/// Draws `n_paths` independent copies of `S_N`. Deterministic in `seed`.
pub fn sample_paths(chain: &ChainSpec, f: &AdditiveFunctional, opts: SampleOptions) -> Result<SampleSet> {
    f.check_compatible(chain)?;
    let mean = if opts.centered {
        Some(f.step_means(chain)?.iter().sum::<f64>())
    } else {
        None
    };
    if opts.n_paths == 0 {
        return Ok(SampleSet {
            sums: Vec::new(),
            subtracted_mean: mean,
        });
    }
    let sampler = Sampler::new(chain, f);
    let n_shards = opts.n_paths.div_ceil(SHARD_PATHS);
    let shards: Vec<Vec<f64>> = (0..n_shards)
        .into_par_iter()
        .map(|s| {
            let count = SHARD_PATHS.min(opts.n_paths - s * SHARD_PATHS);
            sampler.run_shard(opts.seed, s as u64, count)
        })
        .collect();
    let mut sums: Vec<f64> = shards.into_iter().flatten().collect();
    if let Some(m) = mean {
        sums.iter_mut().for_each(|v| *v -= m);
    }
    Ok(SampleSet {
        sums,
        subtracted_mean: mean,
    })
}

/// Samples the state sequence `X_1..X_{N+1}` of `n_paths` paths, used for
/// checking marginals. Row `i` of the result is path `i`.
pub fn sample_states(chain: &ChainSpec, n_paths: usize, seed: u64) -> Vec<Vec<u32>> {
    let zero = AdditiveFunctional::new(
        chain
            .kernels()
            .iter()
            .map(|k| ndarray::Array2::zeros(k.dim()))
            .collect(),
    )
    .expect("finite");
    let sampler = Sampler::new(chain, &zero);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n_paths)
        .map(|_| {
            let mut x = sampler.init.draw(0, rng.next_u64());
            let mut path = Vec::with_capacity(chain.n_steps() + 1);
            path.push(x as u32);
            for t in &sampler.steps {
                x = t.draw(x, rng.next_u64());
                path.push(x as u32);
            }
            path
        })
        .collect()
}
