//! Monte Carlo estimate of the law of the normalized sum.

use crate::chain::{sample_paths, AdditiveFunctional, ChainSpec, SampleOptions};
use crate::edgeworth::StepCdf;
use crate::error::{Error, Result};

/// Confidence level used for the DKW band.
pub const DKW_DELTA: f64 = 1e-3;

/// Half-width `sqrt(ln(2/delta) / (2n))` of the DKW confidence band.
pub fn dkw_halfwidth(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical distribution of `(S_N - E S_N) / sigma_N` from seeded paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub cdf: StepCdf,
    pub n_paths: usize,
    pub mean: f64,
    pub sigma: f64,
    pub dkw_halfwidth: f64,
}

/// Samples `n_paths` copies of `S_N` and normalizes them with the exact
/// mean and standard deviation from the transfer engine.
pub fn cdf_estimate(chain: &ChainSpec, f: &AdditiveFunctional, n_paths: usize, seed: u64) -> Result<EmpiricalCdf> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("cdf estimate needs at least one path".into()));
    }
    let moments = super::central_moments(chain, f, 2)?;
    let sigma = moments[2].max(0.0).sqrt();
    if sigma < 1e-8 {
        return Err(Error::DegenerateVariance { sigma });
    }
    let set = sample_paths(
        chain,
        f,
        SampleOptions {
            n_paths,
            seed,
            centered: true,
        },
    )?;
    let mean = set.subtracted_mean.unwrap_or(0.0);
    let mut z: Vec<f64> = set.sums.into_iter().map(|s| s / sigma).collect();
    z.sort_unstable_by(f64::total_cmp);
    Ok(EmpiricalCdf {
        cdf: StepCdf::from_sorted_samples(z),
        n_paths,
        mean,
        sigma,
        dkw_halfwidth: dkw_halfwidth(n_paths, DKW_DELTA),
    })
}
