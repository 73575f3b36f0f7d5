//! Seeded generic elliptic chains.
//!
//! Kernels mix the uniform law with Dirichlet(1) noise rows:
//! `R = (1 - eta) U + eta D`. The uniform part keeps every density at least
//! `1 - eta`, which bounds both the one-step and two-step ellipticity
//! constants.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::chain::{AdditiveFunctional, ChainSpec, REDUCIBILITY_LABEL};
use crate::error::{Error, Result};

pub const DEFAULT_ETA: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomChainParams {
    /// States per time.
    pub m: usize,
    /// `f_n` is drawn uniformly from `[-k, k]`.
    pub k: f64,
    pub seed: u64,
    pub n_steps: usize,
    /// Scale `f_n` by `n^{-beta}`.
    pub decay_beta: Option<f64>,
    /// Weight of the noise part of each kernel.
    pub eta: f64,
    /// Round `f` to `(1/L) Z`.
    pub lattice: Option<i64>,
}

impl RandomChainParams {
    pub fn new(m: usize, k: f64, seed: u64, n_steps: usize) -> Self {
        Self {
            m,
            k,
            seed,
            n_steps,
            decay_beta: None,
            eta: DEFAULT_ETA,
            lattice: None,
        }
    }

    /// Ellipticity constant guaranteed by the construction:
    /// densities lie in `[1 - eta, 1 - eta + eta m]`.
    pub fn guaranteed_eps0(&self) -> f64 {
        let lo = 1.0 - self.eta;
        let hi = 1.0 - self.eta + self.eta * self.m as f64;
        lo.min(1.0 / hi)
    }
}

fn noise_kernel(m: usize, eta: f64, rng: &mut Xoshiro256PlusPlus) -> Array2<f64> {
    let mut r = Array2::zeros((m, m));
    for mut row in r.rows_mut() {
        let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        for (v, ei) in row.iter_mut().zip(&e) {
            *v = (1.0 - eta) / m as f64 + eta * ei / s;
        }
        // exact row sum for the stochasticity check
        let t = row.sum();
        row.mapv_inplace(|v| v / t);
    }
    r
}

pub fn make_elliptic_random_chain(params: &RandomChainParams) -> Result<(ChainSpec, AdditiveFunctional)> {
    let m = params.m;
    if m < 2 || !(params.k > 0.0) || params.n_steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "random chain needs m >= 2, k > 0, N >= 1 (got m = {m}, k = {}, N = {})",
            params.k, params.n_steps
        )));
    }
    if !(0.0..1.0).contains(&params.eta) {
        return Err(Error::InvalidParameter(format!("eta = {} must lie in [0, 1)", params.eta)));
    }
    if let Some(l) = params.lattice {
        if l <= 0 {
            return Err(Error::InvalidParameter(format!("lattice denominator {l} must be positive")));
        }
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(params.seed);
    let mut kernels = Vec::with_capacity(params.n_steps);
    let mut tables = Vec::with_capacity(params.n_steps);
    for n in 1..=params.n_steps {
        kernels.push(noise_kernel(m, params.eta, &mut rng));
        let scale = params.decay_beta.map_or(1.0, |b| (n as f64).powf(-b));
        tables.push(Array2::from_shape_fn((m, m), |_| scale * params.k * (2.0 * rng.gen::<f64>() - 1.0)));
    }
    let chain = ChainSpec::new(kernels, None, Array1::from_elem(m, 1.0 / m as f64), params.guaranteed_eps0())?;
    let f = match params.lattice {
        Some(l) => {
            let nums = tables.iter().map(|t| t.mapv(|v| (v * l as f64).round() as i64)).collect();
            AdditiveFunctional::from_lattice(l, nums)?
        }
        None => AdditiveFunctional::new(tables)?,
    };
    let f = f
        .with_label(REDUCIBILITY_LABEL, super::IRREDUCIBLE)
        .with_label("generator", "elliptic-random")
        .with_label("seed", &params.seed.to_string());
    Ok((chain, f))
}

/// Chain with a rarely visited state that carries large jumps: a skewed,
/// non-lattice functional whose third cumulant stays of order `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RareJumpParams {
    pub m: usize,
    pub seed: u64,
    pub n_steps: usize,
    /// Probability of entering state 0 from any state.
    pub rare_prob: f64,
    /// `f(x, 0)` is drawn uniformly from this interval.
    pub jump: (f64, f64),
    /// `f(x, y)`, `y != 0`, is drawn uniformly from `[-noise, noise]`.
    pub noise: f64,
}

impl RareJumpParams {
    pub fn new(m: usize, seed: u64, n_steps: usize) -> Self {
        Self {
            m,
            seed,
            n_steps,
            rare_prob: 1e-3,
            jump: (8.0, 12.0),
            noise: 0.1,
        }
    }
}

pub fn make_rare_jump_chain(params: &RareJumpParams) -> Result<(ChainSpec, AdditiveFunctional)> {
    let m = params.m;
    let p = params.rare_prob;
    if m < 2 || !(p > 0.0 && p < 1.0) || params.n_steps == 0 || !(params.jump.0 <= params.jump.1) {
        return Err(Error::InvalidParameter(format!(
            "rare-jump chain needs m >= 2, 0 < rare_prob < 1, N >= 1 and an ordered jump interval (got m = {m}, rare_prob = {p})"
        )));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(params.seed);
    let mut kernels = Vec::with_capacity(params.n_steps);
    let mut tables = Vec::with_capacity(params.n_steps);
    for _ in 0..params.n_steps {
        let bulk = noise_kernel(m - 1, DEFAULT_ETA, &mut rng);
        let mut r = Array2::zeros((m, m));
        for x in 0..m {
            r[[x, 0]] = p;
            let src = if x == 0 { 0 } else { x - 1 };
            for y in 1..m {
                r[[x, y]] = (1.0 - p) * bulk[[src, y - 1]];
            }
            let t = r.row(x).sum();
            r.row_mut(x).mapv_inplace(|v| v / t);
        }
        kernels.push(r);
        let (lo, hi) = params.jump;
        tables.push(Array2::from_shape_fn((m, m), |(_, y)| {
            if y == 0 {
                lo + (hi - lo) * rng.gen::<f64>()
            } else {
                params.noise * (2.0 * rng.gen::<f64>() - 1.0)
            }
        }));
    }
    let chain = ChainSpec::new(kernels, None, Array1::from_elem(m, 1.0 / m as f64), 1.0)?;
    let rep = chain.validate_ellipticity()?;
    let chain = chain.with_eps0(rep.eps_two_step.min(1.0 / rep.eps_upper))?;
    let f = AdditiveFunctional::new(tables)?
        .with_label(REDUCIBILITY_LABEL, super::IRREDUCIBLE)
        .with_label("generator", "rare-jump")
        .with_label("seed", &params.seed.to_string());
    Ok((chain, f))
}
