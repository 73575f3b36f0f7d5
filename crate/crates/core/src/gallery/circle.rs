//! Discretized circle chains with Hölder functionals.
//!
//! The circle `R/Z` is cut into `m_disc` cells. Kernels are smooth
//! trigonometric perturbations of the uniform law, so the densities stay
//! within `[0.5, 2]`. The functional at step `n` is a rotated copy of an
//! even "tent" Cantor profile: the Cantor-type function of exponent
//! `alpha` reflected about the middle of the circle, so it closes up
//! continuously. Each profile is scaled to grid Hölder norm
//! `max(sup |f|, [f]_alpha) = 1`, with distances measured along the circle.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use super::cantor::{cantor_grid_numerators, CantorParams};
use crate::chain::{AdditiveFunctional, ChainSpec, REDUCIBILITY_LABEL};
use crate::error::{Error, Result};

/// Density bounds enforced on every kernel.
pub const DENSITY_MIN: f64 = 0.5;
pub const DENSITY_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleParams {
    pub m_disc: usize,
    pub alpha: f64,
    pub seed: u64,
    pub n_steps: usize,
    /// Sup of the kernel density perturbation, before clipping.
    pub perturbation: f64,
    /// Multiplier on the normalized profile; 0 gives `f = 0`.
    pub amplitude: f64,
}

impl CircleParams {
    pub fn new(m_disc: usize, alpha: f64, seed: u64, n_steps: usize) -> Self {
        Self {
            m_disc,
            alpha,
            seed,
            n_steps,
            perturbation: 0.25,
            amplitude: 1.0,
        }
    }
}

/// Cantor parameters `(p, k)` whose exponent matches `alpha` to 1e-9.
pub fn cantor_params_for_alpha(alpha: f64) -> Option<CantorParams> {
    (3..=64u32)
        .flat_map(|p| (1..=64u32).map(move |k| (p, k)))
        .filter_map(|(p, k)| CantorParams::new(p, k).ok())
        .find(|c| (c.alpha() - alpha).abs() < 1e-9)
}

/// Grid Hölder norm `max(max |g|, max |g_i - g_j| / d(i, j)^alpha)` on the
/// circle with `d` the arc distance between cell left endpoints.
pub fn circle_holder_norm(values: &[f64], alpha: f64) -> f64 {
    let m = values.len();
    let sup = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut semi = 0.0_f64;
    for i in 0..m {
        for j in i + 1..m {
            let gap = (j - i).min(m - (j - i)) as f64 / m as f64;
            semi = semi.max((values[i] - values[j]).abs() / gap.powf(alpha));
        }
    }
    sup.max(semi)
}

fn tent_profile(params: &CantorParams, m_disc: usize) -> Result<Vec<f64>> {
    let depth = params.depth_for_cells(m_disc).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "m_disc = {m_disc} is not twice a power of the base {}",
            params.base()
        ))
    })?;
    let grid = cantor_grid_numerators(params, depth)?;
    let scale = (params.p as f64).powi(depth as i32);
    let half = m_disc / 2;
    Ok((0..m_disc)
        .map(|i| {
            let g = if i >= half { grid[i - half] } else { grid[half - 1 - i] };
            g as f64 / scale
        })
        .collect())
}

fn smooth_kernel(m: usize, perturbation: f64, rng: &mut Xoshiro256PlusPlus) -> Result<Array2<f64>> {
    let w = perturbation / 3.0;
    let a1 = w * rng.gen::<f64>();
    let a2 = w * rng.gen::<f64>();
    let b = w * rng.gen::<f64>();
    let phases: [f64; 4] = std::array::from_fn(|_| TAU * rng.gen::<f64>());
    let mf = m as f64;
    let mut r = Array2::from_shape_fn((m, m), |(x, y)| {
        let d = (y as f64 - x as f64) / mf;
        let dens = 1.0
            + a1 * (TAU * d - phases[0]).cos()
            + a2 * (2.0 * TAU * d - phases[1]).cos()
            + b * (TAU * x as f64 / mf - phases[2]).cos() * (TAU * y as f64 / mf - phases[3]).cos();
        dens.clamp(DENSITY_MIN, DENSITY_MAX) / mf
    });
    for mut row in r.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v * mf), hi.max(v * mf)));
    if lo < DENSITY_MIN || hi > DENSITY_MAX {
        return Err(Error::InvalidParameter(format!(
            "kernel density range [{lo}, {hi}] left [{DENSITY_MIN}, {DENSITY_MAX}]"
        )));
    }
    Ok(r)
}

/// Circle chain with `f_n(x, .) = amplitude * g(x + s_n) / ||g||_alpha`
/// for seeded shifts `s_n`. `alpha` must be a Cantor exponent
/// `ln p / ln(p + (p-1)k)` and `m_disc` twice a power of `p + (p-1)k`.
pub fn make_circle_holder_chain(params: &CircleParams) -> Result<(ChainSpec, AdditiveFunctional)> {
    let m = params.m_disc;
    if m < 16 {
        return Err(Error::InvalidParameter(format!("m_disc = {m} must be at least 16")));
    }
    if !(0.0..=1.0).contains(&params.perturbation) || !params.amplitude.is_finite() {
        return Err(Error::InvalidParameter("perturbation must lie in [0, 1]".into()));
    }
    let cantor = cantor_params_for_alpha(params.alpha).ok_or_else(|| {
        Error::InvalidParameter(format!("alpha = {} is not a Cantor exponent ln p / ln(p + q)", params.alpha))
    })?;
    let profile = tent_profile(&cantor, m)?;
    let norm = circle_holder_norm(&profile, params.alpha);
    let profile: Vec<f64> = profile.iter().map(|g| g / norm).collect();

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(params.seed);
    let mut kernels = Vec::with_capacity(params.n_steps);
    let mut tables = Vec::with_capacity(params.n_steps);
    for _ in 0..params.n_steps {
        kernels.push(smooth_kernel(m, params.perturbation, &mut rng)?);
        let shift = rng.gen_range(0..m);
        let row: Vec<f64> = (0..m).map(|x| params.amplitude * profile[(x + shift) % m]).collect();
        tables.push(Array2::from_shape_fn((m, m), |(x, _)| row[x]));
    }
    let uniform = Array1::from_elem(m, 1.0 / m as f64);
    let chain = ChainSpec::new(kernels, None, uniform, DENSITY_MIN)?;
    let degenerate = params.amplitude == 0.0;
    let f = AdditiveFunctional::new(tables)?
        .with_label(REDUCIBILITY_LABEL, if degenerate { super::REDUCIBLE } else { super::IRREDUCIBLE })
        .with_label("generator", "circle-holder")
        .with_label("alpha", &params.alpha.to_string())
        .with_label("degenerate", if degenerate { "true" } else { "false" });
    Ok((chain, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha() -> f64 {
        3f64.ln() / 5f64.ln()
    }

    #[test]
    fn finds_cantor_parameters() {
        let c = cantor_params_for_alpha(alpha()).unwrap();
        assert_eq!((c.p, c.k), (3, 1));
        assert!(cantor_params_for_alpha(0.95).is_none());
    }

    #[test]
    fn densities_and_norms() {
        let (chain, f) = make_circle_holder_chain(&CircleParams::new(50, alpha(), 7, 6)).unwrap();
        assert!(chain.validate_ellipticity().unwrap().pass);
        for n in 1..=6 {
            let col: Vec<f64> = f.table(n).column(0).to_vec();
            assert!(circle_holder_norm(&col, alpha()) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn zero_amplitude_is_flagged() {
        let p = CircleParams {
            amplitude: 0.0,
            perturbation: 0.0,
            ..CircleParams::new(50, alpha(), 1, 3)
        };
        let (_, f) = make_circle_holder_chain(&p).unwrap();
        assert_eq!(f.labels()["degenerate"], "true");
        assert_eq!(f.norm_sup(), 0.0);
    }
}
