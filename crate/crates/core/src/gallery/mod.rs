//! Generators for the example chains.
//!
//! - [`beta`]: independent fair signs weighted by dyadic rationals
//!   `a_n = p_n / q_n ~ n^{-beta}`; the sum lives on `(1/q_N) Z`, which
//!   caps the order of any valid Edgeworth expansion.
//! - [`cantor`]: exact Cantor-type functions on base-`(p+q)` digit strings
//!   and iid chains driven by their odd extension.
//! - [`circle`]: discretized circle chains with smooth elliptic kernels and
//!   Hölder functionals built from Cantor profiles.
//! - [`random`]: seeded generic elliptic chains, optionally with decaying
//!   or lattice-valued functionals, and a chain with rare large jumps whose
//!   sums stay visibly skewed at moderate horizons.

pub mod beta;
pub mod cantor;
pub mod circle;
pub mod random;

pub use beta::{make_beta_lattice_chain, BetaParams};
pub use cantor::{cantor_eval, make_cantor_iid_chain, plateau_measure, BaseExpansion, CantorParams};
pub use circle::{make_circle_holder_chain, CircleParams};
pub use random::{make_elliptic_random_chain, make_rare_jump_chain, RandomChainParams, RareJumpParams};

use ndarray::{Array1, Array2};

use crate::chain::{AdditiveFunctional, ChainSpec};
use crate::error::{Error, Result};

/// Labels attached to generated functionals.
pub const IRREDUCIBLE: &str = "irreducible";
pub const REDUCIBLE: &str = "reducible";

/// A named example chain.
#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub name: String,
    pub chain: ChainSpec,
    pub f: AdditiveFunctional,
}

/// Independent fair signs `f_n = +-value`, i.e. `S_N` is a sum of `N`
/// iid coins with values `{-value, value}`. With `value = 1/2` the sum is
/// lattice with `L = 2`.
pub fn make_coin_chain(n_steps: usize, numerator: i64, denominator: i64) -> Result<(ChainSpec, AdditiveFunctional)> {
    let r = Array2::from_elem((2, 2), 0.5);
    let chain = ChainSpec::homogeneous(r, n_steps, Array1::from_elem(2, 0.5), 1.0)?;
    let t = ndarray::array![[-numerator, -numerator], [numerator, numerator]];
    let f = AdditiveFunctional::from_lattice(denominator, vec![t; n_steps])?
        .with_label(crate::chain::REDUCIBILITY_LABEL, REDUCIBLE)
        .with_label("generator", "coin");
    Ok((chain, f))
}

/// Names of the standard gallery with their default horizons.
pub const GALLERY: &[(&str, usize)] = &[
    ("random-m4-s42", 4096),
    ("random-m3-s42", 4096),
    ("random-m4-s42-lattice64", 4096),
    ("random-m3-s42-decay0.3", 4096),
    ("rare-jump-m3-s42", 4096),
    ("beta-lattice-0.3-0.35", 4096),
    ("cantor-iid-p3-k1", 256),
    ("circle-holder-m50", 128),
    ("coin-half", 1024),
];

/// Builds a gallery chain by name with `n_steps` steps (the default
/// horizon when `None`).
pub fn gallery_chain(name: &str, n_steps: Option<usize>) -> Result<GalleryEntry> {
    let default_n = GALLERY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, n)| n)
        .ok_or_else(|| {
            let known: Vec<&str> = GALLERY.iter().map(|(n, _)| *n).collect();
            Error::InvalidParameter(format!("unknown gallery chain '{name}' (known: {})", known.join(", ")))
        })?;
    let n = n_steps.unwrap_or(default_n);
    let base = RandomChainParams::new(4, 1.0, 42, n);
    let (chain, f) = match name {
        "random-m4-s42" => make_elliptic_random_chain(&base)?,
        "random-m3-s42" => make_elliptic_random_chain(&RandomChainParams { m: 3, ..base })?,
        "random-m4-s42-lattice64" => make_elliptic_random_chain(&RandomChainParams {
            lattice: Some(64),
            ..base
        })?,
        "random-m3-s42-decay0.3" => make_elliptic_random_chain(&RandomChainParams {
            m: 3,
            decay_beta: Some(0.3),
            ..base
        })?,
        "rare-jump-m3-s42" => make_rare_jump_chain(&RareJumpParams::new(3, 42, n))?,
        "beta-lattice-0.3-0.35" => make_beta_lattice_chain(&BetaParams::new(0.3, 0.35)?, n)?,
        "cantor-iid-p3-k1" => make_cantor_iid_chain(&CantorParams::new(3, 1)?, 50, n)?,
        "circle-holder-m50" => make_circle_holder_chain(&CircleParams::new(50, (3f64).ln() / (5f64).ln(), 42, n))?,
        "coin-half" => make_coin_chain(n, 1, 2)?,
        _ => unreachable!("name checked against GALLERY"),
    };
    Ok(GalleryEntry {
        name: name.to_string(),
        chain,
        f,
    })
}

/// Every gallery chain at its default horizon.
pub fn standard_gallery() -> Result<Vec<GalleryEntry>> {
    GALLERY.iter().map(|(name, _)| gallery_chain(name, None)).collect()
}
