//! Tools for normal approximation of additive functionals of finite,
//! time-inhomogeneous Markov chains.
//!
//! The crate covers
//!
//! - [`chain`]: chain specifications, ellipticity audits, marginals,
//!   exact covariances and seeded path sampling;
//! - [`transfer`]: characteristic functions, exact moments and exact
//!   lattice laws through transfer operators, plus Monte Carlo
//!   distribution functions;
//! - [`edgeworth`]: cumulants, Edgeworth polynomials, Kolmogorov distances
//!   and the Esseen smoothing bound;
//! - [`hexagon`]: hexagon balances and the structure constants `u_n^2`,
//!   `d_n^2(xi)` that control variance growth and characteristic-function
//!   decay;
//! - [`rpf`]: sequential Ruelle-Perron-Frobenius triplets, pressures and
//!   derivative audits of the log characteristic function;
//! - [`gallery`]: generators for the example chains (lattice counterexamples,
//!   Cantor-function chains, Hölder circle chains, random elliptic chains);
//! - [`experiments`]: the experiment drivers used by the command-line tool.
//!
//! Time and step indices follow the mathematical convention and start at 1.

#![forbid(unsafe_code)]

pub mod chain;
pub mod edgeworth;
pub mod error;
pub mod experiments;
pub mod gallery;
pub mod hexagon;
pub mod io;
pub mod numerics;
pub mod rpf;
pub mod transfer;

pub use error::{Error, Result};
