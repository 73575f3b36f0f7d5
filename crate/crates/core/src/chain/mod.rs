//! Finite inhomogeneous Markov chains and additive functionals on them.
//!
//! A chain with `N` steps lives on times `1..=N+1`. Time `j` has a finite
//! state space of size `M_j`, step `j` moves from time `j` to time `j+1`
//! with the row-stochastic kernel `R_j`, and each time `j >= 2` carries a
//! strictly positive reference measure `m_j` (uniform unless given).
//! Densities are taken with respect to the reference of the target time:
//! `p_j(x, y) = R_j(x, y) / m_{j+1}(y)`.
//!
//! All time and step indices in this module are 1-based, matching the
//! usual notation `X_1, ..., X_{N+1}` and `f_1, ..., f_N`.

mod functional;
mod sampling;

pub use functional::{AdditiveFunctional, Lattice, REDUCIBILITY_LABEL};
pub use sampling::{sample_paths, sample_states, SampleOptions, SampleSet};

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for row sums and for the total mass of probability vectors.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite inhomogeneous Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    sizes: Vec<usize>,
    kernels: Vec<Array2<f64>>,
    reference: Vec<Array1<f64>>,
    mu1: Array1<f64>,
    eps0: f64,
}

/// Result of the ellipticity audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticityReport {
    /// Largest one-step density `max p_j(x, y)`; ellipticity needs it `<= 1/eps0`.
    pub eps_upper: f64,
    /// Smallest two-step density; ellipticity needs it `>= eps0`.
    /// Infinite when the chain has a single step.
    pub eps_two_step: f64,
    pub eps0: f64,
    pub pass: bool,
}

impl ChainSpec {
    /// Builds a chain from its kernels `R_1..R_N`, optional reference
    /// measures `m_2..m_{N+1}` and initial law `mu1`.
    ///
    /// Kernels must be row-stochastic within [`STOCHASTIC_TOL`]; rows that
    /// are off are rejected rather than renormalized.
    pub fn new(
        kernels: Vec<Array2<f64>>,
        reference: Option<Vec<Array1<f64>>>,
        mu1: Array1<f64>,
        eps0: f64,
    ) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::InvalidSpec("a chain needs at least one step".into()));
        }
        let mut sizes = vec![kernels[0].nrows()];
        for (idx, k) in kernels.iter().enumerate() {
            let step = idx + 1;
            if k.nrows() != sizes[idx] {
                return Err(Error::DimensionMismatch(format!(
                    "kernel {step} has {} rows but time {step} has {} states",
                    k.nrows(),
                    sizes[idx]
                )));
            }
            if k.ncols() == 0 {
                return Err(Error::InvalidSpec(format!("kernel {step} has no columns")));
            }
            sizes.push(k.ncols());
            for (row, r) in k.outer_iter().enumerate() {
                if r.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "kernel {step} row {row} has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = r.sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::NotStochastic { step, row, sum });
                }
            }
        }
        if mu1.len() != sizes[0] {
            return Err(Error::DimensionMismatch(format!(
                "initial law has {} entries but time 1 has {} states",
                mu1.len(),
                sizes[0]
            )));
        }
        check_probability("initial law", &mu1, false)?;
        let reference = match reference {
            Some(r) => {
                if r.len() != kernels.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} reference measures for {} steps",
                        r.len(),
                        kernels.len()
                    )));
                }
                for (idx, m) in r.iter().enumerate() {
                    let time = idx + 2;
                    if m.len() != sizes[idx + 1] {
                        return Err(Error::DimensionMismatch(format!(
                            "reference at time {time} has {} entries, expected {}",
                            m.len(),
                            sizes[idx + 1]
                        )));
                    }
                    check_probability(&format!("reference at time {time}"), m, true)?;
                }
                r
            }
            None => sizes[1..]
                .iter()
                .map(|&m| Array1::from_elem(m, 1.0 / m as f64))
                .collect(),
        };
        if !(eps0 > 0.0 && eps0 <= 1.0) {
            return Err(Error::InvalidSpec(format!("eps0 = {eps0} must lie in (0, 1]")));
        }
        Ok(Self {
            sizes,
            kernels,
            reference,
            mu1,
            eps0,
        })
    }

    /// Time-homogeneous chain: the same kernel repeated `n_steps` times.
    pub fn homogeneous(kernel: Array2<f64>, n_steps: usize, mu1: Array1<f64>, eps0: f64) -> Result<Self> {
        Self::new(vec![kernel; n_steps], None, mu1, eps0)
    }

    /// Number of steps `N`.
    pub fn n_steps(&self) -> usize {
        self.kernels.len()
    }

    /// State-space sizes `M_1..M_{N+1}`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Size `M_j` of the state space at time `j` (1-based).
    pub fn size(&self, j: usize) -> usize {
        self.sizes[j - 1]
    }

    /// Largest state space over all times.
    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// All kernels; `kernels()[i]` is `R_{i+1}`.
    pub fn kernels(&self) -> &[Array2<f64>] {
        &self.kernels
    }

    /// Kernel `R_j` of step `j` (1-based).
    pub fn kernel(&self, j: usize) -> &Array2<f64> {
        &self.kernels[j - 1]
    }

    /// Reference measures; `references()[i]` is `m_{i+2}`.
    pub fn references(&self) -> &[Array1<f64>] {
        &self.reference
    }

    /// Reference measure `m_j` at time `j >= 2`.
    pub fn reference(&self, j: usize) -> &Array1<f64> {
        &self.reference[j - 2]
    }

    pub fn mu1(&self) -> &Array1<f64> {
        &self.mu1
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    /// Returns a copy with a different declared ellipticity constant.
    pub fn with_eps0(mut self, eps0: f64) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 <= 1.0) {
            return Err(Error::InvalidSpec(format!("eps0 = {eps0} must lie in (0, 1]")));
        }
        self.eps0 = eps0;
        Ok(self)
    }

    /// One-step density `p_j(x, y) = R_j(x, y) / m_{j+1}(y)` as a matrix.
    pub fn density(&self, j: usize) -> Array2<f64> {
        let m = self.reference(j + 1);
        let mut p = self.kernel(j).clone();
        for mut row in p.outer_iter_mut() {
            row.iter_mut().zip(m.iter()).for_each(|(v, &w)| *v /= w);
        }
        p
    }

    /// Checks uniform ellipticity: one-step densities bounded by `1/eps0`
    /// and two-step densities bounded below by `eps0`.
    pub fn validate_ellipticity(&self) -> Result<EllipticityReport> {
        for (idx, m) in self.reference.iter().enumerate() {
            if let Some(pos) = m.iter().position(|&w| !(w > 0.0)) {
                return Err(Error::InvalidSpec(format!(
                    "zero reference weight at time {}, state {pos}",
                    idx + 2
                )));
            }
        }
        let n = self.n_steps();
        let mut eps_upper = 0.0_f64;
        for j in 1..=n {
            let p = self.density(j);
            eps_upper = eps_upper.max(p.iter().copied().fold(0.0, f64::max));
        }
        let mut eps_two_step = f64::INFINITY;
        for j in 1..n {
            // sum_y p_j(x,y) p_{j+1}(y,z) m_{j+1}(y) = (R_j R_{j+1})(x,z) / m_{j+2}(z)
            let two = self.kernel(j).dot(self.kernel(j + 1));
            let m = self.reference(j + 2);
            for row in two.outer_iter() {
                for (v, &w) in row.iter().zip(m.iter()) {
                    eps_two_step = eps_two_step.min(v / w);
                }
            }
        }
        let slack = 1e-12;
        let pass = eps_upper <= (1.0 / self.eps0) * (1.0 + slack)
            && eps_two_step >= self.eps0 * (1.0 - slack);
        Ok(EllipticityReport {
            eps_upper,
            eps_two_step,
            eps0: self.eps0,
            pass,
        })
    }

    /// Marginal laws `mu_1, ..., mu_{N+1}` with `mu_{j+1} = mu_j R_j`.
    pub fn marginal_laws(&self) -> Vec<Array1<f64>> {
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        out.push(self.mu1.clone());
        for k in &self.kernels {
            let next = out.last().unwrap().dot(k);
            out.push(next);
        }
        out
    }

    /// The chain restricted to steps `start..start+len` (1-based), started
    /// from its marginal law at time `start`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        let n = self.n_steps();
        if start == 0 || len == 0 || start + len - 1 > n {
            return Err(Error::IndexOutOfRange {
                what: "window",
                index: start + len.saturating_sub(1),
                min: 1,
                max: n,
            });
        }
        let mut mu = self.mu1.clone();
        for k in &self.kernels[..start - 1] {
            mu = mu.dot(k);
        }
        Ok(Self {
            sizes: self.sizes[start - 1..start + len].to_vec(),
            kernels: self.kernels[start - 1..start - 1 + len].to_vec(),
            reference: self.reference[start - 1..start - 1 + len].to_vec(),
            mu1: mu,
            eps0: self.eps0,
        })
    }

    /// The first `len` steps of the chain.
    pub fn truncate(&self, len: usize) -> Result<Self> {
        self.window(1, len)
    }
}

fn check_probability(what: &str, v: &Array1<f64>, strictly_positive: bool) -> Result<()> {
    if let Some(pos) = v.iter().position(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::InvalidSpec(format!("{what}: bad entry at {pos}")));
    }
    if strictly_positive {
        if let Some(pos) = v.iter().position(|&w| w <= 0.0) {
            return Err(Error::InvalidSpec(format!("{what}: zero reference weight at {pos}")));
        }
    }
    let s = v.sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidSpec(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Exact covariance `Cov(f_n(X_n, X_{n+1}), f_{n+k}(X_{n+k}, X_{n+k+1}))`
/// obtained by contracting the joint law along the chain.
pub fn mixing_covariance(chain: &ChainSpec, f: &AdditiveFunctional, n: usize, k: usize) -> Result<f64> {
    f.check_compatible(chain)?;
    let big_n = chain.n_steps();
    if n == 0 || n + k > big_n {
        return Err(Error::IndexOutOfRange {
            what: "covariance index n + k",
            index: n + k,
            min: 1,
            max: big_n,
        });
    }
    let laws = chain.marginal_laws();
    let mu = &laws[n - 1];
    let rn = chain.kernel(n);
    let fn_ = f.table(n);
    // w(y) = E[f_n(X_n, X_{n+1}) ; X_{n+1} = y]
    let mut w = Array1::<f64>::zeros(chain.size(n + 1));
    let mut mean_n = 0.0;
    for (x, &px) in mu.iter().enumerate() {
        for y in 0..chain.size(n + 1) {
            let p = px * rn[[x, y]];
            w[y] += p * fn_[[x, y]];
            mean_n += p * fn_[[x, y]];
        }
    }
    let m = n + k;
    let mean_m = step_mean(&laws[m - 1], chain.kernel(m), f.table(m));
    if k == 0 {
        let mut second = 0.0;
        for (x, &px) in mu.iter().enumerate() {
            for y in 0..chain.size(n + 1) {
                second += px * rn[[x, y]] * fn_[[x, y]] * fn_[[x, y]];
            }
        }
        return Ok(second - mean_n * mean_n);
    }
    for j in n + 1..m {
        w = w.dot(chain.kernel(j));
    }
    // w is now E[f_n ; X_m = x'], combine with f_m's conditional mean.
    let rm = chain.kernel(m);
    let fm = f.table(m);
    let mut cross = 0.0;
    for (x, &wx) in w.iter().enumerate() {
        let g: f64 = rm.row(x).iter().zip(fm.row(x).iter()).map(|(r, v)| r * v).sum();
        cross += wx * g;
    }
    Ok(cross - mean_n * mean_m)
}

/// `E[f(X_j, X_{j+1})]` given the law of `X_j`.
pub(crate) fn step_mean(mu: &Array1<f64>, r: &Array2<f64>, f: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for (x, &px) in mu.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let g: f64 = r.row(x).iter().zip(f.row(x).iter()).map(|(a, b)| a * b).sum();
        s += px * g;
    }
    s
}

/// Least-squares fit of `|Cov(k)| ~ A delta^k` over lags whose covariance
/// magnitude is at least `floor`. Returns `None` with fewer than two
/// usable lags.
pub fn fit_geometric_decay(covs: &[(usize, f64)], floor: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = covs
        .iter()
        .filter(|(_, c)| c.abs() >= floor)
        .map(|&(k, c)| (k as f64, c.abs().ln()))
        .collect();
    let (slope, intercept) = crate::numerics::linear_fit(&pts)?;
    Some((intercept.exp(), slope.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn swap_then_uniform() -> ChainSpec {
        let swap = array![[0.0, 1.0], [1.0, 0.0]];
        let unif = array![[0.5, 0.5], [0.5, 0.5]];
        ChainSpec::new(vec![swap, unif], None, array![0.5, 0.5], 0.5).unwrap()
    }

    #[test]
    fn swap_uniform_ellipticity() {
        let rep = swap_then_uniform().validate_ellipticity().unwrap();
        assert!((rep.eps_two_step - 1.0).abs() < 1e-15);
        assert!((rep.eps_upper - 2.0).abs() < 1e-15);
        assert!(rep.pass);
    }

    #[test]
    fn uniform_chain_is_one_elliptic() {
        let u = Array2::from_elem((3, 3), 1.0 / 3.0);
        let c = ChainSpec::homogeneous(u, 5, Array1::from_elem(3, 1.0 / 3.0), 1.0).unwrap();
        let rep = c.validate_ellipticity().unwrap();
        assert!((rep.eps_two_step - 1.0).abs() < 1e-14);
        assert!((rep.eps_upper - 1.0).abs() < 1e-14);
        assert!(rep.pass);
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let a = Array2::from_elem((2, 3), 1.0 / 3.0);
        let b = Array2::from_elem((2, 2), 0.5);
        let err = ChainSpec::new(vec![a, b], None, array![0.5, 0.5], 0.5).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn zero_reference_weight_is_invalid() {
        let u = array![[0.5, 0.5], [0.5, 0.5]];
        let err = ChainSpec::new(vec![u], Some(vec![array![1.0, 0.0]]), array![0.5, 0.5], 0.5).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }

    #[test]
    fn rows_are_not_renormalized() {
        let bad = array![[0.5, 0.5 + 1e-9], [0.5, 0.5]];
        let err = ChainSpec::new(vec![bad], None, array![0.5, 0.5], 0.5).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { step: 1, row: 0, .. }));
    }

    #[test]
    fn marginals_push_forward() {
        let c = swap_then_uniform();
        let c = ChainSpec::new(c.kernels().to_vec(), None, array![1.0, 0.0], 0.5).unwrap();
        let laws = c.marginal_laws();
        assert_eq!(laws[1], array![0.0, 1.0]);
        assert_eq!(laws[2], array![0.5, 0.5]);
    }

    #[test]
    fn covariance_index_errors() {
        let c = swap_then_uniform();
        let f = AdditiveFunctional::new(vec![array![[1.0, 0.0], [0.0, 1.0]]; 2]).unwrap();
        assert!(mixing_covariance(&c, &f, 2, 1).is_err());
        assert!(mixing_covariance(&c, &f, 0, 0).is_err());
        assert!(mixing_covariance(&c, &f, 1, 1).is_ok());
    }
}
