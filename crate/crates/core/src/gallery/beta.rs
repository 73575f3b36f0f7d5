//! Sums of independent signs with dyadic weights `a_n = p_n / q_n`,
//! `q_n = 2^{floor(c log2 n)}`, `p_n = floor(n^{-beta} q_n)`.

use ndarray::{array, Array1, Array2};
use serde::Serialize;

use crate::chain::{AdditiveFunctional, ChainSpec, REDUCIBILITY_LABEL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParams {
    pub beta: f64,
    pub c: f64,
    /// Targeted failing order `s > 1/(1 - 2 beta)`.
    pub s: u32,
}

impl BetaParams {
    /// Uses the smallest integer `s > 1/(1 - 2 beta)`.
    pub fn new(beta: f64, c: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::InvalidParameter(format!("beta = {beta} must lie in (0, 1/2)")));
        }
        let s = (1.0 / (1.0 - 2.0 * beta)).floor() as u32 + 1;
        Self::with_order(beta, c, s)
    }

    pub fn with_order(beta: f64, c: f64, s: u32) -> Result<Self> {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::InvalidParameter(format!("beta = {beta} must lie in (0, 1/2)")));
        }
        let p = Self { beta, c, s };
        let sb = p.s_beta();
        if !(c > beta && c < sb) {
            return Err(Error::InvalidParameter(format!(
                "c = {c} must lie in the open interval ({beta}, {sb}) = (beta, (s-1)(1/2-beta)) for s = {s}"
            )));
        }
        Ok(p)
    }

    /// `s_beta = (s - 1)(1/2 - beta)`.
    pub fn s_beta(&self) -> f64 {
        (self.s as f64 - 1.0) * (0.5 - self.beta)
    }

    /// `floor(c log2 n)`, computed so that exact powers of two are not
    /// lost to rounding.
    pub fn q_exponent(&self, n: usize) -> u32 {
        let e = self.c * (n as f64).log2();
        let r = e.round();
        if (e - r).abs() < 1e-12 {
            r as u32
        } else {
            e.floor() as u32
        }
    }

    pub fn q(&self, n: usize) -> i64 {
        1i64 << self.q_exponent(n)
    }

    /// `floor(n^{-beta} q_n)`.
    pub fn p(&self, n: usize) -> i64 {
        let v = (n as f64).powf(-self.beta) * self.q(n) as f64;
        let r = v.round();
        if (v - r).abs() < 1e-12 {
            r as i64
        } else {
            v.floor() as i64
        }
    }

    /// `a_n = p_n / q_n` as `(p_n, q_n)`.
    pub fn a(&self, n: usize) -> (i64, i64) {
        (self.p(n), self.q(n))
    }
}

/// Independent fair two-state chain with `f_n(x, .) = a_n (2x - 1)`, as a
/// lattice functional with common denominator `q_N`.
pub fn make_beta_lattice_chain(params: &BetaParams, n_steps: usize) -> Result<(ChainSpec, AdditiveFunctional)> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    let chain = ChainSpec::homogeneous(Array2::from_elem((2, 2), 0.5), n_steps, Array1::from_elem(2, 0.5), 1.0)?;
    let q_big = params.q(n_steps);
    let nums = (1..=n_steps)
        .map(|n| {
            let (p, q) = params.a(n);
            if q_big % q != 0 {
                return Err(Error::InvalidParameter(format!("q_{n} = {q} does not divide q_N = {q_big}")));
            }
            let k = p * (q_big / q);
            Ok(array![[-k, -k], [k, k]])
        })
        .collect::<Result<Vec<_>>>()?;
    let f = AdditiveFunctional::from_lattice(q_big, nums)?
        .with_label(REDUCIBILITY_LABEL, super::REDUCIBLE)
        .with_label("generator", "beta-lattice")
        .with_label("beta", &params.beta.to_string())
        .with_label("c", &params.c.to_string());
    Ok((chain, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_weight_is_one() {
        let p = BetaParams::new(0.3, 0.35).unwrap();
        assert_eq!(p.a(1), (1, 1));
    }

    #[test]
    fn reference_weights() {
        let p = BetaParams::new(0.3, 0.35).unwrap();
        assert_eq!(p.a(8), (1, 2));
        assert_eq!(p.a(1024), (1, 8));
    }

    #[test]
    fn admissible_interval_reported() {
        let err = BetaParams::new(0.3, 0.45).unwrap_err().to_string();
        assert!(err.contains("(0.3, 0.4"), "{err}");
        assert!(BetaParams::new(0.3, 0.25).is_err());
    }
}
