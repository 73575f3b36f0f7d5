use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::factorial;

/// Cumulants of a sum together with their normalized versions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantTable {
    pub sigma: f64,
    /// `gammas[k] = Gamma_k` for `k = 1..=kmax`; `gammas[0]` is unused (0).
    pub gammas: Vec<f64>,
    /// `normalized[j] = a_j = Gamma_j / (j! sigma^2)`; entries below 2 are 0.
    pub normalized: Vec<f64>,
}

impl CumulantTable {
    pub fn kmax(&self) -> usize {
        self.gammas.len() - 1
    }

    /// `a_j` for `j >= 3`.
    pub fn a(&self, j: usize) -> f64 {
        self.normalized[j]
    }
}

/// Cumulants from moments `alphas[k] = E S^k` (`alphas[0] = 1`) through
///
/// `Gamma_k = sum_v (-1)^{v-1}/v sum_{k_1+..+k_v=k} k!/(k_1!..k_v!) alpha_{k_1}..alpha_{k_v}`,
///
/// the inner sum running over ordered tuples of positive integers. The
/// tuple sums are accumulated part by part, so no tuple is listed twice.
pub fn cumulants_from_moments(alphas: &[f64]) -> Result<CumulantTable> {
    if alphas.len() < 3 {
        return Err(Error::InvalidParameter("need moments up to order 2".into()));
    }
    let kmax = alphas.len() - 1;
    let scaled: Vec<f64> = (0..=kmax).map(|k| alphas[k] / factorial(k)).collect();
    // t[v][m] = sum over ordered v-tuples summing to m of prod alpha_{k_i}/k_i!
    let mut t = vec![vec![0.0; kmax + 1]; kmax + 1];
    t[1][1..=kmax].copy_from_slice(&scaled[1..=kmax]);
    for v in 2..=kmax {
        for m in v..=kmax {
            let mut s = 0.0;
            for first in 1..=m - (v - 1) {
                s += scaled[first] * t[v - 1][m - first];
            }
            t[v][m] = s;
        }
    }
    let mut gammas = vec![0.0; kmax + 1];
    for k in 1..=kmax {
        let mut s = 0.0;
        for v in 1..=k {
            let sign = if v % 2 == 1 { 1.0 } else { -1.0 };
            s += sign / v as f64 * t[v][k];
        }
        gammas[k] = factorial(k) * s;
    }
    let var = gammas[2];
    if !(var > 1e-12 * alphas[2].abs()) || var <= 0.0 {
        return Err(Error::DegenerateVariance {
            sigma: var.max(0.0).sqrt(),
        });
    }
    let sigma = var.sqrt();
    let normalized = (0..=kmax)
        .map(|j| if j < 2 { 0.0 } else { gammas[j] / (factorial(j) * var) })
        .collect();
    Ok(CumulantTable {
        sigma,
        gammas,
        normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_coin_fourth_cumulant() {
        let t = cumulants_from_moments(&[1.0, 0.0, 0.25, 0.0, 1.0 / 16.0]).unwrap();
        assert!((t.gammas[2] - 0.25).abs() < 1e-15);
        assert!((t.gammas[4] + 0.125).abs() < 1e-15);
        assert_eq!(t.gammas[3], 0.0);
    }

    #[test]
    fn gaussian_higher_cumulants_vanish() {
        let t = cumulants_from_moments(&[1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0]).unwrap();
        assert!(t.gammas[3].abs() < 1e-14 && t.gammas[4].abs() < 1e-14 && t.gammas[6].abs() < 1e-12);
    }

    #[test]
    fn first_cumulant_is_mean() {
        let t = cumulants_from_moments(&[1.0, 2.5, 7.0]).unwrap();
        assert!((t.gammas[1] - 2.5).abs() < 1e-15);
        assert!((t.gammas[2] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn degenerate_variance_rejected() {
        assert!(matches!(
            cumulants_from_moments(&[1.0, 0.0, 0.0, 0.0]),
            Err(Error::DegenerateVariance { .. })
        ));
        assert!(cumulants_from_moments(&[1.0, 3.0, 9.0]).is_err());
    }
}
