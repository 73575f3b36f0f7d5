use serde::Serialize;

use super::cumulants::CumulantTable;
use super::poly::{hermite, Poly};
use crate::error::{Error, Result};
use crate::numerics::{factorial, normal_cdf, normal_pdf};

/// Polynomials `A_1..A_r` as coefficients of `(it)^k`:
///
/// `A_j = sum_{m=1}^{j} 1/m! sum_{k_1+..+k_m = 2m+j, k_i >= 3} a_{k_1}..a_{k_m} (it)^{j+2m}`,
///
/// the inner sum running over ordered tuples. `a[k]` holds `a_k`; entries
/// up to `a_{r+2}` are needed.
pub fn aj_polynomials(a: &[f64], r: usize) -> Result<Vec<Poly>> {
    if r > 0 && a.len() < r + 3 {
        return Err(Error::InvalidParameter(format!(
            "order {r} needs normalized cumulants up to a_{}",
            r + 2
        )));
    }
    let mut out = Vec::with_capacity(r);
    for j in 1..=r {
        let mut poly = Poly::zero();
        for m in 1..=j {
            let total = 2 * m + j;
            let mut sum = 0.0;
            for_each_tuple(m, total, &mut Vec::with_capacity(m), &mut |ks| {
                sum += ks.iter().map(|&k| a[k]).product::<f64>();
            });
            poly.add_scaled(&Poly::monomial(total, 1.0), sum / factorial(m));
        }
        out.push(poly);
    }
    Ok(out)
}

/// Calls `visit` on every ordered `m`-tuple of integers `>= 3` summing to `total`.
fn for_each_tuple(m: usize, total: usize, prefix: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if m == 0 {
        if total == 0 {
            visit(prefix);
        }
        return;
    }
    if total < 3 * m {
        return;
    }
    for k in 3..=total - 3 * (m - 1) {
        prefix.push(k);
        for_each_tuple(m - 1, total - k, prefix, visit);
        prefix.pop();
    }
}

/// Density polynomial: `(it)^k -> He_k(z)`, so that the Fourier transform
/// of `phi P` is `exp(-t^2/2) A(t)`.
pub fn hermite_translate(a: &Poly) -> Poly {
    let deg = a.coeffs().len();
    let he = hermite(deg);
    let mut p = Poly::zero();
    for (k, &c) in a.coeffs().iter().enumerate() {
        if c != 0.0 {
            p.add_scaled(&he[k], c);
        }
    }
    p.trimmed()
}

/// Distribution-function polynomial `Q` with `(phi Q)' = phi P`, i.e.
/// `(it)^k -> -He_{k-1}(z)`. Needs `A(0) = 0`, which holds for every `A_j`.
pub fn cdf_translate(a: &Poly) -> Poly {
    let deg = a.coeffs().len();
    let he = hermite(deg.max(1));
    let mut q = Poly::zero();
    for (k, &c) in a.coeffs().iter().enumerate() {
        if c != 0.0 {
            debug_assert!(k >= 1, "constant term has no antiderivative of this form");
            q.add_scaled(&he[k - 1], -c);
        }
    }
    q.trimmed()
}

/// Edgeworth expansion of order `r` for a sum with standard deviation `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeworthExpansion {
    pub r: usize,
    pub sigma: f64,
    /// `A_1..A_r`, coefficients of `(it)^k`.
    pub a_polys: Vec<Poly>,
    /// `P_1..P_r` (density form).
    pub p_polys: Vec<Poly>,
    /// Distribution-function corrections `Q_1..Q_r`.
    pub cdf_polys: Vec<Poly>,
}

impl EdgeworthExpansion {
    /// Builds the order-`r` expansion from a cumulant table holding at
    /// least `Gamma_{r+2}`.
    pub fn new(table: &CumulantTable, r: usize) -> Result<Self> {
        let a_polys = aj_polynomials(&table.normalized, r)?;
        let p_polys = a_polys.iter().map(hermite_translate).collect();
        let cdf_polys = a_polys.iter().map(cdf_translate).collect();
        Ok(Self {
            r,
            sigma: table.sigma,
            a_polys,
            p_polys,
            cdf_polys,
        })
    }

    /// `E_r(z) = Phi(z) + phi(z) sum_j sigma^{-j} Q_j(z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        let mut corr = 0.0;
        let mut s = 1.0;
        for q in &self.cdf_polys {
            s /= self.sigma;
            corr += s * q.eval(z);
        }
        normal_cdf(z) + normal_pdf(z) * corr
    }

    /// `phi(z) (1 + sum_j sigma^{-j} P_j(z))`.
    pub fn density(&self, z: f64) -> f64 {
        let mut corr = 1.0;
        let mut s = 1.0;
        for p in &self.p_polys {
            s /= self.sigma;
            corr += s * p.eval(z);
        }
        normal_pdf(z) * corr
    }

    /// JSON export: `{"r", "sigma", "P", "A", "P_cdf"}` with ascending coefficients.
    pub fn to_json(&self) -> serde_json::Value {
        let c = |v: &[Poly]| v.iter().map(|p| p.coeffs().to_vec()).collect::<Vec<_>>();
        serde_json::json!({
            "r": self.r,
            "sigma": self.sigma,
            "P": c(&self.p_polys),
            "A": c(&self.a_polys),
            "P_cdf": c(&self.cdf_polys),
        })
    }
}

/// Values of the expansion's distribution function on a grid.
pub fn expansion_cdf(e: &EdgeworthExpansion, z_grid: &[f64]) -> Vec<f64> {
    z_grid.iter().map(|&z| e.cdf(z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(a3: f64, a4: f64, a5: f64, sigma: f64) -> CumulantTable {
        let mut normalized = vec![0.0; 6];
        normalized[3] = a3;
        normalized[4] = a4;
        normalized[5] = a5;
        CumulantTable {
            sigma,
            gammas: vec![0.0; 6],
            normalized,
        }
    }

    #[test]
    fn first_two_polynomials() {
        let t = table(0.7, -0.3, 0.2, 2.0);
        let a = aj_polynomials(&t.normalized, 2).unwrap();
        assert_eq!(a[0].coeffs(), &[0.0, 0.0, 0.0, 0.7]);
        let want2 = [0.0, 0.0, 0.0, 0.0, -0.3, 0.0, 0.49 / 2.0];
        for (g, w) in a[1].coeffs().iter().zip(want2) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn p1_closed_form() {
        let t = table(0.4, 0.0, 0.0, 3.0);
        let e = EdgeworthExpansion::new(&t, 1).unwrap();
        for z in [-2.0, -0.5, 0.0, 1.3] {
            assert!((e.p_polys[0].eval(z) - 0.4 * (z * z * z - 3.0 * z)).abs() < 1e-12);
            assert!((e.cdf_polys[0].eval(z) + 0.4 * (z * z - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn order_zero_is_normal() {
        let e = EdgeworthExpansion::new(&table(0.4, 0.1, 0.0, 3.0), 0).unwrap();
        assert_eq!(e.cdf(0.3), normal_cdf(0.3));
    }

    #[test]
    fn limits_at_ten() {
        let e = EdgeworthExpansion::new(&table(0.4, 0.1, -0.2, 2.0), 3).unwrap();
        assert!((e.cdf(10.0) - 1.0).abs() < 1e-12);
        assert!(e.cdf(-10.0).abs() < 1e-12);
    }

    #[test]
    fn degrees_bounded() {
        let e = EdgeworthExpansion::new(&table(0.4, 0.1, -0.2, 2.0), 3).unwrap();
        for (j, p) in e.p_polys.iter().enumerate() {
            assert!(p.degree().unwrap() <= 3 * (j + 1));
        }
    }
}
