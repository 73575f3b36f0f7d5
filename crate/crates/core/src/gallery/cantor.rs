//! Cantor-type functions on `[0, 1]`.
//!
//! For integers `p >= 3`, `k >= 1` put `q = (p - 1) k` and work in base
//! `p + q`. Digits divisible by `k + 1` (there are exactly `p` of them)
//! keep a point inside the Cantor set and contribute the base-`p` digit
//! `d / (k + 1)` to `f(x)`; the first other digit `d` lands the point on a
//! plateau where `f` takes the value reached by rounding up at that level.
//! The function is non-decreasing, onto `[0, 1]`, Hölder with exponent
//! `alpha = ln p / ln(p + q)`, and the set where `p^n f` is not an integer
//! has Lebesgue measure `(p / (p + q))^n`.
//!
//! Evaluation is exact and works on digit strings only.

use ndarray::{Array1, Array2};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::chain::{AdditiveFunctional, ChainSpec, REDUCIBILITY_LABEL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CantorParams {
    pub p: u32,
    pub k: u32,
}

impl CantorParams {
    pub fn new(p: u32, k: u32) -> Result<Self> {
        if p < 3 || k < 1 {
            return Err(Error::InvalidParameter(format!("Cantor parameters need p >= 3, k >= 1 (got p = {p}, k = {k})")));
        }
        Ok(Self { p, k })
    }

    pub fn q(&self) -> u32 {
        (self.p - 1) * self.k
    }

    pub fn base(&self) -> u32 {
        self.p + self.q()
    }

    /// Hölder exponent `ln p / ln(p + q)`.
    pub fn alpha(&self) -> f64 {
        (self.p as f64).ln() / (self.base() as f64).ln()
    }

    /// Depth `d` with `m_disc = 2 base^d`, if any.
    pub fn depth_for_cells(&self, m_disc: usize) -> Option<u32> {
        if m_disc < 2 || m_disc % 2 != 0 {
            return None;
        }
        let mut half = m_disc / 2;
        let mut d = 0;
        while half > 1 {
            if half % self.base() as usize != 0 {
                return None;
            }
            half /= self.base() as usize;
            d += 1;
        }
        Some(d)
    }
}

/// A point of `[0, 1]` in base `p + q`: `integer` is 0 or 1, followed by
/// fractional digits. `1` must be written with integer part 1 and zero
/// fractional digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseExpansion {
    pub integer: u32,
    pub digits: Vec<u32>,
}

impl BaseExpansion {
    pub fn fraction(digits: Vec<u32>) -> Self {
        Self { integer: 0, digits }
    }

    pub fn one() -> Self {
        Self {
            integer: 1,
            digits: Vec::new(),
        }
    }

    /// Digits of `j / base^depth`, most significant first.
    pub fn of_cell(j: usize, base: u32, depth: u32) -> Self {
        let mut digits = vec![0; depth as usize];
        let mut r = j;
        for d in digits.iter_mut().rev() {
            *d = (r % base as usize) as u32;
            r /= base as usize;
        }
        Self::fraction(digits)
    }

    /// The represented number as an exact rational.
    pub fn value(&self, base: u32) -> BigRational {
        let b = BigInt::from(base);
        let mut v = BigRational::from_integer(BigInt::from(self.integer));
        let mut scale = BigRational::one();
        for &d in &self.digits {
            scale /= BigRational::from_integer(b.clone());
            v += &scale * BigRational::from_integer(BigInt::from(d));
        }
        v
    }
}

/// Exact value of the Cantor-type function at a digit string.
pub fn cantor_eval(params: &CantorParams, x: &BaseExpansion) -> Result<BigRational> {
    let base = params.base();
    if x.integer > 1 || (x.integer == 1 && x.digits.iter().any(|&d| d != 0)) {
        return Err(Error::InvalidParameter("point outside [0, 1]".into()));
    }
    if let Some(&d) = x.digits.iter().find(|&&d| d >= base) {
        return Err(Error::InvalidParameter(format!("digit {d} out of range for base {base}")));
    }
    if x.integer == 1 {
        return Ok(BigRational::one());
    }
    let kp1 = params.k + 1;
    let p = BigInt::from(params.p);
    // numerator over p^len
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for &d in &x.digits {
        num *= &p;
        den *= &p;
        if d % kp1 == 0 {
            num += BigInt::from(d / kp1);
        } else {
            num += BigInt::from(d / kp1 + 1);
            return Ok(BigRational::new(num, den));
        }
    }
    Ok(BigRational::new(num, den))
}

/// `Leb{x in [0,1] : p^n f(x) not in Z}` from the recursive construction:
/// after `n` levels the undetermined set is the union of the intervals
/// whose first `n` digits are all divisible by `k + 1`.
pub fn plateau_measure(params: &CantorParams, n: u32) -> BigRational {
    let base = params.base();
    let kp1 = params.k + 1;
    let surviving_digits = (0..base).filter(|d| d % kp1 == 0).count() as u64;
    let mut count = BigInt::one();
    let mut cells = BigInt::one();
    for _ in 0..n {
        count *= BigInt::from(surviving_digits);
        cells *= BigInt::from(base);
    }
    BigRational::new(count, cells)
}

/// Values `p^depth f(j / base^depth)` for `j = 0..base^depth`.
pub fn cantor_grid_numerators(params: &CantorParams, depth: u32) -> Result<Vec<i64>> {
    let base = params.base();
    let cells = (base as usize).pow(depth);
    let scale = BigRational::from_integer(BigInt::from(params.p).pow(depth));
    (0..cells)
        .map(|j| {
            let v = cantor_eval(params, &BaseExpansion::of_cell(j, base, depth))? * &scale;
            debug_assert!(v.is_integer());
            i64::try_from(v.to_integer()).map_err(|_| Error::Overflow("Cantor numerator".into()))
        })
        .collect()
}

/// Iid uniform chain on `m_disc = 2 base^depth` cells of `[-1, 1]` with
/// `f_n(x, .) = F(x)`, where `F` is the odd extension of the Cantor-type
/// function evaluated at the cell's left digit string. Lattice denominator
/// `p^depth`.
pub fn make_cantor_iid_chain(
    params: &CantorParams,
    m_disc: usize,
    n_steps: usize,
) -> Result<(ChainSpec, AdditiveFunctional)> {
    let depth = params.depth_for_cells(m_disc).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "m_disc = {m_disc} is not twice a power of the base {}",
            params.base()
        ))
    })?;
    let half = m_disc / 2;
    let grid = cantor_grid_numerators(params, depth)?;
    let cell_value: Vec<i64> = (0..m_disc)
        .map(|i| if i >= half { grid[i - half] } else { -grid[half - 1 - i] })
        .collect();
    let r = Array2::from_elem((m_disc, m_disc), 1.0 / m_disc as f64);
    let chain = ChainSpec::homogeneous(r, n_steps, Array1::from_elem(m_disc, 1.0 / m_disc as f64), 1.0)?;
    let table = Array2::from_shape_fn((m_disc, m_disc), |(x, _)| cell_value[x]);
    let l = (params.p as i64).pow(depth);
    let f = AdditiveFunctional::from_lattice(l, vec![table; n_steps])?
        .with_label(REDUCIBILITY_LABEL, super::REDUCIBLE)
        .with_label("generator", "cantor-iid")
        .with_label("p", &params.p.to_string())
        .with_label("k", &params.k.to_string())
        .with_label("depth", &depth.to_string());
    Ok((chain, f))
}

/// Largest `|F(x) - F(y)| / |x - y|^alpha` over the depth-`depth` grid of
/// `[0, 1]`.
pub fn grid_holder_quotient(params: &CantorParams, depth: u32) -> Result<f64> {
    let grid = cantor_grid_numerators(params, depth)?;
    let cells = grid.len() as f64;
    let scale = (params.p as f64).powi(depth as i32);
    let alpha = params.alpha();
    let mut best = 0.0_f64;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let df = (grid[j] - grid[i]) as f64 / scale;
            let dx = (j - i) as f64 / cells;
            best = best.max(df.abs() / dx.powf(alpha));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn endpoints() {
        let p = CantorParams::new(3, 1).unwrap();
        assert_eq!(cantor_eval(&p, &BaseExpansion::fraction(vec![])).unwrap(), q(0, 1));
        assert_eq!(cantor_eval(&p, &BaseExpansion::one()).unwrap(), q(1, 1));
    }

    #[test]
    fn digit_rule_examples() {
        let p = CantorParams::new(3, 1).unwrap();
        assert_eq!(cantor_eval(&p, &BaseExpansion::fraction(vec![2])).unwrap(), q(1, 3));
        assert_eq!(cantor_eval(&p, &BaseExpansion::fraction(vec![1])).unwrap(), q(1, 3));
        assert_eq!(cantor_eval(&p, &BaseExpansion::fraction(vec![3, 4, 4])).unwrap(), q(2, 3));
    }

    #[test]
    fn bad_digit_rejected() {
        let p = CantorParams::new(3, 1).unwrap();
        assert!(cantor_eval(&p, &BaseExpansion::fraction(vec![5])).is_err());
    }

    #[test]
    fn plateau_examples() {
        assert_eq!(plateau_measure(&CantorParams::new(3, 1).unwrap(), 1), q(3, 5));
        assert_eq!(plateau_measure(&CantorParams::new(3, 1).unwrap(), 0), q(1, 1));
        assert_eq!(plateau_measure(&CantorParams::new(5, 1).unwrap(), 3), q(125, 729));
    }

    #[test]
    fn cells_must_match_base() {
        let p = CantorParams::new(3, 1).unwrap();
        assert_eq!(p.depth_for_cells(250), Some(3));
        assert!(make_cantor_iid_chain(&p, 40, 4).is_err());
    }
}
