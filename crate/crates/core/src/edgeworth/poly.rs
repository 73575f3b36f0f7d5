use serde::Serialize;

/// Real polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn monomial(k: usize, c: f64) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Poly(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Degree of the highest non-zero coefficient (`None` for zero).
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|&c| c != 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Poly, c: f64) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0.0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut v = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly(v)
    }

    /// Drops trailing zero coefficients.
    pub fn trimmed(mut self) -> Poly {
        while self.0.last() == Some(&0.0) {
            self.0.pop();
        }
        self
    }
}

/// Probabilists' Hermite polynomials `He_0..=He_n` from
/// `He_{k+1}(z) = z He_k(z) - k He_{k-1}(z)`. The coefficients are
/// integers and exact in `f64` well beyond the degrees used here.
pub fn hermite(n: usize) -> Vec<Poly> {
    let mut out = vec![Poly(vec![1.0])];
    if n >= 1 {
        out.push(Poly(vec![0.0, 1.0]));
    }
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, &c) in out[k].0.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in out[k - 1].0.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        out.push(Poly(next));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_hermite_polynomials() {
        let h = hermite(4);
        assert_eq!(h[2].0, vec![-1.0, 0.0, 1.0]);
        assert_eq!(h[3].0, vec![0.0, -3.0, 0.0, 1.0]);
        assert_eq!(h[4].0, vec![3.0, 0.0, -6.0, 0.0, 1.0]);
    }
}
