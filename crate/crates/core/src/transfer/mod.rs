//! Transfer-operator computations on a chain: characteristic functions,
//! moment generating functions, exact moments, exact lattice laws,
//! empirical distribution functions and the tail integral of the
//! characteristic function.
//!
//! Every quantity is obtained by pushing a row vector through the twisted
//! kernels `R_j(x, y) exp(z f_j(x, y))`, so the cost is linear in `N`.

mod empirical;
mod lattice;

pub use empirical::{cdf_estimate, dkw_halfwidth, EmpiricalCdf, DKW_DELTA};
pub use lattice::{lattice_distribution, lattice_distributions, LatticePmf};

use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{AdditiveFunctional, ChainSpec};
use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, binomial_row, SimpsonOptions};

/// Moments larger than this abort the moment recursion.
pub const MOMENT_OVERFLOW: f64 = 1e300;

/// Values of `Phi_N(xi) = E exp(i xi S_N)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharFnTable {
    pub xi: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Flattened copy of a chain and functional for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Transfer {
    sizes: Vec<usize>,
    kernels: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    /// `Some(g)` when `f_j(x, y) = g(x)` for all `y`.
    row_values: Vec<Option<Vec<f64>>>,
    mu1: Vec<f64>,
}

impl Transfer {
    pub fn new(chain: &ChainSpec, f: &AdditiveFunctional) -> Result<Self> {
        f.check_compatible(chain)?;
        let kernels = chain
            .kernels()
            .iter()
            .map(|k| k.as_standard_layout().iter().copied().collect())
            .collect();
        let values = f
            .tables()
            .iter()
            .map(|t| t.as_standard_layout().iter().copied().collect())
            .collect();
        let row_values = f
            .tables()
            .iter()
            .map(|t| {
                let constant = t.rows().into_iter().all(|r| r.iter().all(|&v| v == r[0]));
                constant.then(|| t.column(0).to_vec())
            })
            .collect();
        Ok(Self {
            sizes: chain.sizes().to_vec(),
            kernels,
            values,
            row_values,
            mu1: chain.mu1().to_vec(),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.kernels.len()
    }

    /// `E exp(i xi S_N)`, renormalizing by the largest entry after every
    /// step and carrying the scale in logarithmic form.
    pub fn char_fn(&self, xi: f64) -> Complex64 {
        let (log_scale, v) = self.push_scaled(Complex64::new(0.0, xi), self.n_steps());
        let s: Complex64 = v.iter().sum();
        s * log_scale.exp()
    }

    /// `log |E exp(i xi S_N)|`, finite far below the underflow of `char_fn`.
    pub fn log_abs_char_fn(&self, xi: f64) -> f64 {
        let (log_scale, v) = self.push_scaled(Complex64::new(0.0, xi), self.n_steps());
        let s: Complex64 = v.iter().sum();
        log_scale + s.norm().ln()
    }

    /// One twisted step `v -> v R_j^{(z)}` (0-based `j`).
    fn step(&self, j: usize, z: Complex64, v: &[Complex64]) -> Vec<Complex64> {
        let (rows, cols) = (self.sizes[j], self.sizes[j + 1]);
        let r = &self.kernels[j];
        let mut next = vec![Complex64::new(0.0, 0.0); cols];
        for x in 0..rows {
            let vx = match &self.row_values[j] {
                Some(g) => v[x] * (z * g[x]).exp(),
                None => v[x],
            };
            if vx.re == 0.0 && vx.im == 0.0 {
                continue;
            }
            let row = &r[x * cols..(x + 1) * cols];
            match &self.row_values[j] {
                Some(_) => {
                    for (o, &p) in next.iter_mut().zip(row) {
                        *o += vx * p;
                    }
                }
                None => {
                    let f = &self.values[j][x * cols..(x + 1) * cols];
                    for ((o, &p), &fv) in next.iter_mut().zip(row).zip(f) {
                        if p != 0.0 {
                            *o += vx * (z * fv).exp() * p;
                        }
                    }
                }
            }
        }
        next
    }

    /// Pushes `mu_1` through the first `steps` twisted kernels. Returns the
    /// log of the accumulated scale and the rescaled vector.
    fn push_scaled(&self, z: Complex64, steps: usize) -> (f64, Vec<Complex64>) {
        let mut v: Vec<Complex64> = self.mu1.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        let mut log_scale = 0.0;
        for j in 0..steps {
            let mut next = self.step(j, z, &v);
            let m = next.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
            if m == 0.0 {
                return (f64::NEG_INFINITY, next);
            }
            next.iter_mut().for_each(|c| *c /= m);
            log_scale += m.ln();
            v = next;
        }
        (log_scale, v)
    }

    /// Continuous branch of `log E exp(z S_N)` for small `|z|`.
    ///
    /// The vector is normalized by its (complex) total mass after every
    /// step and the principal logarithms of these normalizers are summed.
    /// A normalizer whose argument exceeds `pi/2` in modulus means the
    /// branch cannot be followed and gives [`Error::Branch`].
    pub fn log_mgf(&self, z: Complex64) -> Result<Complex64> {
        self.log_mgf_upto(z, self.n_steps())
    }

    /// `log E exp(z S_n)` for the first `n` steps.
    pub fn log_mgf_upto(&self, z: Complex64, n: usize) -> Result<Complex64> {
        let mut v: Vec<Complex64> = self.mu1.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n.min(self.n_steps()) {
            let mut next = self.step(j, z, &v);
            let s: Complex64 = next.iter().sum();
            if s.norm() == 0.0 || s.arg().abs() > std::f64::consts::FRAC_PI_2 {
                return Err(Error::Branch {
                    index: j + 1,
                    jump: s.arg(),
                });
            }
            acc += s.ln();
            next.iter_mut().for_each(|c| *c /= s);
            v = next;
        }
        Ok(acc)
    }

    /// Raw moments `E S_n^k`, `k = 0..=kmax`, at each checkpoint `n`
    /// (increasing, at most `N`). Uses the binomial moment-carrying
    /// recursion on `w_k(x) = E[S_n^k ; X_{n+1} = x]`.
    pub fn moment_profile(&self, kmax: usize, checkpoints: &[usize]) -> Result<Vec<Vec<f64>>> {
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("checkpoints must increase".into()));
        }
        if let Some(&last) = checkpoints.last() {
            if last > self.n_steps() || checkpoints[0] == 0 {
                return Err(Error::IndexOutOfRange {
                    what: "moment checkpoint",
                    index: last,
                    min: 1,
                    max: self.n_steps(),
                });
            }
        }
        let binom: Vec<Vec<f64>> = (0..=kmax).map(binomial_row).collect();
        // w[k][x]
        let mut w: Vec<Vec<f64>> = (0..=kmax)
            .map(|k| if k == 0 { self.mu1.clone() } else { vec![0.0; self.mu1.len()] })
            .collect();
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next_cp = 0;
        let mut pows = vec![0.0; kmax + 1];
        for j in 0..self.n_steps() {
            if next_cp == checkpoints.len() {
                break;
            }
            let (rows, cols) = (self.sizes[j], self.sizes[j + 1]);
            let r = &self.kernels[j];
            let f = &self.values[j];
            let mut nw = vec![vec![0.0; cols]; kmax + 1];
            for x in 0..rows {
                for y in 0..cols {
                    let p = r[x * cols + y];
                    if p == 0.0 {
                        continue;
                    }
                    let a = f[x * cols + y];
                    pows[0] = 1.0;
                    for i in 1..=kmax {
                        pows[i] = pows[i - 1] * a;
                    }
                    for k in 0..=kmax {
                        let mut s = 0.0;
                        for i in 0..=k {
                            s += binom[k][i] * w[i][x] * pows[k - i];
                        }
                        nw[k][y] += p * s;
                    }
                }
            }
            if nw.iter().flatten().any(|v| !v.is_finite() || v.abs() > MOMENT_OVERFLOW) {
                return Err(Error::Overflow(format!(
                    "moment recursion exceeded {MOMENT_OVERFLOW:e} at step {}",
                    j + 1
                )));
            }
            w = nw;
            if j + 1 == checkpoints[next_cp] {
                out.push(w.iter().map(|row| row.iter().sum()).collect());
                next_cp += 1;
            }
        }
        Ok(out)
    }
}

/// Characteristic function `Phi_N(xi) = E exp(i xi S_N)` on a grid.
pub fn char_fn(chain: &ChainSpec, f: &AdditiveFunctional, xi_grid: &[f64]) -> Result<CharFnTable> {
    let t = Transfer::new(chain, f)?;
    Ok(CharFnTable {
        xi: xi_grid.to_vec(),
        values: xi_grid.iter().map(|&xi| t.char_fn(xi)).collect(),
    })
}

/// Raw moments `E S_N^k` for `k = 0..=kmax`.
pub fn exact_moments(chain: &ChainSpec, f: &AdditiveFunctional, kmax: usize) -> Result<Vec<f64>> {
    let t = Transfer::new(chain, f)?;
    Ok(t.moment_profile(kmax, &[chain.n_steps()])?.remove(0))
}

/// Central moments `E (S_N - E S_N)^k` for `k = 0..=kmax`, computed by
/// running the moment recursion on the step-centred functional.
pub fn central_moments(chain: &ChainSpec, f: &AdditiveFunctional, kmax: usize) -> Result<Vec<f64>> {
    exact_moments(chain, &f.centered(chain)?, kmax)
}

/// Central moments at several horizons `n` in one pass.
pub fn central_moment_profile(
    chain: &ChainSpec,
    f: &AdditiveFunctional,
    kmax: usize,
    checkpoints: &[usize],
) -> Result<Vec<Vec<f64>>> {
    Transfer::new(chain, &f.centered(chain)?)?.moment_profile(kmax, checkpoints)
}

/// Standard deviation `sigma_N` of `S_N`.
pub fn sigma(chain: &ChainSpec, f: &AdditiveFunctional) -> Result<f64> {
    Ok(central_moments(chain, f, 2)?[2].max(0.0).sqrt())
}

/// Variances of `S_n` for `n = 1..=N` (index `n - 1`).
pub fn variance_profile(chain: &ChainSpec, f: &AdditiveFunctional) -> Result<Vec<f64>> {
    let cps: Vec<usize> = (1..=chain.n_steps()).collect();
    Ok(central_moment_profile(chain, f, 2, &cps)?
        .into_iter()
        .map(|m| m[2])
        .collect())
}

/// Settings of [`tail_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailOptions {
    pub delta: f64,
    pub big_b: f64,
    pub r: u32,
}

/// Result of [`tail_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailIntegral {
    pub value: f64,
    pub upper: f64,
    pub sigma: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// `int_{delta <= |x| <= B sigma_N^{r-1}} |Phi_N(x) / x| dx` by adaptive
/// Simpson quadrature (absolute tolerance `1e-10` times the length of the
/// range, minimum panel width `1e-6`).
pub fn tail_integral(chain: &ChainSpec, f: &AdditiveFunctional, opts: TailOptions) -> Result<TailIntegral> {
    let s = sigma(chain, f)?;
    let upper = opts.big_b * s.powi(opts.r as i32 - 1);
    if !(opts.delta > 0.0) || !(upper > opts.delta) {
        return Err(Error::InvalidParameter(format!(
            "empty tail range [{}, {upper}]",
            opts.delta
        )));
    }
    let t = Transfer::new(chain, f)?;
    let len = upper - opts.delta;
    // Lattice returns of |Phi_N| have width about 1/sigma; start with
    // panels a few times narrower than that.
    let panels = ((len * s.max(1.0) * 4.0).ceil() as usize).clamp(16, 1 << 20);
    let q = adaptive_simpson(
        |x| t.char_fn(x).norm() / x,
        opts.delta,
        upper,
        SimpsonOptions {
            tol: 1e-10 * len,
            min_width: 1e-6,
            initial_panels: panels,
        },
    );
    // |Phi_N(-x)| = |Phi_N(x)|
    Ok(TailIntegral {
        value: 2.0 * q.value,
        upper,
        sigma: s,
        error_estimate: 2.0 * q.error_estimate,
        evaluations: q.evaluations,
    })
}
