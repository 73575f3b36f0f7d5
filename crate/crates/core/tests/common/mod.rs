//! Shared oracles for the integration tests. Everything here is written
//! from the definitions, by enumeration, and does not call the library's
//! numerical routines.
#![allow(dead_code)]

use edgelab::chain::{AdditiveFunctional, ChainSpec};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Random chain with state counts in `1..=max_m` (at least 2 at some
/// time), strictly positive kernels and a random real functional.
pub fn random_chain(seed: u64, max_m: usize, n_steps: usize) -> (ChainSpec, AdditiveFunctional) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let sizes: Vec<usize> = (0..=n_steps).map(|_| rng.gen_range(2..=max_m)).collect();
    let kernels = (0..n_steps)
        .map(|j| {
            let mut k = Array2::from_shape_fn((sizes[j], sizes[j + 1]), |_| 0.05 + rng.gen::<f64>());
            for mut row in k.rows_mut() {
                let s = row.sum();
                row.mapv_inplace(|v| v / s);
            }
            k
        })
        .collect();
    let mut mu1 = Array1::from_shape_fn(sizes[0], |_| 0.1 + rng.gen::<f64>());
    mu1 /= mu1.sum();
    let tables = (0..n_steps)
        .map(|j| Array2::from_shape_fn((sizes[j], sizes[j + 1]), |_| 2.0 * rng.gen::<f64>() - 1.0))
        .collect();
    let chain = ChainSpec::new(kernels, None, mu1, 1e-3).unwrap();
    (chain, AdditiveFunctional::new(tables).unwrap())
}

/// `mu_1 .. mu_{N+1}` by repeated vector-matrix products.
pub fn marginals(chain: &ChainSpec) -> Vec<Vec<f64>> {
    let mut out = vec![chain.mu1().to_vec()];
    for j in 1..=chain.n_steps() {
        let r = chain.kernel(j);
        let prev = out.last().unwrap();
        let next = (0..r.ncols()).map(|y| (0..r.nrows()).map(|x| prev[x] * r[[x, y]]).sum()).collect();
        out.push(next);
    }
    out
}

/// `P(X_n = y | X_{n-1} = x, X_{n+1} = z)` straight from Bayes' rule.
pub fn bridge(chain: &ChainSpec, n: usize, x: usize, z: usize, y: usize) -> f64 {
    let (a, b) = (chain.kernel(n - 1), chain.kernel(n));
    let total: f64 = (0..a.ncols()).map(|w| a[[x, w]] * b[[w, z]]).sum();
    a[[x, y]] * b[[y, z]] / total
}

/// Expectation of `g(Gamma)` over all six-point hexagons at time `n`.
pub fn brute_hexagon<G: Fn(f64) -> Complex64>(chain: &ChainSpec, f: &AdditiveFunctional, n: usize, g: G) -> Complex64 {
    let mu = marginals(chain);
    let (m0, m1, m2, m3) = (chain.size(n - 2), chain.size(n - 1), chain.size(n), chain.size(n + 1));
    let (ra, rc) = (chain.kernel(n - 2), chain.kernel(n));
    let (fa, fb, fc) = (f.table(n - 2), f.table(n - 1), f.table(n));
    let mut acc = Complex64::new(0.0, 0.0);
    for x0 in 0..m0 {
        for x1 in 0..m1 {
            let wx = mu[n - 3][x0] * ra[[x0, x1]];
            for y2 in 0..m2 {
                for y3 in 0..m3 {
                    let wy = mu[n - 1][y2] * rc[[y2, y3]];
                    for x2 in 0..m2 {
                        let bx = bridge(chain, n, x1, y3, x2);
                        for y1 in 0..m1 {
                            let by = bridge(chain, n - 1, x0, y2, y1);
                            let gamma = fa[[x0, x1]] + fb[[x1, x2]] + fc[[x2, y3]]
                                - fa[[x0, y1]]
                                - fb[[y1, y2]]
                                - fc[[y2, y3]];
                            acc += g(gamma) * (wx * wy * bx * by);
                        }
                    }
                }
            }
        }
    }
    acc
}

pub fn brute_u2(chain: &ChainSpec, f: &AdditiveFunctional, n: usize) -> f64 {
    brute_hexagon(chain, f, n, |g| Complex64::new(g * g, 0.0)).re
}

pub fn brute_d2(chain: &ChainSpec, f: &AdditiveFunctional, n: usize, xi: f64) -> f64 {
    brute_hexagon(chain, f, n, |g| Complex64::new(4.0 * (xi * g / 2.0).sin().powi(2), 0.0)).re
}

/// Law of `S_N` by enumerating every path; returns `(value, prob)` pairs.
pub fn enumerate_paths(chain: &ChainSpec, f: &AdditiveFunctional) -> Vec<(f64, f64)> {
    let mut states: Vec<(usize, f64, f64)> = chain.mu1().iter().enumerate().map(|(x, &p)| (x, 0.0, p)).collect();
    for j in 1..=chain.n_steps() {
        let (r, t) = (chain.kernel(j), f.table(j));
        let mut next = Vec::with_capacity(states.len() * r.ncols());
        for &(x, s, p) in &states {
            for y in 0..r.ncols() {
                next.push((y, s + t[[x, y]], p * r[[x, y]]));
            }
        }
        states = next;
    }
    states.into_iter().map(|(_, s, p)| (s, p)).collect()
}

pub fn path_moment(paths: &[(f64, f64)], k: i32) -> f64 {
    paths.iter().map(|(s, p)| p * s.powi(k)).sum()
}

pub fn path_char_fn(paths: &[(f64, f64)], xi: f64) -> Complex64 {
    paths.iter().map(|(s, p)| Complex64::from_polar(*p, xi * s)).sum()
}

/// `(Var S_N, E (S_N - E S_N)^3)` by a forward recursion on
/// `E[T^k ; X_{n+1} = y]`, where `T` sums `f_n` minus its mean at each step.
pub fn variance_and_third(chain: &ChainSpec, f: &AdditiveFunctional) -> (f64, f64) {
    let mu = marginals(chain);
    let mut w = [mu[0].clone(), vec![0.0; mu[0].len()], vec![0.0; mu[0].len()], vec![0.0; mu[0].len()]];
    for n in 1..=chain.n_steps() {
        let (r, t) = (chain.kernel(n), f.table(n));
        let (rows, cols) = r.dim();
        let mean: f64 = (0..rows)
            .map(|x| mu[n - 1][x] * (0..cols).map(|y| r[[x, y]] * t[[x, y]]).sum::<f64>())
            .sum();
        let mut next = [vec![0.0; cols], vec![0.0; cols], vec![0.0; cols], vec![0.0; cols]];
        for x in 0..rows {
            for y in 0..cols {
                let p = r[[x, y]];
                let g = t[[x, y]] - mean;
                next[0][y] += p * w[0][x];
                next[1][y] += p * (w[1][x] + g * w[0][x]);
                next[2][y] += p * (w[2][x] + 2.0 * g * w[1][x] + g * g * w[0][x]);
                next[3][y] += p * (w[3][x] + 3.0 * g * w[2][x] + 3.0 * g * g * w[1][x] + g * g * g * w[0][x]);
            }
        }
        w = next;
    }
    let m: Vec<f64> = w.iter().map(|v| v.iter().sum()).collect();
    // T has mean zero already; subtract rounding residue anyway
    let var = m[2] - m[1] * m[1];
    let third = m[3] - 3.0 * m[1] * m[2] + 2.0 * m[1].powi(3);
    (var, third)
}
