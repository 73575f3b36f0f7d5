//! Hexagon balances and the structure constants built from them.
//!
//! The hexagon at time `n` (`3 <= n <= N`) is the tuple
//! `(x_{n-2}, x_{n-1}, x_n; y_{n-1}, y_n, y_{n+1})` where
//! `(x_{n-2}, x_{n-1})` has the law of `(X_{n-2}, X_{n-1})`,
//! `(y_n, y_{n+1})` independently has the law of `(X_n, X_{n+1})`, and the
//! middle points are drawn from the bridge laws
//! `x_n ~ P(X_n = . | X_{n-1} = x_{n-1}, X_{n+1} = y_{n+1})`,
//! `y_{n-1} ~ P(X_{n-1} = . | X_{n-2} = x_{n-2}, X_n = y_n)`.
//! Its balance is
//!
//! `Gamma = f_{n-2}(x_{n-2}, x_{n-1}) + f_{n-1}(x_{n-1}, x_n) + f_n(x_n, y_{n+1})
//!        - f_{n-2}(x_{n-2}, y_{n-1}) - f_{n-1}(y_{n-1}, y_n) - f_n(y_n, y_{n+1})`,
//!
//! and `u_n^2 = E Gamma^2`, `d_n^2(xi) = E |exp(i xi Gamma) - 1|^2`.
//!
//! Expectations are contracted around the cycle
//! `x_{n-2} - x_{n-1} - y_{n+1} - y_n - x_{n-2}` after summing out the two
//! bridge points, which costs `O(M^3)` per hexagon instead of `O(M^6)`.
//! `d_n^2` is obtained from `E exp(i xi Gamma) - 1` computed in a split
//! representation (mass plus deviation) so that it keeps full relative
//! accuracy for small `xi`.

use std::ops::{Add, Mul};

use ndarray::Array1;
use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{AdditiveFunctional, ChainSpec};
use crate::error::{Error, Result};
use crate::numerics::linear_fit;
use crate::transfer::Transfer;

/// Fixed threshold `||f|| |xi| <= 0.1` of the small-frequency regime.
pub const SMALL_XI: f64 = 0.1;

/// Conditional law of `X_n` given `X_{n-1} = x`, `X_{n+1} = z`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeKernel {
    pub n: usize,
    dims: (usize, usize, usize),
    /// `prob[(x * M_{n+1} + z) * M_n + y]`; rows of impossible `(x, z)`
    /// pairs are zero.
    prob: Vec<f64>,
}

impl BridgeKernel {
    /// `P(X_n = y | X_{n-1} = x, X_{n+1} = z)`.
    pub fn get(&self, x: usize, z: usize, y: usize) -> f64 {
        let (_, mz, my) = self.dims;
        self.prob[(x * mz + z) * my + y]
    }

    /// Sizes `(M_{n-1}, M_{n+1}, M_n)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }
}

/// Bridge kernel at time `n`, `2 <= n <= N`.
pub fn bridge_kernel(chain: &ChainSpec, n: usize) -> Result<BridgeKernel> {
    let big_n = chain.n_steps();
    if n < 2 || n > big_n {
        return Err(Error::IndexOutOfRange {
            what: "bridge time",
            index: n,
            min: 2,
            max: big_n,
        });
    }
    let r1 = chain.kernel(n - 1);
    let r2 = chain.kernel(n);
    let (mx, my, mz) = (chain.size(n - 1), chain.size(n), chain.size(n + 1));
    let mut prob = vec![0.0; mx * mz * my];
    for x in 0..mx {
        for z in 0..mz {
            let base = (x * mz + z) * my;
            let mut total = 0.0;
            for y in 0..my {
                let w = r1[[x, y]] * r2[[y, z]];
                prob[base + y] = w;
                total += w;
            }
            if total > 0.0 {
                prob[base..base + my].iter_mut().for_each(|v| *v /= total);
            }
        }
    }
    Ok(BridgeKernel {
        n,
        dims: (mx, mz, my),
        prob,
    })
}

/// Scalar algebra carried along the contraction: a weight `w` attached to
/// a phase `theta` becomes `edge(w, theta)`.
trait Weight: Copy + Add<Output = Self> + Mul<Output = Self> {
    fn zero() -> Self;
    fn edge(w: f64, theta: f64) -> Self;
}

/// Second-order jet of `E exp(s Gamma)` in `s`.
#[derive(Debug, Clone, Copy)]
struct Jet([f64; 3]);

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([a[0] * b[0], a[0] * b[1] + a[1] * b[0], a[0] * b[2] + a[1] * b[1] + a[2] * b[0]])
    }
}

impl Weight for Jet {
    fn zero() -> Self {
        Jet([0.0; 3])
    }
    fn edge(w: f64, theta: f64) -> Self {
        Jet([w, w * theta, 0.5 * w * theta * theta])
    }
}

/// `w exp(i theta)` stored as `(w, w (exp(i theta) - 1))`, with the phase
/// already multiplied by the frequency.
#[derive(Debug, Clone, Copy)]
struct Split {
    base: f64,
    dev: Complex64,
}

impl Add for Split {
    type Output = Split;
    fn add(self, o: Split) -> Split {
        Split {
            base: self.base + o.base,
            dev: self.dev + o.dev,
        }
    }
}

impl Mul for Split {
    type Output = Split;
    fn mul(self, o: Split) -> Split {
        Split {
            base: self.base * o.base,
            dev: self.dev * o.base + o.dev * self.base + self.dev * o.dev,
        }
    }
}

impl Weight for Split {
    fn zero() -> Self {
        Split {
            base: 0.0,
            dev: Complex64::new(0.0, 0.0),
        }
    }
    fn edge(w: f64, phase: f64) -> Self {
        let h = 0.5 * phase;
        let s = h.sin();
        Split {
            base: w,
            dev: Complex64::new(-2.0 * s * s, phase.sin()) * w,
        }
    }
}

/// Hexagon statistics of one chain and functional, with the marginal laws
/// computed once.
#[derive(Debug, Clone)]
pub struct Hexagon<'a> {
    chain: &'a ChainSpec,
    f: &'a AdditiveFunctional,
    laws: Vec<Array1<f64>>,
}

impl<'a> Hexagon<'a> {
    pub fn new(chain: &'a ChainSpec, f: &'a AdditiveFunctional) -> Result<Self> {
        f.check_compatible(chain)?;
        Ok(Self {
            chain,
            f,
            laws: chain.marginal_laws(),
        })
    }

    fn check_n(&self, n: usize) -> Result<()> {
        let big_n = self.chain.n_steps();
        if n < 3 || n > big_n {
            return Err(Error::IndexOutOfRange {
                what: "hexagon time",
                index: n,
                min: 3,
                max: big_n,
            });
        }
        Ok(())
    }

    /// `E w(Gamma)` with `w` the scalar algebra; `scale` multiplies phases.
    fn contract<W: Weight>(&self, n: usize, scale: f64) -> W {
        let c = self.chain;
        let (ma, mb, me, md) = (c.size(n - 2), c.size(n - 1), c.size(n), c.size(n + 1));
        let (r_a, r_b, r_c) = (c.kernel(n - 2), c.kernel(n - 1), c.kernel(n));
        let (f_a, f_b, f_c) = (self.f.table(n - 2), self.f.table(n - 1), self.f.table(n));
        let (mu_a, mu_c) = (&self.laws[n - 3], &self.laws[n - 1]);
        let mc = me; // y_n lives at time n

        // U(b, d): sum over the bridge point x_n.
        let mut u = vec![W::zero(); mb * md];
        for b in 0..mb {
            for d in 0..md {
                let z: f64 = (0..me).map(|e| r_b[[b, e]] * r_c[[e, d]]).sum();
                if z <= 0.0 {
                    continue;
                }
                let mut acc = W::zero();
                for e in 0..me {
                    let w = r_b[[b, e]] * r_c[[e, d]] / z;
                    if w != 0.0 {
                        acc = acc + W::edge(w, scale * (f_b[[b, e]] + f_c[[e, d]]));
                    }
                }
                u[b * md + d] = acc;
            }
        }
        // V(a, c): sum over the bridge point y_{n-1}.
        let mut v = vec![W::zero(); ma * mc];
        for a in 0..ma {
            for cc in 0..mc {
                let z: f64 = (0..mb).map(|h| r_a[[a, h]] * r_b[[h, cc]]).sum();
                if z <= 0.0 {
                    continue;
                }
                let mut acc = W::zero();
                for h in 0..mb {
                    let w = r_a[[a, h]] * r_b[[h, cc]] / z;
                    if w != 0.0 {
                        acc = acc + W::edge(w, -scale * (f_a[[a, h]] + f_b[[h, cc]]));
                    }
                }
                v[a * mc + cc] = acc;
            }
        }
        // W(a, d) = sum_b A(a, b) U(b, d)
        let mut wad = vec![W::zero(); ma * md];
        for a in 0..ma {
            for b in 0..mb {
                let j = mu_a[a] * r_a[[a, b]];
                if j == 0.0 {
                    continue;
                }
                let ab = W::edge(j, scale * f_a[[a, b]]);
                for d in 0..md {
                    wad[a * md + d] = wad[a * md + d] + ab * u[b * md + d];
                }
            }
        }
        // total = sum_{a, c, d} W(a, d) B(c, d) V(a, c)
        let mut total = W::zero();
        for cc in 0..mc {
            for d in 0..md {
                let j = mu_c[cc] * r_c[[cc, d]];
                if j == 0.0 {
                    continue;
                }
                let cd = W::edge(j, -scale * f_c[[cc, d]]);
                for a in 0..ma {
                    total = total + wad[a * md + d] * cd * v[a * mc + cc];
                }
            }
        }
        total
    }

    /// `u_n^2 = E Gamma(P_n)^2`.
    pub fn u2(&self, n: usize) -> Result<f64> {
        self.check_n(n)?;
        let j: Jet = self.contract(n, 1.0);
        Ok(2.0 * j.0[2])
    }

    /// `E Gamma(P_n)`; zero when the hexagon laws are balanced.
    pub fn mean_balance(&self, n: usize) -> Result<f64> {
        self.check_n(n)?;
        let j: Jet = self.contract(n, 1.0);
        Ok(j.0[1])
    }

    /// `d_n^2(xi) = 4 E sin^2(xi Gamma / 2)`, in `[0, 4]`.
    pub fn d2(&self, n: usize, xi: f64) -> Result<f64> {
        self.check_n(n)?;
        let s: Split = self.contract(n, xi);
        Ok((-2.0 * s.dev.re).clamp(0.0, 4.0))
    }

    /// `E exp(i xi Gamma(P_n))`.
    pub fn balance_char_fn(&self, n: usize, xi: f64) -> Result<Complex64> {
        self.check_n(n)?;
        let s: Split = self.contract(n, xi);
        Ok(s.dev + s.base)
    }

    /// `u_n^2` for `n = 3..=N`, as `(n, u2)`.
    pub fn u2_profile(&self) -> Vec<(usize, f64)> {
        (3..=self.chain.n_steps())
            .map(|n| (n, self.u2(n).expect("valid time")))
            .collect()
    }

    /// `D_n(xi) = sum_{k=3}^{n} d_k^2(xi)`.
    pub fn big_d(&self, n: usize, xi: f64) -> Result<f64> {
        if n > self.chain.n_steps() {
            return Err(Error::IndexOutOfRange {
                what: "horizon",
                index: n,
                min: 0,
                max: self.chain.n_steps(),
            });
        }
        (3..=n).map(|k| self.d2(k, xi)).sum()
    }

    /// Largest `||f_k||_inf` among the three steps of the hexagon at `n`.
    pub fn local_norm(&self, n: usize) -> f64 {
        (n - 2..=n).map(|k| self.f.norm_sup_at(k)).fold(0.0, f64::max)
    }
}

/// `u_n^2` (free-function form).
pub fn hexagon_u2(chain: &ChainSpec, f: &AdditiveFunctional, n: usize) -> Result<f64> {
    Hexagon::new(chain, f)?.u2(n)
}

/// `d_n^2(xi)` (free-function form).
pub fn hexagon_d2(chain: &ChainSpec, f: &AdditiveFunctional, n: usize, xi: f64) -> Result<f64> {
    Hexagon::new(chain, f)?.d2(n, xi)
}

/// A point where the small-frequency lower bound `d^2 >= xi^2 u^2 / 2` fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallXiViolation {
    pub n: usize,
    pub xi: f64,
    pub d2: f64,
    pub bound: f64,
}

/// Checks `d_n^2(xi) >= xi^2 u_n^2 / 2` for every `n` in `3..=n_max` and
/// every grid frequency with `||f|| |xi| <= 0.1`, where `||f||` is the
/// largest sup norm among the hexagon's three steps. Grid points outside
/// the regime are skipped.
pub fn small_xi_check(
    chain: &ChainSpec,
    f: &AdditiveFunctional,
    xi_grid: &[f64],
    n_max: usize,
) -> Result<Vec<SmallXiViolation>> {
    let hx = Hexagon::new(chain, f)?;
    let mut out = Vec::new();
    for n in 3..=n_max.min(chain.n_steps()) {
        let u2 = hx.u2(n)?;
        let norm = hx.local_norm(n);
        for &xi in xi_grid {
            if norm * xi.abs() > SMALL_XI {
                continue;
            }
            let d2 = hx.d2(n, xi)?;
            let bound = 0.5 * xi * xi * u2;
            if d2 < bound {
                out.push(SmallXiViolation { n, xi, d2, bound });
            }
        }
    }
    Ok(out)
}

/// Extremes of `(Var(S_{m+L} - S_m) + 1) / (sum_{n=m+3}^{m+L} u_n^2 + 1)`
/// over all windows with lengths in a range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichReport {
    pub windows: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `(m, L)` of the extreme windows.
    pub argmin: (usize, usize),
    pub argmax: (usize, usize),
}

/// Variance of a single window `S_{m+len} - S_m` together with its
/// hexagon sum, as `(variance, sum u^2)`.
pub fn sandwich_window(chain: &ChainSpec, f: &AdditiveFunctional, m: usize, len: usize) -> Result<(f64, f64)> {
    let var = crate::transfer::central_moments(&chain.window(m + 1, len)?, &f.window(m + 1, len)?, 2)?[2];
    let hx = Hexagon::new(chain, f)?;
    let s: f64 = (m + 3..=m + len).map(|n| hx.u2(n)).sum::<Result<f64>>()?;
    Ok((var, s))
}

/// Scans every window `S_{m+L} - S_m` with `len_min <= L <= len_max`.
pub fn sandwich_check(chain: &ChainSpec, f: &AdditiveFunctional, len_min: usize, len_max: usize) -> Result<SandwichReport> {
    let big_n = chain.n_steps();
    if len_min < 3 || len_min > len_max || len_max > big_n {
        return Err(Error::InvalidParameter(format!(
            "window lengths [{len_min}, {len_max}] do not fit a chain of {big_n} steps"
        )));
    }
    let hx = Hexagon::new(chain, f)?;
    // prefix[n] = sum_{k=3}^{n} u_k^2
    let mut prefix = vec![0.0; big_n + 1];
    for n in 3..=big_n {
        prefix[n] = prefix[n - 1] + hx.u2(n)?;
    }
    let fc = f.centered(chain)?;
    let laws = chain.marginal_laws();
    let mut rep = SandwichReport {
        windows: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        argmin: (0, 0),
        argmax: (0, 0),
    };
    for m in 0..=big_n - len_min {
        // w0 = P(X = .), w1 = E[S; X = .], w2 = E[S^2; X = .] for the window sum
        let mut w0 = laws[m].to_vec();
        let mut w1 = vec![0.0; w0.len()];
        let mut w2 = vec![0.0; w0.len()];
        for len in 1..=len_max.min(big_n - m) {
            let step = m + len;
            let r = chain.kernel(step);
            let t = fc.table(step);
            let cols = chain.size(step + 1);
            let mut n0 = vec![0.0; cols];
            let mut n1 = vec![0.0; cols];
            let mut n2 = vec![0.0; cols];
            for x in 0..w0.len() {
                for y in 0..cols {
                    let p = r[[x, y]];
                    if p == 0.0 {
                        continue;
                    }
                    let a = t[[x, y]];
                    n0[y] += p * w0[x];
                    n1[y] += p * (w1[x] + a * w0[x]);
                    n2[y] += p * (w2[x] + 2.0 * a * w1[x] + a * a * w0[x]);
                }
            }
            w0 = n0;
            w1 = n1;
            w2 = n2;
            if len >= len_min {
                let mean: f64 = w1.iter().sum();
                let var = w2.iter().sum::<f64>() - mean * mean;
                let hexsum = if step >= m + 3 { prefix[step] - prefix[(m + 2).max(2)] } else { 0.0 };
                let ratio = (var + 1.0) / (hexsum + 1.0);
                rep.windows += 1;
                if ratio < rep.min_ratio {
                    rep.min_ratio = ratio;
                    rep.argmin = (m, len);
                }
                if ratio > rep.max_ratio {
                    rep.max_ratio = ratio;
                    rep.argmax = (m, len);
                }
            }
        }
    }
    Ok(rep)
}

/// One grid point of the decay audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayPoint {
    pub xi: f64,
    pub abs_phi: f64,
    pub big_d: f64,
}

/// Fit of `|Phi_N(xi)| <= C exp(-c D_N(xi))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Least-squares slope of `-log |Phi_N|` against `D_N` over points with `D_N >= 1`.
    pub c: f64,
    /// Smallest constant for which the bound holds at the fitted points.
    #[serde(rename = "C")]
    pub big_c: f64,
    /// Grid points (fitted or not) where the fitted bound fails.
    pub violations: Vec<DecayPoint>,
    /// No grid point had `D_N >= 1`.
    pub inconclusive: bool,
    pub points: Vec<DecayPoint>,
}

/// Decay audit of the characteristic function against `D_N`.
pub fn decay_check(chain: &ChainSpec, f: &AdditiveFunctional, xi_grid: &[f64]) -> Result<DecayFit> {
    let hx = Hexagon::new(chain, f)?;
    let t = Transfer::new(chain, f)?;
    let big_n = chain.n_steps();
    let points: Vec<DecayPoint> = xi_grid
        .iter()
        .map(|&xi| {
            Ok(DecayPoint {
                xi,
                abs_phi: t.char_fn(xi).norm(),
                big_d: hx.big_d(big_n, xi)?,
            })
        })
        .collect::<Result<_>>()?;
    let fitted: Vec<&DecayPoint> = points.iter().filter(|p| p.big_d >= 1.0 && p.abs_phi > 0.0).collect();
    let line: Vec<(f64, f64)> = fitted.iter().map(|p| (p.big_d, -p.abs_phi.ln())).collect();
    let Some((c, _)) = linear_fit(&line) else {
        return Ok(DecayFit {
            c: f64::NAN,
            big_c: f64::NAN,
            violations: Vec::new(),
            inconclusive: true,
            points,
        });
    };
    let big_c = fitted
        .iter()
        .map(|p| p.abs_phi * (c * p.big_d).exp())
        .fold(0.0, f64::max);
    let violations = points
        .iter()
        .filter(|p| p.abs_phi > big_c * (-c * p.big_d).exp() * (1.0 + 1e-12))
        .copied()
        .collect();
    Ok(DecayFit {
        c,
        big_c,
        violations,
        inconclusive: false,
        points,
    })
}
