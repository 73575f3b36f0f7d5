//! Sequential Ruelle-Perron-Frobenius triplets and pressure functions.
//!
//! `R_z^{(j)} g(x) = E[g(X_{j+1}) exp(z f_j(X_j, X_{j+1})) | X_j = x]`.
//! The finite chain is padded on the left by `R^{(j)} g = E g(X_1)` for
//! `j <= 0` and on the right by rank-one uniform operators with `f = 0`.
//! With those pads the triplets are exact:
//!
//! - `nu_1 = mu_1`, `lambda_j = nu_j(R^{(j)} 1)`, `nu_{j+1} = (R^{(j)})^* nu_j / lambda_j`;
//! - `h_{N+1} = 1`, `h_j = R^{(j)} h_{j+1} / lambda_j`.
//!
//! A consequence of the left pad is `log E exp(z S_{1,n}) = Pi_{1,n}(z)`
//! exactly; windows starting at `j > 1` differ by a bounded amount.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{AdditiveFunctional, ChainSpec};
use crate::error::{Error, Result};
use crate::numerics::{factorial, linear_fit, median};
use crate::transfer::{sigma, Transfer};

/// Residual above which a sweep is rejected.
pub const RESIDUAL_LIMIT: f64 = 1e-6;
/// Relative stopping tolerance of [`cauchy_derivative`].
pub const CAUCHY_TOL: f64 = 1e-9;
const CAUCHY_MAX_NODES: usize = 1 << 16;

type C64 = Complex64;

/// Default analyticity radius `min(0.5, 0.25 / ||f||_inf)`.
pub fn default_z0(f: &AdditiveFunctional) -> f64 {
    let norm = f.norm_sup();
    if norm > 0.0 {
        (0.25 / norm).min(0.5)
    } else {
        0.5
    }
}

/// RPF triplets of a finite chain at one complex point.
#[derive(Debug, Clone, Serialize)]
pub struct PressureTable {
    pub z: C64,
    /// `lambda_j`, `j = 1..=N` (index `j - 1`).
    pub lambdas: Vec<C64>,
    /// Principal `log lambda_j`.
    pub pressures: Vec<C64>,
    /// `h_j`, `j = 1..=N+1`.
    pub h: Vec<Vec<C64>>,
    /// `nu_j`, `j = 1..=N+1`, as weight vectors.
    pub nu: Vec<Vec<C64>>,
    /// `||R^{(j)} h_{j+1} - lambda_j h_j||_inf`.
    pub residuals: Vec<f64>,
    /// `||(R^{(j)})^* nu_j - lambda_j nu_{j+1}||_1`.
    pub dual_residuals: Vec<f64>,
    /// `max(|nu_j(1) - 1|, |nu_j(h_j) - 1|)`.
    pub normalization: Vec<f64>,
    /// `E f_j(X_j, X_{j+1})`; the centered functional has pressures
    /// `Pi_j(z) - a_j z`.
    pub step_means: Vec<f64>,
}

impl PressureTable {
    pub fn n_steps(&self) -> usize {
        self.lambdas.len()
    }

    /// Pressures of the centered functional.
    pub fn centered_pressures(&self) -> Vec<C64> {
        self.pressures
            .iter()
            .zip(&self.step_means)
            .map(|(p, &a)| p - self.z * a)
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .chain(&self.dual_residuals)
            .chain(&self.normalization)
            .fold(0.0, |a, &b| a.max(b))
    }
}

struct Operators<'a> {
    chain: &'a ChainSpec,
    f: &'a AdditiveFunctional,
    z: C64,
}

impl Operators<'_> {
    fn weight(&self, j: usize, x: usize, y: usize) -> C64 {
        (self.z * self.f.table(j)[[x, y]]).exp() * self.chain.kernel(j)[[x, y]]
    }

    /// `R^{(j)} g`.
    fn apply(&self, j: usize, g: &[C64]) -> Vec<C64> {
        let (rows, cols) = (self.chain.size(j), self.chain.size(j + 1));
        (0..rows)
            .map(|x| (0..cols).map(|y| self.weight(j, x, y) * g[y]).sum())
            .collect()
    }

    /// `(R^{(j)})^* nu`.
    fn apply_dual(&self, j: usize, nu: &[C64]) -> Vec<C64> {
        let (rows, cols) = (self.chain.size(j), self.chain.size(j + 1));
        let mut out = vec![C64::new(0.0, 0.0); cols];
        for x in 0..rows {
            for (y, o) in out.iter_mut().enumerate() {
                *o += nu[x] * self.weight(j, x, y);
            }
        }
        out
    }
}

fn check_disk(f: &AdditiveFunctional, z: C64) -> Result<()> {
    let z0 = default_z0(f);
    if z.norm() > z0 * (1.0 + 1e-12) {
        return Err(Error::OutOfDisk {
            z: format!("{z}"),
            radius: z0,
        });
    }
    Ok(())
}

fn forward_lambdas(chain: &ChainSpec, f: &AdditiveFunctional, z: C64) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let ops = Operators { chain, f, z };
    let mut nu = vec![chain.mu1().iter().map(|&p| C64::new(p, 0.0)).collect::<Vec<_>>()];
    let mut lambdas = Vec::with_capacity(chain.n_steps());
    for j in 1..=chain.n_steps() {
        let w = ops.apply_dual(j, &nu[j - 1]);
        let lambda: C64 = w.iter().sum();
        if lambda.norm() == 0.0 {
            return Err(Error::NonConvergence {
                index: j,
                residual: f64::INFINITY,
            });
        }
        nu.push(w.into_iter().map(|v| v / lambda).collect());
        lambdas.push(lambda);
    }
    Ok((lambdas, nu))
}

fn sup_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Sequential RPF triplets at `z`, `|z| <= z0`.
pub fn rpf_sweep(chain: &ChainSpec, f: &AdditiveFunctional, z: C64) -> Result<PressureTable> {
    f.check_compatible(chain)?;
    check_disk(f, z)?;
    let n = chain.n_steps();
    let ops = Operators { chain, f, z };
    let (lambdas, nu) = forward_lambdas(chain, f, z)?;

    let mut h = vec![Vec::new(); n + 1];
    h[n] = vec![C64::new(1.0, 0.0); chain.size(n + 1)];
    for j in (1..=n).rev() {
        h[j - 1] = ops.apply(j, &h[j]).into_iter().map(|v| v / lambdas[j - 1]).collect();
    }

    let mut residuals = Vec::with_capacity(n);
    let mut dual_residuals = Vec::with_capacity(n);
    for j in 1..=n {
        let lam = lambdas[j - 1];
        let rh = ops.apply(j, &h[j]);
        let lh: Vec<C64> = h[j - 1].iter().map(|v| v * lam).collect();
        residuals.push(sup_diff(&rh, &lh));
        let rn = ops.apply_dual(j, &nu[j - 1]);
        let ln: Vec<C64> = nu[j].iter().map(|v| v * lam).collect();
        dual_residuals.push(rn.iter().zip(&ln).map(|(a, b)| (a - b).norm()).sum());
    }
    let normalization: Vec<f64> = (0..=n)
        .map(|j| {
            let mass: C64 = nu[j].iter().sum();
            let pair: C64 = nu[j].iter().zip(&h[j]).map(|(a, b)| a * b).sum();
            (mass - 1.0).norm().max((pair - 1.0).norm())
        })
        .collect();
    for (idx, r) in residuals.iter().zip(&dual_residuals).map(|(a, b)| a.max(*b)).enumerate() {
        if !(r <= RESIDUAL_LIMIT) {
            return Err(Error::NonConvergence {
                index: idx + 1,
                residual: r,
            });
        }
    }
    if let Some((idx, &r)) = normalization.iter().enumerate().find(|(_, r)| !(**r <= RESIDUAL_LIMIT)) {
        return Err(Error::NonConvergence {
            index: idx + 1,
            residual: r,
        });
    }
    Ok(PressureTable {
        z,
        pressures: lambdas.iter().map(|l| l.ln()).collect(),
        lambdas,
        h,
        nu,
        residuals,
        dual_residuals,
        normalization,
        step_means: f.step_means(chain)?,
    })
}

/// Norms `||R^{j,n} 1 / lambda_{j,n} - nu_{j+n}(1) h_j||_inf` and the
/// fitted geometric rate.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceAudit {
    pub j: usize,
    pub norms: Vec<(usize, f64)>,
    /// `exp` of the log-linear slope over norms above the rounding floor;
    /// `None` when fewer than two such norms exist.
    pub delta: Option<f64>,
    /// `CONVERGENCE_FLOOR * sup |nu(1) h_j|`; smaller norms are rounding noise.
    pub floor: f64,
}

/// Relative size below which convergence norms are treated as zero.
pub const CONVERGENCE_FLOOR: f64 = 1e-12;

pub fn exp_convergence_audit(
    chain: &ChainSpec,
    f: &AdditiveFunctional,
    z: C64,
    j: usize,
    n_list: &[usize],
) -> Result<ConvergenceAudit> {
    let table = rpf_sweep(chain, f, z)?;
    let big_n = chain.n_steps();
    let ops = Operators { chain, f, z };
    let mut norms = Vec::with_capacity(n_list.len());
    let mut scale = 0.0_f64;
    for &n in n_list {
        if j == 0 || n == 0 || j + n > big_n + 1 {
            return Err(Error::IndexOutOfRange {
                what: "convergence window end",
                index: j + n,
                min: j + 1,
                max: big_n + 1,
            });
        }
        let mut v = vec![C64::new(1.0, 0.0); chain.size(j + n)];
        for s in (j..j + n).rev() {
            v = ops.apply(s, &v).into_iter().map(|c| c / table.lambdas[s - 1]).collect();
        }
        let mass: C64 = table.nu[j + n - 1].iter().sum();
        let target: Vec<C64> = table.h[j - 1].iter().map(|c| c * mass).collect();
        scale = scale.max(target.iter().fold(0.0_f64, |a, c| a.max(c.norm())));
        norms.push((n, sup_diff(&v, &target)));
    }
    let floor = CONVERGENCE_FLOOR * scale;
    let pts: Vec<(f64, f64)> = norms
        .iter()
        .filter(|(_, v)| *v > floor)
        .map(|&(n, v)| (n as f64, v.ln()))
        .collect();
    let delta = if pts.len() >= 2 {
        linear_fit(&pts).map(|(slope, _)| slope.exp())
    } else {
        None
    };
    Ok(ConvergenceAudit { j, norms, delta, floor })
}

/// `Pi_{j,n}(z)` with a tracked branch and the matching
/// `Gamma_{j,n}(z) = log E exp(z S_{j,n})`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PressureSum {
    pub pi: C64,
    pub gamma: C64,
    pub difference: f64,
}

/// Branch-tracked pressure sum along the segment `[0, z]` in `steps`
/// pieces; each `lambda_s` may turn by at most `pi/2` per piece.
pub fn pressure_sum(
    chain: &ChainSpec,
    f: &AdditiveFunctional,
    z: C64,
    j: usize,
    n: usize,
    steps: usize,
) -> Result<PressureSum> {
    f.check_compatible(chain)?;
    check_disk(f, z)?;
    let big_n = chain.n_steps();
    if j == 0 || n == 0 || j + n - 1 > big_n {
        return Err(Error::IndexOutOfRange {
            what: "pressure window end",
            index: j + n.saturating_sub(1),
            min: 1,
            max: big_n,
        });
    }
    let steps = steps.max(1);
    let mut args = vec![0.0_f64; n];
    let mut prev = vec![C64::new(1.0, 0.0); n];
    let mut last = Vec::new();
    for k in 1..=steps {
        let zk = z * (k as f64 / steps as f64);
        let (lambdas, _) = forward_lambdas(chain, f, zk)?;
        for (i, s) in (j..j + n).enumerate() {
            let lam = lambdas[s - 1];
            let turn = (lam / prev[i]).arg();
            if turn.abs() > std::f64::consts::FRAC_PI_2 {
                return Err(Error::Branch { index: s, jump: turn });
            }
            args[i] += turn;
            prev[i] = lam;
        }
        last = lambdas;
    }
    let pi: C64 = (0..n).map(|i| C64::new(last[j - 1 + i].norm().ln(), args[i])).sum();
    let gamma = Transfer::new(&chain.window(j, n)?, &f.window(j, n)?)?.log_mgf(z)?;
    Ok(PressureSum {
        pi,
        gamma,
        difference: (gamma - pi).norm(),
    })
}

/// `g^{(k)}(center)` from the Cauchy integral on a circle, trapezoidal
/// rule, doubling `nodes` until the estimate moves by at most
/// `CAUCHY_TOL * max(1, |value|)`.
pub fn cauchy_derivative<G>(g: G, center: C64, k: usize, radius: f64, nodes: usize) -> Result<C64>
where
    G: Fn(C64) -> Result<C64> + Sync,
{
    Ok(cauchy_derivatives(g, center, &[k], radius, nodes)?[0])
}

/// Several derivative orders from shared contour samples.
pub fn cauchy_derivatives<G>(g: G, center: C64, ks: &[usize], radius: f64, nodes: usize) -> Result<Vec<C64>>
where
    G: Fn(C64) -> Result<C64> + Sync,
{
    let kmax = ks.iter().copied().max().unwrap_or(0);
    if !(radius > 0.0) || nodes < 8 * kmax.max(1) {
        return Err(Error::InvalidParameter(format!(
            "contour needs radius > 0 and at least {} nodes (got radius {radius}, {nodes} nodes)",
            8 * kmax.max(1)
        )));
    }
    let sample = |m: usize, total: usize| -> Result<C64> {
        let theta = std::f64::consts::TAU * m as f64 / total as f64;
        g(center + C64::from_polar(radius, theta))
    };
    let mut total = nodes;
    let mut values: Vec<C64> = (0..total).into_par_iter().map(|m| sample(m, total)).collect::<Result<_>>()?;
    let estimate = |values: &[C64]| -> Vec<C64> {
        let len = values.len();
        ks.iter()
            .map(|&k| {
                let s: C64 = values
                    .iter()
                    .enumerate()
                    .map(|(m, v)| v * C64::from_polar(1.0, -(k as f64) * std::f64::consts::TAU * m as f64 / len as f64))
                    .sum();
                s * factorial(k) / (len as f64 * radius.powi(k as i32))
            })
            .collect()
    };
    let mut current = estimate(&values);
    loop {
        if total * 2 > CAUCHY_MAX_NODES {
            let residual = current.iter().map(|v| v.norm()).fold(0.0, f64::max);
            return Err(Error::NonConvergence { index: total, residual });
        }
        let doubled = total * 2;
        let odd: Vec<C64> = (0..total)
            .into_par_iter()
            .map(|m| sample(2 * m + 1, doubled))
            .collect::<Result<_>>()?;
        values = values.into_iter().zip(odd).flat_map(|(a, b)| [a, b]).collect();
        total = doubled;
        let next = estimate(&values);
        let converged = next
            .iter()
            .zip(&current)
            .all(|(a, b)| (a - b).norm() <= CAUCHY_TOL * a.norm().max(1.0));
        current = next;
        if converged {
            return Ok(current);
        }
    }
}

/// Settings of [`growth_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthOptions {
    /// Half-width of the `t` range in units of `sigma_n`.
    pub delta_k: f64,
    /// Points on `[0, delta_k sigma_n]`; `|Lambda^{(k)}|` is even in `t`.
    pub t_points: usize,
    pub nodes: usize,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            delta_k: 0.1,
            t_points: 32,
            nodes: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub sigma_n: f64,
    pub k: usize,
    /// `sup_t |Lambda_n^{(k)}(t)| sigma_n^{k-2}`.
    pub value: f64,
    /// Same quantity at `t = 0`.
    pub at_zero: f64,
    pub argmax_t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthAudit {
    pub rows: Vec<GrowthRow>,
    pub delta_k: f64,
    /// Contour radius in `t` units is `radius_factor * sigma_n`.
    pub radius_factor: f64,
    /// Largest over median table entry, per `k`.
    pub max_over_median: Vec<(usize, f64)>,
}

/// Growth of `Lambda_n(t) = log E exp(i t (S_n - E S_n) / sigma_n) + t^2 / 2`.
pub fn growth_audit(
    chain: &ChainSpec,
    f: &AdditiveFunctional,
    n_list: &[usize],
    ks: &[usize],
    opts: GrowthOptions,
) -> Result<GrowthAudit> {
    if ks.iter().any(|&k| k < 3) {
        return Err(Error::InvalidParameter("growth audit needs k >= 3".into()));
    }
    let fc = f.centered(chain)?;
    let transfer = Transfer::new(chain, &fc)?;
    let z0 = default_z0(&fc);
    let variances = crate::transfer::variance_profile(chain, f)?;
    let mut rows = Vec::new();
    for &n in n_list {
        if n == 0 || n > chain.n_steps() {
            return Err(Error::IndexOutOfRange {
                what: "growth audit n",
                index: n,
                min: 1,
                max: chain.n_steps(),
            });
        }
        let sigma_n = variances[n - 1].max(0.0).sqrt();
        if sigma_n < 1e-6 {
            return Err(Error::DegenerateVariance { sigma: sigma_n });
        }
        let radius = z0 * sigma_n / 2.0;
        let lambda = |w: C64| -> Result<C64> {
            Ok(transfer.log_mgf_upto(C64::i() * w / sigma_n, n)? + w * w / 2.0)
        };
        let ts: Vec<f64> = (0..opts.t_points)
            .map(|i| opts.delta_k * sigma_n * i as f64 / (opts.t_points.max(2) - 1) as f64)
            .collect();
        let derivs: Vec<Vec<C64>> = ts
            .par_iter()
            .map(|&t| cauchy_derivatives(lambda, C64::new(t, 0.0), ks, radius, opts.nodes))
            .collect::<Result<_>>()?;
        for (ki, &k) in ks.iter().enumerate() {
            let scale = sigma_n.powi(k as i32 - 2);
            let (mut best, mut arg) = (0.0, 0.0);
            for (t, d) in ts.iter().zip(&derivs) {
                let v = d[ki].norm() * scale;
                if v > best {
                    best = v;
                    arg = *t;
                }
            }
            rows.push(GrowthRow {
                n,
                sigma_n,
                k,
                value: best,
                at_zero: derivs[0][ki].norm() * scale,
                argmax_t: arg,
            });
        }
    }
    let max_over_median = ks
        .iter()
        .map(|&k| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.value).collect();
            let max = vals.iter().copied().fold(0.0, f64::max);
            let med = if vals.is_empty() { 0.0 } else { median(&vals) };
            (k, if med > 0.0 { max / med } else { f64::INFINITY })
        })
        .collect();
    Ok(GrowthAudit {
        rows,
        delta_k: opts.delta_k,
        radius_factor: z0 / 2.0,
        max_over_median,
    })
}

/// `sup |Lambda^{(k)}(t)|` over `|t| <= 1 / (2 sqrt(E S^2))` for a
/// discrete law, with `Lambda = log E exp(i t S)`.
#[derive(Debug, Clone, Serialize)]
pub struct LogBoundRow {
    pub k: usize,
    pub sup_derivative: f64,
    pub abs_moment: f64,
    /// `sup_derivative / abs_moment`, the smallest admissible constant.
    pub d_k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogBoundReport {
    pub r0: f64,
    pub min_abs_phi: f64,
    pub rows: Vec<LogBoundRow>,
}

/// Derivatives of `log phi` from those of `phi`:
/// `L^{(k)} = [phi^{(k)} - sum_{j=1}^{k-1} C(k-1, j) phi^{(j)} L^{(k-j)}] / phi`.
fn log_derivatives(phi: &[C64]) -> Vec<C64> {
    let kmax = phi.len() - 1;
    let mut l = vec![C64::new(0.0, 0.0); kmax + 1];
    for k in 1..=kmax {
        let binom = crate::numerics::binomial_row(k - 1);
        let mut acc = phi[k];
        for j in 1..k {
            acc -= phi[j] * l[k - j] * binom[j];
        }
        l[k] = acc / phi[0];
    }
    l
}

pub fn charfn_log_bound_check(atoms: &[(f64, f64)], kmax: usize, t_points: usize) -> Result<LogBoundReport> {
    let m2: f64 = atoms.iter().map(|(s, p)| p * s * s).sum();
    if !(m2 > 0.0) {
        return Err(Error::DegenerateVariance { sigma: m2.max(0.0).sqrt() });
    }
    let r0 = 1.0 / (2.0 * m2.sqrt());
    let mut sup = vec![0.0_f64; kmax + 1];
    let mut min_abs_phi = f64::INFINITY;
    let count = t_points.max(2);
    for i in 0..count {
        let t = -r0 + 2.0 * r0 * i as f64 / (count - 1) as f64;
        let phi: Vec<C64> = (0..=kmax)
            .map(|j| {
                atoms
                    .iter()
                    .map(|&(s, p)| C64::new(0.0, s).powu(j as u32) * C64::from_polar(p, t * s))
                    .sum()
            })
            .collect();
        min_abs_phi = min_abs_phi.min(phi[0].norm());
        for (k, d) in log_derivatives(&phi).iter().enumerate() {
            sup[k] = sup[k].max(d.norm());
        }
    }
    let rows = (1..=kmax)
        .map(|k| {
            let abs_moment: f64 = atoms.iter().map(|(s, p)| p * s.abs().powi(k as i32)).sum();
            LogBoundRow {
                k,
                sup_derivative: sup[k],
                abs_moment,
                d_k: if abs_moment > 0.0 { sup[k] / abs_moment } else { 0.0 },
            }
        })
        .collect();
    Ok(LogBoundReport { r0, min_abs_phi, rows })
}

/// Largest `|d_y Pi_j - i d_x Pi_j|` over `j` at `z`, by central
/// differences with step `h`.
pub fn cauchy_riemann_residual(chain: &ChainSpec, f: &AdditiveFunctional, z: C64, h: f64) -> Result<f64> {
    let p = |w: C64| -> Result<Vec<C64>> { Ok(forward_lambdas(chain, f, w)?.0.iter().map(|l| l.ln()).collect()) };
    let (xp, xm) = (p(z + h)?, p(z - h)?);
    let (yp, ym) = (p(z + C64::new(0.0, h))?, p(z - C64::new(0.0, h))?);
    Ok((0..xp.len())
        .map(|j| {
            let dx = (xp[j] - xm[j]) / (2.0 * h);
            let dy = (yp[j] - ym[j]) / (2.0 * h);
            (dy - C64::i() * dx).norm()
        })
        .fold(0.0, f64::max))
}

/// Checks of the local expansion bounds on the real line.
#[derive(Debug, Clone, Serialize)]
pub struct LocalBoundReport {
    /// `max |exp(Lambda_n(t))| / exp(t^2 / 3)` over `|t| <= delta0 sigma_n`.
    pub quadratic_ratio: f64,
    /// `max |P_{k,n}(t)| / (B_k |t|^3 / sigma_n)` over `0 < |t| <= sigma_n`.
    pub cubic_ratio: f64,
    pub b_k: f64,
}

/// `Lambda_n` bound `|exp(Lambda_n(t))| <= exp(t^2/3)` for
/// `|t| <= delta0 sigma_n`, and the truncated cumulant series
/// `P_{k,n}(t) = sum_{j=3}^k Gamma_j (it)^j / (j! sigma^j)` against
/// `B_k |t|^3 / sigma` with `B_k = k max_j |Gamma_j| / sigma^2`.
pub fn local_bound_check(
    chain: &ChainSpec,
    f: &AdditiveFunctional,
    k: usize,
    delta0: f64,
    t_points: usize,
) -> Result<LocalBoundReport> {
    let s = sigma(chain, f)?;
    if s < 1e-6 {
        return Err(Error::DegenerateVariance { sigma: s });
    }
    let fc = f.centered(chain)?;
    let transfer = Transfer::new(chain, &fc)?;
    let count = t_points.max(2);
    let mut quadratic_ratio = 0.0_f64;
    for i in 1..count {
        let t = delta0 * s * i as f64 / (count - 1) as f64;
        let phi = transfer.char_fn(t / s);
        quadratic_ratio = quadratic_ratio.max(phi.norm() * (t * t / 2.0 - t * t / 3.0).exp());
    }
    let moments = crate::transfer::central_moments(chain, f, k)?;
    let table = crate::edgeworth::cumulants_from_moments(&moments)?;
    let cmax = (3..=k).map(|j| table.gammas[j].abs()).fold(0.0, f64::max) / (s * s);
    let b_k = k as f64 * cmax;
    let mut cubic_ratio = 0.0_f64;
    for i in 1..count {
        let t = s * i as f64 / (count - 1) as f64;
        let series: C64 = (3..=k)
            .map(|j| C64::new(0.0, t).powu(j as u32) * (table.gammas[j] / (factorial(j) * s.powi(j as i32))))
            .sum();
        if b_k > 0.0 {
            cubic_ratio = cubic_ratio.max(series.norm() / (b_k * t.powi(3) / s));
        }
    }
    Ok(LocalBoundReport {
        quadratic_ratio,
        cubic_ratio,
        b_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};

    fn coin(n: usize) -> (ChainSpec, AdditiveFunctional) {
        crate::gallery::make_coin_chain(n, 1, 2).unwrap()
    }

    #[test]
    fn zero_gives_trivial_triplet() {
        let (chain, f) = crate::gallery::make_elliptic_random_chain(&crate::gallery::RandomChainParams::new(3, 1.0, 1, 20)).unwrap();
        let t = rpf_sweep(&chain, &f, C64::new(0.0, 0.0)).unwrap();
        for (l, h) in t.lambdas.iter().zip(&t.h) {
            assert!((l - 1.0).norm() < 1e-14);
            assert!(h.iter().all(|v| (v - 1.0).norm() < 1e-14));
        }
    }

    #[test]
    fn out_of_disk() {
        let (chain, f) = coin(4);
        assert!(matches!(rpf_sweep(&chain, &f, C64::new(0.6, 0.0)), Err(Error::OutOfDisk { .. })));
    }

    #[test]
    fn cauchy_examples() {
        let d = cauchy_derivative(|z| Ok(z.exp()), C64::new(0.0, 0.0), 3, 1.0, 64).unwrap();
        assert!((d - 1.0).norm() < 1e-10);
        let d = cauchy_derivative(|z| Ok(z.powu(5)), C64::new(0.0, 0.0), 5, 1.0, 64).unwrap();
        assert!((d - 120.0).norm() < 1e-8);
        assert!(cauchy_derivative(Ok, C64::new(0.0, 0.0), 3, 1.0, 8).is_err());
    }

    #[test]
    fn log_derivative_recursion_gaussian() {
        // phi(t) = exp(-t^2/2) at t = 0.3: L' = -t, L'' = -1, L''' = 0
        let t = 0.3;
        let e = (-t * t / 2.0_f64).exp();
        let phi = vec![
            C64::new(e, 0.0),
            C64::new(-t * e, 0.0),
            C64::new((t * t - 1.0) * e, 0.0),
            C64::new((3.0 * t - t * t * t) * e, 0.0),
        ];
        let l = log_derivatives(&phi);
        assert!((l[1] + t).norm() < 1e-14);
        assert!((l[2] + 1.0).norm() < 1e-14);
        assert!(l[3].norm() < 1e-14);
    }

    #[test]
    fn product_chain_lambdas() {
        // rank-one kernels: lambda_j = E exp(z g_j(X_j))
        let mu = Array1::from(vec![0.2, 0.5, 0.3]);
        let r = Array2::from_shape_fn((3, 3), |(_, y)| mu[y]);
        let chain = ChainSpec::new(vec![r; 4], None, mu.clone(), 0.1).unwrap();
        let g = [0.3, -0.1, 0.5];
        let f = AdditiveFunctional::new(vec![Array2::from_shape_fn((3, 3), |(x, _)| g[x]); 4]).unwrap();
        let z = C64::new(0.1, 0.2);
        let t = rpf_sweep(&chain, &f, z).unwrap();
        let expect: C64 = (0..3).map(|x| (z * g[x]).exp() * mu[x]).sum();
        for l in &t.lambdas {
            assert!((l - expect).norm() < 1e-10);
        }
    }
}
