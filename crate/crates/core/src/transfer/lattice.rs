//! Exact law of `L * S_N` for lattice-valued functionals, by dynamic
//! programming over (state, lattice sum).

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::chain::{AdditiveFunctional, ChainSpec};
use crate::edgeworth::StepCdf;
use crate::error::{Error, Result};

/// Probabilities below this are dropped in floating-point mode.
pub const PRUNE_BELOW: f64 = 1e-300;

/// `P(L * S_N = k)` for `k = k_min, k_min + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    pub l: i64,
    pub k_min: i64,
    pub probs: Vec<f64>,
    /// Exact probabilities, present in rational mode.
    pub exact: Option<Vec<BigRational>>,
}

impl LatticePmf {
    /// Iterates over `(k, P(L S_N = k))` for atoms with positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (self.k_min + i as i64, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Exact total mass in rational mode.
    pub fn exact_total(&self) -> Option<BigRational> {
        self.exact
            .as_ref()
            .map(|v| v.iter().fold(BigRational::zero(), |a, b| a + b))
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(k, p)| p * k as f64).sum::<f64>() / self.l as f64
    }

    /// `E |S_N - E S_N|^p`.
    pub fn central_abs_moment(&self, p: f64) -> f64 {
        let m = self.mean();
        let l = self.l as f64;
        self.atoms().map(|(k, q)| q * (k as f64 / l - m).abs().powf(p)).sum()
    }

    pub fn variance(&self) -> f64 {
        self.central_abs_moment(2.0)
    }

    /// Largest atom of `S_N`.
    pub fn max_atom(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between consecutive support points of `S_N`.
    pub fn min_gap(&self) -> Option<f64> {
        let ks: Vec<i64> = self.atoms().map(|(k, _)| k).collect();
        ks.windows(2)
            .map(|w| (w[1] - w[0]) as f64 / self.l as f64)
            .reduce(f64::min)
    }

    /// Distribution function of `(S_N - mean) / sigma` as a step function.
    pub fn normalized_cdf(&self, mean: f64, sigma: f64) -> Result<StepCdf> {
        let l = self.l as f64;
        let (pts, masses): (Vec<f64>, Vec<f64>) = self
            .atoms()
            .map(|(k, p)| ((k as f64 / l - mean) / sigma, p))
            .unzip();
        StepCdf::from_atoms(pts, masses)
    }
}

/// Law of `L * S_N` for a lattice functional. With `exact` the dynamic
/// programme runs in rational arithmetic, converting kernel entries to the
/// rationals they represent, and never prunes.
pub fn lattice_distribution(chain: &ChainSpec, f: &AdditiveFunctional, exact: bool) -> Result<LatticePmf> {
    Ok(lattice_distributions(chain, f, &[chain.n_steps()], exact)?.remove(0))
}

/// Laws of `L * S_n` at increasing horizons `n` from a single pass.
pub fn lattice_distributions(
    chain: &ChainSpec,
    f: &AdditiveFunctional,
    checkpoints: &[usize],
    exact: bool,
) -> Result<Vec<LatticePmf>> {
    f.check_compatible(chain)?;
    let lat = f
        .lattice()
        .ok_or_else(|| Error::Unsupported("exact lattice law needs a lattice-valued functional".into()))?;
    if checkpoints.is_empty()
        || checkpoints.windows(2).any(|w| w[0] >= w[1])
        || checkpoints[0] == 0
        || *checkpoints.last().unwrap() > chain.n_steps()
    {
        return Err(Error::InvalidParameter(format!(
            "checkpoints must increase within 1..={}",
            chain.n_steps()
        )));
    }
    if exact {
        exact_dp(chain, &lat.numerators, lat.l, checkpoints)
    } else {
        float_dp(chain, &lat.numerators, lat.l, checkpoints)
    }
}

fn float_dp(chain: &ChainSpec, nums: &[ndarray::Array2<i64>], l: i64, cps: &[usize]) -> Result<Vec<LatticePmf>> {
    let mut lo = 0i64;
    // dist[x][k - lo]
    let mut dist: Vec<Vec<f64>> = chain.mu1().iter().map(|&p| vec![p]).collect();
    let mut out = Vec::new();
    let mut next_cp = 0;
    for j in 1..=*cps.last().unwrap() {
        let r = chain.kernel(j);
        let a = &nums[j - 1];
        let width = dist[0].len() as i64;
        let (amin, amax) = a.iter().fold((i64::MAX, i64::MIN), |(m, n), &v| (m.min(v), n.max(v)));
        let new_lo = lo + amin;
        let new_w = (width + amax - amin) as usize;
        let mut next = vec![vec![0.0; new_w]; chain.size(j + 1)];
        for (x, row) in dist.iter().enumerate() {
            if row.iter().all(|&p| p == 0.0) {
                continue;
            }
            for (y, out_row) in next.iter_mut().enumerate() {
                let p = r[[x, y]];
                if p == 0.0 {
                    continue;
                }
                let shift = (a[[x, y]] - amin) as usize;
                for (o, &q) in out_row[shift..shift + row.len()].iter_mut().zip(row) {
                    *o += p * q;
                }
            }
        }
        for row in next.iter_mut() {
            for v in row.iter_mut() {
                if *v < PRUNE_BELOW {
                    *v = 0.0;
                }
            }
        }
        // trim empty edges shared by all states
        let first = (0..new_w).find(|&i| next.iter().any(|r| r[i] != 0.0)).unwrap_or(0);
        let last = (0..new_w).rev().find(|&i| next.iter().any(|r| r[i] != 0.0)).unwrap_or(0);
        dist = next.into_iter().map(|r| r[first..=last].to_vec()).collect();
        lo = new_lo + first as i64;
        if j == cps[next_cp] {
            let w = dist[0].len();
            let probs: Vec<f64> = (0..w).map(|i| dist.iter().map(|r| r[i]).sum()).collect();
            out.push(LatticePmf {
                l,
                k_min: lo,
                probs,
                exact: None,
            });
            next_cp += 1;
        }
    }
    Ok(out)
}

fn exact_dp(chain: &ChainSpec, nums: &[ndarray::Array2<i64>], l: i64, cps: &[usize]) -> Result<Vec<LatticePmf>> {
    let to_q = |v: f64| {
        BigRational::from_float(v).ok_or_else(|| Error::InvalidSpec(format!("non-finite probability {v}")))
    };
    let mut lo = 0i64;
    let mut dist: Vec<Vec<BigRational>> = chain
        .mu1()
        .iter()
        .map(|&p| to_q(p).map(|q| vec![q]))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut next_cp = 0;
    for j in 1..=*cps.last().unwrap() {
        let r = chain.kernel(j);
        let a = &nums[j - 1];
        let width = dist[0].len() as i64;
        let (amin, amax) = a.iter().fold((i64::MAX, i64::MIN), |(m, n), &v| (m.min(v), n.max(v)));
        let new_w = (width + amax - amin) as usize;
        let mut next = vec![vec![BigRational::zero(); new_w]; chain.size(j + 1)];
        for (x, row) in dist.iter().enumerate() {
            for (y, out_row) in next.iter_mut().enumerate() {
                let p = r[[x, y]];
                if p == 0.0 {
                    continue;
                }
                let pq = to_q(p)?;
                let shift = (a[[x, y]] - amin) as usize;
                for (o, q) in out_row[shift..shift + row.len()].iter_mut().zip(row) {
                    if !q.is_zero() {
                        *o += &pq * q;
                    }
                }
            }
        }
        dist = next;
        lo += amin;
        if j == cps[next_cp] {
            let w = dist[0].len();
            let exact: Vec<BigRational> = (0..w)
                .map(|i| dist.iter().fold(BigRational::zero(), |acc, r| acc + &r[i]))
                .collect();
            let probs = exact.iter().map(|q| q.to_f64().unwrap_or(0.0)).collect();
            out.push(LatticePmf {
                l,
                k_min: lo,
                probs,
                exact: Some(exact),
            });
            next_cp += 1;
        }
    }
    Ok(out)
}
