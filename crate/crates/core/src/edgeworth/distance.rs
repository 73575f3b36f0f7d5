use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, SimpsonOptions};

/// Right-continuous step distribution function with jumps at `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    points: Vec<f64>,
    /// `cum[i] = F(points[i])`.
    cum: Vec<f64>,
}

impl StepCdf {
    /// From atom locations and masses (any order; ties are merged).
    pub fn from_atoms(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.len() != masses.len() {
            return Err(Error::DimensionMismatch("atoms and masses differ in length".into()));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(masses).collect();
        if let Some(i) = pairs.iter().position(|p| !(p.1 >= 0.0) || !p.0.is_finite()) {
            return Err(Error::NonMonotone(i));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pts = Vec::with_capacity(pairs.len());
        let mut cum = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for (x, m) in pairs {
            acc += m;
            if pts.last() == Some(&x) {
                *cum.last_mut().unwrap() = acc;
            } else {
                pts.push(x);
                cum.push(acc);
            }
        }
        Ok(Self { points: pts, cum })
    }

    /// Empirical distribution function of sorted samples.
    pub fn from_sorted_samples(samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        let mut pts: Vec<f64> = Vec::with_capacity(samples.len());
        let mut cum: Vec<f64> = Vec::with_capacity(samples.len());
        for (i, x) in samples.into_iter().enumerate() {
            let c = (i + 1) as f64 / n;
            if pts.last() == Some(&x) {
                *cum.last_mut().unwrap() = c;
            } else {
                pts.push(x);
                cum.push(c);
            }
        }
        Self { points: pts, cum }
    }

    /// From a table of `(t_i, F(t_i))` with increasing `t_i`; `F` must be
    /// non-decreasing with values in `[0, 1]`.
    pub fn from_table(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch("points and values differ in length".into()));
        }
        for i in 0..values.len() {
            let bad_range = !(0.0..=1.0 + 1e-12).contains(&values[i]);
            let bad_order = i > 0 && (values[i] < values[i - 1] || points[i] <= points[i - 1]);
            if bad_range || bad_order {
                return Err(Error::NonMonotone(i));
            }
        }
        Ok(Self { points, cum: values })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.cum
    }

    /// `F(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.points.partition_point(|&x| x <= t);
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    /// `F(points[i]-)`.
    fn left(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    /// Largest jump.
    pub fn max_jump(&self) -> f64 {
        (0..self.cum.len()).map(|i| self.cum[i] - self.left(i)).fold(0.0, f64::max)
    }
}

/// `sup_t |F(t) - G(t)|` for a step function `F` and a continuous `G`.
///
/// Both one-sided limits of `F` are compared with `G` at every jump. On the
/// flat pieces of `F` the function `G` may be non-monotone, so `G` is also
/// evaluated on `grid` and the best grid candidates are refined by
/// golden-section search inside their flat piece until the bracket is
/// narrower than `1e-10`.
pub fn kolmogorov_distance<G: Fn(f64) -> f64>(f: &StepCdf, g: G, grid: &[f64]) -> f64 {
    let mut best = 0.0_f64;
    for (i, &x) in f.points.iter().enumerate() {
        let gx = g(x);
        best = best.max((f.cum[i] - gx).abs()).max((f.left(i) - gx).abs());
    }
    let mut cands: Vec<(f64, f64)> = grid.iter().map(|&t| ((f.eval(t) - g(t)).abs(), t)).collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    for &(v, t) in cands.iter().take(8) {
        best = best.max(v);
        // flat piece of F containing t
        let i = f.points.partition_point(|&x| x <= t);
        let lo = if i == 0 { t - 1.0 } else { f.points[i - 1] };
        let hi = if i == f.points.len() { t + 1.0 } else { f.points[i] };
        let level = f.eval(t);
        let h = grid_step(grid, t);
        let a = lo.max(t - h);
        let b = hi.min(t + h);
        best = best.max(golden_max(|s| (level - g(s)).abs(), a, b));
    }
    best
}

fn grid_step(grid: &[f64], t: f64) -> f64 {
    let i = grid.partition_point(|&x| x < t);
    let left = if i > 0 { t - grid[i - 1] } else { 0.0 };
    let right = if i + 1 < grid.len() { grid[i + 1] - t } else { 0.0 };
    left.max(right).max(1e-6)
}

fn golden_max<H: Fn(f64) -> f64>(h: H, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    let mut best = h(a).max(h(b)).max(hc).max(hd);
    while b - a > 1e-10 {
        if hc > hd {
            b = d;
            d = c;
            hd = hc;
            c = b - r * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + r * (b - a);
            hd = h(d);
        }
        best = best.max(hc).max(hd);
    }
    best
}

/// Esseen smoothing inequality:
/// `sup|F - G| <= 2 int_{-T}^{T} |(f(t) - g(t)) / t| dt + 24 sup|G'| / (pi T)`,
/// with `f`, `g` the Fourier-Stieltjes transforms of `F`, `G`.
pub fn esseen_bound<F, H>(f: F, g: H, big_t: f64, g_density_sup: f64) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
    H: Fn(f64) -> Complex64,
{
    if !(big_t > 0.0) {
        return Err(Error::InvalidParameter(format!("T = {big_t} must be positive")));
    }
    // the integrand has a removable singularity at 0
    let eps = 1e-9 * big_t;
    let h = |t: f64| {
        let s = if t.abs() < eps { eps.copysign(if t == 0.0 { 1.0 } else { t }) } else { t };
        ((f(s) - g(s)) / s).norm()
    };
    let opts = SimpsonOptions {
        tol: 1e-10,
        min_width: 1e-6,
        initial_panels: 64,
    };
    let pos = adaptive_simpson(h, 0.0, big_t, opts);
    let neg = adaptive_simpson(h, -big_t, 0.0, opts);
    Ok(2.0 * (pos.value + neg.value) + 24.0 * g_density_sup / (std::f64::consts::PI * big_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_cdf;

    #[test]
    fn point_mass_against_normal() {
        let f = StepCdf::from_atoms(vec![0.0], vec![1.0]).unwrap();
        let d = kolmogorov_distance(&f, normal_cdf, &[-1.0, 0.0, 1.0]);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_monotone_table_rejected() {
        assert!(matches!(
            StepCdf::from_table(vec![0.0, 1.0, 2.0], vec![0.2, 0.1, 1.0]),
            Err(Error::NonMonotone(1))
        ));
    }

    #[test]
    fn esseen_equal_transforms() {
        let g = |t: f64| Complex64::new((-t * t / 2.0).exp(), 0.0);
        let b = esseen_bound(g, g, 5.0, 0.4).unwrap();
        assert!((b - 24.0 * 0.4 / (std::f64::consts::PI * 5.0)).abs() < 1e-15);
    }
}
