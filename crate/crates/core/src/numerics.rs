//! Small numerical helpers shared by the modules: the normal law,
//! adaptive Simpson quadrature, least-squares lines and order statistics.

use libm::erfc;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal distribution function, accurate to about 1e-16.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Outcome of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Panels accepted only because they reached the minimum width.
    pub floored_panels: usize,
}

/// Settings for [`adaptive_simpson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpsonOptions {
    /// Absolute tolerance for the whole interval, shared between panels in
    /// proportion to their width.
    pub tol: f64,
    /// Panels narrower than this are accepted as they are.
    pub min_width: f64,
    /// Number of equal panels to start from, so that narrow features are
    /// not missed by the first coarse estimate.
    pub initial_panels: usize,
}

impl Default for SimpsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            min_width: 1e-6,
            initial_panels: 16,
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: SimpsonOptions) -> Quadrature {
    let mut out = Quadrature {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
        floored_panels: 0,
    };
    if b <= a {
        return out;
    }
    let total = b - a;
    let panels = opts.initial_panels.max(1);
    let h = total / panels as f64;
    // (left, right, f(left), f(mid), f(right), whole-panel estimate)
    let mut stack: Vec<(f64, f64, f64, f64, f64, f64)> = Vec::new();
    let mut fl = f(a);
    out.evaluations += 1;
    for i in 0..panels {
        let l = a + h * i as f64;
        let r = if i + 1 == panels { b } else { a + h * (i + 1) as f64 };
        let m = 0.5 * (l + r);
        let fm = f(m);
        let fr = f(r);
        out.evaluations += 2;
        let s = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
        stack.push((l, r, fl, fm, fr, s));
        fl = fr;
    }
    while let Some((l, r, fl, fm, fr, whole)) = stack.pop() {
        let m = 0.5 * (l + r);
        let lm = 0.5 * (l + m);
        let rm = 0.5 * (m + r);
        let flm = f(lm);
        let frm = f(rm);
        out.evaluations += 2;
        let left = (m - l) / 6.0 * (fl + 4.0 * flm + fm);
        let right = (r - m) / 6.0 * (fm + 4.0 * frm + fr);
        let diff = left + right - whole;
        let local_tol = opts.tol * (r - l) / total;
        if diff.abs() <= 15.0 * local_tol || (r - l) <= opts.min_width {
            if diff.abs() > 15.0 * local_tol {
                out.floored_panels += 1;
            }
            out.value += left + right + diff / 15.0;
            out.error_estimate += diff.abs() / 15.0;
        } else {
            stack.push((l, m, fl, flm, fm, left));
            stack.push((m, r, fm, frm, fr, right));
        }
    }
    out
}

/// Ordinary least-squares line through `(x, y)` points, as `(slope, intercept)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Binomial coefficients `C(n, 0..=n)` as floats.
pub fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n + 1 - k) as f64 / k as f64;
    }
    row
}

/// `n!` as a float.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14, "{}", normal_cdf(1.0));
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        assert!(normal_cdf(-10.0) < 1e-22);
    }

    #[test]
    fn simpson_integrates_smooth_function() {
        let q = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, SimpsonOptions::default());
        assert!((q.value - 2.0).abs() < 1e-11);
        assert_eq!(q.floored_panels, 0);
    }

    #[test]
    fn simpson_resolves_narrow_peak() {
        let w = 1e-3;
        let f = |x: f64| (-(x - 7.3).powi(2) / (2.0 * w * w)).exp();
        let q = adaptive_simpson(f, 0.0, 10.0, SimpsonOptions { initial_panels: 4096, ..Default::default() });
        let exact = w * SQRT_2PI;
        assert!((q.value - exact).abs() < 1e-10, "{} vs {}", q.value, exact);
    }

    #[test]
    fn line_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 - 1.0)).collect();
        let (s, c) = linear_fit(&pts).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && (c + 1.0).abs() < 1e-14);
    }
}
