//! Acceptance run over the twelve criteria. Prints one PASS/FAIL line per
//! criterion. Criteria 7 and 11 are known to fail at desk scale (see
//! README); any other failure makes the run exit with status 1.
//!
//! Runs without the libtest harness so the lines are always shown.

mod common;

use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Pow};

use edgelab::chain::REDUCIBILITY_LABEL;
use edgelab::edgeworth::{cumulants_from_moments, EdgeworthExpansion};
use edgelab::experiments::{
    holder_decay_fit, holder_xi_grid, run_berry_esseen, run_counterexample, run_edgeworth_order, ChainSource,
    ExperimentConfig, GeneratorSpec, Mode,
};
use edgelab::gallery::{
    cantor_eval, gallery_chain, make_circle_holder_chain, plateau_measure, standard_gallery, BaseExpansion,
    CantorParams, CircleParams, GalleryEntry,
};
use edgelab::hexagon::{decay_check, hexagon_d2, hexagon_u2, sandwich_check, small_xi_check};
use edgelab::numerics::normal_pdf;
use edgelab::rpf::{default_z0, exp_convergence_audit, growth_audit, pressure_sum, rpf_sweep, GrowthOptions};
use edgelab::transfer::central_moments;

type Verdict = Result<(bool, String), String>;
type Criterion<'a> = (usize, &'static str, Box<dyn Fn() -> Verdict + 'a>);

/// Criteria whose failure is analysed rather than fixed.
const KNOWN_FAILURES: [usize; 2] = [7, 11];

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn dyadic(lo: usize, hi: usize) -> Vec<usize> {
    (0..).map(|k| lo << k).take_while(|&n| n <= hi).collect()
}

fn beta_config(experiment: &str, sweep: Vec<usize>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        experiment,
        ChainSource::Generator {
            generator: GeneratorSpec::BetaLattice { beta: 0.3, c: 0.35 },
        },
    );
    c.n_sweep = sweep;
    c.mode = Mode::Exact;
    c
}

fn seed42(g: &[GalleryEntry]) -> Vec<&GalleryEntry> {
    g.iter().filter(|e| e.name.contains("s42")).collect()
}

fn hexagon_oracle() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for seed in 0..20u64 {
        let (chain, f) = common::random_chain(seed, 4, 6);
        for n in 3..=6 {
            let u = hexagon_u2(&chain, &f, n).map_err(err)?;
            worst = worst.max((u - common::brute_u2(&chain, &f, n)).abs());
            for xi in [0.3, 1.0, 3.0] {
                let d = hexagon_d2(&chain, &f, n, xi).map_err(err)?;
                worst = worst.max((d - common::brute_d2(&chain, &f, n, xi)).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-10 && secs < 10.0, format!("max abs diff {worst:.2e}, {secs:.2} s")))
}

fn small_frequency(g: &[GalleryEntry]) -> Verdict {
    let mut total = 0;
    let mut points = 0;
    for e in g {
        let norm = e.f.norm_sup();
        let grid: Vec<f64> = (1..=16).map(|i| 0.1 / norm * i as f64 / 16.0).collect();
        let n_max = e.chain.n_steps().min(1024);
        let v = small_xi_check(&e.chain, &e.f, &grid, n_max).map_err(err)?;
        total += v.len();
        points += (n_max - 2) * grid.len();
    }
    Ok((total == 0, format!("{total} violations over {points} (n, xi) points on {} chains", g.len())))
}

fn sandwich(g: &[GalleryEntry]) -> Verdict {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for e in seed42(g) {
        let r = sandwich_check(&e.chain, &e.f, 50, 200).map_err(err)?;
        lo = lo.min(r.min_ratio);
        hi = hi.max(r.max_ratio);
    }
    Ok((
        lo >= 1.0 / 64.0 && hi <= 64.0,
        format!("window ratios in [{lo:.4}, {hi:.4}] over {} chains", seed42(g).len()),
    ))
}

fn decay(g: &[GalleryEntry]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for e in g.iter().filter(|e| e.chain.n_steps() >= 1024) {
        let (chain, f) = (e.chain.truncate(1024).map_err(err)?, e.f.window(1, 1024).map_err(err)?);
        let norm = f.norm_sup();
        let grid: Vec<f64> = (0..48).map(|i| 0.01 * 300f64.powf(i as f64 / 47.0) / norm).collect();
        let fit = decay_check(&chain, &f, &grid).map_err(err)?;
        ok &= !fit.inconclusive && fit.c > 0.0 && fit.violations.is_empty();
        parts.push(format!("{} c={:.3} viol={}", e.name, fit.c, fit.violations.len()));
    }
    Ok((ok, parts.join("; ")))
}

fn rpf_audits(g: &[GalleryEntry]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for e in g.iter().filter(|e| e.name.starts_with("random-m") && !e.name.contains("lattice") && !e.name.contains("decay")) {
        let z0 = default_z0(&e.f);
        let mut residual = 0.0_f64;
        for r in 1..=4 {
            for a in 0..4 {
                let z = Complex64::from_polar(z0 * r as f64 / 4.0, std::f64::consts::PI * (0.125 + 0.5 * a as f64));
                residual = residual.max(rpf_sweep(&e.chain, &e.f, z).map_err(err)?.max_residual());
            }
        }
        let n_list: Vec<usize> = (1..=32).collect();
        let conv = exp_convergence_audit(&e.chain, &e.f, Complex64::new(z0 / 2.0, 0.0), 1, &n_list).map_err(err)?;
        let delta = conv.delta.unwrap_or(0.0);
        let z = Complex64::from_polar(z0 / 2.0, std::f64::consts::FRAC_PI_4);
        let mut bounded = true;
        let mut diffs = Vec::new();
        for j in [1, 5] {
            let d: Vec<f64> = dyadic(16, 1024)
                .into_iter()
                .map(|n| pressure_sum(&e.chain, &e.f, z, j, n, 16).map(|p| p.difference))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let max = d.iter().copied().fold(0.0, f64::max);
            bounded &= max <= 2.0 * d[0] + 1.0;
            diffs.push(format!("j={j} max {max:.2e}"));
        }
        ok &= residual <= 1e-9 && delta <= 0.9 && bounded;
        parts.push(format!("{}: residual {residual:.1e}, delta {delta:.3}, {}", e.name, diffs.join(", ")));
    }
    Ok((ok, parts.join("; ")))
}

fn growth() -> Verdict {
    let names = [
        "random-m4-s42",
        "random-m3-s42",
        "random-m4-s42-lattice64",
        "random-m3-s42-decay0.3",
        "rare-jump-m3-s42",
        "coin-half",
        "beta-lattice-0.3-0.35",
    ];
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for name in names {
        let e = gallery_chain(name, Some(4096)).map_err(err)?;
        let audit = growth_audit(&e.chain, &e.f, &dyadic(64, 4096), &[3, 4], GrowthOptions::default()).map_err(err)?;
        let m = audit.max_over_median.iter().map(|x| x.1).fold(0.0, f64::max);
        worst = worst.max(m);
        parts.push(format!("{name} {m:.2}"));
    }
    Ok((worst <= 5.0, format!("max/median per chain: {}", parts.join(", "))))
}

fn berry_esseen_band() -> Verdict {
    let start = Instant::now();
    let mut c = beta_config("berry-esseen", dyadic(64, 4096));
    c.thresholds.band_factor = Some(2.0);
    let rep = run_berry_esseen(&c).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let p: Vec<f64> = rep.summary["products"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let ratio = rep.summary["max_over_min"].as_f64().unwrap();
    Ok((
        rep.passed() && secs < 300.0,
        format!(
            "dist*sigma {:.4} .. {:.4} (max/min {ratio:.2}), {secs:.1} s",
            p.iter().copied().fold(f64::INFINITY, f64::min),
            p.iter().copied().fold(0.0, f64::max)
        ),
    ))
}

fn order_one() -> Verdict {
    let name = "rare-jump-m3-s42";
    let e = gallery_chain(name, Some(4096)).map_err(err)?;
    if e.f.labels().get(REDUCIBILITY_LABEL).map(String::as_str) != Some("irreducible") {
        return Ok((false, format!("{name} is not labelled irreducible")));
    }
    let mut a3 = Vec::new();
    for n in [1024, 2048, 4096] {
        let (c, f) = (e.chain.truncate(n).map_err(err)?, e.f.window(1, n).map_err(err)?);
        let t = cumulants_from_moments(&central_moments(&c, &f, 3).map_err(err)?).map_err(err)?;
        a3.push(t.a(3));
    }
    let a3_stable = a3.iter().all(|&a| a.abs() >= 0.5 * a3[2].abs() && a.abs() <= 2.0 * a3[2].abs()) && a3[2] != 0.0;
    let mut c = ExperimentConfig::new("expansion-test", ChainSource::Gallery { name: name.into() });
    c.n_sweep = vec![4096];
    c.orders = vec![0, 1];
    c.mode = Mode::Mc;
    c.n_paths = Some(10_000_000);
    c.thresholds.improvement = Some(0.5);
    c.thresholds.noise_margin = Some(3.0);
    let rep = run_edgeworth_order(&c).map_err(err)?;
    let rows = rep.summary["rows"].as_array().unwrap();
    let dist = |r: u64| rows.iter().find(|x| x["r"] == r).unwrap()["dist"].as_f64().unwrap();
    let band = rows[0]["band"].as_f64().unwrap();
    Ok((
        rep.passed() && a3_stable,
        format!(
            "a_3 at N=1024/2048/4096: {:.3}/{:.3}/{:.3}; dist to normal {:.2e}, to order 1 {:.2e} (ratio {:.3}), DKW band {band:.2e}",
            a3[0],
            a3[1],
            a3[2],
            dist(0),
            dist(1),
            dist(1) / dist(0)
        ),
    ))
}

fn optimal_order() -> Verdict {
    let mut c = beta_config("expansion-test", dyadic(256, 16384));
    c.orders = vec![2, 3];
    c.thresholds.bounded_orders = vec![2];
    c.thresholds.bounded_ratio = Some(1.2);
    c.thresholds.growing_orders = vec![3];
    c.thresholds.growing_ratio = Some(2.0);
    let rep = run_edgeworth_order(&c).map_err(err)?;
    let mut a = beta_config("counterexample", dyadic(256, 16384));
    a.thresholds.atom_growth = Some(1.0);
    let atoms = run_counterexample(&a).map_err(err)?;
    let r = &rep.summary["last_over_first"];
    Ok((
        rep.passed() && atoms.passed(),
        format!(
            "order 2 last/first {:.3}, order 3 last/first {:.3}, max_atom*sigma^3 last/first {:.3}",
            r["2"].as_f64().unwrap(),
            r["3"].as_f64().unwrap(),
            atoms.summary["atom_growth"].as_f64().unwrap()
        ),
    ))
}

fn cantor_exact() -> Verdict {
    let mut ok = true;
    let mut checked = 0usize;
    for (p, k) in [(3u32, 1u32), (3, 2), (5, 1)] {
        let params = CantorParams::new(p, k).map_err(err)?;
        let ratio = BigRational::new(p.into(), params.base().into());
        for n in 0..=6u32 {
            ok &= plateau_measure(&params, n) == Pow::pow(&ratio, n);
        }
        let base = params.base() as usize;
        let depth = 5u32;
        let mut prev = BigRational::from_integer(0.into());
        for j in 0..base.pow(depth) {
            let v = cantor_eval(&params, &BaseExpansion::of_cell(j, base as u32, depth)).map_err(err)?;
            ok &= v >= prev;
            prev = v;
            checked += 1;
        }
        ok &= cantor_eval(&params, &BaseExpansion::one()).map_err(err)? == BigRational::one() && prev <= BigRational::one();
    }
    Ok((ok, format!("plateau identities n <= 6 and {checked} depth-5 grid points monotone")))
}

fn holder_surrogate() -> Verdict {
    let alpha = 3f64.ln() / 5f64.ln();
    let (chain, f) = make_circle_holder_chain(&CircleParams::new(250, alpha, 42, 256)).map_err(err)?;
    let fit = holder_decay_fit(&chain, &f, alpha, &holder_xi_grid()).map_err(err)?;
    Ok((
        fit.theta <= fit.target + 0.15,
        format!(
            "theta {:.3} vs 1-1/alpha + 0.15 = {:.3}; c {:.3e}; V_N {:.3}; beyond the peak (xi {:.1}) slope {:.3}; min -log|Phi|/(V xi^(1-1/alpha)) {:.3}",
            fit.theta,
            fit.target + 0.15,
            fit.c,
            fit.variance,
            fit.peak_xi,
            fit.tail_theta.unwrap_or(f64::NAN),
            fit.min_scaled
        ),
    ))
}

fn pipeline_identities(g: &[GalleryEntry]) -> Verdict {
    let mut worst_p1 = 0.0_f64;
    let mut worst_ft = 0.0_f64;
    let h = 0.01;
    let xs: Vec<f64> = (0..=8000).map(|i| -40.0 + h * i as f64).collect();
    let ts: Vec<f64> = (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect();
    for e in g {
        let moments = central_moments(&e.chain, &e.f, 5).map_err(err)?;
        let table = cumulants_from_moments(&moments).map_err(err)?;
        let exp = EdgeworthExpansion::new(&table, 3).map_err(err)?;
        let (var, third) = common::variance_and_third(&e.chain, &e.f);
        let c = third / (6.0 * var);
        let want = [0.0, -3.0 * c, 0.0, c];
        let got = exp.p_polys[0].coeffs();
        for (i, w) in want.iter().enumerate() {
            let g = got.get(i).copied().unwrap_or(0.0);
            worst_p1 = worst_p1.max((g - w).abs() / c.abs().max(1.0));
        }
        for j in 0..3 {
            let (p, a) = (&exp.p_polys[j], &exp.a_polys[j]);
            let weights: Vec<f64> = xs.iter().map(|&x| normal_pdf(x) * p.eval(x)).collect();
            let mut scale = 1.0_f64;
            let mut diff = 0.0_f64;
            for &t in &ts {
                let ft: Complex64 = xs
                    .iter()
                    .zip(&weights)
                    .map(|(&x, &w)| Complex64::from_polar(w, t * x))
                    .sum::<Complex64>()
                    * h;
                let it = Complex64::new(0.0, t);
                let aj: Complex64 = a.coeffs().iter().enumerate().map(|(k, &ck)| it.powu(k as u32) * ck).sum();
                let target = aj * (-t * t / 2.0).exp();
                scale = scale.max(target.norm());
                diff = diff.max((ft - target).norm());
            }
            worst_ft = worst_ft.max(diff / scale);
        }
    }
    Ok((
        worst_p1 <= 1e-10 && worst_ft <= 1e-8,
        format!("P_1 max rel diff {worst_p1:.2e}; Fourier max rel diff {worst_ft:.2e} over {} chains", g.len()),
    ))
}

fn main() {
    // cargo test passes harness flags; listing must not run the suite
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let gallery = standard_gallery().expect("gallery builds");
    let criteria: Vec<Criterion> = vec![
        (1, "hexagon contraction vs brute force", Box::new(hexagon_oracle)),
        (2, "small-frequency lower bound d^2 >= xi^2 u^2 / 2", Box::new(|| small_frequency(&gallery))),
        (3, "variance / hexagon-sum sandwich", Box::new(|| sandwich(&gallery))),
        (4, "characteristic-function decay against D_N", Box::new(|| decay(&gallery))),
        (5, "eigen residuals, convergence rate, pressure sums", Box::new(|| rpf_audits(&gallery))),
        (6, "growth of log-characteristic-function derivatives", Box::new(growth)),
        (7, "Berry-Esseen rate on the lattice counterexample", Box::new(berry_esseen_band)),
        (8, "order-1 expansion beats the normal law (Monte Carlo)", Box::new(order_one)),
        (9, "admissible and failing orders on the lattice counterexample", Box::new(optimal_order)),
        (10, "Cantor plateau measure and monotonicity", Box::new(cantor_exact)),
        (11, "Hölder circle chain decay exponent", Box::new(holder_surrogate)),
        (12, "Edgeworth pipeline identities", Box::new(|| pipeline_identities(&gallery))),
    ];
    let mut unexpected = Vec::new();
    let mut failed = Vec::new();
    for (id, title, run) in &criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} {}: {title}: {detail} [{secs:.1} s]",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(*id);
            if !KNOWN_FAILURES.contains(id) {
                unexpected.push(*id);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass; failing {:?} (known: {:?})",
        criteria.len() - failed.len(),
        criteria.len(),
        failed,
        KNOWN_FAILURES
    );
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
