//! Experiment drivers behind the command-line front end.
//!
//! An [`ExperimentConfig`] names a chain source, an `N` sweep, orders and
//! grids. Each `run_*` function returns a [`Report`] made of CSV tables, a
//! JSON summary and threshold [`Check`]s. [`Report::write`] stores them
//! next to a [`Manifest`] from which the run can be repeated.
//!
//! Thresholds are trend checks across the sweep, never limits.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::chain::{AdditiveFunctional, ChainSpec};
use crate::edgeworth::{cumulants_from_moments, kolmogorov_distance, EdgeworthExpansion, StepCdf};
use crate::error::{Context, Error, Result};
use crate::gallery::{
    gallery_chain, make_beta_lattice_chain, make_cantor_iid_chain, make_circle_holder_chain, make_coin_chain,
    make_elliptic_random_chain, make_rare_jump_chain, plateau_measure, BetaParams, CantorParams, CircleParams,
    RandomChainParams, RareJumpParams,
};
use crate::hexagon::{decay_check, sandwich_check};
use crate::numerics::{linear_fit, normal_cdf};
use crate::rpf::{
    cauchy_riemann_residual, default_z0, exp_convergence_audit, growth_audit, local_bound_check, pressure_sum,
    rpf_sweep, GrowthOptions,
};
use crate::transfer::{
    cdf_estimate, central_moment_profile, dkw_halfwidth, lattice_distributions, sigma, tail_integral, TailOptions,
    Transfer, DKW_DELTA,
};

pub const DEFAULT_SEED: u64 = 42;

/// The Monte Carlo band must lie below `MC_RESOLUTION / sigma_N`.
pub const MC_RESOLUTION: f64 = 0.1;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// How distribution functions are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact lattice law when the functional is lattice valued, else Monte Carlo.
    #[default]
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChainSource {
    File { path: PathBuf },
    Gallery { name: String },
    Generator { generator: GeneratorSpec },
}

/// Generator parameters. Missing seeds fall back to the config seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    BetaLattice {
        beta: f64,
        c: f64,
    },
    CantorIid {
        p: u32,
        k: u32,
        m_disc: usize,
    },
    Circle {
        m_disc: usize,
        alpha: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Random {
        m: usize,
        scale: f64,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        decay_beta: Option<f64>,
        #[serde(default)]
        lattice: Option<i64>,
    },
    RareJump {
        m: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        rare_prob: Option<f64>,
    },
    Coin {
        num: i64,
        den: i64,
    },
}

/// Settings of the tail-integral diagnostic in [`run_edgeworth_order`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSettings {
    pub delta: f64,
    pub big_b: f64,
}

/// Parts of [`run_pressure_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditSection {
    Residuals,
    Convergence,
    PressureSums,
    Growth,
    Sandwich,
    Decay,
    LocalBounds,
    Holder,
}

impl AuditSection {
    pub const ALL: [AuditSection; 8] = [
        AuditSection::Residuals,
        AuditSection::Convergence,
        AuditSection::PressureSums,
        AuditSection::Growth,
        AuditSection::Sandwich,
        AuditSection::Decay,
        AuditSection::LocalBounds,
        AuditSection::Holder,
    ];
}

/// Limits used by the pressure audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PressureThresholds {
    pub residual: f64,
    pub cauchy_riemann: f64,
    pub delta: f64,
    /// `max_n |Gamma - Pi| <= factor * (value at the first n) + 1`.
    pub pressure_factor: f64,
    pub growth_ratio: f64,
    /// Window ratios must lie in `[1/bound, bound]`.
    pub sandwich_bound: f64,
    pub theta_slack: f64,
}

impl Default for PressureThresholds {
    fn default() -> Self {
        Self {
            residual: 1e-9,
            cauchy_riemann: 1e-6,
            delta: 0.9,
            pressure_factor: 2.0,
            growth_ratio: 5.0,
            sandwich_bound: 64.0,
            theta_slack: 0.15,
        }
    }
}

/// Asserted thresholds; `None` means "report only".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Berry-Esseen: `max / min` of `dist * sigma` over the sweep.
    pub band_factor: Option<f64>,
    /// Orders whose `dist * sigma^r` must not grow: `last / first <= bounded_ratio`.
    pub bounded_orders: Vec<usize>,
    pub bounded_ratio: Option<f64>,
    /// Orders whose `dist * sigma^r` must grow: `last / first >= growing_ratio`.
    pub growing_orders: Vec<usize>,
    pub growing_ratio: Option<f64>,
    /// Counterexample: `last / first` of `max_atom * sigma^3` must exceed this.
    pub atom_growth: Option<f64>,
    /// `dist(E_r) / dist(Phi)` at the highest order, per `N`.
    pub improvement: Option<f64>,
    /// Distances must exceed this multiple of the DKW band.
    pub noise_margin: Option<f64>,
    pub pressure: PressureThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// One of `berry-esseen`, `expansion-test`, `counterexample`, `pressure`.
    pub experiment: String,
    pub chain: ChainSource,
    /// Horizons, strictly increasing. Empty means the chain's own length.
    #[serde(default)]
    pub n_sweep: Vec<usize>,
    /// Expansion orders, `0` standing for the normal law.
    #[serde(default)]
    pub orders: Vec<usize>,
    #[serde(default)]
    pub xi_grid: Vec<f64>,
    /// Points where distribution functions are compared besides the jumps.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Complex test points `[re, im]` for the pressure audit.
    #[serde(default)]
    pub z_grid: Vec<[f64; 2]>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub n_paths: Option<usize>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub tail: Option<TailSettings>,
    /// Exponent `c` in `k_N = p^{floor(c log_p N)}` for Cantor chains.
    #[serde(default)]
    pub cantor_c: Option<f64>,
    /// Hölder exponent for the decay fit; read from the chain labels when absent.
    #[serde(default)]
    pub holder_alpha: Option<f64>,
    #[serde(default)]
    pub sections: Option<Vec<AuditSection>>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn new(experiment: &str, chain: ChainSource) -> Self {
        Self {
            experiment: experiment.to_string(),
            chain,
            n_sweep: Vec::new(),
            orders: Vec::new(),
            xi_grid: Vec::new(),
            t_grid: Vec::new(),
            z_grid: Vec::new(),
            seed: DEFAULT_SEED,
            n_paths: None,
            mode: Mode::Auto,
            out_dir: None,
            tail: None,
            cantor_c: None,
            holder_alpha: None,
            sections: None,
            thresholds: Thresholds::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sweep.contains(&0) || self.n_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "N sweep {:?} must be positive and strictly increasing",
                self.n_sweep
            )));
        }
        if self.xi_grid.iter().any(|x| !x.is_finite() || *x == 0.0) {
            return Err(Error::InvalidParameter("xi grid must be finite and nonzero".into()));
        }
        if self.t_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("t grid must be finite".into()));
        }
        if self.z_grid.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("z grid must be finite".into()));
        }
        if let Some(t) = self.tail {
            if !(t.delta > 0.0 && t.big_b > 0.0) {
                return Err(Error::InvalidParameter("tail delta and B must be positive".into()));
            }
        }
        if self.n_paths == Some(0) {
            return Err(Error::InvalidParameter("n_paths must be positive".into()));
        }
        Ok(())
    }

    fn horizon(&self) -> Option<usize> {
        self.n_sweep.last().copied()
    }

    /// The chain at the largest horizon of the sweep.
    pub fn build_chain(&self) -> Result<(ChainSpec, AdditiveFunctional)> {
        let n = self.horizon();
        let need = |n: Option<usize>| {
            n.ok_or_else(|| Error::InvalidParameter("generator sources need a nonempty N sweep".into()))
        };
        let seed = self.seed;
        match &self.chain {
            ChainSource::File { path } => {
                let (chain, f) = crate::io::read_chain_file(path)?;
                let f = f.ok_or_else(|| Error::InvalidSpec(format!("{} has no functional", path.display())))?;
                match n {
                    Some(n) if n < chain.n_steps() => Ok((chain.truncate(n)?, f.window(1, n)?)),
                    Some(n) if n > chain.n_steps() => Err(Error::InvalidParameter(format!(
                        "N = {n} exceeds the {} steps in {}",
                        chain.n_steps(),
                        path.display()
                    ))),
                    _ => Ok((chain, f)),
                }
            }
            ChainSource::Gallery { name } => {
                let e = gallery_chain(name, n)?;
                Ok((e.chain, e.f))
            }
            ChainSource::Generator { generator } => {
                let n = need(n)?;
                match generator {
                    GeneratorSpec::BetaLattice { beta, c } => make_beta_lattice_chain(&BetaParams::new(*beta, *c)?, n),
                    GeneratorSpec::CantorIid { p, k, m_disc } => {
                        make_cantor_iid_chain(&CantorParams::new(*p, *k)?, *m_disc, n)
                    }
                    GeneratorSpec::Circle { m_disc, alpha, seed: s } => {
                        make_circle_holder_chain(&CircleParams::new(*m_disc, *alpha, s.unwrap_or(seed), n))
                    }
                    GeneratorSpec::Random {
                        m,
                        scale,
                        seed: s,
                        decay_beta,
                        lattice,
                    } => make_elliptic_random_chain(&RandomChainParams {
                        decay_beta: *decay_beta,
                        lattice: *lattice,
                        ..RandomChainParams::new(*m, *scale, s.unwrap_or(seed), n)
                    }),
                    GeneratorSpec::RareJump { m, seed: s, rare_prob } => {
                        let mut p = RareJumpParams::new(*m, s.unwrap_or(seed), n);
                        if let Some(r) = rare_prob {
                            p.rare_prob = *r;
                        }
                        make_rare_jump_chain(&p)
                    }
                    GeneratorSpec::Coin { num, den } => make_coin_chain(n, *num, *den),
                }
            }
        }
    }

    /// The sweep, defaulting to the chain length.
    fn sweep(&self, chain: &ChainSpec) -> Vec<usize> {
        if self.n_sweep.is_empty() {
            vec![chain.n_steps()]
        } else {
            self.n_sweep.clone()
        }
    }

    fn cdf_grid(&self) -> Vec<f64> {
        if self.t_grid.is_empty() {
            (0..=1600).map(|i| -8.0 + 0.01 * i as f64).collect()
        } else {
            let mut g = self.t_grid.clone();
            g.sort_by(f64::total_cmp);
            g
        }
    }

    /// SHA-256 of the serialized configuration. The output directory does
    /// not take part, so the same run written elsewhere hashes the same.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.portable()).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}

impl ExperimentConfig {
    fn portable(&self) -> Self {
        Self {
            out_dir: None,
            ..self.clone()
        }
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, seeds: Vec<u64>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("edgelab".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("chain_schema".to_string(), crate::io::CHAIN_SCHEMA_VERSION.to_string());
        Self {
            experiment: config.experiment.clone(),
            config_hash: config.hash(),
            seeds,
            versions,
            config: config.portable(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Decimal text for a CSV cell; exponent form for very small or large values.
pub fn fmt_real(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if !v.is_finite() || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// One asserted threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="`, `">="` or `">"`.
    pub relation: String,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn le(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value, "<=", limit, value <= limit)
    }

    fn ge(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value, ">=", limit, value >= limit)
    }

    fn gt(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value, ">", limit, value > limit)
    }

    fn new(name: &str, value: f64, relation: &str, limit: f64, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: relation.to_string(),
            limit,
            pass,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} {} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt_real(self.value),
            self.relation,
            fmt_real(self.limit)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub tables: Vec<Table>,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub seeds: Vec<u64>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<table>.csv` for every table, `report.json` and
    /// `manifest.json` into `dir`, returning the written paths.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
            crate::io::write_csv(&path, &header, &t.rows)?;
            out.push(path);
        }
        let report = dir.join("report.json");
        let body = json!({
            "experiment": self.experiment,
            "summary": self.summary,
            "checks": self.checks,
            "passed": self.passed(),
        });
        std::fs::write(&report, serde_json::to_string_pretty(&body)?)?;
        out.push(report);
        let manifest = dir.join("manifest.json");
        std::fs::write(
            &manifest,
            serde_json::to_string_pretty(&Manifest::new(config, self.seeds.clone()))?,
        )?;
        out.push(manifest);
        Ok(out)
    }
}

/// Runs the experiment named in the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    match config.experiment.as_str() {
        "berry-esseen" => run_berry_esseen(config),
        "expansion-test" | "edgeworth-order" => run_edgeworth_order(config),
        "counterexample" => run_counterexample(config),
        "pressure" | "pressure-audit" => run_pressure_audit(config),
        other => Err(Error::InvalidParameter(format!(
            "unknown experiment '{other}' (berry-esseen, expansion-test, counterexample, pressure)"
        ))),
    }
}

/// Law of the normalized sum at one horizon.
struct SweepLaw {
    n: usize,
    sigma: f64,
    cdf: StepCdf,
    band: f64,
    method: &'static str,
    seed: Option<u64>,
}

/// Paths needed for a DKW band below `MC_RESOLUTION / sigma`.
pub fn required_paths(sigma: f64) -> usize {
    let eps = MC_RESOLUTION / sigma;
    ((2.0 / DKW_DELTA).ln() / (2.0 * eps * eps)).ceil() as usize
}

fn sweep_laws(config: &ExperimentConfig, chain: &ChainSpec, f: &AdditiveFunctional, sweep: &[usize]) -> Result<Vec<SweepLaw>> {
    let exact = match config.mode {
        Mode::Exact => {
            if f.lattice().is_none() {
                return Err(Error::Unsupported("--exact needs a lattice-valued functional".into()));
            }
            true
        }
        Mode::Auto => f.lattice().is_some(),
        Mode::Mc => false,
    };
    if exact {
        let pmfs = lattice_distributions(chain, f, sweep, false)?;
        return pmfs
            .into_iter()
            .zip(sweep)
            .map(|(pmf, &n)| {
                let s = pmf.variance().sqrt();
                if !(s > 1e-8) {
                    return Err(Error::DegenerateVariance { sigma: s });
                }
                Ok(SweepLaw {
                    n,
                    sigma: s,
                    cdf: pmf.normalized_cdf(pmf.mean(), s)?,
                    band: 0.0,
                    method: "exact-lattice",
                    seed: None,
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for (i, &n) in sweep.iter().enumerate() {
        let (c, g) = (chain.truncate(n)?, f.window(1, n)?);
        let s = sigma(&c, &g)?;
        if !(s > 1e-8) {
            return Err(Error::DegenerateVariance { sigma: s });
        }
        let required = required_paths(s);
        let n_paths = config.n_paths.unwrap_or(required);
        if n_paths < required {
            return Err(Error::Budget(format!(
                "N = {n}: a DKW band below {MC_RESOLUTION}/sigma_N needs n_paths >= {required}, got {n_paths}"
            )));
        }
        let seed = config.seed.wrapping_add(i as u64);
        let est = cdf_estimate(&c, &g, n_paths, seed)?;
        out.push(SweepLaw {
            n,
            sigma: est.sigma,
            band: dkw_halfwidth(n_paths, DKW_DELTA),
            cdf: est.cdf,
            method: "monte-carlo",
            seed: Some(seed),
        });
    }
    Ok(out)
}

fn seeds_of(laws: &[SweepLaw]) -> Vec<u64> {
    laws.iter().filter_map(|l| l.seed).collect()
}

fn ratio_last_first(v: &[f64]) -> f64 {
    match (v.first(), v.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => b / a,
        _ => f64::NAN,
    }
}

/// Sup-distance of the normalized sum to the normal law across the sweep.
pub fn run_berry_esseen(config: &ExperimentConfig) -> Result<Report> {
    let (chain, f) = config.build_chain()?;
    let sweep = config.sweep(&chain);
    let laws = sweep_laws(config, &chain, &f, &sweep)?;
    let grid = config.cdf_grid();
    let mut table = Table::new(
        "berry_esseen",
        &["N", "sigma", "dist", "dist_times_sigma", "method", "band"],
    );
    let mut products = Vec::new();
    for law in &laws {
        let dist = kolmogorov_distance(&law.cdf, normal_cdf, &grid);
        products.push(dist * law.sigma);
        table.push(vec![
            law.n.to_string(),
            fmt_real(law.sigma),
            fmt_real(dist),
            fmt_real(dist * law.sigma),
            law.method.to_string(),
            fmt_real(law.band),
        ]);
    }
    let max = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = products.iter().copied().fold(f64::INFINITY, f64::min);
    let mut checks = Vec::new();
    if let Some(limit) = config.thresholds.band_factor {
        checks.push(Check::le("dist*sigma max/min", max / min, limit));
    }
    Ok(Report {
        experiment: "berry-esseen".into(),
        summary: json!({"max_over_min": max / min, "products": products}),
        tables: vec![table],
        checks,
        seeds: seeds_of(&laws),
    })
}

/// One row of [`run_edgeworth_order`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRow {
    pub n: usize,
    pub r: usize,
    pub sigma: f64,
    pub dist: f64,
    pub scaled: f64,
    pub tail_scaled: Option<f64>,
    pub band: f64,
}

/// Sup-distance to the expansions `E_{r,N}` for every requested order.
pub fn run_edgeworth_order(config: &ExperimentConfig) -> Result<Report> {
    let (chain, f) = config.build_chain()?;
    let sweep = config.sweep(&chain);
    let orders = if config.orders.is_empty() { vec![1] } else { config.orders.clone() };
    let rmax = *orders.iter().max().unwrap();
    let laws = sweep_laws(config, &chain, &f, &sweep)?;
    let moments = central_moment_profile(&chain, &f, rmax + 2, &sweep)?;
    let grid = config.cdf_grid();
    let mut rows = Vec::new();
    for (law, m) in laws.iter().zip(&moments) {
        let table = cumulants_from_moments(m)?;
        for &r in &orders {
            let dist = if r == 0 {
                kolmogorov_distance(&law.cdf, normal_cdf, &grid)
            } else {
                let e = EdgeworthExpansion::new(&table, r)?;
                kolmogorov_distance(&law.cdf, |z| e.cdf(z), &grid)
            };
            let tail_scaled = match config.tail {
                Some(t) if r >= 1 => {
                    let (c, g) = (chain.truncate(law.n)?, f.window(1, law.n)?);
                    match tail_integral(
                        &c,
                        &g,
                        TailOptions {
                            delta: t.delta,
                            big_b: t.big_b,
                            r: r as u32,
                        },
                    ) {
                        Ok(ti) => Some(ti.value * law.sigma.powi(r as i32)),
                        Err(Error::InvalidParameter(_)) => None,
                        Err(e) => return Err(e),
                    }
                }
                _ => None,
            };
            rows.push(OrderRow {
                n: law.n,
                r,
                sigma: law.sigma,
                dist,
                scaled: dist * law.sigma.powi(r as i32),
                tail_scaled,
                band: law.band,
            });
        }
    }
    let mut table = Table::new(
        "edgeworth_order",
        &["N", "r", "dist", "dist_times_sigma_pow_r", "tail_integral_times_sigma_pow_r", "method", "band"],
    );
    for (row, law) in rows.iter().zip(laws.iter().flat_map(|l| std::iter::repeat(l).take(orders.len()))) {
        table.push(vec![
            row.n.to_string(),
            row.r.to_string(),
            fmt_real(row.dist),
            fmt_real(row.scaled),
            row.tail_scaled.map(fmt_real).unwrap_or_default(),
            law.method.to_string(),
            fmt_real(row.band),
        ]);
    }
    let series = |r: usize| -> Vec<f64> { rows.iter().filter(|x| x.r == r).map(|x| x.scaled).collect() };
    let th = &config.thresholds;
    let mut checks = Vec::new();
    let mut ratios = BTreeMap::new();
    for &r in &orders {
        ratios.insert(r.to_string(), ratio_last_first(&series(r)));
    }
    if let Some(limit) = th.bounded_ratio {
        for &r in &th.bounded_orders {
            checks.push(Check::le(&format!("order {r} last/first"), ratio_last_first(&series(r)), limit));
        }
    }
    if let Some(limit) = th.growing_ratio {
        for &r in &th.growing_orders {
            checks.push(Check::ge(&format!("order {r} last/first"), ratio_last_first(&series(r)), limit));
        }
    }
    for law in &laws {
        let at = |r: usize| rows.iter().find(|x| x.n == law.n && x.r == r).map(|x| x.dist);
        if let (Some(limit), Some(d0), Some(dr)) = (th.improvement, at(0), at(rmax)) {
            checks.push(Check::le(&format!("N={} dist(order {rmax})/dist(normal)", law.n), dr / d0, limit));
        }
        if let Some(margin) = th.noise_margin {
            for &r in &orders {
                if let Some(d) = at(r) {
                    let ratio = if law.band > 0.0 { d / law.band } else { f64::INFINITY };
                    checks.push(Check::ge(&format!("N={} order {r} dist/band", law.n), ratio, margin));
                }
            }
        }
    }
    Ok(Report {
        experiment: "expansion-test".into(),
        summary: json!({"rows": rows, "last_over_first": ratios}),
        tables: vec![table],
        checks,
        seeds: seeds_of(&laws),
    })
}

/// Admissible exponents `c` for the Cantor counterexample:
/// `alpha/(1-alpha) < c < r/2 - 1/2` with `r` the least integer above
/// `(1+alpha)/(1-alpha)`.
pub fn cantor_c_interval(alpha: f64) -> (f64, f64) {
    let r = ((1.0 + alpha) / (1.0 - alpha)).floor() + 1.0;
    (alpha / (1.0 - alpha), r / 2.0 - 0.5)
}

/// One row of [`run_counterexample`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomRow {
    pub n: usize,
    pub sigma: f64,
    pub max_atom: f64,
    pub max_atom_sigma3: f64,
    /// Smallest spacing of the support of `S_N`.
    pub gap: f64,
    /// Spacing of the lattice `(1/k_N) Z`.
    pub lattice_gap: f64,
    pub k_n: String,
    /// `P(k_N S_N not in Z)` from the law of `S_N`.
    pub prob_offlattice: f64,
    /// Exact union bound `min(1, N P(k_N f not in Z))` (Cantor chains).
    pub union_bound: Option<String>,
}

/// Atom diagnostics of lattice sums.
pub fn run_counterexample(config: &ExperimentConfig) -> Result<Report> {
    let (chain, f) = config.build_chain()?;
    let lat = f
        .lattice()
        .ok_or_else(|| Error::Unsupported("counterexample diagnostics need a lattice-valued functional".into()))?
        .clone();
    let sweep = config.sweep(&chain);
    let pmfs = lattice_distributions(&chain, &f, &sweep, false)?;
    let labels = f.labels();
    let label = |k: &str| labels.get(k).map(String::as_str);
    let parse = |k: &str| -> Result<f64> {
        label(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::InvalidSpec(format!("label '{k}' missing or not a number")))
    };
    let mut rows = Vec::new();
    let mut extra = json!({});
    for (pmf, &n) in pmfs.iter().zip(&sweep) {
        let sigma = pmf.variance().sqrt();
        // k_N as a power of a prime base when the family defines one, else L
        let (k_n, lattice_gap, union_bound): (i64, f64, Option<BigRational>) = match label("generator") {
            Some("beta-lattice") => {
                let params = BetaParams::new(parse("beta")?, parse("c")?)?;
                let q = params.q(n);
                (q, 1.0 / q as f64, None)
            }
            Some("cantor-iid") => {
                let params = CantorParams::new(parse("p")? as u32, parse("k")? as u32)?;
                let depth = parse("depth")? as u32;
                let (lo, hi) = cantor_c_interval(params.alpha());
                let c = config.cantor_c.unwrap_or(0.5 * (lo + hi));
                extra = json!({"c": c, "admissible_c": [lo, hi], "depth": depth});
                let p = params.p as f64;
                let digits = (c * (n as f64).ln() / p.ln()).floor() as u32;
                let single = plateau_measure(&params, digits);
                let bound = (single * BigRational::from_integer((n as i64).into())).min(BigRational::one());
                // beyond the grid depth every value is already a multiple of p^-depth
                let k = (params.p as i64).checked_pow(digits.min(depth)).unwrap_or(i64::MAX);
                (k, (params.p as f64).powi(-(depth as i32)), Some(bound))
            }
            _ => (lat.l, 1.0 / lat.l as f64, None),
        };
        // L S_N = j, so k_N S_N = j k_N / L
        let off: f64 = pmf
            .atoms()
            .filter(|&(j, _)| (j as i128 * k_n as i128) % lat.l as i128 != 0)
            .map(|(_, p)| p)
            .sum();
        let max_atom = pmf.max_atom();
        rows.push(AtomRow {
            n,
            sigma,
            max_atom,
            max_atom_sigma3: max_atom * sigma.powi(3),
            gap: pmf.min_gap().unwrap_or(f64::NAN),
            lattice_gap,
            k_n: k_n.to_string(),
            prob_offlattice: off,
            union_bound: union_bound.map(|b| b.to_string()),
        });
    }
    let mut table = Table::new(
        "counterexample",
        &["N", "sigma", "max_atom", "max_atom_sigma3", "gap", "lattice_gap", "k_N", "prob_offlattice", "union_bound"],
    );
    for r in &rows {
        table.push(vec![
            r.n.to_string(),
            fmt_real(r.sigma),
            fmt_real(r.max_atom),
            fmt_real(r.max_atom_sigma3),
            fmt_real(r.gap),
            fmt_real(r.lattice_gap),
            r.k_n.clone(),
            fmt_real(r.prob_offlattice),
            r.union_bound.clone().unwrap_or_default(),
        ]);
    }
    let growth = ratio_last_first(&rows.iter().map(|r| r.max_atom_sigma3).collect::<Vec<_>>());
    let mut checks = Vec::new();
    if let Some(limit) = config.thresholds.atom_growth {
        checks.push(Check::gt("max_atom*sigma^3 last/first", growth, limit));
    }
    Ok(Report {
        experiment: "counterexample".into(),
        summary: json!({"rows": rows, "atom_growth": growth, "family": extra}),
        tables: vec![table],
        checks,
        seeds: Vec::new(),
    })
}

/// Fit of `-log |Phi_N(xi)| ~ c V_N xi^theta` for Hölder functionals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderDecayFit {
    pub alpha: f64,
    pub variance: f64,
    pub c: f64,
    pub theta: f64,
    /// `1 - 1/alpha`.
    pub target: f64,
    /// Slope of the same fit restricted to frequencies beyond the peak of
    /// `-log |Phi_N| / V_N`.
    pub tail_theta: Option<f64>,
    pub peak_xi: f64,
    /// `min_xi -log|Phi_N(xi)| / (V_N xi^{1 - 1/alpha})`; positive means the
    /// bound `|Phi_N| <= exp(-c V_N xi^{1-1/alpha})` holds with this `c`.
    pub min_scaled: f64,
    /// `(xi, -log |Phi_N(xi)|)`.
    pub points: Vec<(f64, f64)>,
}

/// Log-log regression of `-log |Phi_N|` against `xi` over `xi_grid`.
pub fn holder_decay_fit(chain: &ChainSpec, f: &AdditiveFunctional, alpha: f64, xi_grid: &[f64]) -> Result<HolderDecayFit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {alpha} outside (0, 1)")));
    }
    let variance = sigma(chain, f)?.powi(2);
    if !(variance > 0.0) {
        return Err(Error::DegenerateVariance { sigma: 0.0 });
    }
    let t = Transfer::new(chain, f)?;
    let points: Vec<(f64, f64)> = xi_grid.iter().map(|&xi| (xi.abs(), -t.log_abs_char_fn(xi))).collect();
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0 && p.1.is_finite())
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let (theta, b) =
        linear_fit(&logs).ok_or_else(|| Error::InvalidParameter("decay fit needs two points with |Phi| < 1".into()))?;
    let target = 1.0 - 1.0 / alpha;
    let (peak_i, _) = points
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.1 > acc.1 { (i, p.1) } else { acc });
    let peak_xi = points.get(peak_i).map(|p| p.0).unwrap_or(f64::NAN);
    let tail: Vec<(f64, f64)> = logs.iter().copied().filter(|p| p.0 >= peak_xi.ln()).collect();
    let tail_theta = linear_fit(&tail).map(|(s, _)| s);
    let min_scaled = points
        .iter()
        .map(|&(x, y)| y / (variance * x.powf(target)))
        .fold(f64::INFINITY, f64::min);
    Ok(HolderDecayFit {
        alpha,
        variance,
        c: b.exp() / variance,
        theta,
        target,
        tail_theta,
        peak_xi,
        min_scaled,
        points,
    })
}

fn dyadic_between(lo: usize, hi: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut n = lo.max(1).next_power_of_two();
    while n <= hi {
        v.push(n);
        n *= 2;
    }
    v
}

/// Default `xi` grid for the Hölder fit: 60 log-spaced points on `[1, 100]`.
pub fn holder_xi_grid() -> Vec<f64> {
    (0..60).map(|i| 10f64.powf(2.0 * i as f64 / 59.0)).collect()
}

/// Bundle of transfer-operator audits.
pub fn run_pressure_audit(config: &ExperimentConfig) -> Result<Report> {
    let (chain, f) = config.build_chain()?;
    let big_n = chain.n_steps();
    let th = config.thresholds.pressure;
    let sections = config.sections.clone().unwrap_or_else(|| AuditSection::ALL.to_vec());
    let has = |s: AuditSection| sections.contains(&s);
    let z0 = default_z0(&f);
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let mut summary = serde_json::Map::new();
    summary.insert("z0".into(), json!(z0));
    summary.insert("n_steps".into(), json!(big_n));

    if has(AuditSection::Residuals) {
        let points: Vec<C64> = if config.z_grid.is_empty() {
            (1..=4)
                .flat_map(|r| {
                    (0..4).map(move |a| {
                        let angle = std::f64::consts::PI * (0.125 + 0.5 * a as f64);
                        C64::from_polar(z0 * r as f64 / 4.0, angle)
                    })
                })
                .collect()
        } else {
            config.z_grid.iter().map(|&[re, im]| C64::new(re, im)).collect()
        };
        let mut worst = 0.0_f64;
        for &z in &points {
            let t = rpf_sweep(&chain, &f, z).context(&format!("eigen sweep at z = {z}"))?;
            worst = worst.max(t.max_residual());
        }
        let table = rpf_sweep(&chain, &f, C64::new(z0 / 2.0, 0.0)).context("eigen sweep at z0/2")?;
        let mut csv = Table::new("pressure", &["j", "re_lambda", "im_lambda", "re_pi", "im_pi", "residual"]);
        for j in 0..table.lambdas.len() {
            csv.push(vec![
                (j + 1).to_string(),
                fmt_real(table.lambdas[j].re),
                fmt_real(table.lambdas[j].im),
                fmt_real(table.pressures[j].re),
                fmt_real(table.pressures[j].im),
                fmt_real(table.residuals[j].max(table.dual_residuals[j])),
            ]);
        }
        tables.push(csv);
        let mut cr = 0.0_f64;
        for a in 0..4 {
            let z = C64::from_polar(z0 / 2.0, std::f64::consts::PI * (0.25 + 0.5 * a as f64));
            cr = cr.max(cauchy_riemann_residual(&chain, &f, z, 1e-5).context("Cauchy-Riemann residual")?);
        }
        summary.insert("eigen_residual".into(), json!(worst));
        summary.insert("test_points".into(), json!(points.len()));
        summary.insert("cauchy_riemann".into(), json!(cr));
        checks.push(Check::le("eigen residual", worst, th.residual));
        checks.push(Check::le("Cauchy-Riemann residual", cr, th.cauchy_riemann));
    }

    if has(AuditSection::Convergence) && big_n >= 2 {
        let n_list: Vec<usize> = (1..=32.min(big_n - 1)).collect();
        let audit = exp_convergence_audit(&chain, &f, C64::new(z0 / 2.0, 0.0), 1, &n_list)
            .context("exponential convergence audit")?;
        // all norms at rounding level: convergence is immediate
        let delta = audit.delta.unwrap_or(0.0);
        summary.insert("convergence".into(), serde_json::to_value(&audit)?);
        checks.push(Check::le("convergence rate delta", delta, th.delta));
    }

    if has(AuditSection::PressureSums) {
        let z = C64::from_polar(z0 / 2.0, std::f64::consts::FRAC_PI_4);
        let mut sums = serde_json::Map::new();
        for j in [1usize, 5] {
            let ns: Vec<usize> = dyadic_between(16, 1024).into_iter().filter(|&n| j + n - 1 <= big_n).collect();
            if ns.is_empty() {
                continue;
            }
            let diffs: Vec<(usize, f64)> = ns
                .iter()
                .map(|&n| Ok((n, pressure_sum(&chain, &f, z, j, n, 16)?.difference)))
                .collect::<Result<_>>()
                .context("pressure sums")?;
            let first = diffs[0].1;
            let max = diffs.iter().map(|d| d.1).fold(0.0, f64::max);
            checks.push(Check::le(
                &format!("|Gamma - Pi| from j={j}, max over n"),
                max,
                th.pressure_factor * first + 1.0,
            ));
            sums.insert(j.to_string(), json!(diffs));
        }
        summary.insert("pressure_differences".into(), Value::Object(sums));
    }

    if has(AuditSection::Growth) {
        let mut ns = dyadic_between(64, 4096.min(big_n));
        if ns.is_empty() {
            ns = dyadic_between(8, big_n);
        }
        if !ns.is_empty() {
            let audit = growth_audit(&chain, &f, &ns, &[3, 4], GrowthOptions::default()).context("growth audit")?;
            let mut csv = Table::new("growth", &["n", "sigma_n", "k", "value"]);
            for r in &audit.rows {
                csv.push(vec![r.n.to_string(), fmt_real(r.sigma_n), r.k.to_string(), fmt_real(r.value)]);
            }
            tables.push(csv);
            for &(k, ratio) in &audit.max_over_median {
                checks.push(Check::le(&format!("growth k={k} max/median"), ratio, th.growth_ratio));
            }
            summary.insert("growth".into(), serde_json::to_value(&audit)?);
        }
    }

    if has(AuditSection::Sandwich) && big_n >= 200 {
        let rep = sandwich_check(&chain, &f, 50, 200).context("sandwich check")?;
        checks.push(Check::ge("sandwich min ratio", rep.min_ratio, 1.0 / th.sandwich_bound));
        checks.push(Check::le("sandwich max ratio", rep.max_ratio, th.sandwich_bound));
        summary.insert("sandwich".into(), serde_json::to_value(rep)?);
    }

    if has(AuditSection::Decay) {
        let n = big_n.min(1024);
        let (c, g) = (chain.truncate(n)?, f.window(1, n)?);
        let grid: Vec<f64> = if config.xi_grid.is_empty() {
            let norm = g.norm_sup().max(1e-12);
            (0..48).map(|i| 0.01 * 300f64.powf(i as f64 / 47.0) / norm).collect()
        } else {
            config.xi_grid.clone()
        };
        let fit = decay_check(&c, &g, &grid).context("decay check")?;
        checks.push(Check::gt("decay slope c", if fit.inconclusive { f64::NAN } else { fit.c }, 0.0));
        checks.push(Check::le("decay violations", fit.violations.len() as f64, 0.0));
        summary.insert("decay".into(), json!({"n": n, "c": fit.c, "C": fit.big_c, "violations": fit.violations.len(), "inconclusive": fit.inconclusive}));
    }

    if has(AuditSection::LocalBounds) {
        let rep = local_bound_check(&chain, &f, 5, 0.05, 64).context("local bounds")?;
        checks.push(Check::le("exp(Lambda) / exp(t^2/3)", rep.quadratic_ratio, 1.0));
        checks.push(Check::le("truncated cumulant series / B_k t^3 / sigma", rep.cubic_ratio, 1.0));
        summary.insert("local_bounds".into(), serde_json::to_value(rep)?);
    }

    let alpha = config
        .holder_alpha
        .or_else(|| f.labels().get("alpha").and_then(|a| a.parse().ok()));
    if has(AuditSection::Holder) {
        if let Some(alpha) = alpha {
            let grid = if config.xi_grid.is_empty() { holder_xi_grid() } else { config.xi_grid.clone() };
            let fit = holder_decay_fit(&chain, &f, alpha, &grid).context("Hölder decay fit")?;
            checks.push(Check::le("Hölder decay exponent theta", fit.theta, fit.target + th.theta_slack));
            let mut csv = Table::new("holder_decay", &["xi", "neg_log_abs_phi"]);
            for &(x, y) in &fit.points {
                csv.push(vec![fmt_real(x), fmt_real(y)]);
            }
            tables.push(csv);
            summary.insert("holder".into(), serde_json::to_value(&fit)?);
        }
    }

    Ok(Report {
        experiment: "pressure".into(),
        tables,
        summary: Value::Object(summary),
        checks,
        seeds: vec![config.seed],
    })
}
