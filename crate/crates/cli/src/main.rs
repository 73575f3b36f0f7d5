//! `edgelab` command-line front end.
//!
//! Exit codes: 0 when every asserted threshold passes, 1 when one fails,
//! 2 for bad input (unreadable files, invalid chains or configs, refused
//! budgets).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use edgelab::chain::{AdditiveFunctional, ChainSpec};
use edgelab::edgeworth::{cumulants_from_moments, expansion_cdf, EdgeworthExpansion};
use edgelab::error::{Error, Result};
use edgelab::experiments::{fmt_real, run_experiment, ChainSource, ExperimentConfig, Mode, Report};
use edgelab::gallery::{gallery_chain, GALLERY};
use edgelab::hexagon::{small_xi_check, Hexagon};
use edgelab::io::{read_chain_file, write_chain_file, write_csv};
use edgelab::transfer::{central_moments, char_fn};

#[derive(Parser)]
#[command(name = "edgelab", version, about = "Edgeworth expansions for inhomogeneous Markov chains")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the exact lattice law (lattice functionals only).
    #[arg(long, global = true, conflicts_with = "mc")]
    exact: bool,
    /// Use Monte Carlo sampling.
    #[arg(long, global = true)]
    mc: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ChainArgs {
    /// Chain file (JSON).
    #[arg(long, conflicts_with = "gallery")]
    chain: Option<PathBuf>,
    /// Gallery chain name.
    #[arg(long)]
    gallery: Option<String>,
    /// Number of steps (truncates a file chain).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    source: ChainArgs,
    /// Comma-separated horizons, e.g. 64,128,256.
    #[arg(long, value_delimiter = ',')]
    n_sweep: Vec<usize>,
    /// Comma-separated expansion orders.
    #[arg(long, value_delimiter = ',')]
    orders: Vec<usize>,
    #[arg(long)]
    n_paths: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check stochasticity and ellipticity of a chain.
    Validate(ChainArgs),
    /// Characteristic function of S_N on a grid.
    CharFn {
        #[command(flatten)]
        source: ChainArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        xi: Vec<f64>,
    },
    /// Exact cumulants of S_N.
    Cumulants {
        #[command(flatten)]
        source: ChainArgs,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
    /// Edgeworth polynomials of S_N and, with --z, the expansion on a grid.
    Edgeworth {
        #[command(flatten)]
        source: ChainArgs,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, value_delimiter = ',')]
        z: Vec<f64>,
    },
    /// Sup-distance to the normal law across an N sweep.
    BerryEsseen(SweepArgs),
    /// Sup-distance to the expansions of each order across an N sweep.
    ExpansionTest(SweepArgs),
    /// Hexagon structure constants u_n^2, d_n^2 and the small-frequency check.
    Hexagon {
        #[command(flatten)]
        source: ChainArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        xi: Vec<f64>,
        /// Largest n (default: N).
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Transfer-operator audits.
    Pressure(SweepArgs),
    /// Atom diagnostics of lattice sums.
    Counterexample(SweepArgs),
    /// List gallery chains, or write them as chain files.
    Gallery {
        /// Write only this chain.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
}

/// Outcome of a subcommand: `Ok(true)` when all thresholds pass.
type Outcome = Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate(src) => validate(cli, src),
        Command::CharFn { source, xi } => char_fn_cmd(cli, source, xi),
        Command::Cumulants { source, kmax } => cumulants_cmd(cli, source, *kmax),
        Command::Edgeworth { source, order, z } => edgeworth_cmd(cli, source, *order, z),
        Command::BerryEsseen(a) => experiment(cli, "berry-esseen", a),
        Command::ExpansionTest(a) => experiment(cli, "expansion-test", a),
        Command::Pressure(a) => experiment(cli, "pressure", a),
        Command::Counterexample(a) => experiment(cli, "counterexample", a),
        Command::Hexagon { source, xi, n_max } => hexagon_cmd(cli, source, xi, *n_max),
        Command::Gallery { name, n } => gallery_cmd(cli, name.as_deref(), *n),
    }
}

fn load(src: &ChainArgs) -> Result<(ChainSpec, AdditiveFunctional)> {
    match (&src.chain, &src.gallery) {
        (Some(path), _) => {
            let (chain, f) = read_chain_file(path)?;
            let f = f.ok_or_else(|| Error::InvalidSpec(format!("{} has no functional", path.display())))?;
            match src.n {
                Some(n) if n != chain.n_steps() => Ok((chain.truncate(n)?, f.window(1, n)?)),
                _ => Ok((chain, f)),
            }
        }
        (None, Some(name)) => {
            let e = gallery_chain(name, src.n)?;
            Ok((e.chain, e.f))
        }
        (None, None) => Err(Error::InvalidParameter("give --chain <file> or --gallery <name>".into())),
    }
}

/// Writes `text` to `<out>/<file>` or prints it.
fn emit(cli: &Cli, file: &str, text: &str) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(file), text)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_csv(cli: &Cli, file: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_csv(&dir.join(file), header, rows)
        }
        None => {
            println!("{}", header.join(","));
            for r in rows {
                println!("{}", r.join(","));
            }
            Ok(())
        }
    }
}

fn validate(cli: &Cli, src: &ChainArgs) -> Outcome {
    let (chain, f) = load(src)?;
    f.check_compatible(&chain)?;
    let rep = chain.validate_ellipticity()?;
    let body = json!({
        "n_steps": chain.n_steps(),
        "max_states": chain.max_size(),
        "ellipticity": rep,
        "norm_sup": f.norm_sup(),
        "lattice": f.lattice().map(|l| l.l),
        "labels": f.labels(),
    });
    emit(cli, "validate.json", &serde_json::to_string_pretty(&body)?)?;
    Ok(rep.pass)
}

fn char_fn_cmd(cli: &Cli, src: &ChainArgs, xi: &[f64]) -> Outcome {
    let (chain, f) = load(src)?;
    let t = char_fn(&chain, &f, xi)?;
    let rows = t
        .xi
        .iter()
        .zip(&t.values)
        .map(|(x, v)| vec![fmt_real(*x), fmt_real(v.re), fmt_real(v.im), fmt_real(v.norm())])
        .collect();
    emit_csv(cli, "char_fn.csv", &["xi", "re", "im", "abs"], rows)?;
    Ok(true)
}

fn cumulants_cmd(cli: &Cli, src: &ChainArgs, kmax: usize) -> Outcome {
    let (chain, f) = load(src)?;
    let table = cumulants_from_moments(&central_moments(&chain, &f, kmax.max(2))?)?;
    emit(cli, "cumulants.json", &serde_json::to_string_pretty(&table)?)?;
    Ok(true)
}

fn edgeworth_cmd(cli: &Cli, src: &ChainArgs, order: usize, z: &[f64]) -> Outcome {
    let (chain, f) = load(src)?;
    let table = cumulants_from_moments(&central_moments(&chain, &f, order + 2)?)?;
    if !(table.sigma > 1e-8) {
        return Err(Error::DegenerateVariance { sigma: table.sigma });
    }
    let e = EdgeworthExpansion::new(&table, order)?;
    emit(cli, "expansion.json", &serde_json::to_string_pretty(&e.to_json())?)?;
    if !z.is_empty() {
        let rows = z
            .iter()
            .zip(expansion_cdf(&e, z))
            .map(|(z, v)| vec![fmt_real(*z), fmt_real(v)])
            .collect();
        emit_csv(cli, "expansion_cdf.csv", &["z", "value"], rows)?;
    }
    Ok(true)
}

fn hexagon_cmd(cli: &Cli, src: &ChainArgs, xi: &[f64], n_max: Option<usize>) -> Outcome {
    let (chain, f) = load(src)?;
    let n_max = n_max.unwrap_or(chain.n_steps()).min(chain.n_steps());
    let hx = Hexagon::new(&chain, &f)?;
    let mut u_rows = Vec::new();
    let mut d_rows = Vec::new();
    for n in 3..=n_max {
        u_rows.push(vec![n.to_string(), fmt_real(hx.u2(n)?)]);
        for &x in xi {
            d_rows.push(vec![n.to_string(), fmt_real(x), fmt_real(hx.d2(n, x)?)]);
        }
    }
    let violations = small_xi_check(&chain, &f, xi, n_max)?;
    emit_csv(cli, "u2.csv", &["n", "u2"], u_rows)?;
    emit_csv(cli, "d2.csv", &["n", "xi", "d2"], d_rows)?;
    emit(
        cli,
        "hexagon.json",
        &serde_json::to_string_pretty(&json!({"violations": violations.len(), "first": violations.first()}))?,
    )?;
    Ok(violations.is_empty())
}

fn gallery_cmd(cli: &Cli, name: Option<&str>, n: Option<usize>) -> Outcome {
    let Some(dir) = &cli.out else {
        for (name, default_n) in GALLERY {
            println!("{name}\tN = {default_n}");
        }
        return Ok(true);
    };
    std::fs::create_dir_all(dir)?;
    let names: Vec<&str> = match name {
        Some(n) => vec![n],
        None => GALLERY.iter().map(|(n, _)| *n).collect(),
    };
    for name in names {
        let e = gallery_chain(name, n)?;
        let provenance = json!({"generator": "gallery", "name": name, "n_steps": e.chain.n_steps(), "labels": e.f.labels()});
        write_chain_file(&dir.join(format!("{name}.json")), &e.chain, Some(&e.f), Some(provenance))?;
    }
    Ok(true)
}

fn experiment(cli: &Cli, name: &str, a: &SweepArgs) -> Outcome {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let source = match (&a.source.chain, &a.source.gallery) {
                (Some(path), _) => ChainSource::File { path: path.clone() },
                (None, Some(g)) => ChainSource::Gallery { name: g.clone() },
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "give --config, --chain <file> or --gallery <name>".into(),
                    ))
                }
            };
            ExperimentConfig::new(name, source)
        }
    };
    config.experiment = name.to_string();
    if !a.n_sweep.is_empty() {
        config.n_sweep = a.n_sweep.clone();
    } else if config.n_sweep.is_empty() {
        if let Some(n) = a.source.n {
            config.n_sweep = vec![n];
        }
    }
    if !a.orders.is_empty() {
        config.orders = a.orders.clone();
    }
    if a.n_paths.is_some() {
        config.n_paths = a.n_paths;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if cli.exact {
        config.mode = Mode::Exact;
    } else if cli.mc {
        config.mode = Mode::Mc;
    }
    if let Some(dir) = &cli.out {
        config.out_dir = Some(dir.clone());
    }
    config.validate()?;
    let report = run_experiment(&config)?;
    finish(&config, &report)
}

fn finish(config: &ExperimentConfig, report: &Report) -> Outcome {
    match config.out_dir.as_deref() {
        Some(dir) => {
            for p in report.write(dir, config)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => print_tables(report),
    }
    for c in &report.checks {
        println!("{}", c.line());
    }
    Ok(report.passed())
}

fn print_tables(report: &Report) {
    for t in &report.tables {
        println!("# {}", t.name);
        println!("{}", t.header.join(","));
        for r in &t.rows {
            println!("{}", r.join(","));
        }
    }
}
