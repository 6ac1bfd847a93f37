//! Command-line driver: convergence sweeps, budget tables, lower-bound probes,
//! post-hoc verification and a built-in self test.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use translate_approx::experiments::{
    epsilon_table, fit_rate, read_sweep_csv, run_probe, run_selftest, run_sweeps, verify_dominance,
    write_epsilon_csv, write_plot_data, write_probe_csv, write_sweep_csv, EpsilonRow,
    ExperimentConfig, RateModel, SweepRow,
};

#[derive(Parser, Debug)]
#[command(
    name = "translate-approx",
    version,
    about = "Approximation by translates of a single generator on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Plot,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every [sweep] section and emit the error table.
    Sweep(Common),
    /// Emit the error-budget table of every [sweep] section.
    Epsilon(Common),
    /// Run every [probe] section of the lower-bound family.
    ProbeLower(Common),
    /// Re-check error ≤ tolerance · C · ε on an existing sweep table.
    Verify {
        csv: PathBuf,
        #[arg(long, default_value_t = 1.1)]
        tolerance: f64,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

struct Loaded {
    config: ExperimentConfig,
    out: Option<PathBuf>,
    format: Format,
}

fn load(common: &Common) -> Result<Loaded> {
    let mut config = ExperimentConfig::load(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        config.apply_seed(seed);
    }
    let format = match (common.format, config.run.format.as_deref()) {
        (Some(f), _) => f,
        (None, Some("plot")) => Format::Plot,
        _ => Format::Csv,
    };
    let out = common.out.clone().or_else(|| config.run.out.clone());
    Ok(Loaded {
        config,
        out,
        format,
    })
}

fn emit(
    out: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> translate_approx::Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn report_fits(rows: &[SweepRow]) {
    let mut order = Vec::new();
    let mut series: BTreeMap<_, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let Some(e) = r.error() {
            let key = r.series_key();
            if !series.contains_key(&key) {
                order.push(key.clone());
            }
            series.entry(key).or_default().push((r.m as f64, e));
        }
    }
    for key in order {
        let pts = &series[&key];
        let label = format!("{} d={} p={} param={}", key.0, key.1, key.2, key.3);
        for (model, name) in [
            (RateModel::Power, "power"),
            (RateModel::Exponential, "exponential"),
        ] {
            match fit_rate(pts, model) {
                Ok(f) => eprintln!(
                    "{label}: {name} decay {:.4}, R^2 {:.4}{}",
                    f.decay(),
                    f.r_squared,
                    if f.excluded > 0 {
                        format!(", {} exact rows excluded", f.excluded)
                    } else {
                        String::new()
                    }
                ),
                Err(e) => eprintln!("{label}: {name} fit unavailable ({e})"),
            }
        }
    }
}

fn epsilon_as_rows(rows: &[EpsilonRow]) -> Vec<SweepRow> {
    rows.iter()
        .map(|r| SweepRow {
            family: r.family.clone(),
            d: r.d,
            p: r.p,
            param: r.param.clone(),
            m: r.m,
            n_translates: (2 * r.m as u64 + 1).pow(r.d as u32),
            error_quadrature: None,
            error_parseval: None,
            epsilon: Some(r.report.value),
            epsilon_tail: Some(r.report.tail_bound),
            epsilon_variant: Some(r.report.variant.label().to_string()),
            predicted: None,
            seconds: None,
        })
        .collect()
}

fn sweep(common: &Common) -> Result<ExitCode> {
    let l = load(common)?;
    if l.config.sweeps.is_empty() {
        bail!("{} has no [sweep] section", common.config.display());
    }
    let rows = run_sweeps(&l.config.sweeps)?;
    report_fits(&rows);
    match l.format {
        Format::Csv => emit(l.out.as_deref(), |w| write_sweep_csv(&rows, w))?,
        Format::Plot => emit(l.out.as_deref(), |w| write_plot_data(&rows, w))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn epsilon(common: &Common) -> Result<ExitCode> {
    let l = load(common)?;
    if l.config.sweeps.is_empty() {
        bail!("{} has no [sweep] section", common.config.display());
    }
    let mut rows = Vec::new();
    for cfg in &l.config.sweeps {
        rows.extend(epsilon_table(cfg)?);
    }
    for r in rows.iter().filter(|r| r.report.tail_dominated) {
        eprintln!(
            "{} {} p={} m={}: budget is tail-dominated",
            r.family, r.param, r.p, r.m
        );
    }
    match l.format {
        Format::Csv => emit(l.out.as_deref(), |w| write_epsilon_csv(&rows, w))?,
        Format::Plot => emit(l.out.as_deref(), |w| {
            write_plot_data(&epsilon_as_rows(&rows), w)
        })?,
    }
    Ok(ExitCode::SUCCESS)
}

fn probe_lower(common: &Common) -> Result<ExitCode> {
    let l = load(common)?;
    if l.config.probes.is_empty() {
        bail!("{} has no [probe] section", common.config.display());
    }
    if l.format == Format::Plot {
        bail!("probe-lower writes csv only");
    }
    let mut rows = Vec::new();
    for cfg in &l.config.probes {
        rows.extend(run_probe(cfg)?);
    }
    emit(l.out.as_deref(), |w| write_probe_csv(&rows, w))?;
    Ok(ExitCode::SUCCESS)
}

fn verify(csv: &Path, tolerance: f64) -> Result<ExitCode> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        bail!("tolerance must be positive");
    }
    let file =
        std::fs::File::open(csv).with_context(|| format!("cannot open {}", csv.display()))?;
    let rows = read_sweep_csv(file).with_context(|| format!("reading {}", csv.display()))?;
    let report = verify_dominance(&rows, tolerance);
    for s in &report.series {
        println!(
            "{} {} d={} p={} param={}: C = {:e}, worst error/(C eps) = {:.4} at m = {}",
            if s.passed { "PASS" } else { "FAIL" },
            s.family,
            s.d,
            s.p,
            s.param,
            s.constant,
            s.worst_ratio,
            s.worst_m
        );
    }
    if report.skipped > 0 {
        println!("{} rows without error or budget skipped", report.skipped);
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn selftest() -> ExitCode {
    let results = run_selftest();
    for r in &results {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Epsilon(c) => epsilon(c),
        Command::ProbeLower(c) => probe_lower(c),
        Command::Verify { csv, tolerance } => verify(csv, *tolerance),
        Command::Selftest => Ok(selftest()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
