use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use relay_outage::analytic::QuadratureSpec;
use relay_outage::experiment::{
    pdf_check_against, run_sweep, write_rows, Method, OutputFormat, SnrRange, SweepOutput,
    SweepSpec, DEFAULT_SEED, DEFAULT_TRIALS, TABLE_FRAME,
};
use relay_outage::{RateSplitPolicy, SchemeKind};

mod config;

use config::Config;

/// Outage probability of relay selection with DDF/EDDF and network coding.
#[derive(Debug, Parser)]
#[command(name = "relay-outage", version)]
struct Cli {
    /// Flat JSON file with long flag names as keys; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo estimates over a grid.
    Simulate(GridArgs),
    /// Quadrature evaluation over a grid.
    Analytic(GridArgs),
    /// A named or custom sweep.
    Sweep(SweepArgs),
    /// Histogram test of the selected-pair density.
    PdfCheck(PdfArgs),
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Comma-separated scheme names, or `all`.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated relay counts.
    #[arg(long)]
    relays: Option<String>,
    /// Codeword length J in symbol intervals.
    #[arg(long)]
    frame: Option<u32>,
    /// Comma-separated rates in bps/Hz.
    #[arg(long)]
    rate: Option<String>,
    /// SNR sweep in dB, `start:stop:step`.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Quadrature truncation per axis.
    #[arg(long)]
    zmax: Option<f64>,
    /// Explicit EDDF split; requires --r1.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    format: Option<String>,
    /// mc, analytic or both (sweep only).
    #[arg(long)]
    method: Option<String>,
    /// Run both methods and exit with status 2 if they disagree.
    #[arg(long)]
    validate: bool,
    /// Reject EDDF cells outside the multiplexing-gain regime.
    #[arg(long = "no-fallback")]
    no_fallback: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// fig-r1 … fig-r5, cmp-l1, cmp-l3 or cmp-l6.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Debug, Args)]
struct PdfArgs {
    /// Comma-separated relay counts.
    #[arg(long)]
    relays: Option<String>,
    /// Compare against the density of a different relay count.
    #[arg(long = "analytic-relays")]
    analytic_relays: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs that completed but failed a check.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(threads) = pick(cli.threads, &config, "threads")? {
        if threads == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match cli.command {
        Command::Simulate(args) => {
            let validate = args.validate || config.flag("validate")?;
            let method = if validate { Method::Both } else { Method::Mc };
            grid_command(&args, &config, None, Some(method))
        }
        Command::Analytic(args) => grid_command(&args, &config, None, Some(Method::Analytic)),
        Command::Sweep(args) => {
            let preset: Option<String> = pick(args.preset.clone(), &config, "preset")?;
            grid_command(&args.grid, &config, preset.as_deref(), None)
        }
        Command::PdfCheck(args) => pdf_command(&args, &config),
    }
}

fn pick<T>(cli: Option<T>, config: &Config, key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    match cli {
        Some(v) => Ok(Some(v)),
        None => config.get(key),
    }
}

fn parse<T>(s: &str, what: &str) -> Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| anyhow::anyhow!("invalid {what} `{s}`: {e}"))
}

fn parse_list<T>(s: &str, what: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = s.split(',').map(|p| parse(p, what)).collect::<Result<_>>()?;
    if items.is_empty() {
        bail!("empty {what} list");
    }
    Ok(items)
}

fn parse_schemes(s: &str) -> Result<Vec<SchemeKind>> {
    if s.trim() == "all" {
        return Ok(SchemeKind::ALL.to_vec());
    }
    parse_list(s, "scheme")
}

fn grid_command(
    args: &GridArgs,
    config: &Config,
    preset: Option<&str>,
    forced: Option<Method>,
) -> Result<()> {
    let spec = build_spec(args, config, preset, forced)?;
    let out = run_sweep(&SweepSpec { output: None, ..spec.clone() })?;
    emit(&spec, &out)?;
    report_checks(&out)
}

fn build_spec(
    args: &GridArgs,
    config: &Config,
    preset: Option<&str>,
    forced: Option<Method>,
) -> Result<SweepSpec> {
    let mut spec = match preset {
        Some(name) => SweepSpec::preset(name)?,
        None => SweepSpec {
            schemes: vec![SchemeKind::RsDdfNc],
            relays: vec![2],
            rates: vec![1.0],
            frame: TABLE_FRAME,
            snr_db: SnrRange::new(1.0, 30.0, 1.0)?,
            method: Method::Mc,
            n_trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            rate_split: RateSplitPolicy::default(),
            quadrature: QuadratureSpec::default(),
            output: None,
            format: OutputFormat::Csv,
        },
    };
    if let Some(s) = pick::<String>(args.scheme.clone(), config, "scheme")? {
        spec.schemes = parse_schemes(&s)?;
    }
    if let Some(s) = pick::<String>(args.relays.clone(), config, "relays")? {
        spec.relays = parse_list(&s, "relay count")?;
    }
    if let Some(s) = pick::<String>(args.rate.clone(), config, "rate")? {
        spec.rates = parse_list(&s, "rate")?;
    }
    if let Some(s) = pick::<String>(args.snr_db.clone(), config, "snr-db")? {
        spec.snr_db = s.parse()?;
    }
    if let Some(j) = pick(args.frame, config, "frame")? {
        spec.frame = j;
    }
    if let Some(n) = pick(args.trials, config, "trials")? {
        spec.n_trials = n;
    }
    if let Some(seed) = pick(args.seed, config, "seed")? {
        spec.seed = seed;
    }
    let grid = pick(args.grid, config, "grid")?.unwrap_or(spec.quadrature.points());
    let zmax = pick(args.zmax, config, "zmax")?.unwrap_or(spec.quadrature.z_max());
    spec.quadrature = QuadratureSpec::new(zmax, grid)?;
    if args.no_fallback || config.flag("no-fallback")? {
        spec.quadrature = spec.quadrature.forbid_fallback();
    }
    match (pick(args.beta, config, "beta")?, pick(args.r1, config, "r1")?) {
        (Some(beta), Some(r1)) => spec.rate_split = RateSplitPolicy::Explicit { beta, r1 },
        (None, None) => {}
        _ => bail!("--beta and --r1 must be given together"),
    }
    spec.method = match forced {
        Some(m) => m,
        None => {
            let chosen = match pick::<String>(args.method.clone(), config, "method")? {
                Some(m) => m.parse()?,
                None => spec.method,
            };
            if args.validate || config.flag("validate")? {
                Method::Both
            } else {
                chosen
            }
        }
    };
    if let Some(f) = pick::<String>(args.format.clone(), config, "format")? {
        spec.format = f.parse()?;
    }
    spec.output = pick(args.out.clone(), config, "out")?;
    spec.validate()?;
    Ok(spec)
}

fn emit(spec: &SweepSpec, out: &SweepOutput) -> Result<()> {
    match &spec.output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            write_rows(std::io::BufWriter::new(file), spec.format, &out.rows)?;
        }
        None => write_rows(std::io::stdout().lock(), spec.format, &out.rows)?,
    }
    Ok(())
}

fn report_checks(out: &SweepOutput) -> Result<()> {
    if out.checks.is_empty() {
        return Ok(());
    }
    let failed: Vec<_> = out.checks.iter().filter(|c| !c.pass).collect();
    for c in &failed {
        eprintln!("{c}");
    }
    eprintln!(
        "cross-validation: {}/{} cells agree",
        out.checks.len() - failed.len(),
        out.checks.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(format!("{} cells disagree beyond tolerance", failed.len())).into())
    }
}

fn pdf_command(args: &PdfArgs, config: &Config) -> Result<()> {
    let relays: Vec<usize> = match pick::<String>(args.relays.clone(), config, "relays")? {
        Some(s) => parse_list(&s, "relay count")?,
        None => vec![1, 2, 4, 8],
    };
    let trials = pick(args.trials, config, "trials")?.unwrap_or(1_000_000);
    let seed = pick(args.seed, config, "seed")?.unwrap_or(DEFAULT_SEED);
    let mut sink: Box<dyn Write> = match pick(args.out.clone(), config, "out")? {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut failed = 0;
    for &l in &relays {
        let report = pdf_check_against(l, args.analytic_relays.unwrap_or(l), trials, seed)?;
        serde_json::to_writer(&mut sink, &report)?;
        writeln!(sink)?;
        eprintln!(
            "L={} vs density L={}: chi2 {:.1} (critical {:.1}, dof {}), L1 {:.4}, normalization {:.6} {}",
            report.sampled_relays,
            report.analytic_relays,
            report.chi2,
            report.critical,
            report.dof,
            report.l1,
            report.normalization,
            if report.pass { "PASS" } else { "FAIL" }
        );
        if !report.pass {
            failed += 1;
        }
    }
    sink.flush()?;
    if failed > 0 {
        return Err(CheckFailed(format!("{failed} density checks failed")).into());
    }
    Ok(())
}
