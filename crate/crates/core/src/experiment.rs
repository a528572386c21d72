//! Parameter sweeps, output rows and the selected-pair density check.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytic::{quadrature_outage, quadrature_with_check, QuadratureResult, QuadratureSpec};
use crate::baselines::{Scheme, SchemeKind};
use crate::channel::{best_relay, pair_density, selected_pair_mass, NetworkRealization};
use crate::ddf_nc::DdfParams;
use crate::eddf_nc::RateSplitPolicy;
use crate::error::{invalid, Error, Result};
use crate::montecarlo::{estimate, Estimate, SimSpec};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// SNR normalized by the minimum SNR supporting `rate`: `ρ/(2^R − 1)`.
pub fn snr_norm(snr: f64, rate: f64) -> f64 {
    snr / (rate * std::f64::consts::LN_2).exp_m1()
}

/// `ρ_dB − 10·log₁₀(2^R − 1)`.
pub fn snr_norm_db(snr_db: f64, rate: f64) -> f64 {
    snr_db - linear_to_db((rate * std::f64::consts::LN_2).exp_m1())
}

/// Inclusive dB sweep `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(invalid("SNR range bounds must be finite"));
        }
        if step <= 0.0 {
            return Err(invalid(format!("SNR step must be positive, got {step}")));
        }
        if stop < start {
            return Err(invalid(format!("SNR range {start}:{stop} is empty")));
        }
        Ok(Self { start, stop, step })
    }

    pub fn single(db: f64) -> Result<Self> {
        Self::new(db, db, 1.0)
    }

    /// Grid points, rounded to 1e-9 dB so that `1:30:0.1` lands on exact
    /// decimals.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| ((self.start + k as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

impl FromStr for SnrRange {
    type Err = Error;

    /// Accepts `start:stop:step`, `start:stop` (1 dB step) or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| invalid(format!("cannot parse SNR range `{s}`")))?;
        match parts[..] {
            [db] => Self::single(db),
            [a, b] => Self::new(a, b, 1.0),
            [a, b, c] => Self::new(a, b, c),
            _ => Err(invalid(format!("cannot parse SNR range `{s}`"))),
        }
    }
}

impl fmt::Display for SnrRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Mc,
    Analytic,
    Both,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Analytic => "analytic",
            Method::Both => "both",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Method::Mc),
            "analytic" => Ok(Method::Analytic),
            "both" => Ok(Method::Both),
            _ => Err(invalid(format!("unknown method `{s}` (mc, analytic, both)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            _ => Err(invalid(format!("unknown format `{s}` (csv, jsonl)"))),
        }
    }
}

/// A grid of cells to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub schemes: Vec<SchemeKind>,
    pub relays: Vec<usize>,
    pub rates: Vec<f64>,
    pub frame: u32,
    pub snr_db: SnrRange,
    pub method: Method,
    pub n_trials: u64,
    /// Every Monte Carlo cell uses this seed, so cells share realizations.
    pub seed: u64,
    pub rate_split: RateSplitPolicy,
    pub quadrature: QuadratureSpec,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

pub const TABLE_FRAME: u32 = 10;
pub const TABLE_RELAYS: [usize; 6] = [1, 2, 3, 4, 6, 8];
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

pub const PRESETS: [&str; 8] = [
    "fig-r1", "fig-r2", "fig-r3", "fig-r4", "fig-r5", "cmp-l1", "cmp-l3", "cmp-l6",
];

impl SweepSpec {
    /// Named grid: `fig-rK` sweeps rs-eddf-nc over every relay count at
    /// `R = K`; `cmp-lK` compares all six schemes with `K` relays at `R = 5`.
    pub fn preset(name: &str) -> Result<Self> {
        let base = |schemes: Vec<SchemeKind>, relays: Vec<usize>, rate: f64| Self {
            schemes,
            relays,
            rates: vec![rate],
            frame: TABLE_FRAME,
            snr_db: SnrRange::new(1.0, 30.0, 1.0).expect("valid range"),
            method: Method::Mc,
            n_trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            rate_split: RateSplitPolicy::default(),
            quadrature: QuadratureSpec::default(),
            output: None,
            format: OutputFormat::Csv,
        };
        let unknown = || invalid(format!("unknown preset `{name}` ({})", PRESETS.join(", ")));
        if let Some(k) = name.strip_prefix("fig-r") {
            let rate: u32 = k.parse().map_err(|_| unknown())?;
            if !(1..=5).contains(&rate) {
                return Err(unknown());
            }
            return Ok(base(vec![SchemeKind::RsEddfNc], TABLE_RELAYS.to_vec(), rate as f64));
        }
        if let Some(k) = name.strip_prefix("cmp-l") {
            let relays: usize = k.parse().map_err(|_| unknown())?;
            if ![1, 3, 6].contains(&relays) {
                return Err(unknown());
            }
            return Ok(base(SchemeKind::ALL.to_vec(), vec![relays], 5.0));
        }
        Err(unknown())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.relays.is_empty() || self.rates.is_empty() {
            return Err(invalid("scheme, relay and rate lists must be nonempty"));
        }
        if self.relays.contains(&0) {
            return Err(invalid("relay counts must be positive"));
        }
        if self.method != Method::Analytic && self.n_trials == 0 {
            return Err(invalid("at least one trial is required"));
        }
        for &rate in &self.rates {
            DdfParams::new(self.frame, rate, 1.0)?;
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &kind in &self.schemes {
            for &relays in &self.relays {
                for &rate in &self.rates {
                    for snr_db in self.snr_db.points() {
                        cells.push(Cell {
                            kind,
                            relays,
                            rate,
                            snr_db,
                        });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    kind: SchemeKind,
    relays: usize,
    rate: f64,
    snr_db: f64,
}

/// One output line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub scheme: String,
    #[serde(rename = "L")]
    pub relays: usize,
    #[serde(rename = "J")]
    pub frame: u32,
    #[serde(rename = "R")]
    pub rate: f64,
    pub rho_db: f64,
    pub snr_norm_db: f64,
    pub method: String,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
    /// Empty unless the EDDF split is active.
    pub beta: Option<f64>,
    pub r1: Option<f64>,
}

pub const CSV_HEADER: &str = "scheme,L,J,R,rho_db,snr_norm_db,method,estimate,stderr,n_trials,seed,beta,r1";

/// Monte Carlo and quadrature results for one cell of a `both` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub scheme: SchemeKind,
    pub relays: usize,
    pub rate: f64,
    pub snr_db: f64,
    pub mc: Estimate,
    pub analytic: QuadratureResult,
    pub pass: bool,
}

impl fmt::Display for CrossCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} L={} R={} {} dB: mc {:.6e} ± {:.2e}, analytic {:.6e} (delta {:.1e}) {}",
            self.scheme,
            self.relays,
            self.rate,
            self.snr_db,
            self.mc.p_hat,
            self.mc.stderr,
            self.analytic.value,
            self.analytic.delta,
            if self.pass { "ok" } else { "MISMATCH" }
        )
    }
}

/// Whether a Monte Carlo estimate is consistent with a quadrature value
/// carrying self-check error `delta`: within `3σ + delta`, or within the
/// exact interval widened by `delta` when too few events were counted for
/// the normal approximation.
pub fn agrees(mc: &Estimate, value: f64, delta: f64) -> bool {
    if mc.is_exact_interval() {
        mc.ci95_lo - delta <= value && value <= mc.ci95_hi + delta
    } else {
        (mc.p_hat - value).abs() <= 3.0 * mc.stderr + delta
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub rows: Vec<OutputRow>,
    /// Filled for `Method::Both` only.
    pub checks: Vec<CrossCheck>,
}

impl SweepOutput {
    pub fn validated(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Evaluates every cell, in grid order scheme → L → R → SNR → method, and
/// writes the rows to `spec.output` when set.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let results: Vec<(Vec<OutputRow>, Option<CrossCheck>)> = spec
        .cells()
        .into_par_iter()
        .map(|cell| run_cell(spec, cell))
        .collect::<Result<_>>()?;
    let mut out = SweepOutput::default();
    for (rows, check) in results {
        out.rows.extend(rows);
        out.checks.extend(check);
    }
    if let Some(path) = &spec.output {
        write_rows_to_path(path, spec.format, &out.rows)?;
    }
    Ok(out)
}

fn run_cell(spec: &SweepSpec, cell: Cell) -> Result<(Vec<OutputRow>, Option<CrossCheck>)> {
    let snr = db_to_linear(cell.snr_db);
    let params = DdfParams::new(spec.frame, cell.rate, snr)?;
    let scheme = Scheme::new(cell.kind, params, spec.rate_split)?;
    let template = OutputRow {
        scheme: cell.kind.name().to_string(),
        relays: cell.relays,
        frame: spec.frame,
        rate: cell.rate,
        rho_db: cell.snr_db,
        snr_norm_db: snr_norm_db(cell.snr_db, cell.rate),
        method: String::new(),
        estimate: 0.0,
        stderr: None,
        n_trials: None,
        seed: None,
        beta: scheme.split().map(|s| s.beta()),
        r1: scheme.split().map(|s| s.r1()),
    };
    let mc_row = |e: &Estimate| OutputRow {
        method: Method::Mc.name().into(),
        estimate: e.p_hat,
        stderr: Some(e.stderr),
        n_trials: Some(e.n_trials),
        seed: Some(e.seed),
        ..template.clone()
    };
    let analytic_row = |v: f64| OutputRow {
        method: Method::Analytic.name().into(),
        estimate: v,
        ..template.clone()
    };
    let sim = || estimate(&SimSpec::new(scheme, cell.relays, spec.n_trials, spec.seed)?);
    match spec.method {
        Method::Mc => Ok((vec![mc_row(&sim()?)], None)),
        Method::Analytic => {
            let v = quadrature_outage(&scheme, cell.relays, &spec.quadrature)?;
            Ok((vec![analytic_row(v)], None))
        }
        Method::Both => {
            let mc = sim()?;
            let q = quadrature_with_check(&scheme, cell.relays, &spec.quadrature)?;
            let check = CrossCheck {
                scheme: cell.kind,
                relays: cell.relays,
                rate: cell.rate,
                snr_db: cell.snr_db,
                mc,
                analytic: q,
                pass: agrees(&mc, q.value, q.delta),
            };
            Ok((vec![mc_row(&mc), analytic_row(q.value)], Some(check)))
        }
    }
}

pub fn write_csv<W: Write>(writer: W, rows: &[OutputRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(mut writer: W, rows: &[OutputRow]) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut writer, row)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_rows<W: Write>(writer: W, format: OutputFormat, rows: &[OutputRow]) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(writer, rows),
        OutputFormat::Jsonl => write_jsonl(writer, rows),
    }
}

fn write_rows_to_path(path: &std::path::Path, format: OutputFormat, rows: &[OutputRow]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(file), format, rows)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<OutputRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(invalid(format!("unexpected CSV header `{}`", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<OutputRow>> {
    reader
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}

/// Histogram test of sampled max-min pairs against the closed-form density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfReport {
    pub sampled_relays: usize,
    pub analytic_relays: usize,
    pub samples: u64,
    pub seed: u64,
    /// Chi-square statistic over cells with expected count ≥ 5; the
    /// remaining cells and the overflow are pooled into one bin.
    pub chi2: f64,
    pub dof: usize,
    /// Upper 10⁻³ quantile of the chi-square distribution with `dof`.
    pub critical: f64,
    pub p_value: f64,
    /// `Σ |observed/n − expected mass|` over all cells and the overflow.
    pub l1: f64,
    /// Midpoint integral of the density over `[0, 30]²` on a 4096² grid.
    pub normalization: f64,
    pub chi2_pass: bool,
    pub l1_pass: bool,
    pub normalization_pass: bool,
    pub pass: bool,
}

pub const PDF_BINS: usize = 10;
pub const PDF_RANGE: f64 = 4.0;
pub const PDF_SIGNIFICANCE: f64 = 1e-3;
pub const PDF_L1_TOLERANCE: f64 = 0.02;
pub const PDF_NORMALIZATION_TOLERANCE: f64 = 1e-4;

pub fn pdf_check(relays: usize, samples: u64, seed: u64) -> Result<PdfReport> {
    pdf_check_against(relays, relays, samples, seed)
}

/// Samples with `sampled_relays` and compares against the density for
/// `analytic_relays`; a mismatch should fail.
pub fn pdf_check_against(
    sampled_relays: usize,
    analytic_relays: usize,
    samples: u64,
    seed: u64,
) -> Result<PdfReport> {
    if sampled_relays == 0 || analytic_relays == 0 {
        return Err(invalid("relay counts must be positive"));
    }
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    let observed = pair_histogram(sampled_relays, samples, seed)?;
    let n = samples as f64;

    let width = PDF_RANGE / PDF_BINS as f64;
    let mut expected = Vec::with_capacity(PDF_BINS * PDF_BINS + 1);
    for i in 0..PDF_BINS {
        for j in 0..PDF_BINS {
            let x = i as f64 * width..(i + 1) as f64 * width;
            let y = j as f64 * width..(j + 1) as f64 * width;
            expected.push(selected_pair_mass(x, y, analytic_relays)?);
        }
    }
    let inside: f64 = expected.iter().sum();
    expected.push((1.0 - inside).max(0.0));

    let l1 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &p)| (o as f64 / n - p).abs())
        .sum::<f64>();

    let mut chi2 = 0.0;
    let mut bins = 0usize;
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(&expected) {
        let e = n * p;
        if e >= 5.0 {
            chi2 += (o as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pooled_o += o as f64;
            pooled_e += e;
        }
    }
    if pooled_e > 0.0 {
        chi2 += (pooled_o - pooled_e).powi(2) / pooled_e;
        bins += 1;
    } else if pooled_o > 0.0 {
        chi2 = f64::INFINITY;
    }
    let dof = bins.saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    let critical = upper_quantile(&dist, PDF_SIGNIFICANCE);
    let p_value = if chi2.is_finite() { dist.sf(chi2) } else { 0.0 };

    let normalization = density_integral(analytic_relays, 30.0, 4096);
    let chi2_pass = chi2 <= critical;
    let l1_pass = l1 <= PDF_L1_TOLERANCE;
    let normalization_pass = (normalization - 1.0).abs() <= PDF_NORMALIZATION_TOLERANCE;
    Ok(PdfReport {
        sampled_relays,
        analytic_relays,
        samples,
        seed,
        chi2,
        dof,
        critical,
        p_value,
        l1,
        normalization,
        chi2_pass,
        l1_pass,
        normalization_pass,
        pass: chi2_pass && l1_pass && normalization_pass,
    })
}

/// `x` with `P[X > x] = alpha`, by bisection on the survival function.
fn upper_quantile(dist: &ChiSquared, alpha: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while dist.sf(hi) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist.sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Counts of max-min selected pairs per cell of the `PDF_BINS²` grid on
/// `[0, PDF_RANGE)²`, with the overflow last. Sample `i` uses stream `i`.
fn pair_histogram(relays: usize, samples: u64, seed: u64) -> Result<Vec<u64>> {
    const CHUNK: u64 = 8192;
    let cells = PDF_BINS * PDF_BINS + 1;
    let key = ChaCha8Rng::seed_from_u64(seed);
    let empty = NetworkRealization::new(0.0, vec![0.0; relays], vec![0.0; relays])?;
    let bin = |z: f64| (z / PDF_RANGE * PDF_BINS as f64) as usize;
    let counts = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut real = empty.clone();
            let mut hist = vec![0u64; cells];
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = key.clone();
                rng.set_stream(i);
                real.resample(&mut rng);
                let pair = real.pair(best_relay(&real));
                let (a, b) = (bin(pair.z1), bin(pair.z2));
                let k = if a < PDF_BINS && b < PDF_BINS { a * PDF_BINS + b } else { cells - 1 };
                hist[k] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

fn density_integral(relays: usize, z_max: f64, points: usize) -> f64 {
    let h = z_max / points as f64;
    let rows: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| {
            let z1 = (i as f64 + 0.5) * h;
            (0..points)
                .map(|j| pair_density(z1, (j as f64 + 0.5) * h, relays))
                .sum::<f64>()
        })
        .collect();
    rows.iter().sum::<f64>() * h * h
}
