//! The `qh` command line: argument parsing, record formats and dispatch.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qh_core::combinatorics::{generate_weights, DEFAULT_MAX_ATTEMPTS};
use qh_core::localization::{evaluate, IntersectionQuery, Schedule};
use qh_core::rational::{parse_pq, pq, to_pq};
use qh_core::residue::{calibrate, Calibration, ResidueConfig, CALIBRATION_MAX_DEGREE};
use qh_core::verification::{run_suite, tally, CheckReport, Localization, Suite, SuiteConfig};
use qh_core::{Error, Rational};

#[derive(Debug, Parser)]
#[command(name = "qh", version, about = "Exact quasimap intersection numbers of CY hypersurfaces in CP^{N-1}")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one invariant by localization.
    Compute(ComputeArgs),
    /// Run identity checks.
    Verify(VerifyArgs),
    /// Compute every degree-matched invariant on a grid.
    Sweep(SweepArgs),
    /// Select the residue contour configuration against localization.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Weight seed.
    #[arg(long, env = "QH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 1 runs serially.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Record wall-clock milliseconds (otherwise `millis` is 0).
    #[arg(long)]
    pub timings: bool,
}

impl Common {
    fn schedule(&self) -> Schedule {
        if self.jobs == Some(1) {
            Schedule::Serial
        } else {
            Schedule::Parallel
        }
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(long = "N")]
    pub n: u32,
    /// Hypersurface degree (defaults to N).
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 0)]
    pub j: u32,
    #[arg(long, default_value_t = 0)]
    pub a: u32,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub b: i32,
    /// The (2+1)-pointed invariant.
    #[arg(long)]
    pub marked: bool,
    /// Allow queries that break the selection rule.
    #[arg(long)]
    pub force: bool,
    /// Define marked invariants at j = 0.
    #[arg(long)]
    pub j0_extension: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Values of N (comma separated).
    #[arg(long = "N", value_delimiter = ',', default_values_t = [4u32, 5, 6])]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = 3)]
    pub dmax: u32,
    /// Number of weight seeds, counted up from --seed.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    pub num_seeds: u32,
    /// Residue configuration taken from a calibration sidecar.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Skip the expected-fail controls.
    #[arg(long)]
    pub no_controls: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "N", value_delimiter = ',', default_values_t = [4u32, 5, 6])]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    pub dmax: u32,
    /// Hypersurface degree offset: k = N - k_offset.
    #[arg(long, default_value_t = 0)]
    pub k_offset: u32,
    #[arg(long)]
    pub marked: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long = "N", value_delimiter = ',', default_values_t = [4u32, 5])]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = CALIBRATION_MAX_DEGREE)]
    pub dmax: u32,
    #[arg(long, env = "QH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Sidecar path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// One computed invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub query: IntersectionQuery,
    #[serde(with = "pq")]
    pub value: Rational,
    pub seeds: Vec<u64>,
    pub compositions: usize,
    pub millis: u64,
    /// Present for forced queries: whether a second seed changed the value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_dependent: Option<bool>,
}

/// The flat CSV row of a [`Record`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRecord {
    #[serde(rename = "N")]
    pub n: u32,
    pub k: u32,
    pub d: u32,
    pub j: u32,
    pub a: u32,
    pub b: i32,
    pub marked: bool,
    pub value: String,
    /// Seeds joined by `;`.
    pub seeds: String,
    pub compositions: usize,
    pub millis: u64,
    pub weight_dependent: Option<bool>,
}

impl From<&Record> for CsvRecord {
    fn from(r: &Record) -> Self {
        let q = &r.query;
        Self {
            n: q.n,
            k: q.k,
            d: q.d,
            j: q.j,
            a: q.a,
            b: q.b,
            marked: q.marked,
            value: to_pq(&r.value),
            seeds: join_seeds(&r.seeds),
            compositions: r.compositions,
            millis: r.millis,
            weight_dependent: r.weight_dependent,
        }
    }
}

impl TryFrom<CsvRecord> for Record {
    type Error = anyhow::Error;

    fn try_from(c: CsvRecord) -> anyhow::Result<Self> {
        let mut query = IntersectionQuery::two_point(c.n, c.d, c.j, c.a, c.b).with_hypersurface_degree(c.k);
        query.marked = c.marked;
        Ok(Self {
            query,
            value: parse_pq(&c.value)?,
            seeds: split_seeds(&c.seeds)?,
            compositions: c.compositions,
            millis: c.millis,
            weight_dependent: c.weight_dependent,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvReport {
    pub check_name: String,
    /// The inputs object as compact JSON.
    pub inputs: String,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
    pub seeds: String,
    pub millis: u64,
}

impl From<&CheckReport> for CsvReport {
    fn from(r: &CheckReport) -> Self {
        Self {
            check_name: r.check_name.clone(),
            inputs: r.inputs.to_string(),
            lhs: to_pq(&r.lhs),
            rhs: to_pq(&r.rhs),
            pass: r.pass,
            seeds: join_seeds(&r.seeds),
            millis: r.millis,
        }
    }
}

impl TryFrom<CsvReport> for CheckReport {
    type Error = anyhow::Error;

    fn try_from(c: CsvReport) -> anyhow::Result<Self> {
        Ok(Self {
            check_name: c.check_name,
            inputs: serde_json::from_str(&c.inputs)?,
            lhs: parse_pq(&c.lhs)?,
            rhs: parse_pq(&c.rhs)?,
            pass: c.pass,
            seeds: split_seeds(&c.seeds)?,
            millis: c.millis,
        })
    }
}

fn join_seeds(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

fn split_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|t| t.parse().with_context(|| format!("bad seed {t:?}")))
        .collect()
}

pub fn parse_records_json(text: &str) -> anyhow::Result<Vec<Record>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

pub fn parse_records_csv(text: &str) -> anyhow::Result<Vec<Record>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<CsvRecord>()
        .map(|r| Record::try_from(r?))
        .collect()
}

pub fn parse_reports_json(text: &str) -> anyhow::Result<Vec<CheckReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

pub fn parse_reports_csv(text: &str) -> anyhow::Result<Vec<CheckReport>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<CsvReport>()
        .map(|r| CheckReport::try_from(r?))
        .collect()
}

pub fn render_records(records: &[Record], format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => json_lines(records)?,
        Format::Csv => {
            let rows: Vec<CsvRecord> = records.iter().map(CsvRecord::from).collect();
            csv_text(&rows)?
        }
        Format::Text => records
            .iter()
            .map(|r| {
                let q = &r.query;
                let mut line = format!(
                    "{} N={} k={} d={} j={} a={} b={}  {}",
                    if q.marked { "marked   " } else { "two-point" },
                    q.n,
                    q.k,
                    q.d,
                    q.j,
                    q.a,
                    q.b,
                    r.value
                );
                if r.weight_dependent == Some(true) {
                    line.push_str("  (weight dependent)");
                }
                line.push('\n');
                line
            })
            .collect(),
    })
}

pub fn render_reports(reports: &[CheckReport], format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => json_lines(reports)?,
        Format::Csv => {
            let rows: Vec<CsvReport> = reports.iter().map(CsvReport::from).collect();
            csv_text(&rows)?
        }
        Format::Text => {
            let mut out: String = reports
                .iter()
                .map(|r| {
                    format!(
                        "{} {} {}  lhs={} rhs={}\n",
                        if r.pass { "PASS" } else { "FAIL" },
                        r.check_name,
                        r.inputs,
                        r.lhs,
                        r.rhs
                    )
                })
                .collect();
            let (passed, failed) = tally(reports);
            out.push_str(&format!("{passed} passed, {failed} failed\n"));
            out
        }
    })
}

fn json_lines<T: Serialize>(items: &[T]) -> anyhow::Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

fn csv_text<T: Serialize>(rows: &[T]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn emit(text: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// A failure that maps to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Checks(usize),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.into())
    }
}

fn install_pool(jobs: Option<u32>) -> anyhow::Result<()> {
    if let Some(n) = jobs {
        // a second install in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
    }
    Ok(())
}

fn compute_record(q: &IntersectionQuery, seed: u64, schedule: Schedule, timings: bool) -> Result<Record, Failure> {
    let start = Instant::now();
    let weights = generate_weights(seed, q.d, DEFAULT_MAX_ATTEMPTS)?;
    let eval = evaluate(q, &weights, schedule)?;
    let mut seeds = vec![seed];
    let mut weight_dependent = None;
    if q.force && !q.satisfies_selection_rule() {
        let other = seed.wrapping_add(1);
        let second = evaluate(q, &generate_weights(other, q.d, DEFAULT_MAX_ATTEMPTS)?, schedule)?;
        seeds.push(other);
        weight_dependent = Some(second.value != eval.value);
    }
    Ok(Record {
        query: *q,
        value: eval.value,
        seeds,
        compositions: eval.compositions,
        millis: if timings { start.elapsed().as_millis() as u64 } else { 0 },
        weight_dependent,
    })
}

fn run_compute(args: &ComputeArgs) -> Result<(), Failure> {
    install_pool(args.common.jobs)?;
    let mut q = IntersectionQuery::two_point(args.n, args.d, args.j, args.a, args.b)
        .with_hypersurface_degree(args.k.unwrap_or(args.n));
    q.marked = args.marked;
    q.force = args.force;
    q.j0_extension = args.j0_extension;
    let record = compute_record(&q, args.common.seed, args.common.schedule(), args.common.timings)?;
    if record.weight_dependent == Some(true) {
        eprintln!(
            "warning: {q} breaks the selection rule; its value changes between seeds {:?}",
            record.seeds
        );
    }
    emit(&render_records(&[record], args.common.format)?, args.common.output.as_deref())?;
    Ok(())
}

fn load_residue_config(path: &Path) -> anyhow::Result<ResidueConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cals: Vec<Calibration> = serde_json::from_str(&text).context("parsing calibration sidecar")?;
    let mut selected = cals.iter().map(|c| {
        c.selected
            .ok_or_else(|| anyhow!("calibration failed for N={}, d={}", c.n, c.d))
    });
    let first = selected.next().ok_or_else(|| anyhow!("calibration sidecar is empty"))??;
    for s in selected {
        if s? != first {
            bail!("calibration sidecar selects different configurations");
        }
    }
    Ok(first)
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    install_pool(args.common.jobs)?;
    let suite: Suite = args.suite.parse()?;
    let residue = match &args.calibration {
        Some(path) => load_residue_config(path)?,
        None => ResidueConfig::default(),
    };
    let seed = args.common.seed;
    let cfg = SuiteConfig {
        ns: args.n.clone(),
        dmax: args.dmax,
        seeds: (0..args.num_seeds as u64).map(|i| seed.wrapping_add(i)).collect(),
        residue,
        controls: !args.no_controls,
        timings: args.common.timings,
        schedule: args.common.schedule(),
        ..SuiteConfig::default()
    };
    if cfg.dmax < 1 {
        return Err(Failure::Usage(anyhow!("--dmax must be at least 1")));
    }
    let reports = run_suite(suite, &cfg, &Localization::new(cfg.schedule))?;
    emit(&render_reports(&reports, args.common.format)?, args.common.output.as_deref())?;
    let (_, failed) = tally(&reports);
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

/// Degree-matched queries with `j >= 1` for marked, `j >= 0` otherwise.
pub fn sweep_queries(ns: &[u32], dmax: u32, k_offset: u32, marked: bool) -> anyhow::Result<Vec<IntersectionQuery>> {
    let mut out = Vec::new();
    for &n in ns {
        if k_offset >= n {
            bail!("k offset {k_offset} leaves no hypersurface degree for N={n}");
        }
        let k = n - k_offset;
        for d in 1..=dmax {
            let total = n as i64 - 3 + k_offset as i64 * d as i64;
            for j in (marked as i64)..=total + 1 {
                for a in 0..=total + 1 - j {
                    let b = total - j - a;
                    let mut q = IntersectionQuery::two_point(n, d, j as u32, a as u32, b as i32)
                        .with_hypersurface_degree(k);
                    q.marked = marked;
                    out.push(q);
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

fn run_sweep(args: &SweepArgs) -> Result<(), Failure> {
    install_pool(args.common.jobs)?;
    let queries = sweep_queries(&args.n, args.dmax, args.k_offset, args.marked)?;
    let schedule = args.common.schedule();
    let records = queries
        .iter()
        .map(|q| compute_record(q, args.common.seed, schedule, args.common.timings))
        .collect::<Result<Vec<_>, _>>()?;
    emit(&render_records(&records, args.common.format)?, args.common.output.as_deref())?;
    Ok(())
}

fn run_calibrate(args: &CalibrateArgs) -> Result<(), Failure> {
    let mut cals = Vec::new();
    for &n in &args.n {
        for d in 1..=args.dmax {
            cals.push(calibrate(n, d, args.seed)?);
        }
    }
    let mut text = serde_json::to_string_pretty(&cals).map_err(anyhow::Error::from)?;
    text.push('\n');
    emit(&text, args.output.as_deref())?;
    let failed = cals.iter().filter(|c| !c.pass).count();
    for c in cals.iter().filter(|c| !c.pass) {
        eprintln!("calibration failed for N={}, d={}", c.n, c.d);
    }
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Compute(a) => run_compute(a),
        Command::Verify(a) => run_verify(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Calibrate(a) => run_calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
