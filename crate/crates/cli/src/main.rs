//! `disperse`: run, scan, evaluate oracles and self-validate.

mod config;
mod oracle;
mod output;
mod svg;

use std::fs::File;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disperse::harness::{self, HarnessError, ValidateOptions};
use disperse::TopologySpec;
use toml::Value;

use config::{FlatConfig, Format, Resolved};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("output: {0}")]
    Io(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

#[derive(Debug, Parser)]
#[command(name = "disperse", version, about = "Synchronous dispersion processes on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run replicas of one experiment.
    Run(RunArgs),
    /// Run one experiment per value of a scan axis.
    Scan(ScanArgs),
    /// Evaluate a closed-form oracle.
    Oracle(oracle::OracleArgs),
    /// Check the oracles against independent computations.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// density, lazy-p, tree-k or grid-dim.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated, strictly increasing values.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Smaller Monte Carlo samples.
    #[arg(long)]
    quick: bool,
    #[arg(long, hide = true)]
    corrupt_oracle: bool,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only `json` is accepted; the default is a text report.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Flags shared by `run` and `scan`. Each one mirrors a config key and
/// overrides it.
#[derive(Debug, Default, Args)]
struct CommonArgs {
    /// TOML config, or any output file of a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    /// Star leaf count.
    #[arg(long)]
    leaves: Option<u64>,
    #[arg(long)]
    particles: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    dim: Option<u64>,
    #[arg(long)]
    leaf_depth: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    with_loops: Option<bool>,
    /// Cayley group moduli, e.g. `5,5`.
    #[arg(long)]
    moduli: Option<String>,
    /// Cayley generators, e.g. `(1,0),(4,0),(0,1),(0,4)`.
    #[arg(long)]
    generators: Option<String>,
    #[arg(long)]
    lazy_p: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    record_trajectories: Option<bool>,
    #[arg(long)]
    omega: Option<f64>,
    /// on-demand or predetermined.
    #[arg(long)]
    walk_mode: Option<String>,
}

fn int(x: u64) -> Value {
    i64::try_from(x).map_or_else(|_| Value::String(x.to_string()), Value::Integer)
}

impl CommonArgs {
    fn overrides(&self) -> FlatConfig {
        let mut m = FlatConfig::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("family", self.family.clone().map(Value::String));
        put("n", self.n.map(int));
        put("leaves", self.leaves.map(int));
        put("particles", self.particles.map(int));
        put("k", self.k.map(int));
        put("dim", self.dim.map(int));
        put("leaf_depth", self.leaf_depth.map(int));
        put("with_loops", self.with_loops.map(Value::Boolean));
        put("moduli", self.moduli.clone().map(Value::String));
        put("generators", self.generators.clone().map(Value::String));
        put("lazy_p", self.lazy_p.map(Value::Float));
        put("budget", self.budget.map(int));
        put("replicas", self.replicas.map(int));
        put("seed", self.seed.map(|s| Value::String(s.to_string())));
        put("parallelism", self.parallelism.map(|p| int(p as u64)));
        put("record_trajectories", self.record_trajectories.map(Value::Boolean));
        put("omega", self.omega.map(Value::Float));
        put("walk_mode", self.walk_mode.clone().map(Value::String));
        put("out", self.out.as_ref().map(|p| Value::String(p.display().to_string())));
        let format = self.format.or_else(|| self.out.as_deref().and_then(format_from_extension));
        put("format", format.map(|f| Value::String(f.name().into())));
        if self.leaf_depth.is_some() {
            // an explicit depth wins over an `auto_leaf_depth` from a header
            put("auto_leaf_depth", Some(Value::Boolean(false)));
        }
        m
    }

    fn merged(&self, extra: FlatConfig) -> Result<FlatConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => config::load(p)?,
            None => FlatConfig::new(),
        };
        cfg.extend(self.overrides());
        cfg.extend(extra);
        Ok(cfg)
    }
}

fn format_from_extension(p: &Path) -> Option<Format> {
    match p.extension()?.to_str()? {
        "csv" => Some(Format::Csv),
        "ndjson" | "jsonl" => Some(Format::Ndjson),
        "json" => Some(Format::Json),
        "svg" => Some(Format::SvgSummary),
        _ => None,
    }
}

/// Opens the destination before any work so a bad path fails fast.
fn open_sink(out: Option<&str>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("cannot write {p}: {e}")))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit(mut sink: Box<dyn Write>, text: &str) -> Result<(), CliError> {
    sink.write_all(text.as_bytes())
        .and_then(|_| sink.flush())
        .map_err(|e| CliError::Io(e.to_string()))
}

fn warn_hypercube_cap(r: &Resolved) {
    if let (TopologySpec::Hypercube { dim }, Some(w)) = (&r.experiment.topology, r.omega) {
        let cap = 2f64.powf(f64::from(*dim) / 2.0) / w;
        if r.experiment.particles as f64 > cap {
            eprintln!(
                "warning: {} particles exceed sqrt(2^{dim})/omega = {cap:.3}; the hypercube bounds do not apply",
                r.experiment.particles
            );
        }
    }
}

fn counter(total: u64, label: &str) -> impl Fn(u64) + Sync + '_ {
    let tty = io::stderr().is_terminal();
    move |done| {
        if tty {
            eprint!("\r{label}replica {done}/{total}");
            if done == total {
                eprintln!();
            }
        }
    }
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let cfg = a.common.merged(FlatConfig::new())?;
    let r = config::resolve(&cfg, false, Format::Ndjson)?;
    warn_hypercube_cap(&r);
    let table = config::resolved_table(&r)?;
    let sink = open_sink(r.out.as_deref())?;
    let batch = harness::run_replicas_with_progress(&r.experiment, r.parallelism, &counter(r.experiment.replicas, ""))?;
    emit(sink, &output::encode_run(&batch, &table, r.format)?)
}

fn cmd_scan(a: &ScanArgs) -> Result<(), CliError> {
    let mut extra = FlatConfig::new();
    if let Some(axis) = &a.axis {
        extra.insert("axis".into(), Value::String(axis.clone()));
    }
    if let Some(grid) = &a.grid {
        let values = config::parse_grid(grid)?.into_iter().map(Value::Float).collect();
        extra.insert("grid".into(), Value::Array(values));
    }
    let cfg = a.common.merged(extra)?;
    let r = config::resolve(&cfg, true, Format::Csv)?;
    let spec = r.scan_spec().expect("scan resolved");
    let table = config::resolved_table(&r)?;
    let sink = open_sink(r.out.as_deref())?;
    let total = r.experiment.replicas;
    let points = spec.grid.len();
    let tty = io::stderr().is_terminal();
    let progress = move |row: usize, done: u64| {
        if tty {
            eprint!("\rpoint {}/{points} replica {done}/{total}", row + 1);
            if done == total && row + 1 == points {
                eprintln!();
            }
        }
    };
    let rows = harness::scan_with_progress(&spec, r.parallelism, &progress)?;
    emit(sink, &output::encode_scan(&rows, &table, r.format)?)
}

fn cmd_oracle(a: &oracle::OracleArgs) -> Result<(), CliError> {
    let sink = open_sink(a.out.as_ref().map(|p| p.display().to_string()).as_deref())?;
    let v = oracle::evaluate(a)?;
    emit(sink, &format!("{v}\n"))
}

fn cmd_validate(a: &ValidateArgs) -> Result<bool, CliError> {
    match a.format {
        None | Some(Format::Json) => {}
        Some(f) => return Err(CliError::Usage(format!("validate cannot write `{}`", f.name()))),
    }
    let sink = open_sink(a.out.as_ref().map(|p| p.display().to_string()).as_deref())?;
    let opts = ValidateOptions { corrupt_oracle: a.corrupt_oracle, quick: a.quick, parallelism: a.parallelism.unwrap_or(0) };
    let report = harness::validate_suite(opts)?;
    let json = a.format == Some(Format::Json) || a.out.is_some();
    let text = if json {
        format!("{}\n", serde_json::to_string(&report).expect("reports serialise"))
    } else {
        format!("{report}\n")
    };
    if json && a.out.is_some() {
        eprintln!("{report}");
    }
    emit(sink, &text)?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("invalid arguments");
                    eprintln!("disperse: {}", first.trim_start_matches("error: "));
                    ExitCode::from(2)
                }
            };
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Scan(a) => cmd_scan(a).map(|_| true),
        Command::Oracle(a) => cmd_oracle(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("disperse: {}", e.to_string().lines().next().unwrap_or_default());
            ExitCode::from(2)
        }
    }
}
