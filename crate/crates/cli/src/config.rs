//! Flat key/value configuration: loading, merging with flags, resolving to
//! an experiment, and writing the resolved form back out.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use disperse::engine::{Variant, WalkMode, DEFAULT_BUDGET};
use disperse::harness::{ExperimentSpec, ScanAxis, ScanSpec, DEFAULT_GRID_OMEGA, DEFAULT_HYPERCUBE_OMEGA};
use disperse::oracles::grid_dispersal_time;
use disperse::scalar::ceil_count;
use disperse::TopologySpec;
use toml::{Table, Value};

use crate::CliError;

pub type FlatConfig = BTreeMap<String, Value>;

const TOPOLOGY_KEYS: [&str; 9] = ["family", "n", "with_loops", "leaves", "k", "leaf_depth", "dim", "moduli", "generators"];
const EXPERIMENT_KEYS: [&str; 9] = [
    "particles",
    "lazy_p",
    "budget",
    "replicas",
    "seed",
    "walk_mode",
    "record_trajectories",
    "omega",
    "auto_leaf_depth",
];
const SCAN_KEYS: [&str; 2] = ["axis", "grid"];
const OUTPUT_KEYS: [&str; 3] = ["format", "parallelism", "out"];

fn section_of(key: &str) -> Option<&'static str> {
    if TOPOLOGY_KEYS.contains(&key) {
        Some("topology")
    } else if EXPERIMENT_KEYS.contains(&key) {
        Some("experiment")
    } else if SCAN_KEYS.contains(&key) {
        Some("scan")
    } else if OUTPUT_KEYS.contains(&key) {
        Some("output")
    } else {
        None
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Reads a config from a TOML file, or from the header embedded in a
/// previous CSV, NDJSON, JSON or SVG output.
pub fn load(path: &Path) -> Result<FlatConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let trimmed = text.trim_start();
    let table = if trimmed.starts_with('{') {
        let first = trimmed.lines().next().unwrap_or_default();
        let doc: serde_json::Value = serde_json::from_str(trimmed)
            .or_else(|_| serde_json::from_str(first))
            .map_err(|e| bad(format!("{}: malformed JSON header: {e}", path.display())))?;
        let cfg = doc.get("config").cloned().ok_or_else(|| bad(format!("{}: no `config` object", path.display())))?;
        serde_json::from_value::<Table>(cfg).map_err(|e| bad(format!("{}: bad embedded config: {e}", path.display())))?
    } else if trimmed.starts_with('<') {
        let start = trimmed.find("<![CDATA[").ok_or_else(|| bad(format!("{}: no embedded config", path.display())))?;
        let body = &trimmed[start + 9..];
        let end = body.find("]]>").ok_or_else(|| bad(format!("{}: unterminated config", path.display())))?;
        parse_toml(&body[..end], path)?
    } else if trimmed.starts_with('#') {
        let header: Vec<&str> = trimmed
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').strip_prefix(' ').unwrap_or(l.trim_start_matches('#')))
            .collect();
        parse_toml(&header.join("\n"), path)?
    } else {
        parse_toml(&text, path)?
    };
    flatten(table)
}

fn parse_toml(s: &str, path: &Path) -> Result<Table, CliError> {
    s.parse::<Table>().map_err(|e| bad(format!("{}: {}", path.display(), e.message())))
}

/// Merges sections into one key space; keys must be known and unique.
pub fn flatten(table: Table) -> Result<FlatConfig, CliError> {
    let mut out = FlatConfig::new();
    let put = |k: String, v: Value, out: &mut FlatConfig| -> Result<(), CliError> {
        let k = k.replace('-', "_");
        if section_of(&k).is_none() {
            return Err(bad(format!("unknown config key `{k}`")));
        }
        if out.insert(k.clone(), v).is_some() {
            return Err(bad(format!("config key `{k}` given twice")));
        }
        Ok(())
    };
    for (k, v) in table {
        match v {
            Value::Table(inner) => {
                for (ik, iv) in inner {
                    if matches!(iv, Value::Table(_)) {
                        return Err(bad(format!("nested section `{k}.{ik}` is not supported")));
                    }
                    put(ik, iv, &mut out)?;
                }
            }
            other => put(k, other, &mut out)?,
        }
    }
    Ok(out)
}

fn as_string(key: &str, v: &Value) -> Result<String, CliError> {
    let join = |xs: &[Value]| -> Result<String, CliError> {
        xs.iter()
            .map(|x| match x {
                Value::Integer(i) => Ok(i.to_string()),
                _ => Err(bad(format!("`{key}` entries must be integers"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.join(","))
    };
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(xs) if xs.iter().all(|x| matches!(x, Value::Array(_))) && !xs.is_empty() => xs
            .iter()
            .map(|x| match x {
                Value::Array(inner) => join(inner).map(|s| format!("({s})")),
                _ => unreachable!(),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        Value::Array(xs) => join(xs)?,
        other => return Err(bad(format!("unsupported value for `{key}`: {other}"))),
    })
}

fn get_u64(cfg: &FlatConfig, key: &str) -> Result<Option<u64>, CliError> {
    cfg.get(key)
        .map(|v| match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            Value::String(s) => s.trim().parse().map_err(|_| bad(format!("`{key}` must be a non-negative integer"))),
            _ => Err(bad(format!("`{key}` must be a non-negative integer"))),
        })
        .transpose()
}

fn get_f64(cfg: &FlatConfig, key: &str) -> Result<Option<f64>, CliError> {
    cfg.get(key)
        .map(|v| match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            Value::String(s) => s.trim().parse().map_err(|_| bad(format!("`{key}` must be a number"))),
            _ => Err(bad(format!("`{key}` must be a number"))),
        })
        .transpose()
}

fn get_bool(cfg: &FlatConfig, key: &str) -> Result<Option<bool>, CliError> {
    cfg.get(key)
        .map(|v| match v {
            Value::Boolean(b) => Ok(*b),
            Value::String(s) => s.trim().parse().map_err(|_| bad(format!("`{key}` must be true or false"))),
            _ => Err(bad(format!("`{key}` must be true or false"))),
        })
        .transpose()
}

fn get_str(cfg: &FlatConfig, key: &str) -> Result<Option<String>, CliError> {
    cfg.get(key).map(|v| as_string(key, v)).transpose()
}

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Ndjson,
    Json,
    SvgSummary,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Ndjson => "ndjson",
            Format::Json => "json",
            Format::SvgSummary => "svg-summary",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        [Format::Csv, Format::Ndjson, Format::Json, Format::SvgSummary]
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| bad(format!("unknown format `{s}`")))
    }
}

/// Everything `run` and `scan` need, with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: ExperimentSpec,
    pub omega: Option<f64>,
    pub scan: Option<(ScanAxis, Vec<f64>)>,
    pub format: Format,
    pub parallelism: usize,
    pub out: Option<String>,
}

impl Resolved {
    pub fn scan_spec(&self) -> Option<ScanSpec> {
        self.scan
            .as_ref()
            .map(|(axis, grid)| ScanSpec { base: self.experiment.clone(), axis: *axis, grid: grid.clone() })
    }
}

pub fn resolve(cfg: &FlatConfig, scanning: bool, default_format: Format) -> Result<Resolved, CliError> {
    let mut topo_kv = BTreeMap::new();
    for key in TOPOLOGY_KEYS {
        if let Some(v) = get_str(cfg, key)? {
            topo_kv.insert(key.to_string(), v);
        }
    }
    if !topo_kv.contains_key("family") {
        return Err(bad("missing `family` (use --family or a config file)"));
    }
    let topology = TopologySpec::from_key_values(&topo_kv).map_err(|e| bad(e.to_string()))?;
    let auto_leaf_depth = matches!(topology, TopologySpec::TreeKRegular { .. })
        && (!topo_kv.contains_key("leaf_depth") || get_bool(cfg, "auto_leaf_depth")?.unwrap_or(false));

    let scan = if scanning {
        let axis: ScanAxis = get_str(cfg, "axis")?
            .ok_or_else(|| bad("scan needs `axis` (--axis)"))?
            .parse()
            .map_err(|e: disperse::harness::HarnessError| bad(e.to_string()))?;
        let grid = match cfg.get("grid") {
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|x| match x {
                    Value::Float(f) => Ok(*f),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(bad("`grid` entries must be numbers")),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(other) => parse_grid(&as_string("grid", other)?)?,
            None => return Err(bad("scan needs `grid` (--grid)")),
        };
        Some((axis, grid))
    } else {
        None
    };

    let density_scan = matches!(scan, Some((ScanAxis::Density, _)));
    let particles = match get_u64(cfg, "particles")? {
        Some(m) => m,
        None if density_scan => 1,
        None => return Err(bad("missing `particles` (--particles)")),
    };
    let variant = match get_f64(cfg, "lazy_p")? {
        Some(p) => Variant::lazy(p).map_err(|e| bad(e.to_string()))?,
        None => Variant::Standard,
    };
    let omega = match (get_f64(cfg, "omega")?, &topology) {
        (Some(w), _) if w > 0.0 => Some(w),
        (Some(w), _) => return Err(bad(format!("`omega` must be positive, got {w}"))),
        (None, TopologySpec::GridInfinite { .. }) => Some(DEFAULT_GRID_OMEGA),
        (None, TopologySpec::Hypercube { .. }) => Some(DEFAULT_HYPERCUBE_OMEGA),
        (None, _) => None,
    };
    let budget = match (get_u64(cfg, "budget")?, &topology, omega) {
        (Some(b), _, _) => b,
        (None, TopologySpec::GridInfinite { dim: 2 }, Some(w)) if particles >= 2 => {
            ceil_count(grid_dispersal_time(particles, w))
        }
        _ => DEFAULT_BUDGET,
    };
    let walk_mode = match get_str(cfg, "walk_mode")?.as_deref() {
        None | Some("on-demand") | Some("on_demand") => WalkMode::OnDemand,
        Some("predetermined") => WalkMode::Predetermined,
        Some(other) => return Err(bad(format!("unknown walk_mode `{other}`"))),
    };
    let experiment = ExperimentSpec {
        topology,
        particles,
        variant,
        budget,
        replicas: get_u64(cfg, "replicas")?.unwrap_or(1),
        master_seed: get_u64(cfg, "seed")?.unwrap_or(0),
        record_trajectories: get_bool(cfg, "record_trajectories")?.unwrap_or(false),
        walk_mode,
        auto_leaf_depth,
    };
    let format = match get_str(cfg, "format")? {
        Some(f) => Format::parse(&f)?,
        None => default_format,
    };
    let parallelism = get_u64(cfg, "parallelism")?.unwrap_or(0) as usize;
    Ok(Resolved { experiment, omega, scan, format, parallelism, out: get_str(cfg, "out")? })
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("bad grid value `{t}`"))))
        .collect()
}

/// The resolved configuration as TOML sections, suitable for feeding back
/// in with `--config`. Tree leaf depths are written out concretely.
pub fn resolved_table(r: &Resolved) -> Result<Table, CliError> {
    let exp = r.experiment.resolved().map_err(|e| bad(e.to_string()))?;
    let mut topology = Table::new();
    for (k, v) in exp.topology.to_key_values() {
        let value = match k.as_str() {
            "family" | "moduli" | "generators" => Value::String(v),
            "with_loops" => Value::Boolean(v == "true"),
            _ => Value::Integer(v.parse::<i64>().map_err(|_| bad(format!("`{k}` out of range")))?),
        };
        topology.insert(k, value);
    }
    let int = |x: u64| -> Result<Value, CliError> {
        i64::try_from(x).map(Value::Integer).map_err(|_| bad("value exceeds the TOML integer range"))
    };
    let mut experiment = Table::new();
    experiment.insert("particles".into(), int(exp.particles)?);
    if let Variant::Lazy { p } = exp.variant {
        experiment.insert("lazy_p".into(), Value::Float(p));
    }
    experiment.insert("budget".into(), int(exp.budget)?);
    experiment.insert("replicas".into(), int(exp.replicas)?);
    experiment.insert("seed".into(), Value::String(exp.master_seed.to_string()));
    let mode = match exp.walk_mode {
        WalkMode::OnDemand => "on-demand",
        WalkMode::Predetermined => "predetermined",
    };
    experiment.insert("walk_mode".into(), Value::String(mode.into()));
    experiment.insert("record_trajectories".into(), Value::Boolean(exp.record_trajectories));
    if let Some(w) = r.omega {
        experiment.insert("omega".into(), Value::Float(w));
    }
    if r.experiment.auto_leaf_depth && r.scan.is_some() {
        // scans over the tree degree recompute the depth per point
        experiment.insert("auto_leaf_depth".into(), Value::Boolean(true));
    }
    let mut root = Table::new();
    root.insert("topology".into(), Value::Table(topology));
    root.insert("experiment".into(), Value::Table(experiment));
    if let Some((axis, grid)) = &r.scan {
        let mut scan = Table::new();
        scan.insert("axis".into(), Value::String(axis.name().into()));
        scan.insert("grid".into(), Value::Array(grid.iter().map(|&g| Value::Float(g)).collect()));
        root.insert("scan".into(), Value::Table(scan));
    }
    let mut output = Table::new();
    output.insert("format".into(), Value::String(r.format.name().into()));
    output.insert("parallelism".into(), int(r.parallelism as u64)?);
    root.insert("output".into(), Value::Table(output));
    Ok(root)
}

pub fn table_to_toml(t: &Table) -> String {
    toml::to_string(t).expect("tables serialise")
}
