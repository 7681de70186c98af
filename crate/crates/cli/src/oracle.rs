//! The `oracle` subcommand: evaluates one closed form and prints
//! `{name, inputs, value, equation_tag}`.

use std::collections::BTreeMap;

use clap::Args;
use disperse::oracles::{self, KnState, LazyOccupancyProfile};
use disperse::TopologySpec;
use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use crate::CliError;

pub const NAMES: [&str; 17] = [
    "kn-changes",
    "kn-delta-h",
    "kn-time",
    "lazy-range",
    "lazy-time",
    "tree-constants",
    "tree-bounds",
    "tree-leaf-depth",
    "tree-ruin",
    "line-pmf",
    "line-tail",
    "grid-returns",
    "hypercube-return",
    "mixing-step",
    "path-bounds",
    "grid-time",
    "hypercube-time",
];

#[derive(Debug, Clone, Default, Args)]
pub struct OracleArgs {
    /// Oracle to evaluate.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(NAMES))]
    pub name: String,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub happy: Option<u64>,
    #[arg(long)]
    pub unhappy: Option<u64>,
    #[arg(long = "with-loops", num_args = 0..=1, default_missing_value = "true")]
    pub with_loops: Option<bool>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated occupancies of crowded vertices.
    #[arg(long)]
    pub occupancies: Option<String>,
    #[arg(long)]
    pub empty: Option<u64>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, visible_alias = "m")]
    pub particles: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long)]
    pub r: Option<u64>,
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long)]
    pub dim: Option<u32>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub moduli: Option<String>,
    #[arg(long)]
    pub generators: Option<String>,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("this oracle needs --{flag}")))
}

fn count(x: f64, flag: &str) -> Result<u64, CliError> {
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(64) {
        Ok(x as u64)
    } else {
        Err(CliError::Usage(format!("--{flag} must be a non-negative integer")))
    }
}

fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

pub fn evaluate(a: &OracleArgs) -> Result<Value, CliError> {
    let mut inputs = Map::new();
    let mut put = |k: &str, v: Value| {
        inputs.insert(k.to_string(), v);
    };
    let mut exact = None;
    let err = |e: oracles::OracleError| CliError::Usage(e.to_string());
    let kn_state = |put: &mut dyn FnMut(&str, Value)| -> Result<KnState, CliError> {
        let n = count(need(a.n, "n")?, "n")?;
        let s = KnState {
            n,
            happy: need(a.happy, "happy")?,
            unhappy: need(a.unhappy, "unhappy")?,
            with_loops: a.with_loops.unwrap_or(true),
        };
        put("n", json!(n));
        put("happy", json!(s.happy));
        put("unhappy", json!(s.unhappy));
        put("with_loops", json!(s.with_loops));
        Ok(s)
    };
    let (value, tag) = match a.name.as_str() {
        "kn-changes" => {
            let e = oracles::kn_expected_changes::<f64>(kn_state(&mut put)?).map_err(err)?;
            let v = json!({"ex": float(e.ex), "ey": float(e.ey), "edh": float(e.edh), "approximate": e.approximate});
            (v, "kn-one-step-expectations")
        }
        "kn-delta-h" => {
            let v = oracles::kn_delta_h_closed_form::<f64>(kn_state(&mut put)?).map_err(err)?;
            (float(v), "kn-delta-h-factored")
        }
        "kn-time" => {
            let (n, d) = (need(a.n, "n")?, need(a.delta, "delta")?);
            put("n", float(n));
            put("delta", float(d));
            (json!(oracles::kn_subcritical_time(n, d).map_err(err)?), "kn-subcritical-time")
        }
        "lazy-range" => {
            let occ_raw = a.occupancies.clone().ok_or_else(|| CliError::Usage("this oracle needs --occupancies".into()))?;
            let occupancies = occ_raw
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Usage(format!("bad --occupancies `{occ_raw}`")))?;
            let prof = LazyOccupancyProfile {
                n: count(need(a.n, "n")?, "n")?,
                p: need(a.p, "p")?,
                occupancies,
                empty: need(a.empty, "empty")?,
            };
            put("n", json!(prof.n));
            put("p", float(prof.p));
            put("occupancies", json!(prof.occupancies));
            put("empty", json!(prof.empty));
            let r = oracles::lazy_expected_range_changes(&prof).map_err(err)?;
            (json!({"plus": float(r.plus), "minus": float(r.minus)}), "lazy-range-changes")
        }
        "lazy-time" => {
            let (n, p, al) = (need(a.n, "n")?, need(a.p, "p")?, need(a.alpha, "alpha")?);
            put("n", float(n));
            put("p", float(p));
            put("alpha", float(al));
            (json!(oracles::lazy_subcritical_time(n, p, al).map_err(err)?), "lazy-subcritical-time")
        }
        "tree-constants" => {
            let k = need(a.k, "k")?;
            put("k", json!(k));
            let c = oracles::tree_constants::<f64>(k).map_err(err)?;
            (json!({"alpha": float(c.alpha), "beta": float(c.beta)}), "tree-depth-constants")
        }
        "tree-bounds" => {
            let (k, m, eps) = (need(a.k, "k")?, need(a.particles, "particles")?, need(a.eps, "eps")?);
            put("k", json!(k));
            put("particles", json!(m));
            put("eps", float(eps));
            let b = oracles::tree_depth_bounds(k, m, eps).map_err(err)?;
            (json!({"lower": float(b.lower), "upper": float(b.upper)}), "tree-depth-bounds")
        }
        "tree-leaf-depth" => {
            let (k, m) = (need(a.k, "k")?, need(a.particles, "particles")?);
            put("k", json!(k));
            put("particles", json!(m));
            (json!(oracles::tree_default_leaf_depth(k, m).map_err(err)?), "tree-default-truncation")
        }
        "tree-ruin" => {
            let (k, d) = (need(a.k, "k")?, need(a.d, "d")?);
            put("k", json!(k));
            put("d", json!(d));
            (float(oracles::tree_ruin_probability::<f64>(k, d).map_err(err)?), "tree-ruin-geometric")
        }
        "line-pmf" => {
            let (t, r) = (need(a.t, "t")?, need(a.r, "r")?);
            put("t", json!(t));
            put("r", json!(r));
            let q = oracles::line_returns_pmf(t, r).map_err(err)?;
            exact = Some(q.to_string());
            (float(q.to_f64().unwrap_or(f64::NAN)), "line-return-count-pmf")
        }
        "line-tail" => {
            let (t, r) = (need(a.t, "t")?, need(a.r, "r")?);
            put("t", json!(t));
            put("r", json!(r));
            let tail = oracles::line_returns_tail::<f64>(t, r).map_err(err)?;
            let v = json!({
                "exact": tail.exact.to_string(),
                "exact_value": float(tail.exact.to_f64().unwrap_or(f64::NAN)),
                "bound": float(tail.bound),
            });
            (v, "line-return-count-tail")
        }
        "grid-returns" => {
            let t = need(a.t, "t")?;
            put("t", json!(t));
            (float(oracles::grid2d_expected_returns::<f64>(t)), "grid2d-return-series")
        }
        "hypercube-return" => {
            let (d, s) = (need(a.dim.map(u64::from).or(a.d), "dim")?, need(a.s, "s")?);
            put("dim", json!(d));
            put("s", json!(s));
            let d = u32::try_from(d).map_err(|_| CliError::Usage("--dim out of range".into()))?;
            (float(oracles::hypercube_return_probability::<f64>(d, s).map_err(err)?), "hypercube-return-spectral")
        }
        "mixing-step" => {
            let mut kv = BTreeMap::new();
            let family = a.family.clone().ok_or_else(|| CliError::Usage("this oracle needs --family".into()))?;
            kv.insert("family".to_string(), family);
            if let Some(n) = a.n {
                kv.insert("n".into(), count(n, "n")?.to_string());
            }
            if let Some(d) = a.dim {
                kv.insert("dim".into(), d.to_string());
            }
            if let Some(m) = &a.moduli {
                kv.insert("moduli".into(), m.clone());
            }
            if let Some(g) = &a.generators {
                kv.insert("generators".into(), g.clone());
            }
            for (k, v) in &kv {
                put(k, json!(v));
            }
            let spec = TopologySpec::from_key_values(&kv).map_err(|e| CliError::Usage(e.to_string()))?;
            (json!(oracles::mixing_step(&spec).map_err(err)?), "transitive-mixing-step")
        }
        "path-bounds" => {
            let (m, eps) = (need(a.particles, "particles")?, need(a.eps, "eps")?);
            put("particles", json!(m));
            put("eps", float(eps));
            let b = oracles::path_distance_bounds(m, eps).map_err(err)?;
            (json!({"lower": b.lower, "upper": float(b.upper)}), "path-depth-bounds")
        }
        "grid-time" => {
            let m = need(a.particles, "particles")?;
            let w = a.omega.unwrap_or(disperse::harness::DEFAULT_GRID_OMEGA);
            put("particles", json!(m));
            put("omega", float(w));
            (float(oracles::grid_dispersal_time::<f64>(m, w)), "grid2d-dispersal-time")
        }
        "hypercube-time" => {
            let (m, d) = (need(a.particles, "particles")?, need(a.dim, "dim")?);
            put("particles", json!(m));
            put("dim", json!(d));
            let v = json!({
                "steps": float(oracles::hypercube_dispersal_time::<f64>(m, d)),
                "max_distance": float(oracles::hypercube_distance_bound::<f64>(d)),
            });
            (v, "hypercube-dispersal-time")
        }
        other => return Err(CliError::Usage(format!("unknown oracle `{other}`"))),
    };
    let mut out = json!({"name": a.name, "inputs": inputs, "value": value, "equation_tag": tag});
    if let Some(q) = exact {
        out["exact"] = json!(q);
    }
    Ok(out)
}
