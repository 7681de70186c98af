//! Flat `key = value` form of a [`TopologySpec`].
//!
//! ```text
//! family = cayley
//! moduli = 5,5
//! generators = (1,0),(-1,0),(0,1),(0,-1)
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Family, TopologySpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("key `{key}` does not apply to family {family}")]
    Unexpected { key: String, family: Family },
}

const KEYS: [&str; 8] = ["family", "n", "with_loops", "leaves", "k", "leaf_depth", "dim", "moduli"];

impl TopologySpec {
    /// Flat key-value pairs, `family` first.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![("family".to_string(), self.family().name().to_string())];
        let mut put = |k: &str, v: String| kv.push((k.to_string(), v));
        match self {
            TopologySpec::Complete { n, with_loops } => {
                put("n", n.to_string());
                put("with_loops", with_loops.to_string());
            }
            TopologySpec::Star { leaves } => put("leaves", leaves.to_string()),
            TopologySpec::PathInfinite => {}
            TopologySpec::Cycle { n } => put("n", n.to_string()),
            TopologySpec::TreeKRegular { k, leaf_depth } => {
                put("k", k.to_string());
                put("leaf_depth", leaf_depth.to_string());
            }
            TopologySpec::GridInfinite { dim } | TopologySpec::Hypercube { dim } => put("dim", dim.to_string()),
            TopologySpec::FiniteAbelianCayley { moduli, generators } => {
                put("moduli", join(moduli.iter()));
                put("generators", format_generators(generators));
            }
        }
        kv
    }

    /// Parses the flat form. Keys that belong to another family are rejected;
    /// keys outside the topology vocabulary are ignored.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let family: Family = kv
            .get("family")
            .ok_or(ConfigError::Missing("family"))?
            .parse()
            .map_err(|_| bad("family", &kv["family"]))?;
        let allowed: &[&str] = match family {
            Family::Complete => &["n", "with_loops"],
            Family::Star => &["leaves"],
            Family::Path => &[],
            Family::Cycle => &["n"],
            Family::Tree => &["k", "leaf_depth"],
            Family::Grid | Family::Hypercube => &["dim"],
            Family::Cayley => &["moduli", "generators"],
        };
        for key in kv.keys() {
            let known = KEYS.contains(&key.as_str()) || key == "generators";
            if known && key != "family" && !allowed.contains(&key.as_str()) {
                return Err(ConfigError::Unexpected { key: key.clone(), family });
            }
        }
        let spec = match family {
            Family::Complete => TopologySpec::Complete {
                n: required(kv, "n")?,
                with_loops: optional(kv, "with_loops")?.unwrap_or(false),
            },
            Family::Star => TopologySpec::Star { leaves: required(kv, "leaves")? },
            Family::Path => TopologySpec::PathInfinite,
            Family::Cycle => TopologySpec::Cycle { n: required(kv, "n")? },
            Family::Tree => TopologySpec::TreeKRegular {
                k: required(kv, "k")?,
                leaf_depth: optional(kv, "leaf_depth")?.unwrap_or(0),
            },
            Family::Grid => TopologySpec::GridInfinite { dim: required(kv, "dim")? },
            Family::Hypercube => TopologySpec::Hypercube { dim: required(kv, "dim")? },
            Family::Cayley => {
                let moduli_raw = kv.get("moduli").ok_or(ConfigError::Missing("moduli"))?;
                let moduli = moduli_raw
                    .split(',')
                    .map(|t| t.trim().parse::<u64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad("moduli", moduli_raw))?;
                let gens_raw = kv.get("generators").ok_or(ConfigError::Missing("generators"))?;
                let generators = parse_generators(gens_raw).ok_or_else(|| bad("generators", gens_raw))?;
                TopologySpec::FiniteAbelianCayley { moduli, generators }
            }
        };
        Ok(spec)
    }
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), value: value.to_string() }
}

fn required<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &'static str) -> Result<T, ConfigError> {
    optional(kv, key)?.ok_or(ConfigError::Missing(key))
}

fn optional<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &'static str) -> Result<Option<T>, ConfigError> {
    kv.get(key)
        .map(|v| v.trim().parse::<T>().map_err(|_| bad(key, v)))
        .transpose()
}

fn join<T: ToString>(xs: impl Iterator<Item = T>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn format_generators(generators: &[Vec<i64>]) -> String {
    generators
        .iter()
        .map(|g| format!("({})", join(g.iter())))
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses `(a,b),(c,d),...`.
pub(crate) fn parse_generators(s: &str) -> Option<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        rest = rest.strip_prefix('(')?;
        let close = rest.find(')')?;
        let tuple = rest[..close]
            .split(',')
            .map(|t| t.trim().parse::<i64>().ok())
            .collect::<Option<Vec<_>>>()?;
        out.push(tuple);
        rest = rest[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            if rest.is_empty() {
                return None;
            }
        } else if !rest.is_empty() {
            return None;
        }
    }
    (!out.is_empty()).then_some(out)
}
