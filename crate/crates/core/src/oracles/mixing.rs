use crate::topology::{Family, TopologySpec};

use super::OracleError;

/// Largest cycle or Cayley graph order whose spectrum is enumerated.
pub const MIXING_ORDER_CAP: u64 = 1 << 22;

const STEP_CAP: u64 = 1 << 40;
const UNIT_TOL: f64 = 1e-9;

/// Smallest even `T >= 2` with `|P^s(u,u) - 1/n'| <= 1/(2n')` for every even
/// `s >= T`, where `n' = n/2` on bipartite graphs and `n` otherwise.
///
/// Uses the spectral form `P^s(u,u) = (1/n) sum_lambda lambda^s`. For even `s`
/// the deviation from `1/n'` is a non-negative sum of non-increasing terms,
/// so the condition only needs checking at `T` itself.
pub fn mixing_step(spec: &TopologySpec) -> Result<u64, OracleError> {
    let family = spec.family();
    if !matches!(family, Family::Hypercube | Family::Cycle | Family::Cayley) {
        return Err(OracleError::Unsupported(family));
    }
    let topo = spec.build()?;
    let n = topo.vertex_count().expect("finite family");
    if family != Family::Hypercube && n > MIXING_ORDER_CAP {
        return Err(OracleError::OverCap { order: n, cap: MIXING_ORDER_CAP });
    }
    if !topo.is_connected() {
        return Err(OracleError::Disconnected);
    }
    let spectrum = topo.walk_spectrum().expect("vertex-transitive family");
    let nf = n as f64;
    let n_eff = if topo.is_bipartite() { nf / 2.0 } else { nf };
    let target = 1.0 / (2.0 * n_eff);
    let interior: Vec<(f64, f64)> = spectrum
        .into_iter()
        .filter(|(l, _)| l.abs() < 1.0 - UNIT_TOL)
        .map(|(l, m)| (l, m as f64))
        .collect();
    let deviation = |s: u64| -> f64 {
        let e = s as f64;
        interior.iter().map(|&(l, m)| m * l.abs().powf(e)).sum::<f64>() / nf
    };
    let ok = |s: u64| deviation(s) <= target * (1.0 + 1e-12);
    let mut hi = 2;
    while !ok(hi) {
        hi *= 2;
        if hi > STEP_CAP {
            return Err(OracleError::OverCap { order: n, cap: MIXING_ORDER_CAP });
        }
    }
    // smallest even step in (hi/2, hi] that passes
    let mut lo = hi / 2;
    while hi - lo > 2 {
        let mid = (lo + hi) / 2 & !1;
        let mid = if mid <= lo { lo + 2 } else { mid };
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
