use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Variant, WalkMode};
use crate::oracles::{
    grid2d_expected_returns, hypercube_return_probability, kn_delta_h_closed_form, kn_expected_changes,
    lazy_expected_range_changes, line_returns_pmf, line_returns_tail, mixing_step, tree_ruin_probability, KnState,
    LazyOccupancyProfile,
};
use crate::topology::{Topology, TopologySpec, VertexAddress};
use crate::Rational;

use super::{pair_coupling_audit, run_replicas, ExperimentSpec, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Perturb one oracle so its Monte Carlo check must fail.
    pub corrupt_oracle: bool,
    /// Cut Monte Carlo sample sizes by 10x.
    pub quick: bool,
    /// Worker threads (0 = all cores).
    pub parallelism: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    fn push(&mut self, name: &str, passed: bool, observed: impl Into<String>, expected: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            observed: observed.into(),
            expected: expected.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}: observed {}; expected {}", c.name, c.observed, c.expected)?;
        }
        write!(f, "{} checks, {} failed", self.checks.len(), self.failures())
    }
}

fn mean_se(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq - nf * mean * mean) / (nf - 1.0);
    (mean, (var.max(0.0) / nf).sqrt())
}

/// Runs every oracle cross-check and harness invariant.
pub fn validate_suite(opts: ValidateOptions) -> Result<ValidationReport, HarnessError> {
    let scale: u64 = if opts.quick { 10 } else { 1 };
    let mut report = ValidationReport::default();
    kn_checks(&mut report, (1_000_000 / scale) as usize, opts.corrupt_oracle)?;
    lazy_checks(&mut report, (1_000_000 / scale) as usize)?;
    line_checks(&mut report)?;
    hypercube_checks(&mut report)?;
    grid_series_check(&mut report, 1_000_000 / scale);
    tree_ruin_check(&mut report, 1_000_000 / scale)?;
    mixing_check(&mut report)?;
    tree_visit_check(&mut report, 200 / scale, opts.parallelism)?;
    coupling_checks(&mut report, 1000 / scale, opts.parallelism)?;
    determinism_check(&mut report)?;
    Ok(report)
}

fn kn_checks(report: &mut ValidationReport, trials: usize, corrupt: bool) -> Result<(), HarnessError> {
    let (n, h, u) = (100usize, 30usize, 20usize);
    let mut oracle = kn_expected_changes::<f64>(KnState { n: 100, happy: 30, unhappy: 20, with_loops: true })?;
    if corrupt {
        oracle.ex *= 1.05;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b6e);
    let mut counts = vec![0u32; n];
    let mut dest = vec![0usize; u];
    let (mut sx, mut sxx, mut sy, mut syy) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..trials {
        for d in dest.iter_mut() {
            *d = rng.random_range(0..n);
            counts[*d] += 1;
        }
        let x = counts[..h].iter().filter(|&&c| c > 0).count() as f64;
        let y = dest.iter().filter(|&&d| d >= h && counts[d] == 1).count() as f64;
        dest.iter().for_each(|&d| counts[d] = 0);
        sx += x;
        sxx += x * x;
        sy += y;
        syy += y * y;
    }
    let (mx, ex) = mean_se(sx, sxx, trials as u64);
    let (my, ey) = mean_se(sy, syy, trials as u64);
    report.push(
        "kn-expected-changes-monte-carlo",
        (mx - oracle.ex).abs() < 3.0 * ex && (my - oracle.ey).abs() < 3.0 * ey,
        format!("EX {mx:.5} (se {ex:.5}), EY {my:.5} (se {ey:.5}) over {trials} trials"),
        format!("EX {:.5}, EY {:.5} within 3 se", oracle.ex, oracle.ey),
    );

    let mut worst = 0.0f64;
    for n in (2..=200u64).step_by(22) {
        for hh in 0..10u64 {
            for uu in 1..=10u64 {
                let happy = hh * (n - 1) / 10;
                let s = KnState { n, happy, unhappy: uu * (n - happy) / 10 + 1, with_loops: true };
                let a = kn_expected_changes::<f64>(s)?.edh;
                let b = kn_delta_h_closed_form::<f64>(s)?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    report.push("kn-delta-h-two-forms", worst <= 1e-12, format!("max |diff| {worst:e}"), "<= 1e-12");
    Ok(())
}

fn lazy_checks(report: &mut ValidationReport, trials: usize) -> Result<(), HarnessError> {
    let (n, p) = (100usize, 0.5);
    let plus_oracle = lazy_expected_range_changes(&LazyOccupancyProfile {
        n: 100,
        p,
        occupancies: vec![2; 10],
        empty: 60,
    })?
    .plus;
    let minus_oracle = lazy_expected_range_changes(&LazyOccupancyProfile {
        n: 100,
        p,
        occupancies: vec![2, 2],
        empty: 60,
    })?
    .minus;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c617a79);
    // vertices 0..60 empty; 20 unhappy particles elsewhere
    let mut hit = vec![false; 60];
    let (mut s, mut ss) = (0.0, 0.0);
    for _ in 0..trials {
        hit.iter_mut().for_each(|h| *h = false);
        for _ in 0..20 {
            if rng.random::<f64>() < p {
                let d = rng.random_range(0..n);
                if d < 60 {
                    hit[d] = true;
                }
            }
        }
        let x = hit.iter().filter(|&&h| h).count() as f64;
        s += x;
        ss += x * x;
    }
    let (m, se) = mean_se(s, ss, trials as u64);
    report.push(
        "lazy-range-plus-monte-carlo",
        (m - plus_oracle).abs() < 3.0 * se,
        format!("{m:.5} (se {se:.5})"),
        format!("{plus_oracle:.5} within 3 se"),
    );

    // particles 0,1 on vertex 0 and 2,3 on vertex 1
    let (mut s, mut ss) = (0.0, 0.0);
    for _ in 0..trials {
        let mut occupied = [false; 2];
        for owner in [0usize, 0, 1, 1] {
            if rng.random::<f64>() < p {
                let d = rng.random_range(0..n);
                if d < 2 {
                    occupied[d] = true;
                }
            } else {
                occupied[owner] = true;
            }
        }
        let x = occupied.iter().filter(|&&o| !o).count() as f64;
        s += x;
        ss += x * x;
    }
    let (m, se) = mean_se(s, ss, trials as u64);
    report.push(
        "lazy-range-minus-monte-carlo",
        (m - minus_oracle).abs() < 3.0 * se,
        format!("{m:.5} (se {se:.5})"),
        format!("{minus_oracle:.5} within 3 se"),
    );
    Ok(())
}

fn line_checks(report: &mut ValidationReport) -> Result<(), HarnessError> {
    let mut mismatches = Vec::new();
    for t in 1..=8u64 {
        let steps = 2 * t;
        let mut hist = vec![0u64; t as usize + 1];
        for code in 0u64..1 << steps {
            let (mut pos, mut r) = (0i64, 0usize);
            for i in 0..steps {
                pos += if code >> i & 1 == 1 { 1 } else { -1 };
                r += usize::from(pos == 0);
            }
            hist[r] += 1;
        }
        for (r, &c) in hist.iter().enumerate() {
            let want = Rational::new(BigInt::from(c), BigInt::one() << steps);
            if line_returns_pmf(t, r as u64)? != want {
                mismatches.push(format!("T={t} r={r}"));
            }
        }
    }
    report.push(
        "line-returns-pmf-enumeration",
        mismatches.is_empty(),
        format!("{} mismatches {mismatches:?}", mismatches.len()),
        "exact equality for T <= 8",
    );

    let mut violations = 0;
    for t in 1..=12u64 {
        for r in 1..=t {
            let tail = line_returns_tail::<f64>(t, r)?;
            let bound = line_returns_pmf(t, r)? * Rational::new(BigInt::from(2 * t - r), BigInt::from(r));
            if tail.exact > bound {
                violations += 1;
            }
        }
    }
    report.push("line-returns-tail-bound", violations == 0, format!("{violations} violations"), "tail <= bound for 1 <= r <= T <= 12");
    Ok(())
}

/// `P^s(origin, origin)` for `s = 0..=max_s` by iterating the walk's
/// distribution over an explicit vertex list.
fn return_series(topo: &Topology, max_s: u64) -> Result<Vec<f64>, HarnessError> {
    let vertices = topo
        .vertices()
        .ok_or_else(|| HarnessError::Unsupported("return series needs a finite graph".into()))?;
    let index: HashMap<&VertexAddress, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let adj = vertices
        .iter()
        .map(|v| Ok(topo.neighbors(v)?.iter().map(|w| index[w]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let origin = index[&topo.origin()];
    let mut dist = vec![0.0; vertices.len()];
    dist[origin] = 1.0;
    let mut out = vec![1.0];
    for _ in 0..max_s {
        let mut next = vec![0.0; dist.len()];
        for (u, nb) in adj.iter().enumerate() {
            let share = dist[u] / nb.len() as f64;
            nb.iter().for_each(|&w| next[w] += share);
        }
        dist = next;
        out.push(dist[origin]);
    }
    Ok(out)
}

fn hypercube_checks(report: &mut ValidationReport) -> Result<(), HarnessError> {
    let mut worst = 0.0f64;
    for d in 1..=6u32 {
        let topo = TopologySpec::Hypercube { dim: d }.build()?;
        for (s, want) in return_series(&topo, 40)?.into_iter().enumerate() {
            worst = worst.max((hypercube_return_probability::<f64>(d, s as u64)? - want).abs());
        }
    }
    report.push(
        "hypercube-return-transition-powers",
        worst <= 1e-12,
        format!("max |diff| {worst:e}"),
        "<= 1e-12 for d <= 6, s <= 40",
    );
    Ok(())
}

fn grid_series_check(report: &mut ValidationReport, t_max: u64) {
    let mut a = 1.0f64;
    let mut sum = 1.0f64;
    let mut worst_margin = f64::INFINITY;
    let mut increments_ok = true;
    for t in 1..=t_max {
        let s = t as f64;
        a *= (2.0 * s - 1.0) / (2.0 * s);
        let term = a * a;
        increments_ok &= term > 0.0 && term < 1.0 / s;
        sum += term;
        if t >= 2 {
            worst_margin = worst_margin.min(s.ln() + 1.3 - sum);
        }
    }
    let direct = grid2d_expected_returns::<f64>(t_max);
    let agrees = (direct - sum).abs() <= 1e-9 * sum;
    report.push(
        "grid2d-return-envelope",
        increments_ok && worst_margin >= 0.0 && agrees,
        format!("min (ln t + 1.3 - R) = {worst_margin:.5}; R({t_max}) = {direct:.6}"),
        format!("R(2t) <= ln t + 1.3 for 2 <= t <= {t_max}, increments in (0, 1/t)"),
    );
}

fn tree_ruin_check(report: &mut ValidationReport, trials: u64) -> Result<(), HarnessError> {
    let cases: Vec<(u32, u64)> = [3u32, 4, 5].iter().flat_map(|&k| [1u64, 2, 3, 5].map(|d| (k, d))).collect();
    let outcomes: Vec<(u32, u64, f64, f64, f64)> = cases
        .par_iter()
        .map(|&(k, d)| {
            // escape cutoff: ruin from there is below e^-16
            let cutoff = d + (16.2 / f64::from(k - 1).ln()).ceil() as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(u64::from(k) << 32 | d);
            let mut hits = 0u64;
            for _ in 0..trials {
                let mut below = d;
                while below > 0 && below < cutoff {
                    if rng.random_range(0..k) == 0 {
                        below -= 1;
                    } else {
                        below += 1;
                    }
                }
                hits += u64::from(below == 0);
            }
            let p = tree_ruin_probability::<f64>(k, d).expect("k >= 3");
            let f = hits as f64 / trials as f64;
            (k, d, f, p, (p * (1.0 - p) / trials as f64).sqrt())
        })
        .collect();
    let worst = outcomes
        .iter()
        .map(|&(_, _, f, p, se)| (f - p).abs() / se)
        .fold(0.0f64, f64::max);
    let detail: Vec<String> = outcomes.iter().map(|(k, d, f, p, _)| format!("k={k},d={d}: {f:.6} vs {p:.6}")).collect();
    report.push(
        "tree-ruin-first-passage",
        worst < 3.0,
        format!("max |z| {worst:.2}; {}", detail.join("; ")),
        format!("|z| < 3 over {trials} walks each"),
    );
    Ok(())
}

fn mixing_check(report: &mut ValidationReport) -> Result<(), HarnessError> {
    let mut specs: Vec<TopologySpec> = (1..=10).map(|dim| TopologySpec::Hypercube { dim }).collect();
    specs.extend([3u64, 4, 5, 8, 9, 16].map(|n| TopologySpec::Cycle { n }));
    let mut bad = Vec::new();
    for spec in specs {
        let topo = spec.build()?;
        let t = mixing_step(&spec)?;
        let series = return_series(&topo, 4 * t + 40)?;
        let n = topo.vertex_count().expect("finite") as f64;
        let n_eff = if topo.is_bipartite() { n / 2.0 } else { n };
        let ok = |s: usize| (series[s] - 1.0 / n_eff).abs() <= 1.0 / (2.0 * n_eff) + 1e-12;
        let holds_after = (t as usize..series.len()).step_by(2).all(ok);
        let minimal = t == 2 || !ok(t as usize - 2);
        if !(holds_after && minimal) {
            bad.push(format!("{spec:?} -> {t}"));
        }
    }
    report.push(
        "mixing-step-transition-powers",
        bad.is_empty(),
        format!("{} disagreements {bad:?}", bad.len()),
        "smallest even T agrees with iterated transition probabilities",
    );
    Ok(())
}

fn tree_visit_check(report: &mut ValidationReport, runs: u64, parallelism: usize) -> Result<(), HarnessError> {
    let (k, m) = (3u32, 256u64);
    let depth = ((3.2 / 2.0) * (m as f64).log2()).ceil() as u32;
    let mut exp = ExperimentSpec::new(TopologySpec::TreeKRegular { k, leaf_depth: 0 }, m);
    exp.auto_leaf_depth = true;
    exp.replicas = runs;
    exp.master_seed = 0x7472_6565;
    exp.record_trajectories = true;
    let batch = run_replicas(&exp, parallelism)?;
    let trajectories = batch.trajectories.expect("recorded");
    let crowded = trajectories
        .iter()
        .filter(|run| {
            let mut visitors: HashMap<&VertexAddress, HashSet<usize>> = HashMap::new();
            for (i, tr) in run.iter().enumerate() {
                let start = std::iter::once(&tr.start);
                for v in start.chain(tr.moves.iter().map(|m| &m.to)) {
                    if matches!(v, VertexAddress::Tree { depth: d, .. } if *d == depth) {
                        visitors.entry(v).or_default().insert(i);
                    }
                }
            }
            visitors.values().any(|s| s.len() >= 3)
        })
        .count();
    let frac = crowded as f64 / runs as f64;
    report.push(
        "tree-no-three-visitors",
        frac <= 0.05,
        format!("{crowded}/{runs} runs had a depth-{depth} vertex with >= 3 visitors"),
        "fraction <= 0.05",
    );
    Ok(())
}

fn coupling_checks(report: &mut ValidationReport, runs: u64, parallelism: usize) -> Result<(), HarnessError> {
    let families = [
        ("line", TopologySpec::PathInfinite),
        ("grid2d", TopologySpec::GridInfinite { dim: 2 }),
        ("hypercube", TopologySpec::Hypercube { dim: 8 }),
    ];
    for (name, spec) in families {
        let mut exp = ExperimentSpec::new(spec, 2);
        exp.replicas = runs;
        exp.master_seed = 0xc0_0b1e;
        exp.record_trajectories = true;
        exp.budget = 1_000_000;
        let batch = run_replicas(&exp, parallelism)?;
        let mut violations = 0;
        let mut meetings = 0;
        for run in batch.trajectories.expect("recorded") {
            let audit = pair_coupling_audit(&run[0], &run[1])?;
            meetings += audit.meetings;
            violations += u64::from(!audit.holds());
        }
        report.push(
            &format!("coupling-audit-{name}"),
            violations == 0,
            format!("{violations} violations over {runs} runs ({meetings} meetings)"),
            "combined_returns >= meetings in every run",
        );
    }
    Ok(())
}

fn determinism_check(report: &mut ValidationReport) -> Result<(), HarnessError> {
    let mut exp = ExperimentSpec::new(TopologySpec::Complete { n: 200, with_loops: true }, 80);
    exp.replicas = 16;
    exp.master_seed = 42;
    exp.variant = Variant::lazy(0.7)?;
    exp.walk_mode = WalkMode::Predetermined;
    let a = run_replicas(&exp, 1)?;
    let b = run_replicas(&exp, 4)?;
    report.push(
        "replica-determinism",
        a.results == b.results,
        if a.results == b.results { "identical" } else { "different" },
        "identical results at parallelism 1 and 4",
    );
    Ok(())
}
