use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::*;
use crate::topology::{Topology, TopologySpec, VertexAddress};
use crate::Rational;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn state(n: u64, happy: u64, unhappy: u64) -> KnState {
    KnState { n, happy, unhappy, with_loops: true }
}

/// Balls-in-bins: `h` happy particles on boxes `0..h`, `u` balls thrown
/// uniformly. Returns per-trial (X, Y) samples.
fn balls_in_bins(n: u64, h: u64, u: u64, trials: u64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts = vec![0u32; n as usize];
    let mut dest = vec![0usize; u as usize];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for _ in 0..trials {
        for d in dest.iter_mut() {
            *d = rng.random_range(0..n as usize);
            counts[*d] += 1;
        }
        let x = (0..h as usize).filter(|&b| counts[b] > 0).count();
        let y = dest.iter().filter(|&&d| d >= h as usize && counts[d] == 1).count();
        for &d in &dest {
            counts[d] = 0;
        }
        xs.push(x as f64);
        ys.push(y as f64);
    }
    (xs, ys)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn kn_trivial_examples() {
    let e = kn_expected_changes::<f64>(state(100, 0, 1)).unwrap();
    assert_eq!(e.ex, 0.0);
    assert!(close(e.ey, 1.0, 1e-15));
    assert!(kn_expected_changes::<f64>(state(100, 3, 0)).is_err());
    assert!(kn_expected_changes::<f64>(state(0, 0, 1)).is_err());
}

#[test]
fn kn_example_point() {
    let e = kn_expected_changes::<f64>(state(100, 30, 20)).unwrap();
    assert!(close(e.ex, 5.4627, 1e-4), "{}", e.ex);
    assert!(close(e.ey, 11.5664, 1e-4), "{}", e.ey);
    assert_eq!(e.edh, e.ey - e.ex);
    assert!(!e.approximate);
    let f = kn_expected_changes::<f32>(state(100, 30, 20)).unwrap();
    assert!((f.ex as f64 - e.ex).abs() < 1e-4);
    let nl = kn_expected_changes::<f64>(KnState { with_loops: false, ..state(100, 30, 20) }).unwrap();
    assert!(nl.approximate);
    assert_eq!(nl.ex, e.ex);
}

#[test]
fn kn_matches_balls_in_bins() {
    let (xs, ys) = balls_in_bins(100, 30, 20, 200_000, 1);
    let e = kn_expected_changes::<f64>(state(100, 30, 20)).unwrap();
    let (mx, sx) = mean_se(&xs);
    let (my, sy) = mean_se(&ys);
    assert!((mx - e.ex).abs() < 3.0 * sx, "{mx} vs {}", e.ex);
    assert!((my - e.ey).abs() < 3.0 * sy, "{my} vs {}", e.ey);
}

#[test]
fn kn_two_forms_agree_on_grid() {
    for n in (2..=200).step_by(22) {
        for h in (0..n).step_by((n as usize / 10).max(1)).take(10) {
            for u in 1..=10 {
                let s = state(n, h, u * (n - h).max(1) / 10 + 1);
                let a = kn_expected_changes::<f64>(s).unwrap().edh;
                let b = kn_delta_h_closed_form::<f64>(s).unwrap();
                assert!(close(a, b, 1e-12), "{s:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn kn_subcritical_times() {
    assert_eq!(kn_subcritical_time(std::f64::consts::E, 2.0).unwrap(), 1);
    assert_eq!(kn_subcritical_time(1000.0f64, 0.2).unwrap(), 70);
    assert_eq!(kn_subcritical_time(1000.0f64, 0.4).unwrap(), 35);
    assert_eq!(kn_subcritical_time(1000.0f32, 0.2).unwrap(), 70);
    assert!(kn_subcritical_time(1000.0f64, 0.0).is_err());
}

fn profile(n: u64, p: f64, occupancies: Vec<u64>, empty: u64) -> LazyOccupancyProfile<f64> {
    LazyOccupancyProfile { n, p, occupancies, empty }
}

#[test]
fn lazy_range_changes_examples() {
    let r = lazy_expected_range_changes(&profile(100, 0.5, vec![2; 10], 60)).unwrap();
    assert!(close(r.plus, 5.723371183522947, 1e-12), "{}", r.plus);
    let r = lazy_expected_range_changes(&profile(100, 0.5, vec![2, 2], 60)).unwrap();
    assert!(close(r.minus, 0.48516, 1e-5), "{}", r.minus);
    let r = lazy_expected_range_changes(&profile(100, 1e-12, vec![3, 2, 5], 40)).unwrap();
    assert!(r.plus < 1e-9 && r.minus < 1e-9);
    assert!(lazy_expected_range_changes(&profile(100, 0.5, vec![1], 10)).is_err());
    assert!(lazy_expected_range_changes(&profile(100, 0.0, vec![2], 10)).is_err());
    assert!(lazy_expected_range_changes(&profile(3, 0.5, vec![2, 2], 2)).is_err());
}

/// Probability that crowded vertex `v` empties, by enumerating each unhappy
/// particle's outcome: stay, move onto `v`, or move elsewhere.
fn emptying_probability(n: u64, p: f64, occupancies: &[u64], v: usize) -> f64 {
    let owner: Vec<usize> = occupancies
        .iter()
        .enumerate()
        .flat_map(|(i, &o)| std::iter::repeat_n(i, o as usize))
        .collect();
    let nf = n as f64;
    let mut total = 0.0;
    for code in 0..3usize.pow(owner.len() as u32) {
        let mut c = code;
        let mut prob = 1.0;
        let mut occupied = false;
        for &w in &owner {
            let outcome = c % 3;
            c /= 3;
            match outcome {
                0 => {
                    prob *= 1.0 - p;
                    occupied |= w == v;
                }
                1 => {
                    prob *= p / nf;
                    occupied = true;
                }
                _ => prob *= p * (1.0 - 1.0 / nf),
            }
        }
        if !occupied {
            total += prob;
        }
    }
    total
}

#[test]
fn lazy_minus_matches_enumeration() {
    for (occ, p) in [(vec![2, 2], 0.5), (vec![3, 2], 0.3), (vec![2, 2, 2], 0.9)] {
        let brute: f64 = (0..occ.len()).map(|v| emptying_probability(100, p, &occ, v)).sum();
        let r = lazy_expected_range_changes(&profile(100, p, occ.clone(), 50)).unwrap();
        assert!(close(r.minus, brute, 1e-14), "{occ:?}: {} vs {brute}", r.minus);
    }
}

#[test]
fn lazy_plus_matches_monte_carlo() {
    let (n, p, u, empty) = (100u64, 0.5, 20u64, 60u64);
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    // boxes 0..empty start empty
    let trials = 200_000;
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let mut hit = vec![false; empty as usize];
            for _ in 0..u {
                if rng.random::<f64>() < p {
                    let d = rng.random_range(0..n) as usize;
                    if d < hit.len() {
                        hit[d] = true;
                    }
                }
            }
            hit.iter().filter(|&&h| h).count() as f64
        })
        .collect();
    let (m, se) = mean_se(&samples);
    let r = lazy_expected_range_changes(&profile(n, p, vec![2; 10], empty)).unwrap();
    assert!((m - r.plus).abs() < 3.0 * se, "{m} vs {}", r.plus);
}

#[test]
fn lazy_subcritical_times() {
    assert_eq!(lazy_subcritical_time(std::f64::consts::E, 1.0, 4.0).unwrap(), 1);
    assert_eq!(lazy_subcritical_time(1000.0f64, 0.5, 0.05).unwrap(), 1106);
    assert_eq!(lazy_subcritical_time(1000.0f64, 1.0, 0.5).unwrap(), 56);
    assert!(lazy_subcritical_time(1000.0f64, 1.5, 0.5).is_err());
}

#[test]
fn tree_constant_values() {
    let c3 = tree_constants::<f64>(3).unwrap();
    assert!(close(c3.alpha, 0.54, 0.005) && close(c3.beta, 0.12, 0.005), "{c3:?}");
    let c4 = tree_constants::<f64>(4).unwrap();
    assert!(close(c4.alpha, 0.34, 0.005) && close(c4.beta, 0.07, 0.005), "{c4:?}");
    assert!(tree_constants::<f64>(2).is_err());
    let mut prev = c3;
    for k in 4..=1000 {
        let c = tree_constants::<f64>(k).unwrap();
        assert!(c.alpha < prev.alpha && c.beta < prev.beta);
        assert!(0.0 < c.beta && c.beta < c.alpha && c.alpha < 1.0);
        prev = c;
    }
    assert!(prev.alpha < 1e-3 && prev.beta < 1e-4);
    let f = tree_constants::<f32>(3).unwrap();
    assert!((f.alpha as f64 - c3.alpha).abs() < 1e-6);
}

#[test]
fn tree_depth_bound_values() {
    let b = tree_depth_bounds(3, 4096, 0.2f64).unwrap();
    assert!(close(b.lower, 15.13, 0.005) && close(b.upper, 27.32, 0.005), "{b:?}");
    let c = tree_constants::<f64>(4).unwrap();
    let b = tree_depth_bounds(4, 59049, 0.1f64).unwrap();
    assert!(close(b.lower, (1.9 - c.alpha) * 10.0, 1e-9));
    assert!(close(b.upper, (2.2 - c.beta) * 10.0, 1e-9));
    assert_eq!(tree_default_leaf_depth(3, 4096).unwrap(), 37);
}

proptest! {
    #[test]
    fn tree_bounds_ordered_at_zero_eps(k in 3u32..2000, m in 2u64..1_000_000_000) {
        let b = tree_depth_bounds(k, m, 0.0f64).unwrap();
        prop_assert!(b.lower < b.upper);
    }

    #[test]
    fn path_bounds_ordered(m in 2u64..1_000_000, eps in 1e-6f64..10.0) {
        let b = path_distance_bounds(m, eps).unwrap();
        prop_assert!((b.lower as f64) < b.upper);
    }
}

#[test]
fn tree_ruin_values() {
    assert_eq!(tree_ruin_probability::<f64>(3, 0).unwrap(), 1.0);
    assert_eq!(tree_ruin_probability::<f64>(3, 1).unwrap(), 0.5);
    assert!(close(tree_ruin_probability::<f64>(3, 10).unwrap(), 9.765625e-4, 1e-15));
}

/// Biased walk started `d` levels below a target on the `k`-regular tree.
fn ruin_frequency(k: u32, d: u64, trials: u64, seed: u64) -> f64 {
    let cutoff = d + (27.6 / ((k - 1) as f64).ln()).ceil() as u64;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
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
        hits += (below == 0) as u64;
    }
    hits as f64 / trials as f64
}

#[test]
fn tree_ruin_matches_first_passage() {
    for (k, d) in [(3, 1), (3, 3), (4, 2), (5, 1)] {
        let p = tree_ruin_probability::<f64>(k, d).unwrap();
        let trials = 200_000;
        let f = ruin_frequency(k, d, trials, u64::from(k) * 31 + d);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((f - p).abs() < 3.0 * se, "k={k} d={d}: {f} vs {p}");
    }
}

fn rat(a: i64, b: i64) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

#[test]
fn line_pmf_examples() {
    assert_eq!(line_returns_pmf(1, 0).unwrap(), rat(1, 2));
    assert_eq!(line_returns_pmf(1, 1).unwrap(), rat(1, 2));
    assert_eq!(line_returns_pmf(2, 0).unwrap(), rat(3, 8));
    assert_eq!(line_returns_pmf(2, 1).unwrap(), rat(3, 8));
    assert_eq!(line_returns_pmf(2, 2).unwrap(), rat(1, 4));
    assert!(line_returns_pmf(2, 3).is_err());
    assert!(line_returns_pmf(0, 0).is_err());
    for t in 1..=12 {
        let total = (0..=t).fold(Rational::zero(), |acc, r| acc + line_returns_pmf(t, r).unwrap());
        assert!(total.is_one(), "T={t}");
    }
}

/// Histogram of returns to 0 over all `2^(2T)` walks.
fn enumerate_returns(t: u64) -> Vec<u64> {
    let steps = 2 * t;
    let mut hist = vec![0u64; t as usize + 1];
    for code in 0u64..(1 << steps) {
        let (mut pos, mut r) = (0i64, 0usize);
        for i in 0..steps {
            pos += if code >> i & 1 == 1 { 1 } else { -1 };
            r += (pos == 0) as usize;
        }
        hist[r] += 1;
    }
    hist
}

#[test]
fn line_pmf_equals_enumeration() {
    for t in 1..=8 {
        let hist = enumerate_returns(t);
        let total = BigInt::one() << (2 * t);
        for (r, &c) in hist.iter().enumerate() {
            let want = Rational::new(BigInt::from(c), total.clone());
            assert_eq!(line_returns_pmf(t, r as u64).unwrap(), want, "T={t} r={r}");
        }
    }
}

#[test]
fn line_tail_values_and_bound() {
    let tail = line_returns_tail::<f64>(5, 0).unwrap();
    assert!(tail.exact.is_one());
    assert!(tail.bound.is_infinite());
    assert_eq!(line_returns_tail::<f64>(2, 2).unwrap().exact, rat(1, 4));
    for t in 1..=12u64 {
        for r in 1..=t {
            let tail = line_returns_tail::<f64>(t, r).unwrap();
            let bound = line_returns_pmf(t, r).unwrap() * rat((2 * t - r) as i64, r as i64);
            assert!(tail.exact <= bound, "T={t} r={r}");
            assert!(tail.exact.to_f64().unwrap() <= tail.bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn grid_return_series() {
    assert_eq!(grid2d_expected_returns::<f64>(0), 1.0);
    assert!(close(grid2d_expected_returns::<f64>(1), 1.25, 1e-15));
    assert!(close(grid2d_expected_returns::<f64>(2), 1.390625, 1e-15));
    for s in 1..=20u64 {
        let one_d = Rational::new(walks::binomial_big(2 * s, s), BigInt::one() << (2 * s));
        let term = grid2d_expected_returns::<f64>(s) - grid2d_expected_returns::<f64>(s - 1);
        let want = (one_d.clone() * one_d).to_f64().unwrap();
        assert!(close(term, want, 1e-14), "s={s}");
    }
    let mut a = 1.0f64;
    let mut sum = 1.0f64;
    for t in 1..=1_000_000u64 {
        let s = t as f64;
        a *= (2.0 * s - 1.0) / (2.0 * s);
        assert!(a * a > 0.0 && a * a < 1.0 / s);
        sum += a * a;
        if t >= 2 {
            assert!(sum <= s.ln() + 1.3, "t={t}: {sum}");
        }
    }
    assert!(close(grid2d_expected_returns::<f64>(1_000_000), sum, 1e-9));
}

fn hypercube_matrix(d: u32) -> DMatrix<f64> {
    let n = 1usize << d;
    DMatrix::from_fn(n, n, |i, j| if (i ^ j).count_ones() == 1 { 1.0 / d as f64 } else { 0.0 })
}

#[test]
fn hypercube_return_examples() {
    assert_eq!(hypercube_return_probability::<f64>(1, 2).unwrap(), 1.0);
    assert!(close(hypercube_return_probability::<f64>(2, 2).unwrap(), 0.5, 1e-15));
    for d in 1..=20 {
        for s in (1..60).step_by(2) {
            assert_eq!(hypercube_return_probability::<f64>(d, s).unwrap(), 0.0);
        }
        let n_eff = (1u64 << d) as f64 / 2.0;
        let mut prev = f64::INFINITY;
        for s in (0..200).step_by(2) {
            let v = hypercube_return_probability::<f64>(d, s).unwrap();
            assert!(v <= prev + 1e-15 && v >= 1.0 / n_eff - 1e-15);
            prev = v;
        }
    }
    assert!(hypercube_return_probability::<f64>(0, 2).is_err());
}

#[test]
fn hypercube_return_matches_matrix_powers() {
    for d in 1..=6 {
        let p = hypercube_matrix(d);
        let mut power = DMatrix::<f64>::identity(1 << d, 1 << d);
        for s in 0..=40u64 {
            let want = power[(0, 0)];
            let got = hypercube_return_probability::<f64>(d, s).unwrap();
            assert!(close(got, want, 1e-12), "d={d} s={s}: {got} vs {want}");
            power = &power * &p;
        }
    }
}

/// Smallest even `T` such that the return condition holds at every even
/// `s` in `[T, horizon]`, by iterating the distribution of a walk from the
/// origin.
fn mixing_by_iteration(topo: &Topology, horizon: u64) -> u64 {
    let vertices = topo.vertices().unwrap();
    let index = |v: &VertexAddress| vertices.iter().position(|w| w == v).unwrap();
    let adj: Vec<Vec<usize>> = vertices
        .iter()
        .map(|v| topo.neighbors(v).unwrap().iter().map(index).collect())
        .collect();
    let n = vertices.len() as f64;
    let n_eff = if topo.is_bipartite() { n / 2.0 } else { n };
    let mut dist = vec![0.0; vertices.len()];
    dist[index(&topo.origin())] = 1.0;
    let origin = index(&topo.origin());
    let mut good = VecDeque::new();
    for s in 1..=horizon {
        let mut next = vec![0.0; dist.len()];
        for (u, nb) in adj.iter().enumerate() {
            let share = dist[u] / nb.len() as f64;
            for &w in nb {
                next[w] += share;
            }
        }
        dist = next;
        if s % 2 == 0 {
            good.push_back((s, (dist[origin] - 1.0 / n_eff).abs() <= 1.0 / (2.0 * n_eff) + 1e-12));
        }
    }
    let mut answer = horizon + 2;
    for &(s, ok) in good.iter().rev() {
        if !ok {
            break;
        }
        answer = s;
    }
    answer.max(2)
}

#[test]
fn mixing_step_examples() {
    let cube = |dim| TopologySpec::Hypercube { dim };
    assert_eq!(mixing_step(&cube(1)).unwrap(), 2);
    assert_eq!(mixing_step(&cube(2)).unwrap(), 2);
    let expected = [2, 2, 2, 4, 6, 8, 8, 10, 12, 14, 16, 18];
    for (d, &want) in (1..=12).zip(&expected) {
        assert_eq!(mixing_step(&cube(d)).unwrap(), want, "d={d}");
        assert!(want <= u64::from(d * d).max(2));
    }
    assert!(mixing_step(&cube(10)).unwrap() <= 100);
}

#[test]
fn mixing_step_matches_iteration() {
    let mut specs: Vec<TopologySpec> = (1..=12).map(|dim| TopologySpec::Hypercube { dim }).collect();
    specs.extend([3, 4, 5, 6, 7, 8, 10, 16, 17].map(|n| TopologySpec::Cycle { n }));
    specs.push(TopologySpec::FiniteAbelianCayley {
        moduli: vec![5, 5],
        generators: vec![vec![1, 0], vec![4, 0], vec![0, 1], vec![0, 4]],
    });
    specs.push(TopologySpec::FiniteAbelianCayley {
        moduli: vec![6, 4],
        generators: vec![vec![1, 0], vec![5, 0], vec![0, 1], vec![0, 3], vec![0, 0]],
    });
    for spec in specs {
        let topo = spec.build().unwrap();
        let t = mixing_step(&spec).unwrap();
        assert_eq!(t, mixing_by_iteration(&topo, 4 * t + 40), "{spec:?}");
    }
}

#[test]
fn mixing_step_errors() {
    let e = mixing_step(&TopologySpec::Complete { n: 5, with_loops: true });
    assert!(matches!(e, Err(OracleError::Unsupported(_))));
    let disconnected = TopologySpec::FiniteAbelianCayley { moduli: vec![6], generators: vec![vec![2], vec![4]] };
    assert_eq!(mixing_step(&disconnected), Err(OracleError::Disconnected));
    let big = TopologySpec::Cycle { n: MIXING_ORDER_CAP + 1 };
    assert!(matches!(mixing_step(&big), Err(OracleError::OverCap { .. })));
}

#[test]
fn path_bound_values() {
    assert_eq!(path_distance_bounds(2, 0.5f64).unwrap().lower, 1);
    let b = path_distance_bounds(100, 0.2f64).unwrap();
    assert_eq!(b.lower, 50);
    assert!(close(b.upper, 2210.5, 0.05), "{}", b.upper);
    assert!(close(path_time_bound::<f64>(100), 4.605e6, 1e3));
    assert!(close(path_excursion_bound::<f64>(100), 2763.1, 0.05));
    assert!(close(grid_dispersal_time::<f64>(50, 20.0), 391_202.3, 0.05));
    assert_eq!(hypercube_dispersal_time::<f64>(100, 16), 51_200.0);
    assert_eq!(hypercube_distance_bound::<f64>(16), 8.0);
}
