use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::topology::TopologySpec;

fn system(spec: TopologySpec, m: u64, variant: Variant, seed: u64, mode: WalkMode) -> ParticleSystem {
    let topo = Arc::new(spec.build().unwrap());
    ParticleSystem::new(topo, m, variant, seed, mode).unwrap()
}

fn std_system(spec: TopologySpec, m: u64, seed: u64) -> ParticleSystem {
    system(spec, m, Variant::Standard, seed, WalkMode::OnDemand)
}

fn occupancy_counts(sys: &ParticleSystem) -> HashMap<VertexAddress, u64> {
    let mut counts = HashMap::new();
    for v in sys.positions() {
        *counts.entry(v.clone()).or_insert(0) += 1;
    }
    counts
}

#[test]
fn single_particle_is_dispersed_immediately() {
    let mut sys = std_system(TopologySpec::Complete { n: 10, with_loops: true }, 1, 3);
    assert!(sys.is_dispersed());
    assert_eq!(sys.happy_unhappy_counts(), (1, 0));
    let r = sys.run(100);
    assert_eq!(r.status, RunStatus::Dispersed);
    assert_eq!(r.t_disp, Some(0));
    assert_eq!(r.d_disp, 0);
}

#[test]
fn fresh_path_system_is_all_unhappy() {
    let sys = std_system(TopologySpec::PathInfinite, 5, 0);
    assert!(sys.positions().iter().all(|v| *v == VertexAddress::Offset(0)));
    assert_eq!(sys.happy_unhappy_counts(), (0, 5));
}

#[test]
fn init_errors() {
    let topo = Arc::new(TopologySpec::Complete { n: 4, with_loops: false }.build().unwrap());
    let e = ParticleSystem::new(topo.clone(), 5, Variant::Standard, 0, WalkMode::OnDemand);
    assert!(matches!(e, Err(EngineError::Topology(TopologyError::TooManyParticles { .. }))));
    let e = ParticleSystem::new(topo.clone(), 0, Variant::Standard, 0, WalkMode::OnDemand);
    assert_eq!(e.unwrap_err(), EngineError::NoParticles);
    let e = ParticleSystem::new(topo, 2, Variant::Lazy { p: 1.5 }, 0, WalkMode::OnDemand);
    assert_eq!(e.unwrap_err(), EngineError::InvalidProbability(1.5));
    assert!(Variant::lazy(0.0).is_err());
    assert!(Variant::lazy(1.0).is_ok());
}

#[test]
fn same_inputs_give_identical_systems() {
    let spec = TopologySpec::GridInfinite { dim: 2 };
    let mut a = std_system(spec.clone(), 20, 99);
    let mut b = std_system(spec, 20, 99);
    for _ in 0..50 {
        assert_eq!(a.step(), b.step());
        assert_eq!(a.positions(), b.positions());
    }
    assert_eq!(a.run(10_000), b.run(10_000));
}

#[test]
fn complete_two_with_loops_disperses_half_the_time() {
    // 4 equiprobable destination pairs, 2 of them distinct
    let trials = 40_000u64;
    let hits = (0..trials)
        .filter(|&s| {
            let mut sys = std_system(TopologySpec::Complete { n: 2, with_loops: true }, 2, s);
            sys.step();
            sys.is_dispersed()
        })
        .count() as f64;
    let f = hits / trials as f64;
    let se = (0.25 / trials as f64).sqrt();
    assert!((f - 0.5).abs() < 4.0 * se, "fraction {f}");
}

#[test]
fn star_three_leaves_disperses_two_thirds_of_the_time() {
    let trials = 40_000u64;
    let mut hits = 0u64;
    for s in 0..trials {
        let mut sys = std_system(TopologySpec::Star { leaves: 3 }, 2, s);
        sys.step();
        assert!(sys.positions().iter().all(|v| *v != VertexAddress::Node(0)));
        hits += sys.is_dispersed() as u64;
    }
    let f = hits as f64 / trials as f64;
    let se = ((2.0 / 9.0) / trials as f64).sqrt();
    assert!((f - 2.0 / 3.0).abs() < 4.0 * se, "fraction {f}");
}

#[test]
fn dispersed_state_is_absorbing() {
    let mut sys = std_system(TopologySpec::PathInfinite, 6, 5);
    let r = sys.run(DEFAULT_BUDGET);
    assert_eq!(r.status, RunStatus::Dispersed);
    let before = sys.positions().to_vec();
    let t = sys.step_count();
    let rep = sys.step();
    assert_eq!(rep.movers, 0);
    assert_eq!(rep.pairwise_meetings, 0);
    assert!(rep.dispersed_after);
    assert_eq!(sys.positions(), &before[..]);
    assert_eq!(sys.step_count(), t);
}

#[test]
fn happy_unhappy_counts_follow_occupancy() {
    let mut sys = std_system(TopologySpec::PathInfinite, 3, 0);
    let o = VertexAddress::Offset;
    // particles 0,1 -> +1, particle 2 -> -1: occupancies {1:2, -1:1}
    sys.apply_step(&[(0, o(1)), (1, o(1)), (2, o(-1))]).unwrap();
    assert_eq!(sys.happy_unhappy_counts(), (1, 2));
}

#[test]
fn apply_step_rejects_illegal_moves() {
    let mut sys = std_system(TopologySpec::PathInfinite, 2, 0);
    let o = VertexAddress::Offset;
    assert!(sys.apply_step(&[(0, o(2))]).is_err());
    sys.apply_step(&[(0, o(1)), (1, o(-1))]).unwrap();
    assert!(sys.is_dispersed());
    assert!(sys.apply_step(&[(0, o(2))]).is_err());
}

#[test]
fn budget_is_absolute_and_zero_budget_runs_nothing() {
    let mut sys = std_system(TopologySpec::Complete { n: 10, with_loops: true }, 9, 1);
    let r = sys.run(0);
    assert_eq!(r.status, RunStatus::BudgetExhausted);
    assert_eq!(r.steps, 0);
    assert_eq!(r.t_disp, None);
    let r = sys.run(5);
    assert!(r.steps <= 5);
}

#[test]
fn ten_vertex_complete_graph_disperses_at_density_point_nine() {
    // finite-size escape is fast at n=10; the exponential barrier needs larger n
    let dispersed = (0..100u64)
        .filter(|&s| {
            let mut sys = std_system(TopologySpec::Complete { n: 10, with_loops: true }, 9, s);
            sys.run(10_000).status == RunStatus::Dispersed
        })
        .count();
    assert_eq!(dispersed, 100);
}

#[test]
fn dense_complete_graph_stays_crowded() {
    for s in 0..20u64 {
        let mut sys = std_system(TopologySpec::Complete { n: 50, with_loops: true }, 45, s);
        assert_eq!(sys.run(10_000).status, RunStatus::BudgetExhausted);
    }
}

#[test]
fn recording_off_gives_no_trajectories() {
    let mut sys = std_system(TopologySpec::PathInfinite, 2, 0);
    let plain = sys.clone().run(1000);
    assert_eq!(sys.trajectories().unwrap_err(), EngineError::NotRecorded);
    sys.record_trajectories(true).unwrap();
    assert_eq!(sys.run(1000), plain);
}

#[test]
fn recording_must_precede_first_step() {
    let mut sys = std_system(TopologySpec::PathInfinite, 2, 0);
    sys.step();
    assert_eq!(sys.record_trajectories(true).unwrap_err(), EngineError::RecordingAfterStart);
}

#[test]
fn short_recording_has_bounded_length() {
    let mut sys = std_system(TopologySpec::GridInfinite { dim: 2 }, 2, 4);
    sys.record_trajectories(true).unwrap();
    for _ in 0..3 {
        sys.step();
    }
    let tr = sys.trajectories().unwrap();
    assert_eq!(tr.len(), 2);
    for (i, p) in tr.iter().enumerate() {
        let pos = p.positions();
        assert!(pos.len() <= 4);
        assert_eq!(pos.last().unwrap(), &sys.positions()[i]);
    }
}

#[test]
fn trajectory_limit_is_reported() {
    let mut sys = std_system(TopologySpec::PathInfinite, 8, 2);
    sys.record_trajectories_with_limit(true, 10).unwrap();
    sys.run(10_000);
    assert_eq!(sys.trajectories().unwrap_err(), EngineError::TrajectoryLimit(10));
}

#[test]
fn replay_reproduces_final_state() {
    let spec = TopologySpec::TreeKRegular { k: 3, leaf_depth: 0 };
    let mut sys = std_system(spec.clone(), 30, 11);
    sys.record_trajectories(true).unwrap();
    let r = sys.run(DEFAULT_BUDGET);
    let mut fresh = std_system(spec, 30, 0);
    fresh.replay(sys.trajectories().unwrap()).unwrap();
    assert_eq!(fresh.positions(), sys.positions());
    assert_eq!(fresh.walk_counts(), sys.walk_counts());
    assert_eq!(fresh.meeting_total(), r.meeting_total);
    assert_eq!(fresh.result().d_disp, r.d_disp);
}

#[test]
fn truncated_tree_flags_boundary() {
    let spec = TopologySpec::TreeKRegular { k: 3, leaf_depth: 2 };
    let mut sys = std_system(spec, 6, 1);
    let r = sys.run(10_000);
    assert!(sys.boundary_flag());
    assert_eq!(r.status, RunStatus::BoundaryHit);
    assert_eq!(r.t_disp, None);
}

#[test]
fn record_serialises_with_schema() {
    let mut sys = std_system(TopologySpec::Cycle { n: 50 }, 10, 3);
    let rec = sys.run(10_000).record();
    let json = serde_json::to_string(&rec).unwrap();
    assert!(json.contains("\"schema\":\"disperse/1\""));
    assert!(json.contains("\"status\":\"dispersed\""));
    let back: RunRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rec);
    assert!(rec.walk_steps_min <= rec.walk_steps_median && rec.walk_steps_median <= rec.walk_steps_max);
}

fn arb_spec() -> impl Strategy<Value = TopologySpec> {
    prop_oneof![
        (2u64..40, any::<bool>()).prop_map(|(n, with_loops)| TopologySpec::Complete { n, with_loops }),
        (1u64..30).prop_map(|leaves| TopologySpec::Star { leaves }),
        Just(TopologySpec::PathInfinite),
        (3u64..60).prop_map(|n| TopologySpec::Cycle { n }),
        (3u32..6).prop_map(|k| TopologySpec::TreeKRegular { k, leaf_depth: 0 }),
        (1u32..4).prop_map(|dim| TopologySpec::GridInfinite { dim }),
        (1u32..8).prop_map(|dim| TopologySpec::Hypercube { dim }),
        Just(TopologySpec::FiniteAbelianCayley {
            moduli: vec![4, 6],
            generators: vec![vec![1, 0], vec![3, 0], vec![0, 1], vec![0, 5], vec![2, 3]],
        }),
    ]
}

fn particles_for(spec: &TopologySpec, frac: f64) -> u64 {
    let topo = spec.build().unwrap();
    let cap = topo.vertex_count().unwrap_or(40).min(40);
    ((cap as f64 * frac).ceil() as u64).clamp(1, cap)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn per_step_invariants(spec in arb_spec(), frac in 0.05f64..0.7, seed in any::<u64>(), lazy in prop::option::of(0.2f64..1.0)) {
        let m = particles_for(&spec, frac);
        let variant = lazy.map_or(Variant::Standard, |p| Variant::Lazy { p });
        let mut sys = system(spec.clone(), m, variant, seed, WalkMode::OnDemand);
        let bipartite = sys.topology().is_bipartite();
        let mut meetings = 0u64;
        for _ in 0..300 {
            let before = sys.positions().to_vec();
            let counts_before = occupancy_counts(&sys);
            let walks_before = sys.walk_counts().to_vec();
            let was_dispersed = sys.is_dispersed();
            let expected_meetings: u64 = counts_before.values().map(|&c| c * (c - 1) / 2).sum();
            let rep = sys.step();
            prop_assert_eq!(sys.positions().len() as u64, m);
            prop_assert_eq!(rep.pairwise_meetings, expected_meetings);
            meetings += rep.pairwise_meetings;
            if was_dispersed {
                prop_assert_eq!(rep.movers, 0);
                prop_assert_eq!(sys.positions(), &before[..]);
            } else {
                prop_assert!(rep.pairwise_meetings >= 1);
                if variant == Variant::Standard {
                    prop_assert!(rep.movers >= 2);
                }
            }
            for i in 0..before.len() {
                let moved = sys.walk_counts()[i] - walks_before[i];
                prop_assert!(moved <= 1);
                if counts_before[&before[i]] == 1 {
                    prop_assert_eq!(moved, 0);
                    prop_assert_eq!(&sys.positions()[i], &before[i]);
                }
                if moved == 0 {
                    prop_assert_eq!(&sys.positions()[i], &before[i]);
                }
                if bipartite {
                    let d = sys.topology().distance_to_origin(&sys.positions()[i]).unwrap();
                    prop_assert_eq!(d % 2, sys.walk_counts()[i] % 2);
                }
            }
            let dispersed = occupancy_counts(&sys).values().all(|&c| c == 1);
            prop_assert_eq!(dispersed, sys.is_dispersed());
            prop_assert_eq!(rep.dispersed_after, dispersed);
            let (h, u) = sys.happy_unhappy_counts();
            prop_assert_eq!(h + u, m);
            let total: u64 = sys.walk_counts().iter().sum();
            if variant == Variant::Standard {
                prop_assert!(total >= 2 * sys.step_count());
                prop_assert!(sys.meeting_total() >= sys.step_count());
            }
            prop_assert_eq!(sys.meeting_total(), meetings);
            let current = sys.current_max_distance();
            prop_assert!(sys.max_distance_ever() >= current);
        }
    }

    #[test]
    fn dispersed_runs_reach_pigeonhole_radius(spec in arb_spec(), frac in 0.05f64..0.5, seed in any::<u64>()) {
        let m = particles_for(&spec, frac);
        let mut sys = std_system(spec, m, seed);
        let r = sys.run(20_000);
        prop_assert!(r.t_disp.unwrap_or(0) <= 20_000);
        if r.status == RunStatus::Dispersed {
            let radius = sys.topology().pigeonhole_radius(m).unwrap();
            prop_assert!(r.d_disp >= radius);
            let mut pos = sys.positions().to_vec();
            pos.sort();
            pos.dedup();
            prop_assert_eq!(pos.len() as u64, m);
        }
    }

    #[test]
    fn walk_modes_agree(spec in arb_spec(), frac in 0.05f64..0.6, seed in any::<u64>()) {
        let m = particles_for(&spec, frac);
        let mut a = system(spec.clone(), m, Variant::Standard, seed, WalkMode::OnDemand);
        let mut b = system(spec, m, Variant::Standard, seed, WalkMode::Predetermined);
        a.record_trajectories(true).unwrap();
        b.record_trajectories(true).unwrap();
        let ra = a.run(5_000);
        let rb = b.run(5_000);
        prop_assert_eq!(ra, rb);
        prop_assert_eq!(a.trajectories().unwrap(), b.trajectories().unwrap());
    }

    #[test]
    fn lazy_one_matches_standard(spec in arb_spec(), frac in 0.05f64..0.6, seed in any::<u64>()) {
        let m = particles_for(&spec, frac);
        let mut a = system(spec.clone(), m, Variant::Standard, seed, WalkMode::OnDemand);
        let mut b = system(spec, m, Variant::Lazy { p: 1.0 }, seed, WalkMode::OnDemand);
        a.record_trajectories(true).unwrap();
        b.record_trajectories(true).unwrap();
        prop_assert_eq!(a.run(5_000), b.run(5_000));
        prop_assert_eq!(a.trajectories().unwrap(), b.trajectories().unwrap());
    }
}
