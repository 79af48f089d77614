mod common;

use common::sup_gap;
use timdp_core::clustering::{
    assignment_value, brute_force_optimal, enumerate_partitions, gsa_r, split_count, stirling2,
    subset_value_submodularity_check, ChainSampling, ClusterValueBackend, PropertyKind,
    Scalarization, ScoreOptions, Scorer,
};
use timdp_core::instances::{random_timdp, KernelScope, RandomSpec, RewardKind};
use timdp_core::{
    value_iteration, AgentSpec, ClusterAssignment, Error, FactoredMdp, ModelSpec, RewardSpec,
    SolverConfig,
};

fn local(seed: u64, agents: usize, reward: RewardKind) -> FactoredMdp {
    random_timdp(
        &RandomSpec::uniform(seed, agents, 2, 3)
            .with_scope(KernelScope::AgentLocal)
            .with_reward(reward),
    )
    .unwrap()
}

fn options(backend: ClusterValueBackend) -> ScoreOptions {
    ScoreOptions::new(backend, SolverConfig::default().with_epsilon(1e-11))
}

#[test]
fn backends_agree_on_local_separable_models() {
    let m = local(3, 5, RewardKind::AgentSeparable);
    let full = Scorer::new(&m, options(ClusterValueBackend::FullSolve)).unwrap();
    let split = Scorer::new(&m, options(ClusterValueBackend::Decomposed)).unwrap();
    let exact = Scorer::new(&m, options(ClusterValueBackend::Exact)).unwrap();
    for k in 1..=5 {
        for assignment in enumerate_partitions(5, k).unwrap().step_by(3) {
            let a = full.evaluate(&assignment).unwrap();
            let b = split.evaluate(&assignment).unwrap();
            let c = exact.evaluate(&assignment).unwrap();
            assert!(sup_gap(&a.values, &b.values) < 1e-8, "{assignment}");
            assert!(sup_gap(&a.values, &c.values) < 1e-8, "{assignment}");
            assert!((a.score - b.score).abs() < 1e-8);
            let vi = value_iteration(
                &m.with_clustering(assignment.clone()).unwrap(),
                &SolverConfig::default().with_epsilon(1e-11),
            )
            .unwrap();
            assert!(sup_gap(&vi.values, &a.values) < 1e-8);
        }
    }
}

#[test]
fn exact_backend_matches_vi_on_coupled_models() {
    let m = random_timdp(&RandomSpec::uniform(4, 4, 2, 2)).unwrap();
    let assignment = ClusterAssignment::from_labels(&[0, 1, 0, 2]).unwrap();
    let got = assignment_value(&m, &assignment, &options(ClusterValueBackend::Exact)).unwrap();
    let vi = value_iteration(
        &m.with_clustering(assignment).unwrap(),
        &SolverConfig::default().with_epsilon(1e-11),
    )
    .unwrap();
    assert!(sup_gap(&got.values, &vi.values) < 1e-8);
}

#[test]
fn decomposed_needs_a_separable_reward() {
    let m = random_timdp(
        &RandomSpec::uniform(0, 3, 2, 2)
            .with_scope(KernelScope::AgentLocal)
            .with_reward(RewardKind::StateOnly),
    )
    .unwrap();
    assert!(matches!(
        Scorer::new(&m, options(ClusterValueBackend::Decomposed)),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn designated_state_scalarization() {
    let m = local(5, 4, RewardKind::Indicator);
    let assignment = ClusterAssignment::from_labels(&[0, 0, 1, 1]).unwrap();
    for backend in [
        ClusterValueBackend::FullSolve,
        ClusterValueBackend::Decomposed,
    ] {
        let opts = ScoreOptions {
            scalarization: Scalarization::State(9),
            ..options(backend)
        };
        let scored = assignment_value(&m, &assignment, &opts).unwrap();
        assert!((scored.score - scored.values[9]).abs() < 1e-12);
    }
    let out_of_range = ScoreOptions {
        scalarization: Scalarization::State(16),
        ..options(ClusterValueBackend::FullSolve)
    };
    assert!(Scorer::new(&m, out_of_range).is_err());
}

#[test]
fn gsa_steps_refine_and_count_candidates() {
    let m = local(7, 6, RewardKind::AgentSeparable);
    let trace = gsa_r(&m, 6, &options(ClusterValueBackend::Decomposed)).unwrap();
    assert_eq!(trace.steps.len(), 6);
    assert_eq!(trace.steps[0].assignment, ClusterAssignment::single(6));
    assert_eq!(trace.steps[0].candidates_evaluated, 0);
    assert!(trace.steps[0].gain.is_none());
    for pair in trace.steps.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        assert_eq!(next.k, prev.k + 1);
        assert_eq!(next.assignment.len(), next.k);
        assert!(next.assignment.refines(&prev.assignment));
        let expected: u64 = prev
            .assignment
            .clusters()
            .iter()
            .map(|c| (1u64 << (c.len() - 1)) - 1)
            .sum();
        assert_eq!(next.candidates_evaluated, expected);
        assert_eq!(split_count(&prev.assignment), expected as u128);
        assert!((next.gain.unwrap() - (next.score - prev.score)).abs() < 1e-12);
        let split = next.split.as_ref().unwrap();
        assert!(split.is_canonical());
    }
    assert_eq!(trace.final_assignment(), &ClusterAssignment::singletons(6));
    // 31 + 15 + 7 + 3 + 1 for a chain of halving splits is the maximum
    assert!(trace.total_candidates() <= 31 + 15 + 7 + 3 + 1);
}

#[test]
fn gsa_is_deterministic_with_and_without_threads() {
    let m = local(8, 5, RewardKind::AgentSeparable);
    let threaded = options(ClusterValueBackend::Decomposed);
    let serial = ScoreOptions {
        solver: threaded.solver.clone().with_parallel(false),
        ..threaded.clone()
    };
    let a = gsa_r(&m, 4, &serial).unwrap();
    let b = gsa_r(&m, 4, &threaded).unwrap();
    assert_eq!(a.assignments(), b.assignments());
    assert_eq!(a.scores(), b.scores());
}

#[test]
fn gsa_matches_brute_force_at_two_clusters() {
    for seed in 0..4 {
        let m = local(seed, 5, RewardKind::AgentSeparable);
        let opts = options(ClusterValueBackend::Decomposed);
        let trace = gsa_r(&m, 5, &opts).unwrap();
        for k in 1..=5 {
            let brute = brute_force_optimal(&m, k, &opts).unwrap();
            assert_eq!(brute.evaluations as u128, stirling2(5, k).unwrap());
            let greedy = trace.steps[k - 1].score;
            assert!(greedy <= brute.score + 1e-9);
            if matches!(k, 1 | 2 | 5) {
                assert!((greedy - brute.score).abs() < 1e-9, "seed {seed} k {k}");
            }
        }
    }
}

#[test]
fn cluster_count_bounds_are_checked() {
    let m = local(0, 3, RewardKind::AgentSeparable);
    let opts = options(ClusterValueBackend::FullSolve);
    assert!(gsa_r(&m, 0, &opts).is_err());
    assert!(gsa_r(&m, 4, &opts).is_err());
    assert!(brute_force_optimal(&m, 4, &opts).is_err());
    let big = local(0, 11, RewardKind::AgentSeparable);
    assert!(matches!(
        brute_force_optimal(&big, 2, &opts),
        Err(Error::Guard(_))
    ));
}

#[test]
fn trace_files() {
    let m = local(1, 4, RewardKind::Indicator);
    let trace = gsa_r(&m, 3, &options(ClusterValueBackend::Decomposed)).unwrap();
    let mut out = Vec::new();
    trace.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "k,assignment_rgs_string,score,gain,candidates_evaluated,wall_ms"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,0000,"));
    let json: serde_json::Value = serde_json::from_str(&trace.to_json().unwrap()).unwrap();
    assert_eq!(json["steps"].as_array().unwrap().len(), 3);
    assert_eq!(json["backend"], "decomposed");
}

/// Three single-substate agents on one control; agent 0 wants action 0, the
/// other two want action 1.
fn shared_control_counterexample() -> FactoredMdp {
    FactoredMdp::from_spec(ModelSpec {
        agents: vec![AgentSpec { substates: 1 }; 3],
        clusters: vec![vec![0, 1, 2]],
        action_alphabet: 2,
        gamma: 0.5,
        kernels: vec![vec![vec![vec![1.0]; 2]]; 3],
        reward: RewardSpec::AgentSeparable {
            tables: vec![
                vec![vec![1.0, 0.0]],
                vec![vec![0.0, 1.0]],
                vec![vec![0.0, 1.0]],
            ],
        },
    })
    .unwrap()
}

#[test]
fn subset_values_are_not_submodular_under_a_shared_control() {
    let m = shared_control_counterexample();
    let report = subset_value_submodularity_check(
        &m,
        ChainSampling::Exhaustive,
        1e-9,
        &SolverConfig::default().with_epsilon(1e-12),
    )
    .unwrap();
    assert_eq!(report.count(PropertyKind::Monotonicity), 0);
    let worst = report
        .violations
        .iter()
        .find(|v| v.a == [0] && v.b == [0, 1] && v.agent == Some(2))
        .expect("A = {0}, B = {0, 1}, n = 2 fails");
    // V^{A+n} - V^A = 0 while V^{B+n} - V^B = 1 / (1 - gamma)
    assert!((worst.excess - 2.0).abs() < 1e-9);
    assert!((report.max_excess - 2.0).abs() < 1e-9);
}

#[test]
fn subset_values_are_modular_with_private_controls() {
    let m = random_timdp(
        &RandomSpec::uniform(2, 4, 2, 2)
            .with_clustering(ClusterAssignment::singletons(4))
            .with_scope(KernelScope::AgentLocal),
    )
    .unwrap();
    let report = subset_value_submodularity_check(
        &m,
        ChainSampling::Exhaustive,
        1e-9,
        &SolverConfig::default().with_epsilon(1e-12),
    )
    .unwrap();
    // 3^4 ordered pairs A ⊆ B, minus the 2^4 with A = B
    assert_eq!(report.pairs_checked, 81 - 16);
    let chains: u64 = (0..16u32)
        .map(|b| (1u64 << b.count_ones()) * (4 - b.count_ones() as u64))
        .sum();
    assert_eq!(report.chains_checked, chains);
    assert!(report.is_clean(), "{:?}", report.violations.first());
    assert!(report.max_excess < 1e-9);
}

#[test]
fn sampled_chains_are_reproducible() {
    let m = local(3, 4, RewardKind::Indicator);
    let config = SolverConfig::default();
    let sampling = ChainSampling::Sampled {
        chains: 50,
        seed: 9,
    };
    let a = subset_value_submodularity_check(&m, sampling, 1e-9, &config).unwrap();
    let b = subset_value_submodularity_check(&m, sampling, 1e-9, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.chains_checked, 50);
}
