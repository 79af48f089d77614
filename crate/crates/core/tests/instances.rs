use proptest::prelude::*;
use timdp_core::instances::{
    best_response_kernel, channel_instance, indicator_reward, random_assignment, random_timdp,
    ChannelInstance, KernelScope, RandomSpec, RewardKind, Scenario, CHANNEL_AGENTS, COSTS, MEDIUM,
};
use timdp_core::{ClusterAssignment, RewardSpec};

#[test]
fn same_seed_same_model() {
    let spec = RandomSpec::uniform(42, 4, 2, 3)
        .with_clustering(ClusterAssignment::from_labels(&[0, 1, 1, 0]).unwrap())
        .with_reward(RewardKind::Full);
    let a = random_timdp(&spec).unwrap();
    let b = random_timdp(&spec).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let c = random_timdp(&RandomSpec { seed: 43, ..spec }).unwrap();
    assert_ne!(a.to_spec(), c.to_spec());
}

#[test]
fn state_space_sizes() {
    let m = random_timdp(&RandomSpec::uniform(1, 7, 2, 3)).unwrap();
    assert_eq!(m.states(), 128);
    let k = random_timdp(
        &RandomSpec::uniform(1, 5, 2, 3).with_clustering(ClusterAssignment::singletons(5)),
    )
    .unwrap();
    assert_eq!(k.joint_controls(), 243);
    let ch = channel_instance(1, Scenario::MaxRevenue).unwrap();
    assert_eq!(ch.states(), 729);
    assert_eq!(ch.agents(), CHANNEL_AGENTS);
}

#[test]
fn rows_are_distributions() {
    let m =
        random_timdp(&RandomSpec::uniform(8, 3, 3, 2).with_scope(KernelScope::AgentLocal)).unwrap();
    assert!(m.validate().is_empty());
    for agent in 0..3 {
        for s in 0..m.states() {
            for a in 0..2 {
                let row = m.kernel_row(agent, s, a);
                assert!(row.iter().all(|&p| p >= 0.0));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn assignment_uses_every_label() {
    for seed in 0..20 {
        let c = random_assignment(7, 4, seed).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.agents(), 7);
    }
    assert!(random_assignment(3, 4, 0).is_err());
    assert!(random_assignment(3, 0, 0).is_err());
}

#[test]
fn indicator_counts_desirable_agents() {
    let reward = indicator_reward(vec![vec![1], vec![0, 2]], false);
    let normalized = indicator_reward(vec![vec![1], vec![0, 2]], true);
    let m = random_timdp(&RandomSpec {
        substates: vec![2, 3],
        ..RandomSpec::uniform(0, 2, 2, 2)
    })
    .unwrap();
    let a = m.with_reward(reward).unwrap();
    let b = m.with_reward(normalized).unwrap();
    // s = x0 + 2 x1
    let cases = [(0, 1.0), (1, 2.0), (2, 0.0), (3, 1.0), (4, 1.0), (5, 2.0)];
    for (s, want) in cases {
        assert_eq!(a.reward_eval(s, &[0]).unwrap(), want);
        assert_eq!(b.reward_eval(s, &[1]).unwrap(), want / 2.0);
    }
}

#[test]
fn best_response_is_sparse_unless_tied() {
    let utilities = vec![vec![vec![vec![1.0, 3.0, 2.0], vec![5.0, 5.0, 0.0]]]];
    let k = best_response_kernel(&utilities, 0.0).unwrap();
    assert_eq!(k[0][0][0], vec![0.0, 1.0, 0.0]);
    assert_eq!(k[0][0][1], vec![0.5, 0.5, 0.0]);
}

#[test]
fn channel_kernels_follow_occupancy() {
    let inst = ChannelInstance::new(3, Scenario::MaxRevenue);
    let m = inst
        .build(ClusterAssignment::single(CHANNEL_AGENTS))
        .unwrap();
    // everybody on channel 0 under the cheapest prices
    let s = 0;
    let digits = m.decode_state(s).unwrap();
    for n in 0..CHANNEL_AGENTS {
        let row = m.kernel_row(n, s, 0);
        let u: Vec<f64> = (0..3).map(|x| inst.utility(n, &digits, 0, x)).collect();
        let best = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for x in 0..3 {
            if row[x] > 0.0 {
                assert_eq!(u[x], best);
            }
        }
        // five others on channel 0 leave channel 2 at full bandwidth
        assert!((u[2] - (100.0 - inst.betas[n] * COSTS[0][2])).abs() < 1e-12);
        assert!((u[0] - 20.0 / 6.0).abs() < 1e-12);
    }
}

#[test]
fn channel_rewards() {
    let revenue = ChannelInstance::new(1, Scenario::MaxRevenue).reward();
    let RewardSpec::AgentSeparable { tables } = revenue else {
        panic!("revenue reward is agent-separable");
    };
    assert_eq!(tables[0][2][1], COSTS[1][2]);
    let desired = channel_instance(1, Scenario::DesiredConfiguration).unwrap();
    let all_medium = desired.encode_state(&[MEDIUM; CHANNEL_AGENTS]).unwrap();
    assert_eq!(desired.reward_eval(all_medium, &[2]).unwrap(), 6.0);
    assert_eq!(desired.reward_eval(0, &[0]).unwrap(), 0.0);
}

#[test]
fn channel_betas_are_seeded() {
    let a = ChannelInstance::new(5, Scenario::MaxRevenue);
    let b = ChannelInstance::new(5, Scenario::DesiredConfiguration);
    let c = ChannelInstance::new(6, Scenario::MaxRevenue);
    assert_eq!(a.betas, b.betas);
    assert_ne!(a.betas, c.betas);
    assert!(a.betas.iter().all(|b| (0.0..1.0).contains(b)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_models_validate(seed in 0u64..10_000, agents in 1usize..5, k in 1usize..4, scope in 0usize..3, reward in 0usize..5) {
        let k = k.min(agents);
        let scope = [KernelScope::Global, KernelScope::ClusterLocal, KernelScope::AgentLocal][scope];
        let reward = [
            RewardKind::AgentSeparable,
            RewardKind::ClusterSeparable,
            RewardKind::Full,
            RewardKind::StateOnly,
            RewardKind::Indicator,
        ][reward];
        let spec = RandomSpec::uniform(seed, agents, 2, 2)
            .with_clustering(random_assignment(agents, k, seed).unwrap())
            .with_scope(scope)
            .with_reward(reward);
        let m = random_timdp(&spec).unwrap();
        prop_assert!(m.validate().is_empty());
        prop_assert_eq!(m.is_separable(), !matches!(reward, RewardKind::Full | RewardKind::StateOnly));
        if scope != KernelScope::Global {
            prop_assert!(m.is_cluster_local());
        }
    }

    #[test]
    fn softmax_rows_sum_to_one(u in prop::collection::vec(-5.0f64..5.0, 1..6), t in 0.1f64..10.0) {
        let k = best_response_kernel(&[vec![vec![u]]], t).unwrap();
        let row = &k[0][0][0];
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(row.iter().all(|&p| p > 0.0));
    }
}
