//! Fixed models shared by the benchmarks.

use timdp_core::instances::{random_timdp, KernelScope, RandomSpec, RewardKind};
use timdp_core::{ClusterAssignment, FactoredMdp, SolverConfig};

/// Binary substates, three actions, state-only reward, global kernels.
pub fn coupled(agents: usize, clustering: ClusterAssignment) -> FactoredMdp {
    random_timdp(
        &RandomSpec::uniform(7, agents, 2, 3)
            .with_reward(RewardKind::StateOnly)
            .with_clustering(clustering),
    )
    .expect("valid benchmark model")
}

/// Binary substates, three actions, agent-separable reward, agent-local
/// kernels.
pub fn separable(agents: usize) -> FactoredMdp {
    random_timdp(
        &RandomSpec::uniform(10, agents, 2, 3)
            .with_scope(KernelScope::AgentLocal)
            .with_reward(RewardKind::AgentSeparable),
    )
    .expect("valid benchmark model")
}

/// Single-threaded, uncertified solves so timings compare sweep costs.
pub fn timing_config() -> SolverConfig {
    SolverConfig::default()
        .with_epsilon(1e-8)
        .with_parallel(false)
        .with_certify(false)
}
