use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{
    AgentSpec, ClusterAssignment, FactoredMdp, ModelSpec, RewardSpec, StateIndexer,
};

/// Which part of the current state each agent's kernel row may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelScope {
    /// An independent row for every full state.
    #[default]
    Global,
    /// Rows depend only on the substates of the agent's own cluster.
    ClusterLocal,
    /// Rows depend only on the agent's own substate.
    AgentLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// `r_n(s_n, a)` tables.
    #[default]
    AgentSeparable,
    /// One `r_c(s_c, a)` table per cluster.
    ClusterSeparable,
    /// `r(s, alpha)` over joint controls.
    Full,
    /// `r(s)`, independent of the controls.
    StateOnly,
    /// Each substate of each agent is desirable with probability 1/2.
    Indicator,
}

/// Parameters of [`random_timdp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub substates: Vec<usize>,
    pub actions: usize,
    pub clustering: ClusterAssignment,
    pub gamma: f64,
    pub kernel_scope: KernelScope,
    pub reward: RewardKind,
    /// Symmetric Dirichlet concentration of every kernel row.
    pub concentration: f64,
}

impl RandomSpec {
    /// `agents` agents with `substates` substates each, one cluster,
    /// `gamma = 0.9`, global kernels, agent-separable reward.
    pub fn uniform(seed: u64, agents: usize, substates: usize, actions: usize) -> Self {
        Self {
            seed,
            substates: vec![substates; agents],
            actions,
            clustering: ClusterAssignment::single(agents),
            gamma: 0.9,
            kernel_scope: KernelScope::Global,
            reward: RewardKind::AgentSeparable,
            concentration: 1.0,
        }
    }

    pub fn with_clustering(mut self, clustering: ClusterAssignment) -> Self {
        self.clustering = clustering;
        self
    }

    pub fn with_scope(mut self, scope: KernelScope) -> Self {
        self.kernel_scope = scope;
        self
    }

    pub fn with_reward(mut self, reward: RewardKind) -> Self {
        self.reward = reward;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Seeded random model. The generator is ChaCha8 seeded with
/// `seed_from_u64(seed)`; draws happen in a fixed order (kernels agent by
/// agent, then rewards), so equal specs give bit-identical models.
pub fn random_timdp(spec: &RandomSpec) -> Result<FactoredMdp> {
    let n = spec.substates.len();
    if n == 0 || spec.actions == 0 {
        return domain("need at least one agent and one action");
    }
    if spec.clustering.agents() != n {
        return domain(format!(
            "clustering covers {} agents, spec has {n}",
            spec.clustering.agents()
        ));
    }
    if !spec.concentration.is_finite() || spec.concentration <= 0.0 {
        return domain(format!(
            "concentration must be positive, got {}",
            spec.concentration
        ));
    }
    let indexer = StateIndexer::new(spec.substates.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gamma_dist = Gamma::new(spec.concentration, 1.0)
        .map_err(|e| crate::Error::InputDomain(e.to_string()))?;
    let m = spec.actions;

    let mut kernels = Vec::with_capacity(n);
    for agent in 0..n {
        let scope: Vec<usize> = match spec.kernel_scope {
            KernelScope::Global => (0..n).collect(),
            KernelScope::ClusterLocal => {
                spec.clustering.clusters()[spec.clustering.cluster_of(agent)].clone()
            }
            KernelScope::AgentLocal => vec![agent],
        };
        let local = StateIndexer::new(scope.iter().map(|&a| spec.substates[a]).collect())?;
        let k = spec.substates[agent];
        let rows: Vec<Vec<Vec<f64>>> = (0..local.size())
            .map(|_| {
                (0..m)
                    .map(|_| dirichlet(&mut rng, &gamma_dist, k))
                    .collect()
            })
            .collect();
        let kernel = (0..indexer.size())
            .map(|s| {
                let t = scope
                    .iter()
                    .zip(local.places())
                    .map(|(&a, &place)| indexer.digit(s, a) * place)
                    .sum::<usize>();
                rows[t].clone()
            })
            .collect();
        kernels.push(kernel);
    }

    let reward = random_reward(spec, &indexer, &mut rng);
    FactoredMdp::from_spec(ModelSpec {
        agents: spec
            .substates
            .iter()
            .map(|&substates| AgentSpec { substates })
            .collect(),
        clusters: spec.clustering.clusters().to_vec(),
        action_alphabet: m,
        gamma: spec.gamma,
        kernels,
        reward,
    })
}

fn dirichlet(rng: &mut ChaCha8Rng, dist: &Gamma<f64>, k: usize) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..k).map(|_| dist.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return draws.into_iter().map(|x| x / sum).collect();
        }
    }
}

fn uniform_table(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random::<f64>()).collect())
        .collect()
}

fn random_reward(spec: &RandomSpec, indexer: &StateIndexer, rng: &mut ChaCha8Rng) -> RewardSpec {
    let m = spec.actions;
    match spec.reward {
        RewardKind::AgentSeparable => RewardSpec::AgentSeparable {
            tables: spec
                .substates
                .iter()
                .map(|&k| uniform_table(rng, k, m))
                .collect(),
        },
        RewardKind::ClusterSeparable => RewardSpec::ClusterSeparable {
            groups: spec.clustering.clusters().to_vec(),
            tables: spec
                .clustering
                .clusters()
                .iter()
                .map(|g| {
                    let rows = g.iter().map(|&a| spec.substates[a]).product();
                    uniform_table(rng, rows, m)
                })
                .collect(),
        },
        RewardKind::Full => {
            let joint = m.pow(spec.clustering.len() as u32);
            RewardSpec::Full {
                table: uniform_table(rng, indexer.size(), joint),
            }
        }
        RewardKind::StateOnly => RewardSpec::StateOnly {
            table: (0..indexer.size()).map(|_| rng.random::<f64>()).collect(),
        },
        RewardKind::Indicator => RewardSpec::Indicator {
            desirable: spec
                .substates
                .iter()
                .map(|&k| (0..k).filter(|_| rng.random_bool(0.5)).collect())
                .collect(),
            normalized: false,
        },
    }
}

/// Uniformly random clustering of `agents` agents into exactly `clusters`
/// nonempty clusters (rejection sampling over label vectors).
pub fn random_assignment(agents: usize, clusters: usize, seed: u64) -> Result<ClusterAssignment> {
    if clusters == 0 || clusters > agents {
        return domain(format!(
            "cannot split {agents} agents into {clusters} clusters"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let labels: Vec<usize> = (0..agents).map(|_| rng.random_range(0..clusters)).collect();
        let mut seen = vec![false; clusters];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&x| x) {
            return ClusterAssignment::from_labels(&labels);
        }
    }
}
