use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::best_response::best_response_kernel;
use super::indicator_reward;
use crate::error::Result;
use crate::model::{
    AgentSpec, ClusterAssignment, FactoredMdp, ModelSpec, RewardSpec, StateIndexer,
};

pub const CHANNEL_AGENTS: usize = 6;
pub const BANDWIDTHS: [f64; 3] = [20.0, 50.0, 100.0];
/// `COSTS[a][x]`: price of channel `x` under control `a`.
pub const COSTS: [[f64; 3]; 3] = [[0.0, 10.0, 30.0], [1.0, 15.0, 50.0], [10.0, 50.0, 100.0]];
pub const CHANNEL_GAMMA: f64 = 0.9;
/// Index of the medium-bandwidth channel.
pub const MEDIUM: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Reward is the total price paid: `sum_n nu(s_n, alpha_n)`.
    MaxRevenue,
    /// Reward counts agents on the medium channel.
    DesiredConfiguration,
}

/// Channel-selection game: each agent picks one of three channels by best
/// response to the current occupancy, and the controller sets per-cluster
/// price levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelInstance {
    pub seed: u64,
    pub scenario: Scenario,
    pub bandwidths: [f64; 3],
    pub costs: [[f64; 3]; 3],
    /// Cost sensitivity of each agent, uniform on [0, 1].
    pub betas: Vec<f64>,
    pub gamma: f64,
}

impl ChannelInstance {
    pub fn new(seed: u64, scenario: Scenario) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            seed,
            scenario,
            bandwidths: BANDWIDTHS,
            costs: COSTS,
            betas: (0..CHANNEL_AGENTS).map(|_| rng.random::<f64>()).collect(),
            gamma: CHANNEL_GAMMA,
        }
    }

    /// `u_n(x) = b(x) / (1 + #{n' != n : s_n' = x}) - beta_n * nu(x, a)`.
    pub fn utility(&self, agent: usize, digits: &[usize], a: usize, x: usize) -> f64 {
        let others = digits
            .iter()
            .enumerate()
            .filter(|&(m, &d)| m != agent && d == x)
            .count();
        self.bandwidths[x] / (1.0 + others as f64) - self.betas[agent] * self.costs[a][x]
    }

    pub fn reward(&self) -> RewardSpec {
        match self.scenario {
            Scenario::MaxRevenue => RewardSpec::AgentSeparable {
                tables: (0..CHANNEL_AGENTS)
                    .map(|_| {
                        (0..3)
                            .map(|x| (0..3).map(|a| self.costs[a][x]).collect())
                            .collect()
                    })
                    .collect(),
            },
            Scenario::DesiredConfiguration => {
                indicator_reward(vec![vec![MEDIUM]; CHANNEL_AGENTS], false)
            }
        }
    }

    /// Model under `clustering` (best response at temperature 0).
    pub fn build(&self, clustering: ClusterAssignment) -> Result<FactoredMdp> {
        let indexer = StateIndexer::uniform(3, CHANNEL_AGENTS)?;
        let mut digits = vec![0; CHANNEL_AGENTS];
        let utilities: Vec<Vec<Vec<Vec<f64>>>> = (0..CHANNEL_AGENTS)
            .map(|n| {
                (0..indexer.size())
                    .map(|s| {
                        indexer.decode_into(s, &mut digits);
                        (0..3)
                            .map(|a| (0..3).map(|x| self.utility(n, &digits, a, x)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        FactoredMdp::from_spec(ModelSpec {
            agents: vec![AgentSpec { substates: 3 }; CHANNEL_AGENTS],
            clusters: clustering.clusters().to_vec(),
            action_alphabet: 3,
            gamma: self.gamma,
            kernels: best_response_kernel(&utilities, 0.0)?,
            reward: self.reward(),
        })
    }
}

/// Six-agent channel model with all agents in one cluster.
pub fn channel_instance(seed: u64, scenario: Scenario) -> Result<FactoredMdp> {
    ChannelInstance::new(seed, scenario).build(ClusterAssignment::single(CHANNEL_AGENTS))
}
