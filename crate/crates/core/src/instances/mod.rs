//! Seeded model builders.

mod best_response;
mod channel;
mod random;

pub use best_response::{best_response_kernel, response_row};
pub use channel::{
    channel_instance, ChannelInstance, Scenario, BANDWIDTHS, CHANNEL_AGENTS, CHANNEL_GAMMA, COSTS,
    MEDIUM,
};
pub use random::{random_assignment, random_timdp, KernelScope, RandomSpec, RewardKind};

use crate::model::RewardSpec;

/// Unit reward per agent whose substate lies in `desirable[n]`, optionally
/// scaled by `1/N`.
pub fn indicator_reward(desirable: Vec<Vec<usize>>, normalized: bool) -> RewardSpec {
    RewardSpec::Indicator {
        desirable,
        normalized,
    }
}
