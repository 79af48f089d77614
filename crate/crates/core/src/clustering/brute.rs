use serde::{Deserialize, Serialize};

use super::backend::{ScoreOptions, Scorer};
use super::partitions::enumerate_partitions;
use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, FactoredMdp};

/// Largest agent count [`brute_force_optimal`] accepts.
pub const MAX_BRUTE_FORCE_AGENTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub assignment: ClusterAssignment,
    pub score: f64,
    /// Assignments scored, `S(N, k)`.
    pub evaluations: u64,
}

/// Best `k`-cluster assignment by scoring every partition. Ties keep the
/// first partition in growth-string order.
pub fn brute_force_optimal(
    model: &FactoredMdp,
    k: usize,
    options: &ScoreOptions,
) -> Result<BruteForceResult> {
    let n = model.agents();
    if n > MAX_BRUTE_FORCE_AGENTS {
        return Err(Error::Guard(format!(
            "brute force is limited to {MAX_BRUTE_FORCE_AGENTS} agents, model has {n}"
        )));
    }
    let scorer = Scorer::new(model, options.clone())?;
    let mut best: Option<(ClusterAssignment, f64)> = None;
    let mut evaluations = 0;
    for assignment in enumerate_partitions(n, k)? {
        let score = scorer.score(&assignment)?;
        evaluations += 1;
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((assignment, score));
        }
    }
    let (assignment, score) = best.expect("at least one partition");
    Ok(BruteForceResult {
        assignment,
        score,
        evaluations,
    })
}
