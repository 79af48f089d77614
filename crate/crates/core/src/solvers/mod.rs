//! Bellman operators and the value-iteration family of solvers.
//!
//! All solvers start from `V_0 = 0`, break ties toward the smallest control
//! index, and test the stop rule after each sweep (at least one sweep runs).

mod bellman;
mod bounds;
mod cvi;
mod report;
mod separable;
mod vi;

use serde::{Deserialize, Serialize};

pub use bellman::{bellman_full_apply, clustered_bellman_apply, policy_apply};
pub use bounds::{suboptimality_bounds, BoundCertificate};
pub use cvi::{cvi, hybrid_cvi_vi, HybridPeriod};
pub use report::{write_trace_csv, SolveReport, TraceRow};
pub use separable::{cvi_s, CviSMode};
pub use vi::{policy_value, value_iteration};

use crate::error::{domain, Error, Result};
use crate::model::FactoredMdp;

/// Default cap on `M^C` for full Bellman sweeps.
pub const DEFAULT_ACTION_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Among maximizers pick the smallest (mixed-radix) control index.
    #[default]
    SmallestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sup-norm stop threshold.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub tie_break: TieBreak,
    /// Full sweeps refuse models with more joint controls than this.
    pub action_cap: u64,
    /// Allow data-parallel state sweeps (results are identical either way).
    pub parallel: bool,
    /// Attach a suboptimality certificate (one extra full sweep) when the
    /// action cap allows it.
    pub certify: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_iterations: 100_000,
            tie_break: TieBreak::SmallestIndex,
            action_cap: DEFAULT_ACTION_CAP,
            parallel: true,
            certify: true,
        }
    }
}

impl SolverConfig {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_certify(mut self, certify: bool) -> Self {
        self.certify = certify;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return domain(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iterations == 0 {
            return domain("max_iterations must be positive");
        }
        Ok(())
    }

    pub(crate) fn check_cap(&self, model: &FactoredMdp) -> Result<()> {
        let actions = model.joint_controls();
        if actions > self.action_cap as u128 {
            return Err(Error::ActionSpaceTooLarge {
                actions,
                cap: self.action_cap,
            });
        }
        Ok(())
    }

    pub(crate) fn cap_allows(&self, model: &FactoredMdp) -> bool {
        model.joint_controls() <= self.action_cap as u128
    }
}

/// Order in which CVI visits clusters.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CviSchedule {
    /// `0, 1, ..., C-1, 0, 1, ...`
    #[default]
    RoundRobin,
    /// Repeat the given cycle forever.
    ExplicitCycle(Vec<usize>),
}

impl CviSchedule {
    /// Every cluster must appear in the cycle, and only existing clusters.
    pub fn validate(&self, clusters: usize) -> Result<()> {
        if let Self::ExplicitCycle(cycle) = self {
            if let Some(c) = cycle.iter().find(|&&c| c >= clusters) {
                return domain(format!("schedule names cluster {c}, model has {clusters}"));
            }
            if let Some(c) = (0..clusters).find(|c| !cycle.contains(c)) {
                return domain(format!("schedule never visits cluster {c}"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn cluster_at(&self, k: usize, clusters: usize) -> usize {
        match self {
            Self::RoundRobin => k % clusters,
            Self::ExplicitCycle(cycle) => cycle[k % cycle.len()],
        }
    }

    /// Length of one cycle; the stop rule looks at this many trailing sweeps.
    pub fn cycle_len(&self, clusters: usize) -> usize {
        match self {
            Self::RoundRobin => clusters,
            Self::ExplicitCycle(cycle) => cycle.len(),
        }
    }
}
