//! On-disk model format and its validation.
//!
//! ```json
//! {"agents":[{"substates":2},...],
//!  "clusters":[[0,2],[1]],
//!  "action_alphabet":3,
//!  "gamma":0.9,
//!  "kernels":[ /* agent n: p_n[s][a][s_n'] */ ],
//!  "reward":{"variant":"agent_separable","tables":[...]}}
//! ```
//!
//! `s` is the flat state index (agent 0 least significant digit) and `a` the
//! control received by the agent's cluster.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, RewardSpec, StateIndexer};
use crate::error::Result;

/// Row sums must be within this of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub substates: usize,
}

/// Unchecked model as read from or written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub agents: Vec<AgentSpec>,
    pub clusters: Vec<Vec<usize>>,
    pub action_alphabet: usize,
    pub gamma: f64,
    pub kernels: Vec<Vec<Vec<Vec<f64>>>>,
    pub reward: RewardSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoAgents,
    ZeroSubstates {
        agent: usize,
    },
    ZeroActions,
    Gamma {
        value: f64,
    },
    Partition {
        message: String,
    },
    KernelShape {
        agent: usize,
        message: String,
    },
    RowSum {
        agent: usize,
        state: usize,
        action: usize,
        sum: f64,
    },
    NegativeProbability {
        agent: usize,
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    RewardShape {
        message: String,
    },
    RewardValue {
        message: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoAgents => write!(f, "model has no agents"),
            Self::ZeroSubstates { agent } => write!(f, "agent {agent} has zero substates"),
            Self::ZeroActions => write!(f, "action alphabet is empty"),
            Self::Gamma { value } => write!(f, "gamma {value} is not inside (0, 1)"),
            Self::Partition { message } => write!(f, "clustering: {message}"),
            Self::KernelShape { agent, message } => write!(f, "kernel of agent {agent}: {message}"),
            Self::RowSum {
                agent,
                state,
                action,
                sum,
            } => write!(
                f,
                "kernel row (agent {agent}, state {state}, action {action}) sums to {sum}"
            ),
            Self::NegativeProbability {
                agent,
                state,
                action,
                next,
                value,
            } => write!(
                f,
                "kernel entry (agent {agent}, state {state}, action {action}, next {next}) is {value}"
            ),
            Self::RewardShape { message } => write!(f, "reward shape: {message}"),
            Self::RewardValue { message } => write!(f, "reward value: {message}"),
        }
    }
}

/// Every invariant a model file violates. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// A kernel row rescaled by [`ModelSpec::renormalize_kernels`].
#[derive(Debug, Clone, PartialEq)]
pub struct RowRepair {
    pub agent: usize,
    pub state: usize,
    pub action: usize,
    pub old_sum: f64,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn substates(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.substates).collect()
    }

    /// Rescale every kernel row whose sum is off by more than the tolerance
    /// (but positive) back to 1. Each repair is logged at warn level.
    pub fn renormalize_kernels(&mut self) -> Vec<RowRepair> {
        let mut repairs = Vec::new();
        for (agent, kernel) in self.kernels.iter_mut().enumerate() {
            for (state, per_action) in kernel.iter_mut().enumerate() {
                for (action, row) in per_action.iter_mut().enumerate() {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE && sum > 0.0 && sum.is_finite() {
                        log::warn!(
                            "renormalizing kernel row agent={agent} state={state} action={action} sum={sum}"
                        );
                        row.iter_mut().for_each(|p| *p /= sum);
                        repairs.push(RowRepair {
                            agent,
                            state,
                            action,
                            old_sum: sum,
                        });
                    }
                }
            }
        }
        repairs
    }

    /// Lists every violated invariant; never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let n = self.agents.len();
        if n == 0 {
            out.push(Violation::NoAgents);
        }
        for (agent, a) in self.agents.iter().enumerate() {
            if a.substates == 0 {
                out.push(Violation::ZeroSubstates { agent });
            }
        }
        let m = self.action_alphabet;
        if m == 0 {
            out.push(Violation::ZeroActions);
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            out.push(Violation::Gamma { value: self.gamma });
        }
        let clustering = match ClusterAssignment::for_agents(self.clusters.clone(), n) {
            Ok(c) => {
                if c.clusters() != self.clusters.as_slice() {
                    out.push(Violation::Partition {
                        message: "clusters are not stored in canonical order".into(),
                    });
                }
                Some(c)
            }
            Err(e) => {
                out.push(Violation::Partition {
                    message: e.to_string(),
                });
                None
            }
        };
        let substates = self.substates();
        let Ok(indexer) = StateIndexer::new(substates.clone()) else {
            return ValidationReport { violations: out };
        };
        let states = indexer.size();

        if self.kernels.len() != n {
            out.push(Violation::KernelShape {
                agent: self.kernels.len(),
                message: format!("{} kernels for {n} agents", self.kernels.len()),
            });
        }
        for (agent, kernel) in self.kernels.iter().enumerate().take(n) {
            let k = substates[agent];
            if kernel.len() != states {
                out.push(Violation::KernelShape {
                    agent,
                    message: format!("{} state rows, expected {states}", kernel.len()),
                });
                continue;
            }
            for (state, per_action) in kernel.iter().enumerate() {
                if per_action.len() != m {
                    out.push(Violation::KernelShape {
                        agent,
                        message: format!(
                            "state {state}: {} actions, expected {m}",
                            per_action.len()
                        ),
                    });
                    continue;
                }
                for (action, row) in per_action.iter().enumerate() {
                    if row.len() != k {
                        out.push(Violation::KernelShape {
                            agent,
                            message: format!(
                                "state {state} action {action}: {} entries, expected {k}",
                                row.len()
                            ),
                        });
                        continue;
                    }
                    for (next, &p) in row.iter().enumerate() {
                        if !p.is_finite() || p < 0.0 {
                            out.push(Violation::NegativeProbability {
                                agent,
                                state,
                                action,
                                next,
                                value: p,
                            });
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    if !sum.is_finite() || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        out.push(Violation::RowSum {
                            agent,
                            state,
                            action,
                            sum,
                        });
                    }
                }
            }
        }
        self.validate_reward(&substates, states, clustering.as_ref(), &mut out);
        ValidationReport { violations: out }
    }

    fn validate_reward(
        &self,
        substates: &[usize],
        states: usize,
        clustering: Option<&ClusterAssignment>,
        out: &mut Vec<Violation>,
    ) {
        let m = self.action_alphabet;
        let mut check_values = |label: &str, values: &mut dyn Iterator<Item = f64>| {
            for v in values {
                if !v.is_finite() || v < 0.0 {
                    out.push(Violation::RewardValue {
                        message: format!("{label} contains {v}; rewards must be finite and >= 0"),
                    });
                    return;
                }
            }
        };
        let mut shape = Vec::new();
        match &self.reward {
            RewardSpec::AgentSeparable { tables } => {
                if tables.len() != substates.len() {
                    shape.push(format!(
                        "{} agent tables for {} agents",
                        tables.len(),
                        substates.len()
                    ));
                }
                for (n, t) in tables.iter().enumerate().take(substates.len()) {
                    if t.len() != substates[n] || t.iter().any(|r| r.len() != m) {
                        shape.push(format!("agent {n} table is not {}x{m}", substates[n]));
                    }
                    check_values(
                        &format!("agent {n} table"),
                        &mut t.iter().flatten().copied(),
                    );
                }
            }
            RewardSpec::ClusterSeparable { groups, tables } => {
                if let Some(c) = clustering {
                    if groups.as_slice() != c.clusters() {
                        shape.push("reward groups differ from the model clustering".into());
                    }
                }
                if groups.len() != tables.len() {
                    shape.push(format!(
                        "{} groups but {} tables",
                        groups.len(),
                        tables.len()
                    ));
                }
                for (g, (members, t)) in groups.iter().zip(tables).enumerate() {
                    let rows: usize = members
                        .iter()
                        .map(|&a| substates.get(a).copied().unwrap_or(0))
                        .product();
                    if t.len() != rows || t.iter().any(|r| r.len() != m) {
                        shape.push(format!("group {g} table is not {rows}x{m}"));
                    }
                    check_values(
                        &format!("group {g} table"),
                        &mut t.iter().flatten().copied(),
                    );
                }
            }
            RewardSpec::Full { table } => {
                let joint = clustering
                    .and_then(|c| (m as u128).checked_pow(c.len() as u32))
                    .unwrap_or(0);
                if table.len() != states || table.iter().any(|r| r.len() as u128 != joint) {
                    shape.push(format!("full table is not {states}x{joint}"));
                }
                check_values("full table", &mut table.iter().flatten().copied());
            }
            RewardSpec::Indicator { desirable, .. } => {
                if desirable.len() != substates.len() {
                    shape.push(format!(
                        "{} desirable sets for {} agents",
                        desirable.len(),
                        substates.len()
                    ));
                }
                for (n, d) in desirable.iter().enumerate().take(substates.len()) {
                    if d.iter().any(|&x| x >= substates[n]) {
                        shape.push(format!("agent {n} desirable set names a missing substate"));
                    }
                }
            }
            RewardSpec::StateOnly { table } => {
                if table.len() != states {
                    shape.push(format!(
                        "state table has {} entries, expected {states}",
                        table.len()
                    ));
                }
                check_values("state table", &mut table.iter().copied());
            }
        }
        out.extend(
            shape
                .into_iter()
                .map(|message| Violation::RewardShape { message }),
        );
    }
}

/// Free-function form of [`ModelSpec::validate`].
pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    spec.validate()
}
