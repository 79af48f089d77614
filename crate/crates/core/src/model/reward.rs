use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, StateIndexer};
use crate::error::{Error, Result};

/// Reward function of a factored model.
///
/// Table layouts (all row-major, outermost index first):
/// - `AgentSeparable.tables[n][s_n][a]`
/// - `ClusterSeparable.tables[g][s_g][a]`, where `s_g` is the mixed-radix
///   index of the group's substates (smallest agent least significant)
/// - `Full.table[s][alpha]`, where `alpha` is the mixed-radix index of the
///   control vector (cluster 0 least significant)
/// - `StateOnly.table[s]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum RewardSpec {
    AgentSeparable {
        tables: Vec<Vec<Vec<f64>>>,
    },
    ClusterSeparable {
        groups: Vec<Vec<usize>>,
        tables: Vec<Vec<Vec<f64>>>,
    },
    Full {
        table: Vec<Vec<f64>>,
    },
    /// Unit reward for every agent whose substate lies in its desirable set,
    /// optionally scaled by `1/N`.
    Indicator {
        desirable: Vec<Vec<usize>>,
        #[serde(default)]
        normalized: bool,
    },
    /// Action-independent reward `r(s)`; not separable in general.
    StateOnly {
        table: Vec<f64>,
    },
}

impl RewardSpec {
    pub fn is_separable(&self) -> bool {
        matches!(
            self,
            Self::AgentSeparable { .. } | Self::ClusterSeparable { .. } | Self::Indicator { .. }
        )
    }

    /// Separable by agent: a sum of `r_n(s_n, alpha_n)` terms.
    pub fn is_agent_separable(&self) -> bool {
        matches!(self, Self::AgentSeparable { .. } | Self::Indicator { .. })
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::AgentSeparable { .. } => "agent_separable",
            Self::ClusterSeparable { .. } => "cluster_separable",
            Self::Full { .. } => "full",
            Self::Indicator { .. } => "indicator",
            Self::StateOnly { .. } => "state_only",
        }
    }

    /// Per-agent tables for the agent-separable variants.
    pub fn to_agent_separable(&self, substates: &[usize], actions: usize) -> Result<RewardSpec> {
        match self {
            Self::AgentSeparable { .. } => Ok(self.clone()),
            Self::Indicator {
                desirable,
                normalized,
            } => {
                let scale = if *normalized {
                    1.0 / substates.len() as f64
                } else {
                    1.0
                };
                let tables = substates
                    .iter()
                    .zip(desirable)
                    .map(|(&k, d)| {
                        (0..k)
                            .map(|x| {
                                let v = if d.contains(&x) { scale } else { 0.0 };
                                vec![v; actions]
                            })
                            .collect()
                    })
                    .collect();
                Ok(Self::AgentSeparable { tables })
            }
            _ => Err(Error::Unsupported(format!(
                "{} reward is not agent-separable",
                self.variant_name()
            ))),
        }
    }

    /// Recover the indicator form of an agent-separable table, when every
    /// table is action-independent with entries in `{0, c}` for a common `c`
    /// equal to `1` or `1/N`.
    pub fn try_into_indicator(&self) -> Option<RewardSpec> {
        let Self::AgentSeparable { tables } = self else {
            return match self {
                Self::Indicator { .. } => Some(self.clone()),
                _ => None,
            };
        };
        let n = tables.len() as f64;
        for (scale, normalized) in [(1.0, false), (1.0 / n, true)] {
            let mut desirable = Vec::with_capacity(tables.len());
            let mut ok = true;
            'agents: for t in tables {
                let mut d = Vec::new();
                for (x, row) in t.iter().enumerate() {
                    let first = row.first().copied().unwrap_or(0.0);
                    if row.iter().any(|&v| v != first) {
                        ok = false;
                        break 'agents;
                    }
                    if first == scale {
                        d.push(x);
                    } else if first != 0.0 {
                        ok = false;
                        break 'agents;
                    }
                }
                desirable.push(d);
            }
            if ok {
                return Some(Self::Indicator {
                    desirable,
                    normalized,
                });
            }
        }
        None
    }

    /// Pre-sum agent terms into one table per cluster of `clustering`.
    pub fn to_cluster_separable(
        &self,
        substates: &[usize],
        clustering: &ClusterAssignment,
        actions: usize,
    ) -> Result<RewardSpec> {
        if let Self::ClusterSeparable { groups, .. } = self {
            if groups.as_slice() == clustering.clusters() {
                return Ok(self.clone());
            }
            return Err(Error::Unsupported(
                "cluster-separable reward groups differ from the target clustering".into(),
            ));
        }
        let Self::AgentSeparable { tables } = self.to_agent_separable(substates, actions)? else {
            unreachable!()
        };
        let mut out = Vec::with_capacity(clustering.len());
        for group in clustering.clusters() {
            let ix = StateIndexer::new(group.iter().map(|&a| substates[a]).collect())?;
            let mut digits = vec![0; group.len()];
            let mut t = Vec::with_capacity(ix.size());
            for sg in 0..ix.size() {
                ix.decode_into(sg, &mut digits);
                let row = (0..actions)
                    .map(|a| {
                        group
                            .iter()
                            .zip(&digits)
                            .map(|(&agent, &x)| tables[agent][x][a])
                            .sum()
                    })
                    .collect();
                t.push(row);
            }
            out.push(t);
        }
        Ok(Self::ClusterSeparable {
            groups: clustering.clusters().to_vec(),
            tables: out,
        })
    }

    /// Materialize `r(s, alpha)` for every state and joint control.
    pub fn to_full(
        &self,
        substates: &[usize],
        clustering: &ClusterAssignment,
        actions: usize,
    ) -> Result<RewardSpec> {
        let states = StateIndexer::new(substates.to_vec())?;
        let controls = StateIndexer::uniform(actions, clustering.len())?;
        let compiled = CompiledReward::compile(self, &states, clustering, actions)?;
        let mut digits = vec![0; states.digits()];
        let mut alpha = vec![0; controls.digits()];
        let mut table = Vec::with_capacity(states.size());
        for s in 0..states.size() {
            states.decode_into(s, &mut digits);
            let row = (0..controls.size())
                .map(|ai| {
                    controls.decode_into(ai, &mut alpha);
                    compiled.eval(s, &digits, &alpha, clustering, actions)
                })
                .collect();
            table.push(row);
        }
        Ok(Self::Full { table })
    }

    /// Keep only the terms of agents in `keep`; other agents contribute zero.
    pub(crate) fn restricted(&self, keep: &[usize]) -> Result<RewardSpec> {
        match self {
            Self::AgentSeparable { tables } => Ok(Self::AgentSeparable {
                tables: tables
                    .iter()
                    .enumerate()
                    .map(|(n, t)| {
                        if keep.contains(&n) {
                            t.clone()
                        } else {
                            t.iter().map(|row| vec![0.0; row.len()]).collect()
                        }
                    })
                    .collect(),
            }),
            Self::Indicator {
                desirable,
                normalized,
            } => Ok(Self::Indicator {
                desirable: desirable
                    .iter()
                    .enumerate()
                    .map(|(n, d)| {
                        if keep.contains(&n) {
                            d.clone()
                        } else {
                            Vec::new()
                        }
                    })
                    .collect(),
                normalized: *normalized,
            }),
            _ => Err(Error::Unsupported(format!(
                "{} reward cannot be restricted to an agent subset",
                self.variant_name()
            ))),
        }
    }
}

/// Flat, index-ready form of a [`RewardSpec`] bound to one model.
#[derive(Debug, Clone)]
pub(crate) enum CompiledReward {
    /// `table[offset[n] + s_n * M + a]`
    PerAgent {
        offsets: Vec<usize>,
        table: Vec<f64>,
    },
    PerGroup {
        groups: Vec<(Vec<usize>, StateIndexer, usize)>,
        table: Vec<f64>,
    },
    Full {
        joint: usize,
        table: Vec<f64>,
    },
    State {
        table: Vec<f64>,
    },
}

impl CompiledReward {
    pub(crate) fn compile(
        spec: &RewardSpec,
        states: &StateIndexer,
        clustering: &ClusterAssignment,
        actions: usize,
    ) -> Result<Self> {
        let substates = states.radices();
        match spec {
            RewardSpec::AgentSeparable { .. } | RewardSpec::Indicator { .. } => {
                let RewardSpec::AgentSeparable { tables } =
                    spec.to_agent_separable(substates, actions)?
                else {
                    unreachable!()
                };
                let mut offsets = Vec::with_capacity(tables.len());
                let mut table = Vec::new();
                for t in &tables {
                    offsets.push(table.len());
                    for row in t {
                        table.extend_from_slice(row);
                    }
                }
                Ok(Self::PerAgent { offsets, table })
            }
            RewardSpec::ClusterSeparable { groups, tables } => {
                if groups.as_slice() != clustering.clusters() {
                    return Err(Error::Unsupported(
                        "cluster-separable reward groups must equal the model clustering".into(),
                    ));
                }
                let mut compiled = Vec::with_capacity(groups.len());
                let mut table = Vec::new();
                for (g, t) in groups.iter().zip(tables) {
                    let ix = StateIndexer::new(g.iter().map(|&a| substates[a]).collect())?;
                    compiled.push((g.clone(), ix, table.len()));
                    for row in t {
                        table.extend_from_slice(row);
                    }
                }
                Ok(Self::PerGroup {
                    groups: compiled,
                    table,
                })
            }
            RewardSpec::Full { table } => {
                let joint = table.first().map_or(0, Vec::len);
                Ok(Self::Full {
                    joint,
                    table: table.iter().flatten().copied().collect(),
                })
            }
            RewardSpec::StateOnly { table } => Ok(Self::State {
                table: table.clone(),
            }),
        }
    }

    /// `r(s, alpha)` given the decoded substates and per-cluster controls.
    #[inline]
    pub(crate) fn eval(
        &self,
        s: usize,
        digits: &[usize],
        controls: &[usize],
        clustering: &ClusterAssignment,
        actions: usize,
    ) -> f64 {
        match self {
            Self::PerAgent { offsets, table } => digits
                .iter()
                .enumerate()
                .map(|(n, &x)| table[offsets[n] + x * actions + controls[clustering.cluster_of(n)]])
                .sum(),
            Self::PerGroup { groups, table } => groups
                .iter()
                .enumerate()
                .map(|(g, (members, ix, offset))| {
                    let sg: usize = members
                        .iter()
                        .zip(ix.places())
                        .map(|(&a, &p)| digits[a] * p)
                        .sum();
                    table[offset + sg * actions + controls[g]]
                })
                .sum(),
            Self::Full { joint, table } => {
                let mut ai = 0;
                for &c in controls.iter().rev() {
                    ai = ai * actions + c;
                }
                table[s * joint + ai]
            }
            Self::State { table } => table[s],
        }
    }

    pub(crate) fn max_entry(&self) -> f64 {
        match self {
            Self::PerAgent { offsets, table } => {
                // per agent max, summed
                let mut bounds: Vec<usize> = offsets.clone();
                bounds.push(table.len());
                bounds
                    .windows(2)
                    .map(|w| table[w[0]..w[1]].iter().copied().fold(0.0, f64::max))
                    .sum()
            }
            Self::PerGroup { groups, table } => {
                let mut sum = 0.0;
                for (i, (_, _, off)) in groups.iter().enumerate() {
                    let end = groups.get(i + 1).map_or(table.len(), |g| g.2);
                    sum += table[*off..end].iter().copied().fold(0.0, f64::max);
                }
                sum
            }
            Self::Full { table, .. } | Self::State { table } => {
                table.iter().copied().fold(0.0, f64::max)
            }
        }
    }
}
