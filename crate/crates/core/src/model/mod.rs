//! Transition-independent MDPs over product state spaces.

mod cluster;
pub(crate) mod expect;
mod indexer;
mod policy;
mod reward;
mod spec;

use std::path::Path;

pub use cluster::ClusterAssignment;
pub use expect::Scratch;
pub use indexer::StateIndexer;
pub use policy::Policy;
pub use reward::RewardSpec;
pub use spec::{
    validate_model, AgentSpec, ModelSpec, RowRepair, ValidationReport, Violation, ROW_SUM_TOLERANCE,
};

use expect::{contract, Row};
use reward::CompiledReward;

use crate::error::{domain, Error, Result};

/// Joint-control enumeration above this many `(state, control)` pairs falls
/// back to an upper bound for [`FactoredMdp::max_reward`].
const EXACT_MAX_REWARD_WORK: u128 = 1 << 22;

/// A validated transition-independent MDP.
///
/// Each agent `n` has a kernel `p_n(s_n' | s, a)` conditioned on the full
/// current state and the control `a` sent to its cluster. The joint kernel is
/// the product over agents. Immutable after construction.
#[derive(Debug, Clone)]
pub struct FactoredMdp {
    indexer: StateIndexer,
    clustering: ClusterAssignment,
    actions: usize,
    gamma: f64,
    /// per agent, flat `[s][a][s_n']`
    kernels: Vec<Vec<f64>>,
    reward_spec: RewardSpec,
    reward: CompiledReward,
    /// per agent, the agents whose substate can change its kernel row
    dependencies: Vec<Vec<usize>>,
    max_reward: f64,
}

impl FactoredMdp {
    /// Validate `spec` and build the model.
    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        let report = spec.validate();
        if !report.is_empty() {
            return Err(Error::InvalidModel(report));
        }
        let substates = spec.substates();
        let indexer = StateIndexer::new(substates)?;
        let clustering = ClusterAssignment::for_agents(spec.clusters, spec.agents.len())?;
        let kernels = spec
            .kernels
            .into_iter()
            .map(|k| k.into_iter().flatten().flatten().collect())
            .collect();
        Self::assemble(
            indexer,
            clustering,
            spec.action_alphabet,
            spec.gamma,
            kernels,
            spec.reward,
        )
    }

    fn assemble(
        indexer: StateIndexer,
        clustering: ClusterAssignment,
        actions: usize,
        gamma: f64,
        kernels: Vec<Vec<f64>>,
        reward_spec: RewardSpec,
    ) -> Result<Self> {
        let reward = CompiledReward::compile(&reward_spec, &indexer, &clustering, actions)?;
        let mut model = Self {
            indexer,
            clustering,
            actions,
            gamma,
            kernels,
            reward_spec,
            reward,
            dependencies: Vec::new(),
            max_reward: 0.0,
        };
        model.dependencies = (0..model.agents())
            .map(|n| model.scan_dependencies(n))
            .collect();
        model.max_reward = model.compute_max_reward();
        Ok(model)
    }

    pub fn to_spec(&self) -> ModelSpec {
        let states = self.states();
        let kernels = self
            .kernels
            .iter()
            .zip(self.substates())
            .map(|(flat, &k)| {
                (0..states)
                    .map(|s| {
                        (0..self.actions)
                            .map(|a| flat[(s * self.actions + a) * k..][..k].to_vec())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ModelSpec {
            agents: self
                .substates()
                .iter()
                .map(|&substates| AgentSpec { substates })
                .collect(),
            clusters: self.clustering.clusters().to_vec(),
            action_alphabet: self.actions,
            gamma: self.gamma,
            kernels,
            reward: self.reward_spec.clone(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_spec(ModelSpec::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_spec().save(path)
    }

    pub fn to_json(&self) -> Result<String> {
        self.to_spec().to_json()
    }

    /// Re-validates the serialized form; empty for any constructed model.
    pub fn validate(&self) -> ValidationReport {
        self.to_spec().validate()
    }

    pub fn agents(&self) -> usize {
        self.indexer.digits()
    }

    pub fn substates(&self) -> &[usize] {
        self.indexer.radices()
    }

    pub fn states(&self) -> usize {
        self.indexer.size()
    }

    /// Per-cluster control alphabet size `M`.
    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn clustering(&self) -> &ClusterAssignment {
        &self.clustering
    }

    pub fn clusters(&self) -> usize {
        self.clustering.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward_spec(&self) -> &RewardSpec {
        &self.reward_spec
    }

    pub fn indexer(&self) -> &StateIndexer {
        &self.indexer
    }

    /// `M^C`, saturating.
    pub fn joint_controls(&self) -> u128 {
        (self.actions as u128)
            .checked_pow(self.clusters() as u32)
            .unwrap_or(u128::MAX)
    }

    /// `sup_{s, alpha} r(s, alpha)` (an upper bound for very large models).
    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn is_separable(&self) -> bool {
        self.reward_spec.is_separable()
    }

    pub fn encode_state(&self, substates: &[usize]) -> Result<usize> {
        self.indexer.encode(substates)
    }

    pub fn decode_state(&self, s: usize) -> Result<Vec<usize>> {
        self.indexer.decode(s)
    }

    /// `p_n(. | s, a)`.
    #[inline]
    pub fn kernel_row(&self, agent: usize, s: usize, a: usize) -> &[f64] {
        let k = self.indexer.radices()[agent];
        &self.kernels[agent][(s * self.actions + a) * k..][..k]
    }

    fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.states() {
            return domain(format!("state {s} out of range 0..{}", self.states()));
        }
        Ok(())
    }

    fn check_controls(&self, alpha: &[usize]) -> Result<()> {
        if alpha.len() != self.clusters() {
            return domain(format!(
                "control vector has {} entries, model has {} clusters",
                alpha.len(),
                self.clusters()
            ));
        }
        if let Some(a) = alpha.iter().find(|&&a| a >= self.actions) {
            return domain(format!("control {a} outside 0..{}", self.actions));
        }
        Ok(())
    }

    /// `p(s' | s, alpha) = prod_n p_n(s'_n | s, alpha_{cluster(n)})`.
    pub fn joint_transition_prob(&self, s: usize, alpha: &[usize], s_next: usize) -> Result<f64> {
        self.check_state(s)?;
        self.check_state(s_next)?;
        self.check_controls(alpha)?;
        Ok((0..self.agents())
            .map(|n| {
                let a = alpha[self.clustering.cluster_of(n)];
                self.kernel_row(n, s, a)[self.indexer.digit(s_next, n)]
            })
            .product())
    }

    /// Sparse successor distribution, sorted by state index. Only substates
    /// with nonzero factor mass are enumerated.
    pub fn successor_distribution(&self, s: usize, alpha: &[usize]) -> Result<Vec<(usize, f64)>> {
        self.check_state(s)?;
        self.check_controls(alpha)?;
        let mut out = vec![(0usize, 1.0f64)];
        for n in 0..self.agents() {
            let row = self.kernel_row(n, s, alpha[self.clustering.cluster_of(n)]);
            let place = self.indexer.places()[n];
            let mut next = Vec::with_capacity(out.len() * row.len());
            for &(idx, p) in &out {
                for (x, &q) in row.iter().enumerate() {
                    if q != 0.0 {
                        next.push((idx + x * place, p * q));
                    }
                }
            }
            out = next;
        }
        out.sort_unstable_by_key(|&(i, _)| i);
        Ok(out)
    }

    pub fn reward_eval(&self, s: usize, alpha: &[usize]) -> Result<f64> {
        self.check_state(s)?;
        self.check_controls(alpha)?;
        let digits = self.indexer.decode(s)?;
        Ok(self.reward_at(s, &digits, alpha))
    }

    #[inline]
    pub(crate) fn reward_at(&self, s: usize, digits: &[usize], alpha: &[usize]) -> f64 {
        self.reward
            .eval(s, digits, alpha, &self.clustering, self.actions)
    }

    /// `r(s, alpha) + gamma * E[V(s') | s, alpha]`, with `scratch.digits`
    /// already holding the decoded `s`.
    #[inline]
    pub(crate) fn q_value(
        &self,
        values: &[f64],
        s: usize,
        alpha: &[usize],
        scratch: &mut Scratch,
    ) -> f64 {
        let r = self.reward_at(s, &scratch.digits, alpha);
        let ev = contract(
            values,
            self.indexer.radices(),
            |n| Row::Dist(self.kernel_row(n, s, alpha[self.clustering.cluster_of(n)])),
            scratch,
        );
        r + self.gamma * ev
    }

    /// Expectation that advances only the agents of `cluster`, holding every
    /// other agent at its current substate.
    pub(crate) fn frozen_expectation(
        &self,
        values: &[f64],
        s: usize,
        cluster: usize,
        a: usize,
        scratch: &mut Scratch,
    ) -> f64 {
        let digits = std::mem::take(&mut scratch.digits);
        let ev = contract(
            values,
            self.indexer.radices(),
            |n| {
                if self.clustering.cluster_of(n) == cluster {
                    Row::Dist(self.kernel_row(n, s, a))
                } else {
                    Row::Point(digits[n])
                }
            },
            scratch,
        );
        scratch.digits = digits;
        ev
    }

    pub fn new_scratch(&self) -> Scratch {
        Scratch::new(self.states(), self.agents(), self.clusters())
    }

    /// Agents whose substate influences agent `n`'s kernel (always includes `n`).
    pub fn dependencies(&self, n: usize) -> &[usize] {
        &self.dependencies[n]
    }

    /// True when every agent's kernel depends on the state only through the
    /// substates of the agents in `group` (for members of `group`).
    pub fn is_local_to(&self, group: &[usize]) -> bool {
        group
            .iter()
            .all(|&n| self.dependencies[n].iter().all(|d| group.contains(d)))
    }

    /// Every kernel depends on the state only through its own cluster.
    pub fn is_cluster_local(&self) -> bool {
        self.clustering
            .clusters()
            .iter()
            .all(|c| self.is_local_to(c))
    }

    /// Every kernel depends only on the agent's own substate.
    pub fn is_agent_local(&self) -> bool {
        self.dependencies.iter().all(|d| d.len() == 1)
    }

    fn scan_dependencies(&self, n: usize) -> Vec<usize> {
        let mut deps = Vec::new();
        let k = self.substates()[n];
        let width = self.actions * k;
        let kernel = &self.kernels[n];
        for j in 0..self.agents() {
            if j == n {
                deps.push(j);
                continue;
            }
            let varies = (0..self.states()).any(|s| {
                let base = self.indexer.with_digit(s, j, 0);
                base != s && kernel[s * width..][..width] != kernel[base * width..][..width]
            });
            if varies {
                deps.push(j);
            }
        }
        deps
    }

    fn compute_max_reward(&self) -> f64 {
        let work = self.states() as u128 * self.joint_controls();
        if work > EXACT_MAX_REWARD_WORK {
            return self.reward.max_entry();
        }
        let controls = StateIndexer::uniform(self.actions, self.clusters()).expect("valid");
        let mut digits = vec![0; self.agents()];
        let mut alpha = vec![0; self.clusters()];
        let mut best: f64 = 0.0;
        for s in 0..self.states() {
            self.indexer.decode_into(s, &mut digits);
            for ai in 0..controls.size() {
                controls.decode_into(ai, &mut alpha);
                best = best.max(self.reward_at(s, &digits, &alpha));
            }
        }
        best
    }

    /// Same kernels and reward under a different clustering.
    pub fn with_clustering(&self, clustering: ClusterAssignment) -> Result<Self> {
        if clustering.agents() != self.agents() {
            return domain(format!(
                "clustering covers {} agents, model has {}",
                clustering.agents(),
                self.agents()
            ));
        }
        if clustering == self.clustering {
            return Ok(self.clone());
        }
        let reward = match &self.reward_spec {
            RewardSpec::Full { .. } => {
                return Err(Error::Unsupported(
                    "a full reward table is tied to its clustering".into(),
                ))
            }
            RewardSpec::ClusterSeparable { .. } => {
                return Err(Error::Unsupported(
                    "cluster-separable reward groups are tied to their clustering".into(),
                ))
            }
            other => other.clone(),
        };
        Self::assemble(
            self.indexer.clone(),
            clustering,
            self.actions,
            self.gamma,
            self.kernels.clone(),
            reward,
        )
    }

    /// Same dynamics with a different reward.
    pub fn with_reward(&self, reward: RewardSpec) -> Result<Self> {
        let mut spec = self.to_spec();
        spec.reward = reward;
        Self::from_spec(spec)
    }

    /// Model whose reward keeps only the terms of the agents in `keep`.
    pub fn restrict_reward(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return domain("agent set must be nonempty");
        }
        if let Some(a) = keep.iter().find(|&&a| a >= self.agents()) {
            return domain(format!("agent {a} out of range"));
        }
        let reward = self.reward_spec.restricted(keep)?;
        Self::assemble(
            self.indexer.clone(),
            self.clustering.clone(),
            self.actions,
            self.gamma,
            self.kernels.clone(),
            reward,
        )
    }

    /// Stand-alone single-cluster model over the agents in `group`.
    ///
    /// Requires the group's kernels to be local to the group and a reward
    /// that splits off the group's terms (agent-separable, or a
    /// cluster-separable table whose group equals `group`).
    pub fn reduce_to(&self, group: &[usize]) -> Result<Self> {
        let mut group = group.to_vec();
        group.sort_unstable();
        group.dedup();
        if group.is_empty() || group.iter().any(|&a| a >= self.agents()) {
            return domain("group must be a nonempty set of model agents");
        }
        if !self.is_local_to(&group) {
            return Err(Error::Unsupported(format!(
                "kernels of agents {group:?} depend on substates outside the group"
            )));
        }
        let sub_ix = StateIndexer::new(group.iter().map(|&a| self.substates()[a]).collect())?;
        let mut sub_digits = vec![0; group.len()];
        let to_full = |digits: &[usize]| -> usize {
            group
                .iter()
                .zip(digits)
                .map(|(&a, &x)| x * self.indexer.places()[a])
                .sum()
        };
        let kernels = group
            .iter()
            .map(|&n| {
                let mut flat = Vec::new();
                for t in 0..sub_ix.size() {
                    sub_ix.decode_into(t, &mut sub_digits);
                    let s = to_full(&sub_digits);
                    for a in 0..self.actions {
                        flat.extend_from_slice(self.kernel_row(n, s, a));
                    }
                }
                flat
            })
            .collect();
        let reward = match &self.reward_spec {
            RewardSpec::AgentSeparable { tables } => RewardSpec::AgentSeparable {
                tables: group.iter().map(|&a| tables[a].clone()).collect(),
            },
            RewardSpec::Indicator {
                desirable,
                normalized,
            } => {
                let scale = if *normalized {
                    1.0 / self.agents() as f64
                } else {
                    1.0
                };
                RewardSpec::AgentSeparable {
                    tables: group
                        .iter()
                        .map(|&a| {
                            (0..self.substates()[a])
                                .map(|x| {
                                    let v = if desirable[a].contains(&x) {
                                        scale
                                    } else {
                                        0.0
                                    };
                                    vec![v; self.actions]
                                })
                                .collect()
                        })
                        .collect(),
                }
            }
            RewardSpec::ClusterSeparable { groups, tables } => {
                let Some(g) = groups.iter().position(|g| *g == group) else {
                    return Err(Error::Unsupported(
                        "cluster-separable reward has no table for this group".into(),
                    ));
                };
                RewardSpec::ClusterSeparable {
                    groups: vec![(0..group.len()).collect()],
                    tables: vec![tables[g].clone()],
                }
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "{} reward does not decompose over agent groups",
                    other.variant_name()
                )))
            }
        };
        Self::assemble(
            sub_ix,
            ClusterAssignment::single(group.len()),
            self.actions,
            self.gamma,
            kernels,
            reward,
        )
    }

    /// Project a full state onto the substate index of `group` (sorted).
    pub fn project(&self, s: usize, group: &[usize]) -> usize {
        let mut idx = 0;
        let mut place = 1;
        for &a in group {
            idx += self.indexer.digit(s, a) * place;
            place *= self.substates()[a];
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_agent_uniform() -> FactoredMdp {
        let row = vec![0.5, 0.5];
        let kernel = vec![vec![row.clone(); 2]; 4];
        FactoredMdp::from_spec(ModelSpec {
            agents: vec![AgentSpec { substates: 2 }; 2],
            clusters: vec![vec![0, 1]],
            action_alphabet: 2,
            gamma: 0.9,
            kernels: vec![kernel.clone(), kernel],
            reward: RewardSpec::Indicator {
                desirable: vec![vec![0, 1], vec![0, 1]],
                normalized: false,
            },
        })
        .unwrap()
    }

    #[test]
    fn product_rule() {
        let m = two_agent_uniform();
        assert_eq!(m.joint_transition_prob(0, &[0], 3).unwrap(), 0.25);
        let d = m.successor_distribution(1, &[1]).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|&(_, p)| p == 0.25));
    }

    #[test]
    fn indicator_covering_everything_pays_n() {
        let m = two_agent_uniform();
        for s in 0..4 {
            assert_eq!(m.reward_eval(s, &[1]).unwrap(), 2.0);
        }
        assert_eq!(m.max_reward(), 2.0);
    }

    #[test]
    fn dimension_errors() {
        let m = two_agent_uniform();
        assert!(matches!(
            m.reward_eval(0, &[0, 0]),
            Err(Error::InputDomain(_))
        ));
        assert!(m.joint_transition_prob(4, &[0], 0).is_err());
        assert!(m.successor_distribution(0, &[2]).is_err());
        assert!(m.encode_state(&[2, 0]).is_err());
    }

    #[test]
    fn uniform_kernels_are_agent_local() {
        let m = two_agent_uniform();
        assert!(m.is_agent_local());
        assert!(m.is_cluster_local());
    }

    #[test]
    fn restrict_rejects_empty_set() {
        let m = two_agent_uniform();
        assert!(m.restrict_reward(&[]).is_err());
        let r = m.restrict_reward(&[0, 1]).unwrap();
        assert_eq!(r.reward_spec(), m.reward_spec());
    }

    #[test]
    fn spec_round_trip() {
        let m = two_agent_uniform();
        let back =
            FactoredMdp::from_spec(ModelSpec::from_json(&m.to_json().unwrap()).unwrap()).unwrap();
        assert_eq!(back.to_spec(), m.to_spec());
    }
}
