use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FactoredMdp;
use crate::solvers::{value_iteration, SolverConfig};

/// Largest agent count for which every subset value is computed.
pub const MAX_SUBSET_AGENTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainSampling {
    /// Every `A ⊆ B` and every agent `n ∉ B`.
    Exhaustive,
    /// `chains` random triples drawn with ChaCha8 from `seed`.
    Sampled { chains: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    /// `V^{A+n} - V^A >= V^{B+n} - V^B` failed.
    Submodularity,
    /// `V^B >= V^A` failed.
    Monotonicity,
}

/// Worst state of one failing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainViolation {
    pub kind: PropertyKind,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub agent: Option<usize>,
    pub state: usize,
    /// Amount by which the inequality fails.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmodularityReport {
    pub chains_checked: u64,
    pub pairs_checked: u64,
    pub tolerance: f64,
    pub violations: Vec<ChainViolation>,
    /// Largest excess over all chains and pairs (0 when none fail).
    pub max_excess: f64,
}

impl SubmodularityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: PropertyKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&a| mask >> a & 1 == 1).collect()
}

/// Check diminishing returns and monotonicity of `A -> V^A`, where `V^A` is
/// the optimal value of the model with the reward restricted to the agents
/// in `A` (same dynamics and clustering) and `V^∅ = 0`.
pub fn subset_value_submodularity_check(
    model: &FactoredMdp,
    sampling: ChainSampling,
    tolerance: f64,
    config: &SolverConfig,
) -> Result<SubmodularityReport> {
    if !model.reward_spec().is_agent_separable() {
        return Err(Error::Unsupported(format!(
            "subset values need an agent-separable reward, model has {}",
            model.reward_spec().variant_name()
        )));
    }
    let n = model.agents();
    if n > MAX_SUBSET_AGENTS {
        return Err(Error::Guard(format!(
            "subset values are limited to {MAX_SUBSET_AGENTS} agents, model has {n}"
        )));
    }
    let config = config.clone().with_certify(false);
    let solve = |mask: usize| -> Result<Vec<f64>> {
        if mask == 0 {
            return Ok(vec![0.0; model.states()]);
        }
        let restricted = model.restrict_reward(&members(mask, n))?;
        Ok(value_iteration(&restricted, &config)?.values.into_inner())
    };
    let masks: Vec<usize> = (0..1usize << n).collect();
    let values: Vec<Vec<f64>> = if config.parallel {
        masks.par_iter().map(|&m| solve(m)).collect::<Result<_>>()?
    } else {
        masks.iter().map(|&m| solve(m)).collect::<Result<_>>()?
    };

    let mut report = SubmodularityReport {
        chains_checked: 0,
        pairs_checked: 0,
        tolerance,
        violations: Vec::new(),
        max_excess: 0.0,
    };
    let full = (1usize << n) - 1;
    let check_chain = |a: usize, b: usize, agent: usize, report: &mut SubmodularityReport| {
        let bit = 1 << agent;
        let (va, vb, van, vbn) = (&values[a], &values[b], &values[a | bit], &values[b | bit]);
        let (mut worst, mut state) = (f64::NEG_INFINITY, 0);
        for s in 0..va.len() {
            let excess = (vbn[s] - vb[s]) - (van[s] - va[s]);
            if excess > worst {
                worst = excess;
                state = s;
            }
        }
        report.chains_checked += 1;
        report.max_excess = report.max_excess.max(worst);
        if worst > tolerance {
            report.violations.push(ChainViolation {
                kind: PropertyKind::Submodularity,
                a: members(a, n),
                b: members(b, n),
                agent: Some(agent),
                state,
                excess: worst,
            });
        }
    };
    let check_pair = |a: usize, b: usize, report: &mut SubmodularityReport| {
        let (mut worst, mut state) = (f64::NEG_INFINITY, 0);
        for (s, (x, y)) in values[a].iter().zip(&values[b]).enumerate() {
            if x - y > worst {
                worst = x - y;
                state = s;
            }
        }
        report.pairs_checked += 1;
        report.max_excess = report.max_excess.max(worst);
        if worst > tolerance {
            report.violations.push(ChainViolation {
                kind: PropertyKind::Monotonicity,
                a: members(a, n),
                b: members(b, n),
                agent: None,
                state,
                excess: worst,
            });
        }
    };

    match sampling {
        ChainSampling::Exhaustive => {
            for b in 0..=full {
                // every submask a of b, including 0 and b itself
                let mut a = b;
                loop {
                    if a != b {
                        check_pair(a, b, &mut report);
                    }
                    for agent in (0..n).filter(|&x| b >> x & 1 == 0) {
                        check_chain(a, b, agent, &mut report);
                    }
                    if a == 0 {
                        break;
                    }
                    a = (a - 1) & b;
                }
            }
        }
        ChainSampling::Sampled { chains, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut drawn = 0;
            while drawn < chains {
                let b = rng.random_range(0..full);
                let a = b & rng.random_range(0..=full);
                let outside: Vec<usize> = (0..n).filter(|&x| b >> x & 1 == 0).collect();
                let agent = outside[rng.random_range(0..outside.len())];
                check_chain(a, b, agent, &mut report);
                if a != b {
                    check_pair(a, b, &mut report);
                }
                drawn += 1;
            }
        }
    }
    Ok(report)
}
