use rayon::prelude::*;

use super::SolverConfig;
use crate::error::{domain, Result};
use crate::model::{FactoredMdp, Policy, Scratch};
use crate::value::ValueVector;

/// Below this many kernel-row reads per sweep the thread pool costs more
/// than it saves.
const PARALLEL_WORK: u128 = 1 << 18;

/// Run `f` for every state, possibly in parallel. Output order is by state.
pub(crate) fn map_states<T, F>(
    model: &FactoredMdp,
    config: &SolverConfig,
    candidates: u128,
    f: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Scratch) -> T + Sync,
{
    let states = model.states();
    let work = candidates * states as u128 * states as u128;
    if config.parallel && rayon::current_num_threads() > 1 && work >= PARALLEL_WORK {
        (0..states)
            .into_par_iter()
            .map_init(|| model.new_scratch(), |scratch, s| f(s, scratch))
            .collect()
    } else {
        let mut scratch = model.new_scratch();
        (0..states).map(|s| f(s, &mut scratch)).collect()
    }
}

pub(crate) fn check_values(model: &FactoredMdp, values: &[f64]) -> Result<()> {
    if values.len() != model.states() {
        return domain(format!(
            "value vector has {} entries, model has {} states",
            values.len(),
            model.states()
        ));
    }
    Ok(())
}

/// Per-state maximization over every joint control: `(T V)(s)` and the
/// index of the first maximizer.
pub(crate) fn full_sweep(
    model: &FactoredMdp,
    values: &[f64],
    config: &SolverConfig,
) -> Vec<(f64, usize)> {
    let joint = model.joint_controls();
    let actions = model.actions();
    map_states(model, config, joint, |s, scratch| {
        model.indexer().decode_into(s, &mut scratch.digits);
        let mut alpha = std::mem::take(&mut scratch.controls);
        alpha.iter_mut().for_each(|a| *a = 0);
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0;
        for idx in 0..joint as usize {
            let q = model.q_value(values, s, &alpha, scratch);
            if q > best {
                best = q;
                best_idx = idx;
            }
            for digit in alpha.iter_mut() {
                *digit += 1;
                if *digit < actions {
                    break;
                }
                *digit = 0;
            }
        }
        scratch.controls = alpha;
        (best, best_idx)
    })
}

fn control_vector(index: usize, actions: usize, clusters: usize, out: &mut [usize]) {
    let mut rest = index;
    for slot in out.iter_mut().take(clusters) {
        *slot = rest % actions;
        rest /= actions;
    }
}

pub(crate) fn policy_from_indices(model: &FactoredMdp, sweep: &[(f64, usize)]) -> Policy {
    let clusters = model.clusters();
    let mut flat = vec![0; sweep.len() * clusters];
    for (s, &(_, idx)) in sweep.iter().enumerate() {
        control_vector(
            idx,
            model.actions(),
            clusters,
            &mut flat[s * clusters..(s + 1) * clusters],
        );
    }
    Policy::from_flat(clusters, flat).expect("consistent dimensions")
}

/// Full Bellman operator: `(T V)(s) = max_alpha E[r(s, alpha) + gamma V(s')]`
/// over all `M^C` joint controls, plus the greedy policy.
pub fn bellman_full_apply(
    model: &FactoredMdp,
    values: &[f64],
    config: &SolverConfig,
) -> Result<(ValueVector, Policy)> {
    check_values(model, values)?;
    config.check_cap(model)?;
    let sweep = full_sweep(model, values, config);
    let policy = policy_from_indices(model, &sweep);
    Ok((
        sweep.into_iter().map(|(v, _)| v).collect::<Vec<_>>().into(),
        policy,
    ))
}

pub(crate) fn policy_sweep(
    model: &FactoredMdp,
    values: &[f64],
    policy: &Policy,
    config: &SolverConfig,
) -> Vec<f64> {
    map_states(model, config, 1, |s, scratch| {
        model.indexer().decode_into(s, &mut scratch.digits);
        model.q_value(values, s, policy.at(s), scratch)
    })
}

/// One evaluation sweep under a fixed policy (no maximization).
pub fn policy_apply(
    model: &FactoredMdp,
    values: &[f64],
    policy: &Policy,
    config: &SolverConfig,
) -> Result<ValueVector> {
    check_values(model, values)?;
    policy.check(model.states(), model.clusters(), model.actions())?;
    Ok(policy_sweep(model, values, policy, config).into())
}

/// Per-state maximization over cluster `c`'s control with the other entries
/// of `policy` held fixed: `(T^c_Pi V)(s)` and the maximizing `alpha_c`.
pub(crate) fn clustered_sweep(
    model: &FactoredMdp,
    values: &[f64],
    policy: &Policy,
    cluster: usize,
    config: &SolverConfig,
) -> Vec<(f64, usize)> {
    let actions = model.actions();
    map_states(model, config, actions as u128, |s, scratch| {
        model.indexer().decode_into(s, &mut scratch.digits);
        let mut alpha = std::mem::take(&mut scratch.controls);
        alpha.copy_from_slice(policy.at(s));
        let mut best = f64::NEG_INFINITY;
        let mut best_a = 0;
        for a in 0..actions {
            alpha[cluster] = a;
            let q = model.q_value(values, s, &alpha, scratch);
            if q > best {
                best = q;
                best_a = a;
            }
        }
        scratch.controls = alpha;
        (best, best_a)
    })
}

/// Clustered Bellman operator `T^c_Pi`: maximizes over `alpha_c` only and
/// updates only coordinate `c` of the policy.
pub fn clustered_bellman_apply(
    model: &FactoredMdp,
    values: &[f64],
    policy: &Policy,
    cluster: usize,
    config: &SolverConfig,
) -> Result<(ValueVector, Policy)> {
    check_values(model, values)?;
    policy.check(model.states(), model.clusters(), model.actions())?;
    if cluster >= model.clusters() {
        return domain(format!(
            "cluster {cluster} out of range 0..{}",
            model.clusters()
        ));
    }
    let sweep = clustered_sweep(model, values, policy, cluster, config);
    let mut next = policy.clone();
    let values = sweep
        .into_iter()
        .enumerate()
        .map(|(s, (v, a))| {
            next.at_mut(s)[cluster] = a;
            v
        })
        .collect::<Vec<_>>();
    Ok((values.into(), next))
}
