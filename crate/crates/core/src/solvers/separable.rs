use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bellman::{full_sweep, map_states};
use super::bounds::certificate;
use super::report::{elapsed_ms, SolveReport, Tracer};
use super::vi::value_iteration;
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{FactoredMdp, Policy, RewardSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CviSMode {
    /// Solve each cluster as a stand-alone model over its own substates.
    /// Exact when every cluster's kernels depend only on that cluster.
    #[default]
    Reduced,
    /// Keep per-cluster values on the full state space and, when taking the
    /// expectation for cluster `c`, advance only `c`'s agents. Approximate
    /// under cross-cluster coupling.
    FrozenComplement,
}

/// Per-cluster value iteration for separable rewards, summed into one value
/// function. Each cluster's control maximizes its own reward term.
pub fn cvi_s(model: &FactoredMdp, mode: CviSMode, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    if !model.is_separable() {
        return Err(Error::Unsupported(format!(
            "CVI-S needs a separable reward, model has {}",
            model.reward_spec().variant_name()
        )));
    }
    let start = Instant::now();
    let (values, policy, rows) = match mode {
        CviSMode::Reduced => reduced(model, config)?,
        CviSMode::FrozenComplement => frozen(model, config)?,
    };
    let mut tracer = Tracer::new();
    let mut converged = true;
    for (c, trace, ok) in rows {
        converged &= ok;
        for mut row in trace {
            row.iteration = tracer.rows.len() + 1;
            row.cluster = Some(c);
            tracer.rows.push(row);
        }
    }
    let capped = config.cap_allows(model);
    let bound = (config.certify && capped).then(|| {
        let sweep = full_sweep(model, &values, config);
        certificate(model, &values, &sweep)
    });
    let reference_gap = if mode == CviSMode::FrozenComplement && capped {
        let exact = value_iteration(model, &config.clone().with_certify(false))?;
        Some(exact.values.sup_distance(&values))
    } else {
        None
    };
    Ok(SolveReport {
        solver: match mode {
            CviSMode::Reduced => "cvi_s_reduced",
            CviSMode::FrozenComplement => "cvi_s_frozen",
        }
        .into(),
        epsilon: config.epsilon,
        gamma: model.gamma(),
        clustering: model.clustering().clone(),
        values: values.into(),
        policy,
        iterations: tracer.rows.len(),
        converged,
        trace: tracer.rows,
        wall_ms: elapsed_ms(start),
        initial_policy: None,
        schedule: None,
        bound,
        reference_gap,
    })
}

type ClusterRuns = Vec<(usize, Vec<super::TraceRow>, bool)>;

fn reduced(model: &FactoredMdp, config: &SolverConfig) -> Result<(Vec<f64>, Policy, ClusterRuns)> {
    if !model.is_cluster_local() {
        return Err(Error::Unsupported(
            "reduced CVI-S needs kernels that depend only on the agent's own cluster; \
             use the frozen-complement mode"
                .into(),
        ));
    }
    let groups = model.clustering().clusters();
    let sub_config = config.clone().with_certify(false);
    let solve = |group: &Vec<usize>| -> Result<_> {
        let sub = model.reduce_to(group)?;
        value_iteration(&sub, &sub_config)
    };
    let subs: Vec<_> = if config.parallel && groups.len() > 1 {
        groups.par_iter().map(solve).collect::<Result<_>>()?
    } else {
        groups.iter().map(solve).collect::<Result<_>>()?
    };
    let states = model.states();
    let clusters = model.clusters();
    let mut values = vec![0.0; states];
    let mut flat = vec![0; states * clusters];
    for s in 0..states {
        for (c, (group, sub)) in groups.iter().zip(&subs).enumerate() {
            let t = model.project(s, group);
            values[s] += sub.values[t];
            flat[s * clusters + c] = sub.policy.at(t)[0];
        }
    }
    let runs = subs
        .into_iter()
        .enumerate()
        .map(|(c, r)| (c, r.trace, r.converged))
        .collect();
    Ok((values, Policy::from_flat(clusters, flat)?, runs))
}

fn frozen(model: &FactoredMdp, config: &SolverConfig) -> Result<(Vec<f64>, Policy, ClusterRuns)> {
    let RewardSpec::ClusterSeparable { groups, tables } = model
        .reward_spec()
        .to_cluster_separable(model.substates(), model.clustering(), model.actions())?
    else {
        unreachable!("to_cluster_separable returns the cluster-separable variant")
    };
    let states = model.states();
    let clusters = model.clusters();
    let actions = model.actions();
    let gamma = model.gamma();
    let mut total = vec![0.0; states];
    let mut flat = vec![0; states * clusters];
    let mut runs = Vec::with_capacity(clusters);
    for (c, (group, table)) in groups.iter().zip(&tables).enumerate() {
        let local: Vec<usize> = (0..states).map(|s| model.project(s, group)).collect();
        let mut v = vec![0.0; states];
        let mut tracer = Tracer::new();
        let mut converged = false;
        let mut last = Vec::new();
        for _ in 0..config.max_iterations {
            let t = Instant::now();
            let sweep = map_states(model, config, actions as u128, |s, scratch| {
                model.indexer().decode_into(s, &mut scratch.digits);
                let mut best = f64::NEG_INFINITY;
                let mut best_a = 0;
                for (a, r) in table[local[s]].iter().enumerate() {
                    let q = r + gamma * model.frozen_expectation(&v, s, c, a, scratch);
                    if q > best {
                        best = q;
                        best_a = a;
                    }
                }
                (best, best_a)
            });
            let next: Vec<f64> = sweep.iter().map(|&(x, _)| x).collect();
            let delta = tracer.record(Some(c), &v, &next, elapsed_ms(t));
            v = next;
            last = sweep;
            if delta <= config.epsilon {
                converged = true;
                break;
            }
        }
        for s in 0..states {
            total[s] += v[s];
            flat[s * clusters + c] = last[s].1;
        }
        runs.push((c, tracer.rows, converged));
    }
    Ok((total, Policy::from_flat(clusters, flat)?, runs))
}
