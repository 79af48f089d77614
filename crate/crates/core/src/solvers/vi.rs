use std::time::Instant;

use super::bellman::{full_sweep, policy_from_indices, policy_sweep};
use super::bounds::certificate;
use super::report::{elapsed_ms, SolveReport, Tracer};
use super::SolverConfig;
use crate::error::Result;
use crate::model::{FactoredMdp, Policy};
use crate::value::ValueVector;

/// Standard value iteration with the full Bellman operator.
///
/// Stops after the first sweep whose sup delta is at most `epsilon`. With
/// `certify` set, one more sweep yields the policy greedy with respect to the
/// returned values and the residual certificate; otherwise the policy is the
/// maximizer of the last sweep.
pub fn value_iteration(model: &FactoredMdp, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    config.check_cap(model)?;
    let start = Instant::now();
    let mut values = vec![0.0; model.states()];
    let mut tracer = Tracer::new();
    let mut converged = false;
    let mut last = Vec::new();
    for _ in 0..config.max_iterations {
        let t = Instant::now();
        let sweep = full_sweep(model, &values, config);
        let next: Vec<f64> = sweep.iter().map(|&(v, _)| v).collect();
        let delta = tracer.record(None, &values, &next, elapsed_ms(t));
        values = next;
        last = sweep;
        if delta <= config.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "value iteration hit the iteration cap ({})",
            config.max_iterations
        );
    }
    let (policy, bound) = if config.certify {
        let sweep = full_sweep(model, &values, config);
        (
            policy_from_indices(model, &sweep),
            Some(certificate(model, &values, &sweep)),
        )
    } else {
        (policy_from_indices(model, &last), None)
    };
    Ok(SolveReport {
        solver: "vi".into(),
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
        reference_gap: None,
    })
}

/// Value of a fixed policy by successive approximation, stopped once the
/// sweep delta guarantees `||V - V^Pi||_inf <= epsilon`.
pub fn policy_value(
    model: &FactoredMdp,
    policy: &Policy,
    config: &SolverConfig,
) -> Result<ValueVector> {
    config.validate()?;
    policy.check(model.states(), model.clusters(), model.actions())?;
    let gamma = model.gamma();
    let threshold = config.epsilon * (1.0 - gamma) / gamma;
    let mut values = vec![0.0; model.states()];
    for _ in 0..config.max_iterations {
        let next = policy_sweep(model, &values, policy, config);
        let delta = values
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if delta <= threshold {
            return Ok(values.into());
        }
    }
    log::warn!(
        "policy evaluation hit the iteration cap ({})",
        config.max_iterations
    );
    Ok(values.into())
}
