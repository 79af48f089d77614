use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::bellman::{clustered_sweep, full_sweep, policy_from_indices};
use super::bounds::certificate;
use super::report::{elapsed_ms, SolveReport, Tracer};
use super::{CviSchedule, SolverConfig};
use crate::error::{domain, Result};
use crate::model::{FactoredMdp, Policy};

/// How long each CVI phase of the hybrid solver runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridPeriod {
    /// Until the CVI stop rule fires.
    #[default]
    UntilConverged,
    /// A fixed number of clustered sweeps (at least 1).
    Sweeps(usize),
}

struct CviState<'a> {
    model: &'a FactoredMdp,
    config: &'a SolverConfig,
    schedule: &'a CviSchedule,
    values: Vec<f64>,
    policy: Policy,
    tracer: Tracer,
    /// Clustered sweeps done so far; indexes the schedule.
    sweeps: usize,
}

impl<'a> CviState<'a> {
    fn new(
        model: &'a FactoredMdp,
        config: &'a SolverConfig,
        schedule: &'a CviSchedule,
        initial: Option<&Policy>,
    ) -> Result<Self> {
        config.validate()?;
        schedule.validate(model.clusters())?;
        let policy = match initial {
            Some(p) => {
                p.check(model.states(), model.clusters(), model.actions())?;
                p.clone()
            }
            None => Policy::zeros(model.states(), model.clusters()),
        };
        Ok(Self {
            model,
            config,
            schedule,
            values: vec![0.0; model.states()],
            policy,
            tracer: Tracer::new(),
            sweeps: 0,
        })
    }

    fn clustered_step(&mut self) -> f64 {
        let c = self.schedule.cluster_at(self.sweeps, self.model.clusters());
        let t = Instant::now();
        let sweep = clustered_sweep(self.model, &self.values, &self.policy, c, self.config);
        let next: Vec<f64> = sweep.iter().map(|&(v, _)| v).collect();
        for (s, &(_, a)) in sweep.iter().enumerate() {
            self.policy.at_mut(s)[c] = a;
        }
        let delta = self
            .tracer
            .record(Some(c), &self.values, &next, elapsed_ms(t));
        self.values = next;
        self.sweeps += 1;
        delta
    }

    fn full_step(&mut self) -> f64 {
        let t = Instant::now();
        let sweep = full_sweep(self.model, &self.values, self.config);
        let next: Vec<f64> = sweep.iter().map(|&(v, _)| v).collect();
        self.policy = policy_from_indices(self.model, &sweep);
        let delta = self.tracer.record(None, &self.values, &next, elapsed_ms(t));
        self.values = next;
        delta
    }

    fn budget_left(&self) -> bool {
        self.tracer.rows.len() < self.config.max_iterations
    }

    fn finish(self, solver: &str, initial: Policy, converged: bool, start: Instant) -> SolveReport {
        let bound = (self.config.certify && self.config.cap_allows(self.model)).then(|| {
            let sweep = full_sweep(self.model, &self.values, self.config);
            certificate(self.model, &self.values, &sweep)
        });
        SolveReport {
            solver: solver.into(),
            epsilon: self.config.epsilon,
            gamma: self.model.gamma(),
            clustering: self.model.clustering().clone(),
            values: self.values.into(),
            policy: self.policy,
            iterations: self.tracer.rows.len(),
            converged,
            trace: self.tracer.rows,
            wall_ms: elapsed_ms(start),
            initial_policy: Some(initial),
            schedule: Some(self.schedule.clone()),
            bound,
            reference_gap: None,
        }
    }
}

/// Clustered value iteration.
///
/// Sweep `k` applies the clustered operator of cluster `schedule(k)` and
/// updates that cluster's policy entries. Stops once a full schedule window
/// has run and every sweep in the last window moved the values by at most
/// `epsilon`. `initial` defaults to the all-zero policy.
pub fn cvi(
    model: &FactoredMdp,
    schedule: &CviSchedule,
    initial: Option<&Policy>,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let start = Instant::now();
    let mut state = CviState::new(model, config, schedule, initial)?;
    let initial = state.policy.clone();
    let window = schedule.cycle_len(model.clusters());
    let mut converged = false;
    while state.budget_left() {
        state.clustered_step();
        if state.sweeps >= window && state.tracer.window_max(window) <= config.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("CVI hit the iteration cap ({})", config.max_iterations);
    }
    Ok(state.finish("cvi", initial, converged, start))
}

/// CVI phases interleaved with single full Bellman sweeps.
///
/// Each round runs clustered sweeps per `period`, then one full sweep
/// (traced with no cluster). Stops when a full sweep moves the values by at
/// most `epsilon`.
pub fn hybrid_cvi_vi(
    model: &FactoredMdp,
    schedule: &CviSchedule,
    period: HybridPeriod,
    initial: Option<&Policy>,
    config: &SolverConfig,
) -> Result<SolveReport> {
    if period == HybridPeriod::Sweeps(0) {
        return domain("hybrid period must be at least one sweep");
    }
    config.check_cap(model)?;
    let start = Instant::now();
    let mut state = CviState::new(model, config, schedule, initial)?;
    let initial = state.policy.clone();
    let window = schedule.cycle_len(model.clusters());
    let mut converged = false;
    'outer: while state.budget_left() {
        let mut phase = 0;
        loop {
            if !state.budget_left() {
                break 'outer;
            }
            state.clustered_step();
            phase += 1;
            let done = match period {
                HybridPeriod::UntilConverged => {
                    phase >= window && state.tracer.window_max(window) <= config.epsilon
                }
                HybridPeriod::Sweeps(n) => phase >= n,
            };
            if done {
                break;
            }
        }
        if !state.budget_left() {
            break;
        }
        if state.full_step() <= config.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "hybrid solver hit the iteration cap ({})",
            config.max_iterations
        );
    }
    Ok(state.finish("hybrid", initial, converged, start))
}
