use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ClusterAssignment, FactoredMdp};
use crate::solvers::{
    cvi, hybrid_cvi_vi, value_iteration, CviSchedule, HybridPeriod, SolverConfig,
};
use crate::value::ValueVector;

/// How a clustering assignment is turned into a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterValueBackend {
    /// Re-cluster the model and solve it with CVI.
    #[default]
    FullSolve,
    /// Sum independent single-cluster fixed points, one per cluster, each on
    /// the cluster's own substates. Needs an agent-separable reward and
    /// kernels local to every scored cluster.
    Decomposed,
    /// Re-cluster the model and solve it to the optimum with hybrid CVI/VI.
    /// Subject to the solver's action cap.
    Exact,
}

/// Reduction of a value vector to the score being maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scalarization {
    /// Mean over all states (uniform initial distribution).
    #[default]
    Mean,
    /// Value at one designated state.
    State(usize),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub backend: ClusterValueBackend,
    pub scalarization: Scalarization,
    pub solver: SolverConfig,
}

impl ScoreOptions {
    pub fn new(backend: ClusterValueBackend, solver: SolverConfig) -> Self {
        Self {
            backend,
            scalarization: Scalarization::Mean,
            solver,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentScore {
    pub score: f64,
    pub values: ValueVector,
}

/// Scores assignments of one model; caches per-subset fixed points for the
/// decomposed backend. Safe to share across threads.
#[derive(Debug)]
pub struct Scorer<'a> {
    model: &'a FactoredMdp,
    options: ScoreOptions,
    /// Decomposed backend: subset bitmask -> values over the subset's substates.
    subsets: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

impl<'a> Scorer<'a> {
    pub fn new(model: &'a FactoredMdp, options: ScoreOptions) -> Result<Self> {
        options.solver.validate()?;
        if let Scalarization::State(s) = options.scalarization {
            if s >= model.states() {
                return domain(format!("designated state {s} out of range"));
            }
        }
        if options.backend == ClusterValueBackend::Decomposed {
            if !model.reward_spec().is_agent_separable() {
                return Err(Error::Unsupported(format!(
                    "decomposed scoring needs an agent-separable reward, model has {}",
                    model.reward_spec().variant_name()
                )));
            }
            if model.agents() > 64 {
                return domain("decomposed scoring supports at most 64 agents");
            }
        }
        Ok(Self {
            model,
            options,
            subsets: Mutex::new(HashMap::new()),
        })
    }

    pub fn model(&self) -> &FactoredMdp {
        self.model
    }

    pub fn options(&self) -> &ScoreOptions {
        &self.options
    }

    fn scalarize(&self, values: &ValueVector) -> f64 {
        match self.options.scalarization {
            Scalarization::Mean => values.mean(),
            Scalarization::State(s) => values[s],
        }
    }

    fn check(&self, assignment: &ClusterAssignment) -> Result<()> {
        if assignment.agents() != self.model.agents() {
            return domain(format!(
                "assignment covers {} agents, model has {}",
                assignment.agents(),
                self.model.agents()
            ));
        }
        Ok(())
    }

    /// Scalar score of `assignment`.
    pub fn score(&self, assignment: &ClusterAssignment) -> Result<f64> {
        self.check(assignment)?;
        match self.options.backend {
            ClusterValueBackend::FullSolve | ClusterValueBackend::Exact => {
                Ok(self.scalarize(&self.full_solve(assignment)?))
            }
            ClusterValueBackend::Decomposed => {
                let mut total = 0.0;
                for group in assignment.clusters() {
                    let values = self.subset_values(group)?;
                    total += match self.options.scalarization {
                        Scalarization::Mean => values.iter().sum::<f64>() / values.len() as f64,
                        Scalarization::State(s) => values[self.model.project(s, group)],
                    };
                }
                Ok(total)
            }
        }
    }

    /// Score plus the full-state value vector.
    pub fn evaluate(&self, assignment: &ClusterAssignment) -> Result<AssignmentScore> {
        self.check(assignment)?;
        let values = match self.options.backend {
            ClusterValueBackend::FullSolve | ClusterValueBackend::Exact => {
                self.full_solve(assignment)?
            }
            ClusterValueBackend::Decomposed => {
                let mut values = vec![0.0; self.model.states()];
                for group in assignment.clusters() {
                    let sub = self.subset_values(group)?;
                    for (s, v) in values.iter_mut().enumerate() {
                        *v += sub[self.model.project(s, group)];
                    }
                }
                ValueVector::from_vec(values)
            }
        };
        let score = match self.options.backend {
            ClusterValueBackend::Decomposed => self.score(assignment)?,
            _ => self.scalarize(&values),
        };
        Ok(AssignmentScore { score, values })
    }

    fn full_solve(&self, assignment: &ClusterAssignment) -> Result<ValueVector> {
        let model = self.model.with_clustering(assignment.clone())?;
        let config = self.options.solver.clone().with_certify(false);
        let schedule = CviSchedule::RoundRobin;
        let report = match self.options.backend {
            ClusterValueBackend::Exact => hybrid_cvi_vi(
                &model,
                &schedule,
                HybridPeriod::UntilConverged,
                None,
                &config,
            )?,
            _ => cvi(&model, &schedule, None, &config)?,
        };
        if !report.converged {
            log::warn!(
                "{} did not converge while scoring {assignment}",
                report.solver
            );
        }
        Ok(report.values)
    }

    /// Optimal single-control values of the stand-alone model over `group`.
    pub fn subset_values(&self, group: &[usize]) -> Result<Arc<Vec<f64>>> {
        let key = group.iter().fold(0u64, |m, &a| m | 1 << a);
        if let Some(v) = self.subsets.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(v));
        }
        let sub = self.model.reduce_to(group)?;
        let config = self
            .options
            .solver
            .clone()
            .with_certify(false)
            .with_parallel(false);
        let values = Arc::new(value_iteration(&sub, &config)?.values.into_inner());
        self.subsets
            .lock()
            .expect("cache lock")
            .insert(key, Arc::clone(&values));
        Ok(values)
    }
}

/// One-off score of `assignment` under `options`.
pub fn assignment_value(
    model: &FactoredMdp,
    assignment: &ClusterAssignment,
    options: &ScoreOptions,
) -> Result<AssignmentScore> {
    Scorer::new(model, options.clone())?.evaluate(assignment)
}
