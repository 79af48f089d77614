//! Transition-independent multi-agent MDPs: models, clustered value
//! iteration solvers, agent-clustering search, and instance generators.

pub mod clustering;
mod error;
pub mod instances;
pub mod model;
pub mod solvers;
mod value;

pub use error::{Error, Result};
pub use model::{
    validate_model, AgentSpec, ClusterAssignment, FactoredMdp, ModelSpec, Policy, RewardSpec,
    StateIndexer, ValidationReport, Violation,
};
pub use solvers::{
    bellman_full_apply, clustered_bellman_apply, cvi, cvi_s, hybrid_cvi_vi, policy_apply,
    policy_value, suboptimality_bounds, value_iteration, BoundCertificate, CviSMode, CviSchedule,
    HybridPeriod, SolveReport, SolverConfig, TraceRow,
};
pub use value::ValueVector;
