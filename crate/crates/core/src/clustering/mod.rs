//! Choosing which agents share a control signal.

mod backend;
mod brute;
mod gsa;
mod partitions;
mod submodularity;

pub use backend::{
    assignment_value, AssignmentScore, ClusterValueBackend, Scalarization, ScoreOptions, Scorer,
};
pub use brute::{brute_force_optimal, BruteForceResult, MAX_BRUTE_FORCE_AGENTS};
pub use gsa::{gsa_r, GsaStep, GsaTrace};
pub use partitions::{
    canonical_splits, enumerate_partitions, split_count, stirling2, Partitions, SplitCandidate,
    MAX_ENUMERATED_AGENTS,
};
pub use submodularity::{
    subset_value_submodularity_check, ChainSampling, ChainViolation, PropertyKind,
    SubmodularityReport, MAX_SUBSET_AGENTS,
};
