use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "timdp",
    version,
    about = "Clustered control of transition-independent multi-agent MDPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded model file.
    Gen(GenArgs),
    /// Solve a model and write the value function, policy and trace.
    Solve(SolveArgs),
    /// Search for a clustering assignment.
    Cluster(ClusterArgs),
    /// Time solvers over cluster counts.
    Bench(BenchArgs),
    /// Rerun one of the reference experiments.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Random,
    Channel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeArg {
    Global,
    ClusterLocal,
    AgentLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardArg {
    AgentSeparable,
    ClusterSeparable,
    Full,
    StateOnly,
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioArg {
    MaxRevenue,
    DesiredConfiguration,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Random)]
    pub kind: ModelKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub agents: usize,
    #[arg(long, default_value_t = 2)]
    pub substates: usize,
    #[arg(long, default_value_t = 3)]
    pub actions: usize,
    /// Cluster label per agent, e.g. `0,1,0`. Defaults to one cluster.
    #[arg(long, value_delimiter = ',', conflicts_with = "random_clusters")]
    pub clusters: Option<Vec<usize>>,
    /// Draw a random assignment with this many clusters.
    #[arg(long)]
    pub random_clusters: Option<usize>,
    #[arg(long, value_enum, default_value_t = ScopeArg::Global)]
    pub scope: ScopeArg,
    #[arg(long, value_enum, default_value_t = RewardArg::AgentSeparable)]
    pub reward: RewardArg,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// Dirichlet concentration of every kernel row.
    #[arg(long, default_value_t = 1.0)]
    pub concentration: f64,
    /// Channel scenario (only with `--kind channel`).
    #[arg(long, value_enum, default_value_t = ScenarioArg::MaxRevenue)]
    pub scenario: ScenarioArg,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    Vi,
    Cvi,
    Hybrid,
    CviS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CviSModeArg {
    Reduced,
    Frozen,
}

/// Flags shared by every command that runs a solver.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverFlags {
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iterations: usize,
    /// Run every sweep on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Cvi)]
    pub solver: SolverArg,
    #[command(flatten)]
    pub flags: SolverFlags,
    /// Override the model's discount factor.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Override the model's clustering with one label per agent, e.g. `0,1,0`.
    #[arg(long, value_delimiter = ',')]
    pub clusters: Option<Vec<usize>>,
    /// Explicit CVI cluster cycle, e.g. `2,0,1`. Defaults to round robin.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<usize>>,
    /// Clustered sweeps between full sweeps of the hybrid solver. Defaults to
    /// running CVI to convergence each time.
    #[arg(long)]
    pub hybrid_sweeps: Option<usize>,
    #[arg(long, value_enum, default_value_t = CviSModeArg::Reduced)]
    pub cvi_s_mode: CviSModeArg,
    /// Skip the residual certificate.
    #[arg(long)]
    pub no_certify: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    GsaR,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    /// Re-cluster and solve with CVI.
    Full,
    /// Sum per-cluster fixed points (agent-separable reward, local kernels).
    Decomposed,
    /// Re-cluster and solve to the optimum with hybrid CVI/VI.
    Exact,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::GsaR)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = BackendArg::Full)]
    pub backend: BackendArg,
    /// Score by the value at this state instead of the mean over states.
    #[arg(long)]
    pub score_state: Option<usize>,
    #[command(flatten)]
    pub flags: SolverFlags,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "vi,cvi")]
    pub solvers: Vec<SolverArg>,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    /// Cluster counts to time. Defaults to `1` and `N`.
    #[arg(long, value_delimiter = ',')]
    pub cluster_counts: Option<Vec<usize>>,
    /// Seed for the intermediate clusterings.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Random non-separable model, values averaged over all clusterings.
    FigNonsep,
    /// Random separable model, CVI against VI over all clusterings.
    FigSep,
    /// Greedy clustering on a ten-agent separable model.
    FigGc,
    /// Channel-selection game, both scenarios.
    Channel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Score at most this many clusterings per cluster count.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Agent count (defaults: 7 for fig-nonsep and fig-sep, 10 for fig-gc).
    #[arg(long)]
    pub agents: Option<usize>,
    /// Clustering value backend for fig-gc (default decomposed) and channel
    /// (default exact).
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
