use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use timdp_core::clustering::{
    brute_force_optimal, gsa_r, stirling2, ClusterValueBackend, GsaTrace, Scalarization,
    ScoreOptions, Scorer,
};
use timdp_core::instances::{
    random_assignment, random_timdp, ChannelInstance, KernelScope, RandomSpec, RewardKind,
    Scenario, CHANNEL_AGENTS,
};
use timdp_core::{
    cvi, cvi_s, hybrid_cvi_vi, value_iteration, ClusterAssignment, CviSMode, CviSchedule,
    FactoredMdp, HybridPeriod, SolveReport, SolverConfig,
};

use crate::args::{
    BackendArg, BenchArgs, ClusterArgs, CviSModeArg, GenArgs, MethodArg, ModelKind, RewardArg,
    ScenarioArg, ScopeArg, SolveArgs, SolverArg, SolverFlags,
};
use crate::exit::CliError;

/// Everything needed to rerun a command, stored next to its results.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a, A: Serialize, R: Serialize> {
    pub command_line: Vec<String>,
    pub args: &'a A,
    pub result: R,
}

impl<'a, A: Serialize, R: Serialize> RunRecord<'a, A, R> {
    pub fn new(args: &'a A, result: R) -> Self {
        Self {
            command_line: std::env::args().collect(),
            args,
            result,
        }
    }
}

pub fn load_model(path: &Path) -> Result<FactoredMdp> {
    FactoredMdp::load(path).map_err(|source| {
        CliError::Model {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

pub fn labels_to_assignment(labels: &[usize], agents: usize) -> Result<ClusterAssignment> {
    if labels.len() != agents {
        return Err(CliError::Usage(format!(
            "--clusters lists {} labels, model has {agents} agents",
            labels.len()
        ))
        .into());
    }
    Ok(ClusterAssignment::from_labels(labels)?)
}

pub fn solver_config(flags: &SolverFlags) -> SolverConfig {
    SolverConfig::default()
        .with_epsilon(flags.epsilon)
        .with_max_iterations(flags.max_iterations)
        .with_parallel(!flags.serial)
}

pub fn backend(arg: BackendArg) -> ClusterValueBackend {
    match arg {
        BackendArg::Full => ClusterValueBackend::FullSolve,
        BackendArg::Decomposed => ClusterValueBackend::Decomposed,
        BackendArg::Exact => ClusterValueBackend::Exact,
    }
}

pub fn scenario(arg: ScenarioArg) -> Scenario {
    match arg {
        ScenarioArg::MaxRevenue => Scenario::MaxRevenue,
        ScenarioArg::DesiredConfiguration => Scenario::DesiredConfiguration,
    }
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let model = match args.kind {
        ModelKind::Random => {
            let clustering = match (&args.clusters, args.random_clusters) {
                (Some(labels), _) => labels_to_assignment(labels, args.agents)?,
                (None, Some(k)) => random_assignment(args.agents, k, args.seed)?,
                (None, None) => ClusterAssignment::single(args.agents),
            };
            let spec = RandomSpec {
                seed: args.seed,
                substates: vec![args.substates; args.agents],
                actions: args.actions,
                clustering,
                gamma: args.gamma,
                kernel_scope: match args.scope {
                    ScopeArg::Global => KernelScope::Global,
                    ScopeArg::ClusterLocal => KernelScope::ClusterLocal,
                    ScopeArg::AgentLocal => KernelScope::AgentLocal,
                },
                reward: match args.reward {
                    RewardArg::AgentSeparable => RewardKind::AgentSeparable,
                    RewardArg::ClusterSeparable => RewardKind::ClusterSeparable,
                    RewardArg::Full => RewardKind::Full,
                    RewardArg::StateOnly => RewardKind::StateOnly,
                    RewardArg::Indicator => RewardKind::Indicator,
                },
                concentration: args.concentration,
            };
            random_timdp(&spec)?
        }
        ModelKind::Channel => {
            let clustering = match (&args.clusters, args.random_clusters) {
                (Some(labels), _) => labels_to_assignment(labels, CHANNEL_AGENTS)?,
                (None, Some(k)) => random_assignment(CHANNEL_AGENTS, k, args.seed)?,
                (None, None) => ClusterAssignment::single(CHANNEL_AGENTS),
            };
            let mut instance = ChannelInstance::new(args.seed, scenario(args.scenario));
            instance.gamma = args.gamma;
            instance.build(clustering)?
        }
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    model.save(&args.out)?;
    println!(
        "wrote {} ({} agents, {} states, {} clusters)",
        args.out.display(),
        model.agents(),
        model.states(),
        model.clusters()
    );
    Ok(())
}

fn run_solver(model: &FactoredMdp, args: &SolveArgs, config: &SolverConfig) -> Result<SolveReport> {
    let schedule = match &args.schedule {
        Some(cycle) => CviSchedule::ExplicitCycle(cycle.clone()),
        None => CviSchedule::RoundRobin,
    };
    let period = match args.hybrid_sweeps {
        Some(n) => HybridPeriod::Sweeps(n),
        None => HybridPeriod::UntilConverged,
    };
    let mode = match args.cvi_s_mode {
        CviSModeArg::Reduced => CviSMode::Reduced,
        CviSModeArg::Frozen => CviSMode::FrozenComplement,
    };
    Ok(match args.solver {
        SolverArg::Vi => value_iteration(model, config)?,
        SolverArg::Cvi => cvi(model, &schedule, None, config)?,
        SolverArg::Hybrid => hybrid_cvi_vi(model, &schedule, period, None, config)?,
        SolverArg::CviS => cvi_s(model, mode, config)?,
    })
}

pub fn write_values_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_file(path)?);
    w.write_record(["state", "value", "controls"])?;
    for (s, v) in report.values.iter().enumerate() {
        let controls: Vec<String> = report.policy.at(s).iter().map(|a| a.to_string()).collect();
        w.write_record([s.to_string(), v.to_string(), controls.join(" ")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    let mut model = load_model(&args.model)?;
    if let Some(gamma) = args.gamma {
        let mut spec = model.to_spec();
        spec.gamma = gamma;
        model = FactoredMdp::from_spec(spec)?;
    }
    if let Some(labels) = &args.clusters {
        model = model.with_clustering(labels_to_assignment(labels, model.agents())?)?;
    }
    let config = solver_config(&args.flags).with_certify(!args.no_certify);
    let report = run_solver(&model, args, &config)?;

    create_dir(&args.out_dir)?;
    write_json(
        &args.out_dir.join("solve_report.json"),
        &RunRecord::new(args, &report),
    )?;
    report.write_trace_csv(create_file(&args.out_dir.join("trace.csv"))?)?;
    write_values_csv(&args.out_dir.join("values.csv"), &report)?;
    println!(
        "{}: {} sweeps, converged {}, ||V||_2 = {:.6}, {:.1} ms",
        report.solver,
        report.iterations,
        report.converged,
        report.values.euclidean_norm(),
        report.wall_ms
    );
    if let Some(b) = report.bound {
        println!(
            "residual {:.3e}: {:.3e} <= ||V - V*|| <= {:.3e}",
            b.residual, b.lower, b.upper
        );
    }
    if !report.converged {
        return Err(CliError::NotConverged(report.solver).into());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ClusterResult {
    pub method: MethodArg,
    pub backend: ClusterValueBackend,
    pub scalarization: Scalarization,
    pub k: usize,
    pub assignment: ClusterAssignment,
    pub labels: String,
    pub score: f64,
    /// Assignments (brute force) or split candidates (greedy) scored.
    pub evaluations_counted: u64,
    /// `S(N, k)`: assignments a brute-force search scores.
    pub naive_evaluations: Option<u128>,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<GsaTrace>,
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let n = model.agents();
    if args.k == 0 || args.k > n {
        return Err(CliError::Usage(format!("--k must be in 1..={n}, got {}", args.k)).into());
    }
    let options = ScoreOptions {
        backend: backend(args.backend),
        scalarization: args
            .score_state
            .map_or(Scalarization::Mean, Scalarization::State),
        solver: solver_config(&args.flags).with_certify(false),
    };
    let start = Instant::now();
    let (assignment, score, evaluations, trace) = if args.k == n {
        let singletons = ClusterAssignment::singletons(n);
        let score = Scorer::new(&model, options.clone())?.score(&singletons)?;
        (singletons, score, 0, None)
    } else {
        match args.method {
            MethodArg::GsaR => {
                let trace = gsa_r(&model, args.k, &options)?;
                let last = trace.steps.last().expect("nonempty trace");
                (
                    last.assignment.clone(),
                    last.score,
                    trace.total_candidates(),
                    Some(trace),
                )
            }
            MethodArg::Brute => {
                let best = brute_force_optimal(&model, args.k, &options)?;
                (best.assignment, best.score, best.evaluations, None)
            }
        }
    };
    let result = ClusterResult {
        method: args.method,
        backend: options.backend,
        scalarization: options.scalarization,
        k: args.k,
        labels: assignment.rgs_string(),
        assignment,
        score,
        evaluations_counted: evaluations,
        naive_evaluations: stirling2(n, args.k).ok(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        trace,
    };

    create_dir(&args.out_dir)?;
    write_json(
        &args.out_dir.join("cluster_result.json"),
        &RunRecord::new(args, &result),
    )?;
    if let Some(trace) = &result.trace {
        trace.write_csv(create_file(&args.out_dir.join("gsa_trace.csv"))?)?;
    }
    println!(
        "{} k={}: {} score {:.9} ({} evaluations{})",
        match args.method {
            MethodArg::GsaR => "gsa-r",
            MethodArg::Brute => "brute",
        },
        args.k,
        result.assignment,
        result.score,
        result.evaluations_counted,
        result
            .naive_evaluations
            .map_or_else(String::new, |s| format!(", brute force needs {s}"))
    );
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub solver: String,
    pub clusters: usize,
    pub assignment: String,
    pub repetitions: usize,
    pub iterations: usize,
    pub median_total_ms: f64,
    pub median_ms_per_iteration: f64,
    pub min_total_ms: f64,
    pub max_total_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchRatio {
    pub name: String,
    pub clusters: usize,
    pub ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub ratios: Vec<BenchRatio>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

fn solver_name(arg: SolverArg) -> &'static str {
    match arg {
        SolverArg::Vi => "vi",
        SolverArg::Cvi => "cvi",
        SolverArg::Hybrid => "hybrid",
        SolverArg::CviS => "cvi-s",
    }
}

/// Time `solver` on `model`, `repetitions` times.
pub fn time_solver(
    model: &FactoredMdp,
    solver: SolverArg,
    repetitions: usize,
    config: &SolverConfig,
) -> Result<BenchRow> {
    let mut totals = Vec::with_capacity(repetitions);
    let mut per_iteration = Vec::with_capacity(repetitions);
    let mut iterations = 0;
    for _ in 0..repetitions {
        let start = Instant::now();
        let report = match solver {
            SolverArg::Vi => value_iteration(model, config)?,
            SolverArg::Cvi => cvi(model, &CviSchedule::RoundRobin, None, config)?,
            SolverArg::Hybrid => hybrid_cvi_vi(
                model,
                &CviSchedule::RoundRobin,
                HybridPeriod::UntilConverged,
                None,
                config,
            )?,
            SolverArg::CviS => cvi_s(model, CviSMode::Reduced, config)?,
        };
        let ms = start.elapsed().as_secs_f64() * 1e3;
        iterations = report.iterations;
        totals.push(ms);
        per_iteration.push(ms / report.iterations.max(1) as f64);
    }
    let min = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = totals.iter().copied().fold(0.0, f64::max);
    Ok(BenchRow {
        solver: solver_name(solver).into(),
        clusters: model.clusters(),
        assignment: model.clustering().rgs_string(),
        repetitions,
        iterations,
        median_total_ms: median(&mut totals),
        median_ms_per_iteration: median(&mut per_iteration),
        min_total_ms: min,
        max_total_ms: max,
    })
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let n = model.agents();
    if args.repetitions == 0 {
        return Err(CliError::Usage("--repetitions must be at least 1".into()).into());
    }
    let mut counts = args.cluster_counts.clone().unwrap_or_else(|| vec![1, n]);
    counts.sort_unstable();
    counts.dedup();
    let config = SolverConfig::default()
        .with_epsilon(args.epsilon)
        .with_parallel(false)
        .with_certify(false);
    let mut rows = Vec::new();
    for &c in &counts {
        let assignment = match c {
            1 => ClusterAssignment::single(n),
            c if c == n => ClusterAssignment::singletons(n),
            c => random_assignment(n, c, args.seed)?,
        };
        let m = model.with_clustering(assignment)?;
        for &solver in &args.solvers {
            let row = time_solver(&m, solver, args.repetitions, &config)?;
            println!(
                "{:>6} C={:<2} {:>6} sweeps  median {:>10.2} ms  ({:.4} ms/sweep)",
                row.solver, c, row.iterations, row.median_total_ms, row.median_ms_per_iteration
            );
            rows.push(row);
        }
    }
    let find = |solver: &str, c: usize| {
        rows.iter()
            .find(|r| r.solver == solver && r.clusters == c)
            .map(|r| r.median_total_ms)
    };
    let mut ratios = Vec::new();
    for &c in &counts {
        if let (Some(vi), Some(cv)) = (find("vi", c), find("cvi", c)) {
            ratios.push(BenchRatio {
                name: "vi/cvi".into(),
                clusters: c,
                ratio: vi / cv,
            });
        }
        if let (Some(base), Some(cv)) = (find("cvi", counts[0]), find("cvi", c)) {
            if c != counts[0] {
                ratios.push(BenchRatio {
                    name: format!("cvi(C={c})/cvi(C={})", counts[0]),
                    clusters: c,
                    ratio: cv / base,
                });
            }
        }
    }
    for r in &ratios {
        println!("{} at C={}: {:.2}", r.name, r.clusters, r.ratio);
    }

    create_dir(&args.out_dir)?;
    let mut w = csv::Writer::from_writer(create_file(&args.out_dir.join("bench.csv"))?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    write_json(
        &args.out_dir.join("bench.json"),
        &RunRecord::new(args, BenchResult { rows, ratios }),
    )?;
    Ok(())
}
