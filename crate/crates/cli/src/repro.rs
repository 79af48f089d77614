use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use timdp_core::clustering::{
    assignment_value, enumerate_partitions, gsa_r, stirling2, ClusterValueBackend, ScoreOptions,
};
use timdp_core::instances::{
    channel_instance, random_timdp, KernelScope, RandomSpec, RewardKind, Scenario, CHANNEL_AGENTS,
};
use timdp_core::{
    cvi, value_iteration, BoundCertificate, ClusterAssignment, CviSchedule, FactoredMdp,
    SolverConfig, ValueVector,
};

use crate::args::{BackendArg, Experiment, ReproArgs};
use crate::commands::{backend, create_dir, write_json, RunRecord};

pub const NORM: &str = "euclidean";

/// One line of an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub scenario: Option<String>,
    /// Number of clusters `C`.
    pub clusters: usize,
    pub solver: String,
    /// Clusterings averaged into this row.
    pub assignments: usize,
    /// Mean of `||V|| / divisor`.
    pub mean_normalized_value: f64,
    /// Mean normalized `||V||` of the solver's values, a lower bound on the
    /// optimum.
    pub bound_lower: Option<f64>,
    /// Mean normalized `||V + delta / (1 - gamma)||`, an upper bound on the
    /// optimum.
    pub bound_upper: Option<f64>,
    pub mean_iterations: f64,
    pub mean_wall_ms: f64,
    /// Cumulative split candidates scored by greedy search.
    pub evaluations_counted: Option<u64>,
    /// `S(N, C)`.
    pub naive_evaluations: Option<u64>,
    /// Mean VI time over mean CVI time.
    pub vi_cvi_time_ratio: Option<f64>,
    /// Assignment behind a single-clustering row.
    pub assignment: Option<String>,
}

impl ExperimentRow {
    fn new(clusters: usize, solver: &str) -> Self {
        Self {
            scenario: None,
            clusters,
            solver: solver.into(),
            assignments: 1,
            mean_normalized_value: 0.0,
            bound_lower: None,
            bound_upper: None,
            mean_iterations: 0.0,
            mean_wall_ms: 0.0,
            evaluations_counted: None,
            naive_evaluations: None,
            vi_cvi_time_ratio: None,
            assignment: None,
        }
    }
}

/// Pass/fail outcome of a property the experiment is expected to show.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub agents: usize,
    /// Norm applied to value vectors before averaging.
    pub norm: String,
    /// Divisor: norm of the optimal value with every agent in its own
    /// cluster (per scenario for the channel experiment).
    pub normalization: Vec<(String, f64)>,
    pub rows: Vec<ExperimentRow>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(fs::File::create(path)?);
        w.write_record([
            "experiment",
            "scenario",
            "clusters",
            "solver",
            "assignments",
            "mean_normalized_value",
            "bound_lower",
            "bound_upper",
            "mean_iterations",
            "mean_wall_ms",
            "evaluations_counted",
            "naive_evaluations",
            "vi_cvi_time_ratio",
            "assignment",
            "norm",
        ])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.12}"));
        for r in &self.rows {
            w.write_record([
                self.experiment.clone(),
                r.scenario.clone().unwrap_or_default(),
                r.clusters.to_string(),
                r.solver.clone(),
                r.assignments.to_string(),
                format!("{:.12}", r.mean_normalized_value),
                opt(r.bound_lower),
                opt(r.bound_upper),
                format!("{:.3}", r.mean_iterations),
                format!("{:.3}", r.mean_wall_ms),
                r.evaluations_counted
                    .map_or_else(String::new, |v| v.to_string()),
                r.naive_evaluations
                    .map_or_else(String::new, |v| v.to_string()),
                opt(r.vi_cvi_time_ratio),
                r.assignment.clone().unwrap_or_default(),
                self.norm.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Every partition into `k` clusters, or `sample` of them evenly spaced in
/// growth-string order.
pub fn clusterings(n: usize, k: usize, sample: Option<usize>) -> Result<Vec<ClusterAssignment>> {
    let total = stirling2(n, k)? as usize;
    let all = enumerate_partitions(n, k)?;
    Ok(match sample {
        Some(s) if s < total => {
            let picks: Vec<usize> = (0..s).map(|i| i * total / s).collect();
            all.enumerate()
                .filter(|(i, _)| picks.binary_search(i).is_ok())
                .map(|(_, a)| a)
                .collect()
        }
        _ => all.collect(),
    })
}

struct Run {
    values: ValueVector,
    iterations: usize,
    wall_ms: f64,
    residual: Option<f64>,
}

fn solve_cvi(model: &FactoredMdp, config: &SolverConfig) -> Result<Run> {
    let start = Instant::now();
    let r = cvi(model, &CviSchedule::RoundRobin, None, config)?;
    Ok(Run {
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        iterations: r.iterations,
        residual: r.bound.map(|b| b.residual),
        values: r.values,
    })
}

fn solve_vi(model: &FactoredMdp, config: &SolverConfig) -> Result<Run> {
    let start = Instant::now();
    let r = value_iteration(model, config)?;
    Ok(Run {
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        iterations: r.iterations,
        residual: r.bound.map(|b| b.residual),
        values: r.values,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Both reference figures over all clusterings: CVI with its certificate and
/// VI, for every cluster count.
fn all_clusterings(args: &ReproArgs, separable: bool) -> Result<ExperimentReport> {
    let n = args.agents.unwrap_or(7);
    let spec = if separable {
        RandomSpec::uniform(args.seed, n, 2, 3)
            .with_scope(KernelScope::AgentLocal)
            .with_reward(RewardKind::AgentSeparable)
    } else {
        RandomSpec::uniform(args.seed, n, 2, 3).with_reward(RewardKind::StateOnly)
    };
    let model = random_timdp(&spec)?;
    // timings are per run, so each solve stays on one thread
    let config = SolverConfig::default()
        .with_epsilon(args.epsilon)
        .with_parallel(false);
    let reference = solve_vi(
        &model.with_clustering(ClusterAssignment::singletons(n))?,
        &config,
    )?;
    let divisor = reference.values.euclidean_norm();
    let gamma = model.gamma();

    let mut rows = Vec::new();
    let mut max_cvi_vi_gap: f64 = 0.0;
    let mut inside = 0usize;
    let mut total = 0usize;
    for k in 1..=n {
        let assignments = clusterings(n, k, args.sample)?;
        let runs: Vec<(Run, Run)> = assignments
            .par_iter()
            .map(|a| -> Result<(Run, Run)> {
                let m = model.with_clustering(a.clone())?;
                Ok((solve_cvi(&m, &config)?, solve_vi(&m, &config)?))
            })
            .collect::<Result<_>>()?;
        let count = runs.len();
        let mut cvi_row = ExperimentRow::new(k, "cvi");
        let mut vi_row = ExperimentRow::new(k, "vi");
        cvi_row.assignments = count;
        vi_row.assignments = count;
        cvi_row.naive_evaluations = stirling2(n, k).ok().map(|s| s as u64);
        cvi_row.mean_normalized_value = mean(
            runs.iter()
                .map(|(c, _)| c.values.euclidean_norm() / divisor),
        );
        vi_row.mean_normalized_value = mean(
            runs.iter()
                .map(|(_, v)| v.values.euclidean_norm() / divisor),
        );
        cvi_row.bound_lower = Some(cvi_row.mean_normalized_value);
        cvi_row.bound_upper = Some(mean(runs.iter().map(|(c, _)| {
            let up = c.residual.unwrap_or(0.0) / (1.0 - gamma);
            c.values
                .iter()
                .map(|v| (v + up) * (v + up))
                .sum::<f64>()
                .sqrt()
                / divisor
        })));
        cvi_row.mean_iterations = mean(runs.iter().map(|(c, _)| c.iterations as f64));
        vi_row.mean_iterations = mean(runs.iter().map(|(_, v)| v.iterations as f64));
        cvi_row.mean_wall_ms = mean(runs.iter().map(|(c, _)| c.wall_ms));
        vi_row.mean_wall_ms = mean(runs.iter().map(|(_, v)| v.wall_ms));
        cvi_row.vi_cvi_time_ratio = Some(vi_row.mean_wall_ms / cvi_row.mean_wall_ms);
        for (c, v) in &runs {
            let gap = v.values.sup_distance(&c.values);
            max_cvi_vi_gap = max_cvi_vi_gap.max(gap);
            total += 1;
            // V_vi is itself only within its own certificate of the optimum
            let vi_err = v.residual.map_or(0.0, |d| d / (1.0 - gamma));
            if let Some(delta) = c.residual {
                if BoundCertificate::from_residual(delta, gamma).contains(gap, vi_err + 1e-12) {
                    inside += 1;
                }
            }
        }
        rows.push(cvi_row);
        rows.push(vi_row);
    }

    let mut checks = vec![Check {
        name: "optimal value inside every CVI certificate band".into(),
        pass: inside == total,
        detail: format!("{inside}/{total} clusterings"),
    }];
    if separable {
        checks.push(Check {
            name: "CVI equals VI".into(),
            pass: max_cvi_vi_gap <= 1e-6,
            detail: format!("max ||V_cvi - V_vi||_inf = {max_cvi_vi_gap:.3e}"),
        });
    }
    Ok(ExperimentReport {
        experiment: if separable { "fig-sep" } else { "fig-nonsep" }.into(),
        seed: args.seed,
        agents: n,
        norm: NORM.into(),
        normalization: vec![("optimal value at C = N".into(), divisor)],
        rows,
        checks,
    })
}

fn greedy_clustering(args: &ReproArgs) -> Result<ExperimentReport> {
    let n = args.agents.unwrap_or(10);
    let model =
        random_timdp(&RandomSpec::uniform(args.seed, n, 2, 3).with_scope(KernelScope::AgentLocal))?;
    let options = ScoreOptions::new(
        backend(args.backend.unwrap_or(BackendArg::Decomposed)),
        SolverConfig::default().with_epsilon(args.epsilon),
    );
    let trace = gsa_r(&model, n, &options)?;
    let values: Vec<f64> = trace
        .steps
        .iter()
        .map(|s| {
            Ok(assignment_value(&model, &s.assignment, &options)?
                .values
                .euclidean_norm())
        })
        .collect::<Result<_>>()?;
    let divisor = *values.last().expect("nonempty trace");
    let mut cumulative = 0;
    let mut rows = Vec::new();
    for (step, v) in trace.steps.iter().zip(&values) {
        cumulative += step.candidates_evaluated;
        let mut row = ExperimentRow::new(step.k, "gsa-r");
        row.mean_normalized_value = v / divisor;
        row.mean_wall_ms = step.wall_ms;
        row.evaluations_counted = Some(cumulative);
        row.naive_evaluations = stirling2(n, step.k).ok().map(|s| s as u64);
        row.assignment = Some(step.assignment.rgs_string());
        rows.push(row);
    }
    // each cluster's fixed point is within epsilon / (1 - gamma) of its limit
    let tol = n as f64 * args.epsilon / (1.0 - model.gamma());
    let monotone = trace.scores().windows(2).all(|w| w[1] >= w[0] - tol);
    let gains: Vec<f64> = trace.steps.iter().filter_map(|s| s.gain).collect();
    let diminishing = gains.windows(2).all(|w| w[1] <= w[0] + 2.0 * tol);
    let mut checks = vec![
        Check {
            name: "scores nondecreasing in C".into(),
            pass: monotone,
            detail: format!("{:?}", trace.scores()),
        },
        Check {
            name: "score gains nonincreasing in C".into(),
            pass: diminishing,
            detail: format!("{gains:?}"),
        },
    ];
    let every: u128 = (1..=n)
        .map(|k| stirling2(n, k))
        .sum::<timdp_core::Result<u128>>()?;
    let greedy = trace.total_candidates();
    checks.push(Check {
        name: "greedy scores fewer clusterings than full enumeration".into(),
        pass: u128::from(greedy) < every,
        detail: format!("{greedy} vs {every}"),
    });
    Ok(ExperimentReport {
        experiment: "fig-gc".into(),
        seed: args.seed,
        agents: n,
        norm: NORM.into(),
        normalization: vec![("value at C = N".into(), divisor)],
        rows,
        checks,
    })
}

fn channel(args: &ReproArgs) -> Result<ExperimentReport> {
    let options = ScoreOptions::new(
        backend(args.backend.unwrap_or(BackendArg::Exact)),
        SolverConfig::default().with_epsilon(args.epsilon),
    );
    let cvi_config = SolverConfig::default().with_epsilon(args.epsilon);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut normalization = Vec::new();
    for scenario in [Scenario::MaxRevenue, Scenario::DesiredConfiguration] {
        let name = match scenario {
            Scenario::MaxRevenue => "max-revenue",
            Scenario::DesiredConfiguration => "desired-configuration",
        };
        let model = channel_instance(args.seed, scenario)?;
        let trace = gsa_r(&model, CHANNEL_AGENTS, &options)?;
        let mut values = Vec::new();
        let mut cvi_runs = Vec::new();
        for step in &trace.steps {
            let start = Instant::now();
            let scored = assignment_value(&model, &step.assignment, &options)?;
            values.push((
                scored.values.euclidean_norm(),
                start.elapsed().as_secs_f64() * 1e3,
            ));
            let m = model.with_clustering(step.assignment.clone())?;
            cvi_runs.push(solve_cvi(&m, &cvi_config)?);
        }
        let divisor = values.last().expect("nonempty trace").0;
        normalization.push((name.to_string(), divisor));
        let mut cumulative = 0;
        let mut normalized = Vec::new();
        for ((step, (v, ms)), c) in trace.steps.iter().zip(&values).zip(&cvi_runs) {
            cumulative += step.candidates_evaluated;
            let mut row = ExperimentRow::new(step.k, backend_label(&options));
            row.scenario = Some(name.into());
            row.mean_normalized_value = v / divisor;
            row.mean_wall_ms = *ms;
            row.evaluations_counted = Some(cumulative);
            row.naive_evaluations = stirling2(CHANNEL_AGENTS, step.k).ok().map(|s| s as u64);
            row.assignment = Some(step.assignment.rgs_string());
            normalized.push(row.mean_normalized_value);
            rows.push(row);

            let mut row = ExperimentRow::new(step.k, "cvi");
            row.scenario = Some(name.into());
            row.mean_normalized_value = c.values.euclidean_norm() / divisor;
            row.mean_iterations = c.iterations as f64;
            row.mean_wall_ms = c.wall_ms;
            row.assignment = Some(step.assignment.rgs_string());
            if let Some(delta) = c.residual {
                let up = delta / (1.0 - model.gamma());
                row.bound_lower = Some(row.mean_normalized_value);
                row.bound_upper = Some(
                    c.values
                        .iter()
                        .map(|v| (v + up) * (v + up))
                        .sum::<f64>()
                        .sqrt()
                        / divisor,
                );
            }
            rows.push(row);
        }
        // Euclidean norm of a per-state error of epsilon / (1 - gamma)
        let tol = (model.states() as f64).sqrt() * args.epsilon / (1.0 - model.gamma()) / divisor;
        let shown: Vec<String> = normalized.iter().map(|v| format!("{v:.4}")).collect();
        checks.push(Check {
            name: format!("{name}: value nondecreasing in C"),
            pass: normalized.windows(2).all(|w| w[1] >= w[0] - tol),
            detail: shown.join(", "),
        });
        checks.push(Check {
            name: format!("{name}: normalized value at C = 3 >= 0.99"),
            pass: normalized[2] >= 0.99,
            detail: format!("{:.4}", normalized[2]),
        });
        checks.push(Check {
            name: format!("{name}: normalized value at C = 6 is 1"),
            pass: normalized[CHANNEL_AGENTS - 1] == 1.0,
            detail: format!("{}", normalized[CHANNEL_AGENTS - 1]),
        });
    }
    Ok(ExperimentReport {
        experiment: "channel".into(),
        seed: args.seed,
        agents: CHANNEL_AGENTS,
        norm: NORM.into(),
        normalization,
        rows,
        checks,
    })
}

fn backend_label(options: &ScoreOptions) -> &'static str {
    match options.backend {
        ClusterValueBackend::FullSolve => "full",
        ClusterValueBackend::Decomposed => "decomposed",
        ClusterValueBackend::Exact => "exact",
    }
}

pub fn run_experiment(args: &ReproArgs) -> Result<ExperimentReport> {
    match args.experiment {
        Experiment::FigNonsep => all_clusterings(args, false),
        Experiment::FigSep => all_clusterings(args, true),
        Experiment::FigGc => greedy_clustering(args),
        Experiment::Channel => channel(args),
    }
}

pub fn repro(args: &ReproArgs) -> Result<()> {
    let report = run_experiment(args)?;
    create_dir(&args.out_dir)?;
    let stem = match args.experiment {
        Experiment::FigNonsep => "fig-nonsep",
        Experiment::FigSep => "fig-sep",
        Experiment::FigGc => "fig-gc",
        Experiment::Channel => "channel",
    };
    write_json(
        &args.out_dir.join(format!("{stem}.json")),
        &RunRecord::new(args, &report),
    )?;
    report.write_csv(&args.out_dir.join(format!("{stem}.csv")))?;
    for row in &report.rows {
        println!(
            "{:<22} C={:<2} {:<10} {:.6}{}",
            row.scenario.as_deref().unwrap_or(stem),
            row.clusters,
            row.solver,
            row.mean_normalized_value,
            row.vi_cvi_time_ratio
                .map_or_else(String::new, |r| format!("  vi/cvi time {r:.1}x"))
        );
    }
    for check in &report.checks {
        println!(
            "[{}] {}: {}",
            if check.pass { "ok" } else { "MISS" },
            check.name,
            check.detail
        );
    }
    Ok(())
}
