use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BoundCertificate, CviSchedule};
use crate::error::Result;
use crate::model::{ClusterAssignment, Policy};
use crate::value::ValueVector;

/// One sweep of a solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// 1-based sweep counter.
    pub iteration: usize,
    /// Cluster updated by this sweep; `None` for a full Bellman sweep.
    pub cluster: Option<usize>,
    /// `||V_k - V_{k-1}||_inf`
    pub sup_delta: f64,
    /// `min_s (V_k - V_{k-1})(s)`; nonnegative for monotone solvers.
    pub min_increment: f64,
    /// `max_s V_k(s)`
    pub max_value: f64,
    /// Wall time of this sweep.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub epsilon: f64,
    pub gamma: f64,
    pub clustering: ClusterAssignment,
    pub values: ValueVector,
    pub policy: Policy,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<CviSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundCertificate>,
    /// Measured `||V - V*||_inf` for approximate solvers, when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_gap: Option<f64>,
}

impl SolveReport {
    pub fn sup_deltas(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.sup_delta).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trace_csv(&self.trace, out)
    }
}

/// Columns: `iteration, cluster, sup_delta, wall_ms`; a full sweep is
/// written as cluster `FULL`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "cluster", "sup_delta", "wall_ms"])?;
    for row in trace {
        let cluster = row
            .cluster
            .map_or_else(|| "FULL".to_string(), |c| c.to_string());
        w.write_record([
            row.iteration.to_string(),
            cluster,
            format!("{:e}", row.sup_delta),
            format!("{:.3}", row.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Accumulates trace rows while a solver runs.
pub(crate) struct Tracer {
    pub rows: Vec<TraceRow>,
}

impl Tracer {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// Record a sweep from `old` to `new` and return its sup delta.
    pub fn record(
        &mut self,
        cluster: Option<usize>,
        old: &[f64],
        new: &[f64],
        wall_ms: f64,
    ) -> f64 {
        let mut sup: f64 = 0.0;
        let mut min_inc = f64::INFINITY;
        let mut max_value = f64::NEG_INFINITY;
        for (&o, &n) in old.iter().zip(new) {
            let d = n - o;
            sup = sup.max(d.abs());
            min_inc = min_inc.min(d);
            max_value = max_value.max(n);
        }
        self.rows.push(TraceRow {
            iteration: self.rows.len() + 1,
            cluster,
            sup_delta: sup,
            min_increment: min_inc,
            max_value,
            wall_ms,
        });
        sup
    }

    /// Largest sup delta among the last `window` rows.
    pub fn window_max(&self, window: usize) -> f64 {
        self.rows[self.rows.len().saturating_sub(window)..]
            .iter()
            .map(|r| r.sup_delta)
            .fold(0.0, f64::max)
    }
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
