use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{ClusterValueBackend, Scalarization, ScoreOptions, Scorer};
use super::partitions::{canonical_splits, SplitCandidate};
use crate::error::{domain, Result};
use crate::model::{ClusterAssignment, FactoredMdp};

/// One step of the greedy search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsaStep {
    /// Number of clusters after this step.
    pub k: usize,
    pub assignment: ClusterAssignment,
    pub score: f64,
    /// `score_k - score_{k-1}`; absent for `k = 1`.
    pub gain: Option<f64>,
    /// The split taken to reach this assignment; absent for `k = 1`.
    pub split: Option<SplitCandidate>,
    /// Split candidates scored at this step.
    pub candidates_evaluated: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsaTrace {
    pub backend: ClusterValueBackend,
    pub scalarization: Scalarization,
    pub steps: Vec<GsaStep>,
}

impl GsaTrace {
    pub fn assignments(&self) -> Vec<&ClusterAssignment> {
        self.steps.iter().map(|s| &s.assignment).collect()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.score).collect()
    }

    pub fn final_assignment(&self) -> &ClusterAssignment {
        &self.steps.last().expect("at least one step").assignment
    }

    pub fn total_candidates(&self) -> u64 {
        self.steps.iter().map(|s| s.candidates_evaluated).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns: `k, assignment_rgs_string, score, gain, candidates_evaluated, wall_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "k",
            "assignment_rgs_string",
            "score",
            "gain",
            "candidates_evaluated",
            "wall_ms",
        ])?;
        for s in &self.steps {
            w.write_record([
                s.k.to_string(),
                s.assignment.rgs_string(),
                format!("{:.12e}", s.score),
                s.gain.map_or_else(String::new, |g| format!("{g:.12e}")),
                s.candidates_evaluated.to_string(),
                format!("{:.3}", s.wall_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Greedy splitting: start from one cluster holding every agent and, until
/// `target` clusters exist, apply the 2-way split of an existing cluster with
/// the largest score gain. Ties go to the first candidate in (cluster index,
/// split mask) order.
pub fn gsa_r(model: &FactoredMdp, target: usize, options: &ScoreOptions) -> Result<GsaTrace> {
    let n = model.agents();
    if target == 0 || target > n {
        return domain(format!(
            "target cluster count must be in 1..={n}, got {target}"
        ));
    }
    let scorer = Scorer::new(model, options.clone())?;
    let start = Instant::now();
    let mut current = ClusterAssignment::single(n);
    let mut score = scorer.score(&current)?;
    let mut steps = vec![GsaStep {
        k: 1,
        assignment: current.clone(),
        score,
        gain: None,
        split: None,
        candidates_evaluated: 0,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }];
    for k in 2..=target {
        let t = Instant::now();
        let candidates: Vec<(usize, SplitCandidate)> = current
            .clusters()
            .iter()
            .enumerate()
            .flat_map(|(i, c)| canonical_splits(c).into_iter().map(move |s| (i, s)))
            .collect();
        let score_one = |(i, split): &(usize, SplitCandidate)| -> Result<(f64, ClusterAssignment)> {
            let next = current.split(*i, &split.part)?;
            Ok((scorer.score(&next)?, next))
        };
        let scored: Vec<(f64, ClusterAssignment)> =
            if options.solver.parallel && candidates.len() > 1 {
                candidates
                    .par_iter()
                    .map(score_one)
                    .collect::<Result<_>>()?
            } else {
                candidates.iter().map(score_one).collect::<Result<_>>()?
            };
        let mut best = 0;
        for (j, (s, _)) in scored.iter().enumerate() {
            if *s > scored[best].0 {
                best = j;
            }
        }
        let (next_score, next) = scored[best].clone();
        steps.push(GsaStep {
            k,
            assignment: next.clone(),
            score: next_score,
            gain: Some(next_score - score),
            split: Some(candidates[best].1.clone()),
            candidates_evaluated: candidates.len() as u64,
            wall_ms: t.elapsed().as_secs_f64() * 1e3,
        });
        current = next;
        score = next_score;
    }
    Ok(GsaTrace {
        backend: options.backend,
        scalarization: options.scalarization,
        steps,
    })
}
