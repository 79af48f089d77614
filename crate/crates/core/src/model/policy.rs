use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Deterministic stationary cluster policy: for each flat state a control
/// vector with one entry per cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Policy {
    clusters: usize,
    controls: Vec<usize>,
}

impl Policy {
    /// Policy sending control 0 to every cluster in every state.
    pub fn zeros(states: usize, clusters: usize) -> Self {
        Self::constant(states, clusters, 0)
    }

    pub fn constant(states: usize, clusters: usize, control: usize) -> Self {
        Self {
            clusters,
            controls: vec![control; states * clusters],
        }
    }

    /// Flat row-major `controls[s * clusters + c]`.
    pub fn from_flat(clusters: usize, controls: Vec<usize>) -> Result<Self> {
        if clusters == 0 || !controls.len().is_multiple_of(clusters) {
            return domain("control table length is not a multiple of the cluster count");
        }
        Ok(Self { clusters, controls })
    }

    pub fn states(&self) -> usize {
        self.controls.len() / self.clusters.max(1)
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    /// Control vector at state `s`.
    #[inline]
    pub fn at(&self, s: usize) -> &[usize] {
        &self.controls[s * self.clusters..(s + 1) * self.clusters]
    }

    #[inline]
    pub fn at_mut(&mut self, s: usize) -> &mut [usize] {
        &mut self.controls[s * self.clusters..(s + 1) * self.clusters]
    }

    pub fn flat(&self) -> &[usize] {
        &self.controls
    }

    /// Checks dimensions and control range against a model's shape.
    pub fn check(&self, states: usize, clusters: usize, actions: usize) -> Result<()> {
        if self.clusters != clusters || self.states() != states {
            return domain(format!(
                "policy is {}x{}, model needs {}x{}",
                self.states(),
                self.clusters,
                states,
                clusters
            ));
        }
        if let Some(bad) = self.controls.iter().find(|&&a| a >= actions) {
            return domain(format!("control {bad} outside 0..{actions}"));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<usize>>> for Policy {
    type Error = crate::Error;

    fn try_from(rows: Vec<Vec<usize>>) -> Result<Self> {
        let clusters = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != clusters) {
            return domain("ragged policy rows");
        }
        Self::from_flat(clusters, rows.into_iter().flatten().collect())
    }
}

impl From<Policy> for Vec<Vec<usize>> {
    fn from(p: Policy) -> Self {
        p.controls
            .chunks(p.clusters.max(1))
            .map(<[usize]>::to_vec)
            .collect()
    }
}
