use serde::{Deserialize, Serialize};

use super::bellman::{check_values, full_sweep};
use super::SolverConfig;
use crate::error::Result;
use crate::model::FactoredMdp;

/// Two-sided bound on `||V - V*||_inf` from one Bellman residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    /// `||V - T V||_inf`
    pub residual: f64,
    /// `residual / (1 + gamma)`
    pub lower: f64,
    /// `residual / (1 - gamma)`
    pub upper: f64,
}

impl BoundCertificate {
    pub fn from_residual(residual: f64, gamma: f64) -> Self {
        Self {
            residual,
            lower: residual / (1.0 + gamma),
            upper: residual / (1.0 - gamma),
        }
    }

    /// True when `gap` lies inside `[lower - tol, upper + tol]`.
    pub fn contains(&self, gap: f64, tol: f64) -> bool {
        gap >= self.lower - tol && gap <= self.upper + tol
    }
}

/// Certificate for an arbitrary value vector. Needs one full Bellman sweep,
/// so it is subject to the action cap.
pub fn suboptimality_bounds(
    model: &FactoredMdp,
    values: &[f64],
    config: &SolverConfig,
) -> Result<BoundCertificate> {
    check_values(model, values)?;
    config.check_cap(model)?;
    let sweep = full_sweep(model, values, config);
    Ok(certificate(model, values, &sweep))
}

pub(crate) fn certificate(
    model: &FactoredMdp,
    values: &[f64],
    sweep: &[(f64, usize)],
) -> BoundCertificate {
    let residual = values
        .iter()
        .zip(sweep)
        .map(|(&v, &(tv, _))| (v - tv).abs())
        .fold(0.0, f64::max);
    BoundCertificate::from_residual(residual, model.gamma())
}
