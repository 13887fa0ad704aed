//! Per-step scalar trace written when a run is executed with auditing
//! enabled. This is what the `verify` subcommand consumes.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One executed step. `t` is the loop index; position/consensus fields
/// describe the state after the step, movement fields the step itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditStep {
    pub t: u64,
    pub eta: f64,
    pub alpha: f64,
    pub synced: bool,
    /// Max and min entry of the shared preconditioner in effect (1 for
    /// unpreconditioned updates).
    pub a_max: f64,
    pub a_min: f64,
    /// Largest adaptive diagonal entry for the norm certificate: the shared
    /// diagonal, or the largest per-client sqrt(v) when rates are local.
    pub a_cert_max: f64,
    /// Running max |gradient entry| observed through this step.
    pub gmax_run: f64,
    /// |x_bar_after - x_bar_before| / eta.
    pub move_over_eta: f64,
    /// |grad f(x_bar_before) - m_bar| / floor.
    pub err_over_rho: f64,
    /// |grad f(x_bar_before)|.
    pub grad_norm: f64,
    /// The composite metric of this step.
    pub mt: f64,
    /// Sum_i |(dx_i - mean dx)/eta|^2: the preconditioned estimator
    /// deviation that drives the consensus window bound.
    pub mdev_sq: f64,
    pub consensus_x: f64,
    pub consensus_m: f64,
    pub consensus_v: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditLog {
    pub algorithm: String,
    pub q: u64,
    /// Floor used in err_over_rho (rho for the shared-diagonal algorithm,
    /// 1 for unpreconditioned updates).
    pub rho_eff: f64,
    /// Floor added inside the adaptive diagonal (0 when the algorithm has
    /// none); used by the norm certificate.
    pub rho_cert: f64,
    /// Whether the run used adaptive per-coordinate rates at all.
    pub adaptive: bool,
    pub seed: u64,
    pub steps: Vec<AuditStep>,
}

impl AuditLog {
    pub fn save(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| SimError::Parse(format!("audit serialization: {e}")))?;
        std::fs::write(path, body)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)?;
        serde_json::from_str(&body).map_err(|e| SimError::Parse(format!("audit parse: {e}")))
    }
}
