//! Algorithm kernels expressed as pure step/sync functions over client and
//! server state. Scheduling (thread pools, recording) lives in the engine.

mod fedadam;
mod fedavg;
mod kernels;
mod naive_adaptive;
mod schedule;

pub use fedadam::{fedadam_local_step, fedadam_round, fedadam_server_update};
pub use fedavg::fedavg_local_step;
pub use kernels::{
    adaptive_matrix, ema_second_moment, fafed_apply_move, fafed_compute_mv, fafed_init,
    fafed_local_step, fafed_sync, storm_estimate, InitOutcome, StepStats,
};
pub use naive_adaptive::naive_adaptive_local;
pub use schedule::{alpha_schedule, eta_schedule, theoretical_c, theoretical_w};

use crate::error::{invalid, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Algorithm {
    Fafed,
    NaiveAdaptive,
    FedAvg,
    FedAdam,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Fafed => "fafed",
            Algorithm::NaiveAdaptive => "naive-adaptive",
            Algorithm::FedAvg => "fedavg",
            Algorithm::FedAdam => "fedadam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fafed" => Ok(Algorithm::Fafed),
            "naive-adaptive" => Ok(Algorithm::NaiveAdaptive),
            "fedavg" => Ok(Algorithm::FedAvg),
            "fedadam" => Ok(Algorithm::FedAdam),
            other => invalid(format!(
                "unknown algorithm '{other}' (expected fafed, naive-adaptive, fedavg, fedadam)"
            )),
        }
    }
}

/// Step-size mode: the (w + t)^(-1/3) decay or a fixed rate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum EtaMode {
    DecayingEq5,
    Constant,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct HyperParams {
    /// Second-moment EMA factor, in (0, 1).
    pub beta: f64,
    /// Floor added to the adaptive diagonal.
    pub rho: f64,
    /// Momentum schedule coefficient: alpha_{t+1} = min(1, c eta_t^2).
    pub c: f64,
    /// Local steps per synchronization.
    pub q: u64,
    /// Minibatch size; 0 means the full local dataset.
    pub batch: usize,
    /// Initialization batch size B.
    pub init_batch: usize,
    /// Decay offset w (>= 1 in decaying mode).
    pub w: f64,
    /// The product rho * h_bar configured directly, as in the experiments.
    pub rho_hbar: f64,
    pub eta_mode: EtaMode,
    /// Constant-mode step size; also the local SGD rate of the baselines.
    pub eta: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_tau: f64,
    pub adam_eta_global: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        // Experiment-section defaults: beta 0.9, rho 0.01, rho*h_bar 1,
        // w 1, q 10, b 5, B = b q, tau 0.01, global Adam rate 10^(-1.5).
        HyperParams {
            beta: 0.9,
            rho: 0.01,
            c: 1.0,
            q: 10,
            batch: 5,
            init_batch: 50,
            w: 1.0,
            rho_hbar: 1.0,
            eta_mode: EtaMode::DecayingEq5,
            eta: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.9,
            adam_tau: 0.01,
            adam_eta_global: 0.03162277660168379,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return invalid("beta must lie in (0, 1)");
        }
        if self.rho <= 0.0 {
            return invalid("rho must be > 0");
        }
        if self.c < 0.0 {
            return invalid("c must be >= 0");
        }
        if self.q < 1 {
            return invalid("q must be >= 1");
        }
        if self.init_batch < 1 {
            return invalid("init_batch must be >= 1");
        }
        match self.eta_mode {
            EtaMode::DecayingEq5 => {
                if self.w < 1.0 {
                    return invalid("decaying mode requires w >= 1");
                }
                if self.rho_hbar <= 0.0 {
                    return invalid("rho_hbar must be > 0");
                }
            }
            EtaMode::Constant => {
                if self.eta <= 0.0 {
                    return invalid("eta must be > 0");
                }
            }
        }
        if self.eta <= 0.0 {
            return invalid("eta must be > 0");
        }
        if !(self.adam_beta1 >= 0.0 && self.adam_beta1 < 1.0)
            || !(self.adam_beta2 >= 0.0 && self.adam_beta2 < 1.0)
        {
            return invalid("adam betas must lie in [0, 1)");
        }
        if self.adam_tau <= 0.0 || self.adam_eta_global <= 0.0 {
            return invalid("adam tau and global rate must be > 0");
        }
        Ok(())
    }
}

/// One worker node's local state.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ClientState {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    /// Entrywise nonnegative second-moment EMA.
    pub v: Vec<f64>,
    /// Previous iterate; the second evaluation point of the shared-sample
    /// double gradient.
    pub prev_x: Vec<f64>,
    pub rng: RngStream,
}

impl ClientState {
    pub fn fresh(x0: Vec<f64>, rng: RngStream) -> Self {
        let d = x0.len();
        ClientState {
            prev_x: x0.clone(),
            x: x0,
            m: vec![0.0; d],
            v: vec![0.0; d],
            rng,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub enum ServerAux {
    None,
    /// Server-side Adam moments over round deltas.
    FedAdam {
        m: Vec<f64>,
        v: Vec<f64>,
    },
}

/// Synchronized server view: averages, the shared adaptive diagonal, and
/// the step/communication counters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ServerState {
    pub x_bar: Vec<f64>,
    pub m_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
    /// Diagonal of A_t; entrywise >= rho for the adaptive algorithms.
    pub adaptive_diag: Vec<f64>,
    pub t: u64,
    pub sync_count: u64,
    pub aux: ServerAux,
}

impl ServerState {
    pub fn fresh(x0: Vec<f64>) -> Self {
        let d = x0.len();
        ServerState {
            x_bar: x0,
            m_bar: vec![0.0; d],
            v_bar: vec![0.0; d],
            adaptive_diag: vec![1.0; d],
            t: 0,
            sync_count: 0,
            aux: ServerAux::None,
        }
    }
}

/// Effective batch for a client under `hp` (0 = full local dataset).
pub(crate) fn batch_len(
    problem: &crate::problems::Problem,
    client: usize,
    hp: &HyperParams,
) -> usize {
    if hp.batch == 0 {
        problem.dataset_size(client).unwrap_or(1)
    } else {
        hp.batch
    }
}

/// Draw the step's minibatch honoring full-batch mode.
pub(crate) fn draw_step_batch(
    problem: &crate::problems::Problem,
    client: usize,
    hp: &HyperParams,
    rng: &mut RngStream,
) -> Result<crate::problems::MiniBatch> {
    if hp.batch == 0 {
        if problem.dataset_size(client).is_some() {
            return problem.full_batch(client);
        }
        // Sampler problems have no finite dataset; a single draw stands in.
        return problem.draw_batch(client, 1, rng);
    }
    problem.draw_batch(client, hp.batch, rng)
}
