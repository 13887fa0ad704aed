//! The synchronous cross-silo driver: runs local steps in lockstep, applies
//! q-periodic synchronization, accounts samples and communication rounds,
//! and records deterministic time series.

use crate::audit::{AuditLog, AuditStep};
use crate::error::{invalid, Result};
use crate::metrics;
use crate::optim::{
    self, alpha_schedule, batch_len, eta_schedule, Algorithm, ClientState, HyperParams,
    ServerState, StepStats,
};
use crate::problems::Problem;
use crate::rng::{RngStream, PURPOSE_BATCH};
use crate::vecmath::{mean_centered, norm, sub};
use rayon::prelude::*;

/// Any coordinate beyond this magnitude (or non-finite) flags the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub hp: HyperParams,
    /// Loop iterations T (the initialization step is charged separately).
    pub total_steps: u64,
    pub seed: u64,
    pub record_every: u64,
    /// Initial iterate, broadcast across coordinates; None = problem default.
    pub x0: Option<f64>,
    pub audit: bool,
    /// 1 = serial; 0 or > 1 = run per-client work on the rayon pool.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        RunConfig {
            algorithm,
            hp: HyperParams::default(),
            total_steps: 1000,
            seed: 1,
            record_every: 1,
            x0: None,
            audit: false,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps < 1 {
            return invalid("total_steps must be >= 1");
        }
        if self.record_every < 1 || self.record_every > self.total_steps {
            return invalid("record_every must lie in [1, total_steps]");
        }
        if let Some(x) = self.x0 {
            if !x.is_finite() {
                return invalid("x0 must be finite");
            }
        }
        self.hp.validate()
    }
}

/// One recorded row; mirrors the CSV columns exactly. `wall_ms` is written
/// as zero so identical configurations produce byte-identical output; real
/// timing is reported in `RunRecord::elapsed_ms`.
#[derive(Debug, Clone)]
pub struct RecordRow {
    pub t: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub metric_mt: f64,
    pub consensus_err: f64,
    pub samples: u64,
    pub comms: u64,
    pub wall_ms: u64,
}

impl PartialEq for RecordRow {
    /// Bitwise on floats so a dropped (NaN) metric compares equal to
    /// itself; this matches the byte-identical CSV contract.
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t
            && self.loss.to_bits() == other.loss.to_bits()
            && self.grad_norm.to_bits() == other.grad_norm.to_bits()
            && self.metric_mt.to_bits() == other.metric_mt.to_bits()
            && self.consensus_err.to_bits() == other.consensus_err.to_bits()
            && self.samples == other.samples
            && self.comms == other.comms
            && self.wall_ms == other.wall_ms
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub rows: Vec<RecordRow>,
    pub diverged_at: Option<u64>,
    pub final_x: Vec<f64>,
    pub elapsed_ms: u64,
    pub audit: Option<AuditLog>,
}

impl RunRecord {
    pub fn final_loss(&self) -> f64 {
        self.rows.last().map(|r| r.loss).unwrap_or(f64::INFINITY)
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.rows
            .last()
            .map(|r| r.grad_norm)
            .unwrap_or(f64::INFINITY)
    }

    /// First recorded (samples, comms) at which the gradient norm reached
    /// the threshold.
    pub fn cost_to_threshold(&self, threshold: f64) -> Option<(u64, u64)> {
        self.rows
            .iter()
            .find(|r| r.grad_norm <= threshold)
            .map(|r| (r.samples, r.comms))
    }
}

/// Per-step gradient evaluations an algorithm charges: the double evaluation
/// costs two per sample, everything else one.
pub fn step_evals(algorithm: Algorithm, problem: &Problem, hp: &HyperParams) -> u64 {
    let per_point = match algorithm {
        Algorithm::Fafed => 2,
        _ => 1,
    };
    (0..problem.n_clients)
        .map(|i| per_point * batch_len(problem, i, hp) as u64)
        .sum()
}

/// Closed-form totals: gradient evaluations and communication rounds after
/// `steps` loop iterations (one initial broadcast plus one round per sync).
pub fn sample_accounting(
    algorithm: Algorithm,
    problem: &Problem,
    hp: &HyperParams,
    steps: u64,
) -> (u64, u64) {
    let init = match algorithm {
        Algorithm::Fafed => (problem.n_clients * hp.init_batch) as u64,
        _ => 0,
    };
    let samples = init + steps * step_evals(algorithm, problem, hp);
    let comms = 1 + steps / hp.q;
    (samples, comms)
}

struct PendingRow {
    t: u64,
    loss: f64,
    grad_norm: f64,
    consensus_err: f64,
    samples: u64,
    comms: u64,
}

struct Recorder {
    rows: Vec<RecordRow>,
    pending: Option<PendingRow>,
    record_every: u64,
    total_steps: u64,
}

impl Recorder {
    fn wants(&self, t: u64) -> bool {
        t % self.record_every == 0 || t == self.total_steps
    }

    /// Complete the pending row with the metric of the step that leaves it.
    fn complete_pending(&mut self, mt: f64) {
        if let Some(p) = self.pending.take() {
            self.rows.push(RecordRow {
                t: p.t,
                loss: p.loss,
                grad_norm: p.grad_norm,
                metric_mt: mt,
                consensus_err: p.consensus_err,
                samples: p.samples,
                comms: p.comms,
                wall_ms: 0,
            });
        }
    }

    fn open(&mut self, row: PendingRow) {
        debug_assert!(self.pending.is_none());
        self.pending = Some(row);
    }

    /// The last recorded position has no outgoing step; its metric is
    /// dropped rather than extrapolated.
    fn finish(&mut self) {
        self.complete_pending(f64::NAN);
    }
}

struct Engine<'a> {
    problem: &'a Problem,
    cfg: &'a RunConfig,
    clients: Vec<ClientState>,
    server: ServerState,
    samples: u64,
    comms: u64,
    gmax_run: f64,
    audit_steps: Vec<AuditStep>,
}

impl<'a> Engine<'a> {
    fn parallel(&self) -> bool {
        self.cfg.workers != 1
    }

    fn map_clients<F>(&self, f: F) -> Result<Vec<(ClientState, StepStats)>>
    where
        F: Fn(usize, &ClientState) -> Result<(ClientState, StepStats)> + Sync,
    {
        if self.parallel() {
            self.clients
                .par_iter()
                .enumerate()
                .map(|(i, c)| f(i, c))
                .collect()
        } else {
            self.clients
                .iter()
                .enumerate()
                .map(|(i, c)| f(i, c))
                .collect()
        }
    }

    fn positions_mean(&self) -> Vec<f64> {
        let views: Vec<&[f64]> = self.clients.iter().map(|c| c.x.as_slice()).collect();
        mean_centered(&views)
    }

    fn state_is_finite(&self) -> bool {
        self.clients.iter().all(|c| {
            c.x.iter()
                .chain(c.v.iter())
                .chain(c.m.iter())
                .all(|v| v.is_finite() && v.abs() <= DIVERGENCE_LIMIT)
        })
    }

    /// Executes loop iteration `t`, returning the step's audit scalars.
    fn advance(&mut self, t: u64) -> Result<AuditStep> {
        self.server.t = t;
        let hp = &self.cfg.hp;
        let algo = self.cfg.algorithm;
        let x_before: Vec<Vec<f64>> = self.clients.iter().map(|c| c.x.clone()).collect();
        let pos_before = self.positions_mean();
        let grad_before = self.problem.global_grad(&pos_before)?;
        let eta = eta_schedule(t, hp);
        let synced = t % hp.q == 0;

        let mut step_gmax: f64 = 0.0;
        let mut step_evals: u64 = 0;

        match algo {
            Algorithm::Fafed => {
                let computed = self.map_clients(|i, c| {
                    optim::fafed_compute_mv(c, &self.server, self.problem, hp, i)
                })?;
                let mut next: Vec<ClientState> = Vec::with_capacity(computed.len());
                for (c, s) in computed {
                    step_gmax = step_gmax.max(s.gmax_abs);
                    step_evals += s.evals;
                    next.push(c);
                }
                if synced {
                    let (clients, server) = optim::fafed_sync(next, &self.server, hp)?;
                    self.clients = clients;
                    self.server = server;
                    self.comms += 1;
                } else {
                    for c in &mut next {
                        optim::fafed_apply_move(c, &self.server, hp);
                    }
                    self.clients = next;
                }
            }
            Algorithm::NaiveAdaptive | Algorithm::FedAvg => {
                let stepper = |i: usize, c: &ClientState| match algo {
                    Algorithm::NaiveAdaptive => {
                        optim::naive_adaptive_local(c, &self.server, self.problem, hp, i)
                    }
                    _ => optim::fedavg_local_step(c, &self.server, self.problem, hp, i),
                };
                let stepped = self.map_clients(stepper)?;
                let mut next: Vec<ClientState> = Vec::with_capacity(stepped.len());
                for (c, s) in stepped {
                    step_gmax = step_gmax.max(s.gmax_abs);
                    step_evals += s.evals;
                    next.push(c);
                }
                if synced {
                    let views: Vec<&[f64]> = next.iter().map(|c| c.x.as_slice()).collect();
                    let mean = mean_centered(&views);
                    for c in &mut next {
                        c.x = mean.clone();
                    }
                    self.server.x_bar = mean;
                    self.server.sync_count += 1;
                    self.comms += 1;
                }
                self.clients = next;
            }
            Algorithm::FedAdam => {
                let stepped = self.map_clients(|i, c| {
                    optim::fedadam_local_step(c, &self.server, self.problem, hp, i)
                })?;
                let mut next: Vec<ClientState> = Vec::with_capacity(stepped.len());
                for (c, s) in stepped {
                    step_gmax = step_gmax.max(s.gmax_abs);
                    step_evals += s.evals;
                    next.push(c);
                }
                if synced {
                    let (clients, server) = optim::fedadam_server_update(next, &self.server, hp)?;
                    self.clients = clients;
                    self.server = server;
                    self.comms += 1;
                } else {
                    self.clients = next;
                }
            }
        }

        self.samples += step_evals;
        self.gmax_run = self.gmax_run.max(step_gmax);

        let pos_after = self.positions_mean();
        let dx_bar = sub(&pos_after, &pos_before);

        // Estimator view of this step: the shared-diagonal algorithm exposes
        // its true averaged estimator and floor; unpreconditioned updates
        // are described by the realized mean direction with identity
        // preconditioner, which satisfies the chain premise by construction.
        let (m_bar, rho_eff, a_max, a_min) = match algo {
            Algorithm::Fafed => {
                let ms: Vec<&[f64]> = self.clients.iter().map(|c| c.m.as_slice()).collect();
                let m_bar = mean_centered(&ms);
                let a_max = self
                    .server
                    .adaptive_diag
                    .iter()
                    .fold(0.0f64, |m, &v| m.max(v));
                let a_min = self
                    .server
                    .adaptive_diag
                    .iter()
                    .fold(f64::INFINITY, |m, &v| m.min(v));
                (m_bar, hp.rho, a_max, a_min)
            }
            _ => {
                let m_bar: Vec<f64> = dx_bar.iter().map(|d| -d / eta).collect();
                (m_bar, 1.0, 1.0, 1.0)
            }
        };

        let move_over_eta = norm(&dx_bar) / eta;
        let err_over_rho = metrics::grad_err_over(&grad_before, &m_bar, rho_eff);
        let mt = metrics::metric_mt(&pos_after, &pos_before, &grad_before, &m_bar, eta, rho_eff)?;

        // Preconditioned estimator deviations, measured from the realized
        // per-client movements.
        let dxs: Vec<Vec<f64>> = self
            .clients
            .iter()
            .zip(&x_before)
            .map(|(c, xb)| {
                c.x.iter()
                    .zip(xb)
                    .map(|(a, b)| (a - b) / eta)
                    .collect::<Vec<f64>>()
            })
            .collect();
        let mdev_sq = metrics::sum_sq_dev_from_mean(&dxs);

        let consensus_x = {
            let xs: Vec<Vec<f64>> = self.clients.iter().map(|c| c.x.clone()).collect();
            metrics::consensus_of_states(&xs)
        };
        let (consensus_m, consensus_v) = if algo == Algorithm::Fafed {
            let ms: Vec<Vec<f64>> = self.clients.iter().map(|c| c.m.clone()).collect();
            let vs: Vec<Vec<f64>> = self.clients.iter().map(|c| c.v.clone()).collect();
            (
                metrics::consensus_of_states(&ms),
                metrics::consensus_of_states(&vs),
            )
        } else {
            (0.0, 0.0)
        };

        let a_cert_max = match algo {
            Algorithm::Fafed => a_max,
            // Per-client adaptive rates: certify the largest local diagonal.
            Algorithm::NaiveAdaptive => self
                .clients
                .iter()
                .flat_map(|c| c.v.iter())
                .fold(0.0f64, |m, &v| m.max(v.sqrt())),
            _ => 0.0,
        };

        Ok(AuditStep {
            t,
            eta,
            alpha: if algo == Algorithm::Fafed {
                alpha_schedule(t, hp)
            } else {
                1.0
            },
            synced,
            a_max,
            a_min,
            a_cert_max,
            gmax_run: self.gmax_run,
            move_over_eta,
            err_over_rho,
            grad_norm: norm(&grad_before),
            mt,
            mdev_sq,
            consensus_x,
            consensus_m,
            consensus_v,
        })
    }
}

/// Execute one configured run. Identical configurations (seed included)
/// produce bitwise-identical records regardless of worker count.
pub fn run_experiment(problem: &Problem, cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let started = std::time::Instant::now();
    let hp = &cfg.hp;
    if hp.c > 0.0 && hp.c * eta_schedule(0, hp).powi(2) > 1.0 {
        log::warn!(
            "alpha schedule clamps at 1 early on (c = {}, eta_0 = {})",
            hp.c,
            eta_schedule(0, hp)
        );
    }
    let d = problem.dim;
    let x0val = cfg.x0.unwrap_or_else(|| problem.default_x0());
    let x0 = vec![x0val; d];

    let (clients, server, init_samples, init_gmax) = match cfg.algorithm {
        Algorithm::Fafed => {
            let init = optim::fafed_init(problem, hp, cfg.seed, &x0)?;
            let samples = init.stats.evals;
            let gmax = init.stats.gmax_abs;
            (init.clients, init.server, samples, gmax)
        }
        _ => {
            let clients: Vec<ClientState> = (0..problem.n_clients)
                .map(|i| {
                    ClientState::fresh(
                        x0.clone(),
                        RngStream::new(cfg.seed, i as u64, PURPOSE_BATCH),
                    )
                })
                .collect();
            (clients, ServerState::fresh(x0.clone()), 0, 0.0)
        }
    };

    let mut eng = Engine {
        problem,
        cfg,
        clients,
        server,
        samples: init_samples,
        comms: 1,
        gmax_run: init_gmax,
        audit_steps: Vec::new(),
    };

    let mut rec = Recorder {
        rows: Vec::new(),
        pending: None,
        record_every: cfg.record_every,
        total_steps: cfg.total_steps,
    };

    let open_row = |eng: &Engine, t: u64| -> Result<PendingRow> {
        let pos = eng.positions_mean();
        let xs: Vec<Vec<f64>> = eng.clients.iter().map(|c| c.x.clone()).collect();
        Ok(PendingRow {
            t,
            loss: eng.problem.global_loss(&pos)?,
            grad_norm: norm(&eng.problem.global_grad(&pos)?),
            consensus_err: metrics::consensus_of_states(&xs),
            samples: eng.samples,
            comms: eng.comms,
        })
    };

    rec.open(open_row(&eng, 0)?);

    let mut diverged_at = None;
    for t in 1..=cfg.total_steps {
        let step = eng.advance(t)?;
        rec.complete_pending(step.mt);
        if cfg.audit {
            eng.audit_steps.push(step);
        } else {
            let _ = step;
        }
        let finite = eng.state_is_finite();
        if rec.wants(t) || !finite {
            rec.open(open_row(&eng, t)?);
        }
        if !finite {
            diverged_at = Some(t);
            break;
        }
    }
    rec.finish();

    let final_x = eng.positions_mean();
    let audit = if cfg.audit {
        Some(AuditLog {
            algorithm: cfg.algorithm.name().to_string(),
            q: hp.q,
            rho_eff: if cfg.algorithm == Algorithm::Fafed {
                hp.rho
            } else {
                1.0
            },
            rho_cert: if cfg.algorithm == Algorithm::Fafed {
                hp.rho
            } else {
                0.0
            },
            adaptive: matches!(cfg.algorithm, Algorithm::Fafed | Algorithm::NaiveAdaptive),
            seed: cfg.seed,
            steps: std::mem::take(&mut eng.audit_steps),
        })
    } else {
        None
    };

    Ok(RunRecord {
        rows: rec.rows,
        diverged_at,
        final_x,
        elapsed_ms: started.elapsed().as_millis() as u64,
        audit,
    })
}

#[derive(Debug, Clone)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GridRow {
    pub assignment: Vec<(String, f64)>,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub samples: u64,
    pub comms: u64,
    pub diverged: bool,
}

pub struct GridOutcome {
    pub best_index: usize,
    pub best_assignment: Vec<(String, f64)>,
    pub table: Vec<GridRow>,
    pub records: Vec<RunRecord>,
}

impl GridOutcome {
    pub fn best(&self) -> &RunRecord {
        &self.records[self.best_index]
    }
}

/// Apply one named hyperparameter to a run configuration. Shared between
/// the grid and the config-file parser so the two agree on names.
pub fn set_param(cfg: &mut RunConfig, name: &str, value: f64) -> Result<()> {
    let as_count = |v: f64| -> Result<u64> {
        if v < 0.0 || v.fract() != 0.0 {
            return invalid(format!("{name} must be a nonnegative integer, got {v}"));
        }
        Ok(v as u64)
    };
    match name {
        "eta" => cfg.hp.eta = value,
        "rho_hbar" => cfg.hp.rho_hbar = value,
        "rho" => cfg.hp.rho = value,
        "beta" => cfg.hp.beta = value,
        "c" => cfg.hp.c = value,
        "w" => cfg.hp.w = value,
        "q" => cfg.hp.q = as_count(value)?,
        "b" | "batch" => cfg.hp.batch = as_count(value)? as usize,
        "init_batch" => cfg.hp.init_batch = as_count(value)? as usize,
        "adam_beta1" => cfg.hp.adam_beta1 = value,
        "adam_beta2" => cfg.hp.adam_beta2 = value,
        "adam_tau" => cfg.hp.adam_tau = value,
        "adam_eta_global" => cfg.hp.adam_eta_global = value,
        "x0" => cfg.x0 = Some(value),
        "seed" => cfg.seed = as_count(value)?,
        "t" | "total_steps" => cfg.total_steps = as_count(value)?,
        "record_every" => cfg.record_every = as_count(value)?,
        other => return invalid(format!("unknown hyperparameter '{other}'")),
    }
    Ok(())
}

/// Run every grid combination and keep the lowest final global loss.
/// Combinations are enumerated with axes sorted by name and values in their
/// given order; ties keep the earliest combination in that order.
pub fn grid_search(problem: &Problem, base: &RunConfig, axes: &[GridAxis]) -> Result<GridOutcome> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return invalid("grid must have at least one axis with at least one value");
    }
    let mut axes: Vec<GridAxis> = axes.to_vec();
    axes.sort_by(|a, b| a.name.cmp(&b.name));

    let mut combos: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(combos.len() * axis.values.len());
        for combo in &combos {
            for &v in &axis.values {
                let mut c = combo.clone();
                c.push((axis.name.clone(), v));
                next.push(c);
            }
        }
        combos = next;
    }

    let run_one = |assignment: &Vec<(String, f64)>| -> Result<(RunRecord, GridRow)> {
        let mut cfg = base.clone();
        for (name, value) in assignment {
            set_param(&mut cfg, name, *value)?;
        }
        let record = run_experiment(problem, &cfg)?;
        let row = GridRow {
            assignment: assignment.clone(),
            final_loss: if record.diverged_at.is_some() {
                f64::INFINITY
            } else {
                record.final_loss()
            },
            final_grad_norm: record.final_grad_norm(),
            samples: record.rows.last().map(|r| r.samples).unwrap_or(0),
            comms: record.rows.last().map(|r| r.comms).unwrap_or(0),
            diverged: record.diverged_at.is_some(),
        };
        Ok((record, row))
    };

    let results: Vec<(RunRecord, GridRow)> = if base.workers != 1 {
        combos.par_iter().map(run_one).collect::<Result<Vec<_>>>()?
    } else {
        combos.iter().map(run_one).collect::<Result<Vec<_>>>()?
    };

    let mut best_idx = 0;
    for (i, (_, row)) in results.iter().enumerate() {
        if row.final_loss < results[best_idx].1.final_loss {
            best_idx = i;
        }
    }
    let table: Vec<GridRow> = results.iter().map(|(_, r)| r.clone()).collect();
    let best_assignment = table[best_idx].assignment.clone();
    let records: Vec<RunRecord> = results.into_iter().map(|(r, _)| r).collect();
    Ok(GridOutcome {
        best_index: best_idx,
        best_assignment,
        table,
        records,
    })
}

#[cfg(test)]
mod tests;
