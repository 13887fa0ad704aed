//! FAFED: momentum-based variance-reduced local steps with a shared
//! adaptive diagonal that is rebuilt from the synchronized second moment
//! every q steps and frozen in between.

use super::{alpha_schedule, eta_schedule};
use super::{draw_step_batch, ClientState, HyperParams, ServerState};
use crate::error::{invalid, Result, SimError};
use crate::problems::Problem;
use crate::rng::{RngStream, PURPOSE_BATCH, PURPOSE_INIT_BATCH};
use crate::vecmath::mean_centered;

/// Per-step diagnostics the engine folds into audit records.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    /// Max |entry| over the batch gradients feeding the second moment.
    pub gmax_abs: f64,
    /// Gradient evaluations charged by this step.
    pub evals: u64,
}

/// g_now + (1 - alpha) (m_prev - g_prev_point): the variance-reduced
/// gradient estimator evaluated with shared samples at two points.
pub fn storm_estimate(
    g_now: &[f64],
    g_prev_point: &[f64],
    m_prev: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    if g_now.len() != g_prev_point.len() || g_now.len() != m_prev.len() {
        return invalid("storm_estimate: length mismatch");
    }
    if !(0.0..=1.0).contains(&alpha) {
        return invalid("storm_estimate: alpha must lie in [0, 1]");
    }
    Ok((0..g_now.len())
        .map(|k| g_now[k] + (1.0 - alpha) * (m_prev[k] - g_prev_point[k]))
        .collect())
}

/// beta v_prev + (1 - beta) g^2, entrywise.
pub fn ema_second_moment(v_prev: &[f64], g: &[f64], beta: f64) -> Result<Vec<f64>> {
    if v_prev.len() != g.len() {
        return invalid("ema_second_moment: length mismatch");
    }
    if !(beta > 0.0 && beta < 1.0) {
        return invalid("ema_second_moment: beta must lie in (0, 1)");
    }
    Ok((0..g.len())
        .map(|k| beta * v_prev[k] + (1.0 - beta) * g[k] * g[k])
        .collect())
}

/// Diagonal of A = sqrt(v_bar) + rho. Every entry is >= rho; a zero
/// second moment degenerates to exactly rho, no extra epsilon.
pub fn adaptive_matrix(v_bar: &[f64], rho: f64) -> Result<Vec<f64>> {
    if rho <= 0.0 {
        return invalid("adaptive_matrix: rho must be > 0");
    }
    let mut a = Vec::with_capacity(v_bar.len());
    for &v in v_bar {
        if v < 0.0 {
            return invalid("adaptive_matrix: negative second-moment entry");
        }
        a.push(v.sqrt() + rho);
    }
    Ok(a)
}

fn max_abs_entry(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Entrywise x - (eta / a) m. The (eta / a) * m grouping makes the alpha=1,
/// A=rho*I reduction bit-identical to SGD at rate eta/rho.
fn precond_step(x: &[f64], m: &[f64], a: &[f64], eta: f64) -> Vec<f64> {
    (0..x.len()).map(|k| x[k] - (eta / a[k]) * m[k]).collect()
}

pub struct InitOutcome {
    pub clients: Vec<ClientState>,
    pub server: ServerState,
    pub stats: StepStats,
}

/// Lines 2-3: every client evaluates one size-B batch at the shared x0;
/// the moment estimates are averaged so every client starts from the same
/// (x, m, v); then one preconditioned step is applied identically.
///
/// The printed init step omits the A_0 inverse; it is applied here so step
/// zero uses the same update rule as every later step (this only rescales
/// the first movement).
pub fn fafed_init(
    problem: &Problem,
    hp: &HyperParams,
    seed: u64,
    x0: &[f64],
) -> Result<InitOutcome> {
    hp.validate()?;
    let n = problem.n_clients;
    let mut grads = Vec::with_capacity(n);
    let mut stats = StepStats::default();
    for i in 0..n {
        let mut init_rng = RngStream::new(seed, i as u64, PURPOSE_INIT_BATCH);
        let batch = problem.draw_batch(i, hp.init_batch, &mut init_rng)?;
        let g = problem.grad_minibatch(i, x0, &batch)?;
        stats.gmax_abs = stats.gmax_abs.max(max_abs_entry(&g));
        stats.evals += batch.sample_ids.len() as u64;
        grads.push(g);
    }
    let views: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
    let m_bar = mean_centered(&views);
    let squares: Vec<Vec<f64>> = grads
        .iter()
        .map(|g| g.iter().map(|x| x * x).collect())
        .collect();
    let sq_views: Vec<&[f64]> = squares.iter().map(|g| g.as_slice()).collect();
    let v_bar = mean_centered(&sq_views);
    let a = adaptive_matrix(&v_bar, hp.rho)?;
    let eta0 = eta_schedule(0, hp);
    let x1 = precond_step(x0, &m_bar, &a, eta0);

    let clients = (0..n)
        .map(|i| ClientState {
            x: x1.clone(),
            m: m_bar.clone(),
            v: v_bar.clone(),
            prev_x: x0.to_vec(),
            rng: RngStream::new(seed, i as u64, PURPOSE_BATCH),
        })
        .collect();
    let server = ServerState {
        x_bar: x1,
        m_bar,
        v_bar,
        adaptive_diag: a,
        t: 0,
        sync_count: 0,
        aux: super::ServerAux::None,
    };
    Ok(InitOutcome {
        clients,
        server,
        stats,
    })
}

/// Lines 6-8: draw one batch, evaluate it at both the current and the
/// previous iterate, update the estimator and the second moment. Leaves x
/// in place; the move is applied by the caller (locally or inside a sync).
pub fn fafed_compute_mv(
    client: &ClientState,
    server: &ServerState,
    problem: &Problem,
    hp: &HyperParams,
    client_id: usize,
) -> Result<(ClientState, StepStats)> {
    let t = server.t;
    let alpha = alpha_schedule(t, hp);
    let mut next = client.clone();
    let batch = draw_step_batch(problem, client_id, hp, &mut next.rng)?;
    let g_now = problem.grad_minibatch(client_id, &client.x, &batch)?;
    let g_prev = problem.grad_minibatch(client_id, &client.prev_x, &batch)?;
    next.m = storm_estimate(&g_now, &g_prev, &client.m, alpha)?;
    next.v = ema_second_moment(&client.v, &g_now, hp.beta)?;
    let stats = StepStats {
        gmax_abs: max_abs_entry(&g_now),
        evals: 2 * batch.sample_ids.len() as u64,
    };
    Ok((next, stats))
}

/// Line 15: move x with the frozen shared diagonal and remember the old
/// iterate as the next double-evaluation point.
pub fn fafed_apply_move(client: &mut ClientState, server: &ServerState, hp: &HyperParams) {
    let eta = eta_schedule(server.t, hp);
    let new_x = precond_step(&client.x, &client.m, &server.adaptive_diag, eta);
    client.prev_x = std::mem::replace(&mut client.x, new_x);
}

/// Full non-sync local step: estimator and moment updates plus the move.
pub fn fafed_local_step(
    client: &ClientState,
    server: &ServerState,
    problem: &Problem,
    hp: &HyperParams,
    client_id: usize,
) -> Result<(ClientState, StepStats)> {
    let (mut next, stats) = fafed_compute_mv(client, server, problem, hp, client_id)?;
    fafed_apply_move(&mut next, server, hp);
    Ok((next, stats))
}

/// Lines 9-12 at t mod q = 0: rebuild A from the averaged second moment,
/// average the estimators, then average the positions stepped with the NEW
/// A. Afterwards every client carries bitwise-identical (x, m, v).
///
/// Expects clients whose m and v are freshly updated for step t and whose
/// x has not moved yet.
pub fn fafed_sync(
    clients: Vec<ClientState>,
    server: &ServerState,
    hp: &HyperParams,
) -> Result<(Vec<ClientState>, ServerState)> {
    if server.t % hp.q != 0 {
        return Err(SimError::ContractViolation(format!(
            "fafed_sync called at t = {} with q = {}",
            server.t, hp.q
        )));
    }
    let vs: Vec<&[f64]> = clients.iter().map(|c| c.v.as_slice()).collect();
    let v_bar = mean_centered(&vs);
    let a = adaptive_matrix(&v_bar, hp.rho)?;
    let ms: Vec<&[f64]> = clients.iter().map(|c| c.m.as_slice()).collect();
    let m_bar = mean_centered(&ms);

    let eta = eta_schedule(server.t, hp);
    let stepped: Vec<Vec<f64>> = clients
        .iter()
        .map(|c| precond_step(&c.x, &c.m, &a, eta))
        .collect();
    let stepped_views: Vec<&[f64]> = stepped.iter().map(|s| s.as_slice()).collect();
    let x_bar = mean_centered(&stepped_views);

    let new_clients = clients
        .into_iter()
        .map(|mut c| {
            c.prev_x = std::mem::replace(&mut c.x, x_bar.clone());
            c.m = m_bar.clone();
            c.v = v_bar.clone();
            c
        })
        .collect();
    let mut new_server = server.clone();
    new_server.x_bar = x_bar;
    new_server.m_bar = m_bar;
    new_server.v_bar = v_bar;
    new_server.adaptive_diag = a;
    new_server.sync_count += 1;
    Ok((new_clients, new_server))
}
