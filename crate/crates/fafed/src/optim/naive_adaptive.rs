//! Naive adaptive FedAvg: each client keeps its own second-moment EMA and
//! divides by its own sqrt(v). The v's are never averaged, which is exactly
//! the defect the divergence example exploits.

use super::{draw_step_batch, ClientState, HyperParams, ServerState, StepStats};
use super::{ema_second_moment, eta_schedule};
use crate::error::Result;
use crate::problems::Problem;

/// One client's update for step t: refresh v, then step x by
/// -eta g / sqrt(v) entrywise. Entries with v = 0 (possible only when every
/// observed gradient there was 0) contribute a zero step.
///
/// Returns the stepped state; the engine averages the stepped positions
/// across clients at t mod q = 0.
pub fn naive_adaptive_local(
    client: &ClientState,
    server: &ServerState,
    problem: &Problem,
    hp: &HyperParams,
    client_id: usize,
) -> Result<(ClientState, StepStats)> {
    let eta = eta_schedule(server.t, hp);
    let mut next = client.clone();
    let batch = draw_step_batch(problem, client_id, hp, &mut next.rng)?;
    let g = problem.grad_minibatch(client_id, &client.x, &batch)?;
    next.v = ema_second_moment(&client.v, &g, hp.beta)?;
    let new_x: Vec<f64> = (0..g.len())
        .map(|k| {
            if next.v[k] > 0.0 {
                client.x[k] - eta * g[k] / next.v[k].sqrt()
            } else {
                client.x[k]
            }
        })
        .collect();
    next.prev_x = std::mem::replace(&mut next.x, new_x);
    let stats = StepStats {
        gmax_abs: g.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
        evals: batch.sample_ids.len() as u64,
    };
    Ok((next, stats))
}
