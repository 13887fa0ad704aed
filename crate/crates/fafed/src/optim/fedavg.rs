//! FedAvg: local SGD with q-periodic model averaging.

use super::eta_schedule;
use super::{draw_step_batch, ClientState, HyperParams, ServerState, StepStats};
use crate::error::Result;
use crate::problems::Problem;

/// One local SGD step: x <- x - eta g over a fresh minibatch. The engine
/// averages the stepped positions across clients at t mod q = 0.
pub fn fedavg_local_step(
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
    let new_x: Vec<f64> = (0..g.len()).map(|k| client.x[k] - eta * g[k]).collect();
    next.prev_x = std::mem::replace(&mut next.x, new_x);
    let stats = StepStats {
        gmax_abs: g.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
        evals: batch.sample_ids.len() as u64,
    };
    Ok((next, stats))
}
