//! FedAdam: clients run q local SGD steps; the server treats the averaged
//! round delta as a pseudo-gradient and applies an Adam-style update.

use super::fedavg::fedavg_local_step;
use super::{ClientState, HyperParams, ServerAux, ServerState, StepStats};
use crate::error::{Result, SimError};
use crate::problems::Problem;
use crate::vecmath::mean_centered;

/// One local SGD step at rate `hp.eta` (identical rule to FedAvg's local
/// phase).
pub fn fedadam_local_step(
    client: &ClientState,
    server: &ServerState,
    problem: &Problem,
    hp: &HyperParams,
    client_id: usize,
) -> Result<(ClientState, StepStats)> {
    fedavg_local_step(client, server, problem, hp, client_id)
}

/// Round boundary: delta = mean_i(x_i) - x_bar_start; m <- b1 m + (1-b1) d;
/// v <- b2 v + (1-b2) d^2; x_bar <- x_bar + eta_g m / (sqrt(v) + tau);
/// broadcast the new x_bar to every client.
pub fn fedadam_server_update(
    clients: Vec<ClientState>,
    server: &ServerState,
    hp: &HyperParams,
) -> Result<(Vec<ClientState>, ServerState)> {
    let d = server.x_bar.len();
    let (mut m, mut v) = match &server.aux {
        ServerAux::FedAdam { m, v } => (m.clone(), v.clone()),
        ServerAux::None => (vec![0.0; d], vec![0.0; d]),
    };
    let xs: Vec<&[f64]> = clients.iter().map(|c| c.x.as_slice()).collect();
    let x_mean = mean_centered(&xs);
    let delta: Vec<f64> = (0..d).map(|k| x_mean[k] - server.x_bar[k]).collect();
    for k in 0..d {
        m[k] = hp.adam_beta1 * m[k] + (1.0 - hp.adam_beta1) * delta[k];
        v[k] = hp.adam_beta2 * v[k] + (1.0 - hp.adam_beta2) * delta[k] * delta[k];
    }
    let new_x: Vec<f64> = (0..d)
        .map(|k| server.x_bar[k] + hp.adam_eta_global * m[k] / (v[k].sqrt() + hp.adam_tau))
        .collect();

    let new_clients = clients
        .into_iter()
        .map(|mut c| {
            c.prev_x = std::mem::replace(&mut c.x, new_x.clone());
            c
        })
        .collect();
    let mut new_server = server.clone();
    new_server.x_bar = new_x;
    new_server.aux = ServerAux::FedAdam { m, v };
    new_server.sync_count += 1;
    Ok((new_clients, new_server))
}

/// One full communication round: q local steps on every client followed by
/// the server update and broadcast.
pub fn fedadam_round(
    mut clients: Vec<ClientState>,
    mut server: ServerState,
    problem: &Problem,
    hp: &HyperParams,
) -> Result<(Vec<ClientState>, ServerState)> {
    if hp.q < 1 {
        return Err(SimError::InvalidArgument("q must be >= 1".into()));
    }
    for _ in 0..hp.q {
        server.t += 1;
        clients = clients
            .iter()
            .enumerate()
            .map(|(i, c)| fedadam_local_step(c, &server, problem, hp, i).map(|(c, _)| c))
            .collect::<Result<_>>()?;
    }
    fedadam_server_update(clients, &server, hp)
}
