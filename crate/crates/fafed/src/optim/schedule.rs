//! Step-size and momentum schedules.

use super::{EtaMode, HyperParams};

/// eta_t: rho*h_bar / (w + t)^(1/3) in decaying mode, or the fixed rate.
/// Monotone nonincreasing and strictly positive.
pub fn eta_schedule(t: u64, hp: &HyperParams) -> f64 {
    match hp.eta_mode {
        EtaMode::DecayingEq5 => hp.rho_hbar / (hp.w + t as f64).cbrt(),
        EtaMode::Constant => hp.eta,
    }
}

/// alpha_t = min(1, c * eta_{t-1}^2), defined for t >= 1. The clamp keeps
/// the estimator well-defined when c eta^2 exceeds one.
pub fn alpha_schedule(t: u64, hp: &HyperParams) -> f64 {
    assert!(t >= 1, "alpha_schedule is defined for t >= 1");
    let e = eta_schedule(t - 1, hp);
    (hp.c * e * e).min(1.0)
}

/// The analysis' offset choice max(3/2, 1728 L^3 q^3 h_bar^3), exposed for
/// when L is known. Experiments just set w = 1.
pub fn theoretical_w(smoothness_l: f64, q: u64, h_bar: f64) -> f64 {
    let l3 = smoothness_l.powi(3);
    let q3 = (q as f64).powi(3);
    (1728.0 * l3 * q3 * h_bar.powi(3)).max(1.5)
}

/// c = 1/(12 L q h_bar^3 rho^2) + 60 L^2 / (b N rho^2) when the constants
/// are available.
pub fn theoretical_c(
    smoothness_l: f64,
    q: u64,
    h_bar: f64,
    rho: f64,
    batch: usize,
    n_clients: usize,
) -> f64 {
    let r2 = rho * rho;
    1.0 / (12.0 * smoothness_l * q as f64 * h_bar.powi(3) * r2)
        + 60.0 * smoothness_l * smoothness_l / (batch as f64 * n_clients as f64 * r2)
}
