//! Empirical probes for the declared assumption constants.

use super::{probe_stream, Problem};
use crate::vecmath::dist;

/// Max pairwise gap of exact client gradients at one point.
pub fn zeta_at_point(problem: &Problem, x: &[f64]) -> f64 {
    let grads: Vec<Vec<f64>> = (0..problem.n_clients)
        .map(|i| problem.grad_exact(i, x).expect("probe point"))
        .collect();
    let mut best: f64 = 0.0;
    for i in 0..grads.len() {
        for j in (i + 1)..grads.len() {
            best = best.max(dist(&grads[i], &grads[j]));
        }
    }
    best
}

/// Lower bound on the heterogeneity constant over a gaussian region of the
/// given radius: max over sampled points and client pairs of |∇f_i - ∇f_j|.
pub fn estimate_zeta(problem: &Problem, n_probe_points: usize, radius: f64, seed: u64) -> f64 {
    let mut rng = probe_stream(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n_probe_points.max(1) {
        let x: Vec<f64> = (0..problem.dim).map(|_| rng.normal() * radius).collect();
        best = best.max(zeta_at_point(problem, &x));
    }
    best
}

/// Empirical Lipschitz constant of the client gradients: max over random
/// point pairs and clients of |∇f_i(x1) - ∇f_i(x2)| / |x1 - x2|.
pub fn check_smoothness(problem: &Problem, n_probe_pairs: usize, seed: u64) -> f64 {
    let mut rng = probe_stream(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n_probe_pairs.max(1) {
        let x1: Vec<f64> = (0..problem.dim).map(|_| rng.normal() * 2.0).collect();
        let x2: Vec<f64> = (0..problem.dim).map(|_| rng.normal() * 2.0).collect();
        let dx = dist(&x1, &x2);
        if dx == 0.0 {
            continue;
        }
        for i in 0..problem.n_clients {
            let g1 = problem.grad_exact(i, &x1).expect("probe point");
            let g2 = problem.grad_exact(i, &x2).expect("probe point");
            best = best.max(dist(&g1, &g2) / dx);
        }
    }
    best
}
