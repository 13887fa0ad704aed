//! Heterogeneous diagonal quadratics with optional per-sample gradient noise.

use super::{
    estimate_zeta, AssumptionConstants, GradBound, MiniBatch, Problem, ProblemData, ProblemKind,
    ZetaBound,
};
use crate::error::{invalid, Result};
use crate::rng::{RngStream, PURPOSE_DATA, PURPOSE_SAMPLE_NOISE};

#[derive(Debug, Clone)]
pub(super) struct QuadraticData {
    /// Diagonal of Q_i per client.
    pub q_diag: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub noise_sigma: f64,
    /// Precomputed mean_i Q_i and mean_i Q_i b_i, for the analytic global
    /// gradient route checked against the mean-of-clients route.
    q_mean: Vec<f64>,
    qb_mean: Vec<f64>,
}

impl QuadraticData {
    pub fn loss(&self, client: usize, x: &[f64]) -> f64 {
        let q = &self.q_diag[client];
        let b = &self.centers[client];
        let mut s = 0.0;
        for k in 0..x.len() {
            let d = x[k] - b[k];
            s += q[k] * d * d;
        }
        0.5 * s
    }

    pub fn grad(&self, client: usize, x: &[f64]) -> Vec<f64> {
        let q = &self.q_diag[client];
        let b = &self.centers[client];
        (0..x.len()).map(|k| q[k] * (x[k] - b[k])).collect()
    }

    pub fn global_grad(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|k| self.q_mean[k] * x[k] - self.qb_mean[k])
            .collect()
    }

    /// Exact gradient plus the mean of the batch's per-sample noise vectors.
    /// Noise is a pure function of (problem seed, client, sample id), so the
    /// same batch always yields the same stochastic gradient.
    pub fn grad_minibatch(
        &self,
        seed: u64,
        client: usize,
        x: &[f64],
        batch: &MiniBatch,
    ) -> Vec<f64> {
        let mut g = self.grad(client, x);
        if self.noise_sigma == 0.0 {
            return g;
        }
        let d = x.len();
        let mut noise = vec![0.0; d];
        let mut buf = vec![0.0; d];
        for &id in &batch.sample_ids {
            let mut s = RngStream::keyed(seed, client as u64, PURPOSE_SAMPLE_NOISE, id);
            s.fill_normal(&mut buf);
            for k in 0..d {
                noise[k] += buf[k];
            }
        }
        let scale = self.noise_sigma / batch.sample_ids.len() as f64;
        for k in 0..d {
            g[k] += noise[k] * scale;
        }
        g
    }

    /// Global minimizer: per-coordinate (Σ q_ik)^(-1) Σ q_ik b_ik.
    pub fn minimizer(&self) -> Vec<f64> {
        (0..self.q_mean.len())
            .map(|k| self.qb_mean[k] / self.q_mean[k])
            .collect()
    }
}

/// Build a quadratic instance from explicit diagonals and centers. Fixture
/// constructor for pinned configurations like Q = 1, centers {-1, +1}.
pub(super) fn make_explicit(
    q_diag: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
    noise_sigma: f64,
    seed: u64,
) -> Result<Problem> {
    if q_diag.is_empty() || q_diag.len() != centers.len() {
        return invalid("need one (Q, center) pair per client");
    }
    let n_clients = q_diag.len();
    let dim = q_diag[0].len();
    if dim == 0 || q_diag.iter().any(|q| q.len() != dim) || centers.iter().any(|b| b.len() != dim) {
        return invalid("inconsistent dimensions");
    }
    let mut hi: f64 = 0.0;
    for q in &q_diag {
        for &v in q {
            if v <= 0.0 {
                return invalid("curvatures must be positive");
            }
            hi = hi.max(v);
        }
    }
    if noise_sigma < 0.0 {
        return invalid("noise_sigma must be nonnegative");
    }

    let mut q_mean = vec![0.0; dim];
    let mut qb_mean = vec![0.0; dim];
    for i in 0..n_clients {
        for k in 0..dim {
            q_mean[k] += q_diag[i][k];
            qb_mean[k] += q_diag[i][k] * centers[i][k];
        }
    }
    for k in 0..dim {
        q_mean[k] /= n_clients as f64;
        qb_mean[k] /= n_clients as f64;
    }
    let data = QuadraticData {
        q_diag,
        centers,
        noise_sigma,
        q_mean,
        qb_mean,
    };
    let xstar = data.minimizer();
    let fstar = (0..n_clients).map(|i| data.loss(i, &xstar)).sum::<f64>() / n_clients as f64;

    let mut problem = Problem {
        n_clients,
        dim,
        kind: ProblemKind::HeterogeneousQuadratic,
        constants: AssumptionConstants {
            smoothness_l: Some(hi),
            noise_sigma,
            zeta: ZetaBound::EmpiricalOnly(0.0),
            grad_bound: GradBound::UnboundedGlobally,
            fstar: Some(fstar),
        },
        seed,
        data: ProblemData::Quadratic(data),
    };
    let zeta_emp = estimate_zeta(&problem, 16, 5.0, seed ^ 0xA5A5);
    problem.constants.zeta = if n_clients == 1 {
        ZetaBound::Global(0.0)
    } else {
        ZetaBound::EmpiricalOnly(zeta_emp)
    };
    Ok(problem)
}

pub(super) fn make(
    n_clients: usize,
    dim: usize,
    center_spread: f64,
    (lo, hi): (f64, f64),
    noise_sigma: f64,
    seed: u64,
) -> Result<Problem> {
    if n_clients == 0 || dim == 0 {
        return invalid("n_clients and dim must be >= 1");
    }
    if !(lo > 0.0 && lo <= hi) {
        return invalid("curvature range requires 0 < lo <= hi");
    }
    if center_spread < 0.0 || noise_sigma < 0.0 {
        return invalid("center_spread and noise_sigma must be nonnegative");
    }

    let mut q_diag = Vec::with_capacity(n_clients);
    let mut centers = Vec::with_capacity(n_clients);
    for i in 0..n_clients {
        let mut s = RngStream::new(seed, i as u64, PURPOSE_DATA);
        let q: Vec<f64> = (0..dim).map(|_| s.uniform_range(lo, hi)).collect();
        let b: Vec<f64> = (0..dim).map(|_| s.normal() * center_spread).collect();
        q_diag.push(q);
        centers.push(b);
    }

    let mut q_mean = vec![0.0; dim];
    let mut qb_mean = vec![0.0; dim];
    for i in 0..n_clients {
        for k in 0..dim {
            q_mean[k] += q_diag[i][k];
            qb_mean[k] += q_diag[i][k] * centers[i][k];
        }
    }
    for k in 0..dim {
        q_mean[k] /= n_clients as f64;
        qb_mean[k] /= n_clients as f64;
    }

    let data = QuadraticData {
        q_diag,
        centers,
        noise_sigma,
        q_mean,
        qb_mean,
    };

    let xstar = data.minimizer();
    let fstar = {
        let mut s = 0.0;
        for i in 0..n_clients {
            s += data.loss(i, &xstar);
        }
        s / n_clients as f64
    };

    let mut problem = Problem {
        n_clients,
        dim,
        kind: ProblemKind::HeterogeneousQuadratic,
        constants: AssumptionConstants {
            smoothness_l: Some(hi),
            noise_sigma,
            zeta: ZetaBound::EmpiricalOnly(0.0),
            grad_bound: GradBound::UnboundedGlobally,
            fstar: Some(fstar),
        },
        seed,
        data: ProblemData::Quadratic(data),
    };

    // Pairwise gradient differences grow without bound for distinct
    // centers, so only a region-restricted estimate is truthful.
    let zeta_emp = estimate_zeta(&problem, 16, 5.0, seed ^ 0xA5A5);
    problem.constants.zeta = if n_clients == 1 || (center_spread == 0.0 && lo == hi) {
        ZetaBound::Global(0.0)
    } else {
        ZetaBound::EmpiricalOnly(zeta_emp)
    };
    Ok(problem)
}
