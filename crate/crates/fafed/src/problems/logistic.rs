//! Synthetic binary logistic regression with label-skew heterogeneity.
//!
//! f_i(x) = (1/n) Σ_s log(1 + exp(-y_s a_s'x)) + (reg/2) |x|^2, y in {-1,+1}.
//!
//! label_skew = 0 clones one dataset to every client (the only way the
//! heterogeneity estimate is exactly zero); label_skew = 1 forces each
//! client to a single class, alternating by client index. Between the two,
//! each sample's label is replaced by the client's class with probability
//! equal to the skew.

use super::{
    AssumptionConstants, GradBound, MiniBatch, Problem, ProblemData, ProblemKind, ZetaBound,
};
use crate::error::{invalid, Result};
use crate::rng::{RngStream, PURPOSE_DATA};

pub(super) const REGULARIZATION: f64 = 1e-4;
/// Radius of the region over which the reported gradient bound is certified
/// (the regularizer makes gradients grow linearly outside any ball).
const GRAD_BOUND_RADIUS: f64 = 100.0;

#[derive(Debug, Clone)]
pub(super) struct LogisticClient {
    /// Row-major features, one row per sample.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(super) struct LogisticData {
    pub clients: Vec<LogisticClient>,
    pub reg: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticData {
    fn margin(c: &LogisticClient, s: usize, x: &[f64]) -> f64 {
        let a = &c.features[s];
        let mut z = 0.0;
        for k in 0..x.len() {
            z += a[k] * x[k];
        }
        c.labels[s] * z
    }

    pub fn loss(&self, client: usize, x: &[f64]) -> f64 {
        let c = &self.clients[client];
        let n = c.labels.len() as f64;
        let mut s = 0.0;
        for i in 0..c.labels.len() {
            s += log1p_exp(-Self::margin(c, i, x));
        }
        let reg: f64 = x.iter().map(|v| v * v).sum();
        s / n + 0.5 * self.reg * reg
    }

    fn grad_over(&self, client: usize, x: &[f64], ids: &[u64]) -> Vec<f64> {
        let c = &self.clients[client];
        let d = x.len();
        let mut g = vec![0.0; d];
        for &id in ids {
            let s = id as usize;
            // d/dx log(1+exp(-y a'x)) = -sigmoid(-y a'x) y a
            let w = -sigmoid(-Self::margin(c, s, x)) * c.labels[s];
            let a = &c.features[s];
            for k in 0..d {
                g[k] += w * a[k];
            }
        }
        let n = ids.len() as f64;
        for k in 0..d {
            g[k] = g[k] / n + self.reg * x[k];
        }
        g
    }

    pub fn grad_full(&self, client: usize, x: &[f64]) -> Vec<f64> {
        let ids: Vec<u64> = (0..self.clients[client].labels.len() as u64).collect();
        self.grad_over(client, x, &ids)
    }

    pub fn grad_minibatch(&self, client: usize, x: &[f64], batch: &MiniBatch) -> Vec<f64> {
        self.grad_over(client, x, &batch.sample_ids)
    }
}

pub(super) fn make(
    n_clients: usize,
    dim: usize,
    samples_per_client: usize,
    label_skew: f64,
    seed: u64,
) -> Result<Problem> {
    if n_clients == 0 || dim == 0 {
        return invalid("n_clients and dim must be >= 1");
    }
    if samples_per_client == 0 {
        return invalid("samples_per_client must be >= 1");
    }
    if !(0.0..=1.0).contains(&label_skew) {
        return invalid("label_skew must lie in [0, 1]");
    }

    // Ground-truth separator shared by every client's label model.
    let mut ws = RngStream::new(seed, u64::MAX, PURPOSE_DATA);
    let scale = 1.0 / (dim as f64).sqrt();
    let w_true: Vec<f64> = (0..dim).map(|_| ws.normal() * scale).collect();

    let gen_client = |client: u64, class: f64| -> LogisticClient {
        let mut s = RngStream::new(seed, client, PURPOSE_DATA);
        let mut features = Vec::with_capacity(samples_per_client);
        let mut labels = Vec::with_capacity(samples_per_client);
        for _ in 0..samples_per_client {
            let a: Vec<f64> = (0..dim).map(|_| s.normal()).collect();
            let z: f64 = a.iter().zip(&w_true).map(|(ai, wi)| ai * wi).sum();
            let u = s.uniform();
            let model_label = if u < sigmoid(3.0 * z) { 1.0 } else { -1.0 };
            let y = if s.uniform() < label_skew {
                class
            } else {
                model_label
            };
            features.push(a);
            labels.push(y);
        }
        LogisticClient { features, labels }
    };

    let clients: Vec<LogisticClient> = if label_skew == 0.0 {
        let one = gen_client(0, 1.0);
        vec![one; n_clients]
    } else {
        (0..n_clients)
            .map(|i| gen_client(i as u64, if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect()
    };

    let max_feature_norm = clients
        .iter()
        .flat_map(|c| c.features.iter())
        .map(|a| a.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    let data = LogisticData {
        clients,
        reg: REGULARIZATION,
    };

    // Per-sample logistic gradients are bounded by |a|; a pair of client
    // gradients can differ by at most twice that (the regularizer terms
    // cancel). Smoothness: hessian <= (1/4)aa' + reg I.
    let constants = AssumptionConstants {
        smoothness_l: Some(0.25 * max_feature_norm * max_feature_norm + REGULARIZATION),
        noise_sigma: 2.0 * max_feature_norm,
        zeta: if label_skew == 0.0 || n_clients == 1 {
            ZetaBound::Global(0.0)
        } else {
            ZetaBound::Global(2.0 * max_feature_norm)
        },
        grad_bound: GradBound::Bounded(max_feature_norm + REGULARIZATION * GRAD_BOUND_RADIUS),
        fstar: None,
    };

    Ok(Problem {
        n_clients,
        dim,
        kind: ProblemKind::SyntheticLogistic,
        constants,
        seed,
        data: ProblemData::Logistic(data),
    })
}
