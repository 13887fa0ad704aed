//! Problem families: a finite set of per-client objectives f_1..f_N with
//! exact and minibatch gradient oracles plus measured assumption constants.

mod counterexample;
mod logistic;
mod probes;
mod quadratic;

pub use probes::{check_smoothness, estimate_zeta, zeta_at_point};

use crate::error::{invalid, Result};
use crate::rng::{RngStream, PURPOSE_PROBE};
use crate::vecmath::mean_centered;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ProblemKind {
    CounterExample1D,
    HeterogeneousQuadratic,
    SyntheticLogistic,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::CounterExample1D => "counterexample",
            ProblemKind::HeterogeneousQuadratic => "quadratic",
            ProblemKind::SyntheticLogistic => "logistic",
        }
    }
}

/// Heterogeneity bound: either a global bound on max_{i,j,x} |∇f_i - ∇f_j|,
/// or only a region-restricted empirical estimate when no global bound
/// exists (quadratics with distinct centers).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub enum ZetaBound {
    Global(f64),
    EmpiricalOnly(f64),
}

impl ZetaBound {
    pub fn value(&self) -> f64 {
        match self {
            ZetaBound::Global(z) | ZetaBound::EmpiricalOnly(z) => *z,
        }
    }
}

/// Per-gradient bound of Assumption-5 type.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub enum GradBound {
    Bounded(f64),
    UnboundedGlobally,
}

/// Measured/declared constants for the smoothness, noise, heterogeneity,
/// gradient-bound and lower-bound assumptions.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AssumptionConstants {
    /// Lipschitz constant of every per-client gradient; None = unknown.
    pub smoothness_l: Option<f64>,
    /// Intra-node stochastic gradient noise bound (std, per sample).
    pub noise_sigma: f64,
    /// Inter-node heterogeneity bound.
    pub zeta: ZetaBound,
    /// Uniform bound on per-client exact gradient norms.
    pub grad_bound: GradBound,
    /// Lower bound on the global objective; None = unknown.
    pub fstar: Option<f64>,
}

impl AssumptionConstants {
    /// key=value lines for `problem describe`.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        out.push((
            "smoothness_l".into(),
            match self.smoothness_l {
                Some(l) => format!("{l}"),
                None => "unknown".into(),
            },
        ));
        out.push(("noise_sigma".into(), format!("{}", self.noise_sigma)));
        match self.zeta {
            ZetaBound::Global(z) => out.push(("zeta".into(), format!("{z}"))),
            ZetaBound::EmpiricalOnly(z) => {
                out.push(("zeta".into(), "unbounded-globally".into()));
                out.push(("zeta_empirical".into(), format!("{z}")));
            }
        }
        out.push((
            "grad_bound_g".into(),
            match self.grad_bound {
                GradBound::Bounded(g) => format!("{g}"),
                GradBound::UnboundedGlobally => "unbounded-globally".into(),
            },
        ));
        out.push((
            "fstar".into(),
            match self.fstar {
                Some(f) => format!("{f}"),
                None => "unknown".into(),
            },
        ));
        out
    }
}

/// One drawn minibatch. `sample_ids` index the client's local dataset
/// (or name i.i.d. noise realizations for sampler-style problems);
/// `draw_tag` is the RNG stream position before the draw.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    pub client: usize,
    pub sample_ids: Vec<u64>,
    pub draw_tag: u64,
}

#[derive(Debug, Clone)]
enum ProblemData {
    CounterExample,
    Quadratic(quadratic::QuadraticData),
    Logistic(logistic::LogisticData),
}

/// An immutable problem instance. Safe to share across worker threads;
/// minibatch draws only mutate caller-owned RNG streams.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n_clients: usize,
    pub dim: usize,
    pub kind: ProblemKind,
    pub constants: AssumptionConstants,
    pub seed: u64,
    data: ProblemData,
}

impl Problem {
    fn check_point(&self, client: usize, x: &[f64]) -> Result<()> {
        if client >= self.n_clients {
            return invalid(format!(
                "client index {client} out of range (N = {})",
                self.n_clients
            ));
        }
        if x.len() != self.dim {
            return invalid(format!(
                "point has length {} but problem dimension is {}",
                x.len(),
                self.dim
            ));
        }
        Ok(())
    }

    /// Exact per-client gradient.
    pub fn grad_exact(&self, client: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(client, x)?;
        Ok(match &self.data {
            ProblemData::CounterExample => vec![counterexample::grad(client, x[0])],
            ProblemData::Quadratic(q) => q.grad(client, x),
            ProblemData::Logistic(l) => l.grad_full(client, x),
        })
    }

    /// Per-client loss.
    pub fn loss(&self, client: usize, x: &[f64]) -> Result<f64> {
        self.check_point(client, x)?;
        Ok(match &self.data {
            ProblemData::CounterExample => counterexample::loss(client, x[0]),
            ProblemData::Quadratic(q) => q.loss(client, x),
            ProblemData::Logistic(l) => l.loss(client, x),
        })
    }

    /// Global objective (1/N) Σ f_i, accumulated in client order.
    pub fn global_loss(&self, x: &[f64]) -> Result<f64> {
        self.check_point(0, x)?;
        let mut s = 0.0;
        for i in 0..self.n_clients {
            s += self.loss(i, x)?;
        }
        Ok(s / self.n_clients as f64)
    }

    /// Exact global gradient. Uses an analytic form where one exists
    /// (counter-example, quadratic); the mean-of-clients identity is what
    /// the problem invariant tests check against.
    pub fn global_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(0, x)?;
        Ok(match &self.data {
            ProblemData::CounterExample => vec![counterexample::global_grad(x[0])],
            ProblemData::Quadratic(q) => q.global_grad(x),
            ProblemData::Logistic(_) => {
                let grads: Vec<Vec<f64>> = (0..self.n_clients)
                    .map(|i| self.grad_exact(i, x))
                    .collect::<Result<_>>()?;
                let views: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
                mean_centered(&views)
            }
        })
    }

    /// Mean of per-client exact gradients, ascending client order.
    pub fn mean_client_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let grads: Vec<Vec<f64>> = (0..self.n_clients)
            .map(|i| self.grad_exact(i, x))
            .collect::<Result<_>>()?;
        let views: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
        Ok(mean_centered(&views))
    }

    /// Size of the client's local dataset, if finite. The quadratic family
    /// is a sampler (fresh noise per sample id), so it reports None.
    pub fn dataset_size(&self, client: usize) -> Option<usize> {
        match &self.data {
            ProblemData::CounterExample => Some(1),
            ProblemData::Quadratic(_) => None,
            ProblemData::Logistic(l) => Some(l.clients[client].labels.len()),
        }
    }

    /// Draw a minibatch of size `b` with replacement from the client's
    /// local data, advancing only the caller's stream.
    pub fn draw_batch(&self, client: usize, b: usize, rng: &mut RngStream) -> Result<MiniBatch> {
        if b == 0 {
            return invalid("batch size must be >= 1");
        }
        if client >= self.n_clients {
            return invalid(format!("client index {client} out of range"));
        }
        let draw_tag = rng.pos();
        let sample_ids = match self.dataset_size(client) {
            Some(n) => (0..b).map(|_| rng.index(n) as u64).collect(),
            None => (0..b).map(|_| rng.next_u64()).collect(),
        };
        Ok(MiniBatch {
            client,
            sample_ids,
            draw_tag,
        })
    }

    /// The full local dataset as one batch (each sample once). Sampler-style
    /// problems have no finite dataset; a single noise-free evaluation point
    /// is the natural full-batch analogue only when sigma = 0.
    pub fn full_batch(&self, client: usize) -> Result<MiniBatch> {
        match self.dataset_size(client) {
            Some(n) => Ok(MiniBatch {
                client,
                sample_ids: (0..n as u64).collect(),
                draw_tag: 0,
            }),
            None => invalid("full batch is undefined for sampler-style problems"),
        }
    }

    /// Minibatch stochastic gradient: mean of per-sample gradients.
    pub fn grad_minibatch(&self, client: usize, x: &[f64], batch: &MiniBatch) -> Result<Vec<f64>> {
        self.check_point(client, x)?;
        if batch.client != client {
            return invalid(format!(
                "batch belongs to client {} not {client}",
                batch.client
            ));
        }
        if batch.sample_ids.is_empty() {
            return invalid("empty minibatch");
        }
        Ok(match &self.data {
            // Deterministic problem: every sample is the whole objective.
            ProblemData::CounterExample => vec![counterexample::grad(client, x[0])],
            ProblemData::Quadratic(q) => q.grad_minibatch(self.seed, client, x, batch),
            ProblemData::Logistic(l) => l.grad_minibatch(client, x, batch),
        })
    }

    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("kind".to_string(), self.kind.name().to_string()),
            ("n_clients".to_string(), format!("{}", self.n_clients)),
            ("dim".to_string(), format!("{}", self.dim)),
            ("seed".to_string(), format!("{}", self.seed)),
        ];
        out.extend(self.constants.describe());
        out
    }

    /// Default initial iterate for runs on this problem. The divergence
    /// reproduction starts at 10; the synthetic problems start at the origin.
    pub fn default_x0(&self) -> f64 {
        match self.kind {
            ProblemKind::CounterExample1D => 10.0,
            _ => 0.0,
        }
    }
}

/// The three-client piecewise 1-D family whose naive-adaptive trajectory
/// provably drifts away from the stationary point.
pub fn make_counterexample() -> Problem {
    counterexample::make()
}

/// f_i(x) = 1/2 (x-b_i)' Q_i (x-b_i) with diagonal Q_i, entries uniform in
/// [lo, hi], centers gaussian with std `center_spread`. Stochastic gradients
/// add i.i.d. N(0, noise_sigma^2) per-sample noise per coordinate.
pub fn make_quadratic(
    n_clients: usize,
    dim: usize,
    center_spread: f64,
    curvature_range: (f64, f64),
    noise_sigma: f64,
    seed: u64,
) -> Result<Problem> {
    quadratic::make(
        n_clients,
        dim,
        center_spread,
        curvature_range,
        noise_sigma,
        seed,
    )
}

/// Quadratic instance with explicit per-client diagonals and centers.
pub fn make_quadratic_explicit(
    q_diag: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
    noise_sigma: f64,
    seed: u64,
) -> Result<Problem> {
    quadratic::make_explicit(q_diag, centers, noise_sigma, seed)
}

/// Binary l2-regularized logistic regression with gaussian features and
/// label-skew-controlled heterogeneity.
pub fn make_logistic(
    n_clients: usize,
    dim: usize,
    samples_per_client: usize,
    label_skew: f64,
    seed: u64,
) -> Result<Problem> {
    logistic::make(n_clients, dim, samples_per_client, label_skew, seed)
}

pub(crate) fn probe_stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0, PURPOSE_PROBE)
}
