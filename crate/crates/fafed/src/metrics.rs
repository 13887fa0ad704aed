//! Convergence diagnostics and the deterministic verification suite run
//! over recorded trajectories.

use crate::audit::AuditLog;
use crate::error::{invalid, Result};
use crate::optim::HyperParams;
use crate::problems::{Problem, ProblemKind};
use crate::rng::RngStream;
use crate::vecmath::{dist, norm_sq};

/// Relative tolerance for algebraic identities checked over recorded runs.
pub const ALGEBRAIC_RTOL: f64 = 1e-9;
/// Relative tolerance for finite-difference gradient agreement.
pub const FD_RTOL: f64 = 1e-5;

/// Constants the analysis derives from the assumption constants. Fields are
/// None when the underlying constant is unknown/unbounded.
#[derive(Debug, Clone, Copy)]
pub struct TheoreticalConstants {
    /// G' = 4 sqrt(sigma^2 + G^2 + rho^2).
    pub g_prime: Option<f64>,
    /// sqrt(2 (sigma^2 + G^2 + rho^2)), the adaptive-norm bound.
    pub a_norm_bound: Option<f64>,
    /// rho / (12 L q), the step-size cap the proof needs.
    pub eta_cap: Option<f64>,
}

impl TheoreticalConstants {
    pub fn compute(problem: &Problem, hp: &HyperParams) -> Self {
        let sigma = problem.constants.noise_sigma;
        let rho = hp.rho;
        let g2 = match problem.constants.grad_bound {
            crate::problems::GradBound::Bounded(g) => Some(g * g),
            crate::problems::GradBound::UnboundedGlobally => None,
        };
        let base = g2.map(|g2| sigma * sigma + g2 + rho * rho);
        TheoreticalConstants {
            g_prime: base.map(|b| 4.0 * b.sqrt()),
            a_norm_bound: base.map(|b| (2.0 * b).sqrt()),
            eta_cap: problem
                .constants
                .smoothness_l
                .map(|l| rho / (12.0 * l * hp.q as f64)),
        }
    }
}

/// The composite convergence metric:
/// |x_next - x_now|^2 / (4 eta^2) + |grad - m_bar|^2 / (4 rho^2).
pub fn metric_mt(
    x_next: &[f64],
    x_now: &[f64],
    grad_exact_at_now: &[f64],
    m_bar: &[f64],
    eta_t: f64,
    rho: f64,
) -> Result<f64> {
    if x_next.len() != x_now.len()
        || grad_exact_at_now.len() != x_now.len()
        || m_bar.len() != x_now.len()
    {
        return invalid("metric_mt: length mismatch");
    }
    if eta_t <= 0.0 || rho <= 0.0 {
        return invalid("metric_mt: eta and rho must be positive");
    }
    let move_sq = x_now
        .iter()
        .zip(x_next)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>();
    let err_sq = grad_exact_at_now
        .iter()
        .zip(m_bar)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>();
    Ok(move_sq / (4.0 * eta_t * eta_t) + err_sq / (4.0 * rho * rho))
}

/// Per-step scalars feeding the Cauchy-Schwarz chain check.
#[derive(Debug, Clone, Copy)]
pub struct ChainStep {
    /// Max entry of the shared preconditioner (1 for unpreconditioned
    /// algorithms).
    pub a_norm: f64,
    /// |x_bar movement| / eta.
    pub move_over_eta: f64,
    /// |grad - m_bar| / floor.
    pub err_over_rho: f64,
    /// |grad f(x_bar)| at the step's departure point.
    pub grad_norm: f64,
}

/// The final chain of the convergence proof, in per-run deterministic form:
/// lhs = mean_t |grad|, rhs = sqrt(mean_t a^2) * sqrt(8 mean_t M_t~), where
/// M_t~ = (move/eta)^2/4 + (err/rho)^2/4. Holds pathwise because
/// |grad| <= a * (move/eta + err/rho) pointwise plus Cauchy-Schwarz.
pub fn gradient_chain_bound(steps: &[ChainStep]) -> (f64, f64) {
    if steps.is_empty() {
        return (0.0, 0.0);
    }
    let n = steps.len() as f64;
    let lhs = steps.iter().map(|s| s.grad_norm).sum::<f64>() / n;
    let a2 = steps.iter().map(|s| s.a_norm * s.a_norm).sum::<f64>() / n;
    let mt = steps
        .iter()
        .map(|s| 0.25 * (s.move_over_eta * s.move_over_eta + s.err_over_rho * s.err_over_rho))
        .sum::<f64>()
        / n;
    (lhs, a2.sqrt() * (8.0 * mt).sqrt())
}

/// Chain inequality over every prefix of the recorded run.
pub fn gradient_chain_holds_prefixwise(steps: &[ChainStep]) -> bool {
    let mut sum_g = 0.0;
    let mut sum_a2 = 0.0;
    let mut sum_mt = 0.0;
    for (i, s) in steps.iter().enumerate() {
        sum_g += s.grad_norm;
        sum_a2 += s.a_norm * s.a_norm;
        sum_mt += 0.25 * (s.move_over_eta * s.move_over_eta + s.err_over_rho * s.err_over_rho);
        let n = (i + 1) as f64;
        let lhs = sum_g / n;
        let rhs = (sum_a2 / n).sqrt() * (8.0 * sum_mt / n).sqrt();
        if lhs > rhs * (1.0 + ALGEBRAIC_RTOL) + f64::MIN_POSITIVE {
            return false;
        }
    }
    true
}

/// Every adaptive diagonal entry is bounded by the largest gradient entry
/// seen so far plus rho: an EMA of squares never exceeds the running max
/// square. `rows` pairs each step's max diagonal entry with the running
/// max |gradient| entry.
pub fn a_norm_certificate(rows: &[(f64, f64)], rho: f64) -> bool {
    rows.iter()
        .all(|&(a_max, gmax_run)| a_max <= gmax_run + rho + ALGEBRAIC_RTOL * (1.0 + gmax_run))
}

/// Sum of squared deviations from the (centered) mean of client positions.
/// Exactly zero right after synchronizations.
pub fn consensus_error(clients: &[&[f64]]) -> f64 {
    let mean = crate::vecmath::mean_centered(clients);
    clients
        .iter()
        .map(|c| {
            c.iter()
                .zip(&mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Max relative error between exact per-client gradients and central
/// differences of the per-client losses at `point`.
pub fn finite_diff_check(problem: &Problem, point: &[f64], step: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..problem.n_clients {
        let g = problem.grad_exact(i, point)?;
        let mut x = point.to_vec();
        for k in 0..point.len() {
            let x0 = x[k];
            x[k] = x0 + step;
            let fp = problem.loss(i, &x)?;
            x[k] = x0 - step;
            let fm = problem.loss(i, &x)?;
            x[k] = x0;
            let fd = (fp - fm) / (2.0 * step);
            let err = (fd - g[k]).abs() / (1.0 + g[k].abs());
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Random probe points for a problem kind, kept away from the
/// counter-example's kinks at 0 and |x| = 1.
pub fn probe_points(problem: &Problem, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(seed, 0, crate::rng::PURPOSE_PROBE);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let x: Vec<f64> = (0..problem.dim).map(|_| rng.normal() * 2.0).collect();
        if problem.kind == ProblemKind::CounterExample1D {
            let a = x[0].abs();
            if a < 1e-3 || (a - 1.0).abs() < 1e-3 {
                continue;
            }
        }
        pts.push(x);
    }
    pts
}

/// Outcome of one verification check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// The per-run invariant suite over an audit log: adaptive floor, exact
/// post-sync consensus, the windowed consensus inequality, the chain bound
/// at every prefix, and the adaptive-norm certificate.
pub fn verify_run(audit: &AuditLog) -> Vec<CheckResult> {
    let mut out = Vec::new();

    let floor_ok = audit.steps.iter().all(|s| s.a_min >= audit.rho_eff);
    out.push(CheckResult {
        name: "adaptive-floor",
        pass: floor_ok,
        detail: format!(
            "min diagonal entry {:.3e} vs floor {:.3e}",
            audit
                .steps
                .iter()
                .map(|s| s.a_min)
                .fold(f64::INFINITY, f64::min),
            audit.rho_eff
        ),
    });

    let sync_ok = audit
        .steps
        .iter()
        .filter(|s| s.synced)
        .all(|s| s.consensus_x == 0.0 && s.consensus_m == 0.0 && s.consensus_v == 0.0);
    out.push(CheckResult {
        name: "post-sync-consensus",
        pass: sync_ok,
        detail: format!(
            "{} sync steps checked for exact zero x/m/v consensus",
            audit.steps.iter().filter(|s| s.synced).count()
        ),
    });

    let (lemma_ok, lemma_detail) = consensus_window_inequality(audit);
    out.push(CheckResult {
        name: "consensus-window-inequality",
        pass: lemma_ok,
        detail: lemma_detail,
    });

    let chain: Vec<ChainStep> = audit
        .steps
        .iter()
        .map(|s| ChainStep {
            a_norm: s.a_max,
            move_over_eta: s.move_over_eta,
            err_over_rho: s.err_over_rho,
            grad_norm: s.grad_norm,
        })
        .collect();
    let chain_ok = gradient_chain_holds_prefixwise(&chain);
    let (lhs, rhs) = gradient_chain_bound(&chain);
    out.push(CheckResult {
        name: "gradient-chain-bound",
        pass: chain_ok,
        detail: format!("final lhs {lhs:.6e} <= rhs {rhs:.6e}"),
    });

    let cert_rows: Vec<(f64, f64)> = audit
        .steps
        .iter()
        .map(|s| (s.a_cert_max, s.gmax_run))
        .collect();
    let cert_ok = if audit.adaptive {
        a_norm_certificate(&cert_rows, audit.rho_cert)
    } else {
        true
    };
    out.push(CheckResult {
        name: "adaptive-norm-certificate",
        pass: cert_ok,
        detail: if audit.adaptive {
            format!("{} steps certified", cert_rows.len())
        } else {
            "not an adaptive run; vacuous".to_string()
        },
    });

    out
}

/// Within every inner loop, the consensus error is bounded by
/// (q-1) * sum of eta_s^2 * per-step preconditioned estimator deviations
/// accumulated since the last consensus point.
fn consensus_window_inequality(audit: &AuditLog) -> (bool, String) {
    let q = audit.q as f64;
    let mut window = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for s in &audit.steps {
        window += s.eta * s.eta * s.mdev_sq;
        let lhs = s.consensus_x;
        let rhs = (q - 1.0) * window;
        if lhs > rhs * (1.0 + ALGEBRAIC_RTOL) + f64::MIN_POSITIVE {
            return (
                false,
                format!("violated at t = {}: {lhs:.6e} > {rhs:.6e}", s.t),
            );
        }
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
        // Consensus points restart the window.
        if s.consensus_x == 0.0 {
            window = 0.0;
        }
    }
    (
        true,
        format!(
            "{} steps, worst lhs/rhs ratio {:.3}",
            audit.steps.len(),
            worst_ratio
        ),
    )
}

pub fn grad_err_over(grad: &[f64], m_bar: &[f64], floor: f64) -> f64 {
    dist(grad, m_bar) / floor
}

pub fn consensus_of_states(states: &[Vec<f64>]) -> f64 {
    let views: Vec<&[f64]> = states.iter().map(|s| s.as_slice()).collect();
    consensus_error(&views)
}

pub fn sum_sq_dev_from_mean(vs: &[Vec<f64>]) -> f64 {
    let views: Vec<&[f64]> = vs.iter().map(|s| s.as_slice()).collect();
    let mean = crate::vecmath::mean_centered(&views);
    vs.iter()
        .map(|v| norm_sq(&crate::vecmath::sub(v, &mean)))
        .sum()
}
