//! The 1-D, three-client divergence example.
//!
//! f_1(x) = 3x^2 on |x| <= 1, 6|x| - 2 outside.
//! f_2 = f_3 = -x^2 on |x| <= 1, -2|x| + 1 outside.
//! Global: f(x) = x^2/3 inside, 2|x|/3 outside; unique stationary point 0.
//!
//! Branch conventions: the |x| <= 1 branch is authoritative at the boundary
//! for losses (f_1's printed branches disagree there: 3 vs 4); gradients at
//! |x| = 1 come from the outer branch, and sign(0) = 0 resolves the kink of
//! |x| at the origin. Both families are C^1 at |x| = 1, so only the loss
//! convention is observable.

use super::{AssumptionConstants, GradBound, Problem, ProblemData, ProblemKind, ZetaBound};

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(super) fn loss(client: usize, x: f64) -> f64 {
    let a = x.abs();
    if client == 0 {
        if a <= 1.0 {
            3.0 * x * x
        } else {
            6.0 * a - 2.0
        }
    } else if a <= 1.0 {
        -x * x
    } else {
        -2.0 * a + 1.0
    }
}

pub(super) fn grad(client: usize, x: f64) -> f64 {
    let a = x.abs();
    if client == 0 {
        if a < 1.0 {
            6.0 * x
        } else {
            6.0 * sgn(x)
        }
    } else if a < 1.0 {
        -2.0 * x
    } else {
        -2.0 * sgn(x)
    }
}

pub(super) fn global_grad(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        2.0 / 3.0 * x
    } else {
        2.0 / 3.0 * sgn(x)
    }
}

pub(super) fn make() -> Problem {
    Problem {
        n_clients: 3,
        dim: 1,
        kind: ProblemKind::CounterExample1D,
        constants: AssumptionConstants {
            smoothness_l: Some(6.0),
            noise_sigma: 0.0,
            // |f_1' - f_2'| = 8|x| inside, 8 outside; the bound is tight.
            zeta: ZetaBound::Global(8.0),
            grad_bound: GradBound::Bounded(6.0),
            fstar: Some(0.0),
        },
        seed: 0,
        data: ProblemData::CounterExample,
    }
}
