//! Small dense-vector helpers used throughout the simulator.

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Squared Euclidean norm.
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean of several equal-length vectors, accumulated in ascending index
/// order so the result does not depend on worker scheduling.
///
/// Centered around the first vector: when all inputs are bitwise identical
/// the mean is bitwise equal to them, which is what the exact post-sync
/// consensus checks rely on.
pub fn mean_centered(vs: &[&[f64]]) -> Vec<f64> {
    assert!(!vs.is_empty());
    let d = vs[0].len();
    let n = vs.len() as f64;
    let base = vs[0];
    let mut acc = vec![0.0; d];
    for v in vs {
        debug_assert_eq!(v.len(), d);
        for k in 0..d {
            acc[k] += v[k] - base[k];
        }
    }
    for k in 0..d {
        acc[k] = base[k] + acc[k] / n;
    }
    acc
}

/// Plain arithmetic mean in ascending index order.
pub fn mean_plain(vs: &[&[f64]]) -> Vec<f64> {
    assert!(!vs.is_empty());
    let d = vs[0].len();
    let n = vs.len() as f64;
    let mut acc = vec![0.0; d];
    for v in vs {
        for k in 0..d {
            acc[k] += v[k];
        }
    }
    for k in 0..d {
        acc[k] /= n;
    }
    acc
}
