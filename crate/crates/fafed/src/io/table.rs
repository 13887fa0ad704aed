//! Plain-text comparison tables over recorded runs.

use crate::engine::RecordRow;
use crate::error::{invalid, Result};
use std::path::Path;

/// Per-run summary: final loss, final gradient norm, and the sample and
/// communication cost of first reaching a gradient-norm threshold ("n/a"
/// when never reached). The threshold must be positive and finite.
pub fn compare_runs(runs: &[(String, Vec<RecordRow>)], threshold: f64) -> Result<String> {
    if threshold.is_nan() || threshold <= 0.0 || threshold.is_infinite() {
        return invalid("threshold must be a positive finite number");
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:>14} {:>14} {:>14} {:>10}\n",
        "run", "final_loss", "final_grad", "samples@thr", "comms@thr"
    ));
    for (name, rows) in runs {
        let last = rows
            .last()
            .ok_or_else(|| crate::error::SimError::InvalidArgument("empty run".into()))?;
        let hit = rows.iter().find(|r| r.grad_norm <= threshold);
        let (s, c) = match hit {
            Some(r) => (r.samples.to_string(), r.comms.to_string()),
            None => ("n/a".to_string(), "n/a".to_string()),
        };
        out.push_str(&format!(
            "{:<24} {:>14.6e} {:>14.6e} {:>14} {:>10}\n",
            name, last.loss, last.grad_norm, s, c
        ));
    }
    Ok(out)
}

/// Read the named CSVs and compare them; labels are the file stems.
pub fn compare_csv_files(paths: &[std::path::PathBuf], threshold: f64) -> Result<String> {
    let mut runs = Vec::new();
    for p in paths {
        let rows = super::csv::load(p)?;
        runs.push((stem_of(p), rows));
    }
    compare_runs(&runs, threshold)
}

pub fn stem_of(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| p.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(grad0: f64) -> Vec<RecordRow> {
        (0..5u64)
            .map(|t| RecordRow {
                t,
                loss: 1.0 - 0.1 * t as f64,
                grad_norm: grad0 / (t + 1) as f64,
                metric_mt: 0.0,
                consensus_err: 0.0,
                samples: 10 * t,
                comms: t + 1,
                wall_ms: 0,
            })
            .collect()
    }

    #[test]
    fn identical_runs_identical_rows() {
        let runs = vec![("a".to_string(), rows(1.0)), ("b".to_string(), rows(1.0))];
        let table = compare_runs(&runs, 0.5).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].replace("a", "_"), lines[2].replace("b", "_"));
    }

    #[test]
    fn unreached_threshold_prints_na() {
        let runs = vec![("slow".to_string(), rows(100.0))];
        let table = compare_runs(&runs, 1e-6).unwrap();
        assert!(table.contains("n/a"));
    }

    #[test]
    fn threshold_must_be_positive_and_finite() {
        let runs = vec![("a".to_string(), rows(1.0))];
        assert!(compare_runs(&runs, 0.0).is_err());
        assert!(compare_runs(&runs, -1.0).is_err());
        assert!(compare_runs(&runs, f64::INFINITY).is_err());
    }
}
