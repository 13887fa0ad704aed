//! Results CSV: fixed header, 17 significant digits, bitwise round-trip.

use crate::engine::{RecordRow, RunRecord};
use crate::error::{invalid, Result, SimError};
use std::path::Path;

pub const CSV_HEADER: &str = "t,loss,grad_norm,metric_mt,consensus_err,samples,comms,wall_ms";

/// 17 significant digits round-trips every finite f64 exactly.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|e| SimError::Parse(format!("bad float '{s}': {e}"))),
    }
}

pub fn write_rows(rows: &[RecordRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 96 + 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            fmt_f64(r.loss),
            fmt_f64(r.grad_norm),
            fmt_f64(r.metric_mt),
            fmt_f64(r.consensus_err),
            r.samples,
            r.comms,
            r.wall_ms
        ));
    }
    out
}

pub fn write_record(record: &RunRecord) -> String {
    write_rows(&record.rows)
}

pub fn save(record: &RunRecord, path: &Path) -> Result<()> {
    std::fs::write(path, write_record(record))?;
    Ok(())
}

pub fn parse(body: &str) -> Result<Vec<RecordRow>> {
    let mut lines = body.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(h) => return invalid(format!("unexpected CSV header '{h}'")),
        None => return invalid("empty CSV"),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return invalid(format!("row {} has {} fields, want 8", i + 2, f.len()));
        }
        let int = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|e| SimError::Parse(format!("bad integer '{s}': {e}")))
        };
        rows.push(RecordRow {
            t: int(f[0])?,
            loss: parse_f64(f[1])?,
            grad_norm: parse_f64(f[2])?,
            metric_mt: parse_f64(f[3])?,
            consensus_err: parse_f64(f[4])?,
            samples: int(f[5])?,
            comms: int(f[6])?,
            wall_ms: int(f[7])?,
        });
    }
    if rows.is_empty() {
        return invalid("CSV has a header but no data rows");
    }
    Ok(rows)
}

pub fn load(path: &Path) -> Result<Vec<RecordRow>> {
    let body = std::fs::read_to_string(path)?;
    parse(&body)
}
