//! Dependency-free static SVG line charts over results CSVs. Output bytes
//! are a pure function of the inputs.

use crate::engine::RecordRow;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Steps,
    Comms,
    Samples,
}

impl XAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(XAxis::Steps),
            "comms" => Ok(XAxis::Comms),
            "samples" => Ok(XAxis::Samples),
            other => invalid(format!(
                "unknown x-axis '{other}' (expected t, comms, samples)"
            )),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            XAxis::Steps => "t",
            XAxis::Comms => "communication rounds",
            XAxis::Samples => "gradient evaluations",
        }
    }

    fn value(&self, r: &RecordRow) -> f64 {
        match self {
            XAxis::Steps => r.t as f64,
            XAxis::Comms => r.comms as f64,
            XAxis::Samples => r.samples as f64,
        }
    }
}

pub fn column_value(r: &RecordRow, column: &str) -> Result<f64> {
    Ok(match column {
        "loss" => r.loss,
        "grad_norm" => r.grad_norm,
        "metric_mt" => r.metric_mt,
        "consensus_err" => r.consensus_err,
        "samples" => r.samples as f64,
        "comms" => r.comms as f64,
        other => return invalid(format!("no column named '{other}'")),
    })
}

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

/// Render one polyline per (label, rows) series. Non-finite values (the
/// final row's dropped metric) are skipped point-wise. `log_y` requires at
/// least one positive value per series.
pub fn emit_plot(
    series: &[(String, Vec<RecordRow>)],
    column: &str,
    x_axis: XAxis,
    log_y: bool,
) -> Result<String> {
    if series.is_empty() {
        return invalid("at least one CSV is required");
    }
    let mut points: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (label, rows) in series {
        let mut pts = Vec::new();
        for r in rows {
            let y = column_value(r, column)?;
            if !y.is_finite() {
                continue;
            }
            if log_y && y <= 0.0 {
                continue;
            }
            let yv = if log_y { y.log10() } else { y };
            pts.push((x_axis.value(r), yv));
        }
        if pts.is_empty() {
            return invalid(format!("series '{label}' has no plottable points"));
        }
        points.push((label.clone(), pts));
    }

    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &points {
        for &(x, y) in pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        ymax = ymin + 1.0;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - ymin) / (ymax - ymin) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(plot_w),
        fmt(plot_h)
    ));

    // Axis ticks: 5 per axis, value labels in data units.
    for i in 0..=4 {
        let fx = i as f64 / 4.0;
        let xv = xmin + fx * (xmax - xmin);
        let yv = ymin + fx * (ymax - ymin);
        let px = sx(xv);
        let py = sy(yv);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n",
            fmt(px),
            fmt(MARGIN_T),
            fmt(px),
            fmt(MARGIN_T + plot_h)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt(px),
            fmt(MARGIN_T + plot_h + 16.0),
            tick_label(xv)
        ));
        let ylabel = if log_y {
            format!("1e{}", tick_label(yv))
        } else {
            tick_label(yv)
        };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_L - 6.0),
            fmt(py + 4.0),
            ylabel
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        fmt(MARGIN_L + plot_w / 2.0),
        fmt(HEIGHT - 14.0),
        x_axis.label()
    ));
    let ytitle = if log_y {
        format!("log10 {column}")
    } else {
        column.to_string()
    };
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        fmt(MARGIN_T + plot_h / 2.0),
        fmt(MARGIN_T + plot_h / 2.0),
        ytitle
    ));

    for (i, (label, pts)) in points.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(sx(x)), fmt(sy(y))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            fmt(WIDTH - MARGIN_R + 10.0),
            fmt(ly - 4.0),
            fmt(WIDTH - MARGIN_R + 34.0),
            fmt(ly - 4.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            fmt(WIDTH - MARGIN_R + 40.0),
            fmt(ly),
            label
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: u64) -> Vec<RecordRow> {
        (0..n)
            .map(|t| RecordRow {
                t,
                loss: 1.0 / (t + 1) as f64,
                grad_norm: 0.5 / (t + 1) as f64,
                metric_mt: if t == n - 1 { f64::NAN } else { 1.0 },
                consensus_err: 0.0,
                samples: 40 * t,
                comms: t + 1,
                wall_ms: 0,
            })
            .collect()
    }

    #[test]
    fn one_series_one_polyline_and_deterministic_bytes() {
        let s = vec![("fafed".to_string(), rows(10))];
        let svg1 = emit_plot(&s, "loss", XAxis::Comms, false).unwrap();
        let svg2 = emit_plot(&s, "loss", XAxis::Comms, false).unwrap();
        assert_eq!(svg1, svg2);
        assert_eq!(svg1.matches("<polyline").count(), 1);
        assert!(svg1.contains("communication rounds"));
    }

    #[test]
    fn four_series_four_polylines_with_legend() {
        let names = ["fafed", "fedavg", "fedadam", "naive-adaptive"];
        let s: Vec<(String, Vec<RecordRow>)> =
            names.iter().map(|n| (n.to_string(), rows(6))).collect();
        let svg = emit_plot(&s, "loss", XAxis::Steps, true).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 4);
        for n in names {
            assert!(svg.contains(n));
        }
    }

    #[test]
    fn missing_column_and_empty_series_are_errors() {
        let s = vec![("x".to_string(), rows(4))];
        let err = emit_plot(&s, "no_such_column", XAxis::Steps, false).unwrap_err();
        assert!(err.to_string().contains("no_such_column"));
        assert!(emit_plot(&[], "loss", XAxis::Steps, false).is_err());
    }

    #[test]
    fn nan_metric_rows_are_skipped() {
        let s = vec![("m".to_string(), rows(5))];
        let svg = emit_plot(&s, "metric_mt", XAxis::Steps, false).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
