//! Structural checks of emitted files, dispatched on the file name.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::Result;
use serde::Deserialize;
use serde_json::Value;

use windlq::control::GainSchedule;
use windlq::equilibrium::Equilibrium;
use windlq::metrics::MetricsReport;
use windlq::sim::Trajectory;
use windlq::{NU, NX};

/// A file that does not match its documented schema.
#[derive(Debug)]
pub struct Invalid {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for Invalid {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct CheckEntry {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct MetricsDocument {
    label: String,
    controller: Option<String>,
    seed: u64,
    metrics: MetricsReport,
    checks: Vec<CheckEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaRow {
    metric: String,
    a: f64,
    b: f64,
    relative_delta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Comparison {
    a: MetricsDocument,
    b: MetricsDocument,
    deltas: Vec<DeltaRow>,
}

pub fn check_file(path: &Path) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let text = fs::read_to_string(path)?;
    check_text(&name, &text).map_err(|message| {
        Invalid {
            path: path.display().to_string(),
            message,
        }
        .into()
    })
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))
}

fn matrix(v: &Value, rows: usize, cols: usize, what: &str) -> Result<(), String> {
    let ok = v.as_array().is_some_and(|r| {
        r.len() == rows
            && r.iter().all(|row| {
                row.as_array()
                    .is_some_and(|c| c.len() == cols && c.iter().all(|x| x.as_f64().is_some_and(f64::is_finite)))
            })
    });
    if ok {
        Ok(())
    } else {
        Err(format!("`{what}` must be a finite {rows}x{cols} matrix"))
    }
}

fn metrics_document(doc: &MetricsDocument) -> Result<(), String> {
    let m = &doc.metrics;
    let mut values = vec![m.duration, m.rms_tracking_error, m.rates.max_pitch_rate, m.rates.max_torque_rate];
    values.extend(m.dels.iter().map(|d| d.del));
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err("metrics must be finite and nonnegative".into());
    }
    if m.samples < 2 {
        return Err("metrics cover fewer than two samples".into());
    }
    if doc.checks.is_empty() {
        return Err("no trajectory checks recorded".into());
    }
    Ok(())
}

fn numeric_csv(text: &str, header: Option<&str>, width: usize) -> Result<usize, String> {
    let mut lines = text.lines();
    let first = lines.next().ok_or("empty file")?;
    if let Some(h) = header {
        if first != h {
            return Err(format!("expected header `{h}`"));
        }
    }
    let mut n = 0;
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(format!("line {}: expected {width} columns, found {}", i + 2, cells.len()));
        }
        let skip = usize::from(header.is_none());
        for (j, c) in cells.iter().enumerate().skip(skip) {
            if !c.parse::<f64>().is_ok_and(f64::is_finite) {
                return Err(format!("line {}, column {}: `{c}` is not a finite number", i + 2, j + 1));
            }
        }
        n += 1;
    }
    Ok(n)
}

fn check_text(name: &str, text: &str) -> Result<(), String> {
    match name {
        "gains.json" => {
            let g: GainSchedule = parse(text)?;
            g.validate().map_err(|e| e.to_string())
        }
        "synthesis.json" => {
            let v: Value = parse(text)?;
            for key in ["p_ref", "v_d", "epsilon", "delta_v"] {
                if !v[key].as_f64().is_some_and(f64::is_finite) {
                    return Err(format!("`{key}` must be a finite number"));
                }
            }
            let regions = v["regions"].as_array().ok_or("`regions` must be an array")?;
            if regions.len() != 2 {
                return Err("expected two regions".into());
            }
            for r in regions {
                matrix(&r["gain"], NU, NX, "gain")?;
                matrix(&r["gain_scaled"], NU, NX, "gain_scaled")?;
                if !r["certified"].is_boolean() {
                    return Err("`certified` must be a boolean".into());
                }
            }
            Ok(())
        }
        "metrics.json" => metrics_document(&parse(text)?),
        "comparison.json" => {
            let c: Comparison = parse(text)?;
            metrics_document(&c.a)?;
            metrics_document(&c.b)?;
            for d in &c.deltas {
                let expected = if d.a == d.b { 0.0 } else { (d.b - d.a) / d.a };
                if (expected - d.relative_delta).abs() > 1e-12 * expected.abs().max(1.0) {
                    return Err(format!("relative delta of `{}` inconsistent", d.metric));
                }
            }
            Ok(())
        }
        "equilibrium.json" => {
            let v: Value = parse(text)?;
            let _: Equilibrium = serde_json::from_value(v["equilibrium"].clone()).map_err(|e| e.to_string())?;
            if !v["scaled_residual"].as_f64().is_some_and(|r| r.is_finite() && r >= 0.0) {
                return Err("`scaled_residual` must be a nonnegative number".into());
            }
            Ok(())
        }
        "linearization.json" => {
            let v: Value = parse(text)?;
            matrix(&v["a"], NX, NX, "a")?;
            matrix(&v["b"], NX, NU, "b")
        }
        "trajectory.csv" => Trajectory::from_csv(text, name).map(|_| ()).map_err(|e| e.to_string()),
        "a.csv" => numeric_csv(text, None, NX + 1).and_then(|n| rows_eq(n, NX)),
        "b.csv" => numeric_csv(text, None, NU + 1).and_then(|n| rows_eq(n, NX)),
        "certificate.txt" => {
            if text.contains("LMI certificate") {
                Ok(())
            } else {
                Err("no certificate section".into())
            }
        }
        n if n.starts_with("cycles_") && n.ends_with(".csv") => {
            numeric_csv(text, Some("range,mean,count"), 3)?;
            let bad = text.lines().skip(1).any(|l| {
                let count = l.rsplit(',').next().and_then(|c| c.parse::<f64>().ok());
                !matches!(count, Some(c) if c == 0.5 || c == 1.0)
            });
            if bad {
                Err("cycle counts must be 0.5 or 1".into())
            } else {
                Ok(())
            }
        }
        n if n.ends_with(".svg") => {
            let t = text.trim_end();
            if !t.starts_with("<svg") || !t.ends_with("</svg>") {
                Err("not a standalone SVG document".into())
            } else if t.matches("<svg").count() != t.matches("</svg>").count() {
                Err("unbalanced <svg> elements".into())
            } else if t.contains("NaN") || ["inf,", "inf\"", "inf "].iter().any(|p| t.contains(p)) {
                Err("non-finite coordinates".into())
            } else {
                Ok(())
            }
        }
        _ => Err("unknown output file".into()),
    }
}

fn rows_eq(n: usize, expected: usize) -> Result<(), String> {
    if n == expected {
        Ok(())
    } else {
        Err(format!("expected {expected} rows, found {n}"))
    }
}
