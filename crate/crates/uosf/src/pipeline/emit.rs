//! CSV / JSON emission of run outputs.
//!
//! Spectrogram matrices: first row is the frequency axis (Hz), first column
//! the time axis (seconds), corner cell empty. All floats use the shortest
//! round-trip decimal form, so identical runs produce identical bytes.

use crate::error::Result;
use crate::osf::OsfKind;
use crate::pipeline::{to_db, Spectrogram};
use crate::simulate::{BlendTrace, TrialMetrics};
use std::fmt::Write as _;
use std::path::Path;

fn map_power(value: f64, db: bool) -> f64 {
    if db {
        to_db(value)
    } else {
        value
    }
}

/// Renders one spectrogram as a (T+1) x (F+1) CSV matrix.
pub fn render_spectrogram_csv(sg: &Spectrogram, db: bool) -> String {
    let mut out = String::new();
    for f in &sg.freq_hz {
        write!(out, ",{f}").expect("string write");
    }
    out.push('\n');
    for (t, row) in sg.time_s.iter().zip(&sg.rows) {
        write!(out, "{t}").expect("string write");
        for &p in row {
            write!(out, ",{}", map_power(p, db)).expect("string write");
        }
        out.push('\n');
    }
    out
}

pub fn write_spectrogram_csv(path: &Path, sg: &Spectrogram, db: bool) -> Result<()> {
    std::fs::write(path, render_spectrogram_csv(sg, db))?;
    Ok(())
}

/// JSON alternative carrying the same axes and matrix.
pub fn write_spectrogram_json(path: &Path, sg: &Spectrogram, db: bool) -> Result<()> {
    let rows: Vec<Vec<f64>> = sg
        .rows
        .iter()
        .map(|row| row.iter().map(|&p| map_power(p, db)).collect())
        .collect();
    let value = serde_json::json!({
        "estimator": sg.estimator.name(),
        "db": db,
        "time_s": sg.time_s,
        "freq_hz": sg.freq_hz,
        "power": rows,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("json serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `metrics.csv`: one row per (checkpoint, estimator).
pub fn render_metrics_csv(metrics: &TrialMetrics) -> String {
    let mut out = String::from(
        "checkpoint,rho,estimator_kind,rank_or_universal,variance,bias,mse,variance_db,mse_db\n",
    );
    for row in &metrics.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.checkpoint,
            row.rho,
            row.estimator.kind(),
            row.estimator.rank_label(),
            row.variance,
            row.bias,
            row.mse,
            row.variance_db(),
            row.mse_db(),
        )
        .expect("string write");
    }
    out
}

pub fn write_metrics_csv(path: &Path, metrics: &TrialMetrics) -> Result<()> {
    std::fs::write(path, render_metrics_csv(metrics))?;
    Ok(())
}

/// `blend_trace.csv`: trial-averaged blending weight per iteration and rank,
/// both pool kinds stacked with a trailing kind column.
pub fn render_blend_csv(traces: &[BlendTrace]) -> String {
    let mut out = String::from("t,rank,mean_mu,kind\n");
    for trace in traces {
        for t in 0..trace.iterations {
            for (i, &rank) in trace.pool.iter().enumerate() {
                writeln!(out, "{t},{rank},{},{}", trace.row(t)[i], trace.kind)
                    .expect("string write");
            }
        }
    }
    out
}

pub fn write_blend_csv(path: &Path, traces: &[BlendTrace]) -> Result<()> {
    std::fs::write(path, render_blend_csv(traces))?;
    Ok(())
}

/// `variance_curve.csv`: `(kind, r0, variance)` rows, with a dB column when
/// requested.
pub fn render_variance_curve_csv(rows: &[(OsfKind, usize, f64)], db: bool) -> String {
    let mut out = String::from(if db {
        "kind,r0,variance,variance_db\n"
    } else {
        "kind,r0,variance\n"
    });
    for &(kind, rank, variance) in rows {
        if db {
            writeln!(out, "{kind},{rank},{variance},{}", to_db(variance))
                .expect("string write");
        } else {
            writeln!(out, "{kind},{rank},{variance}").expect("string write");
        }
    }
    out
}

pub fn write_variance_curve_csv(
    path: &Path,
    rows: &[(OsfKind, usize, f64)],
    db: bool,
) -> Result<()> {
    std::fs::write(path, render_variance_curve_csv(rows, db))?;
    Ok(())
}
