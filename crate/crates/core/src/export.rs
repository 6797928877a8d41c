//! Plot-ready CSV and JSON output for traces, CV tables and confusion matrices.
//!
//! Floats in these files use 17 significant digits so reruns are byte-identical
//! and values read back exactly.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::bandwidth::CvResult;
use crate::classifier::{ClassificationReport, ReliabilityTrace};
use crate::error::{Error, Result};
use crate::evaluation::ConfusionMatrix;
use crate::io::write_with;
use crate::numeric::{format_f64, serialize_f64};

pub fn write_trace_csv(trace: &ReliabilityTrace, path: impl AsRef<Path>) -> Result<()> {
    write_xy_csv(path.as_ref(), "time_s,D", trace.times.iter().copied().zip(trace.differences.iter().copied()))
}

pub fn write_accuracy_csv(rows: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    write_xy_csv(path.as_ref(), "duration_s,accuracy", rows.iter().copied())
}

fn write_xy_csv(path: &Path, header: &str, rows: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    write_with(path, |w| {
        writeln!(w, "{header}")?;
        for (x, y) in rows {
            writeln!(w, "{},{}", format_f64(x), format_f64(y))?;
        }
        Ok(())
    })
}

pub fn write_cv_csv(result: &CvResult, path: impl AsRef<Path>) -> Result<()> {
    write_with(path.as_ref(), |w| {
        writeln!(w, "kernel,bandwidth,mean_loglik_per_photon")?;
        for (k, row) in result.kernels.iter().zip(&result.table) {
            for (h, v) in result.bandwidths.iter().zip(row) {
                writeln!(w, "{k},{},{}", format_f64(*h), format_f64(*v))?;
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct CvSummary<'a> {
    best_kernel: &'a str,
    #[serde(serialize_with = "serialize_f64")]
    best_bandwidth: f64,
    #[serde(serialize_with = "serialize_f64")]
    best_mean_loglik_per_photon: f64,
    kernels: Vec<&'a str>,
    bandwidth_count: usize,
}

pub fn write_cv_json(result: &CvResult, path: impl AsRef<Path>) -> Result<()> {
    let summary = CvSummary {
        best_kernel: result.best_kernel.name(),
        best_bandwidth: result.best_bandwidth,
        best_mean_loglik_per_photon: result.best_score,
        kernels: result.kernels.iter().map(|k| k.name()).collect(),
        bandwidth_count: result.bandwidths.len(),
    };
    write_json(&summary, path.as_ref())
}

pub fn write_confusion_csv(cm: &ConfusionMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_with(path.as_ref(), |w| {
        writeln!(w, "true\\predicted,{}", cm.labels.join(","))?;
        for (label, row) in cm.labels.iter().zip(&cm.matrix) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{label},{}", cells.join(","))?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ConfusionSummary<'a> {
    labels: &'a [String],
    matrix: &'a [Vec<u64>],
    per_class_accuracy: Vec<Option<Box<serde_json::value::RawValue>>>,
    #[serde(serialize_with = "serialize_f64")]
    overall_accuracy: f64,
}

pub fn write_confusion_json(cm: &ConfusionMatrix, path: impl AsRef<Path>) -> Result<()> {
    let per_class_accuracy = cm
        .per_class_accuracy
        .iter()
        .map(|a| a.map(|v| serde_json::value::RawValue::from_string(format_f64(v)).expect("finite float")))
        .collect();
    let summary = ConfusionSummary {
        labels: &cm.labels,
        matrix: &cm.matrix,
        per_class_accuracy,
        overall_accuracy: cm.overall_accuracy,
    };
    write_json(&summary, path.as_ref())
}

/// A classification report tagged with the file it came from.
#[derive(Serialize)]
pub struct FileReport<'a> {
    pub file: &'a str,
    #[serde(flatten)]
    pub report: &'a ClassificationReport,
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value).map_err(|e| Error::Schema(e.to_string()))?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::Io { path: path.to_owned(), source: e })
}
