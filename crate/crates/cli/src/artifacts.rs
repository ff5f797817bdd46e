//! Artifact files: per-replicate trace and front CSVs plus the manifest.
//! Floats are written in shortest-round-trip form so re-running a plan
//! reproduces byte-identical outputs.

use std::path::{Path, PathBuf};

use thiserror::Error;

use mdlgpsr::criteria::Criterion;
use mdlgpsr::gp::{FrontMember, RunTrace, SelectionRecord};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: row {row}: {message}")]
    BadRow {
        path: String,
        row: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Csv {
        path: path.display().to_string(),
        source,
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    row: usize,
    field: &str,
    value: &str,
) -> Result<T, ArtifactError> {
    value.parse().map_err(|_| ArtifactError::BadRow {
        path: path.display().to_string(),
        row,
        message: format!("cannot parse {field} from `{value}`"),
    })
}

pub const TRACE_HEADER: [&str; 13] = [
    "generation",
    "criterion",
    "expression",
    "length",
    "train_rmse",
    "test_rmse",
    "test_r2",
    "nll",
    "aic",
    "bic",
    "bic_sr",
    "dl",
    "fbf",
];

pub fn write_trace_csv(path: &Path, records: &[SelectionRecord]) -> Result<(), ArtifactError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for r in records {
        writer
            .write_record([
                r.generation.to_string(),
                r.criterion.id().to_string(),
                r.expression.clone(),
                r.length.to_string(),
                fmt_f64(r.train_rmse),
                fmt_f64(r.test_rmse),
                fmt_f64(r.test_r2),
                fmt_f64(r.nll),
                fmt_f64(r.aic),
                fmt_f64(r.bic),
                fmt_f64(r.bic_sr),
                fmt_f64(r.dl),
                fmt_f64(r.fbf),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<SelectionRecord>, ArtifactError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(csv_err(path))?;
        let get = |i: usize| record.get(i).unwrap_or("");
        let criterion =
            Criterion::from_id(get(1)).ok_or_else(|| ArtifactError::BadRow {
                path: path.display().to_string(),
                row,
                message: format!("unknown criterion `{}`", get(1)),
            })?;
        out.push(SelectionRecord {
            generation: parse_field(path, row, "generation", get(0))?,
            criterion,
            expression: get(2).to_string(),
            length: parse_field(path, row, "length", get(3))?,
            train_rmse: parse_field(path, row, "train_rmse", get(4))?,
            test_rmse: parse_field(path, row, "test_rmse", get(5))?,
            test_r2: parse_field(path, row, "test_r2", get(6))?,
            nll: parse_field(path, row, "nll", get(7))?,
            aic: parse_field(path, row, "aic", get(8))?,
            bic: parse_field(path, row, "bic", get(9))?,
            bic_sr: parse_field(path, row, "bic_sr", get(10))?,
            dl: parse_field(path, row, "dl", get(11))?,
            fbf: parse_field(path, row, "fbf", get(12))?,
        });
    }
    Ok(out)
}

pub const FRONT_HEADER: [&str; 11] = [
    "expression",
    "length",
    "nll",
    "train_rmse",
    "test_rmse",
    "test_r2",
    "aic",
    "bic",
    "bic_sr",
    "dl",
    "fbf",
];

pub fn write_front_csv(path: &Path, front: &[FrontMember]) -> Result<(), ArtifactError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer.write_record(FRONT_HEADER).map_err(csv_err(path))?;
    for f in front {
        writer
            .write_record([
                f.expression.clone(),
                f.length.to_string(),
                fmt_f64(f.nll),
                fmt_f64(f.train_rmse),
                fmt_f64(f.test_rmse),
                fmt_f64(f.test_r2),
                fmt_f64(f.aic),
                fmt_f64(f.bic),
                fmt_f64(f.bic_sr),
                fmt_f64(f.dl),
                fmt_f64(f.fbf),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn trace_path(dir: &Path, replicate: usize) -> PathBuf {
    dir.join(format!("trace_r{replicate:03}.csv"))
}

pub fn front_path(dir: &Path, replicate: usize) -> PathBuf {
    dir.join(format!("front_r{replicate:03}.csv"))
}

pub fn error_path(dir: &Path, replicate: usize) -> PathBuf {
    dir.join(format!("r{replicate:03}.error.txt"))
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.txt")
}

/// Replicate trace files present in an artifact directory, in replicate order.
pub fn list_traces(dir: &Path) -> Result<Vec<PathBuf>, ArtifactError> {
    let mut traces = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name.starts_with("trace_r") && name.ends_with(".csv") {
            traces.push(entry.path());
        }
    }
    traces.sort();
    Ok(traces)
}

pub fn write_run_artifacts(
    dir: &Path,
    replicate: usize,
    trace: &RunTrace,
) -> Result<(), ArtifactError> {
    write_trace_csv(&trace_path(dir, replicate), &trace.selections)?;
    write_front_csv(&front_path(dir, replicate), &trace.front)?;
    Ok(())
}
