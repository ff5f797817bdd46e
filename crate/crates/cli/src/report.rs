//! Summary tables over completed artifact directories: per-criterion test-R²
//! and selected-length distributions, per-run description-length deltas, and
//! the pairwise win/tie + Bradley-Terry comparison tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use mdlgpsr::criteria::Criterion;
use mdlgpsr::gp::SelectionRecord;
use mdlgpsr::stats::{self, CriterionOutcome, McmcConfig};

use crate::artifacts::{self, fmt_f64, ArtifactError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("no artifact directories given")]
    NoInputs,
    #[error("comparison failed: {0}")]
    Stats(#[from] stats::StatsError),
}

/// Final-generation selection rows of one replicate, keyed by criterion.
type FinalRows = BTreeMap<&'static str, SelectionRecord>;

fn final_rows(trace: &[SelectionRecord]) -> FinalRows {
    let last_gen = trace.iter().map(|r| r.generation).max().unwrap_or(0);
    trace
        .iter()
        .filter(|r| r.generation == last_gen)
        .map(|r| (r.criterion.id(), r.clone()))
        .collect()
}

/// Name + per-replicate final rows for one artifact directory.
struct ArtifactRuns {
    name: String,
    runs: Vec<FinalRows>,
}

fn load_artifact(dir: &Path) -> Result<ArtifactRuns, ReportError> {
    let mut runs = Vec::new();
    for trace_file in artifacts::list_traces(dir)? {
        let trace = artifacts::read_trace_csv(&trace_file)?;
        if !trace.is_empty() {
            runs.push(final_rows(&trace));
        }
    }
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(ArtifactRuns { name, runs })
}

/// Linear-interpolation percentile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

fn quartiles(values: &mut Vec<f64>) -> (f64, f64, f64) {
    values.sort_by(|a, b| a.total_cmp(b));
    (
        percentile(values, 0.25),
        percentile(values, 0.5),
        percentile(values, 0.75),
    )
}

fn new_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ReportError> {
    csv::Writer::from_path(path).map_err(|source| ReportError::Csv {
        path: path.display().to_string(),
        source,
    })
}

fn finish(mut writer: csv::Writer<std::fs::File>, path: &Path) -> Result<(), ReportError> {
    writer.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

const EMPTY_CELL: &str = "–";

/// Writes `r2_summary.csv`, `length_summary.csv`, and `delta_dl.csv` into
/// `out_dir`. Cells without any completed run are marked with a dash.
pub fn report(dirs: &[PathBuf], out_dir: &Path) -> Result<(), ReportError> {
    if dirs.is_empty() {
        return Err(ReportError::NoInputs);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let artifacts: Vec<ArtifactRuns> = dirs
        .iter()
        .map(|d| load_artifact(d))
        .collect::<Result<_, _>>()?;

    let r2_path = out_dir.join("r2_summary.csv");
    let mut r2 = new_writer(&r2_path)?;
    r2.write_record([
        "artifact",
        "criterion",
        "runs",
        "q1_test_r2",
        "median_test_r2",
        "q3_test_r2",
        "median_test_rmse",
    ])
    .map_err(|source| ReportError::Csv {
        path: r2_path.display().to_string(),
        source,
    })?;

    let len_path = out_dir.join("length_summary.csv");
    let mut lengths = new_writer(&len_path)?;
    lengths
        .write_record([
            "artifact",
            "criterion",
            "runs",
            "q1_length",
            "median_length",
            "q3_length",
        ])
        .map_err(|source| ReportError::Csv {
            path: len_path.display().to_string(),
            source,
        })?;

    let dl_path = out_dir.join("delta_dl.csv");
    let mut delta = new_writer(&dl_path)?;
    delta
        .write_record(["artifact", "criterion", "replicate", "dl", "delta_dl"])
        .map_err(|source| ReportError::Csv {
            path: dl_path.display().to_string(),
            source,
        })?;

    for artifact in &artifacts {
        for criterion in Criterion::ALL {
            let rows: Vec<&SelectionRecord> = artifact
                .runs
                .iter()
                .filter_map(|run| run.get(criterion.id()))
                .collect();
            if rows.is_empty() {
                r2.write_record([
                    artifact.name.as_str(),
                    criterion.id(),
                    "0",
                    EMPTY_CELL,
                    EMPTY_CELL,
                    EMPTY_CELL,
                    EMPTY_CELL,
                ])
                .map_err(|source| ReportError::Csv {
                    path: r2_path.display().to_string(),
                    source,
                })?;
                lengths
                    .write_record([
                        artifact.name.as_str(),
                        criterion.id(),
                        "0",
                        EMPTY_CELL,
                        EMPTY_CELL,
                        EMPTY_CELL,
                    ])
                    .map_err(|source| ReportError::Csv {
                        path: len_path.display().to_string(),
                        source,
                    })?;
                continue;
            }

            let mut r2_values: Vec<f64> = rows.iter().map(|r| r.test_r2).collect();
            let (q1, median, q3) = quartiles(&mut r2_values);
            let mut rmse_values: Vec<f64> = rows.iter().map(|r| r.test_rmse).collect();
            rmse_values.sort_by(|a, b| a.total_cmp(b));
            let rmse_median = percentile(&rmse_values, 0.5);
            r2.write_record([
                artifact.name.clone(),
                criterion.id().to_string(),
                rows.len().to_string(),
                fmt_f64(q1),
                fmt_f64(median),
                fmt_f64(q3),
                fmt_f64(rmse_median),
            ])
            .map_err(|source| ReportError::Csv {
                path: r2_path.display().to_string(),
                source,
            })?;

            let mut len_values: Vec<f64> = rows.iter().map(|r| r.length as f64).collect();
            let (lq1, lmed, lq3) = quartiles(&mut len_values);
            lengths
                .write_record([
                    artifact.name.clone(),
                    criterion.id().to_string(),
                    rows.len().to_string(),
                    fmt_f64(lq1),
                    fmt_f64(lmed),
                    fmt_f64(lq3),
                ])
                .map_err(|source| ReportError::Csv {
                    path: len_path.display().to_string(),
                    source,
                })?;

            let mut dl_values: Vec<f64> = rows.iter().map(|r| r.dl).collect();
            dl_values.sort_by(|a, b| a.total_cmp(b));
            let dl_median = percentile(&dl_values, 0.5);
            for (replicate, row) in artifact
                .runs
                .iter()
                .enumerate()
                .filter_map(|(i, run)| run.get(criterion.id()).map(|r| (i, r)))
            {
                delta
                    .write_record([
                        artifact.name.clone(),
                        criterion.id().to_string(),
                        replicate.to_string(),
                        fmt_f64(row.dl),
                        fmt_f64(row.dl - dl_median),
                    ])
                    .map_err(|source| ReportError::Csv {
                        path: dl_path.display().to_string(),
                        source,
                    })?;
            }
        }
    }

    finish(r2, &r2_path)?;
    finish(lengths, &len_path)?;
    finish(delta, &dl_path)?;
    Ok(())
}

/// Pools pairings across all artifact directories (one pairing per run and
/// unordered criterion pair) and returns the tally plus outcomes per run.
pub fn pool_outcomes(dirs: &[PathBuf]) -> Result<Vec<Vec<CriterionOutcome>>, ReportError> {
    let mut runs = Vec::new();
    for dir in dirs {
        let artifact = load_artifact(dir)?;
        for run in &artifact.runs {
            let outcomes: Vec<CriterionOutcome> = run
                .values()
                .map(|r| CriterionOutcome {
                    method: r.criterion.id().to_string(),
                    expr_id: r.expression.clone(),
                    test_mse: r.test_rmse * r.test_rmse,
                })
                .collect();
            runs.push(outcomes);
        }
    }
    Ok(runs)
}

/// Writes `wins.csv`, `ties.csv` (percent of pairings, column beats row),
/// and `bbt.csv` (posterior ROPE summaries per ordered pair).
pub fn compare(dirs: &[PathBuf], out_dir: &Path, mcmc: &McmcConfig) -> Result<(), ReportError> {
    if dirs.is_empty() {
        return Err(ReportError::NoInputs);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;

    let methods: Vec<String> = Criterion::ALL.iter().map(|c| c.id().to_string()).collect();
    let runs = pool_outcomes(dirs)?;
    let tally = stats::tally_pairings(&methods, &runs);

    let k = methods.len();
    let matrix_csv = |path: &Path, cell: &dyn Fn(usize, usize) -> String| -> Result<(), ReportError> {
        let mut w = new_writer(path)?;
        let mut header = vec!["vs".to_string()];
        header.extend(methods.iter().cloned());
        w.write_record(&header).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        for row in 0..k {
            let mut rec = vec![methods[row].clone()];
            for col in 0..k {
                rec.push(if row == col {
                    String::new()
                } else {
                    cell(row, col)
                });
            }
            w.write_record(&rec).map_err(|source| ReportError::Csv {
                path: path.display().to_string(),
                source,
            })?;
        }
        finish(w, path)
    };

    let pct = |x: f64, total: f64| {
        if total > 0.0 {
            fmt_f64(100.0 * x / total)
        } else {
            EMPTY_CELL.to_string()
        }
    };
    let wins_path = out_dir.join("wins.csv");
    matrix_csv(&wins_path, &|row, col| {
        // Wins excluding the tie halves, as in a win-percentage table.
        let ties = tally.ties(col, row) as f64;
        pct(tally.wins(col, row) - 0.5 * ties, tally.pairings(row, col))
    })?;
    let ties_path = out_dir.join("ties.csv");
    matrix_csv(&ties_path, &|row, col| {
        pct(tally.ties(col, row) as f64, tally.pairings(row, col))
    })?;

    let posterior = stats::bbt_fit(&tally, mcmc)?;
    let bbt_path = out_dir.join("bbt.csv");
    let mut bbt = new_writer(&bbt_path)?;
    bbt.write_record([
        "a",
        "b",
        "pairings",
        "median_p_a_beats_b",
        "hpd95_low",
        "hpd95_high",
        "mass_above_half",
        "rope_mass",
        "dagger",
    ])
    .map_err(|source| ReportError::Csv {
        path: bbt_path.display().to_string(),
        source,
    })?;
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let summary = stats::rope_summary(&posterior, a, b);
            bbt.write_record([
                methods[a].clone(),
                methods[b].clone(),
                fmt_f64(tally.pairings(a, b)),
                fmt_f64(summary.median),
                fmt_f64(summary.hpd_low),
                fmt_f64(summary.hpd_high),
                fmt_f64(summary.mass_above_half),
                fmt_f64(summary.rope_mass),
                summary.dagger.to_string(),
            ])
            .map_err(|source| ReportError::Csv {
                path: bbt_path.display().to_string(),
                source,
            })?;
        }
    }
    finish(bbt, &bbt_path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let xs = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&xs, 0.5), 2.5);
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 1.0), 4.0);
        let mut one = vec![7.0];
        let (q1, med, q3) = quartiles(&mut one);
        assert_eq!((q1, med, q3), (7.0, 7.0, 7.0));
    }
}
