//! Replicate orchestration: deterministic seeding, dataset realization, and
//! artifact emission.
//!
//! Replicate `i` derives its seed from the plan's base seed; the data
//! substream and the search substream are separated so the same sampled
//! dataset can be reused across variants. Replicates run in parallel (when
//! enabled) and write disjoint files, so re-running a plan reproduces every
//! byte.

use std::path::{Path, PathBuf};

use thiserror::Error;

use mdlgpsr::data::{self, Dataset, SplitSpec};
use mdlgpsr::gp;
use mdlgpsr::par;
use mdlgpsr::rng::derive_seed;

use crate::artifacts::{self, ArtifactError};
use crate::plan::{DatasetSpec, ExperimentPlan, SplitPlan};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error("cannot create output directory {path}: {source}")]
    OutDir {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(#[from] gp::ConfigError),
}

/// Stream tags for per-replicate substreams.
const STREAM_DATA: u64 = 1;
const STREAM_SEARCH: u64 = 2;

pub fn replicate_seed(base_seed: u64, replicate: usize) -> u64 {
    derive_seed(base_seed, replicate as u64)
}

/// Materializes the train/test pair for one replicate.
pub fn realize_dataset(
    spec: &DatasetSpec,
    loaded_file: Option<&Dataset>,
    replicate_seed: u64,
) -> Result<(Dataset, Dataset), data::DataError> {
    let data_seed = derive_seed(replicate_seed, STREAM_DATA);
    match spec {
        DatasetSpec::Salustowicz => {
            let gen = data::gen_salustowicz(data_seed);
            Ok((gen.train, gen.test))
        }
        DatasetSpec::Friedman1 { n } => {
            let gen = data::gen_friedman1(*n, data_seed);
            Ok((gen.train, gen.test))
        }
        DatasetSpec::Friedman2 { n, sigma, x_max } => {
            let gen = data::gen_friedman2_with_range(*n, *sigma, *x_max, data_seed);
            Ok((gen.train, gen.test))
        }
        DatasetSpec::File { split, .. } => {
            let ds = loaded_file.expect("file dataset loaded before running");
            let split_spec = match split {
                SplitPlan::RandomFraction { train_fraction } => SplitSpec::RandomFraction {
                    train_fraction: *train_fraction,
                    seed: data_seed,
                },
                SplitPlan::FixedRows { train_count } => SplitSpec::FixedRows {
                    train_count: *train_count,
                },
                SplitPlan::SampleTrain { train_count } => SplitSpec::SampleTrain {
                    train_count: *train_count,
                    seed: data_seed,
                },
            };
            data::split(ds, &split_spec)
        }
    }
}

fn write_manifest(plan: &ExperimentPlan, out_dir: &Path) -> Result<(), HarnessError> {
    let mut text = String::new();
    text.push_str("# mdlgpsr run manifest (a valid plan file; comments record seeds)\n");
    text.push_str(&format!(
        "# code_version = {}\n",
        env!("CARGO_PKG_VERSION")
    ));
    for replicate in 0..plan.replicates {
        text.push_str(&format!(
            "# replicate_{replicate}_seed = {}\n",
            replicate_seed(plan.base_seed, replicate)
        ));
    }
    text.push('\n');
    text.push_str(&crate::plan::render_plan(plan));
    let path = artifacts::manifest_path(out_dir);
    std::fs::write(&path, text).map_err(|source| {
        HarnessError::Artifact(ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })
    })
}

/// Runs one replicate and writes its trace and front files.
pub fn run_replicate(
    plan: &ExperimentPlan,
    loaded_file: Option<&Dataset>,
    replicate: usize,
    out_dir: &Path,
) -> Result<(), String> {
    let seed = replicate_seed(plan.base_seed, replicate);
    let (train, test) =
        realize_dataset(&plan.dataset, loaded_file, seed).map_err(|e| e.to_string())?;
    let cfg = gp::RunConfig {
        seed: derive_seed(seed, STREAM_SEARCH),
        ..plan.gp.clone()
    };
    let trace = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        gp::run(&cfg, &train, &test)
    }))
    .map_err(|_| "search panicked".to_string())?;
    artifacts::write_run_artifacts(out_dir, replicate, &trace).map_err(|e| e.to_string())
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub completed: usize,
    pub failed: usize,
}

/// Executes every replicate of the plan. Plan-level problems (bad config,
/// unreadable dataset file, unwritable output) fail before any run; a
/// replicate failure produces an error file and leaves the others alone.
pub fn run_plan(plan: &ExperimentPlan, out_dir: &Path) -> Result<RunSummary, HarnessError> {
    plan.gp.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| HarnessError::OutDir {
        path: out_dir.display().to_string(),
        source,
    })?;

    let loaded_file = match &plan.dataset {
        DatasetSpec::File { path, target, .. } => {
            Some(data::load_csv(path, target.as_deref())?)
        }
        _ => None,
    };

    write_manifest(plan, out_dir)?;

    let replicates: Vec<usize> = (0..plan.replicates).collect();
    let results = par::map(&replicates, |&replicate| {
        run_replicate(plan, loaded_file.as_ref(), replicate, out_dir)
    });

    let mut completed = 0;
    let mut failed = 0;
    for (replicate, result) in results.into_iter().enumerate() {
        match result {
            Ok(()) => completed += 1,
            Err(message) => {
                failed += 1;
                let _ = std::fs::write(artifacts::error_path(out_dir, replicate), message);
            }
        }
    }
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        completed,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::parse_plan;

    fn tiny_plan() -> ExperimentPlan {
        parse_plan(
            "[dataset]\ngenerator = salustowicz\n[gp]\npop_size = 12\nmax_gen = 1\nmax_len = 20\nreplicates = 2\nbase_seed = 5\n",
        )
        .unwrap()
    }

    #[test]
    fn run_plan_writes_expected_files() {
        let dir = std::env::temp_dir().join(format!("mdlgpsr_plan_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let summary = run_plan(&tiny_plan(), &dir).unwrap();
        assert_eq!(summary.completed, 2);
        assert_eq!(summary.failed, 0);
        assert!(artifacts::manifest_path(&dir).exists());
        for r in 0..2 {
            assert!(artifacts::trace_path(&dir, r).exists());
            assert!(artifacts::front_path(&dir, r).exists());
            assert!(!artifacts::error_path(&dir, r).exists());
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn manifest_reparses_to_the_same_plan() {
        let dir = std::env::temp_dir().join(format!("mdlgpsr_manifest_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let plan = tiny_plan();
        run_plan(&plan, &dir).unwrap();
        let text = std::fs::read_to_string(artifacts::manifest_path(&dir)).unwrap();
        let reparsed = parse_plan(&text).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
        assert_eq!(reparsed, plan);
    }

    #[test]
    fn replicate_seeds_are_distinct_and_stable() {
        let a = replicate_seed(42, 0);
        let b = replicate_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, replicate_seed(42, 0));
    }
}
