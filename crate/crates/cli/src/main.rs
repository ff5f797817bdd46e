use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mdlgpsr::data::GeneratedData;
use mdlgpsr::fit::FitConfig;
use mdlgpsr::stats::McmcConfig;

use mdlgpsr_cli::{artifacts, harness, plan, report, score};

#[derive(Parser)]
#[command(
    name = "mdlgpsr",
    version,
    about = "Symbolic regression with GP and description-length model selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset as train/test CSV files.
    GenData {
        /// salustowicz, friedman1, or friedman2
        #[arg(long)]
        generator: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Training rows (friedman generators).
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Training noise level (friedman2).
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Upper bound of the uniform input range (friedman2).
        #[arg(long, default_value_t = 1.0)]
        x_max: f64,
        /// Output directory for train.csv and test.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute an experiment plan and write per-replicate artifacts.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize artifact directories into R², length, and ΔDL tables.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Artifact directories produced by `run`.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Pairwise criterion comparison (win/tie matrices and BBT posteriors).
    Compare {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        mcmc_samples: usize,
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Fit and score a single expression against a CSV dataset.
    Score {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        data: PathBuf,
        /// Target column name (default: last column).
        #[arg(long)]
        target: Option<String>,
    },
}

fn write_dataset_csv(ds: &mdlgpsr::data::Dataset, path: &PathBuf) -> Result<(), String> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| e.to_string())?;
    let mut header = ds.column_names.clone();
    header.push("y".into());
    writer.write_record(&header).map_err(|e| e.to_string())?;
    for i in 0..ds.rows() {
        let mut row: Vec<String> = (0..ds.dims())
            .map(|j| artifacts::fmt_f64(ds.x.get(i, j)))
            .collect();
        row.push(artifacts::fmt_f64(ds.y[i]));
        writer.write_record(&row).map_err(|e| e.to_string())?;
    }
    writer.flush().map_err(|e| e.to_string())
}

fn gen_data(
    generator: &str,
    seed: u64,
    n: usize,
    sigma: f64,
    x_max: f64,
    out: &PathBuf,
) -> Result<(), String> {
    let GeneratedData {
        train,
        test,
        sigma_err,
    } = match generator {
        "salustowicz" => mdlgpsr::data::gen_salustowicz(seed),
        "friedman1" => mdlgpsr::data::gen_friedman1(n, seed),
        "friedman2" => mdlgpsr::data::gen_friedman2_with_range(n, sigma, x_max, seed),
        other => return Err(format!("unknown generator `{other}`")),
    };
    std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
    write_dataset_csv(&train, &out.join("train.csv"))?;
    write_dataset_csv(&test, &out.join("test.csv"))?;
    println!(
        "wrote {} train rows and {} test rows (sigma_err = {sigma_err}) to {}",
        train.rows(),
        test.rows(),
        out.display()
    );
    Ok(())
}

fn apply_thread_cap() {
    if let Ok(value) = std::env::var("MDLGPSR_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                if let Err(err) = mdlgpsr::par::set_thread_cap(n) {
                    eprintln!("warning: could not apply MDLGPSR_THREADS={n}: {err}");
                }
            }
            _ => eprintln!("warning: ignoring invalid MDLGPSR_THREADS=`{value}`"),
        }
    }
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    apply_thread_cap();
    match cli.command {
        Command::GenData {
            generator,
            seed,
            n,
            sigma,
            x_max,
            out,
        } => gen_data(&generator, seed, n, sigma, x_max, &out),
        Command::Run { plan, out } => {
            let plan = plan::load_plan(&plan).map_err(|e| e.to_string())?;
            let summary = harness::run_plan(&plan, &out).map_err(|e| e.to_string())?;
            println!(
                "completed {} replicate(s), {} failed; artifacts in {}",
                summary.completed,
                summary.failed,
                summary.out_dir.display()
            );
            if summary.failed > 0 {
                Err(format!("{} replicate(s) failed", summary.failed))
            } else {
                Ok(())
            }
        }
        Command::Report { out, dirs } => {
            report::report(&dirs, &out).map_err(|e| e.to_string())?;
            println!("wrote summary tables to {}", out.display());
            Ok(())
        }
        Command::Compare {
            out,
            seed,
            mcmc_samples,
            dirs,
        } => {
            let mcmc = McmcConfig {
                samples: mcmc_samples,
                seed,
                ..McmcConfig::default()
            };
            report::compare(&dirs, &out, &mcmc).map_err(|e| e.to_string())?;
            println!("wrote comparison tables to {}", out.display());
            Ok(())
        }
        Command::Score { expr, data, target } => {
            let report =
                score::score_expression(&expr, &data, target.as_deref(), &FitConfig::default())
                    .map_err(|e| e.to_string())?;
            println!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
