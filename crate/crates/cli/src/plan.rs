//! Experiment plans: a plain-text key-value format with `[dataset]`, `[gp]`,
//! `[fit]`, and `[stats]` sections. Unknown sections or keys are errors so
//! that typos cannot silently change an experiment. The normalized rendering
//! written into each run's manifest is itself a valid plan.

use std::path::{Path, PathBuf};

use thiserror::Error;

use mdlgpsr::criteria::Criterion;
use mdlgpsr::gp::{ConfigError, OpSymbol, RunConfig, TerminalSymbol, Variant};
use mdlgpsr::stats::McmcConfig;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cannot read plan {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value` or `[section]`")]
    Syntax { line: usize },
    #[error("line {line}: unknown section `{name}`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: key `{key}` before any section header")]
    KeyOutsideSection { line: usize, key: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("[dataset] must set exactly one of `generator` or `file`")]
    DatasetSource,
    #[error("unknown generator `{0}` (expected salustowicz, friedman1, or friedman2)")]
    UnknownGenerator(String),
    #[error("replicates must be at least 1")]
    Replicates,
    #[error("invalid gp configuration: {0}")]
    Config(#[from] ConfigError),
}

/// Split protocol for file-backed datasets; the per-replicate seed is filled
/// in by the harness.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitPlan {
    RandomFraction { train_fraction: f64 },
    FixedRows { train_count: usize },
    SampleTrain { train_count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Salustowicz,
    Friedman1 {
        n: usize,
    },
    Friedman2 {
        n: usize,
        sigma: f64,
        /// Upper bound of the uniform input range.
        x_max: f64,
    },
    File {
        path: PathBuf,
        target: Option<String>,
        split: SplitPlan,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub dataset: DatasetSpec,
    pub gp: RunConfig,
    pub replicates: usize,
    pub base_seed: u64,
    pub mcmc: McmcConfig,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::Salustowicz,
            gp: RunConfig::default(),
            replicates: 10,
            base_seed: 0,
            mcmc: McmcConfig::default(),
        }
    }
}

pub fn load_plan(path: &Path) -> Result<ExperimentPlan, PlanError> {
    let text = std::fs::read_to_string(path).map_err(|source| PlanError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_plan(&text)
}

fn parse<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, PlanError> {
    value.parse().map_err(|_| PlanError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

pub fn parse_plan(text: &str) -> Result<ExperimentPlan, PlanError> {
    let mut plan = ExperimentPlan::default();
    let mut generator: Option<String> = None;
    let mut file: Option<PathBuf> = None;
    let mut target: Option<String> = None;
    let mut split_kind: Option<String> = None;
    let mut train_fraction = 2.0 / 3.0;
    let mut train_count: Option<usize> = None;
    let mut n: usize = 100;
    let mut sigma: f64 = 1.0;
    let mut x_max: f64 = 1.0;

    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or(PlanError::Syntax { line: line_no })?
                .trim()
                .to_string();
            if !["dataset", "gp", "fit", "stats"].contains(&name.as_str()) {
                return Err(PlanError::UnknownSection {
                    line: line_no,
                    name,
                });
            }
            section = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(PlanError::Syntax { line: line_no })?;
        let key = key.trim();
        let value = value.trim();
        let section = section.as_deref().ok_or_else(|| PlanError::KeyOutsideSection {
            line: line_no,
            key: key.to_string(),
        })?;

        match (section, key) {
            ("dataset", "generator") => generator = Some(value.to_string()),
            ("dataset", "file") => file = Some(PathBuf::from(value)),
            ("dataset", "target") => target = Some(value.to_string()),
            ("dataset", "split") => split_kind = Some(value.to_string()),
            ("dataset", "train_fraction") => {
                train_fraction = parse(key, value, "a real number")?;
            }
            ("dataset", "train_count") => train_count = Some(parse(key, value, "an integer")?),
            ("dataset", "n") => n = parse(key, value, "an integer")?,
            ("dataset", "sigma") => sigma = parse(key, value, "a real number")?,
            ("dataset", "x_max") => x_max = parse(key, value, "a real number")?,

            ("gp", "variant") => {
                plan.gp.variant = Variant::from_name(value).ok_or(PlanError::BadValue {
                    key: key.into(),
                    value: value.into(),
                    expected: "one of mo-length, mo-dl, so",
                })?;
            }
            ("gp", "so_criterion") => {
                plan.gp.so_criterion =
                    Criterion::from_id(value).ok_or(PlanError::BadValue {
                        key: key.into(),
                        value: value.into(),
                        expected: "one of aic, bic, bic_sr, dl, fbf",
                    })?;
            }
            ("gp", "pop_size") => plan.gp.pop_size = parse(key, value, "an integer")?,
            ("gp", "max_gen") => plan.gp.max_gen = parse(key, value, "an integer")?,
            ("gp", "max_len") => plan.gp.max_len = parse(key, value, "an integer")?,
            ("gp", "crossover_rate") => {
                plan.gp.crossover_rate = parse(key, value, "a real number")?;
            }
            ("gp", "mutation_individual_rate") => {
                plan.gp.mutation_individual_rate = parse(key, value, "a real number")?;
            }
            ("gp", "mutation_node_rate") => {
                plan.gp.mutation_node_rate = parse(key, value, "a real number")?;
            }
            ("gp", "tournament_size") => {
                plan.gp.tournament_size = parse(key, value, "an integer")?;
            }
            ("gp", "grow_depth") => plan.gp.grow_depth = parse(key, value, "an integer")?,
            ("gp", "function_set") => {
                plan.gp.function_set = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        OpSymbol::from_name(s).ok_or(PlanError::BadValue {
                            key: key.into(),
                            value: s.into(),
                            expected: "a function symbol",
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            ("gp", "terminal_set") => {
                plan.gp.terminal_set = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        TerminalSymbol::from_name(s).ok_or(PlanError::BadValue {
                            key: key.into(),
                            value: s.into(),
                            expected: "one of var, param, var*param",
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            ("gp", "replicates") => plan.replicates = parse(key, value, "an integer")?,
            ("gp", "base_seed") => plan.base_seed = parse(key, value, "an integer")?,

            ("fit", "lm_max_iters") => plan.gp.fit.lm_max_iters = parse(key, value, "an integer")?,
            ("fit", "lm_lambda0") => plan.gp.fit.lm_lambda0 = parse(key, value, "a real number")?,
            ("fit", "lm_tol") => plan.gp.fit.lm_tol = parse(key, value, "a real number")?,
            ("fit", "sigma_floor") => {
                plan.gp.fit.sigma_floor = parse(key, value, "a real number")?;
            }

            ("stats", "mcmc_samples") => plan.mcmc.samples = parse(key, value, "an integer")?,
            ("stats", "mcmc_burnin") => plan.mcmc.burn_in = parse(key, value, "an integer")?,

            (section, key) => {
                return Err(PlanError::UnknownKey {
                    line: line_no,
                    section: section.to_string(),
                    key: key.to_string(),
                });
            }
        }
    }

    plan.dataset = match (generator, file) {
        (Some(g), None) => match g.as_str() {
            "salustowicz" => DatasetSpec::Salustowicz,
            "friedman1" => DatasetSpec::Friedman1 { n },
            "friedman2" => DatasetSpec::Friedman2 { n, sigma, x_max },
            other => return Err(PlanError::UnknownGenerator(other.to_string())),
        },
        (None, Some(path)) => {
            let split = match split_kind.as_deref().unwrap_or("random-fraction") {
                "random-fraction" => SplitPlan::RandomFraction { train_fraction },
                "fixed-rows" => SplitPlan::FixedRows {
                    train_count: train_count.unwrap_or(0),
                },
                "sample-train" => SplitPlan::SampleTrain {
                    train_count: train_count.unwrap_or(0),
                },
                other => {
                    return Err(PlanError::BadValue {
                        key: "split".into(),
                        value: other.into(),
                        expected: "one of random-fraction, fixed-rows, sample-train",
                    });
                }
            };
            DatasetSpec::File {
                path,
                target,
                split,
            }
        }
        _ => return Err(PlanError::DatasetSource),
    };

    if plan.replicates < 1 {
        return Err(PlanError::Replicates);
    }
    plan.gp.validate()?;
    Ok(plan)
}

/// Renders the fully-resolved plan; parsing the output reproduces the plan.
pub fn render_plan(plan: &ExperimentPlan) -> String {
    let mut out = String::new();
    out.push_str("[dataset]\n");
    match &plan.dataset {
        DatasetSpec::Salustowicz => out.push_str("generator = salustowicz\n"),
        DatasetSpec::Friedman1 { n } => {
            out.push_str("generator = friedman1\n");
            out.push_str(&format!("n = {n}\n"));
        }
        DatasetSpec::Friedman2 { n, sigma, x_max } => {
            out.push_str("generator = friedman2\n");
            out.push_str(&format!("n = {n}\n"));
            out.push_str(&format!("sigma = {sigma:?}\n"));
            out.push_str(&format!("x_max = {x_max:?}\n"));
        }
        DatasetSpec::File {
            path,
            target,
            split,
        } => {
            out.push_str(&format!("file = {}\n", path.display()));
            if let Some(t) = target {
                out.push_str(&format!("target = {t}\n"));
            }
            match split {
                SplitPlan::RandomFraction { train_fraction } => {
                    out.push_str("split = random-fraction\n");
                    out.push_str(&format!("train_fraction = {train_fraction:?}\n"));
                }
                SplitPlan::FixedRows { train_count } => {
                    out.push_str("split = fixed-rows\n");
                    out.push_str(&format!("train_count = {train_count}\n"));
                }
                SplitPlan::SampleTrain { train_count } => {
                    out.push_str("split = sample-train\n");
                    out.push_str(&format!("train_count = {train_count}\n"));
                }
            }
        }
    }

    let gp = &plan.gp;
    out.push_str("\n[gp]\n");
    out.push_str(&format!("variant = {}\n", gp.variant.name()));
    out.push_str(&format!("so_criterion = {}\n", gp.so_criterion.id()));
    out.push_str(&format!("pop_size = {}\n", gp.pop_size));
    out.push_str(&format!("max_gen = {}\n", gp.max_gen));
    out.push_str(&format!("max_len = {}\n", gp.max_len));
    out.push_str(&format!("crossover_rate = {:?}\n", gp.crossover_rate));
    out.push_str(&format!(
        "mutation_individual_rate = {:?}\n",
        gp.mutation_individual_rate
    ));
    out.push_str(&format!(
        "mutation_node_rate = {:?}\n",
        gp.mutation_node_rate
    ));
    out.push_str(&format!("tournament_size = {}\n", gp.tournament_size));
    out.push_str(&format!("grow_depth = {}\n", gp.grow_depth));
    let functions: Vec<&str> = gp.function_set.iter().map(|s| s.name()).collect();
    out.push_str(&format!("function_set = {}\n", functions.join(",")));
    let terminals: Vec<&str> = gp.terminal_set.iter().map(|s| s.name()).collect();
    out.push_str(&format!("terminal_set = {}\n", terminals.join(",")));
    out.push_str(&format!("replicates = {}\n", plan.replicates));
    out.push_str(&format!("base_seed = {}\n", plan.base_seed));

    out.push_str("\n[fit]\n");
    out.push_str(&format!("lm_max_iters = {}\n", gp.fit.lm_max_iters));
    out.push_str(&format!("lm_lambda0 = {:?}\n", gp.fit.lm_lambda0));
    out.push_str(&format!("lm_tol = {:?}\n", gp.fit.lm_tol));
    out.push_str(&format!("sigma_floor = {:?}\n", gp.fit.sigma_floor));

    out.push_str("\n[stats]\n");
    out.push_str(&format!("mcmc_samples = {}\n", plan.mcmc.samples));
    out.push_str(&format!("mcmc_burnin = {}\n", plan.mcmc.burn_in));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[dataset]\ngenerator = salustowicz\n";

    #[test]
    fn minimal_plan_uses_defaults() {
        let plan = parse_plan(MINIMAL).unwrap();
        assert_eq!(plan.dataset, DatasetSpec::Salustowicz);
        assert_eq!(plan.gp.pop_size, 1000);
        assert_eq!(plan.replicates, 10);
    }

    #[test]
    fn unknown_key_is_rejected_with_its_name() {
        let err = parse_plan("[gp]\npopsize = 3\n[dataset]\ngenerator = salustowicz\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("popsize"), "{err}");
    }

    #[test]
    fn unknown_criterion_is_rejected_with_key_name() {
        let text = "[dataset]\ngenerator = salustowicz\n[gp]\nso_criterion = mdl\n";
        let err = parse_plan(text).unwrap_err().to_string();
        assert!(err.contains("so_criterion"), "{err}");
        assert!(err.contains("mdl"), "{err}");
    }

    #[test]
    fn dataset_source_is_mandatory_and_exclusive() {
        assert!(matches!(
            parse_plan("[gp]\npop_size = 10\n"),
            Err(PlanError::DatasetSource)
        ));
        assert!(matches!(
            parse_plan("[dataset]\ngenerator = salustowicz\nfile = x.csv\n"),
            Err(PlanError::DatasetSource)
        ));
    }

    #[test]
    fn render_parse_round_trip() {
        let text = "\
[dataset]
generator = friedman2
n = 120
sigma = 2.5

[gp]
variant = so
so_criterion = fbf
pop_size = 64
max_gen = 9
replicates = 3
base_seed = 77

[fit]
lm_max_iters = 5

[stats]
mcmc_samples = 2500
";
        let plan = parse_plan(text).unwrap();
        let rendered = render_plan(&plan);
        let reparsed = parse_plan(&rendered).unwrap();
        assert_eq!(reparsed, plan);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# comment\n\n[dataset]\n# another\ngenerator = friedman1\nn = 55\n";
        let plan = parse_plan(text).unwrap();
        assert_eq!(plan.dataset, DatasetSpec::Friedman1 { n: 55 });
    }

    #[test]
    fn invalid_gp_config_is_rejected_before_running() {
        let text = "[dataset]\ngenerator = salustowicz\n[gp]\npop_size = 1\n";
        assert!(matches!(parse_plan(text), Err(PlanError::Config(_))));
    }
}
