//! Subcommand definitions and dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use infosel::benchmarks::GeneratorConfig;
use infosel::dataset::{load_csv_with, BinStrategy, CsvOptions, Dataset};
use infosel::estimators::KnnConfig;
use infosel::evaluation::{powerset_evaluation, PowersetOptions};
use infosel::lattice::{enumerate_lattice, enumerate_lattice_unbounded, verify_cmi_partition, MAX_FEATURES};
use infosel::selection::{select_features, Criterion, EstimatorKind, SelectionConfig};
use infosel::Seed;
use serde_json::json;

use crate::config::{default_system_params, ExperimentConfig, ExperimentId, PidOptions};
use crate::experiment::{pid_of_groups, run_experiment};
use crate::report::{summary_text, write_experiment, write_tables};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    ConfigError = 1,
    Partial = 2,
}

#[derive(Debug, Parser)]
#[command(name = "infosel", version, about = "Information-theoretic feature selection and decomposition")]
pub struct Cli {
    /// Base seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a benchmark system to CSV.
    Generate {
        /// spheres, statistical-model, friedman, runge, noise-model,
        /// gaussian-classes, linear-regression, toy or null.
        #[arg(long)]
        system: String,
        /// JSON object overriding the system's default parameters.
        #[arg(long)]
        params: Option<String>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Forward selection with backward elimination on a CSV.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "cmi")]
        criterion: Criterion,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        n_perm: usize,
        #[arg(long, default_value = "ksg")]
        estimator: EstimatorKind,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        bins: usize,
        #[arg(long, default_value = "equal-width")]
        bin_strategy: BinStrategy,
        #[arg(long)]
        max_features: Option<usize>,
    },
    /// Two-input PID of the target, binned plug-in estimate in bits.
    Pid {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated columns of the first input group.
        #[arg(long, value_delimiter = ',', required = true)]
        x1: Vec<String>,
        /// Comma-separated columns of the second input group.
        #[arg(long, value_delimiter = ',', required = true)]
        x2: Vec<String>,
        #[arg(long, default_value_t = 5)]
        bins: usize,
        #[arg(long, default_value = "equal-width")]
        bin_strategy: BinStrategy,
        #[arg(long, default_value_t = infosel::pid::DEFAULT_TOL)]
        tol: f64,
    },
    /// kNN regression MAE for every input subset.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
        #[arg(long)]
        max_size: Option<usize>,
        /// Scale inputs to unit variance before computing distances.
        #[arg(long)]
        standardize: bool,
    },
    /// Redundancy-lattice atom counts and coverage report.
    Lattice {
        #[arg(long)]
        n: usize,
        /// Allow five features (7579 atoms).
        #[arg(long)]
        unbounded: bool,
    },
    /// Run a configured experiment and write its output directory.
    RunExperiment {
        /// JSON experiment config.
        #[arg(long, required_unless_present = "experiment")]
        config: Option<PathBuf>,
        /// Run an experiment with default settings instead of a config file.
        #[arg(long, conflicts_with = "config")]
        experiment: Option<ExperimentId>,
        /// Override the number of runs.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Regenerate CSV tables from a report.json.
    Report {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Target column name (or 0-based index with --no-header).
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub no_header: bool,
    /// Columns to treat as discrete symbols.
    #[arg(long, value_delimiter = ',')]
    pub discrete: Vec<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let opts = CsvOptions { header: !self.no_header, force_discrete: self.discrete.clone(), force_continuous: Vec::new() };
        Ok(load_csv_with(&self.data, &self.target, &opts)?)
    }
}

fn column(data: &Dataset, name: &str) -> Result<usize> {
    match data.index_of(name) {
        Some(i) if i != data.target_index() => Ok(i),
        Some(_) => bail!("column {name:?} is the target"),
        None => bail!("no column named {name:?}"),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<Status> {
    let seed = Seed(cli.seed.unwrap_or(0));
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate { system, params, n } => {
            let mut v = default_system_params(&system)?;
            if let Some(p) = params {
                let p: serde_json::Value = serde_json::from_str(&p).context("--params is not valid JSON")?;
                let Some(obj) = p.as_object() else { bail!("--params must be a JSON object") };
                for (k, val) in obj {
                    v[k] = val.clone();
                }
            }
            v["n_samples"] = json!(n);
            v["seed"] = json!(seed.0);
            let cfg: GeneratorConfig = serde_json::from_value(v).context("invalid generator parameters")?;
            emit(out, &cfg.generate()?.data.to_csv_string())?;
        }
        Command::Select { data, criterion, alpha, n_perm, estimator, k, bins, bin_strategy, max_features } => {
            let ds = data.load()?;
            let cfg = SelectionConfig {
                criterion,
                alpha,
                n_perm,
                estimator,
                knn: KnnConfig { k, ..Default::default() },
                bins,
                bin_strategy,
                max_features,
                seed,
            };
            let result = select_features(&ds, &cfg)?;
            let names: Vec<&str> = result.selected.iter().map(|&i| ds.name(i)).collect();
            let body = json!({ "selected_names": names, "config": cfg, "result": result });
            let text = serde_json::to_string_pretty(&body)? + "\n";
            match out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join("result.json"), text)?;
                    let mut csv = String::from("step,winner,name,score,p_value,threshold,significant\n");
                    for s in &result.steps {
                        csv += &format!(
                            "{},{},{},{},{},{},{}\n",
                            s.step,
                            s.winner,
                            ds.name(s.winner),
                            s.score,
                            s.p_value,
                            s.threshold,
                            s.significant
                        );
                    }
                    fs::write(dir.join("steps.csv"), csv)?;
                }
                None => print!("{text}"),
            }
        }
        Command::Pid { data, x1, x2, bins, bin_strategy, tol } => {
            let ds = data.load()?;
            let a = x1.iter().map(|c| column(&ds, c)).collect::<Result<Vec<_>>>()?;
            let b = x2.iter().map(|c| column(&ds, c)).collect::<Result<Vec<_>>>()?;
            let r = pid_of_groups(&ds, &a, &b, &PidOptions { bins, bin_strategy, tol })?;
            let body = json!({ "units": "bits", "x1": x1, "x2": x2, "atoms": r.atoms, "terms": r.terms, "gap": r.gap });
            emit(out, &(serde_json::to_string_pretty(&body)? + "\n"))?;
        }
        Command::Evaluate { data, k, test_fraction, max_size, standardize } => {
            let ds = data.load()?;
            let opts = PowersetOptions { k, test_fraction, max_set_size: max_size, standardize, seed };
            let mut csv = String::from("subset,size,mae\n");
            for s in powerset_evaluation(&ds, &opts)? {
                let names: Vec<&str> = s.subset.iter().map(|&i| ds.name(i)).collect();
                csv += &format!("{},{},{}\n", names.join(";"), s.subset.len(), s.mae);
            }
            emit(out, &csv)?;
        }
        Command::Lattice { n, unbounded } => {
            let lattice = if unbounded { enumerate_lattice_unbounded(n)? } else { enumerate_lattice(n)? };
            let mut text = format!("features: {n}\natoms: {}\n", lattice.len());
            if n <= MAX_FEATURES {
                let r = verify_cmi_partition(n)?;
                text += &format!(
                    "CMI chain coverage: {:?} (disjoint: {}, covers all: {})\n\
                     MI coverage: {:?} (overlapping atoms: {}, uncovered: {}, covers top: {})\n",
                    r.cmi_sizes, r.cmi_disjoint, r.cmi_covers_all, r.mi_sizes, r.mi_overlap, r.mi_uncovered, r.mi_covers_top
                );
            }
            if n <= 3 {
                let names: Vec<String> = lattice.iter().map(|a| a.to_string()).collect();
                text += &format!("atoms: {}\n", names.join(" "));
            }
            emit(out, &text)?;
        }
        Command::RunExperiment { config, experiment, runs } => {
            let mut cfg = match (config, experiment) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
                    ExperimentConfig::from_json(&text)?
                }
                (None, Some(id)) => ExperimentConfig::new(id),
                (None, None) => bail!("either --config or --experiment is required"),
            };
            if let Some(s) = cli.seed {
                cfg.seed = Seed(s);
            }
            if let Some(r) = runs {
                cfg.n_runs = r;
            }
            if let Some(o) = out {
                cfg.output_dir = o.to_path_buf();
            }
            cfg.validate()?;
            let report = run_experiment(&cfg, cli.jobs)?;
            let dir = write_experiment(&report, &cfg.output_dir)?;
            print!("{}", summary_text(&report));
            println!("wrote {}", dir.display());
            for r in report.runs.iter().filter(|r| r.failure.is_some()) {
                let f = r.failure.as_ref().unwrap();
                eprintln!("run {} failed at {}: {}", r.run, f.stage, f.message);
            }
            if report.partial {
                return Ok(Status::Partial);
            }
        }
        Command::Report { report } => {
            let text = fs::read_to_string(&report).with_context(|| format!("cannot read {}", report.display()))?;
            let parsed = serde_json::from_str(&text).context("not a report.json")?;
            let dir = match out {
                Some(o) => o.to_path_buf(),
                None => report.parent().unwrap_or(Path::new(".")).join("tables"),
            };
            for p in write_tables(&parsed, &dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(Status::Success)
}
