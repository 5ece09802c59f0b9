//! Experiment configuration files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use infosel::benchmarks::{InputDistribution, ModelKind, NoiseKind, System};
use infosel::dataset::BinStrategy;
use infosel::selection::{Criterion, EstimatorKind, SelectionConfig};
use infosel::Seed;
use serde::{Deserialize, Serialize};

/// Version of the config and report JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ExperimentId {
    Spheres,
    Statmodels,
    Friedman(u8),
    Runge,
    NoiseMackay,
    NoiseHaufe,
    Gaussian(u8),
    AppendixC,
    Toy,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 15] = [
        ExperimentId::Spheres,
        ExperimentId::Statmodels,
        ExperimentId::Friedman(1),
        ExperimentId::Friedman(2),
        ExperimentId::Friedman(3),
        ExperimentId::Runge,
        ExperimentId::NoiseMackay,
        ExperimentId::NoiseHaufe,
        ExperimentId::Gaussian(1),
        ExperimentId::Gaussian(2),
        ExperimentId::Gaussian(3),
        ExperimentId::Gaussian(4),
        ExperimentId::Gaussian(5),
        ExperimentId::AppendixC,
        ExperimentId::Toy,
    ];

    /// Sweep experiments tabulate information terms over a parameter grid
    /// instead of running feature selection.
    pub fn is_sweep(self) -> bool {
        matches!(self, ExperimentId::Statmodels | ExperimentId::NoiseMackay | ExperimentId::NoiseHaufe)
    }

    pub fn default_system(self) -> Option<System> {
        Some(match self {
            ExperimentId::Spheres => System::Spheres { label_noise_sigma: 0.1 },
            ExperimentId::Friedman(1) => System::Friedman { model: 1, sigma: 0.0, nuisance: None },
            ExperimentId::Friedman(m) => System::Friedman { model: m, sigma: 1.0, nuisance: None },
            ExperimentId::Runge => System::Runge { a: 0.4, b: 2.0, c: 0.4, sigma: 0.5 },
            ExperimentId::Gaussian(example) => System::GaussianClasses { example },
            ExperimentId::AppendixC => System::LinearRegression { n_vars: 50, n_informative: 10, noise: 0.0 },
            ExperimentId::Toy => System::Toy,
            ExperimentId::Statmodels | ExperimentId::NoiseMackay | ExperimentId::NoiseHaufe => return None,
        })
    }

    pub fn default_n_samples(self) -> usize {
        match self {
            ExperimentId::Runge => 1002,
            ExperimentId::NoiseMackay | ExperimentId::NoiseHaufe => 2000,
            _ => 1000,
        }
    }

    pub fn default_selection(self) -> SelectionConfig {
        let mut cfg = SelectionConfig::default();
        if self == ExperimentId::AppendixC {
            cfg.estimator = EstimatorKind::Plugin;
        }
        cfg
    }

    /// PID of each true feature against the remaining inputs is tabulated by
    /// default only where the remaining set is small.
    pub fn default_pid(self) -> bool {
        matches!(self, ExperimentId::Spheres | ExperimentId::Gaussian(_) | ExperimentId::Toy) || self.is_sweep()
    }

    /// Standardized distances for the kNN evaluation where input ranges differ widely.
    pub fn default_standardize(self) -> bool {
        matches!(self, ExperimentId::Friedman(2) | ExperimentId::Friedman(3))
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentId::Spheres => f.write_str("spheres"),
            ExperimentId::Statmodels => f.write_str("statmodels"),
            ExperimentId::Friedman(m) => write!(f, "friedman{m}"),
            ExperimentId::Runge => f.write_str("runge"),
            ExperimentId::NoiseMackay => f.write_str("noise-mackay"),
            ExperimentId::NoiseHaufe => f.write_str("noise-haufe"),
            ExperimentId::Gaussian(e) => write!(f, "gaussian-{e}"),
            ExperimentId::AppendixC => f.write_str("appendix-c"),
            ExperimentId::Toy => f.write_str("toy-3.3.3"),
        }
    }
}

impl FromStr for ExperimentId {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match ExperimentId::ALL.iter().find(|id| id.to_string() == s) {
            Some(&id) => Ok(id),
            None => {
                let known: Vec<String> = ExperimentId::ALL.iter().map(|e| e.to_string()).collect();
                bail!("unknown experiment {s:?}; expected one of {}", known.join(", "))
            }
        }
    }
}

impl TryFrom<String> for ExperimentId {
    type Error = anyhow::Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ExperimentId> for String {
    fn from(id: ExperimentId) -> String {
        id.to_string()
    }
}

/// Discretization and solver settings for the plug-in PID tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidOptions {
    pub bins: usize,
    pub bin_strategy: BinStrategy,
    pub tol: f64,
}

impl Default for PidOptions {
    fn default() -> Self {
        PidOptions { bins: 5, bin_strategy: BinStrategy::EqualWidth, tol: infosel::pid::DEFAULT_TOL }
    }
}

/// kNN regression on the selected inputs, scored by test-set MAE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOptions {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub standardize: bool,
}

fn default_k() -> usize {
    5
}

fn default_test_fraction() -> f64 {
    0.3
}

/// Parameter grid of a sweep experiment. Unset axes take the experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    /// `weight_alpha` values (statmodels) or coupling `a` (noise models).
    pub values: Option<Vec<f64>>,
    pub sigmas: Option<Vec<f64>>,
    pub kinds: Option<Vec<ModelKind>>,
    pub dists: Option<Vec<InputDistribution>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub experiment: ExperimentId,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    /// Run `i` uses seed `seed + i` for generation and for the surrogate tests.
    #[serde(default)]
    pub seed: Seed,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub criteria: Option<Vec<Criterion>>,
    #[serde(default)]
    pub selection: Option<SelectionConfig>,
    /// Generator parameters; `n_samples` and `seed` are set per run.
    #[serde(default)]
    pub system: Option<System>,
    #[serde(default)]
    pub sweep: SweepGrid,
    #[serde(default)]
    pub pid: Option<bool>,
    #[serde(default)]
    pub pid_options: PidOptions,
    #[serde(default)]
    pub evaluate: Option<EvalOptions>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_runs() -> usize {
    20
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment,
            n_runs: default_runs(),
            seed: Seed(0),
            n_samples: None,
            criteria: None,
            selection: None,
            system: None,
            sweep: SweepGrid::default(),
            pid: None,
            pid_options: PidOptions::default(),
            evaluate: None,
            output_dir: default_output(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("invalid experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Copy with every defaulted field filled in, as embedded in reports.
    pub fn resolved(&self) -> ExperimentConfig {
        let id = self.experiment;
        let mut out = self.clone();
        out.n_samples = Some(self.n_samples());
        out.criteria = Some(self.criteria());
        out.selection = Some(self.selection());
        out.system = self.system.clone().or_else(|| id.default_system());
        out.pid = Some(self.pid_enabled());
        out.evaluate = self.evaluation();
        if id.is_sweep() {
            out.sweep = self.grid();
            out.criteria = None;
            out.selection = None;
            out.evaluate = None;
        }
        out
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples.unwrap_or(self.experiment.default_n_samples())
    }

    pub fn criteria(&self) -> Vec<Criterion> {
        self.criteria.clone().unwrap_or_else(|| vec![Criterion::Cmi, Criterion::Mi])
    }

    pub fn selection(&self) -> SelectionConfig {
        self.selection.clone().unwrap_or_else(|| self.experiment.default_selection())
    }

    pub fn pid_enabled(&self) -> bool {
        self.pid.unwrap_or(self.experiment.default_pid())
    }

    pub fn evaluation(&self) -> Option<EvalOptions> {
        if self.experiment.is_sweep() {
            return None;
        }
        Some(self.evaluate.unwrap_or(EvalOptions {
            k: default_k(),
            test_fraction: default_test_fraction(),
            standardize: self.experiment.default_standardize(),
        }))
    }

    /// The sweep grid with defaults filled in.
    pub fn grid(&self) -> SweepGrid {
        let g = &self.sweep;
        match self.experiment {
            ExperimentId::Statmodels => SweepGrid {
                values: Some(g.values.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0])),
                sigmas: Some(g.sigmas.clone().unwrap_or_else(|| vec![0.1])),
                kinds: Some(g.kinds.clone().unwrap_or_else(|| vec![ModelKind::Additive, ModelKind::Multiplicative])),
                dists: Some(g.dists.clone().unwrap_or_else(|| vec![InputDistribution::Uniform])),
            },
            _ => SweepGrid {
                values: Some(g.values.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0, 4.0])),
                sigmas: Some(g.sigmas.clone().unwrap_or_else(|| vec![0.1])),
                kinds: None,
                dists: None,
            },
        }
    }

    pub fn noise_kind(&self) -> Option<NoiseKind> {
        match self.experiment {
            ExperimentId::NoiseMackay => Some(NoiseKind::Mackay),
            ExperimentId::NoiseHaufe => Some(NoiseKind::Haufe),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        ensure!(self.n_runs >= 1, "n_runs must be at least 1");
        ensure!(self.n_samples() >= 1, "n_samples must be at least 1");
        let id = self.experiment;
        if id.is_sweep() {
            ensure!(self.system.is_none(), "{id} is a sweep experiment; set its grid under \"sweep\", not \"system\"");
            let g = self.grid();
            for v in g.values.iter().flatten() {
                let hi = if id == ExperimentId::Statmodels { 2.0 } else { 4.0 };
                ensure!((0.0..=hi).contains(v), "sweep value {v} outside [0, {hi}]");
            }
            for s in g.sigmas.iter().flatten() {
                ensure!(*s >= 0.0 && s.is_finite(), "sigma {s} must be finite and non-negative");
            }
        } else {
            self.selection().validate().context("invalid selection settings")?;
            ensure!(!self.criteria().is_empty(), "criteria must name at least one criterion");
            if let Some(e) = self.evaluation() {
                ensure!(e.k >= 1, "evaluate.k must be at least 1");
                ensure!(
                    e.test_fraction > 0.0 && e.test_fraction < 1.0,
                    "evaluate.test_fraction must lie in (0, 1)"
                );
            }
            if let (Some(given), Some(default)) = (&self.system, id.default_system()) {
                ensure!(
                    std::mem::discriminant(given) == std::mem::discriminant(&default),
                    "system {:?} does not belong to experiment {id}",
                    system_name(given)
                );
            }
        }
        ensure!(self.pid_options.bins >= 1, "pid_options.bins must be at least 1");
        ensure!(self.pid_options.tol > 0.0, "pid_options.tol must be positive");
        Ok(())
    }
}

pub fn system_name(s: &System) -> String {
    match serde_json::to_value(s) {
        Ok(v) => v["system"].as_str().unwrap_or("unknown").to_string(),
        Err(_) => "unknown".into(),
    }
}

/// Default generator parameters for a system name as accepted by `generate`.
pub fn default_system_params(name: &str) -> Result<serde_json::Value> {
    let system = match name {
        "spheres" => System::Spheres { label_noise_sigma: 0.1 },
        "statistical-model" => System::StatisticalModel {
            kind: ModelKind::Additive,
            weight_alpha: 0.5,
            sigma: 0.1,
            dist: InputDistribution::Uniform,
        },
        "friedman" => System::Friedman { model: 1, sigma: 0.0, nuisance: None },
        "runge" => System::Runge { a: 0.4, b: 2.0, c: 0.4, sigma: 0.5 },
        "noise-model" => System::NoiseModel { kind: NoiseKind::Mackay, a: 1.0, sigma: 0.1 },
        "gaussian-classes" => System::GaussianClasses { example: 1 },
        "linear-regression" => System::LinearRegression { n_vars: 50, n_informative: 10, noise: 0.0 },
        "toy" => System::Toy,
        "null" => System::Null { n_inputs: 10 },
        other => bail!(
            "unknown system {other:?}; expected spheres, statistical-model, friedman, runge, noise-model, \
             gaussian-classes, linear-regression, toy or null"
        ),
    };
    Ok(serde_json::to_value(system)?)
}
