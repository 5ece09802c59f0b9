//! Running an experiment: generate, select, decompose, evaluate, aggregate.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use infosel::benchmarks::{gen_noise_model, gen_statistical_model, GeneratorConfig, InputDistribution, ModelKind};
use infosel::dataset::{train_test_split, Dataset};
use infosel::estimators::Units;
use infosel::evaluation::{confusion_from_sets, knn_predict_with, mae, pearson_correlation, ConfusionCounts};
use infosel::pid::{empirical_triple, pid_report, InfoTerms, PidAtoms, PidReport};
use infosel::selection::{select_features, Criterion, EstimatorKind, SelectionResult};
use infosel::Seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentId, PidOptions, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSem {
    pub mean: f64,
    /// Standard error of the mean; 0 for a single value.
    pub sem: f64,
    pub n: usize,
}

impl MeanSem {
    pub fn of(values: &[f64]) -> Option<MeanSem> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sem = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanSem { mean, sem, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRun {
    pub criterion: Criterion,
    pub result: SelectionResult,
    /// kNN test MAE on the selected inputs; absent for an empty selection.
    pub mae: Option<f64>,
}

/// PID of one true input (X1) against all other inputs jointly (X2), bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PidRow {
    pub feature: usize,
    pub name: String,
    pub rest: Vec<usize>,
    pub report: PidReport,
}

/// One grid point of a sweep, bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub kind: String,
    pub value: f64,
    pub sigma: f64,
    pub dist: Option<InputDistribution>,
    pub terms: InfoTerms,
    pub atoms: PidAtoms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: Seed,
    pub failure: Option<RunFailure>,
    pub ground_truth: Vec<usize>,
    pub selections: Vec<SelectionRun>,
    pub pid: Vec<PidRow>,
    pub sweep: Vec<SweepPoint>,
    /// Pearson correlation of the two inputs (Gaussian class examples).
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableCount {
    pub variable: usize,
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    /// Runs that reached this step.
    pub runs: usize,
    pub score: MeanSem,
    pub threshold: MeanSem,
    pub p_value: MeanSem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: Criterion,
    pub estimator: EstimatorKind,
    pub units: Units,
    pub confusion: ConfusionCounts,
    pub frequency: Vec<VariableCount>,
    /// Most frequent final set (ties to the lexicographically smallest) and its count.
    pub modal_set: Vec<usize>,
    pub modal_count: usize,
    pub set_size: MeanSem,
    pub mae: Option<MeanSem>,
    pub steps: Vec<StepSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PidSummary {
    pub feature: usize,
    pub name: String,
    pub unq_feature: MeanSem,
    pub unq_rest: MeanSem,
    pub shd: MeanSem,
    pub syn: MeanSem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub kind: String,
    pub value: f64,
    pub sigma: f64,
    pub dist: Option<InputDistribution>,
    pub mi_x1: MeanSem,
    pub mi_x2: MeanSem,
    pub mi_joint: MeanSem,
    pub cmi_x1_given_x2: MeanSem,
    pub cmi_x2_given_x1: MeanSem,
    pub unq_x1: MeanSem,
    pub unq_x2: MeanSem,
    pub shd: MeanSem,
    pub syn: MeanSem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentId,
    /// The resolved configuration; feeding it back reproduces the report.
    pub config: ExperimentConfig,
    pub variables: Vec<String>,
    pub completed: usize,
    pub failed: usize,
    pub partial: bool,
    pub runs: Vec<RunRecord>,
    pub criteria: Vec<CriterionSummary>,
    /// Units and estimator of every PID and sweep value.
    pub pid_units: Units,
    pub pid_estimator: String,
    pub pid: Vec<PidSummary>,
    pub sweep: Vec<SweepSummary>,
    pub correlation: Option<MeanSem>,
}

/// Runs every seeded repetition of `cfg` on up to `jobs` threads (all cores
/// when `None`). Failed runs are recorded and excluded from the summaries.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().context("cannot start worker threads")?;
    let outcomes: Vec<(RunRecord, Vec<String>)> =
        pool.install(|| (0..cfg.n_runs).into_par_iter().map(|r| run_once(&cfg, r)).collect());
    let variables = outcomes.iter().find(|o| !o.1.is_empty()).map(|o| o.1.clone()).unwrap_or_default();
    let runs: Vec<RunRecord> = outcomes.into_iter().map(|o| o.0).collect();
    Ok(summarize(cfg, variables, runs))
}

fn run_once(cfg: &ExperimentConfig, run: usize) -> (RunRecord, Vec<String>) {
    let seed = cfg.seed.offset(run as u64);
    let mut record = RunRecord {
        run,
        seed,
        failure: None,
        ground_truth: Vec::new(),
        selections: Vec::new(),
        pid: Vec::new(),
        sweep: Vec::new(),
        correlation: None,
    };
    let mut names = Vec::new();
    let outcome = if cfg.experiment.is_sweep() {
        sweep_run(cfg, seed, &mut record)
    } else {
        selection_run(cfg, seed, &mut record, &mut names)
    };
    if let Err((stage, err)) = outcome {
        record.selections.clear();
        record.pid.clear();
        record.sweep.clear();
        record.correlation = None;
        record.failure = Some(RunFailure { stage, message: format!("{err:#}") });
    }
    (record, names)
}

type Staged<T> = std::result::Result<T, (String, anyhow::Error)>;

fn stage<T, E: Into<anyhow::Error>>(name: impl Into<String>, r: std::result::Result<T, E>) -> Staged<T> {
    r.map_err(|e| (name.into(), e.into()))
}

fn selection_run(cfg: &ExperimentConfig, seed: Seed, record: &mut RunRecord, names: &mut Vec<String>) -> Staged<()> {
    let system = cfg.system.clone().expect("resolved config carries a system");
    let generated = stage("generate", GeneratorConfig { system, n_samples: cfg.n_samples(), seed }.generate())?;
    let data = generated.data;
    record.ground_truth = generated.ground_truth;
    *names = data.variables().iter().map(|v| v.name.clone()).collect();

    if let ExperimentId::Gaussian(_) = cfg.experiment {
        let r = pearson_correlation(&data.variable(0).as_f64(), &data.variable(1).as_f64());
        record.correlation = Some(stage("correlation", r)?);
    }

    let split = match cfg.evaluation() {
        Some(e) => Some((stage("evaluate", train_test_split(&data, e.test_fraction, seed))?, e)),
        None => None,
    };
    for criterion in cfg.criteria() {
        let mut sel = cfg.selection();
        sel.criterion = criterion;
        sel.seed = seed;
        let result = stage(format!("select:{}", criterion_name(criterion)), select_features(&data, &sel))?;
        let mae = match &split {
            Some(((train, test), e)) if !result.selected.is_empty() => {
                let pred = stage("evaluate", knn_predict_with(train, test, &result.selected, e.k, e.standardize))?;
                Some(stage("evaluate", mae(&pred, &test.target().as_f64()))?)
            }
            _ => None,
        };
        record.selections.push(SelectionRun { criterion, result, mae });
    }

    if cfg.pid_enabled() {
        let inputs = data.input_indices();
        for &f in &record.ground_truth {
            let rest: Vec<usize> = inputs.iter().copied().filter(|&i| i != f).collect();
            if rest.is_empty() {
                continue;
            }
            let report = stage("pid", feature_vs_rest(&data, f, &rest, &cfg.pid_options))?;
            record.pid.push(PidRow { feature: f, name: data.name(f).to_string(), rest, report });
        }
    }
    Ok(())
}

fn symbols(data: &Dataset, i: usize, opts: &PidOptions) -> infosel::Result<Vec<usize>> {
    data.variable(i).symbols(opts.bins, opts.bin_strategy)
}

/// Plug-in PID of (target; `x1` columns, `x2` columns) after binning.
pub fn pid_of_groups(data: &Dataset, x1: &[usize], x2: &[usize], opts: &PidOptions) -> Result<PidReport> {
    let y = symbols(data, data.target_index(), opts)?;
    let a = x1.iter().map(|&i| symbols(data, i, opts)).collect::<infosel::Result<Vec<_>>>()?;
    let b = x2.iter().map(|&i| symbols(data, i, opts)).collect::<infosel::Result<Vec<_>>>()?;
    let a: Vec<&[usize]> = a.iter().map(Vec::as_slice).collect();
    let b: Vec<&[usize]> = b.iter().map(Vec::as_slice).collect();
    Ok(pid_report(&empirical_triple(&y, &a, &b)?, opts.tol)?)
}

fn feature_vs_rest(data: &Dataset, f: usize, rest: &[usize], opts: &PidOptions) -> Result<PidReport> {
    pid_of_groups(data, &[f], rest, opts)
}

fn sweep_run(cfg: &ExperimentConfig, seed: Seed, record: &mut RunRecord) -> Staged<()> {
    let grid = cfg.grid();
    let n = cfg.n_samples();
    let values = grid.values.unwrap_or_default();
    let sigmas = grid.sigmas.unwrap_or_default();
    let mut points: Vec<(String, f64, f64, Option<InputDistribution>, Dataset)> = Vec::new();
    if let Some(kind) = cfg.noise_kind() {
        for &sigma in &sigmas {
            for &a in &values {
                let data = stage("generate", gen_noise_model(kind, a, sigma, n, seed))?;
                points.push((enum_name(&kind), a, sigma, None, data));
            }
        }
    } else {
        for kind in grid.kinds.unwrap_or_default() {
            for dist in grid.dists.clone().unwrap_or_default() {
                for &sigma in &sigmas {
                    for &w in &values {
                        let data = stage("generate", gen_statistical_model(kind, w, sigma, dist, n, seed))?;
                        points.push((model_name(kind), w, sigma, Some(dist), data));
                    }
                }
            }
        }
    }
    for (kind, value, sigma, dist, data) in points {
        let r = stage("pid", pid_of_groups(&data, &[0], &[1], &cfg.pid_options))?;
        record.sweep.push(SweepPoint { kind, value, sigma, dist, terms: r.terms, atoms: r.atoms });
    }
    Ok(())
}

pub fn criterion_name(c: Criterion) -> &'static str {
    match c {
        Criterion::Cmi => "cmi",
        Criterion::Mi => "mi",
    }
}

fn model_name(k: ModelKind) -> String {
    enum_name(&k)
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn summarize(cfg: ExperimentConfig, variables: Vec<String>, runs: Vec<RunRecord>) -> ExperimentReport {
    let ok: Vec<&RunRecord> = runs.iter().filter(|r| r.failure.is_none()).collect();
    let failed = runs.len() - ok.len();
    let sel = cfg.selection.clone().unwrap_or_default();
    let n_inputs = variables.len().saturating_sub(1);
    let name = |i: usize| variables.get(i).cloned().unwrap_or_else(|| format!("#{i}"));

    let mut criteria = Vec::new();
    if !ok.is_empty() {
        for criterion in cfg.criteria.clone().unwrap_or_default() {
            let picked: Vec<&SelectionRun> =
                ok.iter().filter_map(|r| r.selections.iter().find(|s| s.criterion == criterion)).collect();
            let truth = &ok[0].ground_truth;
            let sets: Vec<&[usize]> = picked.iter().map(|s| s.result.selected.as_slice()).collect();
            let Ok(confusion) = confusion_from_sets(&sets, truth, n_inputs) else { continue };

            let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
            let mut modal: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for s in &sets {
                for &v in s.iter() {
                    *freq.entry(v).or_default() += 1;
                }
                let mut key = s.to_vec();
                key.sort_unstable();
                *modal.entry(key).or_default() += 1;
            }
            let (modal_set, modal_count) = modal
                .iter()
                .fold((Vec::new(), 0), |best, (k, &c)| if c > best.1 { (k.clone(), c) } else { best });

            let max_steps = picked.iter().map(|s| s.result.steps.len()).max().unwrap_or(0);
            let steps = (0..max_steps)
                .filter_map(|i| {
                    let recs: Vec<_> = picked.iter().filter_map(|s| s.result.steps.get(i)).collect();
                    let col = |f: fn(&infosel::selection::StepRecord) -> f64| {
                        MeanSem::of(&recs.iter().map(|r| f(r)).collect::<Vec<_>>())
                    };
                    Some(StepSummary {
                        step: i + 1,
                        runs: recs.len(),
                        score: col(|r| r.score)?,
                        threshold: col(|r| r.threshold)?,
                        p_value: col(|r| r.p_value)?,
                    })
                })
                .collect();
            let maes: Vec<f64> = picked.iter().filter_map(|s| s.mae).collect();
            let sizes: Vec<f64> = sets.iter().map(|s| s.len() as f64).collect();
            criteria.push(CriterionSummary {
                criterion,
                estimator: sel.estimator,
                units: sel.estimator.units(),
                confusion,
                frequency: freq.into_iter().map(|(v, c)| VariableCount { variable: v, name: name(v), count: c }).collect(),
                modal_set,
                modal_count,
                set_size: MeanSem::of(&sizes).unwrap_or(MeanSem { mean: 0.0, sem: 0.0, n: 0 }),
                mae: MeanSem::of(&maes),
                steps,
            });
        }
    }

    let mut pid_by_feature: BTreeMap<usize, Vec<&PidRow>> = BTreeMap::new();
    for r in &ok {
        for row in &r.pid {
            pid_by_feature.entry(row.feature).or_default().push(row);
        }
    }
    let pid = pid_by_feature
        .into_iter()
        .filter_map(|(feature, rows)| {
            let col = |f: fn(&PidAtoms) -> f64| MeanSem::of(&rows.iter().map(|r| f(&r.report.atoms)).collect::<Vec<_>>());
            Some(PidSummary {
                feature,
                name: rows[0].name.clone(),
                unq_feature: col(|a| a.unq_x1)?,
                unq_rest: col(|a| a.unq_x2)?,
                shd: col(|a| a.shd)?,
                syn: col(|a| a.syn)?,
            })
        })
        .collect();

    let mut sweep = Vec::new();
    if let Some(first) = ok.first() {
        for (i, p) in first.sweep.iter().enumerate() {
            let pts: Vec<&SweepPoint> = ok.iter().filter_map(|r| r.sweep.get(i)).collect();
            let t = |f: fn(&InfoTerms) -> f64| MeanSem::of(&pts.iter().map(|p| f(&p.terms)).collect::<Vec<_>>()).unwrap();
            let a = |f: fn(&PidAtoms) -> f64| MeanSem::of(&pts.iter().map(|p| f(&p.atoms)).collect::<Vec<_>>()).unwrap();
            sweep.push(SweepSummary {
                kind: p.kind.clone(),
                value: p.value,
                sigma: p.sigma,
                dist: p.dist,
                mi_x1: t(|t| t.mi_x1),
                mi_x2: t(|t| t.mi_x2),
                mi_joint: t(|t| t.mi_joint),
                cmi_x1_given_x2: t(|t| t.cmi_x1_given_x2),
                cmi_x2_given_x1: t(|t| t.cmi_x2_given_x1),
                unq_x1: a(|a| a.unq_x1),
                unq_x2: a(|a| a.unq_x2),
                shd: a(|a| a.shd),
                syn: a(|a| a.syn),
            });
        }
    }

    let correlations: Vec<f64> = ok.iter().filter_map(|r| r.correlation).collect();
    let po = cfg.pid_options;
    ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment,
        variables,
        completed: ok.len(),
        failed,
        partial: failed > 0,
        criteria,
        pid_units: Units::Bits,
        pid_estimator: format!("plugin, {} {} bins", po.bins, enum_name(&po.bin_strategy)),
        pid,
        sweep,
        correlation: MeanSem::of(&correlations),
        config: cfg,
        runs,
    }
}
