//! Greedy forward selection with surrogate-based stopping, followed by
//! backward elimination of features that became redundant.
//!
//! Scores are I(X;Y|S) for the conditional criterion and I(X;Y) for the
//! unconditional one, from either the plug-in estimator (bits, after
//! discretizing continuous columns) or the nearest-neighbour estimator
//! (nats). Each forward step is tested with the maximum statistic: every
//! surrogate round permutes each remaining candidate and keeps the largest
//! surrogate score. Pruning mirrors this with the minimum statistic over the
//! current selection.

use serde::{Deserialize, Serialize};

use crate::dataset::{permute_variable, BinStrategy, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{KnnConfig, KnnContext, PluginContext, Units};
use crate::rng::Seed;

const FORWARD_PHASE: u64 = 1;
const BACKWARD_PHASE: u64 = 2;
const SINGLE_PHASE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Cmi,
    Mi,
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cmi" => Ok(Criterion::Cmi),
            "mi" => Ok(Criterion::Mi),
            other => Err(Error::InvalidArgument(format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Plugin,
    Ksg,
}

impl EstimatorKind {
    pub fn units(self) -> Units {
        match self {
            EstimatorKind::Plugin => Units::Bits,
            EstimatorKind::Ksg => Units::Nats,
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plugin" | "plug-in" => Ok(EstimatorKind::Plugin),
            "ksg" | "knn" => Ok(EstimatorKind::Ksg),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub criterion: Criterion,
    pub alpha: f64,
    pub n_perm: usize,
    pub estimator: EstimatorKind,
    pub knn: KnnConfig,
    /// Bin count used by the plug-in estimator for continuous columns.
    pub bins: usize,
    pub bin_strategy: BinStrategy,
    pub max_features: Option<usize>,
    pub seed: Seed,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            criterion: Criterion::Cmi,
            alpha: 0.05,
            n_perm: 200,
            estimator: EstimatorKind::Ksg,
            knn: KnnConfig::default(),
            bins: 5,
            bin_strategy: BinStrategy::EqualWidth,
            max_features: None,
            seed: Seed(0),
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        let needed = (1.0 / self.alpha).ceil() as usize - 1;
        if self.n_perm < needed {
            return Err(Error::InvalidArgument(format!(
                "n_perm {} cannot reach significance at alpha {}; need at least {needed}",
                self.n_perm, self.alpha
            )));
        }
        if self.estimator == EstimatorKind::Ksg && self.knn.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.estimator == EstimatorKind::Plugin && self.bins == 0 {
            return Err(Error::InvalidArgument("bins must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// (variable index, score) for every candidate, in index order.
    pub scores: Vec<(usize, f64)>,
    pub winner: usize,
    pub score: f64,
    pub p_value: f64,
    pub significant: bool,
    /// Score the winner had to exceed, given the surrogates.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub round: usize,
    /// (variable index, score given the rest of the selection).
    pub scores: Vec<(usize, f64)>,
    pub weakest: usize,
    pub score: f64,
    pub p_value: f64,
    pub significant: bool,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    NoSignificantCandidate,
    MaxFeatures,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected variables in order of inclusion.
    pub selected: Vec<usize>,
    pub steps: Vec<StepRecord>,
    /// Variables removed by backward elimination, in removal order.
    pub pruned: Vec<usize>,
    pub pruning: Vec<PruneRecord>,
    pub termination: Termination,
    pub units: Units,
}

/// Column views of a dataset in the form the configured estimator consumes.
enum Columns {
    Real(Vec<Vec<f64>>),
    Symbols(Vec<Vec<usize>>),
}

impl Columns {
    fn new(data: &Dataset, cfg: &SelectionConfig) -> Result<Self> {
        match cfg.estimator {
            EstimatorKind::Ksg => Ok(Columns::Real(data.variables().iter().map(|v| v.as_f64()).collect())),
            EstimatorKind::Plugin => data
                .variables()
                .iter()
                .map(|v| {
                    v.symbols(cfg.bins, cfg.bin_strategy).map_err(|e| Error::Estimation {
                        variable: v.name.clone(),
                        message: e.to_string(),
                    })
                })
                .collect::<Result<_>>()
                .map(Columns::Symbols),
        }
    }
}

/// I(· ; Y | Z) for a fixed target and conditioning set.
enum Scorer {
    Knn(KnnContext),
    Plugin(PluginContext),
}

impl Scorer {
    fn new(cols: &Columns, target: usize, cond: &[usize], cfg: &SelectionConfig) -> Result<Self> {
        match cols {
            Columns::Real(c) => {
                let z: Vec<&[f64]> = cond.iter().map(|&i| c[i].as_slice()).collect();
                Ok(Scorer::Knn(KnnContext::new(&[&c[target]], &z, &cfg.knn)?))
            }
            Columns::Symbols(c) => {
                let z: Vec<&[usize]> = cond.iter().map(|&i| c[i].as_slice()).collect();
                Ok(Scorer::Plugin(PluginContext::new(&c[target], &z)?))
            }
        }
    }

    fn score(&self, cols: &Columns, var: usize) -> Result<f64> {
        match (self, cols) {
            (Scorer::Knn(ctx), Columns::Real(c)) => ctx.estimate(&[&c[var]]),
            (Scorer::Plugin(ctx), Columns::Symbols(c)) => ctx.estimate(&c[var]),
            _ => unreachable!("scorer and columns built from the same config"),
        }
    }

    fn score_permuted(&self, cols: &Columns, var: usize, seed: Seed) -> Result<f64> {
        match (self, cols) {
            (Scorer::Knn(ctx), Columns::Real(c)) => ctx.estimate(&[&permute_variable(&c[var], seed)]),
            (Scorer::Plugin(ctx), Columns::Symbols(c)) => ctx.estimate(&permute_variable(&c[var], seed)),
            _ => unreachable!("scorer and columns built from the same config"),
        }
    }
}

fn named(data: &Dataset, var: usize) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        e @ Error::Estimation { .. } => e,
        other => Error::Estimation {
            variable: data.name(var).to_string(),
            message: other.to_string(),
        },
    }
}

/// Seed of the permutation of `var` in surrogate round `round`.
fn surrogate_seed(cfg: &SelectionConfig, phase: u64, step: usize, round: usize, var: usize) -> Seed {
    Seed(cfg.seed.stream(&[phase, step as u64, round as u64, var as u64]).next_u64())
}

fn p_value(observed: f64, surrogates: &[f64]) -> f64 {
    let exceed = surrogates.iter().filter(|&&s| s >= observed).count();
    (1 + exceed) as f64 / (1 + surrogates.len()) as f64
}

/// Value an observed score must strictly exceed to be significant: the
/// (c+1)-th largest surrogate, with c the largest exceedance count allowed.
fn threshold(surrogates: &[f64], alpha: f64) -> f64 {
    let n = surrogates.len();
    let allowed = ((alpha * (1 + n) as f64 + 1e-9).floor() as usize).saturating_sub(1);
    if allowed >= n {
        return f64::NEG_INFINITY;
    }
    let mut sorted = surrogates.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    sorted[allowed]
}

fn check_inputs(data: &Dataset, vars: &[usize]) -> Result<()> {
    let t = data.target_index();
    for &v in vars {
        if v >= data.n_variables() {
            return Err(Error::InvalidArgument(format!("variable index {v} out of range")));
        }
        if v == t {
            return Err(Error::InvalidArgument("the target cannot be a candidate".into()));
        }
    }
    Ok(())
}

fn conditioning(cfg: &SelectionConfig, selected: &[usize]) -> Vec<usize> {
    match cfg.criterion {
        Criterion::Cmi => selected.to_vec(),
        Criterion::Mi => Vec::new(),
    }
}

/// Criterion score of each remaining candidate given the selected set.
pub fn score_candidates(
    data: &Dataset,
    selected: &[usize],
    remaining: &[usize],
    cfg: &SelectionConfig,
) -> Result<Vec<(usize, f64)>> {
    if remaining.is_empty() {
        return Err(Error::InvalidArgument("no remaining candidates".into()));
    }
    check_inputs(data, selected)?;
    check_inputs(data, remaining)?;
    if remaining.iter().any(|r| selected.contains(r)) {
        return Err(Error::InvalidArgument("selected and remaining sets overlap".into()));
    }
    let cols = Columns::new(data, cfg)?;
    let scorer = Scorer::new(&cols, data.target_index(), &conditioning(cfg, selected), cfg)?;
    remaining
        .iter()
        .map(|&v| scorer.score(&cols, v).map(|s| (v, s)).map_err(named(data, v)))
        .collect()
}

/// Maximum-statistic test of the best candidate; returns (p-value, significant).
pub fn max_statistic_test(
    data: &Dataset,
    selected: &[usize],
    remaining: &[usize],
    winner: usize,
    observed: f64,
    cfg: &SelectionConfig,
) -> Result<(f64, bool)> {
    if !remaining.contains(&winner) {
        return Err(Error::InvalidArgument("winner is not a remaining candidate".into()));
    }
    check_inputs(data, remaining)?;
    cfg.validate()?;
    let cols = Columns::new(data, cfg)?;
    let scorer = Scorer::new(&cols, data.target_index(), &conditioning(cfg, selected), cfg)?;
    let maxima = surrogate_extremes(data, &cols, &[(&scorer, remaining)], cfg, FORWARD_PHASE, selected.len(), f64::max)?;
    let p = p_value(observed, &maxima);
    Ok((p, p <= cfg.alpha))
}

/// Per-round extreme (max or min) of surrogate scores over all `(scorer, vars)` pairs.
fn surrogate_extremes(
    data: &Dataset,
    cols: &Columns,
    groups: &[(&Scorer, &[usize])],
    cfg: &SelectionConfig,
    phase: u64,
    step: usize,
    pick: fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cfg.n_perm);
    for round in 0..cfg.n_perm {
        let mut acc: Option<f64> = None;
        for (scorer, vars) in groups {
            for &v in *vars {
                let s = scorer
                    .score_permuted(cols, v, surrogate_seed(cfg, phase, step, round, v))
                    .map_err(named(data, v))?;
                acc = Some(acc.map_or(s, |a| pick(a, s)));
            }
        }
        out.push(acc.unwrap_or(f64::NEG_INFINITY));
    }
    Ok(out)
}

fn argmax_lowest(scores: &[(usize, f64)]) -> (usize, f64) {
    let mut best = scores[0];
    for &(v, s) in &scores[1..] {
        if s > best.1 || (s == best.1 && v < best.0) {
            best = (v, s);
        }
    }
    best
}

fn argmin_lowest(scores: &[(usize, f64)]) -> (usize, f64) {
    let mut best = scores[0];
    for &(v, s) in &scores[1..] {
        if s < best.1 || (s == best.1 && v < best.0) {
            best = (v, s);
        }
    }
    best
}

/// Forward pass only; `pruned` is empty in the result.
pub fn forward_select(data: &Dataset, cfg: &SelectionConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let mut remaining = data.input_indices();
    if remaining.is_empty() {
        return Err(Error::InvalidDataset("no input variables".into()));
    }
    let cols = Columns::new(data, cfg)?;
    let target = data.target_index();
    let mut selected: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let termination = loop {
        if remaining.is_empty() {
            break Termination::Exhausted;
        }
        if cfg.max_features.is_some_and(|m| selected.len() >= m) {
            break Termination::MaxFeatures;
        }
        let scorer = Scorer::new(&cols, target, &conditioning(cfg, &selected), cfg)?;
        let scores: Vec<(usize, f64)> = remaining
            .iter()
            .map(|&v| scorer.score(&cols, v).map(|s| (v, s)).map_err(named(data, v)))
            .collect::<Result<_>>()?;
        let (winner, score) = argmax_lowest(&scores);
        let maxima = surrogate_extremes(data, &cols, &[(&scorer, &remaining)], cfg, FORWARD_PHASE, steps.len(), f64::max)?;
        let p = p_value(score, &maxima);
        let significant = p <= cfg.alpha;
        steps.push(StepRecord {
            step: steps.len(),
            scores,
            winner,
            score,
            p_value: p,
            significant,
            threshold: threshold(&maxima, cfg.alpha),
        });
        if !significant {
            break Termination::NoSignificantCandidate;
        }
        selected.push(winner);
        remaining.retain(|&v| v != winner);
    };
    Ok(SelectionResult {
        selected,
        steps,
        pruned: Vec::new(),
        pruning: Vec::new(),
        termination,
        units: cfg.estimator.units(),
    })
}

/// Iteratively removes the weakest selected feature while it fails the
/// minimum-statistic test. Returns the surviving set (inclusion order kept)
/// with the pruning records; `steps` is empty.
pub fn backward_eliminate(data: &Dataset, selected: &[usize], cfg: &SelectionConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    check_inputs(data, selected)?;
    let cols = Columns::new(data, cfg)?;
    let target = data.target_index();
    let mut current = selected.to_vec();
    let mut pruned = Vec::new();
    let mut pruning = Vec::new();
    while !current.is_empty() {
        let scorers: Vec<Scorer> = current
            .iter()
            .map(|&f| {
                let rest: Vec<usize> = current.iter().copied().filter(|&v| v != f).collect();
                Scorer::new(&cols, target, &conditioning(cfg, &rest), cfg)
            })
            .collect::<Result<_>>()?;
        let scores: Vec<(usize, f64)> = current
            .iter()
            .zip(&scorers)
            .map(|(&f, sc)| sc.score(&cols, f).map(|s| (f, s)).map_err(named(data, f)))
            .collect::<Result<_>>()?;
        let (weakest, score) = argmin_lowest(&scores);
        let singles: Vec<[usize; 1]> = current.iter().map(|&f| [f]).collect();
        let groups: Vec<(&Scorer, &[usize])> = scorers.iter().zip(&singles).map(|(s, f)| (s, &f[..])).collect();
        let minima = surrogate_extremes(data, &cols, &groups, cfg, BACKWARD_PHASE, pruning.len(), f64::min)?;
        let p = p_value(score, &minima);
        let significant = p <= cfg.alpha;
        pruning.push(PruneRecord {
            round: pruning.len(),
            scores,
            weakest,
            score,
            p_value: p,
            significant,
            threshold: threshold(&minima, cfg.alpha),
        });
        if significant {
            break;
        }
        current.retain(|&v| v != weakest);
        pruned.push(weakest);
    }
    Ok(SelectionResult {
        selected: current,
        steps: Vec::new(),
        pruned,
        pruning,
        termination: Termination::Exhausted,
        units: cfg.estimator.units(),
    })
}

/// Forward selection followed by backward elimination.
pub fn select_features(data: &Dataset, cfg: &SelectionConfig) -> Result<SelectionResult> {
    let mut result = forward_select(data, cfg)?;
    if result.selected.is_empty() {
        return Ok(result);
    }
    let back = backward_eliminate(data, &result.selected, cfg)?;
    result.selected = back.selected;
    result.pruned = back.pruned;
    result.pruning = back.pruning;
    Ok(result)
}

/// Permutation test of a single variable's score given a conditioning set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTest {
    pub score: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Tests I(X;Y|Z) (or I(X;Y) for empty `conditioning`) against `n_perm`
/// permutations of X. The criterion field of `cfg` is ignored.
pub fn significance_test(
    data: &Dataset,
    variable: usize,
    conditioning: &[usize],
    cfg: &SelectionConfig,
) -> Result<SignificanceTest> {
    cfg.validate()?;
    check_inputs(data, &[variable])?;
    check_inputs(data, conditioning)?;
    let cols = Columns::new(data, cfg)?;
    let scorer = Scorer::new(&cols, data.target_index(), conditioning, cfg)?;
    let score = scorer.score(&cols, variable).map_err(named(data, variable))?;
    let surrogates = surrogate_extremes(
        data,
        &cols,
        &[(&scorer, &[variable][..])],
        cfg,
        SINGLE_PHASE,
        conditioning.len(),
        f64::max,
    )?;
    let p = p_value(score, &surrogates);
    Ok(SignificanceTest {
        score,
        p_value: p,
        significant: p <= cfg.alpha,
    })
}
