//! Predictive evaluation of feature subsets and selection-quality accounting.

use serde::{Deserialize, Serialize};

use crate::dataset::{split_indices, Dataset};
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::selection::SelectionResult;

/// Largest number of subsets a sweep may evaluate.
const SUBSET_BUDGET: u64 = 1 << 20;

fn features(data: &Dataset, subset: &[usize]) -> Result<Vec<Vec<f64>>> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("feature subset is empty".into()));
    }
    subset
        .iter()
        .map(|&i| {
            if i >= data.n_variables() || i == data.target_index() {
                Err(Error::InvalidArgument(format!("feature index {i} is not an input")))
            } else {
                Ok(data.variable(i).as_f64())
            }
        })
        .collect()
}

/// Mean and standard deviation of each column (sd 1 for constant columns).
fn column_scales(cols: &[Vec<f64>]) -> Vec<(f64, f64)> {
    cols.iter()
        .map(|c| {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect()
}

/// Mean target of the `k` nearest training rows (Euclidean distance on the
/// subset columns; equal distances resolved by lower training row).
pub fn knn_predict(train: &Dataset, test: &Dataset, feature_subset: &[usize], k: usize) -> Result<Vec<f64>> {
    knn_predict_with(train, test, feature_subset, k, false)
}

/// As [`knn_predict`]; with `standardize` every column is centred and scaled
/// by the training-set mean and standard deviation first.
pub fn knn_predict_with(
    train: &Dataset,
    test: &Dataset,
    feature_subset: &[usize],
    k: usize,
    standardize: bool,
) -> Result<Vec<f64>> {
    if k == 0 || k > train.n_samples() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={}",
            train.n_samples()
        )));
    }
    let mut a = features(train, feature_subset)?;
    let mut b = features(test, feature_subset)?;
    if standardize {
        let scales = column_scales(&a);
        for ((ca, cb), (mean, sd)) in a.iter_mut().zip(b.iter_mut()).zip(scales) {
            for v in ca.iter_mut().chain(cb.iter_mut()) {
                *v = (*v - mean) / sd;
            }
        }
    }
    let y = train.target().as_f64();
    let (n_train, n_test) = (train.n_samples(), test.n_samples());
    let mut dist = vec![0.0; n_train];
    let mut order: Vec<usize> = Vec::with_capacity(n_train);
    let mut out = Vec::with_capacity(n_test);
    for t in 0..n_test {
        dist.iter_mut().for_each(|d| *d = 0.0);
        for (ca, cb) in a.iter().zip(&b) {
            let q = cb[t];
            for (d, &v) in dist.iter_mut().zip(ca) {
                *d += (v - q) * (v - q);
            }
        }
        order.clear();
        order.extend(0..n_train);
        let cmp = |&i: &usize, &j: &usize| dist[i].total_cmp(&dist[j]).then(i.cmp(&j));
        if k < n_train {
            order.select_nth_unstable_by(k - 1, cmp);
        }
        out.push(order[..k].iter().map(|&i| y[i]).sum::<f64>() / k as f64);
    }
    Ok(out)
}

/// Mean absolute error.
pub fn mae(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("mae of empty vectors".into()));
    }
    Ok(predictions.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub subset: Vec<usize>,
    pub mae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowersetOptions {
    pub k: usize,
    pub test_fraction: f64,
    pub max_set_size: Option<usize>,
    pub standardize: bool,
    pub seed: Seed,
}

impl Default for PowersetOptions {
    fn default() -> Self {
        PowersetOptions {
            k: 5,
            test_fraction: 0.3,
            max_set_size: None,
            standardize: false,
            seed: Seed(0),
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// kNN test error of every non-empty input subset (up to `max_set_size`
/// features) on one shared train/test split, sorted by size, then error,
/// then the subset itself.
pub fn powerset_evaluation(data: &Dataset, opts: &PowersetOptions) -> Result<Vec<SubsetScore>> {
    let inputs = data.input_indices();
    if inputs.is_empty() {
        return Err(Error::InvalidDataset("no input variables".into()));
    }
    let max_size = opts.max_set_size.unwrap_or(inputs.len()).min(inputs.len());
    let total: u64 = (1..=max_size as u64).map(|s| binomial(inputs.len() as u64, s)).fold(0, u64::saturating_add);
    if total > SUBSET_BUDGET {
        return Err(Error::Budget(format!(
            "{total} subsets of {} inputs; set max_set_size to restrict the sweep",
            inputs.len()
        )));
    }
    let (train_rows, test_rows) = split_indices(data.n_samples(), opts.test_fraction, opts.seed)?;
    let train = data.select_rows(&train_rows);
    let test = data.select_rows(&test_rows);
    let truth = test.target().as_f64();
    let mut out = Vec::with_capacity(total as usize);
    for size in 1..=max_size {
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            let subset: Vec<usize> = pick.iter().map(|&p| inputs[p]).collect();
            let pred = knn_predict_with(&train, &test, &subset, opts.k, opts.standardize)?;
            out.push(SubsetScore {
                mae: mae(&pred, &truth)?,
                subset,
            });
            // Next combination in lexicographic order.
            let Some(pos) = (0..size).rev().find(|&i| pick[i] < inputs.len() - size + i) else {
                break;
            };
            pick[pos] += 1;
            for j in pos + 1..size {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    out.sort_by(|a, b| {
        a.subset
            .len()
            .cmp(&b.subset.len())
            .then(a.mae.total_cmp(&b.mae))
            .then(a.subset.cmp(&b.subset))
    });
    Ok(out)
}

/// Selection outcome rates in percent, averaged over runs. A rate is `None`
/// when its denominator (true or irrelevant inputs) is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: Option<f64>,
    pub tn: Option<f64>,
    pub fp: Option<f64>,
    #[serde(rename = "fn")]
    pub fn_: Option<f64>,
    pub runs: usize,
}

/// Rates over `n_inputs` candidate inputs, of which `ground_truth` are relevant.
pub fn confusion_counts(results: &[SelectionResult], ground_truth: &[usize], n_inputs: usize) -> Result<ConfusionCounts> {
    let sets: Vec<&[usize]> = results.iter().map(|r| r.selected.as_slice()).collect();
    confusion_from_sets(&sets, ground_truth, n_inputs)
}

/// As [`confusion_counts`] for plain selected sets.
pub fn confusion_from_sets(selected: &[&[usize]], ground_truth: &[usize], n_inputs: usize) -> Result<ConfusionCounts> {
    if selected.is_empty() {
        return Err(Error::InvalidArgument("no selection results".into()));
    }
    if ground_truth.len() > n_inputs {
        return Err(Error::InvalidArgument("more true inputs than inputs".into()));
    }
    let pos = ground_truth.len();
    let neg = n_inputs - pos;
    let (mut tp, mut fp) = (0.0, 0.0);
    for set in selected {
        let hits = set.iter().filter(|v| ground_truth.contains(v)).count();
        if pos > 0 {
            tp += hits as f64 / pos as f64;
        }
        if neg > 0 {
            fp += (set.len() - hits) as f64 / neg as f64;
        }
    }
    let runs = selected.len() as f64;
    let pct = |sum: f64| 100.0 * sum / runs;
    Ok(ConfusionCounts {
        tp: (pos > 0).then(|| pct(tp)),
        fn_: (pos > 0).then(|| 100.0 - pct(tp)),
        fp: (neg > 0).then(|| pct(fp)),
        tn: (neg > 0).then(|| 100.0 - pct(fp)),
        runs: selected.len(),
    })
}

/// Sample Pearson correlation.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
