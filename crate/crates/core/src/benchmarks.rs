//! Seeded generators for the synthetic benchmark systems.
//!
//! Each generator draws from a single stream of its seed, sample by sample,
//! in the order documented in `docs/rng.md`. Noise draws are always consumed
//! even when their scale is zero, so changing a scale never shifts the
//! remaining draws. The target is always the last variable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Variable};
use crate::error::{Error, Result};
use crate::rng::{Seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputDistribution {
    /// Uniform on [1, 2].
    Uniform,
    /// Binomial with 20 trials and p = 0.5.
    Binomial,
    /// Poisson with rate 4 for X1 and 10 for X2.
    Poisson,
    /// Exponential with rate 1.5.
    Exponential,
}

impl InputDistribution {
    fn draw(self, s: &mut Stream, input: usize) -> f64 {
        match self {
            InputDistribution::Uniform => s.uniform_range(1.0, 2.0),
            InputDistribution::Binomial => s.binomial(20, 0.5) as f64,
            InputDistribution::Poisson => s.poisson(if input == 0 { 4.0 } else { 10.0 }) as f64,
            InputDistribution::Exponential => s.exponential(1.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// The distractor corrupts the target.
    Mackay,
    /// The distractor corrupts the measured signal.
    Haufe,
}

/// Benchmark system and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "kebab-case")]
pub enum System {
    Spheres {
        label_noise_sigma: f64,
    },
    StatisticalModel {
        kind: ModelKind,
        weight_alpha: f64,
        sigma: f64,
        dist: InputDistribution,
    },
    Friedman {
        model: u8,
        sigma: f64,
        /// Defaults to 5 for model 1 and 6 otherwise.
        #[serde(default)]
        nuisance: Option<usize>,
    },
    Runge {
        a: f64,
        b: f64,
        c: f64,
        sigma: f64,
    },
    NoiseModel {
        kind: NoiseKind,
        a: f64,
        sigma: f64,
    },
    GaussianClasses {
        example: u8,
    },
    LinearRegression {
        n_vars: usize,
        n_informative: usize,
        noise: f64,
    },
    /// Two informative, partly redundant inputs and a noise source that is
    /// informative only jointly with them.
    Toy,
    /// Independent standard-normal inputs and target.
    Null {
        n_inputs: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub system: System,
    /// Rows for most systems; series length T for the time-series system.
    pub n_samples: usize,
    #[serde(default)]
    pub seed: Seed,
}

/// A generated dataset with the indices of the inputs that drive the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    pub ground_truth: Vec<usize>,
}

impl GeneratorConfig {
    pub fn generate(&self) -> Result<Generated> {
        let (n, seed) = (self.n_samples, self.seed);
        match self.system {
            System::Spheres { label_noise_sigma } => {
                Ok(Generated { data: gen_spheres(n, label_noise_sigma, seed)?, ground_truth: vec![0, 1, 2] })
            }
            System::StatisticalModel { kind, weight_alpha, sigma, dist } => {
                let data = gen_statistical_model(kind, weight_alpha, sigma, dist, n, seed)?;
                let mut truth = Vec::new();
                if weight_alpha != 0.0 {
                    truth.push(0);
                }
                if weight_alpha != 1.0 {
                    truth.push(1);
                }
                Ok(Generated { data, ground_truth: truth })
            }
            System::Friedman { model, sigma, nuisance } => {
                let data = gen_friedman(model, n, sigma, nuisance, seed)?;
                let relevant = if model == 1 { 5 } else { 4 };
                Ok(Generated { data, ground_truth: (0..relevant).collect() })
            }
            System::Runge { a, b, c, sigma } => {
                Ok(Generated { data: gen_runge(n, a, b, c, sigma, seed)?, ground_truth: (0..7).collect() })
            }
            System::NoiseModel { kind, a, sigma } => {
                let truth = if a == 0.0 && kind == NoiseKind::Mackay { vec![0] } else { vec![0, 1] };
                Ok(Generated { data: gen_noise_model(kind, a, sigma, n, seed)?, ground_truth: truth })
            }
            System::GaussianClasses { example } => {
                Ok(Generated { data: gen_gaussian_classes(example, n, seed)?, ground_truth: vec![0, 1] })
            }
            System::LinearRegression { n_vars, n_informative, noise } => {
                let (data, ground_truth) = gen_linear_regression(n_vars, n_informative, n, noise, seed)?;
                Ok(Generated { data, ground_truth })
            }
            System::Toy => Ok(Generated { data: gen_toy(n, seed)?, ground_truth: vec![0, 2] }),
            System::Null { n_inputs } => Ok(Generated { data: gen_null(n_inputs, n, seed)?, ground_truth: Vec::new() }),
        }
    }
}

fn need(ok: bool, msg: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg.into()))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    need(v >= 0.0 && v.is_finite(), format!("{name} must be finite and non-negative, got {v}"))
}

fn build(names: &[String], columns: Vec<Vec<f64>>) -> Result<Dataset> {
    let target = columns.len() - 1;
    let vars = names.iter().zip(columns).map(|(n, c)| Variable::continuous(n.clone(), c)).collect();
    Dataset::new(vars, target)
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// Points on two concentric spheres (radius 1 for class 0, 2 for class 1),
/// classes alternating by row. The target is the class label plus Gaussian
/// noise of scale `label_noise_sigma`.
pub fn gen_spheres(n: usize, label_noise_sigma: f64, seed: Seed) -> Result<Dataset> {
    need(n >= 2, "spheres need at least 2 samples")?;
    non_negative("label_noise_sigma", label_noise_sigma)?;
    let mut s = seed.rng();
    let mut cols = (0..4).map(|_| Vec::with_capacity(n)).collect::<Vec<Vec<_>>>();
    for i in 0..n {
        let label = (i % 2) as f64;
        let radius = 1.0 + label;
        let g = [s.normal(), s.normal(), s.normal()];
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        for d in 0..3 {
            cols[d].push(radius * g[d] / norm);
        }
        cols[3].push(label + label_noise_sigma * s.normal());
    }
    build(&["X1".into(), "X2".into(), "X3".into(), "Y".into()], cols)
}

/// `Y = a X1 + (1 − a) X2 + σ ε` or `Y = X1^a X2^(1−a) + σ ε` with `a = weight_alpha`.
pub fn gen_statistical_model(
    kind: ModelKind,
    weight_alpha: f64,
    sigma: f64,
    dist: InputDistribution,
    n: usize,
    seed: Seed,
) -> Result<Dataset> {
    need(n >= 1, "need at least one sample")?;
    need((0.0..=2.0).contains(&weight_alpha), format!("weight_alpha {weight_alpha} outside [0, 2]"))?;
    non_negative("sigma", sigma)?;
    let mut s = seed.rng();
    let mut cols = (0..3).map(|_| Vec::with_capacity(n)).collect::<Vec<Vec<_>>>();
    for _ in 0..n {
        let x1 = dist.draw(&mut s, 0);
        let x2 = dist.draw(&mut s, 1);
        let base = match kind {
            ModelKind::Additive => weight_alpha * x1 + (1.0 - weight_alpha) * x2,
            ModelKind::Multiplicative => x1.powf(weight_alpha) * x2.powf(1.0 - weight_alpha),
        };
        cols[0].push(x1);
        cols[1].push(x2);
        cols[2].push(base + sigma * s.normal());
    }
    build(&["X1".into(), "X2".into(), "Y".into()], cols)
}

/// Noise-free response of Friedman model 1, 2 or 3 at inputs `x`.
pub fn friedman_response(model: u8, x: &[f64]) -> f64 {
    match model {
        1 => 10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4],
        2 => {
            let inner = x[1] * x[2] - 1.0 / (x[1] * x[3]);
            (x[0] * x[0] + inner * inner).sqrt()
        }
        3 => ((x[1] * x[2] - 1.0 / (x[1] * x[3])) / x[0]).atan(),
        _ => f64::NAN,
    }
}

/// Friedman regression problems with independent uniform nuisance inputs.
///
/// Model 1 draws X1..X5 from [0, 1]; models 2 and 3 draw X1 ∈ [0, 100],
/// X2 ∈ [40π, 560π], X3 ∈ [0, 1], X4 ∈ [1, 11]. Nuisance inputs Z1.. are
/// uniform on [0, 1]. Per row: the model inputs, then the nuisance inputs,
/// then one normal for the response noise.
pub fn gen_friedman(model: u8, n: usize, sigma: f64, nuisance: Option<usize>, seed: Seed) -> Result<Dataset> {
    need((1..=3).contains(&model), format!("unknown Friedman model {model}"))?;
    need(n >= 1, "need at least one sample")?;
    non_negative("sigma", sigma)?;
    let n_inputs = if model == 1 { 5 } else { 4 };
    let n_nuisance = nuisance.unwrap_or(if model == 1 { 5 } else { 6 });
    let ranges: Vec<(f64, f64)> = if model == 1 {
        vec![(0.0, 1.0); 5]
    } else {
        vec![(0.0, 100.0), (40.0 * PI, 560.0 * PI), (0.0, 1.0), (1.0, 11.0)]
    };
    let mut s = seed.rng();
    let width = n_inputs + n_nuisance + 1;
    let mut cols = vec![Vec::with_capacity(n); width];
    let mut x = vec![0.0; n_inputs];
    for _ in 0..n {
        for (v, &(lo, hi)) in x.iter_mut().zip(&ranges) {
            *v = s.uniform_range(lo, hi);
        }
        for (c, &v) in x.iter().enumerate() {
            cols[c].push(v);
        }
        for c in 0..n_nuisance {
            cols[n_inputs + c].push(s.uniform());
        }
        cols[width - 1].push(friedman_response(model, &x) + sigma * s.normal());
    }
    let mut all = names("X", n_inputs);
    all.extend(names("Z", n_nuisance));
    all.push("Y".into());
    build(&all, cols)
}

/// Time series with synergistic drivers Z, additive drivers W and redundant
/// proxies X of W:
///
/// ```text
/// Y[t+1] = c Σ W(i)[t−1] + b Π Z(i)[t−1] + σ ε
/// X(1)[t] = a (W(1) + W(3))[t−1] + ε,   X(2)[t] = a (W(2) + W(4))[t−1] + ε
/// ```
///
/// Row r (for t = r + 1) holds Z and W at t−1, X at t and Y at t+1, giving
/// `t_len − 2` rows with columns Z1..Z3, W1..W4, X1, X2, Y.
pub fn gen_runge(t_len: usize, a: f64, b: f64, c: f64, sigma: f64, seed: Seed) -> Result<Dataset> {
    need(t_len >= 3, "series length must be at least 3")?;
    non_negative("sigma", sigma)?;
    let mut s = seed.rng();
    let mut z = vec![[0.0; 3]; t_len];
    let mut w = vec![[0.0; 4]; t_len];
    let mut x_noise = vec![[0.0; 2]; t_len];
    let mut y_noise = vec![0.0; t_len];
    for t in 0..t_len {
        for v in w[t].iter_mut() {
            *v = s.normal();
        }
        for v in z[t].iter_mut() {
            *v = s.normal();
        }
        for v in x_noise[t].iter_mut() {
            *v = s.normal();
        }
        y_noise[t] = s.normal();
    }
    let rows = t_len - 2;
    let mut cols = (0..10).map(|_| Vec::with_capacity(rows)).collect::<Vec<Vec<_>>>();
    for t in 1..t_len - 1 {
        let (zp, wp) = (&z[t - 1], &w[t - 1]);
        for i in 0..3 {
            cols[i].push(zp[i]);
        }
        for i in 0..4 {
            cols[3 + i].push(wp[i]);
        }
        cols[7].push(a * (wp[0] + wp[2]) + x_noise[t][0]);
        cols[8].push(a * (wp[1] + wp[3]) + x_noise[t][1]);
        let y = c * wp.iter().sum::<f64>() + b * zp.iter().product::<f64>() + sigma * y_noise[t + 1];
        cols[9].push(y);
    }
    let mut all = names("Z", 3);
    all.extend(names("W", 4));
    all.extend(names("X", 2));
    all.push("Y".into());
    build(&all, cols)
}

/// Signal S and distractor D, both standard normal, with `f(S) = sin S + σ ε`.
/// Mackay: X1 = S, X2 = D, Y = f(S) + aD. Haufe: X1 = S + aD, X2 = D, Y = f(S).
/// Per row: S, D, ε.
pub fn gen_noise_model(kind: NoiseKind, a: f64, sigma: f64, n: usize, seed: Seed) -> Result<Dataset> {
    need(n >= 1, "need at least one sample")?;
    need((0.0..=4.0).contains(&a), format!("a = {a} outside [0, 4]"))?;
    non_negative("sigma", sigma)?;
    let mut s = seed.rng();
    let mut cols = (0..3).map(|_| Vec::with_capacity(n)).collect::<Vec<Vec<_>>>();
    for _ in 0..n {
        let sig = s.normal();
        let dis = s.normal();
        let f = sig.sin() + sigma * s.normal();
        let (x1, y) = match kind {
            NoiseKind::Mackay => (sig, f + a * dis),
            NoiseKind::Haufe => (sig + a * dis, f),
        };
        cols[0].push(x1);
        cols[1].push(dis);
        cols[2].push(y);
    }
    build(&["X1".into(), "X2".into(), "Y".into()], cols)
}

/// Class means and shared covariance of the two-class Gaussian examples 1..=5.
pub fn gaussian_example(example: u8) -> Result<([[f64; 2]; 2], [[f64; 2]; 2])> {
    Ok(match example {
        1 => ([[-1.0, -1.0], [1.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]),
        2 => ([[-1.0, -1.0], [1.0, 1.0]], [[1.0, 0.0], [0.0, 2.0]]),
        3 => ([[0.0, 0.0], [0.0, 0.0]], [[1.0, 1.0], [1.0, 1.0]]),
        4 => ([[-0.5, 0.5], [0.5, 0.5]], [[0.1, 0.4], [0.4, 2.0]]),
        5 => ([[-0.5, 0.0], [0.5, 0.0]], [[0.1, -0.4], [-0.4, 2.0]]),
        _ => return Err(Error::InvalidArgument(format!("unknown Gaussian example {example}"))),
    })
}

/// Lower-triangular factor of a 2×2 covariance, allowing rank deficiency.
fn psd_factor(cov: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let tol = 1e-12 * (cov[0][0].abs() + cov[1][1].abs()).max(1.0);
    if (cov[0][1] - cov[1][0]).abs() > tol || cov[0][0] < -tol {
        return Err(Error::InvalidArgument("covariance is not symmetric positive semidefinite".into()));
    }
    let l00 = cov[0][0].max(0.0).sqrt();
    let l10 = if l00 > 0.0 { cov[1][0] / l00 } else { 0.0 };
    let rest = cov[1][1] - l10 * l10;
    if rest < -tol || (l00 == 0.0 && cov[1][0].abs() > tol) {
        return Err(Error::InvalidArgument("covariance is not positive semidefinite".into()));
    }
    Ok([[l00, 0.0], [l10, rest.max(0.0).sqrt()]])
}

/// Two 2-D Gaussian classes with a shared covariance; rows alternate
/// between class 0 and class 1. Per row: two normals.
pub fn gen_gaussian_classes(example: u8, n: usize, seed: Seed) -> Result<Dataset> {
    need(n >= 2, "need at least 2 samples")?;
    let (means, cov) = gaussian_example(example)?;
    let l = psd_factor(cov)?;
    let mut s = seed.rng();
    let (mut x1, mut x2, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let class = i % 2;
        let (g0, g1) = (s.normal(), s.normal());
        x1.push(means[class][0] + l[0][0] * g0);
        x2.push(means[class][1] + l[1][0] * g0 + l[1][1] * g1);
        y.push(class);
    }
    Dataset::new(
        vec![Variable::continuous("X1", x1), Variable::continuous("X2", x2), Variable::discrete("Y", y)],
        2,
    )
}

/// Linear regression on standard-normal inputs. The informative subset and
/// its weights (uniform on [1, 100]) come from stream tag 1 of the seed,
/// the rows from stream tag 2: per row the `n_vars` inputs, then the noise.
pub fn gen_linear_regression(
    n_vars: usize,
    n_informative: usize,
    n: usize,
    noise: f64,
    seed: Seed,
) -> Result<(Dataset, Vec<usize>)> {
    need(n_vars >= 1 && n >= 1, "need at least one variable and one sample")?;
    need(n_informative <= n_vars, "more informative variables than variables")?;
    non_negative("noise", noise)?;
    let mut setup = seed.stream(&[1]);
    let mut order: Vec<usize> = (0..n_vars).collect();
    setup.shuffle(&mut order);
    let mut informative = order[..n_informative].to_vec();
    informative.sort_unstable();
    let weights: Vec<f64> = informative.iter().map(|_| setup.uniform_range(1.0, 100.0)).collect();
    let mut s = seed.stream(&[2]);
    let mut cols = vec![Vec::with_capacity(n); n_vars + 1];
    let mut row = vec![0.0; n_vars];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = s.normal();
        }
        let y: f64 = informative.iter().zip(&weights).map(|(&i, w)| w * row[i]).sum::<f64>() + noise * s.normal();
        for (c, &v) in row.iter().enumerate() {
            cols[c].push(v);
        }
        cols[n_vars].push(y);
    }
    let mut all = names("X", n_vars);
    all.push("Y".into());
    Ok((build(&all, cols)?, informative))
}

/// `Y = sin ξ1 + 0.1 ηY`, `X1 = ξ1 + 0.1 η`, `X2 = 0.8 ξ1 + 0.2 ξ2 + 0.01 η`,
/// with columns X1, X2, eta, Y. Per row: ξ1, ξ2, η, ηY.
pub fn gen_toy(n: usize, seed: Seed) -> Result<Dataset> {
    need(n >= 1, "need at least one sample")?;
    let mut s = seed.rng();
    let mut cols = (0..4).map(|_| Vec::with_capacity(n)).collect::<Vec<Vec<_>>>();
    for _ in 0..n {
        let (xi1, xi2, eta, eta_y) = (s.normal(), s.normal(), s.normal(), s.normal());
        cols[0].push(xi1 + 0.1 * eta);
        cols[1].push(0.8 * xi1 + (1.0 - 0.8) * xi2 + 0.01 * eta);
        cols[2].push(eta);
        cols[3].push(xi1.sin() + 0.1 * eta_y);
    }
    build(&["X1".into(), "X2".into(), "eta".into(), "Y".into()], cols)
}

/// Independent standard-normal inputs X1.. and target. Per row: inputs, then Y.
pub fn gen_null(n_inputs: usize, n: usize, seed: Seed) -> Result<Dataset> {
    need(n >= 1, "need at least one sample")?;
    let mut s = seed.rng();
    let mut cols = vec![Vec::with_capacity(n); n_inputs + 1];
    for _ in 0..n {
        for c in cols.iter_mut() {
            c.push(s.normal());
        }
    }
    let mut all = names("X", n_inputs);
    all.push("Y".into());
    build(&all, cols)
}
