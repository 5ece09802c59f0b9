//! Partial information decomposition of one target and two inputs under the
//! BROJA measure.
//!
//! The unique information of X1 is the smallest I(Y;X1|X2) over all joint
//! distributions sharing the (Y,X1) and (Y,X2) marginals of the data; the
//! other three atoms follow from it and plug-in MI/CMI terms.

mod brute;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::plugin::joint_codes;

pub use brute::brute_force_unique;
pub use solver::{broja_unique, BrojaSolution, SolverOptions};

/// Default solver tolerance in bits.
pub const DEFAULT_TOL: f64 = 1e-4;

/// Joint table over (Y, X1, X2); index `(y * n1 + x1) * n2 + x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDistribution {
    dims: [usize; 3],
    probs: Vec<f64>,
}

impl TripleDistribution {
    pub fn new(dims: [usize; 3], probs: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("alphabet sizes must be positive".into()));
        }
        if probs.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::LengthMismatch {
                left: dims[0] * dims[1] * dims[2],
                right: probs.len(),
            });
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(TripleDistribution { dims, probs })
    }

    /// Normalize non-negative counts or weights into a distribution.
    pub fn from_weights(dims: [usize; 3], weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("weights must have positive total".into()));
        }
        Self::new(dims, weights.iter().map(|w| w / total).collect())
    }

    /// Build from a function of (y, x1, x2) returning weights.
    pub fn from_fn(dims: [usize; 3], f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut w = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for y in 0..dims[0] {
            for a in 0..dims[1] {
                for b in 0..dims[2] {
                    w.push(f(y, a, b));
                }
            }
        }
        Self::from_weights(dims, &w)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn index(&self, y: usize, x1: usize, x2: usize) -> usize {
        (y * self.dims[1] + x1) * self.dims[2] + x2
    }

    pub fn get(&self, y: usize, x1: usize, x2: usize) -> f64 {
        self.probs[self.index(y, x1, x2)]
    }

    /// p(y, x1) as a `ny × n1` row-major table.
    pub fn marginal_y_x1(&self) -> Vec<f64> {
        let [ny, n1, n2] = self.dims;
        let mut m = vec![0.0; ny * n1];
        for y in 0..ny {
            for a in 0..n1 {
                m[y * n1 + a] = (0..n2).map(|b| self.get(y, a, b)).sum();
            }
        }
        m
    }

    /// p(y, x2) as a `ny × n2` row-major table.
    pub fn marginal_y_x2(&self) -> Vec<f64> {
        let [ny, n1, n2] = self.dims;
        let mut m = vec![0.0; ny * n2];
        for y in 0..ny {
            for b in 0..n2 {
                m[y * n2 + b] = (0..n1).map(|a| self.get(y, a, b)).sum();
            }
        }
        m
    }

    /// Same distribution with the two inputs exchanged.
    pub fn swap_inputs(&self) -> TripleDistribution {
        let [ny, n1, n2] = self.dims;
        let mut probs = vec![0.0; self.probs.len()];
        for y in 0..ny {
            for a in 0..n1 {
                for b in 0..n2 {
                    probs[(y * n2 + b) * n1 + a] = self.get(y, a, b);
                }
            }
        }
        TripleDistribution {
            dims: [ny, n2, n1],
            probs,
        }
    }

    /// Plug-in information terms of this table, in bits.
    pub fn info_terms(&self) -> InfoTerms {
        let [ny, n1, n2] = self.dims;
        let mut py = vec![0.0; ny];
        let mut p1 = vec![0.0; n1];
        let mut p2 = vec![0.0; n2];
        let mut py1 = vec![0.0; ny * n1];
        let mut py2 = vec![0.0; ny * n2];
        let mut p12 = vec![0.0; n1 * n2];
        for y in 0..ny {
            for a in 0..n1 {
                for b in 0..n2 {
                    let p = self.get(y, a, b);
                    py[y] += p;
                    p1[a] += p;
                    p2[b] += p;
                    py1[y * n1 + a] += p;
                    py2[y * n2 + b] += p;
                    p12[a * n2 + b] += p;
                }
            }
        }
        let h = |v: &[f64]| -> f64 { v.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum() };
        let (hy, h1, h2) = (h(&py), h(&p1), h(&p2));
        let (hy1, hy2, h12, hy12) = (h(&py1), h(&py2), h(&p12), h(&self.probs));
        InfoTerms {
            mi_x1: hy + h1 - hy1,
            mi_x2: hy + h2 - hy2,
            mi_joint: hy + h12 - hy12,
            cmi_x1_given_x2: hy2 + h12 - hy12 - h2,
            cmi_x2_given_x1: hy1 + h12 - hy12 - h1,
        }
    }
}

/// Plug-in MI/CMI terms of a triple, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoTerms {
    /// I(Y;X1)
    pub mi_x1: f64,
    /// I(Y;X2)
    pub mi_x2: f64,
    /// I(Y;X1,X2)
    pub mi_joint: f64,
    /// I(Y;X1|X2)
    pub cmi_x1_given_x2: f64,
    /// I(Y;X2|X1)
    pub cmi_x2_given_x1: f64,
}

/// The four atoms, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidAtoms {
    pub unq_x1: f64,
    pub unq_x2: f64,
    pub shd: f64,
    pub syn: f64,
}

impl PidAtoms {
    pub fn total(&self) -> f64 {
        self.unq_x1 + self.unq_x2 + self.shd + self.syn
    }
}

/// Decomposition together with the terms it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PidReport {
    pub atoms: PidAtoms,
    pub terms: InfoTerms,
    /// Certified optimality gap of the unique-information minimization, bits.
    pub gap: f64,
    pub iterations: usize,
}

/// Relative-frequency table of (y, x1, x2); multi-column inputs are joined
/// into a product alphabet of the combinations actually observed.
pub fn empirical_triple(y: &[usize], x1: &[&[usize]], x2: &[&[usize]]) -> Result<TripleDistribution> {
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    if x1.is_empty() || x2.is_empty() {
        return Err(Error::InvalidArgument("each input needs at least one column".into()));
    }
    let (c1, k1) = joint_codes(x1, n)?;
    let (c2, k2) = joint_codes(x2, n)?;
    let ny = y.iter().max().map_or(1, |m| m + 1);
    let mut w = vec![0.0; ny * k1 * k2];
    for i in 0..n {
        w[(y[i] * k1 + c1[i]) * k2 + c2[i]] += 1.0;
    }
    TripleDistribution::from_weights([ny, k1, k2], &w)
}

pub fn pid_report(p: &TripleDistribution, tol: f64) -> Result<PidReport> {
    let sol = broja_unique(p, tol)?;
    let terms = p.info_terms();
    let ui = sol.unique_x1;
    let shd = terms.mi_x1 - ui;
    let unq_x2 = terms.mi_x2 - shd;
    let syn = terms.cmi_x1_given_x2 - ui;
    Ok(PidReport {
        atoms: PidAtoms {
            unq_x1: ui,
            unq_x2,
            shd,
            syn,
        },
        terms,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

pub fn pid_decompose(p: &TripleDistribution, tol: f64) -> Result<PidAtoms> {
    Ok(pid_report(p, tol)?.atoms)
}
