//! Plug-in (empirical frequency) estimators over discrete symbols, in bits.
//!
//! All quantities are assembled from entropies of joint symbol codes.
//! Entropies are summed over the histogram of cell counts (how many cells
//! hold count c, for ascending c), so the result does not depend on how
//! symbols are labelled or in which order cells are visited. That makes
//! `mi_plugin(x, y) == mi_plugin(y, x)` hold bit-for-bit.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Dense joint-count table over a product of alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCounts {
    pub dims: Vec<usize>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl JointCounts {
    /// Row-major table, last column varying fastest.
    pub fn from_columns(columns: &[&[usize]]) -> Result<Self> {
        let n = common_len(columns)?;
        let dims: Vec<usize> = columns.iter().map(|c| c.iter().max().map_or(1, |m| m + 1)).collect();
        let size: usize = dims.iter().product();
        let mut counts = vec![0u64; size];
        for i in 0..n {
            let mut idx = 0;
            for (c, d) in columns.iter().zip(&dims) {
                idx = idx * d + c[i];
            }
            counts[idx] += 1;
        }
        Ok(JointCounts {
            dims,
            counts,
            total: n as u64,
        })
    }

    pub fn entropy(&self) -> f64 {
        entropy_from_counts(self.counts.iter().map(|&c| c as usize), self.total as usize)
    }
}

fn common_len(columns: &[&[usize]]) -> Result<usize> {
    let n = columns.first().map_or(0, |c| c.len());
    for c in columns {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: c.len(),
            });
        }
    }
    Ok(n)
}

/// Entropy in bits of the distribution given by `counts` (summing to `total`).
pub(crate) fn entropy_from_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut hist: Vec<usize> = vec![0; 16];
    for c in counts {
        if c == 0 {
            continue;
        }
        if c >= hist.len() {
            hist.resize((c + 1).max(hist.len() * 2), 0);
        }
        hist[c] += 1;
    }
    let mut acc = 0.0;
    for (c, &m) in hist.iter().enumerate().skip(2) {
        if m > 0 {
            let cf = c as f64;
            acc += m as f64 * cf * cf.log2();
        }
    }
    let h = (total as f64).log2() - acc / total as f64;
    h.max(0.0)
}

/// Compact codes `0..k` for the observed combinations of several columns,
/// numbered in order of first appearance.
pub fn joint_codes(columns: &[&[usize]], n: usize) -> Result<(Vec<usize>, usize)> {
    if columns.is_empty() {
        return Ok((vec![0; n], 1));
    }
    let len = common_len(columns)?;
    if len != n {
        return Err(Error::LengthMismatch { left: n, right: len });
    }
    let (mut codes, mut k) = compact(columns[0]);
    for col in &columns[1..] {
        let width = col.iter().max().map_or(1, |m| m + 1);
        let combined: Vec<usize> = codes.iter().zip(col.iter()).map(|(&a, &b)| a * width + b).collect();
        (codes, k) = compact(&combined);
    }
    Ok((codes, k))
}

fn compact(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut map: HashMap<usize, usize> = HashMap::new();
    let codes = raw
        .iter()
        .map(|&v| {
            let next = map.len();
            *map.entry(v).or_insert(next)
        })
        .collect();
    (codes, map.len().max(1))
}

fn pair_codes(a: &[usize], ka: usize, b: &[usize]) -> Vec<usize> {
    a.iter().zip(b).map(|(&x, &y)| y * ka + x).collect()
}

fn entropy_of_codes(codes: &[usize], alphabet: usize) -> f64 {
    let n = codes.len();
    if alphabet <= 4 * n + 64 {
        let mut counts = vec![0usize; alphabet];
        for &c in codes {
            counts[c] += 1;
        }
        entropy_from_counts(counts.into_iter(), n)
    } else {
        let mut map: HashMap<usize, usize> = HashMap::new();
        for &c in codes {
            *map.entry(c).or_insert(0) += 1;
        }
        entropy_from_counts(map.into_values(), n)
    }
}

fn alphabet(x: &[usize]) -> usize {
    x.iter().max().map_or(1, |m| m + 1)
}

pub fn entropy_plugin(x: &[usize]) -> f64 {
    entropy_of_codes(x, alphabet(x))
}

pub fn joint_entropy_plugin(columns: &[&[usize]]) -> Result<f64> {
    let n = columns.first().map_or(0, |c| c.len());
    let (codes, k) = joint_codes(columns, n)?;
    Ok(entropy_of_codes(&codes, k))
}

pub fn mi_plugin(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let hx = entropy_plugin(x);
    let hy = entropy_plugin(y);
    let hxy = entropy_of_codes(&pair_codes(x, alphabet(x), y), alphabet(x) * alphabet(y));
    Ok((hx + hy - hxy).max(0.0))
}

/// I(X;Y|Z) with Z given as any number of columns (none reduces to MI).
pub fn cmi_plugin(x: &[usize], y: &[usize], z: &[&[usize]]) -> Result<f64> {
    if z.is_empty() {
        return mi_plugin(x, y);
    }
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let (zc, kz) = joint_codes(z, n)?;
    PluginContext::from_codes(y.to_vec(), zc, kz).estimate(x)
}

/// Precomputed target and conditioning codes for scoring many candidates
/// against the same (Y, Z).
#[derive(Debug, Clone)]
pub struct PluginContext {
    y: Vec<usize>,
    z: Vec<usize>,
    kz: usize,
    yz: Vec<usize>,
    kyz: usize,
    h_z: f64,
    h_yz: f64,
}

impl PluginContext {
    pub fn new(y: &[usize], z: &[&[usize]]) -> Result<Self> {
        let (zc, kz) = joint_codes(z, y.len())?;
        Ok(Self::from_codes(y.to_vec(), zc, kz))
    }

    fn from_codes(y: Vec<usize>, z: Vec<usize>, kz: usize) -> Self {
        let ky = alphabet(&y);
        let (yz, kyz) = compact(&pair_codes(&y, ky, &z));
        let h_z = entropy_of_codes(&z, kz);
        let h_yz = entropy_of_codes(&yz, kyz);
        PluginContext {
            y,
            z,
            kz,
            yz,
            kyz,
            h_z,
            h_yz,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    /// I(X;Y|Z) in bits.
    pub fn estimate(&self, x: &[usize]) -> Result<f64> {
        if x.len() != self.y.len() {
            return Err(Error::LengthMismatch {
                left: self.y.len(),
                right: x.len(),
            });
        }
        let kx = alphabet(x);
        let xz = pair_codes(x, kx, &self.z);
        let xyz = pair_codes(x, kx, &self.yz);
        let h_xz = entropy_of_codes(&xz, kx * self.kz);
        let h_xyz = entropy_of_codes(&xyz, kx * self.kyz);
        Ok((h_xz + self.h_yz - h_xyz - self.h_z).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_plugin(&[2, 2, 2]), 0.0);
        assert!((entropy_plugin(&[0, 1, 0, 1]) - 1.0).abs() < 1e-15);
        let oracle = -(0.75f64 * 0.75f64.log2()) - 0.25 * 0.25f64.log2();
        assert!((entropy_plugin(&[0, 0, 0, 1]) - oracle).abs() < 1e-12);
        assert!((oracle - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn mi_examples() {
        assert!((mi_plugin(&[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(mi_plugin(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
        let x1 = [0, 0, 1, 1];
        let x2 = [0, 1, 0, 1];
        let y = [0, 1, 1, 0];
        assert_eq!(mi_plugin(&x1, &y).unwrap(), 0.0);
        assert!((cmi_plugin(&x1, &y, &[&x2]).unwrap() - 1.0).abs() < 1e-12);
        assert!(mi_plugin(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn cmi_degenerate_conditions() {
        let x = [0, 1, 1, 0, 2, 2, 1, 0];
        let y = [1, 1, 0, 0, 1, 0, 1, 1];
        let c = [0; 8];
        assert!((cmi_plugin(&x, &y, &[&c]).unwrap() - mi_plugin(&x, &y).unwrap()).abs() < 1e-12);
        assert_eq!(cmi_plugin(&x, &y, &[]).unwrap(), mi_plugin(&x, &y).unwrap());
        assert!(cmi_plugin(&x, &y, &[&y]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn joint_counts_total() {
        let t = JointCounts::from_columns(&[&[0, 1, 1], &[2, 0, 0]]).unwrap();
        assert_eq!(t.total, 3);
        assert_eq!(t.counts.iter().sum::<u64>(), 3);
        assert_eq!(t.dims, vec![2, 3]);
        assert!((t.entropy() - joint_entropy_plugin(&[&[0, 1, 1], &[2, 0, 0]]).unwrap()).abs() < 1e-15);
    }

    fn sym(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0..k, n)
    }

    proptest! {
        #[test]
        fn symmetric_and_nonnegative((x, y) in (1usize..80).prop_flat_map(|n| (sym(n, 4), sym(n, 5)))) {
            let a = mi_plugin(&x, &y).unwrap();
            prop_assert_eq!(a, mi_plugin(&y, &x).unwrap());
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn chain_rule((x, y, z) in (1usize..80).prop_flat_map(|n| (sym(n, 3), sym(n, 4), sym(n, 3)))) {
            let n = x.len();
            let (yz, _) = joint_codes(&[&y, &z], n).unwrap();
            let lhs = mi_plugin(&x, &yz).unwrap();
            let rhs = mi_plugin(&x, &z).unwrap() + cmi_plugin(&x, &y, &[&z]).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert!(cmi_plugin(&x, &y, &[&z]).unwrap() >= 0.0);
        }

        #[test]
        fn relabeling_invariance((x, y, z) in (1usize..60).prop_flat_map(|n| (sym(n, 3), sym(n, 3), sym(n, 3)))) {
            let relabel = |v: &[usize]| v.iter().map(|&s| [7, 2, 5][s]).collect::<Vec<_>>();
            let (rx, ry, rz) = (relabel(&x), relabel(&y), relabel(&z));
            prop_assert_eq!(mi_plugin(&x, &y).unwrap(), mi_plugin(&rx, &ry).unwrap());
            let a = cmi_plugin(&x, &y, &[&z]).unwrap();
            let b = cmi_plugin(&rx, &ry, &[&rz]).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
