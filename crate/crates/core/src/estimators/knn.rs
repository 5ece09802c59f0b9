//! Kraskov-Stögbauer-Grassberger estimators (algorithm 1), in nats.
//!
//! Distances use the max-norm over all columns of a block. For every sample
//! the radius ε is the distance to its k-th nearest neighbour in the joint
//! (x, y, z) space; marginal counts include only points strictly closer
//! than ε. The conditional estimate is
//! `ψ(k) − ⟨ψ(n_xz+1) + ψ(n_yz+1) − ψ(n_z+1)⟩`; with no conditioning
//! columns `n_z = N − 1`, which is the bivariate estimator.
//!
//! Every column is perturbed by deterministic noise of amplitude
//! `1e-10 · range` before any neighbour search so that repeated values do
//! not produce degenerate counts. The noise stream is keyed by the seed and
//! a hash of the column's contents, so identical columns stay identical
//! wherever they appear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Seed;

const JITTER_TAG: u64 = 0x4A49_5454;
const JITTER_SCALE: f64 = 1e-10;
/// Largest sample count for which [`KnnContext`] caches sorted neighbour rows.
pub const PREPARED_LIMIT: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    /// Seed of the tie-breaking jitter.
    #[serde(default)]
    pub seed: Seed,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 4, seed: Seed(0) }
    }
}

/// ψ(n) for n = 0..=max (entry 0 unused), from ψ(1) = −γ and ψ(n+1) = ψ(n) + 1/n.
fn digamma_table(max: usize) -> Vec<f64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut t = vec![f64::NAN; max + 1];
    if max >= 1 {
        t[1] = -EULER_GAMMA;
    }
    for n in 2..=max {
        t[n] = t[n - 1] + 1.0 / (n - 1) as f64;
    }
    t
}

/// Digamma at a positive integer.
pub fn digamma(n: usize) -> f64 {
    assert!(n >= 1, "digamma at non-positive integer");
    digamma_table(n)[n]
}

fn content_hash(col: &[f64]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for v in col {
        for b in v.to_bits().to_le_bytes() {
            h = (h ^ b as u64).wrapping_mul(0x0100_0000_01B3);
        }
    }
    h
}

fn jitter(col: &[f64], cfg: &KnnConfig) -> Vec<f64> {
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let amp = JITTER_SCALE * (hi - lo);
    let mut s = cfg.seed.stream(&[JITTER_TAG, content_hash(col)]);
    col.iter().map(|&v| v + amp * (2.0 * s.uniform() - 1.0)).collect()
}

fn check_block(block: &[&[f64]], n: usize, what: &str) -> Result<()> {
    for c in block {
        if c.len() != n {
            return Err(Error::LengthMismatch { left: n, right: c.len() });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value in {what}")));
        }
    }
    Ok(())
}

fn prepare(block: &[&[f64]], cfg: &KnnConfig) -> Vec<Vec<f64>> {
    block.iter().map(|col| jitter(col, cfg)).collect()
}

#[inline]
fn dist(block: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let mut d = 0.0f64;
    for c in block {
        d = d.max((c[i] - c[j]).abs());
    }
    d
}

fn validate(x: &[&[f64]], y: &[&[f64]], z: &[&[f64]], cfg: &KnnConfig) -> Result<usize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidArgument("x and y need at least one column".into()));
    }
    let n = y[0].len();
    check_block(x, n, "x")?;
    check_block(y, n, "y")?;
    check_block(z, n, "z")?;
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if n < cfg.k + 1 {
        return Err(Error::InvalidArgument(format!(
            "KSG with k={} needs at least {} samples, got {n}",
            cfg.k,
            cfg.k + 1
        )));
    }
    Ok(n)
}

/// I(X;Y) in nats.
pub fn mi_knn(x: &[&[f64]], y: &[&[f64]], cfg: &KnnConfig) -> Result<f64> {
    cmi_knn(x, y, &[], cfg)
}

/// I(X;Y|Z) in nats; an empty `z` gives the bivariate estimate.
pub fn cmi_knn(x: &[&[f64]], y: &[&[f64]], z: &[&[f64]], cfg: &KnnConfig) -> Result<f64> {
    let n = validate(x, y, z, cfg)?;
    let xs = prepare(x, cfg);
    let ys = prepare(y, cfg);
    let zs = prepare(z, cfg);
    Ok(brute_force(&xs, &ys, &zs, cfg.k, &digamma_table(n + 1)))
}

/// Reference implementation: exhaustive distance scans per sample.
fn brute_force(x: &[Vec<f64>], y: &[Vec<f64>], z: &[Vec<f64>], k: usize, psi: &[f64]) -> f64 {
    let n = y[0].len();
    let mut dx = vec![0.0; n];
    let mut dyz = vec![0.0; n];
    let mut dz = vec![0.0; n];
    let mut joint = vec![0.0; n - 1];
    let mut acc = 0.0;
    for i in 0..n {
        let mut m = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            dx[j] = dist(x, i, j);
            dz[j] = dist(z, i, j);
            dyz[j] = dist(y, i, j).max(dz[j]);
            joint[m] = dx[j].max(dyz[j]);
            m += 1;
        }
        let (_, kth, _) = joint.select_nth_unstable_by(k - 1, f64::total_cmp);
        let eps = *kth;
        let (mut nxz, mut nyz, mut nz) = (0, 0, 0);
        for j in 0..n {
            if j == i {
                continue;
            }
            if dz[j] < eps {
                nz += 1;
                if dx[j] < eps {
                    nxz += 1;
                }
            }
            if dyz[j] < eps {
                nyz += 1;
            }
        }
        if z.is_empty() {
            nz = n - 1;
        }
        acc += psi[nxz + 1] + psi[nyz + 1] - psi[nz + 1];
    }
    psi[k] - acc / n as f64
}

/// Cached (y, z) geometry for scoring many candidate `x` blocks.
///
/// Up to [`PREPARED_LIMIT`] samples, each sample keeps its neighbours sorted
/// by the (y, z) distance and by the z distance, so the k-th joint neighbour
/// and all marginal counts are found by short scans and binary searches.
/// Beyond the limit the context falls back to exhaustive scans.
pub struct KnnContext {
    cfg: KnnConfig,
    n: usize,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    psi: Vec<f64>,
    rows: Option<Rows>,
}

struct Rows {
    /// Row i occupies `[i*(n-1), (i+1)*(n-1))`.
    yz_dist: Vec<f64>,
    yz_idx: Vec<u32>,
    z_dist: Vec<f64>,
    z_idx: Vec<u32>,
}

fn sorted_rows(block_a: &[Vec<f64>], block_b: &[Vec<f64>], n: usize) -> (Vec<f64>, Vec<u32>) {
    let w = n - 1;
    let mut dists = vec![0.0; n * w];
    let mut idx = vec![0u32; n * w];
    let mut pairs: Vec<(f64, u32)> = Vec::with_capacity(w);
    for i in 0..n {
        pairs.clear();
        for j in 0..n {
            if j != i {
                pairs.push((dist(block_a, i, j).max(dist(block_b, i, j)), j as u32));
            }
        }
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (m, &(d, j)) in pairs.iter().enumerate() {
            dists[i * w + m] = d;
            idx[i * w + m] = j;
        }
    }
    (dists, idx)
}

impl KnnContext {
    pub fn new(y: &[&[f64]], z: &[&[f64]], cfg: &KnnConfig) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidArgument("y needs at least one column".into()));
        }
        let n = validate(y, y, z, cfg)?;
        let ys = prepare(y, cfg);
        let zs = prepare(z, cfg);
        let rows = if n <= PREPARED_LIMIT {
            let (yz_dist, yz_idx) = sorted_rows(&ys, &zs, n);
            let (z_dist, z_idx) = if zs.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                sorted_rows(&zs, &[], n)
            };
            Some(Rows {
                yz_dist,
                yz_idx,
                z_dist,
                z_idx,
            })
        } else {
            None
        };
        Ok(KnnContext {
            cfg: *cfg,
            n,
            y: ys,
            z: zs,
            psi: digamma_table(n + 1),
            rows,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    /// I(X;Y|Z) in nats for a candidate block `x`.
    pub fn estimate(&self, x: &[&[f64]]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("x needs at least one column".into()));
        }
        check_block(x, self.n, "x")?;
        let xs = prepare(x, &self.cfg);
        let Some(rows) = &self.rows else {
            return Ok(brute_force(&xs, &self.y, &self.z, self.cfg.k, &self.psi));
        };
        Ok(self.estimate_prepared(&xs, rows))
    }

    fn estimate_prepared(&self, xs: &[Vec<f64>], rows: &Rows) -> f64 {
        let n = self.n;
        let w = n - 1;
        let k = self.cfg.k;
        let psi = &self.psi;
        let no_z = self.z.is_empty();
        let sorted_x = if no_z && xs.len() == 1 {
            let mut v = xs[0].clone();
            v.sort_unstable_by(f64::total_cmp);
            Some(v)
        } else {
            None
        };
        let mut best: Vec<f64> = Vec::with_capacity(k);
        let mut acc = 0.0;
        for i in 0..n {
            let yz_d = &rows.yz_dist[i * w..(i + 1) * w];
            let yz_j = &rows.yz_idx[i * w..(i + 1) * w];
            best.clear();
            for (&dyz, &j) in yz_d.iter().zip(yz_j) {
                if best.len() == k && dyz >= best[k - 1] {
                    break;
                }
                let d = dyz.max(dist(xs, i, j as usize));
                if best.len() < k {
                    let pos = best.partition_point(|&b| b <= d);
                    best.insert(pos, d);
                } else if d < best[k - 1] {
                    best.pop();
                    let pos = best.partition_point(|&b| b <= d);
                    best.insert(pos, d);
                }
            }
            let eps = best[k - 1];
            let nyz = yz_d.partition_point(|&d| d < eps);
            let (nz, nxz) = if no_z {
                let nx = match &sorted_x {
                    Some(sx) => count_within_sorted(sx, xs[0][i], eps),
                    None => (0..n).filter(|&j| j != i && dist(xs, i, j) < eps).count(),
                };
                (w, nx)
            } else {
                let z_d = &rows.z_dist[i * w..(i + 1) * w];
                let z_j = &rows.z_idx[i * w..(i + 1) * w];
                let nz = z_d.partition_point(|&d| d < eps);
                let nxz = z_j[..nz].iter().filter(|&&j| dist(xs, i, j as usize) < eps).count();
                (nz, nxz)
            };
            acc += psi[nxz + 1] + psi[nyz + 1] - psi[nz + 1];
        }
        psi[k] - acc / n as f64
    }
}

/// Number of entries `v` of `sorted` other than one copy of `x` itself with `|v − x| < eps`.
fn count_within_sorted(sorted: &[f64], x: f64, eps: f64) -> usize {
    if eps <= 0.0 {
        return 0;
    }
    let lo = sorted.partition_point(|&v| v < x && x - v >= eps);
    let hi = sorted.partition_point(|&v| v <= x || v - x < eps);
    (hi - lo).saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut s = Seed(seed).rng();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a = s.normal();
            let b = s.normal();
            x.push(a);
            y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        (x, y)
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1) + 0.577_215_664_901_532_9).abs() < 1e-15);
        // ψ(10) from the closed form H_9 − γ.
        let h9: f64 = (1..10).map(|i| 1.0 / i as f64).sum();
        assert!((digamma(10) - (h9 - 0.577_215_664_901_532_9)).abs() < 1e-13);
    }

    #[test]
    fn context_matches_brute_force() {
        let cfg = KnnConfig::default();
        let (x, y) = gaussian_pair(300, 0.6, 1);
        let (z1, _) = gaussian_pair(300, 0.0, 2);
        let z2: Vec<f64> = y.iter().zip(&z1).map(|(a, b)| 0.5 * a + b).collect();
        let ctx0 = KnnContext::new(&[&y], &[], &cfg).unwrap();
        assert!((ctx0.estimate(&[&x]).unwrap() - mi_knn(&[&x], &[&y], &cfg).unwrap()).abs() < 1e-12);
        let ctx1 = KnnContext::new(&[&y], &[&z1, &z2], &cfg).unwrap();
        let a = ctx1.estimate(&[&x]).unwrap();
        let b = cmi_knn(&[&x], &[&y], &[&z1, &z2], &cfg).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        let c = ctx0.estimate(&[&x, &z1]).unwrap();
        let d = mi_knn(&[&x, &z1], &[&y], &cfg).unwrap();
        assert!((c - d).abs() < 1e-12);
    }

    #[test]
    fn discrete_valued_columns_are_handled() {
        let cfg = KnnConfig::default();
        let x: Vec<f64> = (0..200).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = (0..200).map(|i| (i % 3 + i % 2) as f64).collect();
        let ctx = KnnContext::new(&[&y], &[], &cfg).unwrap();
        let a = ctx.estimate(&[&x]).unwrap();
        assert!(a.is_finite() && a > 0.2);
        assert!((a - mi_knn(&[&x], &[&y], &cfg).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_few_samples() {
        let cfg = KnnConfig::default();
        assert!(mi_knn(&[&[1.0, 2.0, 3.0]], &[&[1.0, 2.0, 3.0]], &cfg).is_err());
        assert!(mi_knn(&[&[1.0, 2.0]], &[&[1.0]], &cfg).is_err());
    }

    #[test]
    fn independent_conditioning_is_a_no_op() {
        let cfg = KnnConfig::default();
        let (x, y) = gaussian_pair(2000, 0.9, 3);
        let (z, _) = gaussian_pair(2000, 0.0, 4);
        let truth = -0.5 * (1.0f64 - 0.81).ln();
        let c = cmi_knn(&[&x], &[&y], &[&z], &cfg).unwrap();
        assert!((c - truth).abs() < 0.08, "{c}");
        let yz = cmi_knn(&[&x], &[&y], &[&y], &cfg).unwrap();
        assert!(yz.abs() < 0.02, "{yz}");
    }
}
