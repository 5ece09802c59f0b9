//! Exhaustive grid search over the marginal polytope, used to check the solver.

use super::TripleDistribution;
use crate::error::{Error, Result};

const EVALUATION_BUDGET: f64 = 1e8;

/// Direct evaluation of I(Y;X1|X2) in bits, kept separate from the solver's
/// own routine so the two can be compared.
fn objective(dims: [usize; 3], q: &[f64]) -> f64 {
    let [ny, n1, n2] = dims;
    let at = |y: usize, a: usize, b: usize| q[(y * n1 + a) * n2 + b];
    let mut total = 0.0;
    for b in 0..n2 {
        let qb: f64 = (0..ny).flat_map(|y| (0..n1).map(move |a| (y, a))).map(|(y, a)| at(y, a, b)).sum();
        if qb <= 0.0 {
            continue;
        }
        for y in 0..ny {
            let qyb: f64 = (0..n1).map(|a| at(y, a, b)).sum();
            for a in 0..n1 {
                let v = at(y, a, b);
                if v <= 0.0 {
                    continue;
                }
                let qab: f64 = (0..ny).map(|t| at(t, a, b)).sum();
                total += v * (v * qb / (qyb * qab)).log2();
            }
        }
    }
    total
}

/// A free coordinate: +δ at `plus` cells, −δ at `minus` cells.
struct Direction {
    plus: [usize; 2],
    minus: [usize; 2],
    lo: f64,
    hi: f64,
}

/// Minimum of I_q(Y;X1|X2) over a grid of double-difference coefficients
/// around the product start `p(y,x1)p(y,x2)/p(y)`, in bits.
///
/// Each y-slice with rows R and columns C contributes `(|R|−1)(|C|−1)`
/// coordinates anchored at its first row and column. A slice with a single
/// coordinate is scanned over its exact feasible interval (endpoints
/// included); otherwise each coordinate ranges over `[−p(y), p(y)]` and
/// infeasible points are skipped.
pub fn brute_force_unique(p: &TripleDistribution, grid_step: f64) -> Result<f64> {
    if !(grid_step > 0.0) {
        return Err(Error::InvalidArgument("grid_step must be positive".into()));
    }
    let dims = p.dims();
    let [ny, n1, n2] = dims;
    let py1 = p.marginal_y_x1();
    let py2 = p.marginal_y_x2();
    let mut base = vec![0.0; p.probs().len()];
    let mut dirs: Vec<Direction> = Vec::new();
    for y in 0..ny {
        let rows: Vec<usize> = (0..n1).filter(|&a| py1[y * n1 + a] > 0.0).collect();
        let cols: Vec<usize> = (0..n2).filter(|&b| py2[y * n2 + b] > 0.0).collect();
        let py: f64 = rows.iter().map(|&a| py1[y * n1 + a]).sum();
        for &a in &rows {
            for &b in &cols {
                base[p.index(y, a, b)] = py1[y * n1 + a] * py2[y * n2 + b] / py;
            }
        }
        let single = rows.len() == 2 && cols.len() == 2;
        for &a in rows.iter().skip(1) {
            for &b in cols.iter().skip(1) {
                let plus = [p.index(y, rows[0], cols[0]), p.index(y, a, b)];
                let minus = [p.index(y, rows[0], b), p.index(y, a, cols[0])];
                let (lo, hi) = if single {
                    (-base[plus[0]].min(base[plus[1]]), base[minus[0]].min(base[minus[1]]))
                } else {
                    (-py, py)
                };
                dirs.push(Direction { plus, minus, lo, hi });
            }
        }
    }
    let axes: Vec<Vec<f64>> = dirs
        .iter()
        .map(|d| {
            let mut v = Vec::new();
            let mut x = d.lo;
            while x < d.hi {
                v.push(x);
                x += grid_step;
            }
            v.push(d.hi);
            v
        })
        .collect();
    let evaluations: f64 = axes.iter().map(|a| a.len() as f64).product();
    if evaluations > EVALUATION_BUDGET {
        return Err(Error::Budget(format!(
            "{} free directions need {evaluations:.3e} grid evaluations",
            dirs.len()
        )));
    }
    let mut best = objective(dims, &base);
    let mut idx = vec![0usize; axes.len()];
    let mut q = base.clone();
    'grid: loop {
        q.copy_from_slice(&base);
        for (d, (axis, &i)) in dirs.iter().zip(axes.iter().zip(&idx)) {
            let delta = axis[i];
            for &c in &d.plus {
                q[c] += delta;
            }
            for &c in &d.minus {
                q[c] -= delta;
            }
        }
        if q.iter().all(|&v| v >= -1e-15) {
            for v in q.iter_mut() {
                *v = v.max(0.0);
            }
            best = best.min(objective(dims, &q));
        }
        for k in 0..idx.len() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                continue 'grid;
            }
            idx[k] = 0;
        }
        break;
    }
    Ok(best.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gate(f: impl Fn(usize, usize) -> usize) -> TripleDistribution {
        TripleDistribution::from_fn([2, 2, 2], |y, a, b| if f(a, b) == y { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn gate_values() {
        assert!(brute_force_unique(&gate(|a, b| a ^ b), 0.01).unwrap().abs() < 0.01);
        assert!((brute_force_unique(&gate(|a, _| a), 0.01).unwrap() - 1.0).abs() < 1e-12);
        assert!(brute_force_unique(&gate(|a, b| a & b), 0.001).unwrap() < 1e-3);
    }

    #[test]
    fn budget_guard() {
        let p = TripleDistribution::from_fn([5, 5, 5], |_, _, _| 1.0).unwrap();
        assert!(matches!(brute_force_unique(&p, 0.01), Err(Error::Budget(_))));
    }

    #[test]
    fn ternary_grid_runs() {
        let p = TripleDistribution::from_fn([2, 3, 2], |y, a, b| 1.0 + ((y + 2 * a + b) % 3) as f64).unwrap();
        let v = brute_force_unique(&p, 0.02).unwrap();
        assert!(v >= 0.0 && v <= p.info_terms().cmi_x1_given_x2 + 1e-12);
    }
}
