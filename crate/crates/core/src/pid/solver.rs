//! Unique-information minimization over the marginal polytope.
//!
//! The feasible set is `{q ≥ 0 : q(y,x1) = p(y,x1), q(y,x2) = p(y,x2)}`.
//! Within a fixed y it is a transportation polytope whose directions are
//! the double differences `+δ(x1,x2) +δ(x1',x2') −δ(x1,x2') −δ(x1',x2)`.
//! Only cells with `p(y,x1) > 0` and `p(y,x2) > 0` can carry mass.
//!
//! The objective `f(q) = Σ q ln(q / q(x1,x2))` (so that
//! `I_q(Y;X1|X2) = H(Y|X2) + f(q)`) is convex but its gradient is unbounded
//! at the boundary, where optima frequently sit (whole (x1,x2) columns often
//! empty out). The solver therefore follows the log-barrier central path:
//! for decreasing μ it minimizes `f(q) − μ Σ ln q` with damped Newton steps
//! restricted to the double-difference subspace. Each Newton step solves the
//! equality-constrained KKT system through a Schur complement on the
//! marginal multipliers; the Hessian is block-diagonal over (x1,x2) columns
//! (diagonal minus rank one), and the multipliers of the larger input side
//! are block-diagonal as well and are eliminated first.
//!
//! Stopping uses a Lagrangian lower bound: for any additive
//! `θ(y,x1,x2) = a(y,x1) + b(y,x2)`,
//! `Σ a·p(y,x1) + Σ b·p(y,x2) − ln max_{x1,x2} Σ_y e^θ ≤ min f`,
//! so `gap = I_q − (H(Y|X2) + bound)` certifies optimality. θ is taken as
//! the additive part of the current barrier gradient.

use std::f64::consts::LN_2;

use super::TripleDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target gap in bits.
    pub tol: f64,
    /// Cap on the total number of Newton steps.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: super::DEFAULT_TOL,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrojaSolution {
    pub q: TripleDistribution,
    /// I_q(Y;X1|X2) in bits.
    pub unique_x1: f64,
    /// Certified upper bound on `unique_x1` minus the true minimum, in bits.
    pub gap: f64,
    pub iterations: usize,
}

/// Minimize I_q(Y;X1|X2) over distributions matching the (Y,X1) and (Y,X2)
/// marginals of `p`, to within `tol` bits.
pub fn broja_unique(p: &TripleDistribution, tol: f64) -> Result<BrojaSolution> {
    solve(p, SolverOptions {
        tol,
        ..SolverOptions::default()
    })
}

/// I(Y;X1|X2) in bits of a table given in the same layout as `p`.
pub(crate) fn cmi_bits(dims: [usize; 3], q: &[f64]) -> f64 {
    let [ny, n1, n2] = dims;
    let mut q2 = vec![0.0; n2];
    let mut qy2 = vec![0.0; ny * n2];
    let mut q12 = vec![0.0; n1 * n2];
    for y in 0..ny {
        for a in 0..n1 {
            for b in 0..n2 {
                let v = q[(y * n1 + a) * n2 + b];
                q2[b] += v;
                qy2[y * n2 + b] += v;
                q12[a * n2 + b] += v;
            }
        }
    }
    let mut acc = 0.0;
    for y in 0..ny {
        for a in 0..n1 {
            for b in 0..n2 {
                let v = q[(y * n1 + a) * n2 + b];
                if v > 0.0 {
                    acc += v * ((v * q2[b]) / (qy2[y * n2 + b] * q12[a * n2 + b])).ln();
                }
            }
        }
    }
    (acc / LN_2).max(0.0)
}

pub fn solve(p: &TripleDistribution, opts: SolverOptions) -> Result<BrojaSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let dims = p.dims();
    let p_cmi = cmi_bits(dims, p.probs());
    let problem = Problem::new(p);
    let q0 = problem.start();
    let q0_table = problem.to_table(&q0);
    let q0_cmi = cmi_bits(dims, &q0_table);

    let mut best = if q0_cmi <= p_cmi {
        (q0_table, q0_cmi)
    } else {
        (p.probs().to_vec(), p_cmi)
    };
    if problem.free_dimension() == 0 || best.1 == 0.0 {
        return finish(dims, best, 0.0, 0);
    }

    let tol_nats = opts.tol * LN_2;
    let mut q = q0;
    let mut mu = 1e-3;
    let mut iterations = 0usize;
    let mut gap_bits;
    loop {
        let status = problem.center(&mut q, mu, &mut iterations, opts.max_iterations);
        let lower = problem.lower_bound(&q, mu);
        let table = problem.to_table(&q);
        let value = cmi_bits(dims, &table);
        if value < best.1 {
            best = (table, value);
        }
        gap_bits = (best.1 - lower / LN_2).max(0.0);
        if gap_bits < opts.tol {
            break;
        }
        if status == Centering::Exhausted || mu < 1e-18 {
            return Err(Error::NonConvergence {
                iterations,
                gap: gap_bits,
                best_value: best.1,
                best: Box::new(TripleDistribution::new(dims, best.0)?),
            });
        }
        // Once the barrier term is far below the tolerance the remaining gap
        // is centering error; shrink μ more gently so Newton stays in its
        // quadratic region.
        mu *= if mu * problem.n_cells() as f64 > tol_nats { 0.1 } else { 0.5 };
    }
    finish(dims, best, gap_bits, iterations)
}

fn finish(dims: [usize; 3], best: (Vec<f64>, f64), gap: f64, iterations: usize) -> Result<BrojaSolution> {
    let q = TripleDistribution::new(dims, best.0)?;
    Ok(BrojaSolution {
        q,
        unique_x1: best.1,
        gap,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Centering {
    Converged,
    Stalled,
    Exhausted,
}

/// Solver-side view of the allowed cells.
struct Problem {
    dims: [usize; 3],
    /// Cells as (y, x1, x2).
    cells: Vec<(usize, usize, usize)>,
    /// Cells grouped by (x1, x2) column.
    columns: Vec<Vec<usize>>,
    /// Cells grouped by y with their (row, col) rectangle shape.
    slices: Vec<Slice>,
    py1: Vec<f64>,
    py2: Vec<f64>,
    py: Vec<f64>,
    h_y_given_x2: f64,
    layout: Layout,
}

struct Slice {
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// `cells[r * cols.len() + c]` is the cell at (rows[r], cols[c]).
    cells: Vec<usize>,
}

/// Constraint numbering for the Newton system. "Kept" multipliers form a
/// small dense system; "eliminated" ones are grouped into blocks by the
/// symbol of the larger input, one block per column group.
struct Layout {
    n_kept: usize,
    /// For each cell: kept-constraint index.
    kept_of: Vec<Option<usize>>,
    /// For each cell: (block, local index) of its eliminated constraint.
    elim_of: Vec<Option<(usize, usize)>>,
    block_sizes: Vec<usize>,
    /// For each column: its block.
    block_of_column: Vec<usize>,
    /// Marginal values the kept and eliminated constraints must match.
    kept_target: Vec<f64>,
    elim_target: Vec<Vec<f64>>,
}

impl Problem {
    fn new(p: &TripleDistribution) -> Self {
        let dims = p.dims();
        let [ny, n1, n2] = dims;
        let py1 = p.marginal_y_x1();
        let py2 = p.marginal_y_x2();
        let py: Vec<f64> = (0..ny).map(|y| (0..n1).map(|a| py1[y * n1 + a]).sum()).collect();
        let mut cells = Vec::new();
        let mut slices = Vec::with_capacity(ny);
        let mut column_of = vec![usize::MAX; n1 * n2];
        let mut columns: Vec<Vec<usize>> = Vec::new();
        let mut column_key = Vec::new();
        for y in 0..ny {
            let rows: Vec<usize> = (0..n1).filter(|&a| py1[y * n1 + a] > 0.0).collect();
            let cols: Vec<usize> = (0..n2).filter(|&b| py2[y * n2 + b] > 0.0).collect();
            let mut slice_cells = Vec::with_capacity(rows.len() * cols.len());
            for &a in &rows {
                for &b in &cols {
                    let id = cells.len();
                    cells.push((y, a, b));
                    slice_cells.push(id);
                    let key = a * n2 + b;
                    if column_of[key] == usize::MAX {
                        column_of[key] = columns.len();
                        columns.push(Vec::new());
                        column_key.push((a, b));
                    }
                    columns[column_of[key]].push(id);
                }
            }
            slices.push(Slice {
                rows,
                cols,
                cells: slice_cells,
            });
        }
        let mut h = 0.0;
        for y in 0..ny {
            for b in 0..n2 {
                let v = py2[y * n2 + b];
                if v > 0.0 {
                    let pb: f64 = (0..ny).map(|t| py2[t * n2 + b]).sum();
                    h -= v * (v / pb).ln();
                }
            }
        }

        // Row constraints (y, x1) for every row of every slice; column
        // constraints (y, x2) for all but the first column of each slice,
        // which is implied by the others.
        let mut row_id = vec![usize::MAX; ny * n1];
        let mut col_id = vec![usize::MAX; ny * n2];
        let (mut n_rows, mut n_cols) = (0, 0);
        for (y, s) in slices.iter().enumerate() {
            for &a in &s.rows {
                row_id[y * n1 + a] = n_rows;
                n_rows += 1;
            }
            for &b in s.cols.iter().skip(1) {
                col_id[y * n2 + b] = n_cols;
                n_cols += 1;
            }
        }
        // Eliminate whichever side has more constraints; it is block
        // diagonal by that side's input symbol.
        let eliminate_rows = n_rows > n_cols;
        let n_blocks = if eliminate_rows { n1 } else { n2 };
        let mut block_sizes = vec![0usize; n_blocks];
        let mut local = vec![usize::MAX; if eliminate_rows { ny * n1 } else { ny * n2 }];
        let mut kept_index = vec![usize::MAX; if eliminate_rows { ny * n2 } else { ny * n1 }];
        let mut n_kept = 0;
        for y in 0..ny {
            if eliminate_rows {
                for a in 0..n1 {
                    if row_id[y * n1 + a] != usize::MAX {
                        local[y * n1 + a] = block_sizes[a];
                        block_sizes[a] += 1;
                    }
                }
                for b in 0..n2 {
                    if col_id[y * n2 + b] != usize::MAX {
                        kept_index[y * n2 + b] = n_kept;
                        n_kept += 1;
                    }
                }
            } else {
                for b in 0..n2 {
                    if col_id[y * n2 + b] != usize::MAX {
                        local[y * n2 + b] = block_sizes[b];
                        block_sizes[b] += 1;
                    }
                }
                for a in 0..n1 {
                    if row_id[y * n1 + a] != usize::MAX {
                        kept_index[y * n1 + a] = n_kept;
                        n_kept += 1;
                    }
                }
            }
        }
        let mut kept_of = Vec::with_capacity(cells.len());
        let mut elim_of = Vec::with_capacity(cells.len());
        for &(y, a, b) in &cells {
            let (ek, kk, blk) = if eliminate_rows {
                (y * n1 + a, y * n2 + b, a)
            } else {
                (y * n2 + b, y * n1 + a, b)
            };
            kept_of.push((kept_index[kk] != usize::MAX).then_some(kept_index[kk]));
            elim_of.push((local[ek] != usize::MAX).then_some((blk, local[ek])));
        }
        let block_of_column = column_key
            .iter()
            .map(|&(a, b)| if eliminate_rows { a } else { b })
            .collect();
        let mut kept_target = vec![0.0; n_kept];
        let mut elim_target: Vec<Vec<f64>> = block_sizes.iter().map(|&b| vec![0.0; b]).collect();
        for y in 0..ny {
            for a in 0..n1 {
                if row_id[y * n1 + a] == usize::MAX {
                    continue;
                }
                let v = py1[y * n1 + a];
                if eliminate_rows {
                    elim_target[a][local[y * n1 + a]] = v;
                } else {
                    kept_target[kept_index[y * n1 + a]] = v;
                }
            }
            for b in 0..n2 {
                if col_id[y * n2 + b] == usize::MAX {
                    continue;
                }
                let v = py2[y * n2 + b];
                if eliminate_rows {
                    kept_target[kept_index[y * n2 + b]] = v;
                } else {
                    elim_target[b][local[y * n2 + b]] = v;
                }
            }
        }
        Problem {
            dims,
            cells,
            columns,
            slices,
            py1,
            py2,
            py,
            h_y_given_x2: h,
            layout: Layout {
                n_kept,
                kept_of,
                elim_of,
                block_sizes,
                block_of_column,
                kept_target,
                elim_target,
            },
        }
    }

    fn n_cells(&self) -> usize {
        self.cells.len()
    }

    fn free_dimension(&self) -> usize {
        self.slices
            .iter()
            .map(|s| s.rows.len().saturating_sub(1) * s.cols.len().saturating_sub(1))
            .sum()
    }

    /// Product start `p(y,x1) p(y,x2) / p(y)`: feasible and strictly positive.
    fn start(&self) -> Vec<f64> {
        let [_, n1, n2] = self.dims;
        self.cells
            .iter()
            .map(|&(y, a, b)| self.py1[y * n1 + a] * self.py2[y * n2 + b] / self.py[y])
            .collect()
    }

    fn to_table(&self, q: &[f64]) -> Vec<f64> {
        let [_, n1, n2] = self.dims;
        let mut t = vec![0.0; self.dims[0] * n1 * n2];
        for (&(y, a, b), &v) in self.cells.iter().zip(q) {
            t[(y * n1 + a) * n2 + b] = v;
        }
        t
    }

    /// Barrier objective; `None` outside the positive orthant.
    fn barrier(&self, q: &[f64], mu: f64) -> Option<f64> {
        let mut acc = 0.0;
        for col in &self.columns {
            let s: f64 = col.iter().map(|&i| q[i]).sum();
            for &i in col {
                if !(q[i] > 0.0) {
                    return None;
                }
                acc += q[i] * (q[i] / s).ln() - mu * q[i].ln();
            }
        }
        Some(acc)
    }

    fn gradient(&self, q: &[f64], mu: f64) -> Vec<f64> {
        let mut g = vec![0.0; q.len()];
        for col in &self.columns {
            let s: f64 = col.iter().map(|&i| q[i]).sum();
            for &i in col {
                g[i] = (q[i] / s).ln() - mu / q[i];
            }
        }
        g
    }

    /// Damped Newton iterations on the barrier problem at fixed μ.
    fn center(&self, q: &mut [f64], mu: f64, iterations: &mut usize, cap: usize) -> Centering {
        let mut trial = vec![0.0; q.len()];
        for _ in 0..200 {
            if *iterations >= cap {
                return Centering::Exhausted;
            }
            *iterations += 1;
            let g = self.gradient(q, mu);
            let Some(d) = self.newton_direction(q, &g, mu) else {
                return Centering::Stalled;
            };
            let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            // Decrement of the μ-scaled (self-concordant) barrier problem.
            if !(-slope / mu > 1e-10) {
                return Centering::Converged;
            }
            let mut t: f64 = 1.0;
            for (qi, di) in q.iter().zip(&d) {
                if *di < 0.0 {
                    t = t.min(-0.99 * qi / di);
                }
            }
            let Some(f0) = self.barrier(q, mu) else {
                return Centering::Stalled;
            };
            loop {
                for ((ti, qi), di) in trial.iter_mut().zip(q.iter()).zip(&d) {
                    *ti = qi + t * di;
                }
                // Accept on sufficient decrease, or when the directional
                // derivative is still non-positive (convexity then implies
                // decrease even where round-off hides it in the values).
                if trial.iter().all(|&v| v > 0.0) {
                    let g_t = self.gradient(&trial, mu);
                    let slope_t: f64 = g_t.iter().zip(&d).map(|(a, b)| a * b).sum();
                    let armijo = matches!(self.barrier(&trial, mu), Some(f) if f <= f0 + 1e-4 * t * slope);
                    if armijo || slope_t <= 0.0 {
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-20 {
                    return Centering::Stalled;
                }
            }
            q.copy_from_slice(&trial);
            self.rebalance(q);
        }
        Centering::Stalled
    }

    /// Alternately rescale the rows and columns of each y-slice onto the
    /// target marginals, removing round-off drift.
    fn rebalance(&self, q: &mut [f64]) {
        let [_, n1, n2] = self.dims;
        for (y, s) in self.slices.iter().enumerate() {
            let nc = s.cols.len();
            for _ in 0..50 {
                let mut worst: f64 = 0.0;
                for (r, &a) in s.rows.iter().enumerate() {
                    let target = self.py1[y * n1 + a];
                    let cells = &s.cells[r * nc..(r + 1) * nc];
                    let sum: f64 = cells.iter().map(|&i| q[i]).sum();
                    worst = worst.max((sum - target).abs());
                    if sum > 0.0 {
                        cells.iter().for_each(|&i| q[i] *= target / sum);
                    }
                }
                for (c, &b) in s.cols.iter().enumerate() {
                    let target = self.py2[y * n2 + b];
                    let sum: f64 = (0..s.rows.len()).map(|r| q[s.cells[r * nc + c]]).sum();
                    worst = worst.max((sum - target).abs());
                    if sum > 0.0 {
                        (0..s.rows.len()).for_each(|r| q[s.cells[r * nc + c]] *= target / sum);
                    }
                }
                if worst < 1e-16 {
                    break;
                }
            }
        }
    }

    /// Newton step restricted to the marginal-preserving subspace; any
    /// marginal residual of `q` is also driven to zero.
    fn newton_direction(&self, q: &[f64], g: &[f64], mu: f64) -> Option<Vec<f64>> {
        let lay = &self.layout;
        let nk = lay.n_kept;
        // Per-column inverse Hessian: diag(u) + u uᵀ / den with
        // u = q² / (q + μ) and den = Σ μ q / (q + μ).
        let mut u = vec![0.0; q.len()];
        let mut den = vec![0.0; self.columns.len()];
        for (c, col) in self.columns.iter().enumerate() {
            for &i in col {
                u[i] = q[i] * q[i] / (q[i] + mu);
                den[c] += mu * q[i] / (q[i] + mu);
            }
        }
        let hinv_mul = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; v.len()];
            for (c, col) in self.columns.iter().enumerate() {
                let dot: f64 = col.iter().map(|&i| u[i] * v[i]).sum();
                for &i in col {
                    out[i] = u[i] * v[i] + u[i] * dot / den[c];
                }
            }
            out
        };

        let mut s_kk = vec![0.0; nk * nk];
        let mut s_ke: Vec<Vec<f64>> = lay.block_sizes.iter().map(|&b| vec![0.0; nk * b]).collect();
        let mut s_ee: Vec<Vec<f64>> = lay.block_sizes.iter().map(|&b| vec![0.0; b * b]).collect();
        for (c, col) in self.columns.iter().enumerate() {
            let blk = lay.block_of_column[c];
            let bs = lay.block_sizes[blk];
            for &i in col {
                for &j in col {
                    let h = u[i] * u[j] / den[c] + if i == j { u[i] } else { 0.0 };
                    if let (Some(a), Some(b)) = (lay.kept_of[i], lay.kept_of[j]) {
                        s_kk[a * nk + b] += h;
                    }
                    if let (Some(a), Some((_, b))) = (lay.kept_of[i], lay.elim_of[j]) {
                        s_ke[blk][a * bs + b] += h;
                    }
                    if let (Some((_, a)), Some((_, b))) = (lay.elim_of[i], lay.elim_of[j]) {
                        s_ee[blk][a * bs + b] += h;
                    }
                }
            }
        }
        let v = hinv_mul(g);
        let mut b_k: Vec<f64> = lay.kept_target.clone();
        let mut b_e: Vec<Vec<f64>> = lay.elim_target.clone();
        for i in 0..q.len() {
            if let Some(a) = lay.kept_of[i] {
                b_k[a] += v[i] - q[i];
            }
            if let Some((blk, a)) = lay.elim_of[i] {
                b_e[blk][a] += v[i] - q[i];
            }
        }

        // Eliminate block multipliers: T = S_kk − Σ S_ke S_ee⁻¹ S_ek.
        let mut t_mat = s_kk;
        let mut t_rhs = b_k;
        let mut solved_blocks = Vec::with_capacity(lay.block_sizes.len());
        for (blk, &bs) in lay.block_sizes.iter().enumerate() {
            if bs == 0 {
                solved_blocks.push((Vec::new(), Vec::new()));
                continue;
            }
            let chol = cholesky(&s_ee[blk], bs)?;
            // X = S_ee⁻¹ S_ek, stored bs × nk; x = S_ee⁻¹ b_e.
            let mut x_mat = vec![0.0; bs * nk];
            let mut col = vec![0.0; bs];
            for a in 0..nk {
                for r in 0..bs {
                    col[r] = s_ke[blk][a * bs + r];
                }
                let sol = chol_solve(&chol, bs, &col);
                for r in 0..bs {
                    x_mat[r * nk + a] = sol[r];
                }
            }
            let x_vec = chol_solve(&chol, bs, &b_e[blk]);
            for a in 0..nk {
                for r in 0..bs {
                    let ske = s_ke[blk][a * bs + r];
                    if ske != 0.0 {
                        for b in 0..nk {
                            t_mat[a * nk + b] -= ske * x_mat[r * nk + b];
                        }
                        t_rhs[a] -= ske * x_vec[r];
                    }
                }
            }
            solved_blocks.push((x_mat, x_vec));
        }
        let lambda_k = if nk > 0 {
            let chol = cholesky(&t_mat, nk)?;
            chol_solve(&chol, nk, &t_rhs)
        } else {
            Vec::new()
        };
        let lambda_e: Vec<Vec<f64>> = lay
            .block_sizes
            .iter()
            .enumerate()
            .map(|(blk, &bs)| {
                let (x_mat, x_vec) = &solved_blocks[blk];
                (0..bs)
                    .map(|r| x_vec[r] - (0..nk).map(|a| x_mat[r * nk + a] * lambda_k[a]).sum::<f64>())
                    .collect()
            })
            .collect();
        let w: Vec<f64> = (0..q.len())
            .map(|i| {
                lay.kept_of[i].map_or(0.0, |a| lambda_k[a]) + lay.elim_of[i].map_or(0.0, |(blk, a)| lambda_e[blk][a])
            })
            .collect();
        let hw = hinv_mul(&w);
        let d: Vec<f64> = hw.iter().zip(&v).map(|(a, b)| a - b).collect();
        d.iter().all(|x| x.is_finite()).then_some(d)
    }

    /// Lagrangian lower bound on `I(Y;X1|X2)` in nats, using the additive
    /// part of the barrier gradient as dual variables.
    fn lower_bound(&self, q: &[f64], mu: f64) -> f64 {
        let [ny, n1, n2] = self.dims;
        let g = self.gradient(q, mu);
        let mut a_dual = vec![0.0; ny * n1];
        let mut b_dual = vec![0.0; ny * n2];
        for (y, s) in self.slices.iter().enumerate() {
            let (nr, nc) = (s.rows.len(), s.cols.len());
            if nr == 0 || nc == 0 {
                continue;
            }
            let mut row_mean = vec![0.0; nr];
            let mut col_mean = vec![0.0; nc];
            for r in 0..nr {
                for c in 0..nc {
                    let v = g[s.cells[r * nc + c]];
                    row_mean[r] += v / nc as f64;
                    col_mean[c] += v / nr as f64;
                }
            }
            let grand = row_mean.iter().sum::<f64>() / nr as f64;
            for (r, &a) in s.rows.iter().enumerate() {
                a_dual[y * n1 + a] = row_mean[r] - grand;
            }
            for (c, &b) in s.cols.iter().enumerate() {
                b_dual[y * n2 + b] = col_mean[c];
            }
        }
        let linear: f64 = self.py1.iter().zip(&a_dual).map(|(p, a)| p * a).sum::<f64>()
            + self.py2.iter().zip(&b_dual).map(|(p, b)| p * b).sum::<f64>();
        let mut max_log = f64::NEG_INFINITY;
        for col in &self.columns {
            let thetas: Vec<f64> = col
                .iter()
                .map(|&i| {
                    let (y, a, b) = self.cells[i];
                    a_dual[y * n1 + a] + b_dual[y * n2 + b]
                })
                .collect();
            let m = thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + thetas.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
            max_log = max_log.max(lse);
        }
        self.h_y_given_x2 + linear - max_log
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix,
/// with a small diagonal shift retried on breakdown.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for shift in [0.0, 1e-14, 1e-12, 1e-10] {
        let mut l = vec![0.0; n * n];
        let mut ok = true;
        'outer: for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                if i == j {
                    s += shift * scale;
                }
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        ok = false;
                        break 'outer;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        if ok {
            return Some(l);
        }
    }
    None
}

fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}
