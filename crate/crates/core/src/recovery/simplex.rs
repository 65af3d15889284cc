//! Dense two-phase simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Pivoting follows Bland's rule (lowest-index entering column, lowest
//! basic index among tied ratios), which rules out cycling.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("shape mismatch: A is {rows}x{cols}, b has {b}, c has {c}")]
    Shape {
        rows: usize,
        cols: usize,
        b: usize,
        c: usize,
    },

    #[error("linear program is infeasible (phase-one residual {0:.3e})")]
    Infeasible(f64),

    #[error("linear program is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    // rows 0..m are constraints, row m is the objective; last column is the rhs
    t: DMatrix<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let width = self.t.ncols();
        for c in 0..width {
            self.t[(row, c)] /= p;
        }
        for r in 0..self.t.nrows() {
            if r == row {
                continue;
            }
            let factor = self.t[(r, col)];
            if factor != 0.0 {
                for c in 0..width {
                    let v = self.t[(row, c)];
                    self.t[(r, c)] -= factor * v;
                }
                self.t[(r, col)] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs Bland-rule pivots over columns `0..active` until optimal.
    fn optimize(&mut self, active: usize, eps: f64) -> Result<(), LpError> {
        let obj = self.rows();
        let rhs = self.rhs();
        loop {
            let entering = (0..active).find(|&j| self.t[(obj, j)] < -eps);
            let Some(col) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows() {
                let a = self.t[(r, col)];
                if a > PIVOT_EPS {
                    let ratio = self.t[(r, rhs)].max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= eps * bratio.abs().max(1.0);
                            if ratio < bratio && !tie
                                || tie && self.basis[r] < self.basis[br]
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, col);
        }
    }

    fn remove_row(&mut self, row: usize) {
        self.t = self.t.clone().remove_row(row);
        self.basis.remove(row);
    }
}

/// Minimizes `cᵀx` subject to `Ax = b`, `x ≥ 0`.
pub fn simplex_lp(
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<LpSolution, LpError> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return Err(LpError::Shape {
            rows: m,
            cols: n,
            b: b.len(),
            c: c.len(),
        });
    }
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let eps = 1e-10 * scale;

    // columns: n structural, m artificial, rhs
    let mut t = DMatrix::zeros(m + 1, n + m + 1);
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(r, j)] = sign * a[(r, j)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, n + m)] = sign * b[r];
    }
    // phase-one objective: sum of artificials, expressed in nonbasic terms
    for r in 0..m {
        for j in 0..n {
            t[(m, j)] -= t[(r, j)];
        }
        t[(m, n + m)] -= t[(r, n + m)];
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        pivots: 0,
    };
    tab.optimize(n, eps)?;

    let residual = -tab.t[(tab.rows(), tab.rhs())];
    if residual > 1e-9 * scale * (m.max(1) as f64) {
        return Err(LpError::Infeasible(residual));
    }

    // drive remaining artificials out of the basis; rows where that is
    // impossible are linearly dependent on the others
    let mut r = 0;
    while r < tab.rows() {
        if tab.basis[r] >= n {
            let col = (0..n)
                .filter(|&j| !tab.basis.contains(&j))
                .find(|&j| tab.t[(r, j)].abs() > PIVOT_EPS.max(eps));
            match col {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => tab.remove_row(r),
            }
        } else {
            r += 1;
        }
    }

    // phase two over the structural columns only
    let rows = tab.rows();
    let mut t2 = DMatrix::zeros(rows + 1, n + 1);
    for r in 0..rows {
        for j in 0..n {
            t2[(r, j)] = tab.t[(r, j)];
        }
        t2[(r, n)] = tab.t[(r, tab.rhs())].max(0.0);
    }
    for j in 0..n {
        t2[(rows, j)] = c[j];
    }
    for r in 0..rows {
        let cb = c[tab.basis[r]];
        if cb != 0.0 {
            for j in 0..=n {
                let v = t2[(r, j)];
                t2[(rows, j)] -= cb * v;
            }
        }
    }
    let mut tab = Tableau {
        t: t2,
        basis: tab.basis,
        pivots: tab.pivots,
    };
    let cost_scale = c.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    tab.optimize(n, 1e-10 * cost_scale)?;

    let mut x = DVector::zeros(n);
    for (r, &j) in tab.basis.iter().enumerate() {
        x[j] = tab.t[(r, n)].max(0.0);
    }
    Ok(LpSolution {
        objective: c.dot(&x),
        x,
        pivots: tab.pivots,
    })
}
