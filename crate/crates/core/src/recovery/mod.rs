//! Recovery of optimal measurement operators from a dual optimum `X̂`.
//!
//! Each optimal `Πᵢ` is supported on the null space of `X̂ − ρ′ᵢ`, so
//! `Πᵢ = Σⱼ aᵢⱼ |qᵢⱼ⟩⟨qᵢⱼ|` for an orthonormal null-space basis `qᵢⱼ` and
//! weights `aᵢⱼ ≥ 0`. The weights are fixed by `Σᵢ Πᵢ = I`, a real linear
//! system `Y a = e`. When `Y` has full column rank the least-squares
//! solution is the answer; otherwise the minimum-trace nonnegative solution
//! is found by linear programming.

mod simplex;

pub use simplex::{simplex_lp, LpError, LpSolution};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::ensemble::Ensemble;
use crate::format::{self, MeasurementFile};
use crate::linalg::{self, CMatrix, CVector, LinalgError};

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("X̂ − ρ′ᵢ has no null space for any i; X̂ is not optimal")]
    NoNullSpace,

    #[error("state {index}: null space dimension {dim} exceeds rank(ρ) = {rank}")]
    RankBound {
        index: usize,
        dim: usize,
        rank: usize,
    },

    #[error("coefficient {index} is {value:.3e} (< 0 beyond tolerance)")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("coefficient linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("operators miss the identity by {0:.3e}")]
    Resolution(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Ordered POVM `{Πᵢ}`. Construction does not enforce the POVM conditions;
/// see [`Measurement::feasibility`].
#[derive(Debug, Clone)]
pub struct Measurement {
    operators: Vec<CMatrix>,
    vectors: Option<Vec<CVector>>,
}

/// Residuals of the two POVM conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    /// `max(0, −minᵢ λ_min(Πᵢ))`.
    pub psd: f64,
    /// `‖Σ Πᵢ − I‖_max`.
    pub resolution: f64,
    /// `maxᵢ ‖Πᵢ − Πᵢ*‖_max`.
    pub hermiticity: f64,
}

impl Feasibility {
    pub fn holds(&self, tol: f64) -> bool {
        self.psd <= tol && self.resolution <= tol && self.hermiticity <= tol
    }
}

impl Measurement {
    pub fn new(operators: Vec<CMatrix>) -> Self {
        Self {
            operators,
            vectors: None,
        }
    }

    pub fn with_vectors(operators: Vec<CMatrix>, vectors: Option<Vec<CVector>>) -> Self {
        Self { operators, vectors }
    }

    /// Rank-one measurement `Πᵢ = |μᵢ⟩⟨μᵢ|`.
    pub fn from_vectors(vectors: Vec<CVector>) -> Self {
        let operators = vectors.iter().map(linalg::outer).collect();
        Self {
            operators,
            vectors: Some(vectors),
        }
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// Rank-one factors `μᵢ` (zero for empty outcomes), when every
    /// operator has rank at most one.
    pub fn vectors(&self) -> Option<&[CVector]> {
        self.vectors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators.first().map_or(0, CMatrix::nrows)
    }

    pub fn sum(&self) -> CMatrix {
        let n = self.dim();
        self.operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, p| acc + p)
    }

    pub fn feasibility(&self) -> Result<Feasibility, LinalgError> {
        let n = self.dim();
        let mut psd: f64 = 0.0;
        let mut hermiticity: f64 = 0.0;
        for p in &self.operators {
            if p.nrows() != n || p.ncols() != n {
                return Err(LinalgError::NotSquare(p.nrows(), p.ncols()));
            }
            hermiticity = hermiticity.max(linalg::hermitian_residual(p));
            let lo = linalg::min_eigenvalue(&linalg::hermitian_part(p))?;
            psd = psd.max(-lo);
        }
        let resolution = linalg::max_abs(&(self.sum() - linalg::identity(n)));
        Ok(Feasibility {
            psd,
            resolution,
            hermiticity,
        })
    }

    pub fn to_file(&self) -> MeasurementFile {
        MeasurementFile {
            operators: self.operators.iter().map(format::matrix_to_wire).collect(),
            vectors: self
                .vectors
                .as_ref()
                .map(|vs| vs.iter().map(format::vector_to_wire).collect()),
        }
    }

    pub fn from_file(file: &MeasurementFile) -> Result<Self, RecoveryError> {
        let operators = file
            .operators
            .iter()
            .enumerate()
            .map(|(i, m)| {
                format::matrix_from_wire(m)
                    .ok_or_else(|| RecoveryError::Dimension(format!("operator {i}: ragged rows")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let vectors = file
            .vectors
            .as_ref()
            .map(|vs| vs.iter().map(|v| format::vector_from_wire(v)).collect());
        Ok(Self { operators, vectors })
    }
}

/// Orthonormal bases of `N(X̂ − ρ′ᵢ)`, one list per state.
#[derive(Debug, Clone)]
pub struct NullSpaceBundle {
    dim: usize,
    bases: Vec<Vec<CVector>>,
}

impl NullSpaceBundle {
    pub fn new(dim: usize, bases: Vec<Vec<CVector>>) -> Self {
        Self { dim, bases }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> usize {
        self.bases.len()
    }

    pub fn basis(&self, i: usize) -> &[CVector] {
        &self.bases[i]
    }

    /// Null-space dimensions `tᵢ`.
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.bases.iter().map(Vec::len).sum()
    }
}

/// Null-space bases of `X̂ − ρ′ᵢ` from its eigendecomposition.
///
/// An eigenvector counts as null when its eigenvalue is at most
/// `rank_tol · max(λ_max(X̂ − ρ′ᵢ), tr X̂)`. Each `tᵢ` is checked against the
/// numerical rank of `ρᵢ`.
pub fn null_space_basis(
    x_hat: &CMatrix,
    e: &Ensemble,
    rank_tol: f64,
) -> Result<NullSpaceBundle, RecoveryError> {
    let n = e.dim();
    if x_hat.nrows() != n || x_hat.ncols() != n {
        return Err(RecoveryError::Dimension(format!(
            "X̂ is {}x{}, ensemble dimension is {n}",
            x_hat.nrows(),
            x_hat.ncols()
        )));
    }
    let floor = rank_tol * linalg::real_trace(x_hat).abs();
    let mut bases = Vec::with_capacity(e.len());
    for i in 0..e.len() {
        let eig = linalg::hermitian_eig(&(x_hat - e.weighted(i)))?;
        let threshold = (rank_tol * eig.max()).max(floor);
        let basis: Vec<CVector> = (0..n)
            .filter(|&k| eig.eigenvalues[k] <= threshold)
            .map(|k| eig.vector(k))
            .collect();
        let rank = linalg::numerical_rank(e.rho(i), rank_tol)?;
        if basis.len() > rank {
            return Err(RecoveryError::RankBound {
                index: i,
                dim: basis.len(),
                rank,
            });
        }
        bases.push(basis);
    }
    if bases.iter().all(Vec::is_empty) {
        return Err(RecoveryError::NoNullSpace);
    }
    Ok(NullSpaceBundle::new(n, bases))
}

/// Real form of `Σᵢⱼ aᵢⱼ mvec(qᵢⱼ qᵢⱼ*) = mvec(I)`.
///
/// Rows `0..n²` hold real parts and rows `n²..2n²` imaginary parts of the
/// column-stacked operators. Columns are ordered by `(i, j)`.
#[derive(Debug, Clone)]
pub struct CoefficientSystem {
    pub y: DMatrix<f64>,
    pub e: DVector<f64>,
    /// `(state, basis vector)` for each column of `y`.
    pub columns: Vec<(usize, usize)>,
    pub states: usize,
}

pub fn assemble_system(bundle: &NullSpaceBundle) -> CoefficientSystem {
    let n = bundle.dim();
    let nn = n * n;
    let mut columns = Vec::with_capacity(bundle.total());
    for i in 0..bundle.states() {
        for j in 0..bundle.basis(i).len() {
            columns.push((i, j));
        }
    }
    let mut y = DMatrix::zeros(2 * nn, columns.len());
    for (col, &(i, j)) in columns.iter().enumerate() {
        let v = linalg::mvec(&linalg::outer(&bundle.basis(i)[j]));
        for r in 0..nn {
            y[(r, col)] = v[r].re;
            y[(nn + r, col)] = v[r].im;
        }
    }
    let mut e = DVector::zeros(2 * nn);
    for (r, z) in linalg::mvec(&linalg::identity(n)).iter().enumerate() {
        e[r] = z.re;
    }
    CoefficientSystem {
        y,
        e,
        columns,
        states: bundle.states(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMethod {
    LeastSquares,
    LinearProgram,
}

/// Solved weights `aᵢⱼ`, in the column order of the system.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a: DVector<f64>,
    pub method: CoefficientMethod,
    pub columns: Vec<(usize, usize)>,
    pub states: usize,
}

impl Coefficients {
    /// `Σⱼ aᵢⱼ` per state, zero for states with an empty null space.
    pub fn per_state(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.states];
        for (k, &(i, _)) in self.columns.iter().enumerate() {
            out[i] += self.a[k];
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoefficientOptions {
    /// Relative singular-value threshold for full column rank.
    pub rank_tol: f64,
    /// Negative least-squares weights down to `-clamp_tol` are set to zero.
    pub clamp_tol: f64,
}

impl Default for CoefficientOptions {
    fn default() -> Self {
        Self {
            rank_tol: 1e-6,
            clamp_tol: 1e-8,
        }
    }
}

pub fn solve_coefficients(
    sys: &CoefficientSystem,
    opts: &CoefficientOptions,
) -> Result<Coefficients, RecoveryError> {
    let cols = sys.y.ncols();
    let svd = sys.y.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let full_rank = cols <= sys.y.nrows() && smax > 0.0 && smin > opts.rank_tol * smax;
    let cutoff = opts.rank_tol * smax;
    // minimum-norm least squares; equals (YᵀY)⁻¹Yᵀe at full column rank
    let ls = svd
        .solve(&sys.e, cutoff)
        .map_err(|msg| RecoveryError::Dimension(msg.to_string()))?;

    let (a, method) = if full_rank {
        let mut a = ls;
        for (index, v) in a.iter_mut().enumerate() {
            if *v < -opts.clamp_tol {
                return Err(RecoveryError::NegativeCoefficient { index, value: *v });
            }
            *v = v.max(0.0);
        }
        (a, CoefficientMethod::LeastSquares)
    } else {
        // project e onto range(Y) so the equality constraints are consistent
        let target = &sys.y * &ls;
        let c = DVector::from_element(cols, 1.0);
        let sol = simplex_lp(&c, &sys.y, &target)?;
        (sol.x, CoefficientMethod::LinearProgram)
    };
    Ok(Coefficients {
        a,
        method,
        columns: sys.columns.clone(),
        states: sys.states,
    })
}

/// `Πᵢ = Σⱼ aᵢⱼ |qᵢⱼ⟩⟨qᵢⱼ|`, checked against `Σ Πᵢ = I`.
pub fn build_measurement(
    bundle: &NullSpaceBundle,
    coeffs: &Coefficients,
    resolution_tol: f64,
) -> Result<Measurement, RecoveryError> {
    let n = bundle.dim();
    let mut ops = vec![CMatrix::zeros(n, n); bundle.states()];
    for (k, &(i, j)) in coeffs.columns.iter().enumerate() {
        let q = &bundle.basis(i)[j];
        ops[i] += linalg::outer(q).scale(coeffs.a[k]);
    }
    let vectors = if bundle.dims().iter().all(|&t| t <= 1) {
        let mut vs = vec![CVector::zeros(n); bundle.states()];
        for (k, &(i, j)) in coeffs.columns.iter().enumerate() {
            vs[i] = bundle.basis(i)[j].scale(coeffs.a[k].max(0.0).sqrt());
        }
        Some(vs)
    } else {
        None
    };
    let m = Measurement::with_vectors(ops, vectors);
    let resolution = linalg::max_abs(&(m.sum() - linalg::identity(n)));
    if resolution > resolution_tol {
        return Err(RecoveryError::Resolution(resolution));
    }
    Ok(m)
}
