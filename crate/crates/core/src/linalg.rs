//! Dense Hermitian linear algebra on top of `nalgebra`.
//!
//! Every routine here works on square complex matrices stored as
//! [`CMatrix`]. Eigenvectors carry an arbitrary phase, so callers compare
//! projectors `|q⟩⟨q|` rather than raw vectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance of the symmetric eigensolver.
pub const EIG_TOL: f64 = 1e-10;

/// Default Hermiticity tolerance for inputs to the spectral routines.
pub const DEFAULT_HERM_TOL: f64 = 1e-8;

const EIG_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("eigensolver failed to converge")]
    EigenFailed,

    #[error("singular linear system")]
    Singular,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Spectral decomposition `M = V diag(λ) V*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Rebuilds `V f(Λ) V*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let s = f(self.eigenvalues[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        &scaled * self.eigenvectors.adjoint()
    }
}

pub fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry modulus, `‖M‖_max`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `‖M − M*‖_max`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    worst
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// Real part of the trace; the imaginary part of a Hermitian trace is round-off.
pub fn real_trace(m: &CMatrix) -> f64 {
    trace(m).re
}

/// `Re tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `|v⟩⟨v|`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Column-stacked vector of `m`.
pub fn mvec(m: &CMatrix) -> CVector {
    // nalgebra storage is column-major
    CVector::from_column_slice(m.as_slice())
}

pub fn hermitian_eig(m: &CMatrix) -> Result<EigenDecomposition> {
    hermitian_eig_tol(m, DEFAULT_HERM_TOL)
}

/// Full spectral decomposition of a Hermitian matrix. The input is accepted
/// when `‖M − M*‖_max ≤ herm_tol · max(1, ‖M‖_max)` and its Hermitian part is
/// decomposed.
pub fn hermitian_eig_tol(m: &CMatrix, herm_tol: f64) -> Result<EigenDecomposition> {
    let n = check_square(m)?;
    if !is_finite(m) {
        return Err(LinalgError::NonFinite);
    }
    let resid = hermitian_residual(m);
    if resid > herm_tol * max_abs(m).max(1.0) {
        return Err(LinalgError::NotHermitian(resid));
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: DVector::zeros(0),
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }
    let h = hermitian_part(m);
    let eig = h
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(LinalgError::EigenFailed)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}

pub fn max_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.max())
}

pub fn is_psd(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}

/// Count of eigenvalues above `rel_tol · max(|λ|)`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> Result<usize> {
    let eig = hermitian_eig(m)?;
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    if scale == 0.0 {
        return Ok(0);
    }
    Ok(eig.eigenvalues.iter().filter(|&&l| l > rel_tol * scale).count())
}

/// Trace norm `Σ |λ_k|` of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// `M^{-1/2}` for a positive-definite Hermitian `M`.
pub fn inv_sqrt_psd(m: &CMatrix, psd_tol: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    if eig.dim() > 0 && eig.min() <= psd_tol {
        return Err(LinalgError::NotPositiveDefinite(eig.min()));
    }
    Ok(eig.map(|l| 1.0 / l.sqrt()))
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn inv_hpd(m: &CMatrix) -> Result<CMatrix> {
    let chol = m.clone().cholesky().ok_or(LinalgError::Singular)?;
    Ok(chol.inverse())
}

/// Orthonormal real coordinates for the space of `n × n` Hermitian matrices.
///
/// Coordinate `k` is `tr(X B_k)` for the basis `B_k`: the diagonal units
/// `E_jj`, then `(E_jk + E_kj)/√2` and `i(E_jk − E_kj)/√2` for `j < k`. The
/// trace inner product of two Hermitian matrices is the Euclidean inner
/// product of their coordinates.
#[derive(Debug, Clone)]
pub struct HermitianCoords {
    n: usize,
    // (row, col, coefficient) triples per basis element
    elements: Vec<Vec<(usize, usize, C64)>>,
}

impl HermitianCoords {
    pub fn new(n: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut elements = Vec::with_capacity(n * n);
        for j in 0..n {
            elements.push(vec![(j, j, C64::new(1.0, 0.0))]);
        }
        for j in 0..n {
            for k in (j + 1)..n {
                elements.push(vec![(j, k, C64::new(s, 0.0)), (k, j, C64::new(s, 0.0))]);
                elements.push(vec![(j, k, C64::new(0.0, s)), (k, j, C64::new(0.0, -s))]);
            }
        }
        Self { n, elements }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of real coordinates, `n²`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn basis(&self, k: usize) -> CMatrix {
        let mut b = CMatrix::zeros(self.n, self.n);
        for &(r, c, v) in &self.elements[k] {
            b[(r, c)] = v;
        }
        b
    }

    /// `Re tr(A B_k)` for an arbitrary square `A`.
    pub fn pair(&self, a: &CMatrix, k: usize) -> f64 {
        self.elements[k]
            .iter()
            .map(|&(r, c, v)| (a[(c, r)] * v).re)
            .sum()
    }

    pub fn to_coords(&self, x: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|k| self.pair(x, k)))
    }

    pub fn from_coords(&self, coords: &DVector<f64>) -> CMatrix {
        let mut x = CMatrix::zeros(self.n, self.n);
        for (k, elem) in self.elements.iter().enumerate() {
            for &(r, c, v) in elem {
                x[(r, c)] += v * coords[k];
            }
        }
        x
    }

    /// `W B_k W` for Hermitian `W`, in `O(n²)` using the sparsity of `B_k`.
    pub fn sandwich(&self, w: &CMatrix, k: usize) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n, n);
        for &(r, c, v) in &self.elements[k] {
            for b in 0..n {
                let right = v * w[(c, b)];
                for a in 0..n {
                    out[(a, b)] += w[(a, r)] * right;
                }
            }
        }
        out
    }
}
