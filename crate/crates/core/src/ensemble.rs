//! Quantum state ensembles: priors, density operators and their weighted
//! forms `ρ′ᵢ = pᵢ ρᵢ`.

use std::fmt;
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::format::{self, EnsembleFile, StateEntry};
use crate::linalg::{self, CMatrix, CVector};
use crate::recovery::Measurement;

/// Validation thresholds shared by the ensemble checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub herm: f64,
    pub psd: f64,
    pub trace: f64,
    pub prior: f64,
    /// Relative eigenvalue threshold used for numerical rank and span.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-8,
            psd: 1e-8,
            trace: 1e-8,
            prior: 1e-8,
            rank: 1e-6,
        }
    }
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    Dimension { index: usize, rows: usize, cols: usize },
    NonFinite { index: usize },
    NotHermitian { index: usize, residual: f64 },
    NotPsd { index: usize, min_eigenvalue: f64 },
    Trace { index: usize, trace: f64 },
    VectorNorm { index: usize, norm: f64 },
    NonPositivePrior { index: usize, prior: f64 },
    PriorSum { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "ensemble has no states"),
            Violation::Dimension { index, rows, cols } => {
                write!(f, "state {index}: operator is {rows}x{cols}")
            }
            Violation::NonFinite { index } => write!(f, "state {index}: non-finite entries"),
            Violation::NotHermitian { index, residual } => {
                write!(f, "state {index}: not Hermitian (residual {residual:.3e})")
            }
            Violation::NotPsd {
                index,
                min_eigenvalue,
            } => write!(
                f,
                "state {index}: not PSD (smallest eigenvalue {min_eigenvalue:.3e})"
            ),
            Violation::Trace { index, trace } => {
                write!(f, "state {index}: trace is {trace}, expected 1")
            }
            Violation::VectorNorm { index, norm } => {
                write!(f, "state {index}: vector norm is {norm}, expected 1")
            }
            Violation::NonPositivePrior { index, prior } => {
                write!(f, "state {index}: prior {prior} is not strictly positive")
            }
            Violation::PriorSum { sum } => write!(f, "priors sum to {sum}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid ensemble: {0}")]
    Invalid(ValidationReport),
}

/// One member of an ensemble.
#[derive(Debug, Clone)]
pub struct State {
    pub prior: f64,
    pub rho: CMatrix,
    /// State vector when the state was supplied as a pure state.
    pub vector: Option<CVector>,
}

/// Immutable, validated ensemble `{(pᵢ, ρᵢ)}` on an `n`-dimensional space.
#[derive(Debug, Clone)]
pub struct Ensemble {
    dim: usize,
    states: Vec<State>,
    weighted: Vec<CMatrix>,
}

impl Ensemble {
    /// Builds an ensemble from density matrices and validates it.
    pub fn from_mixed(
        states: Vec<(f64, CMatrix)>,
        tol: &Tolerances,
    ) -> Result<Self, EnsembleError> {
        let dim = states.first().map_or(0, |(_, m)| m.nrows());
        let states = states
            .into_iter()
            .map(|(prior, rho)| State {
                prior,
                rho,
                vector: None,
            })
            .collect();
        Self::checked(dim, states, tol)
    }

    /// Builds a pure-state ensemble from state vectors and validates it.
    pub fn from_pure(
        states: Vec<(f64, CVector)>,
        tol: &Tolerances,
    ) -> Result<Self, EnsembleError> {
        let dim = states.first().map_or(0, |(_, v)| v.len());
        let states = states
            .into_iter()
            .map(|(prior, v)| State {
                prior,
                rho: linalg::outer(&v),
                vector: Some(v),
            })
            .collect();
        Self::checked(dim, states, tol)
    }

    fn checked(dim: usize, states: Vec<State>, tol: &Tolerances) -> Result<Self, EnsembleError> {
        let report = validate_states(dim, &states, tol);
        if !report.is_valid() {
            return Err(EnsembleError::Invalid(report));
        }
        Ok(Self::from_states_unchecked(dim, states))
    }

    /// Assembles an ensemble without validation. Operators are replaced by
    /// their Hermitian parts.
    pub fn from_states_unchecked(dim: usize, mut states: Vec<State>) -> Self {
        for s in &mut states {
            if s.rho.is_square() {
                s.rho = linalg::hermitian_part(&s.rho);
            }
        }
        let weighted = states.iter().map(|s| s.rho.scale(s.prior)).collect();
        Self {
            dim,
            states,
            weighted,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of states `m`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn priors(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.prior).collect()
    }

    pub fn rho(&self, i: usize) -> &CMatrix {
        &self.states[i].rho
    }

    /// `ρ′ᵢ = pᵢ ρᵢ`.
    pub fn weighted(&self, i: usize) -> &CMatrix {
        &self.weighted[i]
    }

    pub fn weighted_all(&self) -> &[CMatrix] {
        &self.weighted
    }

    pub fn to_file(&self) -> EnsembleFile {
        EnsembleFile {
            dim: self.dim,
            states: self
                .states
                .iter()
                .map(|s| StateEntry {
                    prior: s.prior,
                    vector: s.vector.as_ref().map(format::vector_to_wire),
                    matrix: match s.vector {
                        Some(_) => None,
                        None => Some(format::matrix_to_wire(&s.rho)),
                    },
                })
                .collect(),
        }
    }
}

/// Reads and validates an ensemble document.
pub fn load_ensemble(source: impl Read, tol: &Tolerances) -> Result<Ensemble, EnsembleError> {
    let file: EnsembleFile =
        serde_json::from_reader(source).map_err(|e| EnsembleError::Parse(e.to_string()))?;
    ensemble_from_file(&file, tol)
}

pub fn ensemble_from_file(file: &EnsembleFile, tol: &Tolerances) -> Result<Ensemble, EnsembleError> {
    let mut states = Vec::with_capacity(file.states.len());
    for (index, entry) in file.states.iter().enumerate() {
        let state = match (&entry.vector, &entry.matrix) {
            (Some(v), None) => {
                let v = format::vector_from_wire(v);
                State {
                    prior: entry.prior,
                    rho: linalg::outer(&v),
                    vector: Some(v),
                }
            }
            (None, Some(m)) => {
                let rho = format::matrix_from_wire(m).ok_or_else(|| {
                    EnsembleError::Parse(format!("state {index}: ragged matrix rows"))
                })?;
                State {
                    prior: entry.prior,
                    rho,
                    vector: None,
                }
            }
            _ => {
                return Err(EnsembleError::Parse(format!(
                    "state {index}: exactly one of \"vector\" or \"matrix\" is required"
                )))
            }
        };
        states.push(state);
    }
    let report = validate_states(file.dim, &states, tol);
    if !report.is_valid() {
        return Err(EnsembleError::Invalid(report));
    }
    Ok(Ensemble::from_states_unchecked(file.dim, states))
}

/// Lists every invariant violated by `e`.
pub fn validate(e: &Ensemble, tol: &Tolerances) -> ValidationReport {
    validate_states(e.dim, &e.states, tol)
}

fn validate_states(dim: usize, states: &[State], tol: &Tolerances) -> ValidationReport {
    let mut violations = Vec::new();
    if states.is_empty() {
        violations.push(Violation::Empty);
    }
    let mut prior_sum = 0.0;
    for (index, s) in states.iter().enumerate() {
        prior_sum += s.prior;
        if !s.prior.is_finite() || s.prior <= 0.0 {
            violations.push(Violation::NonPositivePrior {
                index,
                prior: s.prior,
            });
        }
        let (rows, cols) = s.rho.shape();
        if rows != dim || cols != dim {
            violations.push(Violation::Dimension { index, rows, cols });
            continue;
        }
        if !linalg::is_finite(&s.rho) {
            violations.push(Violation::NonFinite { index });
            continue;
        }
        if let Some(v) = &s.vector {
            let norm = v.norm();
            if (norm - 1.0).abs() > tol.trace {
                violations.push(Violation::VectorNorm { index, norm });
            }
            continue;
        }
        let residual = linalg::hermitian_residual(&s.rho);
        if residual > tol.herm {
            violations.push(Violation::NotHermitian { index, residual });
        }
        let herm = linalg::hermitian_part(&s.rho);
        match linalg::min_eigenvalue(&herm) {
            Ok(min_eigenvalue) if min_eigenvalue < -tol.psd => {
                violations.push(Violation::NotPsd {
                    index,
                    min_eigenvalue,
                });
            }
            Ok(_) => {}
            Err(_) => violations.push(Violation::NonFinite { index }),
        }
        let trace = linalg::real_trace(&s.rho);
        if (trace - 1.0).abs() > tol.trace {
            violations.push(Violation::Trace { index, trace });
        }
    }
    if !states.is_empty() && (prior_sum - 1.0).abs() > tol.prior {
        violations.push(Violation::PriorSum { sum: prior_sum });
    }
    ValidationReport { violations }
}

/// Isometry `V` (`n × k`) from the span of the ensemble into the full space.
#[derive(Debug, Clone)]
pub struct Embedding {
    isometry: CMatrix,
}

impl Embedding {
    pub fn identity(n: usize) -> Self {
        Self {
            isometry: linalg::identity(n),
        }
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    pub fn full_dim(&self) -> usize {
        self.isometry.nrows()
    }

    pub fn reduced_dim(&self) -> usize {
        self.isometry.ncols()
    }

    pub fn is_identity(&self) -> bool {
        self.full_dim() == self.reduced_dim()
    }

    /// `V A V*`.
    pub fn embed_operator(&self, a: &CMatrix) -> CMatrix {
        &self.isometry * a * self.isometry.adjoint()
    }

    pub fn embed_vector(&self, v: &CVector) -> CVector {
        &self.isometry * v
    }

    /// `V* A V`.
    pub fn restrict_operator(&self, a: &CMatrix) -> CMatrix {
        self.isometry.adjoint() * a * &self.isometry
    }

    /// Projector `I − V V*` onto the orthogonal complement of the span.
    pub fn complement(&self) -> CMatrix {
        linalg::identity(self.full_dim()) - &self.isometry * self.isometry.adjoint()
    }

    /// Lifts a measurement on the span to the full space. The complement
    /// projector is added to the first outcome; states have no support
    /// there, so detection probabilities are unchanged.
    pub fn embed_measurement(&self, m: &Measurement) -> Measurement {
        let mut ops: Vec<CMatrix> = m.operators().iter().map(|p| self.embed_operator(p)).collect();
        if !self.is_identity() {
            if let Some(first) = ops.first_mut() {
                *first += self.complement();
            }
        }
        let vectors = if self.is_identity() {
            m.vectors().map(<[CVector]>::to_vec)
        } else {
            None
        };
        Measurement::with_vectors(ops, vectors)
    }
}

/// Restricts the ensemble to the span of the supports of all `ρᵢ`.
///
/// The span is the range of `Σ ρᵢ` at relative threshold `rank_tol`. When it
/// is the whole space the input is returned with the identity embedding.
pub fn reduce_to_span(e: &Ensemble, rank_tol: f64) -> (Ensemble, Embedding) {
    let n = e.dim();
    let mut total = CMatrix::zeros(n, n);
    for s in e.states() {
        total += &s.rho;
    }
    let eig = match linalg::hermitian_eig(&total) {
        Ok(eig) => eig,
        Err(_) => return (e.clone(), Embedding::identity(n)),
    };
    let scale = eig.max().max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > rank_tol * scale)
        .collect();
    if keep.len() == n || keep.is_empty() {
        return (e.clone(), Embedding::identity(n));
    }
    let mut isometry = CMatrix::zeros(n, keep.len());
    // largest eigenvalues first
    for (col, &k) in keep.iter().rev().enumerate() {
        isometry.set_column(col, &eig.eigenvectors.column(k));
    }
    let embedding = Embedding { isometry };
    let states = e
        .states()
        .iter()
        .map(|s| State {
            prior: s.prior,
            rho: embedding.restrict_operator(&s.rho),
            vector: s
                .vector
                .as_ref()
                .map(|v| embedding.isometry().adjoint() * v),
        })
        .collect();
    let reduced = Ensemble::from_states_unchecked(keep.len(), states);
    (reduced, embedding)
}
