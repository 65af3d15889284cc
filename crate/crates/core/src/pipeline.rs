//! End-to-end solve: reduce to the span, solve the dual, recover the
//! measurement, lift it back and certify it.

use serde::Serialize;
use thiserror::Error;

use crate::certify::{self, CertifyError, OptimalityReport};
use crate::dual_solver::{self, SolverError, SolverOptions, SolverTrace};
use crate::ensemble::{self, Ensemble, Tolerances};
use crate::linalg::{CMatrix, CVector};
use crate::recovery::{
    self, CoefficientMethod, CoefficientOptions, Coefficients, Measurement, RecoveryError,
};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PipelineOptions {
    pub tolerances: Tolerances,
    pub solver: SolverOptions,
    /// Tolerance of the final optimality check.
    pub check_tol: f64,
    /// Allowed `‖Σ Πᵢ − I‖_max` when building the measurement.
    pub resolution_tol: f64,
    /// How many times recovery is retried with `rank_tol` raised tenfold.
    pub rank_retries: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            solver: SolverOptions::default(),
            check_tol: 1e-6,
            resolution_tol: 1e-6,
            rank_retries: 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dual solver failed: {0}")]
    Solver(#[from] SolverError),

    #[error("measurement recovery failed: {0}")]
    Recovery(#[from] RecoveryError),

    #[error("certification failed: {0}")]
    Certify(#[from] CertifyError),
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Dual optimum on the full space.
    pub x_hat: CMatrix,
    /// Optimal measurement on the full space.
    pub measurement: Measurement,
    pub report: OptimalityReport,
    /// Weights `aᵢⱼ` on the reduced space.
    pub coefficients: Coefficients,
    pub null_space_dims: Vec<usize>,
    pub trace: SolverTrace,
    pub reduced_dim: usize,
    /// `rank_tol` that recovery finally succeeded with.
    pub rank_tol: f64,
    pub suboptimality_bound: f64,
    /// Rank-one factors `μᵢ` lifted to the full space, when every recovered
    /// operator has rank at most one. Outcome 1 additionally carries the
    /// complement of the span, which these factors omit.
    pub span_vectors: Option<Vec<CVector>>,
}

impl Solution {
    pub fn p_correct(&self) -> f64 {
        self.report.p_correct
    }

    pub fn method(&self) -> CoefficientMethod {
        self.coefficients.method
    }
}

struct Recovered {
    measurement: Measurement,
    coefficients: Coefficients,
    dims: Vec<usize>,
}

fn recover(
    x_hat: &CMatrix,
    e: &Ensemble,
    rank_tol: f64,
    opts: &PipelineOptions,
) -> Result<Recovered, RecoveryError> {
    let bundle = recovery::null_space_basis(x_hat, e, rank_tol)?;
    let sys = recovery::assemble_system(&bundle);
    let coeff_opts = CoefficientOptions {
        rank_tol,
        clamp_tol: opts.tolerances.psd,
    };
    let coefficients = recovery::solve_coefficients(&sys, &coeff_opts)?;
    let measurement = recovery::build_measurement(&bundle, &coefficients, opts.resolution_tol)?;
    Ok(Recovered {
        measurement,
        coefficients,
        dims: bundle.dims(),
    })
}

/// Computes and certifies the minimum-error measurement for `e`.
pub fn solve(e: &Ensemble, opts: &PipelineOptions) -> Result<Solution, PipelineError> {
    let (reduced, embedding) = ensemble::reduce_to_span(e, opts.tolerances.rank);
    let (cert, trace) = dual_solver::solve_dual(&reduced, &opts.solver)?;

    let mut rank_tol = opts.tolerances.rank;
    let mut attempt = 0;
    let recovered = loop {
        match recover(&cert.x, &reduced, rank_tol, opts) {
            Ok(r) => break r,
            Err(err) if attempt < opts.rank_retries => {
                log::info!("recovery failed at rank_tol {rank_tol:.1e} ({err}); retrying");
                attempt += 1;
                rank_tol *= 10.0;
            }
            Err(err) => return Err(err.into()),
        }
    };

    let x_hat = embedding.embed_operator(&cert.x);
    let span_vectors = recovered
        .measurement
        .vectors()
        .map(|vs| vs.iter().map(|v| embedding.embed_vector(v)).collect());
    let measurement = embedding.embed_measurement(&recovered.measurement);
    let report = certify::check_optimality(e, &measurement, &x_hat, opts.check_tol)?;
    Ok(Solution {
        x_hat,
        measurement,
        report,
        coefficients: recovered.coefficients,
        null_space_dims: recovered.dims,
        trace,
        reduced_dim: reduced.dim(),
        rank_tol,
        suboptimality_bound: cert.suboptimality_bound,
        span_vectors,
    })
}
