//! Independent optimality checks for a measurement and a dual point.
//!
//! Nothing here touches the solver: every quantity is recomputed from the
//! ensemble, the measurement and `X̂` alone.

use serde::Serialize;
use thiserror::Error;

use crate::ensemble::Ensemble;
use crate::linalg::{self, CMatrix, LinalgError};
use crate::recovery::Measurement;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("the two-state bound needs exactly 2 states, got {0}")]
    NotBinary(usize),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A residual and whether it is within tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub residual: f64,
    pub pass: bool,
}

impl Check {
    fn new(residual: f64, tol: f64) -> Self {
        Self {
            residual,
            pass: residual <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conditions {
    /// `max(0, −λ_min(Πᵢ))` over `i`.
    pub psd: Check,
    /// `‖Σ Πᵢ − I‖_max`.
    pub resolution: Check,
    /// `max(0, −λ_min(X̂ − ρ′ᵢ))` over `i`.
    pub dual_feasibility: Check,
    /// `maxᵢ ‖(X̂ − ρ′ᵢ) Πᵢ‖_max`.
    pub slackness: Check,
    /// `‖Z − Z*‖_max` for `Z = Σ ρ′ᵢ Πᵢ`.
    pub lagrangian_hermiticity: Check,
    /// `max(0, −λ_min(Z − ρ′ⱼ))` over `j`.
    pub lagrangian_dominance: Check,
    /// Largest excess of `rank(Πᵢ)` over `rank(ρᵢ)`. Reported only: optimal
    /// measurements need not meet it, e.g. when `Π₁` carries the complement of
    /// the ensemble support.
    pub rank_bound: Check,
    /// `|tr X̂ − J(Π)|`.
    pub gap: Check,
}

impl Conditions {
    /// The conditions that decide the verdict.
    pub fn all(&self) -> [(&'static str, Check); 7] {
        [
            ("psd", self.psd),
            ("resolution", self.resolution),
            ("dual_feasibility", self.dual_feasibility),
            ("slackness", self.slackness),
            ("lagrangian_hermiticity", self.lagrangian_hermiticity),
            ("lagrangian_dominance", self.lagrangian_dominance),
            ("gap", self.gap),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub p_correct: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub tol: f64,
    pub conditions: Conditions,
    pub optimal: bool,
}

/// Relative eigenvalue threshold used for the rank comparison.
pub const RANK_CHECK_TOL: f64 = 1e-6;

fn check_shapes(e: &Ensemble, pi: &Measurement) -> Result<(), CertifyError> {
    if pi.len() != e.len() {
        return Err(CertifyError::Dimension(format!(
            "{} operators for {} states",
            pi.len(),
            e.len()
        )));
    }
    let n = e.dim();
    for (i, p) in pi.operators().iter().enumerate() {
        if p.nrows() != n || p.ncols() != n {
            return Err(CertifyError::Dimension(format!(
                "operator {i} is {}x{}, expected {n}x{n}",
                p.nrows(),
                p.ncols()
            )));
        }
    }
    Ok(())
}

/// `J(Π) = Σᵢ pᵢ tr(ρᵢ Πᵢ)`.
pub fn prob_correct(e: &Ensemble, pi: &Measurement) -> Result<f64, CertifyError> {
    check_shapes(e, pi)?;
    Ok(pi
        .operators()
        .iter()
        .enumerate()
        .map(|(i, p)| linalg::trace_product(e.weighted(i), p))
        .sum())
}

fn psd_deficit(m: &CMatrix) -> Result<f64, LinalgError> {
    let lo = linalg::min_eigenvalue(&linalg::hermitian_part(m))?;
    Ok((-lo).max(0.0))
}

/// Evaluates the optimality conditions for `(Π, X̂)` at tolerance `tol`.
pub fn check_optimality(
    e: &Ensemble,
    pi: &Measurement,
    x_hat: &CMatrix,
    tol: f64,
) -> Result<OptimalityReport, CertifyError> {
    check_shapes(e, pi)?;
    let n = e.dim();
    if x_hat.nrows() != n || x_hat.ncols() != n {
        return Err(CertifyError::Dimension(format!(
            "X̂ is {}x{}, expected {n}x{n}",
            x_hat.nrows(),
            x_hat.ncols()
        )));
    }
    let ops = pi.operators();

    let mut psd: f64 = 0.0;
    for p in ops {
        psd = psd.max(psd_deficit(p)?);
    }
    let resolution = linalg::max_abs(&(pi.sum() - linalg::identity(n)));

    let x_herm = linalg::hermitian_part(x_hat);
    let mut dual: f64 = 0.0;
    let mut slack: f64 = 0.0;
    for (i, p) in ops.iter().enumerate() {
        let s = &x_herm - e.weighted(i);
        dual = dual.max(psd_deficit(&s)?);
        slack = slack.max(linalg::max_abs(&(&s * p)));
    }

    let mut z = CMatrix::zeros(n, n);
    for (i, p) in ops.iter().enumerate() {
        z += e.weighted(i) * p;
    }
    let hermiticity = linalg::hermitian_residual(&z);
    let z_herm = linalg::hermitian_part(&z);
    let mut dominance: f64 = 0.0;
    for w in e.weighted_all() {
        dominance = dominance.max(psd_deficit(&(&z_herm - w))?);
    }

    let mut rank_excess = 0usize;
    for (i, p) in ops.iter().enumerate() {
        let rp = linalg::numerical_rank(&linalg::hermitian_part(p), RANK_CHECK_TOL)?;
        let rr = linalg::numerical_rank(e.rho(i), RANK_CHECK_TOL)?;
        rank_excess = rank_excess.max(rp.saturating_sub(rr));
    }

    let p_correct = prob_correct(e, pi)?;
    let dual_objective = linalg::real_trace(x_hat);
    let gap = dual_objective - p_correct;

    let conditions = Conditions {
        psd: Check::new(psd, tol),
        resolution: Check::new(resolution, tol),
        dual_feasibility: Check::new(dual, tol),
        slackness: Check::new(slack, tol),
        lagrangian_hermiticity: Check::new(hermiticity, tol),
        lagrangian_dominance: Check::new(dominance, tol),
        rank_bound: Check::new(rank_excess as f64, 0.0),
        gap: Check::new(gap.abs(), tol),
    };
    let optimal = conditions.all().iter().all(|(_, c)| c.pass);
    Ok(OptimalityReport {
        p_correct,
        dual_objective,
        gap,
        tol,
        conditions,
        optimal,
    })
}

/// Two-state optimum `½(1 + ‖p₁ρ₁ − p₂ρ₂‖₁)`.
pub fn helstrom_binary_pd(e: &Ensemble) -> Result<f64, CertifyError> {
    if e.len() != 2 {
        return Err(CertifyError::NotBinary(e.len()));
    }
    let diff = e.weighted(0) - e.weighted(1);
    Ok(0.5 * (1.0 + linalg::trace_norm(&diff)?))
}
