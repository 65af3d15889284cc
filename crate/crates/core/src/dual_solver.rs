//! Path-following log-det barrier method for
//!
//! ```text
//! minimize tr(X)  subject to  X − ρ′ᵢ ⪰ 0,  i = 1..m
//! ```
//!
//! The barrier subproblem `t·tr(X) − Σᵢ log det(X − ρ′ᵢ)` is minimized by
//! damped Newton iterations over the `n²` real coordinates of Hermitian `X`
//! (see [`HermitianCoords`]). Each constraint block contributes `n` to the
//! barrier parameter, so a centered point at `t` is within `m·n/t` of the
//! optimum.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::ensemble::Ensemble;
use crate::linalg::{self, CMatrix, HermitianCoords, LinalgError};

/// Smallest slack eigenvalue an accepted step may leave behind.
const BOUNDARY_FLOOR: f64 = 1e-14;

/// Fraction of the distance to the boundary a single step may cover.
const BOUNDARY_FRACTION: f64 = 0.99;

/// Below this decrement the full Newton step is taken without an Armijo test.
const QUADRATIC_REGION: f64 = 0.25;

/// Below this decrement, a stalled line search or a decrement that stops
/// shrinking means centering has reached working precision.
const STALL_DECREMENT: f64 = 1e-6;

const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Target bound on `tr(X̂) − T̂`.
    pub gap_tol: f64,
    /// Newton iteration limit for each centering step.
    pub max_newton_iters: usize,
    /// Factor `μ > 1` applied to `t` between centering steps.
    pub barrier_growth: f64,
    /// Backtracking step shrink factor in `(0, 1)`.
    pub shrink: f64,
    /// Armijo sufficient-decrease constant in `(0, 0.5)`.
    pub acceptance: f64,
    /// Starting barrier parameter.
    pub initial_t: f64,
    /// Centering stops once the Newton decrement drops below this.
    pub decrement_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            max_newton_iters: 200,
            barrier_growth: 10.0,
            shrink: 0.5,
            acceptance: 0.01,
            initial_t: 1.0,
            decrement_tol: 1e-8,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.gap_tol > 0.0
            && self.barrier_growth > 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.acceptance > 0.0
            && self.acceptance < 0.5
            && self.initial_t > 0.0
            && self.decrement_tol > 0.0
            && self.max_newton_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidOptions(*self))
        }
    }
}

/// Dual-feasible `X̂` and its objective `tr(X̂)`.
#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    #[serde(skip)]
    pub x: CMatrix,
    pub objective: f64,
    /// Analytic bound `m·n/t` on `tr(X̂) − T̂` at the final barrier parameter.
    pub suboptimality_bound: f64,
}

/// One centering step of the outer loop.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OuterRecord {
    pub t: f64,
    pub objective: f64,
    pub newton_iters: usize,
    pub decrement: f64,
    pub min_slack: f64,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct SolverTrace {
    pub outer: Vec<OuterRecord>,
    pub total_newton_iters: usize,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver options: {0:?}")]
    InvalidOptions(SolverOptions),

    #[error(
        "Newton iteration limit reached at t = {t:.3e} (objective {objective}, bound {bound:.3e})"
    )]
    MaxIterations {
        t: f64,
        objective: f64,
        bound: f64,
        last: CMatrix,
        trace: SolverTrace,
    },

    #[error("line search failed at t = {t:.3e} (decrement {decrement:.3e})")]
    LineSearch {
        t: f64,
        decrement: f64,
        last: CMatrix,
        trace: SolverTrace,
    },

    #[error("point is not strictly feasible (min slack {0:.3e})")]
    Infeasible(f64),

    #[error("barrier Hessian is singular")]
    SingularHessian,

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Barrier objective and its derivatives in Hermitian coordinates.
pub struct Barrier<'a> {
    ensemble: &'a Ensemble,
    coords: HermitianCoords,
}

impl<'a> Barrier<'a> {
    pub fn new(ensemble: &'a Ensemble) -> Self {
        Self {
            ensemble,
            coords: HermitianCoords::new(ensemble.dim()),
        }
    }

    pub fn coords(&self) -> &HermitianCoords {
        &self.coords
    }

    fn slacks(&self, x: &CMatrix) -> Vec<CMatrix> {
        self.ensemble.weighted_all().iter().map(|w| x - w).collect()
    }

    /// Smallest eigenvalue of `X − ρ′ᵢ` over all `i`.
    pub fn min_slack(&self, x: &CMatrix) -> Result<f64, LinalgError> {
        let mut worst = f64::INFINITY;
        for s in self.slacks(x) {
            worst = worst.min(linalg::min_eigenvalue(&s)?);
        }
        Ok(worst)
    }

    /// `t·tr(X) − Σ log det(X − ρ′ᵢ)`, or `None` outside the feasible interior.
    pub fn value(&self, x: &CMatrix, t: f64) -> Option<f64> {
        let mut f = t * linalg::real_trace(x);
        for s in self.slacks(x) {
            let eig = linalg::hermitian_eig(&s).ok()?;
            if eig.min() <= 0.0 {
                return None;
            }
            f -= eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>();
        }
        Some(f)
    }

    fn inverse_slacks(&self, x: &CMatrix) -> Result<Vec<CMatrix>, SolverError> {
        self.slacks(x)
            .iter()
            .map(|s| {
                linalg::inv_hpd(s).map_err(|_| {
                    SolverError::Infeasible(linalg::min_eigenvalue(s).unwrap_or(f64::NAN))
                })
            })
            .collect()
    }

    /// Gradient `t·I − Σ (X − ρ′ᵢ)⁻¹` in coordinates.
    pub fn gradient(&self, x: &CMatrix, t: f64) -> Result<DVector<f64>, SolverError> {
        let inv = self.inverse_slacks(x)?;
        Ok(self.gradient_from(&inv, t))
    }

    fn gradient_from(&self, inv: &[CMatrix], t: f64) -> DVector<f64> {
        let n = self.coords.n();
        let mut g = linalg::identity(n).scale(t);
        for w in inv {
            g -= w;
        }
        self.coords.to_coords(&g)
    }

    /// Hessian `H_kl = Σᵢ tr(Wᵢ B_k Wᵢ B_l)` with `Wᵢ = (X − ρ′ᵢ)⁻¹`.
    pub fn hessian(&self, x: &CMatrix) -> Result<DMatrix<f64>, SolverError> {
        let inv = self.inverse_slacks(x)?;
        Ok(self.hessian_from(&inv))
    }

    fn hessian_from(&self, inv: &[CMatrix]) -> DMatrix<f64> {
        let d = self.coords.len();
        let mut h = DMatrix::zeros(d, d);
        // fixed summation order over i keeps the assembly deterministic
        for w in inv {
            for k in 0..d {
                let col = self.coords.to_coords(&self.coords.sandwich(w, k));
                for l in 0..d {
                    h[(l, k)] += col[l];
                }
            }
        }
        (&h + h.transpose()).scale(0.5)
    }

    /// Hessian-vector product `Σᵢ Wᵢ V Wᵢ` in coordinates.
    pub fn hessian_vec(&self, x: &CMatrix, v: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        let inv = self.inverse_slacks(x)?;
        let dir = self.coords.from_coords(v);
        let n = self.coords.n();
        let mut acc = CMatrix::zeros(n, n);
        for w in &inv {
            acc += w * &dir * w;
        }
        Ok(self.coords.to_coords(&acc))
    }
}

/// Newton direction and decrement of the barrier subproblem.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub direction: CMatrix,
    pub decrement: f64,
}

/// Strictly feasible start `(1 + maxᵢ λ_max(ρ′ᵢ))·I`.
pub fn initial_point(e: &Ensemble) -> Result<CMatrix, LinalgError> {
    let mut top: f64 = 0.0;
    for w in e.weighted_all() {
        top = top.max(linalg::max_eigenvalue(w)?);
    }
    Ok(linalg::identity(e.dim()).scale(1.0 + top))
}

pub fn newton_step(x: &CMatrix, t: f64, e: &Ensemble) -> Result<NewtonStep, SolverError> {
    let barrier = Barrier::new(e);
    newton_step_with(&barrier, x, t)
}

fn newton_step_with(barrier: &Barrier<'_>, x: &CMatrix, t: f64) -> Result<NewtonStep, SolverError> {
    let inv = barrier.inverse_slacks(x)?;
    let g = barrier.gradient_from(&inv, t);
    let h = barrier.hessian_from(&inv);
    let delta = solve_newton_system(&h, &g)?;
    let decrement = (-g.dot(&delta)).max(0.0).sqrt();
    Ok(NewtonStep {
        direction: barrier.coords().from_coords(&delta),
        decrement,
    })
}

/// Solves `H Δ = −g` after symmetric diagonal equilibration of `H`.
fn solve_newton_system(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
    let d = h.nrows();
    let mut scale = DVector::zeros(d);
    for k in 0..d {
        let hk = h[(k, k)];
        if !hk.is_finite() || hk <= 0.0 {
            return Err(SolverError::SingularHessian);
        }
        scale[k] = 1.0 / hk.sqrt();
    }
    let mut hs = h.clone();
    for r in 0..d {
        for c in 0..d {
            hs[(r, c)] *= scale[r] * scale[c];
        }
    }
    let rhs = -g.component_mul(&scale);
    let y = match hs.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => hs.lu().solve(&rhs).ok_or(SolverError::SingularHessian)?,
    };
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::SingularHessian);
    }
    Ok(y.component_mul(&scale))
}

/// Largest `s` with `X + sΔ − ρ′ᵢ ⪰ 0` for all `i` (infinite if unbounded).
fn max_feasible_step(barrier: &Barrier<'_>, x: &CMatrix, dir: &CMatrix) -> Result<f64, SolverError> {
    let mut s_max = f64::INFINITY;
    for s in barrier.slacks(x) {
        let r = linalg::inv_sqrt_psd(&s, 0.0)
            .map_err(|_| SolverError::Infeasible(linalg::min_eigenvalue(&s).unwrap_or(f64::NAN)))?;
        let scaled = linalg::hermitian_part(&(&r * dir * &r));
        let lo = linalg::min_eigenvalue(&scaled)?;
        if lo < 0.0 {
            s_max = s_max.min(-1.0 / lo);
        }
    }
    Ok(s_max)
}

enum Centering {
    Done { iters: usize, decrement: f64 },
    Stalled { decrement: f64 },
    Exhausted,
}

fn center(
    barrier: &Barrier<'_>,
    x: &mut CMatrix,
    t: f64,
    opts: &SolverOptions,
) -> Result<Centering, SolverError> {
    let mut previous = f64::INFINITY;
    for iter in 0..opts.max_newton_iters {
        let step = newton_step_with(barrier, x, t)?;
        let decrement = step.decrement;
        log::trace!("t = {t:.3e} newton {iter}: decrement {decrement:.3e}");
        // past the quadratic phase, a decrement that stops shrinking is
        // round-off in the gradient
        let stagnant = decrement < STALL_DECREMENT && decrement > 0.5 * previous;
        if decrement <= opts.decrement_tol || stagnant {
            return Ok(Centering::Done {
                iters: iter,
                decrement,
            });
        }
        previous = decrement;
        let f0 = barrier.value(x, t).ok_or(SolverError::Infeasible(0.0))?;
        let slope = -decrement * decrement;
        let s_max = max_feasible_step(barrier, x, &step.direction)?;
        let mut s = (BOUNDARY_FRACTION * s_max).min(1.0);
        let mut accepted = false;
        while s >= MIN_STEP {
            let trial = &*x + step.direction.scale(s);
            if barrier.min_slack(&trial)? >= BOUNDARY_FLOOR {
                if let Some(f1) = barrier.value(&trial, t) {
                    let noise = 64.0 * f64::EPSILON * f0.abs().max(1.0);
                    let armijo = f1 <= f0 + opts.acceptance * s * slope + noise;
                    if armijo || decrement < QUADRATIC_REGION {
                        *x = linalg::hermitian_part(&trial);
                        accepted = true;
                        break;
                    }
                }
            }
            s *= opts.shrink;
        }
        if !accepted {
            return Ok(Centering::Stalled { decrement });
        }
    }
    Ok(Centering::Exhausted)
}

/// Minimizes `tr(X)` over `X ⪰ ρ′ᵢ` to within `opts.gap_tol` of the optimum.
pub fn solve_dual(
    e: &Ensemble,
    opts: &SolverOptions,
) -> Result<(DualCertificate, SolverTrace), SolverError> {
    opts.validate()?;
    if e.len() == 1 {
        // the only constraint is X ⪰ ρ′₁, attained with equality
        let x = e.weighted(0).clone();
        let cert = DualCertificate {
            objective: linalg::real_trace(&x),
            suboptimality_bound: 0.0,
            x,
        };
        return Ok((cert, SolverTrace::default()));
    }
    let barrier = Barrier::new(e);
    let mut x = initial_point(e)?;
    let params = (e.len() * e.dim()) as f64;
    let mut t = opts.initial_t;
    let mut trace = SolverTrace::default();

    loop {
        let outcome = center(&barrier, &mut x, t, opts)?;
        let objective = linalg::real_trace(&x);
        let (iters, decrement) = match outcome {
            Centering::Done { iters, decrement } => (iters, decrement),
            Centering::Stalled { decrement } if decrement < STALL_DECREMENT => {
                log::debug!("centering stalled at decrement {decrement:.3e}; accepting");
                (0, decrement)
            }
            Centering::Stalled { decrement } => {
                return Err(SolverError::LineSearch {
                    t,
                    decrement,
                    last: x,
                    trace,
                });
            }
            Centering::Exhausted => {
                trace.total_newton_iters += opts.max_newton_iters;
                return Err(SolverError::MaxIterations {
                    t,
                    objective,
                    bound: params / t,
                    last: x,
                    trace,
                });
            }
        };
        let min_slack = barrier.min_slack(&x)?;
        if min_slack <= 0.0 {
            return Err(SolverError::Infeasible(min_slack));
        }
        trace.total_newton_iters += iters;
        trace.outer.push(OuterRecord {
            t,
            objective,
            newton_iters: iters,
            decrement,
            min_slack,
        });
        log::info!(
            "t = {t:.3e}: tr(X) = {objective:.12}, newton iters {iters}, decrement {decrement:.2e}, min slack {min_slack:.2e}"
        );
        if params / t <= opts.gap_tol {
            let cert = DualCertificate {
                objective,
                suboptimality_bound: params / t,
                x,
            };
            return Ok((cert, trace));
        }
        t *= opts.barrier_growth;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{State, Tolerances};
    use crate::linalg::{CVector, C64};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn worked_example() -> Ensemble {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ensemble::from_pure(
            vec![
                (0.1, CVector::from_vec(vec![c(1.0), c(0.0)])),
                (0.6, CVector::from_vec(vec![c(s), c(s)])),
                (0.3, CVector::from_vec(vec![c(0.0), c(1.0)])),
            ],
            &Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn initial_point_of_worked_example() {
        // λ_max(ρ′₂) = 0.6 dominates 0.1 and 0.3
        let x0 = initial_point(&worked_example()).unwrap();
        assert!(linalg::max_abs(&(x0 - linalg::identity(2).scale(1.6))) < 1e-12);
    }

    #[test]
    fn initial_point_single_mixed_state() {
        let rho = linalg::identity(2).scale(0.5);
        let e = Ensemble::from_mixed(vec![(1.0, rho)], &Tolerances::default()).unwrap();
        let x0 = initial_point(&e).unwrap();
        assert!(linalg::max_abs(&(x0 - linalg::identity(2).scale(1.5))) < 1e-12);
    }

    #[test]
    fn worked_example_matches_reference_x() {
        let (cert, trace) = solve_dual(&worked_example(), &SolverOptions::default()).unwrap();
        let reference = [[0.352, 0.217], [0.217, 0.434]];
        for (r, row) in reference.iter().enumerate() {
            for (col, &v) in row.iter().enumerate() {
                assert!((cert.x[(r, col)] - c(v)).norm() < 2e-3);
            }
        }
        // 0.45 + 0.15·√5, from the two-state problem between ρ′₂ and ρ′₃
        let exact = 0.45 + 0.15 * 5f64.sqrt();
        assert!((cert.objective - exact).abs() < 1e-8);
        assert!(trace.outer.iter().all(|r| r.min_slack > 0.0));
    }

    #[test]
    fn scalar_stub_is_already_centered() {
        let e = Ensemble::from_states_unchecked(
            1,
            vec![State {
                prior: 1.0,
                rho: CMatrix::zeros(1, 1),
                vector: None,
            }],
        );
        let step = newton_step(&linalg::identity(1), 1.0, &e).unwrap();
        assert!(step.decrement <= 1e-8);
        assert!(linalg::max_abs(&step.direction) <= 1e-12);
    }

    #[test]
    fn single_state_is_exact() {
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.7), c(0.2), c(0.2), c(0.3)]);
        let e = Ensemble::from_mixed(vec![(1.0, rho.clone())], &Tolerances::default()).unwrap();
        let (cert, _) = solve_dual(&e, &SolverOptions::default()).unwrap();
        assert_eq!(cert.x, rho);
        assert_eq!(cert.suboptimality_bound, 0.0);
    }

    #[test]
    fn rejects_bad_options() {
        let opts = SolverOptions {
            barrier_growth: 1.0,
            ..SolverOptions::default()
        };
        assert!(matches!(
            solve_dual(&worked_example(), &opts),
            Err(SolverError::InvalidOptions(_))
        ));
    }

    #[test]
    fn iteration_limit_is_reported() {
        let opts = SolverOptions {
            max_newton_iters: 1,
            ..SolverOptions::default()
        };
        match solve_dual(&worked_example(), &opts) {
            Err(SolverError::MaxIterations { bound, last, .. }) => {
                assert!(bound > 0.0);
                assert_eq!(last.nrows(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
