//! Least-squares (square-root) measurement for pure-state ensembles:
//! `χᵢ = (ΨΨ*)^{-1/2} ψᵢ` with `ψᵢ = √pᵢ φᵢ`.

use thiserror::Error;

use crate::ensemble::Ensemble;
use crate::linalg::{self, CMatrix, CVector, LinalgError};
use crate::recovery::Measurement;

#[derive(Debug, Error)]
pub enum LsmError {
    #[error("state {index} is not pure (numerical rank {rank})")]
    NotPure { index: usize, rank: usize },

    #[error("ΨΨ* is singular; the states do not span the space")]
    Singular,

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Weighted state vectors of a pure-state ensemble.
#[derive(Debug, Clone)]
pub struct PureEnsembleView {
    pub priors: Vec<f64>,
    /// Unit state vectors `φᵢ`.
    pub states: Vec<CVector>,
    /// `ψᵢ = √pᵢ φᵢ`.
    pub weighted: Vec<CVector>,
}

impl PureEnsembleView {
    /// Extracts `φᵢ`, either the supplied vector or the top eigenvector of a
    /// rank-one `ρᵢ`.
    pub fn from_ensemble(e: &Ensemble, rank_tol: f64) -> Result<Self, LsmError> {
        let mut states = Vec::with_capacity(e.len());
        for (index, s) in e.states().iter().enumerate() {
            let phi = match &s.vector {
                Some(v) => v.clone(),
                None => {
                    let rank = linalg::numerical_rank(&s.rho, rank_tol)?;
                    if rank != 1 {
                        return Err(LsmError::NotPure { index, rank });
                    }
                    let eig = linalg::hermitian_eig(&s.rho)?;
                    eig.vector(eig.dim() - 1)
                }
            };
            states.push(phi);
        }
        let priors = e.priors();
        let weighted = states
            .iter()
            .zip(&priors)
            .map(|(phi, p)| phi.scale(p.sqrt()))
            .collect();
        Ok(Self {
            priors,
            states,
            weighted,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, CVector::len)
    }

    /// `Ψ`, the matrix with columns `ψᵢ`.
    pub fn psi(&self) -> CMatrix {
        CMatrix::from_columns(&self.weighted)
    }
}

/// `ΨΨ* = Σ ψᵢψᵢ*`.
pub fn gram_operator(view: &PureEnsembleView) -> CMatrix {
    let psi = view.psi();
    &psi * psi.adjoint()
}

pub fn lsm_vectors(view: &PureEnsembleView, psd_tol: f64) -> Result<Vec<CVector>, LsmError> {
    let root = linalg::inv_sqrt_psd(&gram_operator(view), psd_tol).map_err(|e| match e {
        LinalgError::NotPositiveDefinite(_) => LsmError::Singular,
        other => LsmError::Linalg(other),
    })?;
    Ok(view.weighted.iter().map(|psi| &root * psi).collect())
}

pub fn lsm_measurement(view: &PureEnsembleView, psd_tol: f64) -> Result<Measurement, LsmError> {
    Ok(Measurement::from_vectors(lsm_vectors(view, psd_tol)?))
}

/// `Σ pᵢ |⟨χᵢ|φᵢ⟩|²`.
pub fn lsm_prob_correct(view: &PureEnsembleView, psd_tol: f64) -> Result<f64, LsmError> {
    let chi = lsm_vectors(view, psd_tol)?;
    Ok(chi
        .iter()
        .zip(&view.states)
        .zip(&view.priors)
        .map(|((x, phi), p)| p * x.dotc(phi).norm_sqr())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Tolerances;
    use crate::linalg::C64;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn vec2(a: f64, b: f64) -> CVector {
        CVector::from_vec(vec![c(a), c(b)])
    }

    #[test]
    fn worked_example_probability() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = Ensemble::from_pure(
            vec![
                (0.1, vec2(1.0, 0.0)),
                (0.6, vec2(s, s)),
                (0.3, vec2(0.0, 1.0)),
            ],
            &Tolerances::default(),
        )
        .unwrap();
        let view = PureEnsembleView::from_ensemble(&e, 1e-6).unwrap();
        let pd = lsm_prob_correct(&view, 1e-8).unwrap();
        assert!((pd - 0.71).abs() < 5e-3, "{pd}");
        // √ΨΨ* squared against its inverse root
        let gram = gram_operator(&view);
        let r = linalg::inv_sqrt_psd(&gram, 1e-8).unwrap();
        assert!(linalg::max_abs(&(&r * &r * &gram - linalg::identity(2))) < 1e-10);
    }

    #[test]
    fn orthonormal_states_are_their_own_lsm() {
        let e = Ensemble::from_pure(
            vec![(0.2, vec2(0.0, 1.0)), (0.8, vec2(1.0, 0.0))],
            &Tolerances::default(),
        )
        .unwrap();
        let view = PureEnsembleView::from_ensemble(&e, 1e-6).unwrap();
        let chi = lsm_vectors(&view, 1e-8).unwrap();
        for (x, phi) in chi.iter().zip(&view.states) {
            assert!((x - phi).norm() < 1e-12);
        }
        assert!((lsm_prob_correct(&view, 1e-8).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_state_is_rejected() {
        let e = Ensemble::from_mixed(vec![(1.0, linalg::identity(2).scale(0.5))], &Tolerances::default())
            .unwrap();
        assert!(matches!(
            PureEnsembleView::from_ensemble(&e, 1e-6),
            Err(LsmError::NotPure { index: 0, rank: 2 })
        ));
    }

    #[test]
    fn non_spanning_is_singular() {
        let e = Ensemble::from_pure(
            vec![(0.5, vec2(1.0, 0.0)), (0.5, vec2(1.0, 0.0))],
            &Tolerances::default(),
        )
        .unwrap();
        let view = PureEnsembleView::from_ensemble(&e, 1e-6).unwrap();
        assert!(matches!(lsm_vectors(&view, 1e-8), Err(LsmError::Singular)));
    }
}
