//! Seeded random ensembles for testing and benchmarking.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, State};
use crate::linalg::{self, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Pure,
    Mixed,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly distributed unit vector on the complex sphere.
pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| complex_normal(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v.unscale(norm);
        }
    }
}

/// Unit-trace `G G*` with `G` an `n × rank` complex Gaussian matrix.
pub fn density_matrix<R: Rng>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, rank.max(1), |_, _| complex_normal(rng));
    let rho = &g * g.adjoint();
    let tr = linalg::real_trace(&rho);
    linalg::hermitian_part(&rho.unscale(tr))
}

/// Uniform draw from the probability simplex.
pub fn priors<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn pure_ensemble<R: Rng>(rng: &mut R, n: usize, m: usize) -> Ensemble {
    let p = priors(rng, m);
    let states = p
        .into_iter()
        .map(|prior| {
            let v = unit_vector(rng, n);
            State {
                prior,
                rho: linalg::outer(&v),
                vector: Some(v),
            }
        })
        .collect();
    Ensemble::from_states_unchecked(n, states)
}

/// Mixed ensemble with ranks drawn uniformly from `1..=n`.
pub fn mixed_ensemble<R: Rng>(rng: &mut R, n: usize, m: usize) -> Ensemble {
    let p = priors(rng, m);
    let states = p
        .into_iter()
        .map(|prior| {
            let rank = rng.random_range(1..=n);
            State {
                prior,
                rho: density_matrix(rng, n, rank),
                vector: None,
            }
        })
        .collect();
    Ensemble::from_states_unchecked(n, states)
}

pub fn generate(kind: EnsembleKind, n: usize, m: usize, seed: u64) -> Ensemble {
    let mut rng = rng(seed);
    match kind {
        EnsembleKind::Pure => pure_ensemble(&mut rng, n, m),
        EnsembleKind::Mixed => mixed_ensemble(&mut rng, n, m),
    }
}
