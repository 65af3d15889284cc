#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qdetect::ensemble::{Ensemble, Tolerances};
use qdetect::generate;
use qdetect::linalg::{self, CMatrix, CVector, C64};
use rand::Rng;

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn vec2(a: f64, b: f64) -> CVector {
    CVector::from_vec(vec![c(a), c(b)])
}

/// The three-state example on ℂ²: |0⟩, |+⟩, |1⟩ with priors 0.1, 0.6, 0.3.
pub fn worked_example() -> Ensemble {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ensemble::from_pure(
        vec![
            (0.1, vec2(1.0, 0.0)),
            (0.6, vec2(s, s)),
            (0.3, vec2(0.0, 1.0)),
        ],
        &Tolerances::default(),
    )
    .unwrap()
}

pub fn worked_example_json() -> String {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    format!(
        r#"{{"dim": 2, "states": [
  {{"prior": 0.1, "vector": [[1, 0], [0, 0]]}},
  {{"prior": 0.6, "vector": [[{s}, 0], [{s}, 0]]}},
  {{"prior": 0.3, "vector": [[0, 0], [1, 0]]}}
]}}
"#
    )
}

/// Orthonormal columns from a Gram–Schmidt pass over Gaussian vectors.
pub fn orthonormal_basis<R: Rng>(rng: &mut R, n: usize) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::with_capacity(n);
    while out.len() < n {
        let mut v = generate::unit_vector(rng, n);
        for q in &out {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v.unscale(norm));
        }
    }
    out
}

/// `m ≤ n` mutually orthogonal pure states with random priors.
pub fn orthogonal_ensemble<R: Rng>(rng: &mut R, n: usize, m: usize) -> Ensemble {
    let basis = orthonormal_basis(rng, n);
    let priors = generate::priors(rng, m);
    Ensemble::from_pure(
        priors.into_iter().zip(basis).collect(),
        &Tolerances::default(),
    )
    .unwrap()
}

/// Two distinct states, each listed twice with half its prior.
pub fn duplicated_ensemble<R: Rng>(rng: &mut R, n: usize) -> Ensemble {
    let p = generate::priors(rng, 2);
    let a = generate::unit_vector(rng, n);
    let b = generate::unit_vector(rng, n);
    Ensemble::from_pure(
        vec![
            (p[0] / 2.0, a.clone()),
            (p[0] / 2.0, a),
            (p[1] / 2.0, b.clone()),
            (p[1] / 2.0, b),
        ],
        &Tolerances::default(),
    )
    .unwrap()
}

pub fn projector_distance(a: &CVector, b: &CVector) -> f64 {
    linalg::max_abs(&(linalg::outer(a) - linalg::outer(b)))
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let v = generate::unit_vector(rng, 2);
        v[0] * 2.0
    });
    linalg::hermitian_part(&g)
}

/// Minimizes `cᵀx` over `Ax = b, x ≥ 0` by enumerating every basis.
pub fn brute_force_lp(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<f64> {
    let (m, n) = a.shape();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let basis = DMatrix::from_fn(m, m, |r, k| a[(r, cols[k])]);
        let Some(xb) = basis.lu().solve(b) else {
            continue;
        };
        let residual = (DMatrix::from_fn(m, m, |r, k| a[(r, cols[k])]) * &xb - b).amax();
        if residual > 1e-9 || xb.iter().any(|&v| v < -1e-10) {
            continue;
        }
        let obj: f64 = cols.iter().zip(xb.iter()).map(|(&j, &v)| c[j] * v).sum();
        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
    }
    best
}
