mod common;

use qdetect::ensemble::{ensemble_from_file, load_ensemble, reduce_to_span, validate, Tolerances};
use qdetect::generate::{self, EnsembleKind};
use qdetect::linalg;

#[test]
fn weighted_traces_sum_to_one() {
    for seed in 0..20 {
        for kind in [EnsembleKind::Pure, EnsembleKind::Mixed] {
            let e = generate::generate(kind, 3, 4, seed);
            let total: f64 = e.weighted_all().iter().map(linalg::real_trace).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn reduction_is_idempotent() {
    for seed in 0..20 {
        let e = generate::generate(EnsembleKind::Pure, 4, 2, seed);
        let (once, emb) = reduce_to_span(&e, 1e-6);
        assert_eq!(once.dim(), 2);
        assert_eq!(emb.full_dim(), 4);
        let (twice, emb2) = reduce_to_span(&once, 1e-6);
        assert_eq!(twice.dim(), once.dim());
        assert!(emb2.is_identity());
    }
}

#[test]
fn reduction_round_trips_states() {
    for seed in 0..20 {
        let e = generate::generate(EnsembleKind::Mixed, 4, 2, 50 + seed);
        let (reduced, emb) = reduce_to_span(&e, 1e-6);
        for i in 0..e.len() {
            let back = emb.embed_operator(reduced.weighted(i));
            assert!(linalg::max_abs(&(back - e.weighted(i))) < 1e-10);
        }
        let total = emb.complement() + emb.embed_operator(&linalg::identity(reduced.dim()));
        assert!(linalg::max_abs(&(total - linalg::identity(4))) < 1e-10);
    }
}

#[test]
fn file_round_trip_preserves_states() {
    let e = generate::generate(EnsembleKind::Mixed, 3, 3, 9);
    let json = serde_json::to_string(&e.to_file()).unwrap();
    let back = load_ensemble(json.as_bytes(), &Tolerances::default()).unwrap();
    assert_eq!(back.len(), e.len());
    for i in 0..e.len() {
        assert!(linalg::max_abs(&(back.weighted(i) - e.weighted(i))) < 1e-15);
    }
}

#[test]
fn worked_example_document_loads() {
    let e = load_ensemble(common::worked_example_json().as_bytes(), &Tolerances::default())
        .unwrap();
    let expected = common::worked_example();
    for i in 0..3 {
        assert!(linalg::max_abs(&(e.weighted(i) - expected.weighted(i))) < 1e-15);
    }
    assert!((e.weighted(1)[(0, 1)].re - 0.3).abs() < 1e-15);
}

#[test]
fn bad_priors_are_reported() {
    let mut file = generate::generate(EnsembleKind::Pure, 2, 2, 1).to_file();
    file.states[0].prior += 0.1;
    let err = ensemble_from_file(&file, &Tolerances::default()).unwrap_err();
    assert!(err.to_string().contains("priors"), "{err}");
    let e = generate::generate(EnsembleKind::Pure, 2, 2, 1);
    assert!(validate(&e, &Tolerances::default()).is_valid());
}
