mod common;

use qdetect::dual_solver::{solve_dual, SolverOptions};
use qdetect::ensemble::{Ensemble, Tolerances};
use qdetect::generate::{self, EnsembleKind};
use qdetect::linalg::{self, CMatrix};
use qdetect::pipeline::{solve, PipelineOptions};
use qdetect::{check_optimality, helstrom_binary_pd, Measurement};

use common::{c, vec2};

#[test]
fn orthogonal_pair_gives_half_identity() {
    let e = Ensemble::from_pure(
        vec![(0.5, vec2(1.0, 0.0)), (0.5, vec2(0.0, 1.0))],
        &Tolerances::default(),
    )
    .unwrap();
    let (cert, _) = solve_dual(&e, &SolverOptions::default()).unwrap();
    assert!(linalg::max_abs(&(&cert.x - linalg::identity(2).scale(0.5))) < 1e-8);
    assert!((cert.objective - 1.0).abs() <= 1e-8);
}

#[test]
fn zero_and_plus_reach_helstrom() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = Ensemble::from_pure(
        vec![(0.5, vec2(1.0, 0.0)), (0.5, vec2(s, s))],
        &Tolerances::default(),
    )
    .unwrap();
    let expected = 0.5 * (1.0 + s);
    let (cert, _) = solve_dual(&e, &SolverOptions::default()).unwrap();
    assert!((cert.objective - expected).abs() <= 1e-8);
    assert!((cert.objective - 0.853553).abs() < 1e-6);
}

#[test]
fn weak_duality_against_any_measurement() {
    for seed in 0..20 {
        let e = generate::generate(EnsembleKind::Mixed, 3, 4, seed);
        let (cert, _) = solve_dual(&e, &SolverOptions::default()).unwrap();
        // uniform split and a computational-basis guess are both feasible
        let uniform = Measurement::new(vec![linalg::identity(3).scale(0.25); 4]);
        let mut ops = vec![CMatrix::zeros(3, 3); 4];
        for k in 0..3 {
            ops[k][(k, k)] = c(1.0);
        }
        let basis = Measurement::new(ops);
        for m in [uniform, basis] {
            let p = qdetect::prob_correct(&e, &m).unwrap();
            assert!(p <= cert.objective + 1e-12, "seed {seed}: {p} > {}", cert.objective);
        }
    }
}

#[test]
fn path_is_feasible_and_trace_decreases() {
    for seed in 0..10 {
        let e = generate::generate(EnsembleKind::Pure, 4, 5, seed);
        let (cert, trace) = solve_dual(&e, &SolverOptions::default()).unwrap();
        assert!(trace.outer.iter().all(|r| r.min_slack > 0.0));
        for w in trace.outer.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-10);
        }
        let last = trace.outer.last().unwrap();
        assert!(last.t * 1e-8 >= 20.0 - 1e-9);
        assert!(cert.suboptimality_bound <= 1e-8);
    }
}

#[test]
fn binary_objective_matches_closed_form() {
    for seed in 0..10 {
        let e = generate::generate(EnsembleKind::Mixed, 3, 2, 100 + seed);
        let (cert, _) = solve_dual(&e, &SolverOptions::default()).unwrap();
        let exact = helstrom_binary_pd(&e).unwrap();
        assert!(cert.objective >= exact - 1e-12);
        assert!(cert.objective - exact <= 1e-8);
    }
}

#[test]
fn loose_gap_tolerance_still_certifies_loosely() {
    let e = common::worked_example();
    let opts = PipelineOptions {
        solver: SolverOptions {
            gap_tol: 1e-4,
            ..SolverOptions::default()
        },
        check_tol: 1e-3,
        resolution_tol: 1e-3,
        ..PipelineOptions::default()
    };
    let sol = solve(&e, &opts).unwrap();
    assert!(sol.report.optimal);
    assert!(sol.suboptimality_bound <= 1e-4);
}

#[test]
fn certification_rejects_shifted_dual() {
    let e = common::worked_example();
    let sol = solve(&e, &PipelineOptions::default()).unwrap();
    let shifted = &sol.x_hat + linalg::identity(2).scale(1e-3);
    let r = check_optimality(&e, &sol.measurement, &shifted, 1e-6).unwrap();
    assert!(!r.optimal);
    assert!(!r.conditions.gap.pass);
}
