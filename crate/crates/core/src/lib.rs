//! Minimum-error quantum measurement design.
//!
//! Given an ensemble of density operators `ρᵢ` with priors `pᵢ`, the
//! measurement maximizing the probability of correct detection is found by
//! solving the dual semidefinite program `min tr(X) s.t. X ⪰ pᵢρᵢ`, reading
//! the measurement operators off the null spaces of `X̂ − pᵢρᵢ`, and
//! certifying the pair against the optimality conditions.
//!
//! ```no_run
//! use qdetect::ensemble::{load_ensemble, Tolerances};
//! use qdetect::pipeline::{solve, PipelineOptions};
//!
//! let file = std::fs::File::open("ensemble.json").unwrap();
//! let e = load_ensemble(file, &Tolerances::default()).unwrap();
//! let sol = solve(&e, &PipelineOptions::default()).unwrap();
//! println!("P_d = {}", sol.p_correct());
//! ```

pub mod certify;
pub mod cli;
pub mod dual_solver;
pub mod ensemble;
pub mod format;
pub mod generate;
pub mod linalg;
pub mod lsm;
pub mod pipeline;
pub mod recovery;

pub use certify::{check_optimality, helstrom_binary_pd, prob_correct, OptimalityReport};
pub use dual_solver::{solve_dual, DualCertificate, SolverOptions};
pub use ensemble::{load_ensemble, Ensemble, Tolerances};
pub use pipeline::{solve, PipelineOptions, Solution};
pub use recovery::Measurement;
