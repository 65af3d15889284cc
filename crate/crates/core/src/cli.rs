//! Command-line surface: `solve`, `verify`, `compare` and `generate`.
//!
//! Exit codes: 0 certified optimal (or feasible, for `verify` without `X̂`),
//! 2 solved but not certified, 3 invalid input, 4 solver failure.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certify::{self, Conditions, OptimalityReport};
use crate::dual_solver::SolverTrace;
use crate::ensemble::{self, Ensemble, EnsembleError, Tolerances};
use crate::format::{self, MeasurementFile, WireMatrix, WireVector};
use crate::generate::{self, EnsembleKind};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::lsm::{self, PureEnsembleView};
use crate::pipeline::{self, PipelineError, PipelineOptions, Solution};
use crate::recovery::{CoefficientMethod, Feasibility, Measurement};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qdetect", version, about = "Minimum-error quantum measurement design")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Target bound on the dual suboptimality.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub gap_tol: f64,
    /// Relative eigenvalue threshold for null spaces and ranks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub rank_tol: f64,
    /// Tolerance of the optimality verdict.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub check_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub herm_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub psd_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub trace_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub prior_tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute and certify the optimal measurement for an ensemble.
    Solve { input: PathBuf },
    /// Check a measurement (and optionally a dual point) against an ensemble.
    Verify {
        ensemble: PathBuf,
        measurement: PathBuf,
        /// JSON file with an "X_hat" matrix, e.g. a `solve` report.
        #[arg(long = "x-hat")]
        x_hat: Option<PathBuf>,
    },
    /// Compare the optimal and least-squares measurements of a pure ensemble.
    Compare { input: PathBuf },
    /// Write a seeded random ensemble.
    Generate {
        #[arg(long, value_enum, default_value_t = EnsembleKind::Pure)]
        kind: EnsembleKind,
        #[arg(short = 'n', long = "dim")]
        dim: usize,
        #[arg(short = 'm', long = "states")]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Validated settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub pipeline: PipelineOptions,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(args: &GlobalArgs) -> Result<Self, String> {
        let named = [
            ("gap-tol", args.gap_tol),
            ("rank-tol", args.rank_tol),
            ("check-tol", args.check_tol),
            ("herm-tol", args.herm_tol),
            ("psd-tol", args.psd_tol),
            ("trace-tol", args.trace_tol),
            ("prior-tol", args.prior_tol),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("--{name} must be positive, got {v}"));
            }
        }
        let mut pipeline = PipelineOptions::default();
        pipeline.solver.gap_tol = args.gap_tol;
        pipeline.check_tol = args.check_tol;
        pipeline.resolution_tol = args.check_tol;
        pipeline.tolerances = Tolerances {
            herm: args.herm_tol,
            psd: args.psd_tol,
            trace: args.trace_tol,
            prior: args.prior_tol,
            rank: args.rank_tol,
        };
        Ok(Self {
            pipeline,
            format: args.format,
            output: args.output.clone(),
        })
    }
}

/// Result of a command: exit status plus the rendered report.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub body: String,
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Debug, Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    message: String,
}

fn failure(code: i32, kind: &str, message: String, fmt: OutputFormat) -> Outcome {
    let body = match fmt {
        OutputFormat::Json => to_json(&ErrorBody {
            error: ErrorDetail { kind, message },
        }),
        OutputFormat::Text => format!("error ({kind}): {message}\n"),
    };
    Outcome { code, body }
}

fn input_error(message: impl ToString, fmt: OutputFormat) -> Outcome {
    failure(EXIT_INPUT, "input", message.to_string(), fmt)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn read_ensemble(path: &Path, tol: &Tolerances) -> Result<Ensemble, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    ensemble::load_ensemble(BufReader::new(file), tol).map_err(|e| match e {
        EnsembleError::Parse(msg) => format!("{}: parse error: {msg}", path.display()),
        other => format!("{}: {other}", path.display()),
    })
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| format!("{}: parse error: {e}", path.display()))
}

/// Accepts a bare measurement document or any object with a "measurement" field.
fn read_measurement(path: &Path) -> Result<Measurement, String> {
    let mut value = read_json(path)?;
    if let Some(inner) = value.get_mut("measurement") {
        value = inner.take();
    }
    let file: MeasurementFile = serde_json::from_value(value)
        .map_err(|e| format!("{}: parse error: {e}", path.display()))?;
    Measurement::from_file(&file).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_x_hat(path: &Path) -> Result<CMatrix, String> {
    let value = read_json(path)?;
    let field = value
        .get("X_hat")
        .cloned()
        .ok_or_else(|| format!("{}: missing \"X_hat\"", path.display()))?;
    let wire: WireMatrix = serde_json::from_value(field)
        .map_err(|e| format!("{}: parse error: {e}", path.display()))?;
    let m = format::matrix_from_wire(&wire)
        .ok_or_else(|| format!("{}: ragged X_hat rows", path.display()))?;
    if !m.is_square() || !linalg::is_finite(&m) {
        return Err(format!("{}: X_hat must be a finite square matrix", path.display()));
    }
    Ok(m)
}

/// Multiplies `v` by the phase that makes `⟨reference|v⟩` real and
/// nonnegative, or its largest entry real and positive when orthogonal.
pub fn align_phase(v: &CVector, reference: &CVector) -> CVector {
    let overlap = reference.dotc(v);
    let anchor = if overlap.norm() > 1e-12 {
        overlap
    } else {
        v.iter()
            .copied()
            .fold(C64::new(0.0, 0.0), |best, z| if z.norm() > best.norm() + 1e-12 { z } else { best })
    };
    if anchor.norm() == 0.0 {
        return v.clone();
    }
    v * (anchor.conj() / anchor.norm())
}

#[derive(Debug, Serialize)]
struct CoefficientReport {
    method: CoefficientMethod,
    a: Vec<f64>,
    per_state: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct LsmReport {
    p_correct: f64,
    vectors: Vec<WireVector>,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    helstrom_p_correct: f64,
}

#[derive(Debug, Serialize)]
struct SolveReport {
    p_correct: f64,
    dual_objective: f64,
    gap: f64,
    verdict: &'static str,
    check_tol: f64,
    conditions: Conditions,
    #[serde(rename = "X_hat")]
    x_hat: WireMatrix,
    measurement: MeasurementFile,
    coefficients: CoefficientReport,
    null_space_dims: Vec<usize>,
    reduced_dim: usize,
    rank_tol: f64,
    suboptimality_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lsm: Option<LsmReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
    solver: SolverTrace,
}

fn verdict(optimal: bool) -> &'static str {
    if optimal {
        "optimal"
    } else {
        "not_optimal"
    }
}

fn pipeline_failure(err: PipelineError, fmt: OutputFormat) -> Outcome {
    let kind = match err {
        PipelineError::Solver(_) => "solver",
        PipelineError::Recovery(_) => "recovery",
        PipelineError::Certify(_) => "certify",
    };
    failure(EXIT_SOLVER, kind, err.to_string(), fmt)
}

fn lsm_for(e: &Ensemble, cfg: &RunConfig) -> Option<(f64, Vec<CVector>, PureEnsembleView)> {
    let tol = &cfg.pipeline.tolerances;
    let (reduced, embedding) = ensemble::reduce_to_span(e, tol.rank);
    let view = PureEnsembleView::from_ensemble(&reduced, tol.rank).ok()?;
    let chi = lsm::lsm_vectors(&view, tol.psd).ok()?;
    let pd = lsm::lsm_prob_correct(&view, tol.psd).ok()?;
    let full_view = PureEnsembleView::from_ensemble(e, tol.rank).ok()?;
    let chi = chi
        .iter()
        .zip(&full_view.weighted)
        .map(|(x, psi)| align_phase(&embedding.embed_vector(x), psi))
        .collect();
    Some((pd, chi, full_view))
}

fn solve_report(e: &Ensemble, sol: &Solution, cfg: &RunConfig) -> SolveReport {
    let r = &sol.report;
    let lsm = lsm_for(e, cfg).map(|(p_correct, chi, _)| LsmReport {
        p_correct,
        vectors: chi.iter().map(format::vector_to_wire).collect(),
    });
    let oracle = certify::helstrom_binary_pd(e)
        .ok()
        .map(|helstrom_p_correct| OracleReport { helstrom_p_correct });
    SolveReport {
        p_correct: r.p_correct,
        dual_objective: r.dual_objective,
        gap: r.gap,
        verdict: verdict(r.optimal),
        check_tol: r.tol,
        conditions: r.conditions,
        x_hat: format::matrix_to_wire(&sol.x_hat),
        measurement: sol.measurement.to_file(),
        coefficients: CoefficientReport {
            method: sol.coefficients.method,
            a: sol.coefficients.a.iter().copied().collect(),
            per_state: sol.coefficients.per_state(),
        },
        null_space_dims: sol.null_space_dims.clone(),
        reduced_dim: sol.reduced_dim,
        rank_tol: sol.rank_tol,
        suboptimality_bound: sol.suboptimality_bound,
        lsm,
        oracle,
        solver: sol.trace.clone(),
    }
}

fn conditions_text(c: &Conditions) -> String {
    let mut out: String = c
        .all()
        .iter()
        .map(|(name, check)| {
            format!(
                "  {name:<24} {:>11.3e}  {}\n",
                check.residual,
                if check.pass { "ok" } else { "FAIL" }
            )
        })
        .collect();
    out.push_str(&format!(
        "  {:<24} {:>11.3e}  {}\n",
        "rank_bound",
        c.rank_bound.residual,
        if c.rank_bound.pass { "ok" } else { "exceeded (info)" }
    ));
    out
}

fn matrix_text(m: &CMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        out.push_str("  [");
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z.im.abs() > 1e-12 {
                out.push_str(&format!(" {:>9.6}{:+.6}i", z.re, z.im));
            } else {
                out.push_str(&format!(" {:>9.6}", z.re));
            }
        }
        out.push_str(" ]\n");
    }
    out
}

fn cmd_solve(input: &Path, cfg: &RunConfig) -> Outcome {
    let e = match read_ensemble(input, &cfg.pipeline.tolerances) {
        Ok(e) => e,
        Err(msg) => return input_error(msg, cfg.format),
    };
    let sol = match pipeline::solve(&e, &cfg.pipeline) {
        Ok(s) => s,
        Err(err) => return pipeline_failure(err, cfg.format),
    };
    let report = solve_report(&e, &sol, cfg);
    let code = if sol.report.optimal {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    };
    let body = match cfg.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Text => {
            let mut s = format!(
                "P_correct      {:.10}\ntr(X_hat)      {:.10}\ngap            {:.3e}\nverdict        {}\n",
                report.p_correct, report.dual_objective, report.gap, report.verdict
            );
            if let Some(l) = &report.lsm {
                s.push_str(&format!("LSM P_correct  {:.10}\n", l.p_correct));
            }
            if let Some(o) = &report.oracle {
                s.push_str(&format!("Helstrom       {:.10}\n", o.helstrom_p_correct));
            }
            s.push_str("conditions:\n");
            s.push_str(&conditions_text(&report.conditions));
            s.push_str("X_hat:\n");
            s.push_str(&matrix_text(&sol.x_hat));
            for (i, p) in sol.measurement.operators().iter().enumerate() {
                s.push_str(&format!("Pi_{}:\n", i + 1));
                s.push_str(&matrix_text(p));
            }
            s
        }
    };
    Outcome { code, body }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    p_correct: f64,
    feasible: bool,
    feasibility: Feasibility,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimality: Option<OptimalityReport>,
}

fn cmd_verify(ens: &Path, meas: &Path, x_hat: Option<&Path>, cfg: &RunConfig) -> Outcome {
    let e = match read_ensemble(ens, &cfg.pipeline.tolerances) {
        Ok(e) => e,
        Err(msg) => return input_error(msg, cfg.format),
    };
    let pi = match read_measurement(meas) {
        Ok(m) => m,
        Err(msg) => return input_error(msg, cfg.format),
    };
    let x = match x_hat.map(read_x_hat).transpose() {
        Ok(x) => x,
        Err(msg) => return input_error(msg, cfg.format),
    };
    let p_correct = match certify::prob_correct(&e, &pi) {
        Ok(p) => p,
        Err(err) => return input_error(err, cfg.format),
    };
    let feasibility = match pi.feasibility() {
        Ok(f) => f,
        Err(err) => return input_error(err, cfg.format),
    };
    let tol = cfg.pipeline.check_tol;
    let feasible = feasibility.holds(tol);
    let optimality = match &x {
        Some(x) => match certify::check_optimality(&e, &pi, x, tol) {
            Ok(r) => Some(r),
            Err(err) => return input_error(err, cfg.format),
        },
        None => None,
    };
    let (verdict, code) = match &optimality {
        Some(r) if r.optimal => ("optimal", EXIT_OK),
        Some(_) => ("not_optimal", EXIT_UNCERTIFIED),
        None if feasible => ("feasible", EXIT_OK),
        None => ("infeasible", EXIT_UNCERTIFIED),
    };
    let report = VerifyReport {
        p_correct,
        feasible,
        feasibility,
        verdict,
        optimality,
    };
    let body = match cfg.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Text => {
            let mut s = format!(
                "P_correct      {:.10}\nfeasible       {}\n  psd          {:.3e}\n  resolution   {:.3e}\nverdict        {}\n",
                report.p_correct,
                report.feasible,
                report.feasibility.psd,
                report.feasibility.resolution,
                report.verdict
            );
            if let Some(r) = &report.optimality {
                s.push_str(&format!("gap            {:.3e}\nconditions:\n", r.gap));
                s.push_str(&conditions_text(&r.conditions));
            }
            s
        }
    };
    Outcome { code, body }
}

/// 2-D coordinates of the weighted states and both measurement vector sets.
#[derive(Debug, Serialize)]
struct PlotData {
    weighted_states: Vec<[f64; 2]>,
    optimal: Vec<[f64; 2]>,
    lsm: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    optimal_p_correct: f64,
    lsm_p_correct: f64,
    verdict: &'static str,
    weighted_states: Vec<WireVector>,
    optimal_vectors: Vec<WireVector>,
    lsm_vectors: Vec<WireVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plot: Option<PlotData>,
}

fn planar(vs: &[CVector]) -> Option<Vec<[f64; 2]>> {
    vs.iter()
        .map(|v| {
            if v.len() == 2 && v.iter().all(|z| z.im.abs() <= 1e-12) {
                Some([v[0].re, v[1].re])
            } else {
                None
            }
        })
        .collect()
}

fn cmd_compare(input: &Path, cfg: &RunConfig) -> Outcome {
    let e = match read_ensemble(input, &cfg.pipeline.tolerances) {
        Ok(e) => e,
        Err(msg) => return input_error(msg, cfg.format),
    };
    if let Err(err) = PureEnsembleView::from_ensemble(&e, cfg.pipeline.tolerances.rank) {
        return input_error(err, cfg.format);
    }
    let Some((lsm_pd, chi, view)) = lsm_for(&e, cfg) else {
        return failure(
            EXIT_SOLVER,
            "lsm",
            "least-squares measurement is undefined for this ensemble".into(),
            cfg.format,
        );
    };
    let sol = match pipeline::solve(&e, &cfg.pipeline) {
        Ok(s) => s,
        Err(err) => return pipeline_failure(err, cfg.format),
    };
    let Some(mu) = &sol.span_vectors else {
        return failure(
            EXIT_UNCERTIFIED,
            "recovery",
            "recovered measurement is not rank one".into(),
            cfg.format,
        );
    };
    let mu: Vec<CVector> = mu
        .iter()
        .zip(&view.weighted)
        .map(|(m, psi)| align_phase(m, psi))
        .collect();
    let plot = match (planar(&view.weighted), planar(&mu), planar(&chi)) {
        (Some(weighted_states), Some(optimal), Some(lsm)) => Some(PlotData {
            weighted_states,
            optimal,
            lsm,
        }),
        _ => None,
    };
    let report = CompareReport {
        optimal_p_correct: sol.p_correct(),
        lsm_p_correct: lsm_pd,
        verdict: verdict(sol.report.optimal),
        weighted_states: view.weighted.iter().map(format::vector_to_wire).collect(),
        optimal_vectors: mu.iter().map(format::vector_to_wire).collect(),
        lsm_vectors: chi.iter().map(format::vector_to_wire).collect(),
        plot,
    };
    let code = if sol.report.optimal {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    };
    let body = match cfg.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Text => {
            let mut s = format!(
                "optimal P_correct  {:.10}\nLSM P_correct      {:.10}\n",
                report.optimal_p_correct, report.lsm_p_correct
            );
            let fmt_vec = |v: &CVector| {
                v.iter()
                    .map(|z| {
                        if z.im.abs() > 1e-12 {
                            format!("{:.6}{:+.6}i", z.re, z.im)
                        } else {
                            format!("{:.6}", z.re)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            for i in 0..mu.len() {
                s.push_str(&format!(
                    "state {}: psi = ({})  mu = ({})  chi = ({})\n",
                    i + 1,
                    fmt_vec(&view.weighted[i]),
                    fmt_vec(&mu[i]),
                    fmt_vec(&chi[i])
                ));
            }
            s
        }
    };
    Outcome { code, body }
}

fn cmd_generate(kind: EnsembleKind, n: usize, m: usize, seed: u64, fmt: OutputFormat) -> Outcome {
    if n == 0 || m == 0 {
        return input_error("dimension and state count must be at least 1", fmt);
    }
    let e = generate::generate(kind, n, m, seed);
    Outcome {
        code: EXIT_OK,
        body: to_json(&e.to_file()),
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let cfg = match RunConfig::from_args(&cli.global) {
        Ok(c) => c,
        Err(msg) => return input_error(msg, cli.global.format),
    };
    match &cli.command {
        Command::Solve { input } => cmd_solve(input, &cfg),
        Command::Verify {
            ensemble,
            measurement,
            x_hat,
        } => cmd_verify(ensemble, measurement, x_hat.as_deref(), &cfg),
        Command::Compare { input } => cmd_compare(input, &cfg),
        Command::Generate {
            kind,
            dim,
            states,
            seed,
        } => cmd_generate(*kind, *dim, *states, *seed, cfg.format),
    }
}

/// Maps `QDETECT_LOG` (`off`, `info`, `trace`) to a log level.
pub fn log_level(value: Option<&str>) -> log::LevelFilter {
    match value.map(str::trim) {
        Some("info") => log::LevelFilter::Info,
        Some("trace") => log::LevelFilter::Trace,
        Some("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Off,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_alignment_makes_overlap_real() {
        let reference = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let v = CVector::from_vec(vec![C64::new(0.0, -0.5), C64::new(0.3, 0.0)]);
        let aligned = align_phase(&v, &reference);
        let overlap = reference.dotc(&aligned);
        assert!(overlap.im.abs() < 1e-15 && overlap.re > 0.0);
        assert!((aligned.norm() - v.norm()).abs() < 1e-15);
    }

    #[test]
    fn log_levels() {
        assert_eq!(log_level(None), log::LevelFilter::Off);
        assert_eq!(log_level(Some("info")), log::LevelFilter::Info);
        assert_eq!(log_level(Some("trace")), log::LevelFilter::Trace);
        assert_eq!(log_level(Some("off")), log::LevelFilter::Off);
    }

    #[test]
    fn non_positive_tolerance_is_rejected() {
        let cli = Cli::try_parse_from(["qdetect", "--gap-tol", "0", "solve", "x.json"]).unwrap();
        let out = run(&cli);
        assert_eq!(out.code, EXIT_INPUT);
    }

    #[test]
    fn matrix_text_has_one_line_per_row() {
        let s = matrix_text(&linalg::identity(2));
        assert_eq!(s.lines().count(), 2);
    }
}
