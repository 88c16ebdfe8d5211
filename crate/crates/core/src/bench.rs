//! Grid runner: solvers × problems × repetitions, with per-cell traces and a
//! summary report.
//!
//! A run spec is a TOML file:
//!
//! ```toml
//! name = "sparse-512"
//! output_dir = "runs/sparse-512"
//! seed = 0              # repetition r uses seed + r
//! repetitions = 3
//! max_iters = 1000
//! timing = false        # true: run cells one after another
//! timing_repeats = 1    # reruns per cell; the median time is reported
//!
//! [stop]
//! kind = "mean_squared_error"   # successive_diff | distance_to_reference |
//! tol = 1e-2                     # mean_squared_error | residual | iter_cap_only
//!
//! [[problems]]
//! family = "cs"
//! d = 512
//! m = 256
//! l = 10
//! snr_db = 40.0
//!
//! [[solvers]]
//! method = "ifb"
//!
//! [[solvers]]
//! method = "zw"
//! step = "armijo"
//! ```
//!
//! Reference-based stopping measures against the problem's exact solution
//! when it has one, otherwise against its ground-truth signal.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    solve_baseline, BaselineConfig, BaselineMethod, StepSchedule, TcParams, TcReading,
};
use crate::error::{Result, SolverError};
use crate::linesearch::LineSearchParams;
use crate::problems::{Assembled, ProblemSpec};
use crate::solver::{
    inertia_cap, rate_from_series, solve_with_solution, InertiaSchedule, SolverConfig,
};
use crate::trace::{IterationTrace, SolveOutput, StoppingKind, StoppingRule, TerminalStatus};

fn default_repetitions() -> usize {
    1
}

fn default_max_iters() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub kind: StoppingKind,
    #[serde(default)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaMode {
    /// `ϑ √k / (k + 5)`.
    Damped,
    Constant,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Constant,
    Harmonic,
    Armijo,
}

/// Optional overrides of the shared Armijo search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSearchSpec {
    pub initial_step: Option<f64>,
    pub shrink: Option<f64>,
    pub acceptance: Option<f64>,
    pub max_backtracks: Option<u32>,
}

impl LineSearchSpec {
    fn apply(&self, mut p: LineSearchParams) -> LineSearchParams {
        if let Some(v) = self.initial_step {
            p.initial_step = v;
        }
        if let Some(v) = self.shrink {
            p.shrink = v;
        }
        if let Some(v) = self.acceptance {
            p.acceptance = v;
        }
        if let Some(v) = self.max_backtracks {
            p.max_backtracks = v;
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    Ifb {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        linesearch: LineSearchSpec,
        #[serde(default)]
        inertia: Option<InertiaMode>,
        /// Inertia bound; defaults to 0.99 of the theoretical cap.
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default)]
        warm_start: bool,
    },
    Fb {
        #[serde(default)]
        label: Option<String>,
        step: StepKind,
        #[serde(default)]
        step_size: Option<f64>,
        #[serde(default)]
        linesearch: LineSearchSpec,
    },
    Tseng {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        linesearch: LineSearchSpec,
    },
    Zw {
        #[serde(default)]
        label: Option<String>,
        /// Defaults to `harmonic` (`λ_k = k/(k+1)`).
        #[serde(default)]
        step: Option<StepKind>,
        #[serde(default)]
        step_size: Option<f64>,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        linesearch: LineSearchSpec,
    },
    Tc {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        literal: bool,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default)]
        linesearch: LineSearchSpec,
    },
    Jx {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        linesearch: LineSearchSpec,
    },
}

/// A solver ready to run: either the main method or a baseline.
#[derive(Debug, Clone)]
pub enum Method {
    Ifb(SolverConfig),
    Baseline(BaselineConfig),
}

impl SolverSpec {
    pub fn label(&self) -> String {
        match self {
            SolverSpec::Ifb { label, .. } => label.clone().unwrap_or_else(|| "IFB".into()),
            SolverSpec::Fb { label, step, .. } => label
                .clone()
                .unwrap_or_else(|| format!("FB-{}", step_name(*step))),
            SolverSpec::Tseng { label, .. } => label.clone().unwrap_or_else(|| "Tseng".into()),
            SolverSpec::Zw { label, step, .. } => label
                .clone()
                .unwrap_or_else(|| format!("ZW-{}", step_name(step.unwrap_or(StepKind::Harmonic)))),
            SolverSpec::Tc { label, literal, .. } => label.clone().unwrap_or_else(|| {
                if *literal {
                    "TC-literal".into()
                } else {
                    "TC".into()
                }
            }),
            SolverSpec::Jx { label, .. } => label.clone().unwrap_or_else(|| "JX".into()),
        }
    }

    /// Builds a validated method configuration.
    pub fn build(
        &self,
        stop: StoppingRule,
        max_iters: usize,
        check_invariants: bool,
    ) -> Result<Method> {
        let step_schedule =
            |kind: StepKind, size: Option<f64>, ls: &LineSearchSpec| -> Result<StepSchedule> {
                Ok(match kind {
                    StepKind::Constant => StepSchedule::Constant(size.ok_or_else(|| {
                        SolverError::InvalidParameter("constant step needs step_size".into())
                    })?),
                    StepKind::Harmonic => StepSchedule::Harmonic,
                    StepKind::Armijo => StepSchedule::Armijo(ls.apply(LineSearchParams::default())),
                })
            };
        let baseline = |method: BaselineMethod| {
            let mut cfg = BaselineConfig::new(method, stop.clone());
            cfg.max_iters = max_iters;
            cfg.check_invariants = check_invariants;
            cfg
        };
        let method = match self {
            SolverSpec::Ifb {
                gamma,
                linesearch,
                inertia,
                theta,
                warm_start,
                ..
            } => {
                let mut cfg = SolverConfig::benchmark_defaults(stop.clone());
                if let Some(g) = gamma {
                    cfg.gamma = *g;
                }
                cfg.linesearch = linesearch.apply(cfg.linesearch);
                let theta =
                    theta.unwrap_or(0.99 * inertia_cap(cfg.gamma, cfg.linesearch.acceptance));
                cfg.inertia = match inertia.unwrap_or(InertiaMode::Damped) {
                    InertiaMode::Damped => InertiaSchedule::Damped { theta_max: theta },
                    InertiaMode::Constant => InertiaSchedule::Constant(theta),
                    InertiaMode::None => InertiaSchedule::Constant(0.0),
                };
                cfg.warm_start = *warm_start;
                cfg.max_iters = max_iters;
                cfg.check_invariants = check_invariants;
                cfg.validate()?;
                Method::Ifb(cfg)
            }
            SolverSpec::Fb {
                step,
                step_size,
                linesearch,
                ..
            } => Method::Baseline(baseline(BaselineMethod::Fb {
                step: step_schedule(*step, *step_size, linesearch)?,
            })),
            SolverSpec::Tseng { linesearch, .. } => {
                Method::Baseline(baseline(BaselineMethod::Tseng {
                    linesearch: linesearch.apply(LineSearchParams::default()),
                }))
            }
            SolverSpec::Zw {
                step,
                step_size,
                gamma,
                linesearch,
                ..
            } => Method::Baseline(baseline(BaselineMethod::Zw {
                step: step_schedule(step.unwrap_or(StepKind::Harmonic), *step_size, linesearch)?,
                gamma: gamma.unwrap_or(0.5),
            })),
            SolverSpec::Tc {
                literal,
                gamma,
                theta,
                linesearch,
                ..
            } => {
                let mut p = TcParams::default();
                p.linesearch = linesearch.apply(p.linesearch);
                if let Some(g) = gamma {
                    p.gamma = *g;
                }
                if let Some(t) = theta {
                    p.theta = *t;
                }
                if *literal {
                    p.reading = TcReading::Literal;
                }
                Method::Baseline(baseline(BaselineMethod::Tc(p)))
            }
            SolverSpec::Jx { linesearch, .. } => Method::Baseline(baseline(BaselineMethod::Jx {
                linesearch: linesearch.apply(LineSearchParams::default()),
            })),
        };
        if let Method::Baseline(cfg) = &method {
            cfg.method.validate()?;
        }
        Ok(method)
    }
}

fn step_name(k: StepKind) -> &'static str {
    match k {
        StepKind::Constant => "constant",
        StepKind::Harmonic => "harmonic",
        StepKind::Armijo => "armijo",
    }
}

impl Method {
    /// Runs from the problem's starting pair. The exact solution, when
    /// known, enables the Fejér check for the main method.
    pub fn run(&self, problem: &Assembled) -> Result<SolveOutput> {
        let (u0, u1) = (problem.u0.view(), problem.u1.view());
        match self {
            Method::Ifb(cfg) => solve_with_solution(
                &problem.inclusion,
                u0,
                u1,
                cfg,
                problem.known_solution.as_ref(),
            ),
            Method::Baseline(cfg) => solve_baseline(
                &problem.inclusion,
                u0,
                u1,
                cfg,
                problem.known_solution.as_ref(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "default_repetitions")]
    pub timing_repeats: usize,
    #[serde(default = "default_true")]
    pub check_invariants: bool,
    #[serde(default = "default_true")]
    pub write_traces: bool,
    pub stop: StopSpec,
    pub problems: Vec<ProblemSpec>,
    pub solvers: Vec<SolverSpec>,
}

impl RunSpec {
    pub fn from_toml(s: &str) -> Result<Self> {
        let spec: RunSpec = toml::from_str(s).map_err(|e| SolverError::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SolverError::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 || self.timing_repeats == 0 {
            return Err(SolverError::InvalidParameter(
                "repetitions and timing_repeats must be at least 1".into(),
            ));
        }
        if self.solvers.is_empty() || self.problems.is_empty() {
            return Err(SolverError::InvalidParameter(
                "a run needs at least one solver and one problem".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(SolverError::InvalidParameter(
                "max_iters must be positive".into(),
            ));
        }
        if self.stop.kind != StoppingKind::IterCapOnly && !(self.stop.tol > 0.0) {
            return Err(SolverError::InvalidParameter(format!(
                "stopping tolerance must be positive, got {}",
                self.stop.tol
            )));
        }
        Ok(())
    }

    fn stopping_rule(&self, problem: &Assembled) -> Result<StoppingRule> {
        let needs_reference = matches!(
            self.stop.kind,
            StoppingKind::DistanceToReference | StoppingKind::MeanSquaredError
        );
        let reference = problem.reference().cloned();
        if needs_reference && reference.is_none() {
            return Err(SolverError::InvalidParameter(format!(
                "problem {} has no reference point for {:?} stopping",
                problem.name, self.stop.kind
            )));
        }
        Ok(StoppingRule {
            kind: self.stop.kind,
            tol: self.stop.tol,
            reference,
        })
    }
}

/// One (solver, problem, repetition) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub solver: String,
    pub problem: String,
    pub repetition: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Median wall-clock seconds over the timing repeats.
    pub seconds: f64,
    pub final_error: Option<f64>,
    /// `‖u − ref‖²` of the final iterate against the problem's reference.
    pub final_dist_sq: Option<f64>,
    pub status: String,
    pub min_step: Option<f64>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub violations: usize,
    pub valid: bool,
    pub message: Option<String>,
    #[serde(skip)]
    pub trace_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub cells: Vec<CellReport>,
    /// Traces in cell order; `None` where a cell failed before running.
    pub traces: Vec<Option<IterationTrace>>,
}

impl RunReport {
    pub fn all_valid(&self) -> bool {
        self.cells.iter().all(|c| c.valid)
    }

    /// Human-readable table, one line per cell.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run: {}", self.name);
        let _ = writeln!(
            s,
            "{:<16} {:<22} {:>4} {:>7} {:>11} {:>11} {:>18} {:>10} {:>21} {:>5} valid",
            "solver",
            "problem",
            "rep",
            "iters",
            "seconds",
            "final E_k",
            "status",
            "min step",
            "delta range",
            "viol"
        );
        for c in &self.cells {
            let range = match (c.delta_min, c.delta_max) {
                (Some(a), Some(b)) => format!("[{a:.3e}, {b:.3e}]"),
                _ => "-".into(),
            };
            let _ = writeln!(
                s,
                "{:<16} {:<22} {:>4} {:>7} {:>11.4e} {:>11} {:>18} {:>10} {:>21} {:>5} {}",
                c.solver,
                c.problem,
                c.repetition,
                c.iterations,
                c.seconds,
                c.final_error.map_or("-".into(), |e| format!("{e:.4e}")),
                c.status,
                c.min_step.map_or("-".into(), |e| format!("{e:.3e}")),
                range,
                c.violations,
                if c.valid { "VALID" } else { "INVALID" }
            );
        }
        let invalid = self.cells.iter().filter(|c| !c.valid).count();
        let _ = writeln!(s, "{} cells, {} invalid", self.cells.len(), invalid);
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record([
            "solver",
            "problem",
            "repetition",
            "seed",
            "iterations",
            "seconds",
            "final_error",
            "final_dist_sq",
            "status",
            "min_step",
            "delta_min",
            "delta_max",
            "violations",
            "valid",
            "trace_file",
            "message",
        ])
        .map_err(csv_err)?;
        let opt = |x: Option<f64>| x.map_or(String::new(), fmt_f64);
        for c in &self.cells {
            w.write_record([
                c.solver.clone(),
                c.problem.clone(),
                c.repetition.to_string(),
                c.seed.to_string(),
                c.iterations.to_string(),
                fmt_f64(c.seconds),
                opt(c.final_error),
                opt(c.final_dist_sq),
                c.status.clone(),
                opt(c.min_step),
                opt(c.delta_min),
                opt(c.delta_max),
                c.violations.to_string(),
                if c.valid { "VALID" } else { "INVALID" }.to_string(),
                c.trace_file.clone().unwrap_or_default(),
                c.message.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> SolverError {
    SolverError::Io(e.to_string())
}

/// 17 significant digits: parsing the text gives back the same `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

struct Cell {
    solver: usize,
    problem: usize,
    repetition: usize,
}

fn run_cell(spec: &RunSpec, cell: &Cell) -> (CellReport, Option<IterationTrace>) {
    let solver = &spec.solvers[cell.solver];
    let pspec = &spec.problems[cell.problem];
    let seed = spec.seed.wrapping_add(cell.repetition as u64);
    let mut report = CellReport {
        solver: solver.label(),
        problem: String::new(),
        repetition: cell.repetition,
        seed,
        iterations: 0,
        seconds: 0.0,
        final_error: None,
        final_dist_sq: None,
        status: "Error".into(),
        min_step: None,
        delta_min: None,
        delta_max: None,
        violations: 0,
        valid: false,
        message: None,
        trace_file: None,
    };
    let attempt = || -> Result<(Assembled, SolveOutput, Vec<f64>)> {
        let problem = pspec.build(seed)?;
        let stop = spec.stopping_rule(&problem)?;
        let method = solver.build(stop, spec.max_iters, spec.check_invariants)?;
        let mut times = Vec::with_capacity(spec.timing_repeats);
        let mut out = None;
        for _ in 0..spec.timing_repeats {
            let t0 = Instant::now();
            let o = method.run(&problem)?;
            times.push(t0.elapsed().as_secs_f64());
            out.get_or_insert(o);
        }
        Ok((problem, out.expect("at least one repeat"), times))
    };
    match attempt() {
        Ok((problem, out, times)) => {
            let t = &out.trace;
            report.problem = problem.name.clone();
            report.iterations = t.iterations();
            report.seconds = median(times);
            report.final_error = t.final_error();
            report.final_dist_sq = problem.reference().map(|r| {
                let e = &out.solution - r;
                problem.inclusion.space.norm_sq(&e.view())
            });
            report.status = t.status.as_str().into();
            report.min_step = t.min_step();
            if let Some((lo, hi)) = t.delta_range() {
                report.delta_min = Some(lo);
                report.delta_max = Some(hi);
            }
            report.violations = t.violations.len();
            report.valid = report.violations == 0;
            report.message = t.message.clone();
            (report, Some(out.trace))
        }
        Err(e) => {
            report.problem = problem_label(pspec);
            report.message = Some(e.to_string());
            (report, None)
        }
    }
}

fn problem_label(p: &ProblemSpec) -> String {
    match p {
        ProblemSpec::Cs { d, m, l, .. } => format!("cs-d{d}-m{m}-l{l}"),
        ProblemSpec::Lpa { d, m, l, .. } => format!("lpa-d{d}-m{m}-l{l}"),
        ProblemSpec::L2 { n, case } => format!("l2-n{n}-case{case}"),
        ProblemSpec::Cubic { d } => format!("cubic-d{d}"),
        ProblemSpec::StrongLog { d, .. } => format!("strong-log-d{d}"),
    }
}

/// Runs every cell. Cells execute in parallel unless `timing` is set;
/// solver errors are recorded per cell and never abort the grid.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    spec.validate()?;
    let mut cells = Vec::new();
    for problem in 0..spec.problems.len() {
        let reps = if spec.problems[problem].is_random() {
            spec.repetitions
        } else {
            1
        };
        for solver in 0..spec.solvers.len() {
            for repetition in 0..reps {
                cells.push(Cell {
                    solver,
                    problem,
                    repetition,
                });
            }
        }
    }
    let results: Vec<(CellReport, Option<IterationTrace>)> = if spec.timing {
        cells.iter().map(|c| run_cell(spec, c)).collect()
    } else {
        cells.par_iter().map(|c| run_cell(spec, c)).collect()
    };
    let (cells, traces) = results.into_iter().unzip();
    Ok(RunReport {
        name: spec.name.clone().unwrap_or_else(|| "run".into()),
        cells,
        traces,
    })
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `spec.toml`, `report.csv`, `report.txt` and `traces/*.csv` into `dir`.
pub fn write_outputs(
    report: &mut RunReport,
    spec: &RunSpec,
    spec_text: Option<&str>,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = match spec_text {
        Some(t) => t.to_string(),
        None => spec.to_toml()?,
    };
    fs::write(dir.join("spec.toml"), text)?;
    if spec.write_traces {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir)?;
        for (cell, trace) in report.cells.iter_mut().zip(&report.traces) {
            if let Some(trace) = trace.as_ref().filter(|t| !t.records.is_empty()) {
                let name = format!(
                    "{}__{}__rep{}.csv",
                    sanitize(&cell.solver),
                    sanitize(&cell.problem),
                    cell.repetition
                );
                emit_convergence_csv(trace, &tdir.join(&name))?;
                cell.trace_file = Some(format!("traces/{name}"));
            }
        }
    }
    report.write_csv(&dir.join("report.csv"))?;
    fs::write(dir.join("report.txt"), report.to_text())?;
    Ok(())
}

/// Reads a spec file, runs it and writes outputs to `output_dir` (or
/// `override_dir`) when one is given.
pub fn run_file(path: &Path, override_dir: Option<&Path>) -> Result<(RunSpec, RunReport)> {
    let text = fs::read_to_string(path)?;
    let spec = RunSpec::from_toml(&text)?;
    let mut report = run(&spec)?;
    let dir = override_dir
        .map(Path::to_path_buf)
        .or_else(|| spec.output_dir.clone());
    if let Some(dir) = dir {
        write_outputs(&mut report, &spec, Some(&text), &dir)?;
    }
    Ok((spec, report))
}

/// Column names of a convergence file.
pub const CONVERGENCE_HEADER: [&str; 4] = ["k", "E_k", "residual", "seconds"];

/// Writes `k, E_k, ‖w_k − v_k‖, cumulative seconds`, one row per iteration.
pub fn emit_convergence_csv(trace: &IterationTrace, path: &Path) -> Result<()> {
    if trace.records.is_empty() {
        return Err(SolverError::InvalidParameter("empty trace".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CONVERGENCE_HEADER).map_err(csv_err)?;
    let mut ns = 0u64;
    for r in &trace.records {
        ns += r.elapsed_ns;
        w.write_record([
            r.k.to_string(),
            fmt_f64(r.error),
            fmt_f64(r.residual),
            fmt_f64(ns as f64 * 1e-9),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed convergence file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceData {
    pub k: Vec<f64>,
    pub error: Vec<f64>,
    pub residual: Vec<f64>,
    pub seconds: Vec<f64>,
}

pub fn read_convergence_csv(path: &Path) -> Result<ConvergenceData> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != CONVERGENCE_HEADER {
        return Err(SolverError::Format(format!("unexpected header {header:?}")));
    }
    let mut out = ConvergenceData {
        k: Vec::new(),
        error: Vec::new(),
        residual: Vec::new(),
        seconds: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| SolverError::Format(format!("column {}: {e}", CONVERGENCE_HEADER[i])))
        };
        out.k.push(parse(0)?);
        out.error.push(parse(1)?);
        out.residual.push(parse(2)?);
        out.seconds.push(parse(3)?);
    }
    Ok(out)
}

/// Rate slope computed from a convergence file.
pub fn rate_from_csv(path: &Path) -> Result<f64> {
    let data = read_convergence_csv(path)?;
    rate_from_series(&data.k, &data.residual)
}

/// Whether a terminal status counts as reaching the tolerance.
pub fn reached_tolerance(status: TerminalStatus) -> bool {
    matches!(status, TerminalStatus::Converged | TerminalStatus::PhiZero)
}
