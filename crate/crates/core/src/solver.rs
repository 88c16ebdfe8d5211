//! Inertial forward-backward contraction method.
//!
//! Each iteration extrapolates `w_k = u_k + ϑ_k (u_k − u_{k−1})`, picks
//! `λ_k = s μ^{j_k}` by backtracking, forms `v_k = J_{λ_k A}(w_k − λ_k B w_k)`
//! and the direction `φ = (w_k − v_k) − λ_k (B w_k − B v_k)`, then contracts
//!
//! ```text
//! u_{k+1} = w_k − γ δ_k φ,    δ_k = ⟨w_k − v_k, φ⟩ / ‖φ‖².
//! ```
//!
//! `B` only needs to be monotone and continuous: no Lipschitz constant is
//! used anywhere. The run stops early when `φ` vanishes, in which case `v_k`
//! solves the inclusion.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};

use crate::error::{check_dim, Result, SolverError};
use crate::inclusion::Inclusion;
use crate::linesearch::{backtrack_from, LineSearchParams};
use crate::operators::{ForwardOperator, Resolvent};
use crate::space::InnerProductSpace;
use crate::trace::{drive, DriverConfig, IterationTrace, SolveOutput, StepOutput, StoppingRule};

/// `𝓔 = ((2 − γ)/γ) ((1 − σ)/(1 + σ))⁴`.
pub fn contraction_constant(gamma: f64, sigma: f64) -> f64 {
    let r = (1.0 - sigma) / (1.0 + sigma);
    (2.0 - gamma) / gamma * r.powi(4)
}

/// Largest admissible inertial bound `𝓔 / (𝓔 + max{1, 𝓔})` (exclusive).
pub fn inertia_cap(gamma: f64, sigma: f64) -> f64 {
    let e = contraction_constant(gamma, sigma);
    e / (e + e.max(1.0))
}

/// Inertial weights `ϑ_k`.
#[derive(Clone)]
pub enum InertiaSchedule {
    /// `ϑ_k = ϑ` for all `k`; nondecreasing as the weak-convergence theory requires.
    Constant(f64),
    /// `ϑ_k = ϑ_max √k / (k + 5)`, the schedule used in the signal-recovery
    /// experiments. It decreases for `k > 5`.
    Damped { theta_max: f64 },
    Custom {
        theta_max: f64,
        label: String,
        f: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for InertiaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InertiaSchedule::Constant(t) => write!(f, "Constant({t})"),
            InertiaSchedule::Damped { theta_max } => {
                write!(f, "Damped {{ theta_max: {theta_max} }}")
            }
            InertiaSchedule::Custom {
                theta_max, label, ..
            } => write!(f, "Custom {{ theta_max: {theta_max}, label: {label:?} }}"),
        }
    }
}

impl InertiaSchedule {
    pub fn theta_max(&self) -> f64 {
        match self {
            InertiaSchedule::Constant(t) => *t,
            InertiaSchedule::Damped { theta_max } => *theta_max,
            InertiaSchedule::Custom { theta_max, .. } => *theta_max,
        }
    }

    /// `ϑ_k`, clamped into `[0, ϑ_max]` for custom schedules.
    pub fn value(&self, k: usize) -> f64 {
        match self {
            InertiaSchedule::Constant(t) => *t,
            InertiaSchedule::Damped { theta_max } => {
                let k = k as f64;
                theta_max * k.sqrt() / (k + 5.0)
            }
            InertiaSchedule::Custom { theta_max, f, .. } => f(k).clamp(0.0, *theta_max),
        }
    }

    pub fn mode(&self) -> &str {
        match self {
            InertiaSchedule::Constant(_) => "theory-constant",
            InertiaSchedule::Damped { .. } => "damped",
            InertiaSchedule::Custom { label, .. } => label,
        }
    }

    /// Whether the schedule is nondecreasing in `k`.
    pub fn is_nondecreasing(&self) -> bool {
        match self {
            InertiaSchedule::Constant(_) => true,
            InertiaSchedule::Damped { theta_max } => *theta_max == 0.0,
            InertiaSchedule::Custom { .. } => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.theta_max();
        if !(0.0..1.0).contains(&t) {
            return Err(SolverError::InvalidParameter(format!(
                "inertia bound must lie in [0, 1), got {t}"
            )));
        }
        Ok(())
    }
}

/// Parameters of the inertial forward-backward contraction method.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relaxation `γ ∈ (0, 2)`.
    pub gamma: f64,
    pub linesearch: LineSearchParams,
    pub inertia: InertiaSchedule,
    pub stop: StoppingRule,
    pub max_iters: usize,
    /// `φ` counts as zero when `‖φ‖ ≤ phi_zero_tol (1 + ‖w‖)`.
    pub phi_zero_tol: f64,
    pub check_invariants: bool,
    /// Start each backtrack from the previous exponent minus one instead of
    /// from `j = 0`. Off by default.
    pub warm_start: bool,
}

impl SolverConfig {
    /// `s = 1, μ = 0.5, σ = 0.9, γ = 1.9`, `ϑ_k = ϑ √k/(k+5)` with
    /// `ϑ = 0.99 𝓔/(𝓔 + max{1, 𝓔})`.
    pub fn benchmark_defaults(stop: StoppingRule) -> Self {
        let linesearch = LineSearchParams {
            initial_step: 1.0,
            shrink: 0.5,
            acceptance: 0.9,
            max_backtracks: 60,
        };
        let gamma = 1.9;
        let theta_max = 0.99 * inertia_cap(gamma, linesearch.acceptance);
        Self {
            gamma,
            linesearch,
            inertia: InertiaSchedule::Damped { theta_max },
            stop,
            max_iters: 1000,
            phi_zero_tol: 1e-14,
            check_invariants: true,
            warm_start: false,
        }
    }

    /// `benchmark_defaults` but with the constant (nondecreasing) inertia schedule.
    pub fn theory_defaults(stop: StoppingRule) -> Self {
        let mut cfg = Self::benchmark_defaults(stop);
        cfg.inertia = InertiaSchedule::Constant(cfg.inertia.theta_max());
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(SolverError::InvalidParameter(format!(
                "relaxation gamma must lie in (0, 2), got {}",
                self.gamma
            )));
        }
        if !(self.phi_zero_tol >= 0.0) {
            return Err(SolverError::InvalidParameter(format!(
                "phi_zero_tol must be nonnegative, got {}",
                self.phi_zero_tol
            )));
        }
        self.linesearch.validate()?;
        self.inertia.validate()
    }

    /// `𝓔` for the configured `γ, σ`.
    pub fn contraction_constant(&self) -> f64 {
        contraction_constant(self.gamma, self.linesearch.acceptance)
    }

    /// Theoretical bound on `ϑ_k` for weak convergence.
    pub fn inertia_cap(&self) -> f64 {
        inertia_cap(self.gamma, self.linesearch.acceptance)
    }

    /// Derived constants of the convergence analysis. `lambda_min` and
    /// `beta` (strong-monotonicity modulus of `A`) are problem metadata.
    pub fn analysis(&self, lambda_min: Option<f64>, beta: Option<f64>) -> AnalysisReport {
        let gamma = self.gamma;
        let sigma = self.linesearch.acceptance;
        let alpha = ((1.0 - sigma) / (1.0 + sigma)).powi(2);
        let e = self.contraction_constant();
        let theta = self.inertia.theta_max();
        let kappa = e - theta * (e + 1.0 + e.max(1.0));
        let weak_cap = self.inertia_cap();
        let strong = match (lambda_min, beta) {
            (Some(lmin), Some(beta)) => {
                let q = gamma * lmin * beta * alpha;
                let tau =
                    1.0 - 0.5 * alpha * (gamma * (2.0 - gamma)).min(2.0 * gamma * lmin * beta);
                Some(StrongAnalysis {
                    beta,
                    lambda_min: lmin,
                    q,
                    tau,
                    linear_cap: weak_cap.min((1.0 - tau) / tau),
                    beta_condition_holds: beta * gamma * lmin < 1.0,
                    squared_rate_bound: tau * (1.0 + theta),
                })
            }
            _ => None,
        };
        AnalysisReport {
            contraction_constant: e,
            alpha,
            weak_inertia_cap: weak_cap,
            kappa,
            inertia_within_cap: theta < weak_cap,
            inertia_mode: self.inertia.mode().to_string(),
            inertia_nondecreasing: self.inertia.is_nondecreasing(),
            strong,
        }
    }
}

/// Derived constants; read-only, never inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    /// `𝓔`.
    pub contraction_constant: f64,
    /// `((1 − σ)/(1 + σ))²`.
    pub alpha: f64,
    pub weak_inertia_cap: f64,
    /// `𝓔 − ϑ(𝓔 + 1 + max{1, 𝓔})`. Positive only for
    /// `ϑ < 𝓔/(𝓔 + 1 + max{1, 𝓔})`, which is tighter than `weak_inertia_cap`.
    pub kappa: f64,
    pub inertia_within_cap: bool,
    pub inertia_mode: String,
    pub inertia_nondecreasing: bool,
    pub strong: Option<StrongAnalysis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongAnalysis {
    pub beta: f64,
    pub lambda_min: f64,
    /// `γ λ_min β α`.
    pub q: f64,
    /// `1 − ½ α min{γ(2−γ), 2γλ_min β}`.
    pub tau: f64,
    /// `min{𝓔/(𝓔 + max{1, 𝓔}), (1 − τ)/τ}`.
    pub linear_cap: f64,
    /// `β γ λ_min < 1`.
    pub beta_condition_holds: bool,
    /// `τ (1 + ϑ)`, the per-step factor on the squared error bound.
    pub squared_rate_bound: f64,
}

/// One iteration of the method.
#[derive(Debug, Clone, PartialEq)]
pub struct IfbStep {
    pub next: Array1<f64>,
    pub w: Array1<f64>,
    pub v: Array1<f64>,
    pub inertia: f64,
    pub step: f64,
    pub exponent: u32,
    /// `δ_k`; `None` when `φ` vanished.
    pub delta: Option<f64>,
    /// `‖w − v‖`.
    pub residual: f64,
    pub phi_norm: f64,
    /// `⟨w − v, φ⟩`.
    pub phi_inner: f64,
    pub phi_zero: bool,
    pub forward_evals: usize,
    pub resolvent_evals: usize,
}

/// One iteration from `(u_{k−1}, u_k)`. On `φ ≈ 0` the returned `next` is `v_k`.
#[allow(clippy::too_many_arguments)]
pub fn ifb_step(
    u_prev: ArrayView1<f64>,
    u_curr: ArrayView1<f64>,
    k: usize,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    cfg: &SolverConfig,
) -> Result<IfbStep> {
    ifb_step_from(u_prev, u_curr, k, forward, resolvent, space, cfg, 0)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn ifb_step_from(
    u_prev: ArrayView1<f64>,
    u_curr: ArrayView1<f64>,
    k: usize,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    cfg: &SolverConfig,
    start_exponent: u32,
) -> Result<IfbStep> {
    check_dim(u_prev.len(), u_curr.len())?;
    space.check(&u_curr)?;
    let inertia = cfg.inertia.value(k);
    let w = if inertia == 0.0 {
        u_curr.to_owned()
    } else {
        &u_curr + &((&u_curr - &u_prev) * inertia)
    };

    let ls = backtrack_from(
        w.view(),
        forward,
        resolvent,
        space,
        &cfg.linesearch,
        start_exponent,
    )?;
    let step = ls.step;
    let d = &w - &ls.v;
    let db = &ls.bw - &ls.bv;
    let phi = &d - &(&db * step);

    let residual = space.norm(&d.view());
    let phi_norm_sq = space.norm_sq(&phi.view());
    let phi_norm = phi_norm_sq.sqrt();
    let phi_inner = space.dot(&d.view(), &phi.view());

    let w_norm = space.norm(&w.view());
    if phi_norm <= cfg.phi_zero_tol * (1.0 + w_norm) {
        return Ok(IfbStep {
            next: ls.v.clone(),
            w,
            v: ls.v,
            inertia,
            step,
            exponent: ls.exponent,
            delta: None,
            residual,
            phi_norm,
            phi_inner,
            phi_zero: true,
            forward_evals: ls.forward_evals,
            resolvent_evals: ls.resolvent_evals,
        });
    }

    let delta = phi_inner / phi_norm_sq;
    let next = &w - &(&phi * (cfg.gamma * delta));
    if next.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NonFiniteIterate("contraction update"));
    }
    Ok(IfbStep {
        next,
        w,
        v: ls.v,
        inertia,
        step,
        exponent: ls.exponent,
        delta: Some(delta),
        residual,
        phi_norm,
        phi_inner,
        phi_zero: false,
        forward_evals: ls.forward_evals,
        resolvent_evals: ls.resolvent_evals,
    })
}

/// Runs the method from `(u0, u1)`.
pub fn solve(
    problem: &Inclusion,
    u0: ArrayView1<f64>,
    u1: ArrayView1<f64>,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    solve_with_solution(problem, u0, u1, cfg, None)
}

/// As [`solve`], with an exact solution `u*` used for `dist_sq` (unless the
/// stopping rule has its own reference) and, when `check_invariants` is set,
/// for the per-iteration Fejér check
///
/// ```text
/// ‖u_{k+1} − u*‖² ≤ ‖w_k − u*‖² − γ(2 − γ) ⟨w_k − v_k, φ⟩² / ‖φ‖² + ε.
/// ```
pub fn solve_with_solution(
    problem: &Inclusion,
    u0: ArrayView1<f64>,
    u1: ArrayView1<f64>,
    cfg: &SolverConfig,
    known_solution: Option<&Array1<f64>>,
) -> Result<SolveOutput> {
    cfg.validate()?;
    let forward = problem.forward.as_ref();
    let resolvent = problem.resolvent.as_ref();
    let space = &problem.space;
    let gamma = cfg.gamma;
    let sigma = cfg.linesearch.acceptance;
    let mut last_exponent = 0u32;

    let driver = DriverConfig {
        method: "IFB",
        space,
        stop: &cfg.stop,
        max_iters: cfg.max_iters,
        check_invariants: cfg.check_invariants,
        known_solution,
    };
    drive(driver, u0, u1, |prev, curr, k| {
        let start = if cfg.warm_start {
            last_exponent.saturating_sub(1)
        } else {
            0
        };
        let s = ifb_step_from(prev, curr, k, forward, resolvent, space, cfg, start)?;
        last_exponent = s.exponent;
        let fejer = if s.phi_zero {
            None
        } else {
            let decrement =
                gamma * (2.0 - gamma) * s.phi_inner * s.phi_inner / (s.phi_norm * s.phi_norm);
            Some((s.w, decrement))
        };
        Ok(StepOutput {
            next: s.next,
            inertia: s.inertia,
            step: s.step,
            backtracks: Some(s.exponent),
            delta: s.delta,
            residual: s.residual,
            phi_norm: Some(s.phi_norm),
            phi_zero: s.phi_zero,
            forward_evals: s.forward_evals,
            resolvent_evals: s.resolvent_evals,
            bounds_sigma: (!s.phi_zero).then_some(sigma),
            fejer,
        })
    })
}

/// Minimum number of iterations [`rate_estimate`] accepts.
pub const MIN_RATE_ITERATIONS: usize = 50;

/// Least-squares slope of `log min_{j ≤ k} ‖w_j − v_j‖` against `log k`
/// over the trailing half of the trace.
pub fn rate_estimate(trace: &IterationTrace) -> Result<f64> {
    let ks: Vec<f64> = trace.records.iter().map(|r| r.k as f64).collect();
    let res: Vec<f64> = trace.records.iter().map(|r| r.residual).collect();
    rate_from_series(&ks, &res)
}

/// [`rate_estimate`] on raw `(k, ‖w_k − v_k‖)` columns.
pub fn rate_from_series(ks: &[f64], residuals: &[f64]) -> Result<f64> {
    if ks.len() != residuals.len() {
        return Err(SolverError::DimensionMismatch {
            expected: ks.len(),
            got: residuals.len(),
        });
    }
    let n = ks.len();
    if n < MIN_RATE_ITERATIONS {
        return Err(SolverError::InsufficientTrace {
            got: n,
            need: MIN_RATE_ITERATIONS,
        });
    }
    let mut running = f64::INFINITY;
    let mins: Vec<f64> = residuals
        .iter()
        .map(|&r| {
            running = running.min(r);
            running
        })
        .collect();

    let start = n / 2;
    let mut xs = Vec::with_capacity(n - start);
    let mut ys = Vec::with_capacity(n - start);
    for i in start..n {
        if !(mins[i] > 0.0) || !(ks[i] > 0.0) {
            return Err(SolverError::NonPositiveResidual(ks[i] as usize));
        }
        xs.push(ks[i].ln());
        ys.push(mins[i].ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
