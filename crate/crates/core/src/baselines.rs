//! Comparison methods: forward-backward (FB), Tseng's forward-backward-forward,
//! the projection-contraction method of Zhang and Wang (ZW), the inertial
//! viscosity method of Tan and Cho (TC) and the projection-like method of
//! Jia and Xu (JX).
//!
//! All of them share the operator traits, the Armijo search in
//! [`crate::linesearch`] and the trace schema in [`crate::trace`].

use ndarray::{Array1, ArrayView1};

use crate::error::{check_dim, Result, SolverError};
use crate::inclusion::Inclusion;
use crate::linesearch::{backtrack, LineSearchParams};
use crate::operators::{ForwardOperator, Resolvent};
use crate::space::InnerProductSpace;
use crate::trace::{drive, DriverConfig, SolveOutput, StepOutput, StoppingRule};

/// How a fixed-step baseline picks `λ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `λ_k = k / (1 + k)`.
    Harmonic,
    /// Backtracking with the shared Armijo rule.
    Armijo(LineSearchParams),
}

impl StepSchedule {
    fn fixed(&self, k: usize) -> Option<f64> {
        match self {
            StepSchedule::Constant(l) => Some(*l),
            StepSchedule::Harmonic => Some(k as f64 / (1.0 + k as f64)),
            StepSchedule::Armijo(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            StepSchedule::Constant(l) if !(*l > 0.0 && l.is_finite()) => Err(
                SolverError::InvalidParameter(format!("step must be positive, got {l}")),
            ),
            StepSchedule::Armijo(p) => p.validate(),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StepSchedule::Constant(_) => "constant",
            StepSchedule::Harmonic => "k/(k+1)",
            StepSchedule::Armijo(_) => "armijo",
        }
    }
}

/// Which of the two readings of the Tan-Cho update to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcReading {
    /// `v` from `w`, direction `φ(w, v)` throughout.
    Consistent,
    /// As displayed: line search and `v` from `u_k`, `η` from `φ(w, v)`,
    /// update along `φ(u, v)`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcParams {
    pub linesearch: LineSearchParams,
    pub gamma: f64,
    /// `μ` in `η_k = (1 − μ)‖w − v‖² / ‖φ‖²`.
    pub mu: f64,
    /// Inertia cap `ϑ`.
    pub theta: f64,
    /// `ε_k = epsilon_scale / (k + 1)²`.
    pub epsilon_scale: f64,
    /// Viscosity map `f(x) = contraction · x`.
    pub contraction: f64,
    pub reading: TcReading,
}

impl Default for TcParams {
    fn default() -> Self {
        Self {
            linesearch: LineSearchParams {
                initial_step: 2.0,
                shrink: 0.5,
                acceptance: 0.5,
                max_backtracks: 60,
            },
            gamma: 1.0,
            mu: 0.5,
            theta: 0.5,
            epsilon_scale: 100.0,
            contraction: 0.5,
            reading: TcReading::Consistent,
        }
    }
}

impl TcParams {
    /// `α_k = 1 / (k + 1)`.
    pub fn alpha(&self, k: usize) -> f64 {
        1.0 / (k as f64 + 1.0)
    }

    pub fn epsilon(&self, k: usize) -> f64 {
        let k1 = k as f64 + 1.0;
        self.epsilon_scale / (k1 * k1)
    }

    fn validate(&self) -> Result<()> {
        self.linesearch.validate()?;
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(SolverError::InvalidParameter(format!(
                "TC gamma must lie in (0, 2), got {}",
                self.gamma
            )));
        }
        if !(self.mu >= 0.0 && self.mu < 1.0) {
            return Err(SolverError::InvalidParameter(format!(
                "TC mu must lie in [0, 1), got {}",
                self.mu
            )));
        }
        if !(self.theta >= 0.0) || !(self.contraction >= 0.0 && self.contraction < 1.0) {
            return Err(SolverError::InvalidParameter(
                "TC needs theta >= 0 and a contraction factor in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineMethod {
    Fb { step: StepSchedule },
    Tseng { linesearch: LineSearchParams },
    Zw { step: StepSchedule, gamma: f64 },
    Tc(TcParams),
    Jx { linesearch: LineSearchParams },
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Fb { .. } => "FB",
            BaselineMethod::Tseng { .. } => "Tseng",
            BaselineMethod::Zw { .. } => "ZW",
            BaselineMethod::Tc(_) => "TC",
            BaselineMethod::Jx { .. } => "JX",
        }
    }

    /// ZW with `λ_k = k/(1+k)` and relaxation `0.5`.
    pub fn zw_default() -> Self {
        BaselineMethod::Zw {
            step: StepSchedule::Harmonic,
            gamma: 0.5,
        }
    }

    pub fn tc_default() -> Self {
        BaselineMethod::Tc(TcParams::default())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaselineMethod::Fb { step } => step.validate(),
            BaselineMethod::Tseng { linesearch } | BaselineMethod::Jx { linesearch } => {
                linesearch.validate()
            }
            BaselineMethod::Zw { step, gamma } => {
                if !(*gamma > 0.0 && *gamma < 2.0) {
                    return Err(SolverError::InvalidParameter(format!(
                        "ZW gamma must lie in (0, 2), got {gamma}"
                    )));
                }
                step.validate()
            }
            BaselineMethod::Tc(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub stop: StoppingRule,
    pub max_iters: usize,
    pub phi_zero_tol: f64,
    pub check_invariants: bool,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, stop: StoppingRule) -> Self {
        Self {
            method,
            stop,
            max_iters: 1000,
            phi_zero_tol: 1e-14,
            check_invariants: true,
        }
    }
}

/// Output of one baseline iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineStep {
    pub next: Array1<f64>,
    pub v: Array1<f64>,
    pub step: f64,
    /// Backtracking exponent, for Armijo-driven steps.
    pub exponent: Option<u32>,
    pub inertia: f64,
    /// `α_k` (ZW, JX) or `η_k` (TC).
    pub coefficient: Option<f64>,
    /// `‖w − v‖` (`‖u − v‖` without inertia).
    pub residual: f64,
    pub phi_norm: Option<f64>,
    pub phi_zero: bool,
    pub forward_evals: usize,
    pub resolvent_evals: usize,
}

fn finite(x: &Array1<f64>, what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SolverError::NonFiniteIterate(what))
    }
}

/// `J(u − λB(u), λ)`.
pub fn fb_step(
    u: ArrayView1<f64>,
    step: f64,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
) -> Result<Array1<f64>> {
    if !(step > 0.0) {
        return Err(SolverError::InvalidParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    let bu = forward.eval(u);
    let x = &u - &(&bu * step);
    let next = resolvent.apply(x.view(), step);
    finite(&next, "forward-backward step")?;
    Ok(next)
}

/// Tseng: `v = J(u − λB(u), λ)` with Armijo `λ`, then `u⁺ = v − λ(B(v) − B(u))`.
pub fn tseng_step(
    u: ArrayView1<f64>,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    linesearch: &LineSearchParams,
) -> Result<BaselineStep> {
    let ls = backtrack(u, forward, resolvent, space, linesearch)?;
    let db = &ls.bv - &ls.bw;
    let next = &ls.v - &(&db * ls.step);
    finite(&next, "Tseng step")?;
    let d = &u - &ls.v;
    Ok(BaselineStep {
        next,
        residual: space.norm(&d.view()),
        v: ls.v,
        step: ls.step,
        exponent: Some(ls.exponent),
        inertia: 0.0,
        coefficient: None,
        phi_norm: None,
        phi_zero: false,
        forward_evals: ls.forward_evals,
        resolvent_evals: ls.resolvent_evals,
    })
}

/// Projection-contraction update from `u` given `v`, `B(u)`, `B(v)` and `λ`:
/// `φ = (u − v) − λ(B(u) − B(v))`, `α = ⟨u − v, φ⟩/‖φ‖²`, `u⁺ = u − γαφ`.
#[allow(clippy::too_many_arguments)]
fn contraction(
    u: ArrayView1<f64>,
    v: Array1<f64>,
    bu: &Array1<f64>,
    bv: &Array1<f64>,
    step: f64,
    gamma: f64,
    phi_zero_tol: f64,
    space: &InnerProductSpace,
) -> (Array1<f64>, Array1<f64>, Option<f64>, f64, f64, bool) {
    let d = &u - &v;
    let db = bu - bv;
    let phi = &d - &(&db * step);
    let residual = space.norm(&d.view());
    let phi_norm_sq = space.norm_sq(&phi.view());
    let phi_norm = phi_norm_sq.sqrt();
    let phi_inner = space.dot(&d.view(), &phi.view());
    let u_norm = space.norm(&u);
    if phi_norm <= phi_zero_tol * (1.0 + u_norm) {
        return (u.to_owned(), v, None, residual, phi_norm, true);
    }
    let alpha = phi_inner / phi_norm_sq;
    let next = &u - &(&phi * (gamma * alpha));
    (next, v, Some(alpha), residual, phi_norm, false)
}

/// ZW step with a given `λ`. If `φ ≈ 0` the input `u` is returned and flagged.
#[allow(clippy::too_many_arguments)]
pub fn zw_step(
    u: ArrayView1<f64>,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    step: f64,
    gamma: f64,
    phi_zero_tol: f64,
) -> Result<BaselineStep> {
    if !(step > 0.0) || !(gamma > 0.0 && gamma < 2.0) {
        return Err(SolverError::InvalidParameter(format!(
            "ZW needs step > 0 and gamma in (0, 2), got {step}, {gamma}"
        )));
    }
    let bu = forward.eval(u);
    let x = &u - &(&bu * step);
    let v = resolvent.apply(x.view(), step);
    let bv = forward.eval(v.view());
    let (next, v, alpha, residual, phi_norm, phi_zero) =
        contraction(u, v, &bu, &bv, step, gamma, phi_zero_tol, space);
    finite(&next, "ZW step")?;
    Ok(BaselineStep {
        next,
        v,
        step,
        exponent: None,
        inertia: 0.0,
        coefficient: alpha,
        residual,
        phi_norm: Some(phi_norm),
        phi_zero,
        forward_evals: 2,
        resolvent_evals: 1,
    })
}

/// ZW step with `λ` chosen by the shared Armijo search.
pub fn zw_step_armijo(
    u: ArrayView1<f64>,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    linesearch: &LineSearchParams,
    gamma: f64,
    phi_zero_tol: f64,
) -> Result<BaselineStep> {
    let ls = backtrack(u, forward, resolvent, space, linesearch)?;
    let (next, v, alpha, residual, phi_norm, phi_zero) =
        contraction(u, ls.v, &ls.bw, &ls.bv, ls.step, gamma, phi_zero_tol, space);
    finite(&next, "ZW step")?;
    Ok(BaselineStep {
        next,
        v,
        step: ls.step,
        exponent: Some(ls.exponent),
        inertia: 0.0,
        coefficient: alpha,
        residual,
        phi_norm: Some(phi_norm),
        phi_zero,
        forward_evals: ls.forward_evals,
        resolvent_evals: ls.resolvent_evals,
    })
}

/// JX: `v = P_K(u − λB(u))` with Armijo `λ`, `u⁺ = u − αφ`.
pub fn jx_step(
    u: ArrayView1<f64>,
    forward: &dyn ForwardOperator,
    projection: &dyn Resolvent,
    space: &InnerProductSpace,
    linesearch: &LineSearchParams,
    phi_zero_tol: f64,
) -> Result<BaselineStep> {
    let ls = backtrack(u, forward, projection, space, linesearch)?;
    let d = &u - &ls.v;
    let db = &ls.bw - &ls.bv;
    let phi = &d - &(&db * ls.step);
    let residual = space.norm(&d.view());
    let phi_norm_sq = space.norm_sq(&phi.view());
    let phi_norm = phi_norm_sq.sqrt();
    let phi_inner = space.dot(&d.view(), &phi.view());
    let (next, alpha, phi_zero) = if phi_norm <= phi_zero_tol * (1.0 + space.norm(&u)) {
        (u.to_owned(), None, true)
    } else {
        let alpha = phi_inner / phi_norm_sq;
        (&u - &(&phi * alpha), Some(alpha), false)
    };
    finite(&next, "JX step")?;
    Ok(BaselineStep {
        next,
        v: ls.v,
        step: ls.step,
        exponent: Some(ls.exponent),
        inertia: 0.0,
        coefficient: alpha,
        residual,
        phi_norm: Some(phi_norm),
        phi_zero,
        forward_evals: ls.forward_evals,
        resolvent_evals: ls.resolvent_evals,
    })
}

/// TC inertial weight: `min{ε_k / ‖u_k − u_{k−1}‖, ϑ}`, or `ϑ` when the iterates coincide.
pub fn tc_inertia(
    u_prev: ArrayView1<f64>,
    u_curr: ArrayView1<f64>,
    epsilon: f64,
    theta: f64,
    space: &InnerProductSpace,
) -> f64 {
    let diff = &u_curr - &u_prev;
    let n = space.norm(&diff.view());
    if n > 0.0 {
        (epsilon / n).min(theta)
    } else {
        theta
    }
}

/// One TC iteration with explicit `α_k` and `ε_k`.
#[allow(clippy::too_many_arguments)]
pub fn tc_step(
    u_prev: ArrayView1<f64>,
    u_curr: ArrayView1<f64>,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    params: &TcParams,
    alpha_k: f64,
    epsilon_k: f64,
) -> Result<BaselineStep> {
    check_dim(u_prev.len(), u_curr.len())?;
    if !(alpha_k > 0.0 && alpha_k < 1.0) {
        return Err(SolverError::InvalidParameter(format!(
            "TC alpha_k must lie in (0, 1), got {alpha_k}"
        )));
    }
    let inertia = tc_inertia(u_prev, u_curr, epsilon_k, params.theta, space);
    let w = if inertia == 0.0 {
        u_curr.to_owned()
    } else {
        &u_curr + &((&u_curr - &u_prev) * inertia)
    };

    let (z, v, step, exponent, eta, residual, phi_norm, fe, re) = match params.reading {
        TcReading::Consistent => {
            let ls = backtrack(w.view(), forward, resolvent, space, &params.linesearch)?;
            let d = &w - &ls.v;
            let db = &ls.bw - &ls.bv;
            let phi = &d - &(&db * ls.step);
            let residual_sq = space.norm_sq(&d.view());
            let phi_norm_sq = space.norm_sq(&phi.view());
            let eta = if phi_norm_sq > 0.0 {
                (1.0 - params.mu) * residual_sq / phi_norm_sq
            } else {
                0.0
            };
            let z = &w - &(&phi * (params.gamma * eta));
            (
                z,
                ls.v,
                ls.step,
                ls.exponent,
                eta,
                residual_sq.sqrt(),
                phi_norm_sq.sqrt(),
                ls.forward_evals,
                ls.resolvent_evals,
            )
        }
        TcReading::Literal => {
            let ls = backtrack(u_curr, forward, resolvent, space, &params.linesearch)?;
            let bw = forward.eval(w.view());
            let d_wv = &w - &ls.v;
            let phi_wv = &d_wv - &(&(&bw - &ls.bv) * ls.step);
            let d_uv = &u_curr - &ls.v;
            let phi_uv = &d_uv - &(&(&ls.bw - &ls.bv) * ls.step);
            let residual_sq = space.norm_sq(&d_wv.view());
            let phi_norm_sq = space.norm_sq(&phi_wv.view());
            let eta = if phi_norm_sq > 0.0 {
                (1.0 - params.mu) * residual_sq / phi_norm_sq
            } else {
                0.0
            };
            let z = &w - &(&phi_uv * (params.gamma * eta));
            (
                z,
                ls.v,
                ls.step,
                ls.exponent,
                eta,
                residual_sq.sqrt(),
                phi_norm_sq.sqrt(),
                ls.forward_evals + 1,
                ls.resolvent_evals,
            )
        }
    };

    let fu = &u_curr * params.contraction;
    let next = &(&fu * alpha_k) + &(&z * (1.0 - alpha_k));
    finite(&next, "TC step")?;
    Ok(BaselineStep {
        next,
        v,
        step,
        exponent: Some(exponent),
        inertia,
        coefficient: Some(eta),
        residual,
        phi_norm: Some(phi_norm),
        phi_zero: false,
        forward_evals: fe,
        resolvent_evals: re,
    })
}

/// Runs a baseline from `(u0, u1)`. Methods without inertia start from `u1`.
/// `known_solution` only feeds `dist_sq`; baselines have no Fejér check.
pub fn solve_baseline(
    problem: &Inclusion,
    u0: ArrayView1<f64>,
    u1: ArrayView1<f64>,
    cfg: &BaselineConfig,
    known_solution: Option<&Array1<f64>>,
) -> Result<SolveOutput> {
    cfg.method.validate()?;
    let forward = problem.forward.as_ref();
    let resolvent = problem.resolvent.as_ref();
    let space = &problem.space;
    let tol = cfg.phi_zero_tol;
    let method = cfg.method.clone();

    let driver = DriverConfig {
        method: method.name(),
        space,
        stop: &cfg.stop,
        max_iters: cfg.max_iters,
        check_invariants: cfg.check_invariants,
        known_solution,
    };
    drive(driver, u0, u1, move |prev, curr, k| {
        let (s, bounds_sigma) = match &method {
            BaselineMethod::Fb { step } => {
                let s = match step.fixed(k) {
                    Some(l) => {
                        let next = fb_step(curr, l, forward, resolvent)?;
                        let d = &curr - &next;
                        BaselineStep {
                            residual: space.norm(&d.view()),
                            v: next.clone(),
                            next,
                            step: l,
                            exponent: None,
                            inertia: 0.0,
                            coefficient: None,
                            phi_norm: None,
                            phi_zero: false,
                            forward_evals: 1,
                            resolvent_evals: 1,
                        }
                    }
                    None => {
                        let StepSchedule::Armijo(p) = step else {
                            unreachable!()
                        };
                        let ls = backtrack(curr, forward, resolvent, space, p)?;
                        let d = &curr - &ls.v;
                        BaselineStep {
                            residual: space.norm(&d.view()),
                            next: ls.v.clone(),
                            v: ls.v,
                            step: ls.step,
                            exponent: Some(ls.exponent),
                            inertia: 0.0,
                            coefficient: None,
                            phi_norm: None,
                            phi_zero: false,
                            forward_evals: ls.forward_evals,
                            resolvent_evals: ls.resolvent_evals,
                        }
                    }
                };
                (s, None)
            }
            BaselineMethod::Tseng { linesearch } => (
                tseng_step(curr, forward, resolvent, space, linesearch)?,
                None,
            ),
            BaselineMethod::Zw { step, gamma } => match step {
                StepSchedule::Armijo(p) => (
                    zw_step_armijo(curr, forward, resolvent, space, p, *gamma, tol)?,
                    Some(p.acceptance),
                ),
                fixed => {
                    let l = fixed.fixed(k).expect("fixed schedule");
                    (
                        zw_step(curr, forward, resolvent, space, l, *gamma, tol)?,
                        None,
                    )
                }
            },
            BaselineMethod::Tc(p) => (
                tc_step(
                    prev,
                    curr,
                    forward,
                    resolvent,
                    space,
                    p,
                    p.alpha(k),
                    p.epsilon(k),
                )?,
                None,
            ),
            BaselineMethod::Jx { linesearch } => (
                jx_step(curr, forward, resolvent, space, linesearch, tol)?,
                Some(linesearch.acceptance),
            ),
        };
        Ok(StepOutput {
            inertia: s.inertia,
            step: s.step,
            backtracks: s.exponent,
            delta: s.coefficient,
            residual: s.residual,
            phi_norm: s.phi_norm,
            phi_zero: s.phi_zero,
            forward_evals: s.forward_evals,
            resolvent_evals: s.resolvent_evals,
            bounds_sigma: if s.phi_zero { None } else { bounds_sigma },
            fejer: None,
            next: s.next,
        })
    })
}
