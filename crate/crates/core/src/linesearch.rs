//! Armijo-type backtracking for the forward-backward step size.
//!
//! Trial steps are `λ = s μ^j`, `j = 0, 1, ...`. A trial is accepted once
//!
//! ```text
//! λ ‖B(w) − B(v)‖ ≤ σ ‖w − v‖,    v = J_{λA}(w − λ B(w))
//! ```
//!
//! holds, with the same `λ` used inside the resolvent and on the left side.
//! The comparison is an exact floating-point `≤`.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::operators::{ForwardOperator, Resolvent};
use crate::space::InnerProductSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSearchParams {
    /// Initial trial step `s > 0`.
    pub initial_step: f64,
    /// Backtracking factor `μ ∈ (0, 1)`.
    pub shrink: f64,
    /// Acceptance ratio `σ ∈ (0, 1)`.
    pub acceptance: f64,
    pub max_backtracks: u32,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            acceptance: 0.9,
            max_backtracks: 60,
        }
    }
}

impl LineSearchParams {
    pub fn new(initial_step: f64, shrink: f64, acceptance: f64) -> Result<Self> {
        let p = Self {
            initial_step,
            shrink,
            acceptance,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(SolverError::InvalidParameter(format!(
                "initial step must be positive, got {}",
                self.initial_step
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(SolverError::InvalidParameter(format!(
                "backtracking factor must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.acceptance > 0.0 && self.acceptance < 1.0) {
            return Err(SolverError::InvalidParameter(format!(
                "acceptance ratio must lie in (0, 1), got {}",
                self.acceptance
            )));
        }
        if self.max_backtracks == 0 {
            return Err(SolverError::InvalidParameter(
                "max_backtracks must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `s μ^j`.
    #[inline]
    pub fn step(&self, exponent: u32) -> f64 {
        self.initial_step * self.shrink.powi(exponent as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    /// Accepted step `λ = s μ^j`.
    pub step: f64,
    /// Accepted exponent `j`.
    pub exponent: u32,
    /// `v = J_{λA}(w − λ B(w))`.
    pub v: Array1<f64>,
    /// Cached `B(w)`.
    pub bw: Array1<f64>,
    /// Cached `B(v)`.
    pub bv: Array1<f64>,
    pub resolvent_evals: usize,
    pub forward_evals: usize,
}

/// Backtracks from `j = 0`.
pub fn backtrack(
    w: ArrayView1<f64>,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome> {
    backtrack_from(w, forward, resolvent, space, params, 0)
}

/// Backtracks starting at exponent `start`, returning the smallest
/// `j ≥ start` that passes the acceptance test.
pub fn backtrack_from(
    w: ArrayView1<f64>,
    forward: &dyn ForwardOperator,
    resolvent: &dyn Resolvent,
    space: &InnerProductSpace,
    params: &LineSearchParams,
    start: u32,
) -> Result<LineSearchOutcome> {
    space.check(&w)?;
    if w.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NonFiniteIterate("line search input"));
    }
    let bw = forward.eval(w);
    if bw.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NonFiniteIterate("forward operator"));
    }
    let mut forward_evals = 1;
    let mut resolvent_evals = 0;

    let mut j = start;
    loop {
        if j > params.max_backtracks {
            return Err(SolverError::BacktrackExhausted {
                max_backtracks: params.max_backtracks,
                last_step: params.step(params.max_backtracks),
            });
        }
        let step = params.step(j);
        let x = &w - &(&bw * step);
        let v = resolvent.apply(x.view(), step);
        resolvent_evals += 1;
        let bv = forward.eval(v.view());
        forward_evals += 1;

        let d = &w - &v;
        let db = &bw - &bv;
        let lhs = step * space.norm(&db.view());
        let rhs = params.acceptance * space.norm(&d.view());
        if !(lhs.is_finite() && rhs.is_finite()) {
            return Err(SolverError::NonFiniteIterate("line search trial"));
        }
        if lhs <= rhs {
            return Ok(LineSearchOutcome {
                step,
                exponent: j,
                v,
                bw,
                bv,
                resolvent_evals,
                forward_evals,
            });
        }
        j += 1;
    }
}
