//! Per-iteration records, stopping rules and the iteration driver shared by
//! every method, so that traces from different solvers have one schema.

use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::space::InnerProductSpace;

/// Iterate norms beyond this are reported as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e150;

/// Relative slack for the δ-bound and φ-sandwich checks. Both sides are
/// same-scale quantities, so this only absorbs rounding in the last bits.
pub const INVARIANT_REL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingKind {
    /// `E_k = ‖u_{k+1} − u_k‖ ≤ tol`.
    SuccessiveDiff,
    /// `E_k = ‖u_{k+1} − u*‖² ≤ tol` against a reference point.
    DistanceToReference,
    /// `E_k = ‖u_{k+1} − u*‖² / d ≤ tol`, the per-component mean squared error.
    MeanSquaredError,
    /// `E_k = ‖w_k − v_k‖ ≤ tol`.
    Residual,
    IterCapOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    pub kind: StoppingKind,
    pub tol: f64,
    pub reference: Option<Array1<f64>>,
}

impl StoppingRule {
    pub fn successive_diff(tol: f64) -> Self {
        Self {
            kind: StoppingKind::SuccessiveDiff,
            tol,
            reference: None,
        }
    }

    pub fn distance_to_reference(tol: f64, reference: Array1<f64>) -> Self {
        Self {
            kind: StoppingKind::DistanceToReference,
            tol,
            reference: Some(reference),
        }
    }

    pub fn mean_squared_error(tol: f64, reference: Array1<f64>) -> Self {
        Self {
            kind: StoppingKind::MeanSquaredError,
            tol,
            reference: Some(reference),
        }
    }

    pub fn residual(tol: f64) -> Self {
        Self {
            kind: StoppingKind::Residual,
            tol,
            reference: None,
        }
    }

    pub fn iter_cap_only() -> Self {
        Self {
            kind: StoppingKind::IterCapOnly,
            tol: 0.0,
            reference: None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.kind != StoppingKind::IterCapOnly && !(self.tol > 0.0) {
            return Err(SolverError::InvalidParameter(format!(
                "stopping tolerance must be positive, got {}",
                self.tol
            )));
        }
        match (&self.kind, &self.reference) {
            (StoppingKind::DistanceToReference | StoppingKind::MeanSquaredError, None) => {
                Err(SolverError::InvalidParameter(
                    "reference-based stopping requires a reference point".into(),
                ))
            }
            (_, Some(r)) => crate::error::check_dim(dim, r.len()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalStatus {
    Converged,
    PhiZero,
    IterCap,
    Diverged,
    BacktrackExhausted,
}

impl TerminalStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminalStatus::Converged => "Converged",
            TerminalStatus::PhiZero => "PhiZero",
            TerminalStatus::IterCap => "IterCap",
            TerminalStatus::Diverged => "Diverged",
            TerminalStatus::BacktrackExhausted => "BacktrackExhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DeltaBound,
    PhiSandwich,
    Fejer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub kind: ViolationKind,
    /// The quantity that should have been within bounds.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Inertial weight `ϑ_k` (0 for methods without inertia).
    pub inertia: f64,
    /// Step `λ_k`.
    pub step: f64,
    /// Backtracking exponent `j_k`; `None` for fixed-step methods.
    pub backtracks: Option<u32>,
    /// Contraction scalar (`δ_k`, `α_k` or `η_k`) when the method has one.
    pub delta: Option<f64>,
    /// `‖w_k − v_k‖`.
    pub residual: f64,
    /// `‖φ(w_k, v_k)‖` when the method forms φ.
    pub phi_norm: Option<f64>,
    /// `‖u_{k+1} − u_k‖`.
    pub step_norm: f64,
    /// Value of the active stopping metric `E_k`.
    pub error: f64,
    /// `‖u_{k+1} − u*‖²` when a reference point is known.
    pub dist_sq: Option<f64>,
    pub elapsed_ns: u64,
    pub forward_evals: usize,
    pub resolvent_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub method: String,
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
    pub violations: Vec<Violation>,
    /// Error message for abnormal termination.
    pub message: Option<String>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn min_step(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.step)
            .fold(None, |m, s| Some(m.map_or(s, |m: f64| m.min(s))))
    }

    pub fn delta_range(&self) -> Option<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.delta)
            .fold(None, |acc, d| {
                Some(match acc {
                    None => (d, d),
                    Some((lo, hi)) => (lo.min(d), hi.max(d)),
                })
            })
    }

    pub fn total_forward_evals(&self) -> usize {
        self.records.iter().map(|r| r.forward_evals).sum()
    }

    pub fn total_resolvent_evals(&self) -> usize {
        self.records.iter().map(|r| r.resolvent_evals).sum()
    }

    pub fn total_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.elapsed_ns).sum::<u64>() as f64 * 1e-9
    }

    pub fn final_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.error)
    }

    pub fn final_dist_sq(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.dist_sq)
    }
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub solution: Array1<f64>,
    pub trace: IterationTrace,
}

/// What one method step hands back to the driver.
#[derive(Debug, Clone)]
pub(crate) struct StepOutput {
    pub next: Array1<f64>,
    pub inertia: f64,
    pub step: f64,
    pub backtracks: Option<u32>,
    pub delta: Option<f64>,
    pub residual: f64,
    pub phi_norm: Option<f64>,
    pub phi_zero: bool,
    pub forward_evals: usize,
    pub resolvent_evals: usize,
    /// Acceptance ratio σ when the δ-bound and φ-sandwich must hold.
    pub bounds_sigma: Option<f64>,
    /// `(w_k, γ(2−γ)⟨w−v,φ⟩²/‖φ‖²)` for the Fejér check.
    pub fejer: Option<(Array1<f64>, f64)>,
}

pub(crate) struct DriverConfig<'a> {
    pub method: &'a str,
    pub space: &'a InnerProductSpace,
    pub stop: &'a StoppingRule,
    pub max_iters: usize,
    pub check_invariants: bool,
    /// Exact solution `u*`: enables the Fejér check and, absent a stopping
    /// reference, `dist_sq`.
    pub known_solution: Option<&'a Array1<f64>>,
}

pub(crate) fn check_bounds(
    k: usize,
    sigma: f64,
    delta: Option<f64>,
    residual: f64,
    phi_norm: Option<f64>,
    out: &mut Vec<Violation>,
) {
    let slack = |x: f64| x.abs() * INVARIANT_REL_SLACK;
    if let Some(delta) = delta {
        let lower = (1.0 - sigma) / ((1.0 + sigma) * (1.0 + sigma));
        let upper = 1.0 / (1.0 - sigma);
        if delta < lower - slack(lower) || delta > upper + slack(upper) {
            out.push(Violation {
                k,
                kind: ViolationKind::DeltaBound,
                value: delta,
                lower,
                upper,
            });
        }
    }
    if let Some(phi) = phi_norm {
        let lower = (1.0 - sigma) * residual;
        let upper = (1.0 + sigma) * residual;
        if phi < lower - slack(lower) || phi > upper + slack(upper) {
            out.push(Violation {
                k,
                kind: ViolationKind::PhiSandwich,
                value: phi,
                lower,
                upper,
            });
        }
    }
}

/// Runs `step(u_prev, u_curr, k)` for `k = 1, 2, ...` from the pair `(u0, u1)`.
pub(crate) fn drive<F>(
    cfg: DriverConfig<'_>,
    u0: ArrayView1<f64>,
    u1: ArrayView1<f64>,
    mut step: F,
) -> Result<SolveOutput>
where
    F: FnMut(ArrayView1<f64>, ArrayView1<f64>, usize) -> Result<StepOutput>,
{
    let space = cfg.space;
    space.check(&u0)?;
    space.check(&u1)?;
    cfg.stop.validate(space.dim())?;
    if cfg.max_iters == 0 {
        return Err(SolverError::InvalidParameter(
            "max_iters must be positive".into(),
        ));
    }
    if let Some(r) = cfg.known_solution {
        space.check(&r.view())?;
    }
    let reference = cfg.stop.reference.as_ref().or(cfg.known_solution);
    let solution = cfg.known_solution;

    let mut prev = u0.to_owned();
    let mut curr = u1.to_owned();
    let mut records = Vec::new();
    let mut violations = Vec::new();
    let fejer_eps = solution.map(|r| 1e-8 * (1.0 + space.norm_sq(&r.view())));

    for k in 1..=cfg.max_iters {
        let t0 = Instant::now();
        let out = match step(prev.view(), curr.view(), k) {
            Ok(out) => out,
            Err(e) => {
                let status = match e {
                    SolverError::BacktrackExhausted { .. } => TerminalStatus::BacktrackExhausted,
                    SolverError::NonFiniteIterate(_) | SolverError::Diverged { .. } => {
                        TerminalStatus::Diverged
                    }
                    other => return Err(other),
                };
                return Ok(SolveOutput {
                    solution: curr,
                    trace: IterationTrace {
                        method: cfg.method.to_string(),
                        records,
                        status,
                        violations,
                        message: Some(e.to_string()),
                    },
                });
            }
        };
        let elapsed_ns = t0.elapsed().as_nanos() as u64;

        let next = out.next;
        let next_norm = space.norm(&next.view());
        let diverged = !next_norm.is_finite() || next_norm > DIVERGENCE_THRESHOLD;

        let diff = &next - &curr;
        let step_norm = space.norm(&diff.view());
        let dist_sq = reference.map(|r| {
            let e = &next - r;
            space.norm_sq(&e.view())
        });
        let error = match cfg.stop.kind {
            StoppingKind::SuccessiveDiff => step_norm,
            StoppingKind::DistanceToReference => dist_sq.unwrap_or(f64::NAN),
            StoppingKind::MeanSquaredError => dist_sq.unwrap_or(f64::NAN) / space.dim() as f64,
            StoppingKind::Residual => out.residual,
            StoppingKind::IterCapOnly => dist_sq.unwrap_or(step_norm),
        };

        if cfg.check_invariants && !diverged {
            if let Some(sigma) = out.bounds_sigma {
                check_bounds(
                    k,
                    sigma,
                    out.delta,
                    out.residual,
                    out.phi_norm,
                    &mut violations,
                );
            }
            if let (Some(r), Some((w, decrement)), Some(eps)) = (solution, &out.fejer, fejer_eps) {
                let en = &next - r;
                let lhs = space.norm_sq(&en.view());
                let ew = w - r;
                let rhs = space.norm_sq(&ew.view()) - decrement;
                if lhs > rhs + eps {
                    violations.push(Violation {
                        k,
                        kind: ViolationKind::Fejer,
                        value: lhs,
                        lower: f64::NEG_INFINITY,
                        upper: rhs + eps,
                    });
                }
            }
        }

        records.push(IterationRecord {
            k,
            inertia: out.inertia,
            step: out.step,
            backtracks: out.backtracks,
            delta: out.delta,
            residual: out.residual,
            phi_norm: out.phi_norm,
            step_norm,
            error,
            dist_sq,
            elapsed_ns,
            forward_evals: out.forward_evals,
            resolvent_evals: out.resolvent_evals,
        });

        let status = if diverged {
            Some(TerminalStatus::Diverged)
        } else if out.phi_zero {
            Some(TerminalStatus::PhiZero)
        } else if cfg.stop.kind != StoppingKind::IterCapOnly && error <= cfg.stop.tol {
            Some(TerminalStatus::Converged)
        } else {
            None
        };

        if diverged {
            return Ok(SolveOutput {
                solution: curr,
                trace: IterationTrace {
                    method: cfg.method.to_string(),
                    records,
                    status: TerminalStatus::Diverged,
                    violations,
                    message: Some(format!("iterate norm {next_norm:e} at k = {k}")),
                },
            });
        }
        prev = std::mem::replace(&mut curr, next);
        if let Some(status) = status {
            return Ok(SolveOutput {
                solution: curr,
                trace: IterationTrace {
                    method: cfg.method.to_string(),
                    records,
                    status,
                    violations,
                    message: None,
                },
            });
        }
    }

    Ok(SolveOutput {
        solution: curr,
        trace: IterationTrace {
            method: cfg.method.to_string(),
            records,
            status: TerminalStatus::IterCap,
            violations,
            message: None,
        },
    })
}
