//! Operator abstractions and the concrete operators used by the experiments.
//!
//! The inclusion `0 ∈ A(u) + B(u)` is accessed through two traits: the
//! single-valued monotone map `B` is a [`ForwardOperator`] (evaluation only)
//! and the maximal monotone `A` is exposed solely through its resolvent
//! `J_{λA} = (I + λA)^{-1}` as a [`Resolvent`]. Operators are pure; callers
//! count evaluations.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::{check_dim, Result, SolverError};

/// The single-valued map `B`.
pub trait ForwardOperator: Send + Sync {
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64>;

    fn label(&self) -> &str;

    /// Known Lipschitz constant, if any. Metadata only; no solver reads it.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

/// The resolvent `J_{λA}` of a maximal monotone operator `A`.
pub trait Resolvent: Send + Sync {
    fn apply(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64>;

    fn label(&self) -> &str;
}

impl<T: ForwardOperator + ?Sized> ForwardOperator for Arc<T> {
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64> {
        (**self).eval(u)
    }
    fn label(&self) -> &str {
        (**self).label()
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        (**self).lipschitz_hint()
    }
}

impl<T: Resolvent + ?Sized> Resolvent for Arc<T> {
    fn apply(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
        (**self).apply(x, lambda)
    }
    fn label(&self) -> &str {
        (**self).label()
    }
}

// ---------------------------------------------------------------------------
// Elementary maps
// ---------------------------------------------------------------------------

/// `B ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroMap;

impl ForwardOperator for ZeroMap {
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64> {
        Array1::zeros(u.len())
    }
    fn label(&self) -> &str {
        "zero"
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `B = I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl ForwardOperator for IdentityMap {
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64> {
        u.to_owned()
    }
    fn label(&self) -> &str {
        "identity"
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Wraps a closure as a forward operator.
#[derive(Clone)]
pub struct FnForward<F> {
    label: String,
    f: F,
}

impl<F> FnForward<F>
where
    F: Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<F> ForwardOperator for FnForward<F>
where
    F: Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync,
{
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64> {
        (self.f)(u)
    }
    fn label(&self) -> &str {
        &self.label
    }
}

impl<F> fmt::Debug for FnForward<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnForward")
            .field("label", &self.label)
            .finish()
    }
}

/// Wraps a closure `(x, λ) -> J(x, λ)` as a resolvent.
#[derive(Clone)]
pub struct FnResolvent<F> {
    label: String,
    f: F,
}

impl<F> FnResolvent<F>
where
    F: Fn(ArrayView1<f64>, f64) -> Array1<f64> + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<F> Resolvent for FnResolvent<F>
where
    F: Fn(ArrayView1<f64>, f64) -> Array1<f64> + Send + Sync,
{
    fn apply(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
        (self.f)(x, lambda)
    }
    fn label(&self) -> &str {
        &self.label
    }
}

impl<F> fmt::Debug for FnResolvent<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnResolvent")
            .field("label", &self.label)
            .finish()
    }
}

// ---------------------------------------------------------------------------
// Proximal maps and projections
// ---------------------------------------------------------------------------

/// Componentwise `sgn(u_i) max(0, |u_i| - τ)`.
pub fn soft_threshold(u: ArrayView1<f64>, tau: f64) -> Array1<f64> {
    debug_assert!(tau >= 0.0);
    u.mapv(|x| soft_scalar(x, tau))
}

#[inline]
pub(crate) fn soft_scalar(x: f64, tau: f64) -> f64 {
    let m = x.abs() - tau;
    if m > 0.0 {
        x.signum() * m
    } else {
        0.0
    }
}

/// Componentwise clamp onto the box `[lo, hi]`.
pub fn box_projection(
    u: ArrayView1<f64>,
    lo: ArrayView1<f64>,
    hi: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dim(u.len(), lo.len())?;
    check_dim(u.len(), hi.len())?;
    validate_box(lo, hi)?;
    Ok(clamp_box(u, lo, hi))
}

fn clamp_box(u: ArrayView1<f64>, lo: ArrayView1<f64>, hi: ArrayView1<f64>) -> Array1<f64> {
    let mut out = u.to_owned();
    Zip::from(&mut out)
        .and(lo)
        .and(hi)
        .for_each(|x, &l, &h| *x = x.max(l).min(h));
    out
}

fn validate_box(lo: ArrayView1<f64>, hi: ArrayView1<f64>) -> Result<()> {
    for (i, (l, h)) in lo.iter().zip(hi.iter()).enumerate() {
        if l > h || l.is_nan() || h.is_nan() {
            return Err(SolverError::InvalidParameter(format!(
                "box bound lo[{i}] = {l} exceeds hi[{i}] = {h}"
            )));
        }
    }
    Ok(())
}

/// `J_{λA}` for the identity resolvent `A = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityResolvent;

impl Resolvent for IdentityResolvent {
    fn apply(&self, x: ArrayView1<f64>, _lambda: f64) -> Array1<f64> {
        x.to_owned()
    }
    fn label(&self) -> &str {
        "identity"
    }
}

/// Resolvent of `A = ∂(ρ‖·‖₁)`: soft thresholding at `τ = λρ`.
///
/// On a discretized `L²[0,1]` with `A = ∂∫|u|`, the prox of the weighted
/// penalty `Σ w_i |u_i|` under the weighted norm still acts pointwise, since
/// each coordinate's objective is scaled by the same `w_i`. So the same
/// operator with `ρ = 1` serves there.
#[derive(Debug, Clone, Copy)]
pub struct SoftThreshold {
    pub rho: f64,
}

impl SoftThreshold {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(SolverError::InvalidParameter(format!(
                "l1 weight must be nonnegative, got {rho}"
            )));
        }
        Ok(Self { rho })
    }
}

impl Resolvent for SoftThreshold {
    fn apply(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
        soft_threshold(x, lambda * self.rho)
    }
    fn label(&self) -> &str {
        "soft-threshold"
    }
}

/// Resolvent of the β-strongly monotone `A = ∂(ρ‖·‖₁) + βI`:
/// `J(x, λ) = soft(x / (1 + λβ), λρ / (1 + λβ))`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedSoftThreshold {
    pub rho: f64,
    pub beta: f64,
}

impl ShiftedSoftThreshold {
    pub fn new(rho: f64, beta: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(SolverError::InvalidParameter(format!(
                "shifted soft threshold needs rho >= 0 and beta > 0, got rho = {rho}, beta = {beta}"
            )));
        }
        Ok(Self { rho, beta })
    }
}

impl Resolvent for ShiftedSoftThreshold {
    fn apply(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
        let scale = 1.0 + lambda * self.beta;
        let tau = lambda * self.rho / scale;
        x.mapv(|xi| soft_scalar(xi / scale, tau))
    }
    fn label(&self) -> &str {
        "shifted-soft-threshold"
    }
}

/// Projection onto a box `K`; the resolvent of the normal cone `N_K` for every `λ`.
#[derive(Debug, Clone)]
pub struct BoxProjection {
    lo: Array1<f64>,
    hi: Array1<f64>,
}

impl BoxProjection {
    pub fn new(lo: Array1<f64>, hi: Array1<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        validate_box(lo.view(), hi.view())?;
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> ArrayView1<'_, f64> {
        self.lo.view()
    }

    pub fn hi(&self) -> ArrayView1<'_, f64> {
        self.hi.view()
    }
}

impl Resolvent for BoxProjection {
    fn apply(&self, x: ArrayView1<f64>, _lambda: f64) -> Array1<f64> {
        clamp_box(x, self.lo.view(), self.hi.view())
    }
    fn label(&self) -> &str {
        "box-projection"
    }
}

/// Euclidean projection onto the closed ball `‖x - c‖ ≤ r`.
#[derive(Debug, Clone)]
pub struct BallProjection {
    center: Array1<f64>,
    radius: f64,
}

impl BallProjection {
    pub fn new(center: Array1<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(SolverError::InvalidParameter(format!(
                "ball radius must be nonnegative, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }
}

impl Resolvent for BallProjection {
    fn apply(&self, x: ArrayView1<f64>, _lambda: f64) -> Array1<f64> {
        let d = &x - &self.center;
        let n = d.dot(&d).sqrt();
        if n <= self.radius {
            x.to_owned()
        } else {
            &self.center + &(d * (self.radius / n))
        }
    }
    fn label(&self) -> &str {
        "ball-projection"
    }
}

// ---------------------------------------------------------------------------
// Gradient operators from the experiments
// ---------------------------------------------------------------------------

/// `∇(¼‖Cu − v‖⁴) = ‖Cu − v‖² Cᵀ(Cu − v)`.
pub fn quartic_fidelity_gradient(
    c: &Array2<f64>,
    v: ArrayView1<f64>,
    u: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dim(c.nrows(), v.len())?;
    check_dim(c.ncols(), u.len())?;
    Ok(quartic_unchecked(c, v, u))
}

fn quartic_unchecked(c: &Array2<f64>, v: ArrayView1<f64>, u: ArrayView1<f64>) -> Array1<f64> {
    let r = c.dot(&u) - v;
    let r2 = r.dot(&r);
    let mut g = c.t().dot(&r);
    g *= r2;
    g
}

/// `B = ∇f` for `f(u) = ¼‖Cu − v‖⁴`. Monotone, not Lipschitz.
#[derive(Debug, Clone)]
pub struct QuarticFidelity {
    c: Arc<Array2<f64>>,
    v: Array1<f64>,
}

impl QuarticFidelity {
    pub fn new(c: Arc<Array2<f64>>, v: Array1<f64>) -> Result<Self> {
        check_dim(c.nrows(), v.len())?;
        Ok(Self { c, v })
    }
}

impl ForwardOperator for QuarticFidelity {
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64> {
        quartic_unchecked(&self.c, self.v.view(), u)
    }
    fn label(&self) -> &str {
        "quartic-fidelity"
    }
}

/// `Qᵀ(Qu − q) + μα sgn(u_i)|u_i|^{α−1}`; the penalty part is 0 at `u_i = 0`.
pub fn lpa_gradient(
    q_mat: &Array2<f64>,
    q: ArrayView1<f64>,
    mu: f64,
    alpha: f64,
    u: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dim(q_mat.nrows(), q.len())?;
    check_dim(q_mat.ncols(), u.len())?;
    validate_lpa(mu, alpha)?;
    Ok(lpa_unchecked(q_mat, q, mu, alpha, u))
}

fn validate_lpa(mu: f64, alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(SolverError::InvalidParameter(format!(
            "l^alpha exponent must lie in (1, 2), got {alpha}"
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "l^alpha weight must be nonnegative, got {mu}"
        )));
    }
    Ok(())
}

fn lpa_unchecked(
    q_mat: &Array2<f64>,
    q: ArrayView1<f64>,
    mu: f64,
    alpha: f64,
    u: ArrayView1<f64>,
) -> Array1<f64> {
    let r = q_mat.dot(&u) - q;
    let mut g = q_mat.t().dot(&r);
    let coef = mu * alpha;
    Zip::from(&mut g).and(u).for_each(|gi, &ui| {
        if ui != 0.0 {
            *gi += coef * ui.signum() * ui.abs().powf(alpha - 1.0);
        }
    });
    g
}

/// `B = ∇f` for `f(u) = ½‖Qu − q‖² + μ Σ|u_i|^α`, `α ∈ (1, 2)`.
#[derive(Debug, Clone)]
pub struct LpaGradient {
    q_mat: Arc<Array2<f64>>,
    q: Array1<f64>,
    mu: f64,
    alpha: f64,
}

impl LpaGradient {
    pub fn new(q_mat: Arc<Array2<f64>>, q: Array1<f64>, mu: f64, alpha: f64) -> Result<Self> {
        check_dim(q_mat.nrows(), q.len())?;
        validate_lpa(mu, alpha)?;
        Ok(Self {
            q_mat,
            q,
            mu,
            alpha,
        })
    }
}

impl ForwardOperator for LpaGradient {
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64> {
        lpa_unchecked(&self.q_mat, self.q.view(), self.mu, self.alpha, u)
    }
    fn label(&self) -> &str {
        "lpa-gradient"
    }
}

/// Componentwise `u_i log(1 + |u_i|)`.
pub fn log_operator(u: ArrayView1<f64>) -> Array1<f64> {
    u.mapv(|x| x * x.abs().ln_1p())
}

/// Pointwise `u(t) log(1 + |u(t)|)`: monotone, not Lipschitz on all of the space.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogOperator;

impl ForwardOperator for LogOperator {
    fn eval(&self, u: ArrayView1<f64>) -> Array1<f64> {
        log_operator(u)
    }
    fn label(&self) -> &str {
        "log"
    }
}
