//! Solvers for monotone variational inclusions `0 ∈ A(u) + B(u)`.
//!
//! `B` is single-valued, monotone and continuous (no Lipschitz constant
//! needed); `A` is maximal monotone and enters only through its resolvent
//! `J_{λA} = (I + λA)⁻¹`. The main method is an inertial forward-backward
//! contraction scheme with Armijo-type step sizes ([`solver`]); classical
//! splitting methods for comparison live in [`baselines`], benchmark
//! problems in [`problems`] and the grid runner in [`bench`].

pub mod baselines;
pub mod bench;
pub mod error;
pub mod inclusion;
pub mod linesearch;
pub mod operators;
pub mod problems;
pub mod solver;
pub mod space;
pub mod trace;

pub use error::{Result, SolverError};
pub use inclusion::Inclusion;
pub use linesearch::{backtrack, LineSearchOutcome, LineSearchParams};
pub use operators::{ForwardOperator, Resolvent};
pub use solver::{
    ifb_step, rate_estimate, solve, solve_with_solution, InertiaSchedule, SolverConfig,
};
pub use space::InnerProductSpace;
pub use trace::{
    IterationRecord, IterationTrace, SolveOutput, StoppingKind, StoppingRule, TerminalStatus,
};
