//! Proximal gradient method with extrapolation and non-monotone line search
//! (PGels) for `min f(x) + P(x)` with smooth `f` and a possibly nonconvex
//! prox-friendly `P`, together with the PG, NPG, FISTA, restarted FISTA and
//! pDCAe baselines and a benchmark harness.

// Negated float comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod linesearch;
pub mod losses;
pub mod problem;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::Execution;
pub use problem::{CompositeProblem, ProxTerm, SmoothTerm};
