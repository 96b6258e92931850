//! Douglas-Rachford splitting for `minimize f(x) + g(x)` with a convex
//! quadratic `f` and a nonsmooth `g` with a cheap proximal mapping, analysed
//! as a scaled gradient method on the Douglas-Rachford envelope (DRE).
//!
//! * [`numerics`]: Cholesky solves and extreme eigenvalues.
//! * [`functions`]: quadratic and least-squares smooth terms, box / l1 / zero
//!   nonsmooth terms, Moreau envelopes.
//! * [`envelope`]: the DRE, its gradient, the forward-backward envelope link
//!   and the smoothness constants that drive the rate bounds.
//! * [`solvers`]: plain and accelerated DRS, parameter rules and rate bounds.
//! * [`problems`]: seeded instance generators and a high-accuracy reference solve.
//! * [`bench`]: experiment runs producing traces and summaries.
//! * [`check`]: invariant suites shared by the CLI and the tests.

// `!(x > 0.0)` is used on purpose so that NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod check;
pub mod envelope;
pub mod error;
pub mod functions;
pub mod numerics;
pub mod problems;
pub mod solvers;

pub use envelope::{CompositeProblem, EnvelopeConstants, Splitting};
pub use error::{Error, Result};
pub use functions::{ConvexQuadratic, LeastSquaresQuadratic, ProxFunction, ProxOperator, SmoothTerm};
pub use numerics::{DenseMatrix, Vector};
pub use solvers::{BetaSchedule, IterationTrace, LambdaRule, SolverConfig, Status};
