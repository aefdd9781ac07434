//! Numerical laboratory for the radial Neumann problem
//! -Δ_p u + u^{p-1} = u^{q-1} in the unit ball: shooting solver, variational
//! classification, radial Neumann eigenvalues, bifurcation diagrams in p, and
//! convergence experiments in the exponent.

// validation uses `!(x > 0.0)` on purpose: the negation rejects NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

pub mod continuation;
pub mod convergence;
pub mod error;
pub mod ivp;
pub mod problem;
pub mod quad;
pub mod radial_ode;
pub mod rootfind;
pub mod shooter;
pub mod spectral;
pub mod timemap;
pub mod variational;

pub use error::{Error, Result};
pub use problem::ProblemParams;
