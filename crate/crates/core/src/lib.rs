//! Numerical library for the elliptic solid-on-solid model with domain-wall
//! boundary conditions and one reflecting end.
//!
//! The central quantity is the boundary partition function Z, evaluated by
//! three independent routes: a dense operator construction (product of
//! creation-type double-row blocks between reference states), a symmetrized
//! sum over permutations of the spectral parameters, and a multiple-contour
//! integral. The layers build up as
//!
//! * [`theta`]: the odd quasiperiodic building block f, bracket products,
//!   argument reduction, and finite-order theta classification;
//! * [`weights`]: face weights, the dynamical vertex matrix, the diagonal
//!   reflection matrix, and their local identities;
//! * [`algebra`]: dense single-row and double-row lattice operators and the
//!   exchange relations of their blocks;
//! * [`partition`]: the three evaluation routes for Z;
//! * [`funceq`]: the linear functional equation satisfied by Z, its
//!   coefficient vector, reductions, and reconstruction identities;
//! * [`routes`]: a by-name registry of the evaluation routes;
//! * [`checks`]: seeded verification suites used by the command-line tool
//!   and the acceptance tests.

pub mod algebra;
pub mod checks;
pub mod error;
pub mod funceq;
mod linalg;
pub mod partition;
pub mod routes;
pub mod theta;
pub mod tol;
pub mod weights;

pub use error::{Error, Result};
