//! Finite-volume solver for two-fluid relativistic plasma flows.
//!
//! Ion and electron relativistic Euler systems are coupled to Maxwell's
//! equations through Lorentz-force and current sources. The fluid parts use
//! entropy-stable fluxes; the Maxwell part can use a multidimensional
//! vertex-based solver that keeps the discrete divergence constraints
//! intact, a plain Rusanov discretization, or perfectly hyperbolic
//! divergence cleaning.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod es_flux;
pub mod fluid;
pub mod grid;
pub mod maxwell;
pub mod output;
pub mod sources;
pub mod state;
pub mod stepper;
