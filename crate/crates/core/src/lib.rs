//! Carnot-group arithmetic in exponential coordinates, horizontal calculus,
//! sup/inf convolutions, strict-supersolution perturbations, and a numerical
//! harness that checks the comparison principle for fully nonlinear
//! subelliptic operators on sampled functions.
//!
//! The crate is organized around the pipeline it supports:
//!
//! * [`group`] — stratified Lie groups of step ≤ 3 (Euclidean, Heisenberg,
//!   Engel, custom), group product via the truncated BCH formula, gauge
//!   pseudo-norm and pseudo-distance, dilations.
//! * [`expr`] — a small expression language for scalar fields on exponential
//!   coordinates with exact symbolic differentiation.
//! * [`grid`] — rectangular lattices of exponential coordinates and sampled
//!   scalar fields.
//! * [`calculus`] — left-invariant horizontal vector fields, their coefficient
//!   matrices, and horizontal gradients/Hessians from Euclidean jets, grid
//!   samples, or symbolic expressions.
//! * [`transforms`] — sup/inf convolutions with the gauge kernel, domain
//!   shrinking, semiconvexity certification, and convergence diagnostics.
//! * [`operators`] — fully nonlinear operators F(r, p, M), structure checks,
//!   and the strict-supersolution perturbation.
//! * [`comparison`] — the comparison-principle verification harness.
//! * [`scenario`] — JSON scenario configs shared by the CLI and the Python
//!   bindings.

pub mod calculus;
pub mod comparison;
pub mod error;
pub mod expr;
pub mod grid;
pub mod group;
pub mod operators;
pub mod poly;
pub mod scenario;
pub mod transforms;

pub use error::{Error, Result};
pub use group::{CarnotGroup, Point};
