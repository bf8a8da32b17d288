//! Numerical workbench for the spectral stability of minimal cones with an
//! isolated singularity, and for the calibration-form machinery attached to
//! them (Kahler powers, special Lagrangian, associative/coassociative).
//!
//! The library is organised around small, checkable computations:
//!
//! * [`linalg`]: dense symmetric eigensolves (cyclic Jacobi), sparse smallest
//!   eigenvalues (Lanczos with full reorthogonalization), small SPD solves,
//!   quadrature helpers.
//! * [`jets`]: forward-mode second-order derivatives, used to get exact chart
//!   Jacobians and Hessians out of analytic chart maps.
//! * [`exterior`]: sparse exterior algebra over low-dimensional model spaces
//!   (wedge, Hodge star, interior product, evaluation on frames).
//! * [`links`]: the catalog of cross-section manifolds (links) of the cones
//!   under study, with charts, adapted frames and second fundamental forms.
//! * [`spectral`]: the scaling-weighted eigenvalue computations that decide
//!   strict stability of a cone, plus the Lawson-family sweep.
//! * [`calibrations`]: calibration forms, comass sampling, and the tests that
//!   a given cone is calibrated.
//! * [`holo`]: homogeneous holomorphic polynomials, their gradients, and
//!   Newton retraction onto their zero cones.
//! * [`variations`]: normal variation fields, logarithmic cutoffs, and direct
//!   second-variation quadrature.
//! * [`cone_forms`]: homogeneous differential forms on cones over flat torus
//!   links, with the closed/co-closed reduction identities and the sign
//!   conventions surfaced explicitly.

pub mod calibrations;
pub mod cone_forms;
pub mod exterior;
pub mod holo;
pub mod jets;
pub mod linalg;
pub mod links;
pub mod spectral;
pub mod variations;
