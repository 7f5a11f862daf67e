//! Discrete p-modulus laboratory.
//!
//! This crate computes the p-modulus of finite systems of measures: the
//! least p-energy `Σ_j m_j φ_j^p` over nonnegative metrics `φ` satisfying
//! `∫ φ dμ ≥ 1` for every measure `μ` in the system. On top of the solver
//! it provides extremality certificates that re-derive optimality from
//! first principles (admissibility with equality on a distinguished
//! family, plus a cone condition on the gradient), planar geometry for
//! turning curve families over grids into measure systems, closed-form
//! oracles for regression, and the file formats used by the command-line
//! driver.
//!
//! The pieces are layered bottom-up:
//!
//! * [`measure`]: cell spaces, sparse measures, metrics, integration and
//!   p-energy;
//! * [`solver`]: dual ascent for `p > 1`, a simplex-based covering LP at
//!   `p = 1`, closed forms for atomic systems below 1, and a brute-force
//!   grid search used only as an independent cross-check;
//! * [`certificate`]: building and verifying extremality certificates,
//!   including Farkas witnesses when the cone condition fails;
//! * [`geometry`]: grids, polyline rasterization, the rectangle crossing
//!   families, transboundary domains with hole atoms, and unit-mass
//!   interval extraction;
//! * [`oracles`]: closed-form reference values and an end-to-end example
//!   suite;
//! * [`io`]: structured-text schemas and CSV/PGM field export.

pub mod certificate;
pub mod error;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod oracles;
pub mod solver;

pub use error::{Error, Result};
pub use measure::{CellSpace, Measure, MeasureSystem, Metric};
pub use solver::{solve_modulus, ModulusValue, SolveOptions, SolveReport, SolveStatus};
