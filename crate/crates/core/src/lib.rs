//! Numerical verification toolkit for weighted geometric maximal operators.
//!
//! The library discretizes locally finite measures on uniform grids over a
//! bounded window, evaluates the weighted maximal operator
//! `M f(x) = sup { ∫_B |f| dμ / μ(B) : B ∋ x, μ(B) > 0 }` over
//! homothecy-invariant basis families (axis-parallel rectangles, cubes, or
//! homothets of a convex generator), and runs the decomposition machinery that
//! connects Tauberian conditions at a single level to restricted weak-type
//! inequalities: halo iterations, Calderón–Zygmund selections, expanding
//! corner dilates, Whitney cubes, annulus estimates and homothetic-copy
//! packings, together with the explicit constant formulas tying them together.
//!
//! Everything is deterministic: randomized estimators take an explicit seed,
//! and reported suprema are always lower bounds over the declared sample
//! family, with a witness.
//!
//! Module map:
//! - [`geometry`]: boxes, convex polytopes, John ellipsoids, associated
//!   rectangles, dyadic meshes and corner dilations.
//! - [`measure`]: grid measures, analytic weight families, integration,
//!   doubling / Muckenhoupt constant estimation.
//! - [`maximal`]: fast maximal-operator kernels, superlevel sets, halo
//!   iteration, dyadic maximal operator, convex-vs-rectangle comparability.
//! - [`decomposition`]: Calderón–Zygmund selection, expanding dilates,
//!   Whitney cubes, annulus mass, homothetic copies, constant formulas.
//! - [`tauberian`]: Tauberian-constant estimation, the weak-type exponent,
//!   restricted weak-type verification, basis transfer, differentiation
//!   checks.
//! - [`experiments`] / [`config`]: the experiment registry behind the
//!   `geomax` command-line runner.
//! - [`reference`]: brute-force reference implementations used as oracles by
//!   the test suite.

pub mod config;
pub mod decomposition;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod maximal;
pub mod measure;
pub mod reference;
pub mod tauberian;

pub use error::{Error, Result};
