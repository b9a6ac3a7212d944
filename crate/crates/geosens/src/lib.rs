//! Geodesic-ball sensitivity indices for models with manifold-valued
//! outputs.
//!
//! For a model Z = f(X_1, ..., X_d) taking values in a Riemannian manifold,
//! the index of a frozen coordinate set nu compares the conditional and
//! unconditional laws of Z on the family of closed geodesic balls whose
//! diameters are independent copies of Z. It is estimated by a pick-freeze
//! U-statistic: paired evaluations sharing the frozen inputs, an
//! independent W pool indexing the balls, and per-ball membership tallies.
//!
//! - [`manifold`] — output geometries, distances, midpoints, balls,
//!   isometries;
//! - [`models`] — input laws, benchmark models, pick-freeze sampling;
//! - [`estimators`] — the ball index, the quadrant comparison index, the
//!   scalar pick-freeze variance;
//! - [`inference`] — bootstrap intervals, MSD studies, the concentration
//!   diagnostic;
//! - [`oracles`] — closed forms, quadrature, exact enumeration, the
//!   literal-sum reference estimator;
//! - [`rng`] — keyed, splittable random streams;
//! - [`testkit`] — seeded generators for randomized tests.

pub mod estimators;
pub mod inference;
pub mod manifold;
pub mod models;
pub mod oracles;
pub mod rng;
pub mod testkit;
