//! Exact lattice set calculus with certified measure brackets for
//! Brunn-Minkowski type inequalities in weighted and product spaces.
//!
//! The building blocks are:
//!
//! * [`means`] — extended-real p-th means and the exponent arithmetic used
//!   by the functional inequalities,
//! * [`gridset`] — finite unions of closed lattice cells with *exact*
//!   rational convex combinations, hulls and sections,
//! * [`density`] — structured densities and rigorous lower/upper measure
//!   brackets over grid sets,
//! * [`metric`] — embedding-induced metrics and pushforward densities for
//!   coordinatewise (log / power) combinations,
//! * [`lpbodies`] — sampled support functions of planar convex bodies and
//!   their p-sums,
//! * [`checkers`] — certified verdicts for the inequality suites, the
//!   isoperimetric functionals, counterexample reproductions and the
//!   randomized falsification search.
//!
//! Everything downstream of a grid set is deterministic: set operations are
//! exact in rational arithmetic, measure sums run in a fixed cell order, and
//! randomized searches derive per-trial seeds from a master seed.

pub mod checkers;
pub mod density;
pub mod gridset;
pub mod lpbodies;
pub mod means;
pub mod metric;
pub mod rational;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
