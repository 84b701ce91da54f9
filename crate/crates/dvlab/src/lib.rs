//! Exact Dieudonné-module computations over finite fields at truncated
//! p-adic precision: Newton polygons, slope filtrations, complete slope
//! divisibility, descent to finite fields, and bounded isogeny enumeration.
//!
//! The coefficient ring everywhere is the truncated Witt ring
//! `W_N(F_{p^a})`, modeled as `(Z/p^N)[x]/(f)` with a Hensel-lifted
//! Frobenius (see [`padic`]). Semilinear operators, Smith/Howell normal
//! forms and Fitting decompositions live in [`semilinear`]; Dieudonné
//! modules and isogenies in [`dieudonne`]; Newton polygons in [`newton`];
//! slope filtrations, complete slope divisibility, saturation, descent and
//! isogeny enumeration in [`slope`]; the two counterexample families in
//! [`families`].
//!
//! Each major capability has a runnable example under `examples/`; the
//! `dvlab` binary exposes the same operations as JSON-piping subcommands.

pub mod cli;
pub mod dieudonne;
pub mod error;
pub mod families;
pub mod newton;
pub mod padic;
pub mod semilinear;
pub mod slope;

pub use error::{Error, Result};
