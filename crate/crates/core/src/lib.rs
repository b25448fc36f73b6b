//! Executable constructions for singular foliations: bi-submersions and their
//! φ-map certificates, Lie algebroid kernel modules, and the path-holonomy
//! bi-submersion of the Weinstein groupoid, all on coordinate charts.

pub mod algebroid;
pub mod bisubm;
pub mod charts;
pub mod expr;
pub mod flows;
pub mod linalg;
pub mod sampling;
pub mod weinstein;

pub use expr::{Expr, Rational};
