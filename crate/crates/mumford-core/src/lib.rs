//! Exact combinatorics of multivariable Mumford degenerations.

pub mod arith;
pub mod complex;
pub mod delaunay;
pub mod error;
pub mod lattice;
pub mod matroid;
pub mod monodromy;
pub mod mumford;
pub mod par;
pub mod plsection;
pub mod resolve;
pub mod theta;

pub use error::{Error, Result};
