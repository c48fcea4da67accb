//! Exact lattice linear algebra and rational polyhedra.

pub mod cone;
pub mod hnf;
pub mod matrix;
pub mod polytope;
pub mod snf;
pub mod sublattice;

pub use cone::RationalCone;
pub use hnf::{hnf_solve, kernel, left_kernel, row_hnf};
pub use matrix::IntMatrix;
pub use polytope::Polytope;
pub use snf::{elementary_divisors, smith_normal_form, Snf};
pub use sublattice::Sublattice;
