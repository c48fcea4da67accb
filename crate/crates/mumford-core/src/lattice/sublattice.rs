use num_traits::{One, Zero};

use super::hnf::{hnf_solve, lattice_basis};
use super::matrix::IntMatrix;
use super::snf::smith_normal_form;
use crate::arith::Int;

/// A sublattice of `Z^n` given by a basis, stored in row Hermite form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sublattice {
    pub ambient: usize,
    pub basis: Vec<Vec<Int>>,
}

impl Sublattice {
    /// Lattice generated by arbitrary (possibly dependent) vectors.
    pub fn span(ambient: usize, gens: &[Vec<Int>]) -> Self {
        Sublattice { ambient, basis: lattice_basis(gens, ambient) }
    }

    pub fn zero(ambient: usize) -> Self {
        Sublattice { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        Sublattice { ambient, basis: IntMatrix::identity(ambient).into_rows() }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn col_matrix(&self) -> IntMatrix {
        IntMatrix::from_cols(&self.basis, self.ambient)
    }

    pub fn contains(&self, v: &[Int]) -> bool {
        if self.basis.is_empty() {
            return v.iter().all(|x| x.is_zero());
        }
        hnf_solve(&self.col_matrix(), v).is_some()
    }

    /// Coordinates of `v` in the stored basis.
    pub fn coords(&self, v: &[Int]) -> Option<Vec<Int>> {
        if self.basis.is_empty() {
            return v.iter().all(|x| x.is_zero()).then(Vec::new);
        }
        hnf_solve(&self.col_matrix(), v)
    }

    /// All lattice points of `Z^n` in the rational span.
    pub fn saturate(&self) -> Sublattice {
        if self.basis.is_empty() {
            return self.clone();
        }
        let s = smith_normal_form(&self.col_matrix());
        let gens: Vec<Vec<Int>> = (0..s.rank).map(|j| s.u_inv.col(j)).collect();
        Sublattice::span(self.ambient, &gens)
    }

    /// `[sat(S) : S]`, the product of the elementary divisors.
    pub fn index_in_saturation(&self) -> Int {
        if self.basis.is_empty() {
            return Int::one();
        }
        smith_normal_form(&self.col_matrix()).divisors().iter().product()
    }

    pub fn is_saturated(&self) -> bool {
        self.index_in_saturation().is_one()
    }

    /// A basis of a complement `C` with `sat(S) ⊕ C = Z^n`.
    pub fn complement(&self) -> Vec<Vec<Int>> {
        if self.basis.is_empty() {
            return IntMatrix::identity(self.ambient).into_rows();
        }
        let s = smith_normal_form(&self.col_matrix());
        let gens: Vec<Vec<Int>> = (s.rank..self.ambient).map(|j| s.u_inv.col(j)).collect();
        lattice_basis(&gens, self.ambient)
    }

    pub fn is_sublattice_of(&self, other: &Sublattice) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, ints};

    #[test]
    fn saturation_examples() {
        let s = Sublattice::span(2, &[ints(&[2, 0]), ints(&[0, 2])]);
        assert_eq!(s.saturate(), Sublattice::full(2));
        assert_eq!(s.index_in_saturation(), int(4));
        let s = Sublattice::span(2, &[ints(&[1, 0])]);
        assert_eq!(s.saturate(), s);
        let s = Sublattice::span(2, &[ints(&[2, 4])]);
        assert_eq!(s.saturate().basis, vec![ints(&[1, 2])]);
    }

    #[test]
    fn complement_spans() {
        let s = Sublattice::span(3, &[ints(&[1, 1, 1])]);
        let mut all = s.saturate().basis;
        all.extend(s.complement());
        assert_eq!(IntMatrix::from_rows(all).det().magnitude().to_string(), "1");
    }

    #[test]
    fn membership() {
        let s = Sublattice::span(2, &[ints(&[2, 0]), ints(&[1, 1])]);
        assert!(s.contains(&ints(&[3, 1])));
        assert!(!s.contains(&ints(&[1, 0])));
    }
}
