//! Weight filtrations of commuting square-zero monodromy logarithms and
//! the bilinear forms `B_i(x, y) = L(N_i x, y)` they induce on `gr^W_0`.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::arith::{dot, Int};
use crate::error::{invalid, Error, Result};
use crate::lattice::{kernel, IntMatrix, Sublattice};
use crate::matroid::{cographic_rep, matroidal_cone, Graph};
use crate::mumford::MumfordData;

/// `Z^{2g}` with a unimodular alternating pairing `L(x, y) = xᵀ L y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticLattice {
    pub g: usize,
    pub l: IntMatrix,
    pub standard: bool,
}

impl SymplecticLattice {
    pub fn new(l: IntMatrix) -> Result<Self> {
        if !l.is_square() || l.nrows() % 2 != 0 {
            return invalid("pairing matrix must be square of even size");
        }
        let n = l.nrows();
        for i in 0..n {
            for j in 0..n {
                if *l.get(i, j) != -l.get(j, i) {
                    return invalid("pairing matrix is not antisymmetric");
                }
            }
        }
        if !l.det().is_one() {
            return invalid("pairing matrix is not unimodular");
        }
        let standard = l == Self::standard_matrix(n / 2);
        Ok(SymplecticLattice { g: n / 2, l, standard })
    }

    /// Basis `e_1..e_g, f_1..f_g` with `L(e_i, f_j) = δ_ij`.
    pub fn standard(g: usize) -> Self {
        SymplecticLattice { g, l: Self::standard_matrix(g), standard: true }
    }

    fn standard_matrix(g: usize) -> IntMatrix {
        let mut l = IntMatrix::zeros(2 * g, 2 * g);
        for i in 0..g {
            l.set(i, g + i, Int::one());
            l.set(g + i, i, -Int::one());
        }
        l
    }

    pub fn pair(&self, x: &[Int], y: &[Int]) -> Int {
        dot(x, &self.l.mul_vec(y))
    }
}

/// `W_{-2} ⊆ W_{-1} ⊆ V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightFiltration {
    pub rank: usize,
    pub w2: Sublattice,
    pub w1: Sublattice,
}

impl WeightFiltration {
    pub fn is_maximal(&self) -> bool {
        self.w2.rank() == self.w1.rank() && self.w1.rank() < self.rank
    }

    pub fn to_json(&self) -> Value {
        let b = |s: &Sublattice| IntMatrix::from_rows_with_cols(s.basis.clone(), self.rank).to_json();
        json!({
            "rank": self.rank,
            "W-2": {"rank": self.w2.rank(), "basis": b(&self.w2)},
            "W-1": {"rank": self.w1.rank(), "basis": b(&self.w1)},
            "gr0_rank": self.rank - self.w1.rank(),
            "maximal": self.is_maximal(),
        })
    }
}

fn validate(ns: &[IntMatrix]) -> Result<usize> {
    let Some(first) = ns.first() else { return invalid("no monodromy operators given") };
    let n = first.nrows();
    for (i, a) in ns.iter().enumerate() {
        if !a.is_square() || a.nrows() != n {
            return invalid(format!("operator {} is not {n}×{n}", i + 1));
        }
        if !a.mul(a).is_zero() {
            return invalid(format!("operator {} does not square to zero", i + 1));
        }
        for (j, b) in ns.iter().enumerate().skip(i + 1) {
            if a.mul(b) != b.mul(a) {
                return invalid(format!("operators {} and {} do not commute", i + 1, j + 1));
            }
        }
    }
    Ok(n)
}

fn combine(ns: &[IntMatrix], r: &[Int]) -> IntMatrix {
    let mut n = IntMatrix::zeros(ns[0].nrows(), ns[0].ncols());
    for (a, c) in ns.iter().zip(r) {
        n = n.add(&a.scale(c));
    }
    n
}

fn filtration_of(n: &IntMatrix) -> WeightFiltration {
    let dim = n.nrows();
    WeightFiltration {
        rank: dim,
        w2: Sublattice::span(dim, &n.cols_vec()).saturate(),
        w1: Sublattice::span(dim, &kernel(n)),
    }
}

/// Filtration of `N = Σ N_i`, re-derived for two random positive weight
/// vectors as a consistency check.
pub fn weight_filtration(ns: &[IntMatrix]) -> Result<WeightFiltration> {
    validate(ns)?;
    let ones = vec![Int::one(); ns.len()];
    let w = filtration_of(&combine(ns, &ones));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..2 {
        let r: Vec<Int> = (0..ns.len()).map(|_| Int::from(rng.gen_range(1..=97u32))).collect();
        if filtration_of(&combine(ns, &r)) != w {
            return Err(Error::Validation(format!("weight filtration depends on the positive weights {r:?}")));
        }
    }
    Ok(w)
}

pub fn is_maximal(ns: &[IntMatrix]) -> Result<bool> {
    Ok(weight_filtration(ns)?.is_maximal())
}

/// Forms on `gr^W_0 = V / W_{-1}`, with their positivity report.
#[derive(Clone, Debug)]
pub struct MonodromyForms {
    pub filtration: WeightFiltration,
    /// Lifts to `V` of the basis of `gr^W_0`: the Hermite complement of `W_{-1}`.
    pub basis: Vec<Vec<Int>>,
    pub forms: Vec<IntMatrix>,
    pub semidefinite: Vec<bool>,
    pub sum_definite: bool,
}

impl MonodromyForms {
    /// Integral forms have rational kernels, so semi-definiteness suffices.
    pub fn in_rational_closure(&self) -> bool {
        self.semidefinite.iter().all(|&b| b)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "filtration": self.filtration.to_json(),
            "gr0_basis": IntMatrix::from_rows_with_cols(self.basis.clone(), self.filtration.rank).to_json(),
            "forms": self.forms.iter().map(IntMatrix::to_json).collect::<Vec<_>>(),
            "semidefinite": self.semidefinite,
            "in_rational_closure": self.in_rational_closure(),
            "sum_positive_definite": self.sum_definite,
        })
    }
}

pub fn monodromy_forms(ns: &[IntMatrix], lat: &SymplecticLattice) -> Result<MonodromyForms> {
    let filtration = weight_filtration(ns)?;
    if filtration.rank != 2 * lat.g {
        return invalid("operators do not act on the symplectic lattice");
    }
    if !filtration.is_maximal() {
        return invalid("degeneration is not maximal: W_{-2} ≠ W_{-1}");
    }
    let basis = filtration.w1.complement();
    let mut forms = Vec::new();
    for (i, n) in ns.iter().enumerate() {
        let rows: Vec<Vec<Int>> =
            basis.iter().map(|x| basis.iter().map(|y| lat.pair(&n.mul_vec(x), y)).collect()).collect();
        let f = IntMatrix::from_rows_with_cols(rows, basis.len());
        if !f.is_symmetric() {
            return invalid(format!("form of operator {} is not symmetric", i + 1));
        }
        forms.push(f);
    }
    let semidefinite = forms.iter().map(is_psd).collect();
    let mut sum = IntMatrix::zeros(basis.len(), basis.len());
    for f in &forms {
        sum = sum.add(f);
    }
    let sum_definite = is_pd(&sum);
    Ok(MonodromyForms { filtration, basis, forms, semidefinite, sum_definite })
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u64..(1u64 << n)).map(move |m| (0..n).filter(|i| m >> i & 1 == 1).collect())
}

/// All principal minors nonnegative.
pub fn is_psd(a: &IntMatrix) -> bool {
    a.is_symmetric() && subsets(a.nrows()).all(|s| !a.select_rows(&s).select_cols(&s).det().is_negative())
}

/// All leading principal minors positive.
pub fn is_pd(a: &IntMatrix) -> bool {
    a.is_symmetric()
        && (1..=a.nrows()).all(|k| {
            let s: Vec<usize> = (0..k).collect();
            a.select_rows(&s).select_cols(&s).det().is_positive()
        })
}

/// `N = [[0, B], [0, 0]]`, the logarithm of the standard unipotent `[[I, B], [0, I]]`.
pub fn standard_log(b: &IntMatrix) -> IntMatrix {
    let g = b.nrows();
    let mut n = IntMatrix::zeros(2 * g, 2 * g);
    for i in 0..g {
        for j in 0..g {
            n.set(i, g + j, b.get(i, j).clone());
        }
    }
    n
}

/// `T - I`, rejecting `T` that are not square-zero perturbations of `I`.
pub fn unipotent_log(t: &IntMatrix) -> Result<IntMatrix> {
    if !t.is_square() {
        return invalid("monodromy matrix is not square");
    }
    let n = t.add(&IntMatrix::identity(t.nrows()).scale(&-Int::one()));
    if !n.mul(&n).is_zero() {
        return invalid("monodromy matrix is not unipotent of order two");
    }
    Ok(n)
}

/// Picard–Lefschetz logarithms `N x = L(γ, x) γ` for vanishing cycles `γ`.
pub fn picard_lefschetz(lat: &SymplecticLattice, cycles: &[Vec<Int>]) -> Vec<IntMatrix> {
    let n = 2 * lat.g;
    cycles
        .iter()
        .map(|c| {
            let mut m = IntMatrix::zeros(n, n);
            for j in 0..n {
                let mut e = vec![Int::zero(); n];
                e[j] = Int::one();
                let s = lat.pair(c, &e);
                for i in 0..n {
                    m.set(i, j, &s * &c[i]);
                }
            }
            m
        })
        .collect()
}

/// Vanishing cycles of a standard-basis degeneration with the given
/// `H_1` coordinates, placed in `span(e_i)`.
pub fn cycles_in_e(g: usize, coords: &[Vec<Int>]) -> Vec<Vec<Int>> {
    coords
        .iter()
        .map(|c| {
            let mut v = c.clone();
            v.resize(2 * g, Int::zero());
            v
        })
        .collect()
}

/// `(x·γ_e)²` for each edge `e`, on `H_1(G)` in the fundamental-cycle basis
/// of `forest`.
pub fn graph_vanishing_forms(g: &Graph, forest: &[usize]) -> Result<Vec<IntMatrix>> {
    Ok(matroidal_cone(&cographic_rep(g, forest)?))
}

/// Logarithms of the quadratic parts of the sections, in standard form.
pub fn data_logs(data: &MumfordData) -> Result<Vec<IntMatrix>> {
    data.sections.iter().map(|s| Ok(standard_log(&s.quadratic_part()?))).collect()
}
