use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::IntMatrix;
use crate::arith::Int;

/// Row Hermite form `H = U·A`: echelon, positive pivots, entries above a
/// pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug)]
pub struct RowHnf {
    pub h: IntMatrix,
    pub u: IntMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

pub fn row_hnf(a: &IntMatrix) -> RowHnf {
    let (m, n) = (a.nrows(), a.ncols());
    let mut h = a.rows().to_vec();
    let mut u = IntMatrix::identity(m).into_rows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        for i in r + 1..m {
            if h[i][c].is_zero() {
                continue;
            }
            let (x, y) = (h[r][c].clone(), h[i][c].clone());
            if !x.is_zero() && y.is_multiple_of(&x) {
                let f = &y / &x;
                let one = Int::one();
                let zero = Int::zero();
                combine(&mut h, r, i, &one, &zero, &-&f, &one);
                combine(&mut u, r, i, &one, &zero, &-&f, &one);
                continue;
            }
            let e = x.extended_gcd(&y);
            let (g, s, t) = (e.gcd, e.x, e.y);
            let (p, q) = (-(&y / &g), &x / &g);
            combine(&mut h, r, i, &s, &t, &p, &q);
            combine(&mut u, r, i, &s, &t, &p, &q);
        }
        if h[r][c].is_zero() {
            continue;
        }
        if h[r][c].is_negative() {
            for x in h[r].iter_mut().chain(u[r].iter_mut()) {
                *x = -&*x;
            }
        }
        for k in 0..r {
            let f = h[k][c].div_floor(&h[r][c]);
            if !f.is_zero() {
                for j in 0..n {
                    let d = &f * &h[r][j];
                    h[k][j] -= d;
                }
                for j in 0..m {
                    let d = &f * &u[r][j];
                    u[k][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    RowHnf {
        h: IntMatrix::from_rows_with_cols(h, n),
        u: IntMatrix::from_rows_with_cols(u, m),
        rank: r,
        pivots,
    }
}

// (row_a, row_b) <- (s·row_a + t·row_b, p·row_a + q·row_b)
fn combine(rows: &mut [Vec<Int>], a: usize, b: usize, s: &Int, t: &Int, p: &Int, q: &Int) {
    for j in 0..rows[a].len() {
        let x = rows[a][j].clone();
        let y = rows[b][j].clone();
        rows[a][j] = s * &x + t * &y;
        rows[b][j] = p * &x + q * &y;
    }
}

/// Canonical basis (HNF rows) of the lattice spanned by `gens` in `Z^n`.
pub fn lattice_basis(gens: &[Vec<Int>], n: usize) -> Vec<Vec<Int>> {
    let h = row_hnf(&IntMatrix::from_rows_with_cols(gens.to_vec(), n));
    h.h.rows()[..h.rank].to_vec()
}

/// Column Hermite form `A·V = H` with `V` unimodular; the first `rank`
/// columns of `H` are nonzero.
pub struct ColHnf {
    pub h: IntMatrix,
    pub v: IntMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

pub fn col_hnf(a: &IntMatrix) -> ColHnf {
    let r = row_hnf(&a.transpose());
    ColHnf { h: r.h.transpose(), v: r.u.transpose(), rank: r.rank, pivots: r.pivots }
}

/// Integer solution of `A·x = v`, or `None`.
///
/// With `A·V = H` in column Hermite form, `x = V·(y, 0)` where `y` solves the
/// triangular system; free coordinates are set to zero, so the answer is the
/// unique solution whose trailing HNF coordinates vanish.
pub fn hnf_solve(a: &IntMatrix, v: &[Int]) -> Option<Vec<Int>> {
    assert_eq!(a.nrows(), v.len());
    let c = col_hnf(a);
    let mut y = vec![Int::zero(); a.ncols()];
    let mut resid = v.to_vec();
    for (k, &p) in c.pivots.iter().enumerate() {
        let piv = c.h.get(p, k);
        let (qt, rm) = resid[p].div_rem(piv);
        if !rm.is_zero() {
            return None;
        }
        for (i, r) in resid.iter_mut().enumerate() {
            let d = &qt * c.h.get(i, k);
            *r -= d;
        }
        y[k] = qt;
    }
    if resid.iter().any(|x| !x.is_zero()) {
        return None;
    }
    Some(c.v.mul_vec(&y))
}

/// HNF basis of the integer right kernel `{x : A·x = 0}`.
pub fn kernel(a: &IntMatrix) -> Vec<Vec<Int>> {
    let c = col_hnf(a);
    let gens: Vec<Vec<Int>> = (c.rank..a.ncols()).map(|j| c.v.col(j)).collect();
    lattice_basis(&gens, a.ncols())
}

/// HNF basis of the integer left kernel `{y : y·A = 0}`.
pub fn left_kernel(a: &IntMatrix) -> Vec<Vec<Int>> {
    kernel(&a.transpose())
}

pub fn is_unimodular_square(a: &IntMatrix) -> bool {
    a.is_square() && a.det().abs().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, ints};

    #[test]
    fn solve_examples() {
        let id = IntMatrix::identity(3);
        assert_eq!(hnf_solve(&id, &ints(&[4, -1, 7])), Some(ints(&[4, -1, 7])));
        assert_eq!(hnf_solve(&IntMatrix::from_i64(&[&[2]]), &ints(&[3])), None);
        let a = IntMatrix::from_i64(&[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(hnf_solve(&a, &ints(&[1, 1])), Some(ints(&[1, 1, 0])));
    }

    #[test]
    fn solve_inconsistent_rank_deficient() {
        let a = IntMatrix::from_i64(&[&[1, 2], &[2, 4]]);
        assert_eq!(hnf_solve(&a, &ints(&[1, 3])), None);
        let x = hnf_solve(&a, &ints(&[3, 6])).unwrap();
        assert_eq!(a.mul_vec(&x), ints(&[3, 6]));
    }

    #[test]
    fn hnf_is_canonical() {
        let a = IntMatrix::from_i64(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        let r = row_hnf(&a);
        assert_eq!(r.u.mul(&a), r.h);
        assert!(is_unimodular_square(&r.u));
        let b = IntMatrix::from_rows(vec![a.row(1).to_vec(), a.row(0).to_vec(), a.row(2).to_vec()]);
        assert_eq!(row_hnf(&b).h, r.h);
    }

    #[test]
    fn kernel_basis() {
        let a = IntMatrix::from_i64(&[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(kernel(&a), vec![ints(&[1, 1, -1])]);
        assert_eq!(left_kernel(&IntMatrix::from_i64(&[&[1], &[1]])), vec![ints(&[1, -1])]);
        assert_eq!(kernel(&IntMatrix::identity(2)).len(), 0);
        let _ = int(0);
    }
}
