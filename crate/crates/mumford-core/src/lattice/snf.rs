use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::matrix::IntMatrix;
use crate::arith::Int;

/// `U·A·V = D` with `U`, `V` unimodular and `D` in Smith form.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub rank: usize,
}

impl Snf {
    /// Nonzero diagonal entries, in order.
    pub fn divisors(&self) -> Vec<Int> {
        (0..self.rank).map(|i| self.d.get(i, i).clone()).collect()
    }
}

struct Work {
    a: Vec<Vec<Int>>,
    u: Vec<Vec<Int>>,
    ui: Vec<Vec<Int>>,
    v: Vec<Vec<Int>>,
}

impl Work {
    // row_i -= q * row_t
    fn row_sub(&mut self, i: usize, t: usize, q: &Int) {
        for c in 0..self.a[0].len() {
            let x = q * &self.a[t][c];
            self.a[i][c] -= x;
        }
        for c in 0..self.u.len() {
            let x = q * &self.u[t][c];
            self.u[i][c] -= x;
        }
        for r in 0..self.ui.len() {
            let x = q * &self.ui[r][i];
            self.ui[r][t] += x;
        }
    }

    fn row_swap(&mut self, i: usize, t: usize) {
        self.a.swap(i, t);
        self.u.swap(i, t);
        for r in self.ui.iter_mut() {
            r.swap(i, t);
        }
    }

    fn row_neg(&mut self, i: usize) {
        for x in self.a[i].iter_mut() {
            *x = -&*x;
        }
        for x in self.u[i].iter_mut() {
            *x = -&*x;
        }
        for r in self.ui.iter_mut() {
            r[i] = -&r[i];
        }
    }

    // col_j -= q * col_t
    fn col_sub(&mut self, j: usize, t: usize, q: &Int) {
        for r in self.a.iter_mut() {
            let x = q * &r[t];
            r[j] -= x;
        }
        for r in self.v.iter_mut() {
            let x = q * &r[t];
            r[j] -= x;
        }
    }

    fn col_swap(&mut self, j: usize, t: usize) {
        for r in self.a.iter_mut() {
            r.swap(j, t);
        }
        for r in self.v.iter_mut() {
            r.swap(j, t);
        }
    }
}

/// Smith normal form by pivoting on the entry of least absolute value.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut w = Work {
        a: m.rows().to_vec(),
        u: IntMatrix::identity(rows).into_rows(),
        ui: IntMatrix::identity(rows).into_rows(),
        v: IntMatrix::identity(cols).into_rows(),
    };
    let mut t = 0;
    while t < rows.min(cols) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !w.a[i][j].is_zero()
                    && best.is_none_or(|(bi, bj)| w.a[i][j].abs() < w.a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        w.row_swap(pi, t);
        w.col_swap(pj, t);
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !w.a[i][t].is_zero() {
                    let q = &w.a[i][t] / &w.a[t][t];
                    w.row_sub(i, t, &q);
                    if !w.a[i][t].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !w.a[t][j].is_zero() {
                    let q = &w.a[t][j] / &w.a[t][t];
                    w.col_sub(j, t, &q);
                    if !w.a[t][j].is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                // move the smallest remainder in row/column t to the pivot
                let mut best = (t, t);
                for i in t + 1..rows {
                    if !w.a[i][t].is_zero() && w.a[i][t].abs() < w.a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    if !w.a[t][j].is_zero() && w.a[t][j].abs() < w.a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    w.row_swap(best.0, t);
                }
                if best.1 != t {
                    w.col_swap(best.1, t);
                }
                continue;
            }
            // enforce divisibility of the remaining block
            let p = w.a[t][t].clone();
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !w.a[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    let minus_one = Int::from(-1);
                    w.row_sub(t, i, &minus_one);
                }
                None => break,
            }
        }
        if w.a[t][t].is_negative() {
            w.row_neg(t);
        }
        t += 1;
    }
    Snf {
        u: IntMatrix::from_rows_with_cols(w.u, rows),
        u_inv: IntMatrix::from_rows_with_cols(w.ui, rows),
        d: IntMatrix::from_rows_with_cols(w.a, cols),
        v: IntMatrix::from_rows_with_cols(w.v, cols),
        rank: t,
    }
}

/// Elementary divisors of `m` (nonzero diagonal of its Smith form).
pub fn elementary_divisors(m: &IntMatrix) -> Vec<Int> {
    smith_normal_form(m).divisors()
}
