use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::Value;

use crate::arith::{int, Int};
use crate::error::{invalid, Result};

/// Dense matrix of big integers, row-major.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<Int>>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![vec![Int::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = Int::one();
        }
        m
    }

    /// Build from rows; `cols` is needed when there are no rows.
    pub fn from_rows_with_cols(rows: Vec<Vec<Int>>, cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        IntMatrix { rows: rows.len(), cols, data: rows }
    }

    pub fn from_rows(rows: Vec<Vec<Int>>) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows_with_cols(rows, cols)
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    pub fn from_cols(cols: &[Vec<Int>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in 0..rows {
                m.data[i][j] = c[i].clone();
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Int) {
        self.data[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[Int] {
        &self.data[i]
    }

    pub fn rows(&self) -> &[Vec<Int>] {
        &self.data
    }

    pub fn into_rows(self) -> Vec<Vec<Int>> {
        self.data
    }

    pub fn col(&self, j: usize) -> Vec<Int> {
        self.data.iter().map(|r| r[j].clone()).collect()
    }

    pub fn cols_vec(&self) -> Vec<Vec<Int>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_cols(&self.data, self.cols)
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.data[i][k].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i][j] += &self.data[i][k] * &other.data[k][j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len());
        self.data.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &Int) -> IntMatrix {
        let data = self.data.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.iter().all(|x| x.is_zero()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.data[i][j] == self.data[j][i]))
    }

    pub fn select_cols(&self, idx: &[usize]) -> IntMatrix {
        let data = self.data.iter().map(|r| idx.iter().map(|&j| r[j].clone()).collect()).collect();
        IntMatrix { rows: self.rows, cols: idx.len(), data }
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMatrix {
        let data = idx.iter().map(|&i| self.data[i].clone()).collect();
        IntMatrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Fraction-free Bareiss determinant.
    pub fn det(&self) -> Int {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        let mut a = self.data.clone();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                    return Int::zero();
                };
                a.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    pub fn rank(&self) -> usize {
        crate::lattice::hnf::row_hnf(self).rank
    }

    pub fn max_abs(&self) -> Int {
        self.data.iter().flatten().map(|x| x.abs()).max().unwrap_or_else(Int::zero)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.data
                .iter()
                .map(|r| Value::Array(r.iter().map(int_to_json).collect()))
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<IntMatrix> {
        let Some(rows) = v.as_array() else {
            return invalid("matrix must be a JSON array of rows");
        };
        let mut out = Vec::with_capacity(rows.len());
        for r in rows {
            let Some(r) = r.as_array() else {
                return invalid("matrix row must be an array");
            };
            out.push(r.iter().map(int_from_json).collect::<Result<Vec<_>>>()?);
        }
        let cols = out.first().map_or(0, |r| r.len());
        if out.iter().any(|r| r.len() != cols) {
            return invalid("matrix rows have different lengths");
        }
        Ok(Self::from_rows_with_cols(out, cols))
    }
}

pub fn int_to_json(x: &Int) -> Value {
    match i64::try_from(x) {
        Ok(v) => Value::from(v),
        Err(_) => Value::String(x.to_string()),
    }
}

pub fn int_from_json(v: &Value) -> Result<Int> {
    match v {
        Value::Number(n) => match n.as_i64() {
            Some(x) => Ok(int(x)),
            None => invalid(format!("not an integer: {n}")),
        },
        Value::String(s) => s.trim().parse().or_else(|_| invalid(format!("not an integer: {s:?}"))),
        _ => invalid(format!("not an integer: {v}")),
    }
}

pub fn vec_from_json(v: &Value) -> Result<Vec<Int>> {
    match v.as_array() {
        Some(a) => a.iter().map(int_from_json).collect(),
        None => invalid("expected an integer array"),
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.data.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, x) in r.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
