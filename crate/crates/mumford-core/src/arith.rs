//! Exact integer and rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Q = BigRational;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(Int::from(n), Int::from(d))
}

pub fn qi(n: &Int) -> Q {
    Q::from_integer(n.clone())
}

pub fn qz() -> Q {
    Q::zero()
}

pub fn floor_q(x: &Q) -> Int {
    x.floor().to_integer()
}

pub fn ceil_q(x: &Q) -> Int {
    x.ceil().to_integer()
}

pub fn is_integral(x: &Q) -> bool {
    x.denom().is_one()
}

/// Upper bound for `sqrt(x)`, `x >= 0`.
pub fn sqrt_upper(x: &Q) -> Q {
    if x.is_negative() || x.is_zero() {
        return Q::zero();
    }
    let p = x.numer() * x.denom();
    let mut r = p.sqrt();
    if &r * &r < p {
        r += 1;
    }
    Q::new(r, x.denom().clone())
}

pub fn gcd_vec(v: &[Int]) -> Int {
    v.iter().fold(Int::zero(), |g, x| g.gcd(x))
}

/// Divide by the gcd of the entries; zero stays zero.
pub fn primitive(v: &[Int]) -> Vec<Int> {
    let g = gcd_vec(v);
    if g.is_zero() || g.is_one() {
        return v.to_vec();
    }
    v.iter().map(|x| x / &g).collect()
}

/// Positive multiple of a rational vector that is a primitive integer vector.
pub fn clear_denominators(v: &[Q]) -> Vec<Int> {
    let l = v.iter().fold(Int::one(), |l, x| l.lcm(x.denom()));
    let w: Vec<Int> = v.iter().map(|x| (x * qi(&l)).to_integer()).collect();
    primitive(&w)
}

pub fn lcm_denoms(v: &[Q]) -> Int {
    v.iter().fold(Int::one(), |l, x| l.lcm(x.denom()))
}

/// Make the first nonzero entry positive.
pub fn lex_positive(v: &[Int]) -> Vec<Int> {
    match v.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => v.iter().map(|y| -y).collect(),
        _ => v.to_vec(),
    }
}

pub fn dot(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_q(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_iq(a: &[Int], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| qi(x) * y).sum()
}

pub fn to_q(v: &[Int]) -> Vec<Q> {
    v.iter().map(qi).collect()
}

pub fn ints(v: &[i64]) -> Vec<Int> {
    v.iter().map(|&x| Int::from(x)).collect()
}

pub fn qs(v: &[(i64, i64)]) -> Vec<Q> {
    v.iter().map(|&(n, d)| q(n, d)).collect()
}

/// Parse `"3"`, `"-2/5"` or a JSON number.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Validation(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: Int = n.trim().parse().map_err(|_| bad())?;
        let d: Int = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Q::new(n, d))
    } else {
        let n: Int = s.parse().map_err(|_| bad())?;
        Ok(Q::from_integer(n))
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_vec_json(v: &[Q]) -> serde_json::Value {
    serde_json::Value::Array(v.iter().map(|x| serde_json::Value::String(fmt_q(x))).collect())
}

/// Symmetric rational matrix determinant by Gaussian elimination.
pub fn det_q(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut det = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det *= &piv;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &piv;
            for k in c..n {
                let t = &f * &a[c][k];
                a[r][k] -= t;
            }
        }
    }
    det
}

pub fn inverse_q(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(p, c);
        let piv = a[c][c].clone();
        for k in 0..2 * n {
            a[c][k] = &a[c][k] / &piv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for k in 0..2 * n {
                    let t = &f * &a[c][k];
                    a[r][k] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Rank of a rational matrix given as rows.
pub fn rank_q(rows: &[Vec<Q>]) -> usize {
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    if a.is_empty() {
        return 0;
    }
    let cols = a[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        for i in r + 1..a.len() {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &a[r][c];
            for k in c..cols {
                let t = &f * &a[r][k];
                a[i][k] -= t;
            }
        }
        r += 1;
        if r == a.len() {
            break;
        }
    }
    r
}

/// Row-reduced basis of the span of the given rational vectors.
pub fn span_basis_q(rows: &[Vec<Q>], dim: usize) -> Vec<Vec<Q>> {
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    let mut out = Vec::new();
    let mut r = 0;
    for c in 0..dim {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        let piv = a[r][c].clone();
        for k in 0..dim {
            a[r][k] = &a[r][k] / &piv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in 0..dim {
                    let t = &f * &a[r][k];
                    a[i][k] -= t;
                }
            }
        }
        r += 1;
    }
    for row in a.into_iter().take(r) {
        out.push(row);
    }
    out
}
