//! Delaunay and Voronoi decompositions of positive-definite integral forms.
//!
//! The star of Delaunay cells at the origin is read off the cone spanned by
//! the lifted window points `(m, B(m,m))`. A facet `B(m,m) >= a·m` of that
//! cone is certified once the empty ellipsoid `B(m-u, m-u) < B(u,u)`,
//! `u = B^{-1}a/2`, fits inside the window; the window grows until every
//! facet is certified.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::arith::{ceil_q, dot, dot_iq, floor_q, fmt_q, inverse_q, parse_q, qi, sqrt_upper, to_q, Int, Q};
use crate::error::{invalid, Error, Result};
use crate::lattice::cone::double_description;
use crate::lattice::polytope::eval_h;
use crate::lattice::{IntMatrix, Polytope};

const MAX_RADIUS: i64 = 48;

/// Multiplier for the initial search window, from `MUMFORD_WINDOW_SCALE`.
pub fn window_scale() -> Q {
    std::env::var("MUMFORD_WINDOW_SCALE")
        .ok()
        .and_then(|s| parse_q(&s).ok())
        .filter(|q| q.is_positive())
        .unwrap_or_else(Q::one)
}

pub fn form_value(b: &IntMatrix, x: &[Int], y: &[Int]) -> Int {
    dot(x, &b.mul_vec(y))
}

pub fn form_value_q(b: &[Vec<Q>], x: &[Q], y: &[Q]) -> Q {
    let by: Vec<Q> = b.iter().map(|r| r.iter().zip(y).map(|(p, q)| p * q).sum()).collect();
    x.iter().zip(&by).map(|(p, q)| p * q).sum()
}

pub fn to_qmat(b: &IntMatrix) -> Vec<Vec<Q>> {
    b.rows().iter().map(|r| to_q(r)).collect()
}

/// Positive definiteness by leading principal minors.
pub fn is_positive_definite(b: &IntMatrix) -> bool {
    b.is_symmetric()
        && (1..=b.nrows()).all(|k| {
            let idx: Vec<usize> = (0..k).collect();
            b.select_rows(&idx).select_cols(&idx).det().is_positive()
        })
}

fn box_points(radius: &[i64]) -> Vec<Vec<Int>> {
    let mut out = vec![Vec::new()];
    for &r in radius {
        let mut next = Vec::new();
        for p in &out {
            for x in -r..=r {
                let mut q = p.clone();
                q.push(Int::from(x));
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// A maximal Delaunay cell through the origin with lift slope `a`:
/// `B(m,m) = a·m` on the cell, `B(m,m) > a·m` for other lattice points.
#[derive(Clone, Debug)]
pub struct StarCell {
    pub vertices: Vec<Vec<Int>>,
    pub a: Vec<Q>,
}

/// Maximal Delaunay cells containing the origin, certified.
pub fn delaunay_star(b: &IntMatrix) -> Result<Vec<StarCell>> {
    let g = b.nrows();
    if !is_positive_definite(b) {
        return invalid("form is not positive definite");
    }
    if g == 0 {
        return Ok(vec![StarCell { vertices: vec![Vec::new()], a: Vec::new() }]);
    }
    let binv = inverse_q(&to_qmat(b)).expect("definite form is invertible");
    let scale = window_scale();
    let r0 = ceil_q(&(scale * Q::from_integer(Int::from(1)))).max(Int::one());
    let mut radius: Vec<i64> = vec![i64::try_from(&r0).unwrap_or(1).max(1); g];
    loop {
        let pts: Vec<Vec<Int>> = box_points(&radius).into_iter().filter(|p| p.iter().any(|x| !x.is_zero())).collect();
        let lifted: Vec<Vec<Int>> = pts
            .iter()
            .map(|m| {
                let mut v = m.clone();
                v.push(form_value(b, m, m));
                v
            })
            .collect();
        let (facets, lin) = double_description(g + 1, &lifted, &[]);
        let mut cells = Vec::new();
        let mut grow = vec![false; g];
        let mut ok = lin.is_empty();
        for f in &facets {
            let t = &f[g];
            if !t.is_positive() {
                ok = false;
                break;
            }
            let a: Vec<Q> = f[..g].iter().map(|x| -Q::new(x.clone(), t.clone())).collect();
            let u: Vec<Q> = binv.iter().map(|r| r.iter().zip(&a).map(|(p, q)| p * q).sum::<Q>() / Q::from_integer(Int::from(2))).collect();
            let r2 = form_value_q(&to_qmat(b), &u, &u);
            for i in 0..g {
                let half = sqrt_upper(&(&r2 * &binv[i][i]));
                let lo = floor_q(&(&u[i] - &half));
                let hi = ceil_q(&(&u[i] + &half));
                if lo < Int::from(-radius[i]) || hi > Int::from(radius[i]) {
                    grow[i] = true;
                }
            }
            let mut verts = vec![vec![Int::zero(); g]];
            for (m, l) in pts.iter().zip(&lifted) {
                if dot(f, l).is_zero() {
                    verts.push(m.clone());
                }
            }
            verts.sort();
            cells.push(StarCell { vertices: verts, a });
        }
        if ok && grow.iter().all(|x| !x) {
            cells.sort_by(|x, y| x.vertices.cmp(&y.vertices));
            return Ok(cells);
        }
        if radius.iter().any(|&r| r >= MAX_RADIUS) {
            return Err(Error::Window(format!("Delaunay star not certified within radius {MAX_RADIUS}")));
        }
        for i in 0..g {
            if grow[i] || !ok {
                radius[i] *= 2;
            }
        }
    }
}

/// A Delaunay cell translated so its lexicographically least vertex is 0,
/// with the affine function `alpha·y + c` that agrees with
/// `(B(m,m) - L(m))/2` on its vertices.
#[derive(Clone, Debug)]
pub struct BaseCell {
    pub vertices: Vec<Vec<Int>>,
    pub poly: Polytope,
    pub alpha: Vec<Q>,
    pub c: Q,
}

/// Periodic Delaunay decomposition of `Z^g` for a definite form together
/// with the convex lift `(B(m,m) - L(m))/2`.
#[derive(Clone, Debug)]
pub struct DelaunayLattice {
    pub b: IntMatrix,
    pub l: Vec<Int>,
    pub bases: Vec<BaseCell>,
    star: Vec<(usize, Vec<Int>)>,
}

/// Cell `bases[.0] + .1`.
pub type CellId = (usize, Vec<Int>);

fn half() -> Q {
    Q::new(Int::one(), Int::from(2))
}

impl DelaunayLattice {
    pub fn new(b: &IntMatrix, l: &[Int]) -> Result<DelaunayLattice> {
        let g = b.nrows();
        let star = delaunay_star(b)?;
        let mut seen: BTreeSet<Vec<Vec<Int>>> = BTreeSet::new();
        for s in &star {
            let o = s.vertices[0].clone();
            let vs: Vec<Vec<Int>> = s.vertices.iter().map(|v| v.iter().zip(&o).map(|(x, y)| x - y).collect()).collect();
            seen.insert(vs);
        }
        let mut bases = Vec::new();
        for vs in seen {
            let pts: Vec<Vec<Q>> = vs.iter().map(|v| to_q(v)).collect();
            let poly = Polytope::from_vertices(g, &pts);
            let vals: Vec<Q> = vs.iter().map(|m| lift_value(b, l, m)).collect();
            let (alpha, c) = affine_interpolate(&pts, &vals);
            bases.push(BaseCell { vertices: vs, poly, alpha, c });
        }
        let mut star_ids = Vec::new();
        for (i, bc) in bases.iter().enumerate() {
            for w in &bc.vertices {
                star_ids.push((i, w.iter().map(|x| -x).collect()));
            }
        }
        Ok(DelaunayLattice { b: b.clone(), l: l.to_vec(), bases, star: star_ids })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn cell_vertices(&self, id: &CellId) -> Vec<Vec<Int>> {
        self.bases[id.0].vertices.iter().map(|v| v.iter().zip(&id.1).map(|(x, y)| x + y).collect()).collect()
    }

    /// Homogenized facet inequalities of a translated cell.
    pub fn cell_facets(&self, id: &CellId) -> Vec<Vec<Int>> {
        self.bases[id.0]
            .poly
            .facets
            .iter()
            .map(|h| {
                let mut out = h.clone();
                out[0] = &h[0] - dot(&h[1..], &id.1);
                out
            })
            .collect()
    }

    pub fn contains(&self, id: &CellId, z: &[Q]) -> bool {
        let y: Vec<Q> = z.iter().zip(&id.1).map(|(a, b)| a - qi(b)).collect();
        self.bases[id.0].poly.contains(&y)
    }

    /// Every cell containing `z`, in canonical order.
    pub fn locate_all(&self, z: &[Q]) -> Vec<CellId> {
        let mut out = Vec::new();
        for (i, bc) in self.bases.iter().enumerate() {
            let g = z.len();
            let mut ranges = Vec::with_capacity(g);
            for k in 0..g {
                let lo = bc.vertices.iter().map(|v| v[k].clone()).min().unwrap();
                let hi = bc.vertices.iter().map(|v| v[k].clone()).max().unwrap();
                ranges.push((ceil_q(&(&z[k] - qi(&hi))), floor_q(&(&z[k] - qi(&lo)))));
            }
            let mut ts: Vec<Vec<Int>> = vec![Vec::new()];
            for (lo, hi) in &ranges {
                let mut next = Vec::new();
                for t in &ts {
                    let mut x = lo.clone();
                    while &x <= hi {
                        let mut t2 = t.clone();
                        t2.push(x.clone());
                        next.push(t2);
                        x += 1;
                    }
                }
                ts = next;
            }
            for t in ts {
                let id = (i, t);
                if self.contains(&id, z) {
                    out.push(id);
                }
            }
        }
        out.sort();
        out
    }

    pub fn locate(&self, z: &[Q]) -> CellId {
        self.locate_all(z).into_iter().next().expect("Delaunay cells cover space")
    }

    /// The other maximal cell through the facet `facet` of `id`.
    pub fn neighbor(&self, id: &CellId, facet: &[Int]) -> CellId {
        let wall: Vec<Vec<Int>> = self
            .cell_vertices(id)
            .into_iter()
            .filter(|v| eval_h(facet, &to_q(v)).is_zero())
            .collect();
        let v = &wall[0];
        for (c, t) in &self.star {
            let cand: CellId = (*c, t.iter().zip(v).map(|(a, b)| a + b).collect());
            if &cand == id {
                continue;
            }
            let verts = self.cell_vertices(&cand);
            if wall.iter().all(|w| verts.contains(w)) {
                return cand;
            }
        }
        panic!("Delaunay wall without a second cell")
    }

    /// Slope of the lift on a translated cell.
    pub fn slope(&self, id: &CellId) -> Vec<Q> {
        let bm = self.b.mul_vec(&id.1);
        self.bases[id.0].alpha.iter().zip(&bm).map(|(a, x)| a + qi(x)).collect()
    }

    /// Value of the convex lift at `z`.
    pub fn value(&self, z: &[Q]) -> Q {
        let id = self.locate(z);
        self.value_in(&id, z)
    }

    pub fn value_in(&self, id: &CellId, z: &[Q]) -> Q {
        let bc = &self.bases[id.0];
        let t = &id.1;
        let y: Vec<Q> = z.iter().zip(t).map(|(a, b)| a - qi(b)).collect();
        // q(y + t) = q(y) + B(t, y) + q(t)
        crate::arith::dot_q(&bc.alpha, &y) + &bc.c + dot_iq(&self.b.mul_vec(t), &y) + lift_value(&self.b, &self.l, t)
    }

    /// Maximal cell classes modulo translation.
    pub fn classes(&self) -> usize {
        self.bases.len()
    }
}

pub fn lift_value(b: &IntMatrix, l: &[Int], m: &[Int]) -> Q {
    Q::from_integer(form_value(b, m, m) - dot(l, m)) * half()
}

/// Affine function through the given values on an affinely spanning set.
pub fn affine_interpolate(pts: &[Vec<Q>], vals: &[Q]) -> (Vec<Q>, Q) {
    let g = pts[0].len();
    let mut chosen = vec![0usize];
    for i in 1..pts.len() {
        if chosen.len() == g + 1 {
            break;
        }
        let mut rows: Vec<Vec<Q>> = chosen[1..]
            .iter()
            .map(|&j| pts[j].iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
            .collect();
        rows.push(pts[i].iter().zip(&pts[0]).map(|(a, b)| a - b).collect());
        if crate::arith::rank_q(&rows) == rows.len() {
            chosen.push(i);
        }
    }
    assert_eq!(chosen.len(), g + 1, "cell is not full-dimensional");
    let m: Vec<Vec<Q>> = chosen[1..].iter().map(|&j| pts[j].iter().zip(&pts[0]).map(|(a, b)| a - b).collect()).collect();
    let rhs: Vec<Q> = chosen[1..].iter().map(|&j| &vals[j] - &vals[0]).collect();
    let inv = inverse_q(&m).expect("independent");
    // m · alpha = rhs
    let alpha: Vec<Q> = inv.iter().map(|r| r.iter().zip(&rhs).map(|(a, b)| a * b).sum()).collect();
    let c = &vals[0] - crate::arith::dot_q(&alpha, &pts[0]);
    (alpha, c)
}

/// Closed Voronoi cell of the origin.
///
/// Uses the shortest vectors of every nonzero class of `M/2M`, which contain
/// all facet normals.
pub fn voronoi_cell(b: &IntMatrix) -> Result<Polytope> {
    let g = b.nrows();
    if !is_positive_definite(b) {
        return invalid("form is not positive definite");
    }
    let binv = inverse_q(&to_qmat(b)).expect("invertible");
    let mut halfspaces = Vec::new();
    for mask in 1u32..(1 << g) {
        let c: Vec<Int> = (0..g).map(|i| Int::from((mask >> i) & 1)).collect();
        let bound = form_value(b, &c, &c);
        let radius: Vec<i64> = (0..g)
            .map(|i| {
                let r = sqrt_upper(&(qi(&bound) * &binv[i][i]));
                i64::try_from(&ceil_q(&r)).unwrap_or(MAX_RADIUS)
            })
            .collect();
        let mut best: Option<Int> = None;
        let mut vecs = Vec::new();
        for m in box_points(&radius) {
            if (0..g).any(|i| (&m[i] - &c[i]) % 2 != Int::zero()) {
                continue;
            }
            let n = form_value(b, &m, &m);
            if n > bound {
                continue;
            }
            match &best {
                Some(x) if &n > x => {}
                Some(x) if &n == x => vecs.push(m),
                _ => {
                    best = Some(n);
                    vecs = vec![m];
                }
            }
        }
        for m in vecs {
            // B(m,m) - 2 B(m,x) >= 0
            let mut h = vec![form_value(b, &m, &m)];
            h.extend(b.mul_vec(&m).iter().map(|x| -x * 2));
            halfspaces.push(h);
        }
    }
    Polytope::from_halfspaces(g, &halfspaces, &[])
        .ok_or_else(|| Error::Window("Voronoi cell unbounded".into()))
}

/// Equality of Delaunay decompositions, compared as sets of cell classes.
pub fn same_delaunay(b1: &IntMatrix, b2: &IntMatrix) -> Result<bool> {
    if b1.nrows() != b2.nrows() {
        return Ok(false);
    }
    let c1: BTreeSet<Vec<Vec<Int>>> = delaunay_star(b1)?.into_iter().map(|c| c.vertices).collect();
    let c2: BTreeSet<Vec<Vec<Int>>> = delaunay_star(b2)?.into_iter().map(|c| c.vertices).collect();
    Ok(c1 == c2)
}

/// Delaunay decomposition with its cell census per fundamental domain.
#[derive(Clone, Debug)]
pub struct DelaunayComplex {
    pub form: IntMatrix,
    pub complex: crate::complex::PeriodicComplex,
    pub census: BTreeMap<usize, usize>,
}

impl DelaunayComplex {
    pub fn to_json(&self) -> Value {
        let census: serde_json::Map<String, Value> =
            self.census.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let cells: Vec<Value> = self
            .complex
            .maximal
            .iter()
            .map(|c| json!(c.poly.vertices.iter().map(|v| v.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>()))
            .collect();
        json!({"form": self.form.to_json(), "census": census, "maximal_cells": cells})
    }
}

pub fn delaunay(b: &IntMatrix) -> Result<DelaunayComplex> {
    if !is_positive_definite(b) {
        return invalid("form is not positive definite");
    }
    let diag: Vec<Int> = (0..b.nrows()).map(|i| b.get(i, i).clone()).collect();
    let sec = crate::plsection::pl_from_form(b, Some(&diag))?;
    let complex = crate::complex::PeriodicComplex::refine(b.nrows(), &[&sec])?;
    let census = complex.census();
    Ok(DelaunayComplex { form: b.clone(), complex, census })
}
