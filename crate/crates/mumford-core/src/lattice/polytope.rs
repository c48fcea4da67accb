//! Bounded rational polytopes with vertex and facet descriptions.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use super::cone::double_description;
use crate::arith::{clear_denominators, det_q, dot_iq, qi, rank_q, Int, Q};

/// Bounded polytope in `Q^dim`.
///
/// Halfspaces and equations are homogenized integer covectors `h` meaning
/// `h[0] + h[1..]·x >= 0` (resp. `= 0`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Vec<Q>>,
    pub facets: Vec<Vec<Int>>,
    pub equations: Vec<Vec<Int>>,
}

fn homog(v: &[Q]) -> Vec<Int> {
    let mut h = vec![Q::one()];
    h.extend(v.iter().cloned());
    clear_denominators(&h)
}

fn dehomog(r: &[Int]) -> Vec<Q> {
    r[1..].iter().map(|x| Q::new(x.clone(), r[0].clone())).collect()
}

pub fn eval_h(h: &[Int], x: &[Q]) -> Q {
    qi(&h[0]) + dot_iq(&h[1..], x)
}

impl Polytope {
    pub fn from_vertices(dim: usize, pts: &[Vec<Q>]) -> Polytope {
        if pts.is_empty() {
            return Polytope { dim, vertices: Vec::new(), facets: Vec::new(), equations: Vec::new() };
        }
        let gens: Vec<Vec<Int>> = pts.iter().map(|p| homog(p)).collect();
        let (facets, equations) = double_description(dim + 1, &gens, &[]);
        let (rays, _) = double_description(dim + 1, &facets, &equations);
        let mut vertices: Vec<Vec<Q>> = rays.iter().map(|r| dehomog(r)).collect();
        vertices.sort();
        Polytope { dim, vertices, facets, equations }
    }

    /// `None` if the region is unbounded; empty polytope if infeasible.
    pub fn from_halfspaces(dim: usize, ineqs: &[Vec<Int>], eqs: &[Vec<Int>]) -> Option<Polytope> {
        let mut all = ineqs.to_vec();
        let mut t = vec![Int::zero(); dim + 1];
        t[0] = Int::one();
        all.push(t);
        let (rays, lin) = double_description(dim + 1, &all, eqs);
        if !lin.is_empty() {
            return None;
        }
        let mut pts = Vec::new();
        for r in &rays {
            if r[0].is_zero() {
                return None;
            }
            pts.push(dehomog(r));
        }
        Some(Polytope::from_vertices(dim, &pts))
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Affine dimension; `-1` for the empty polytope.
    pub fn affine_dim(&self) -> isize {
        if self.vertices.is_empty() {
            return -1;
        }
        affine_rank(&self.vertices, &(0..self.vertices.len()).collect::<Vec<_>>()) as isize
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        !self.is_empty()
            && self.facets.iter().all(|h| !eval_h(h, x).is_negative())
            && self.equations.iter().all(|h| eval_h(h, x).is_zero())
    }

    pub fn strictly_inside(&self, x: &[Q]) -> bool {
        self.contains(x) && self.facets.iter().all(|h| eval_h(h, x).is_positive())
    }

    pub fn centroid(&self) -> Vec<Q> {
        centroid(&self.vertices, &(0..self.vertices.len()).collect::<Vec<_>>())
    }

    /// Vertex indices on each facet, aligned with `facets`.
    pub fn facet_vertex_sets(&self) -> Vec<Vec<usize>> {
        self.facets
            .iter()
            .map(|h| (0..self.vertices.len()).filter(|&i| eval_h(h, &self.vertices[i]).is_zero()).collect())
            .collect()
    }

    /// All nonempty faces as sorted vertex index sets, with dimensions.
    pub fn faces(&self) -> Vec<(usize, Vec<usize>)> {
        if self.is_empty() {
            return Vec::new();
        }
        let fsets = self.facet_vertex_sets();
        let top: Vec<usize> = (0..self.vertices.len()).collect();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        seen.insert(top.clone());
        let mut stack = vec![top];
        while let Some(s) = stack.pop() {
            for f in &fsets {
                let sub: Vec<usize> = s.iter().copied().filter(|i| f.contains(i)).collect();
                if !sub.is_empty() && sub.len() < s.len() && seen.insert(sub.clone()) {
                    stack.push(sub);
                }
            }
        }
        let mut out: Vec<(usize, Vec<usize>)> =
            seen.into_iter().map(|s| (affine_rank(&self.vertices, &s), s)).collect();
        out.sort();
        out
    }

    pub fn face_vertices(&self, idx: &[usize]) -> Vec<Vec<Q>> {
        idx.iter().map(|&i| self.vertices[i].clone()).collect()
    }

    /// Pulling triangulation into simplices (vertex index lists).
    pub fn triangulate(&self) -> Vec<Vec<usize>> {
        let faces = self.faces();
        let top: Vec<usize> = (0..self.vertices.len()).collect();
        let mut out = Vec::new();
        pull(&faces, &self.vertices, &top, &mut out);
        out
    }

    /// Euclidean volume in the ambient space (zero unless full-dimensional).
    pub fn volume(&self) -> Q {
        if self.affine_dim() != self.dim as isize {
            return Q::zero();
        }
        self.triangulate().iter().map(|s| simplex_volume(&self.vertices, s)).sum()
    }

    /// Volume normalized so a unimodular simplex has volume one.
    pub fn normalized_volume(&self) -> Q {
        let mut f = Q::one();
        for i in 1..=self.dim {
            f *= Q::from_integer(Int::from(i));
        }
        self.volume() * f
    }

    pub fn translate(&self, t: &[Q]) -> Polytope {
        let pts: Vec<Vec<Q>> = self.vertices.iter().map(|v| v.iter().zip(t).map(|(a, b)| a + b).collect()).collect();
        Polytope::from_vertices(self.dim, &pts)
    }

    pub fn is_lattice_polytope(&self) -> bool {
        self.vertices.iter().flatten().all(|x| x.denom().is_one())
    }
}

fn pull(faces: &[(usize, Vec<usize>)], verts: &[Vec<Q>], s: &[usize], out: &mut Vec<Vec<usize>>) {
    let d = affine_rank(verts, s);
    if d == 0 || s.len() == d + 1 {
        out.push(s.to_vec());
        return;
    }
    let apex = s[0];
    for (fd, f) in faces {
        if *fd + 1 == d && !f.contains(&apex) && f.iter().all(|i| s.contains(i)) {
            let mut sub = Vec::new();
            pull(faces, verts, f, &mut sub);
            for mut t in sub {
                t.insert(0, apex);
                out.push(t);
            }
        }
    }
}

pub fn affine_rank(verts: &[Vec<Q>], idx: &[usize]) -> usize {
    if idx.len() <= 1 {
        return 0;
    }
    let o = &verts[idx[0]];
    let rows: Vec<Vec<Q>> = idx[1..].iter().map(|&i| verts[i].iter().zip(o).map(|(a, b)| a - b).collect()).collect();
    rank_q(&rows)
}

pub fn centroid(verts: &[Vec<Q>], idx: &[usize]) -> Vec<Q> {
    let n = Q::from_integer(Int::from(idx.len()));
    let dim = verts[idx[0]].len();
    (0..dim).map(|k| idx.iter().map(|&i| verts[i][k].clone()).sum::<Q>() / &n).collect()
}

/// Euclidean volume of a full-dimensional simplex.
pub fn simplex_volume(verts: &[Vec<Q>], s: &[usize]) -> Q {
    let o = &verts[s[0]];
    let rows: Vec<Vec<Q>> = s[1..].iter().map(|&i| verts[i].iter().zip(o).map(|(a, b)| a - b).collect()).collect();
    let mut f = Q::one();
    for i in 1..=rows.len() {
        f *= Q::from_integer(Int::from(i));
    }
    det_q(&rows).abs() / f
}
