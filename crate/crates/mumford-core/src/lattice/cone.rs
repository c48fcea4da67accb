//! Rational polyhedral cones via the double description method.

use num_traits::{One, Signed, Zero};

use super::hnf::kernel;
use super::matrix::IntMatrix;
use super::snf::elementary_divisors;
use super::sublattice::Sublattice;
use crate::arith::{clear_denominators, dot, dot_iq, primitive, Int, Q};

#[derive(Clone)]
struct Ray {
    v: Vec<Int>,
    z: Vec<u64>,
}

fn bit_set(z: &mut Vec<u64>, i: usize) {
    if z.len() <= i / 64 {
        z.resize(i / 64 + 1, 0);
    }
    z[i / 64] |= 1 << (i % 64);
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().enumerate().all(|(i, &w)| w & !b.get(i).copied().unwrap_or(0) == 0)
}

fn meet(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn lin_comb(a: &Int, x: &[Int], b: &Int, y: &[Int]) -> Vec<Int> {
    primitive(&x.iter().zip(y).map(|(p, q)| a * p - b * q).collect::<Vec<_>>())
}

/// Generators of `{x : ineqs·x >= 0, eqs·x = 0}` as (extreme rays, lineality).
///
/// Rays come back primitive, reduced modulo the lineality space and sorted;
/// the lineality basis is the saturated Hermite basis.
pub fn double_description(dim: usize, ineqs: &[Vec<Int>], eqs: &[Vec<Int>]) -> (Vec<Vec<Int>>, Vec<Vec<Int>>) {
    let mut lin: Vec<Vec<Int>> = IntMatrix::identity(dim).into_rows();
    let mut rays: Vec<Ray> = Vec::new();
    let cons = eqs.iter().map(|a| (a, true)).chain(ineqs.iter().map(|a| (a, false)));
    let mut ineq_idx = 0;
    for (a, is_eq) in cons {
        debug_assert_eq!(a.len(), dim);
        let my_idx = if is_eq {
            usize::MAX
        } else {
            ineq_idx += 1;
            ineq_idx - 1
        };
        if let Some(p) = lin.iter().position(|l| !dot(a, l).is_zero()) {
            let mut l0 = lin.swap_remove(p);
            let mut s0 = dot(a, &l0);
            if s0.is_negative() {
                l0 = l0.iter().map(|x| -x).collect();
                s0 = -s0;
            }
            for l in lin.iter_mut() {
                let s = dot(a, l);
                if !s.is_zero() {
                    *l = lin_comb(&s0, l, &s, &l0);
                }
            }
            for r in rays.iter_mut() {
                let s = dot(a, &r.v);
                if !s.is_zero() {
                    r.v = lin_comb(&s0, &r.v, &s, &l0);
                }
                if !is_eq {
                    bit_set(&mut r.z, my_idx);
                }
            }
            if !is_eq {
                // every earlier inequality is tight on a lineality vector
                let mut z = Vec::new();
                for i in 0..my_idx {
                    bit_set(&mut z, i);
                }
                rays.push(Ray { v: primitive(&l0), z });
            }
            continue;
        }
        let vals: Vec<Int> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        let mut next: Vec<Ray> = Vec::new();
        for (i, r) in rays.iter().enumerate() {
            if vals[i].is_zero() {
                let mut r = r.clone();
                if !is_eq {
                    bit_set(&mut r.z, my_idx);
                }
                next.push(r);
            } else if vals[i].is_positive() && !is_eq {
                next.push(r.clone());
            }
        }
        let pairs: Vec<(usize, usize)> =
            pos.iter().flat_map(|&p| neg.iter().map(move |&n| (p, n))).collect();
        let adjacent = |&(p, n): &(usize, usize)| -> Option<Ray> {
            let z = meet(&rays[p].z, &rays[n].z);
            let blocked = rays
                .iter()
                .enumerate()
                .any(|(o, r)| o != p && o != n && subset(&z, &r.z));
            if blocked {
                return None;
            }
            let v = lin_comb(&vals[p], &rays[n].v, &vals[n], &rays[p].v);
            let mut z = z;
            if !is_eq {
                bit_set(&mut z, my_idx);
            }
            Some(Ray { v, z })
        };
        next.extend(crate::par::map(&pairs, adjacent).into_iter().flatten());
        rays = next;
    }
    let lin_sat = Sublattice::span(dim, &lin).saturate().basis;
    let mut out: Vec<Vec<Int>> = rays.into_iter().map(|r| reduce_mod(&r.v, &lin_sat)).collect();
    out.sort();
    out.dedup();
    (out, lin_sat)
}

/// Representative of `v` modulo the span of `basis` (rows in echelon form),
/// with the pivot coordinates cleared, then made primitive.
fn reduce_mod(v: &[Int], basis: &[Vec<Int>]) -> Vec<Int> {
    let mut v = v.to_vec();
    for row in basis {
        let Some(c) = row.iter().position(|x| !x.is_zero()) else { continue };
        if v[c].is_zero() {
            continue;
        }
        let (p, t) = (row[c].clone(), v[c].clone());
        v = v.iter().zip(row).map(|(x, y)| &p * x - &t * y).collect();
    }
    primitive(&v)
}

/// A cone in `R^dim` holding both representations:
/// `cone(rays) + span(lineality) = {x : facets·x >= 0, equations·x = 0}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalCone {
    pub dim: usize,
    pub rays: Vec<Vec<Int>>,
    pub lineality: Vec<Vec<Int>>,
    pub facets: Vec<Vec<Int>>,
    pub equations: Vec<Vec<Int>>,
}

impl RationalCone {
    pub fn from_generators(dim: usize, rays: &[Vec<Int>], lineality: &[Vec<Int>]) -> Self {
        let (facets, equations) = double_description(dim, rays, lineality);
        Self::from_inequalities_inner(dim, facets, equations)
    }

    pub fn from_rational_generators(dim: usize, rays: &[Vec<Q>]) -> Self {
        let rays: Vec<Vec<Int>> = rays.iter().map(|r| clear_denominators(r)).collect();
        Self::from_generators(dim, &rays, &[])
    }

    pub fn from_inequalities(dim: usize, ineqs: &[Vec<Int>], eqs: &[Vec<Int>]) -> Self {
        let (rays, lin) = double_description(dim, ineqs, eqs);
        let (facets, equations) = double_description(dim, &rays, &lin);
        RationalCone { dim, rays, lineality: lin, facets, equations }
    }

    fn from_inequalities_inner(dim: usize, facets: Vec<Vec<Int>>, equations: Vec<Vec<Int>>) -> Self {
        let (rays, lineality) = double_description(dim, &facets, &equations);
        RationalCone { dim, rays, lineality, facets, equations }
    }

    /// The dual cone `{y : y·x >= 0 for all x in C}`.
    pub fn dual(&self) -> RationalCone {
        RationalCone {
            dim: self.dim,
            rays: self.facets.clone(),
            lineality: self.equations.clone(),
            facets: self.rays.clone(),
            equations: self.lineality.clone(),
        }
    }

    pub fn is_strongly_convex(&self) -> bool {
        self.lineality.is_empty()
    }

    /// Dimension of the linear span.
    pub fn cone_dim(&self) -> usize {
        self.dim - self.equations.len()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn contains(&self, x: &[Int]) -> bool {
        self.facets.iter().all(|f| !dot(f, x).is_negative())
            && self.equations.iter().all(|e| dot(e, x).is_zero())
    }

    pub fn contains_q(&self, x: &[Q]) -> bool {
        self.facets.iter().all(|f| !dot_iq(f, x).is_negative())
            && self.equations.iter().all(|e| dot_iq(e, x).is_zero())
    }

    pub fn contains_cone(&self, other: &RationalCone) -> bool {
        other.rays.iter().all(|r| self.contains(r))
            && other
                .lineality
                .iter()
                .all(|l| self.contains(l) && self.contains(&l.iter().map(|x| -x).collect::<Vec<_>>()))
    }

    pub fn same_set(&self, other: &RationalCone) -> bool {
        self.contains_cone(other) && other.contains_cone(self)
    }

    pub fn is_simplicial(&self) -> bool {
        self.is_strongly_convex() && self.rays.len() == self.cone_dim()
    }

    /// Ray generators extend to a basis of `Z^dim`.
    pub fn is_standard_affine(&self) -> bool {
        if !self.is_simplicial() {
            return false;
        }
        if self.rays.is_empty() {
            return true;
        }
        elementary_divisors(&IntMatrix::from_rows(self.rays.clone())).iter().all(|d| d.is_one())
    }

    /// Faces as (rays, tight facet indices), including the cone itself.
    pub fn face_ray_sets(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let all: Vec<usize> = (0..self.rays.len()).collect();
        out.push(all.clone());
        let mut frontier = vec![all];
        while let Some(face) = frontier.pop() {
            for f in &self.facets {
                let sub: Vec<usize> = face.iter().copied().filter(|&r| dot(f, &self.rays[r]).is_zero()).collect();
                if sub.len() < face.len() && !out.contains(&sub) {
                    out.push(sub.clone());
                    frontier.push(sub);
                }
            }
        }
        out.sort();
        out
    }

    /// Sample point in the relative interior (sum of generators).
    pub fn interior_point(&self) -> Vec<Int> {
        let mut p = vec![Int::zero(); self.dim];
        for r in &self.rays {
            for (a, b) in p.iter_mut().zip(r) {
                *a += b;
            }
        }
        p
    }

    /// Lattice of linear relations among integer points of the span.
    pub fn span_lattice(&self) -> Sublattice {
        let m = IntMatrix::from_rows_with_cols(self.equations.clone(), self.dim);
        Sublattice { ambient: self.dim, basis: kernel(&m) }
    }
}
