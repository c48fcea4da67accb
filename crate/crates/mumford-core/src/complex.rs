//! Periodic polyhedral complexes: the common refinement of the linearity
//! domains of several PL sections, stored as translation classes.
//!
//! Everything is computed on the quotient `Z^g / L`, where `L` is the
//! lattice of directions along which no section bends. There every cell is a
//! bounded polytope. Maximal cells are found by walking across facets from a
//! generic starting point; each cell is identified by the linearity domain it
//! occupies in every atom, so crossing a facet is an exact combinatorial
//! step rather than a perturbation.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::arith::{clear_denominators, dot, dot_iq, floor_q, qi, rank_q, to_q, Int, Q};
use crate::delaunay::{CellId, DelaunayLattice};
use crate::error::{Error, Result};
use crate::lattice::polytope::eval_h;
use crate::lattice::{hnf_solve, kernel, IntMatrix, Polytope, Sublattice};
use crate::plsection::{unimodular_inverse, Atom, FamilyAtom, FormAtom, PLSection};

const MAX_CELLS: usize = 20_000;

/// Linearity domain of a single atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomCell {
    Family(Int),
    Form(CellId),
    Flat,
}

#[derive(Clone, Debug)]
enum QAtom {
    Family { f: FamilyAtom, x: Vec<Int>, orig: Vec<Int> },
    Form { f: FormAtom, p: IntMatrix },
    Flat,
}

impl QAtom {
    fn del(&self) -> &DelaunayLattice {
        match self {
            QAtom::Form { f, .. } => f.red.del.as_ref().unwrap(),
            _ => unreachable!(),
        }
    }
}

/// Maximal cell of the refinement, in quotient coordinates.
#[derive(Clone, Debug)]
pub struct MaxCell {
    pub poly: Polytope,
    pub ids: Vec<AtomCell>,
}

/// A translation class of faces.
#[derive(Clone, Debug)]
pub struct FaceClass {
    pub dim: usize,
    pub poly: Polytope,
    /// `(c, t)`: the face lies in `maximal[c] + t`.
    pub containing: Vec<(usize, Vec<Int>)>,
    /// The face meets one of its own nonzero lattice translates.
    pub immersed: bool,
}

#[derive(Clone, Debug)]
pub struct PeriodicComplex {
    pub g: usize,
    /// Quotient map `π: Z^g -> Z^gq` onto the bending directions.
    pub proj: IntMatrix,
    /// Basis of the lattice of non-bending directions.
    pub lineality: Vec<Vec<Int>>,
    pub maximal: Vec<MaxCell>,
    /// All face classes ordered by dimension, then vertices.
    pub faces: Vec<FaceClass>,
    atoms: Vec<QAtom>,
    /// `(section, atom range)` for slope evaluation.
    section_atoms: Vec<std::ops::Range<usize>>,
    linear: Vec<Vec<Q>>,
}

fn family_rows(f: &FamilyAtom, x: &[Int], t: &Int) -> Vec<Vec<Int>> {
    let lo = f.breakpoint(t);
    let hi = f.breakpoint(&(t + 1));
    let mut a = vec![-lo];
    a.extend(to_q(x));
    let mut b = vec![hi];
    b.extend(x.iter().map(|v| -qi(v)));
    vec![clear_denominators(&a), clear_denominators(&b)]
}

impl PeriodicComplex {
    pub fn gq(&self) -> usize {
        self.proj.nrows()
    }

    pub fn h(&self) -> usize {
        self.lineality.len()
    }

    /// Common refinement of the linearity domains of `sections`.
    pub fn refine(g: usize, sections: &[&PLSection]) -> Result<PeriodicComplex> {
        let mut covs = Vec::new();
        for s in sections {
            if s.g != g {
                return Err(Error::Validation("sections of different rank".into()));
            }
            covs.extend(s.bending_covectors());
        }
        let rows = Sublattice::span(g, &covs).saturate();
        let gq = rows.rank();
        let proj = IntMatrix::from_rows_with_cols(rows.basis.clone(), g);
        let lineality = kernel(&proj);
        let mut atoms = Vec::new();
        let mut section_atoms = Vec::new();
        let pt = proj.transpose();
        let sigma = if gq > 0 {
            let mut all = rows.basis.clone();
            all.extend(rows.complement());
            let inv = unimodular_inverse(&IntMatrix::from_rows_with_cols(all, g));
            IntMatrix::from_cols(&(0..gq).map(|j| inv.col(j)).collect::<Vec<_>>(), g)
        } else {
            IntMatrix::zeros(g, 0)
        };
        for s in sections {
            let start = atoms.len();
            for a in &s.atoms {
                atoms.push(match a {
                    Atom::Family(f) => {
                        let x = hnf_solve(&pt, &f.normal).expect("normal lies in the bending lattice");
                        QAtom::Family { f: f.clone(), x, orig: f.normal.clone() }
                    }
                    Atom::Form(f) if f.red.del.is_some() => QAtom::Form { f: f.clone(), p: f.red.p.mul(&sigma) },
                    Atom::Form(_) => QAtom::Flat,
                });
            }
            section_atoms.push(start..atoms.len());
        }
        let mut pc = PeriodicComplex {
            g,
            proj,
            lineality,
            maximal: Vec::new(),
            faces: Vec::new(),
            atoms,
            section_atoms,
            linear: sections.iter().map(|s| s.linear.clone()).collect(),
        };
        pc.walk()?;
        pc.build_faces();
        Ok(pc)
    }

    fn cell_poly(&self, ids: &[AtomCell]) -> Polytope {
        let gq = self.gq();
        let mut rows = Vec::new();
        for (a, id) in self.atoms.iter().zip(ids) {
            match (a, id) {
                (QAtom::Family { f, x, .. }, AtomCell::Family(t)) => rows.extend(family_rows(f, x, t)),
                (QAtom::Form { p, .. }, AtomCell::Form(cid)) => {
                    for h in a.del().cell_facets(cid) {
                        let mut r = vec![h[0].clone()];
                        r.extend((0..gq).map(|j| dot(&h[1..], &p.col(j))));
                        rows.push(r);
                    }
                }
                _ => {}
            }
        }
        Polytope::from_halfspaces(gq, &rows, &[]).expect("cells are bounded in the quotient")
    }

    fn ids_at(&self, y: &[Q]) -> Vec<AtomCell> {
        self.atoms
            .iter()
            .map(|a| match a {
                QAtom::Family { f, x, .. } => AtomCell::Family(f.interval(&dot_iq(x, y))),
                QAtom::Form { p, .. } => {
                    let z: Vec<Q> = p.rows().iter().map(|r| dot_iq(r, y)).collect();
                    AtomCell::Form(a.del().locate(&z))
                }
                QAtom::Flat => AtomCell::Flat,
            })
            .collect()
    }

    fn translate_ids(&self, ids: &[AtomCell], m: &[Int]) -> Vec<AtomCell> {
        self.atoms
            .iter()
            .zip(ids)
            .map(|(a, id)| match (a, id) {
                (QAtom::Family { f, x, .. }, AtomCell::Family(t)) => {
                    AtomCell::Family(t + Int::from(f.residues.len()) * dot(x, m))
                }
                (QAtom::Form { p, .. }, AtomCell::Form((c, tr))) => {
                    let pm = p.mul_vec(m);
                    AtomCell::Form((*c, tr.iter().zip(&pm).map(|(a, b)| a + b).collect()))
                }
                _ => id.clone(),
            })
            .collect()
    }

    /// Translate so the lexicographically least vertex lies in `[0,1)^gq`.
    fn canonical(&self, ids: Vec<AtomCell>, poly: Polytope) -> (Vec<AtomCell>, Polytope) {
        let m: Vec<Int> = poly.vertices[0].iter().map(floor_q).collect();
        if m.iter().all(|x| x.is_zero()) {
            return (ids, poly);
        }
        let neg: Vec<Int> = m.iter().map(|x| -x).collect();
        let ids = self.translate_ids(&ids, &neg);
        let poly = poly.translate(&to_q(&neg));
        (ids, poly)
    }

    fn start_point(&self) -> Vec<Q> {
        let gq = self.gq();
        for k in 0..200i64 {
            let y: Vec<Q> = (0..gq)
                .map(|i| Q::new(Int::from(1 + (k + 3) * (2 * i as i64 + 1)), Int::from(97 + 13 * k + 7 * i as i64)))
                .collect();
            let ids = self.ids_at(&y);
            let p = self.cell_poly(&ids);
            if p.affine_dim() == gq as isize && p.strictly_inside(&y) {
                return y;
            }
        }
        panic!("no generic starting point found")
    }

    fn neighbors(&self, cell: &MaxCell) -> Vec<Vec<AtomCell>> {
        let poly = &cell.poly;
        let mut out = Vec::new();
        for (h, verts) in poly.facets.iter().zip(poly.facet_vertex_sets()) {
            let cf = crate::lattice::polytope::centroid(&poly.vertices, &verts);
            let out_dir: Vec<Int> = h[1..].iter().map(|x| -x).collect();
            let mut ids = cell.ids.clone();
            for (k, a) in self.atoms.iter().enumerate() {
                match (a, &cell.ids[k]) {
                    (QAtom::Family { f, x, .. }, AtomCell::Family(t)) => {
                        let s = dot_iq(x, &cf);
                        if f.is_break(&s) {
                            let dir = dot(x, &out_dir);
                            ids[k] = AtomCell::Family(if dir.is_positive() { t + 1 } else { t - 1 });
                        }
                    }
                    (QAtom::Form { p, .. }, AtomCell::Form(cid)) => {
                        let z: Vec<Q> = p.rows().iter().map(|r| dot_iq(r, &cf)).collect();
                        let pd = p.mul_vec(&out_dir);
                        for fh in a.del().cell_facets(cid) {
                            if eval_h(&fh, &z).is_zero() && dot(&fh[1..], &pd).is_negative() {
                                ids[k] = AtomCell::Form(a.del().neighbor(cid, &fh));
                                break;
                            }
                        }
                    }
                    _ => {}
                }
            }
            out.push(ids);
        }
        out
    }

    fn walk(&mut self) -> Result<()> {
        let gq = self.gq();
        if gq == 0 {
            let ids = vec![AtomCell::Flat; self.atoms.len()];
            self.maximal = vec![MaxCell { poly: Polytope::from_vertices(0, &[Vec::new()]), ids }];
            return Ok(());
        }
        let y0 = self.start_point();
        let ids = self.ids_at(&y0);
        let poly = self.cell_poly(&ids);
        let (ids, poly) = self.canonical(ids, poly);
        let mut found: BTreeMap<Vec<Vec<Q>>, MaxCell> = BTreeMap::new();
        let mut frontier = vec![MaxCell { poly: poly.clone(), ids }];
        found.insert(poly.vertices.clone(), frontier[0].clone());
        while !frontier.is_empty() {
            let cand: Vec<Vec<AtomCell>> = crate::par::map(&frontier, |c| self.neighbors(c)).into_iter().flatten().collect();
            let built: Vec<MaxCell> = crate::par::map(&cand, |ids| {
                let poly = self.cell_poly(ids);
                let (ids, poly) = self.canonical(ids.clone(), poly);
                MaxCell { poly, ids }
            });
            let mut next = Vec::new();
            for c in built {
                if c.poly.affine_dim() != gq as isize {
                    return Err(Error::Validation("refinement walk produced a degenerate cell".into()));
                }
                if !found.contains_key(&c.poly.vertices) {
                    found.insert(c.poly.vertices.clone(), c.clone());
                    next.push(c);
                }
            }
            if found.len() > MAX_CELLS {
                return Err(Error::Refusal(format!("more than {MAX_CELLS} cell classes")));
            }
            frontier = next;
        }
        self.maximal = found.into_values().collect();
        Ok(())
    }

    fn build_faces(&mut self) {
        let per_cell: Vec<Vec<(Vec<Vec<Q>>, usize, Vec<Int>)>> = crate::par::map_range(self.maximal.len(), |i| {
            let p = &self.maximal[i].poly;
            p.faces()
                .into_iter()
                .map(|(_, idx)| {
                    let mut vs = p.face_vertices(&idx);
                    vs.sort();
                    let m: Vec<Int> = vs[0].iter().map(floor_q).collect();
                    let vs: Vec<Vec<Q>> = vs.iter().map(|v| v.iter().zip(&m).map(|(a, b)| a - qi(b)).collect()).collect();
                    (vs, i, m)
                })
                .collect()
        });
        let mut classes: BTreeMap<Vec<Vec<Q>>, BTreeSet<(usize, Vec<Int>)>> = BTreeMap::new();
        for (vs, i, m) in per_cell.into_iter().flatten() {
            let neg: Vec<Int> = m.iter().map(|x| -x).collect();
            classes.entry(vs).or_default().insert((i, neg));
        }
        let gq = self.gq();
        let entries: Vec<(Vec<Vec<Q>>, BTreeSet<(usize, Vec<Int>)>)> = classes.into_iter().collect();
        let mut faces: Vec<FaceClass> = crate::par::map(&entries, |(vs, cont)| {
            let poly = Polytope::from_vertices(gq, vs);
            let immersed = is_immersed(&poly);
            FaceClass { dim: poly.affine_dim().max(0) as usize, poly, containing: cont.iter().cloned().collect(), immersed }
        });
        faces.sort_by(|a, b| (a.dim, &a.poly.vertices).cmp(&(b.dim, &b.poly.vertices)));
        self.faces = faces;
    }

    /// Face classes by dimension.
    pub fn census(&self) -> BTreeMap<usize, usize> {
        let mut c = BTreeMap::new();
        for f in &self.faces {
            *c.entry(f.dim).or_insert(0) += 1;
        }
        c
    }

    pub fn faces_of_dim(&self, d: usize) -> Vec<usize> {
        (0..self.faces.len()).filter(|&i| self.faces[i].dim == d).collect()
    }

    /// Slope of section `s` on `maximal[c] + t`, as a covector on `Q^g`.
    pub fn slope(&self, s: usize, c: usize, t: &[Int]) -> Vec<Q> {
        let ids = self.translate_ids(&self.maximal[c].ids, t);
        let mut out = self.linear[s].clone();
        for k in self.section_atoms[s].clone() {
            match (&self.atoms[k], &ids[k]) {
                (QAtom::Family { f, orig, .. }, AtomCell::Family(tt)) => {
                    let sc = f.slope_scalar(tt);
                    for (o, x) in out.iter_mut().zip(orig) {
                        *o += &sc * qi(x);
                    }
                }
                (QAtom::Form { f, .. }, AtomCell::Form(cid)) => {
                    let dz = f.red.del.as_ref().unwrap().slope(cid);
                    for (i, o) in out.iter_mut().enumerate() {
                        let v: Q = dz.iter().zip(f.red.p.col(i)).map(|(a, b)| a * qi(&b)).sum::<Q>() - &f.red.resid[i];
                        *o += v * &f.scale;
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Lift a quotient point to `Q^g` (zero lineality component).
    pub fn lift_point(&self, y: &[Q]) -> Vec<Q> {
        if self.gq() == 0 {
            return vec![Q::zero(); self.g];
        }
        let mut all = self.proj.rows().to_vec();
        all.extend(Sublattice::span(self.g, self.proj.rows()).complement());
        let inv = unimodular_inverse(&IntMatrix::from_rows_with_cols(all, self.g));
        (0..self.g).map(|i| (0..self.gq()).map(|j| qi(inv.get(i, j)) * &y[j]).sum()).collect()
    }

    /// Primitive integral covector on `Q^g` normal to a codimension-one face.
    pub fn wall_normal(&self, f: &FaceClass) -> Vec<Int> {
        assert_eq!(f.dim + 1, self.gq());
        let e = &f.poly.equations[0];
        let n: Vec<Int> = (0..self.g).map(|i| dot(&e[1..], &self.proj.col(i))).collect();
        crate::arith::primitive(&n)
    }

    /// Bending parameter of section `s` across a codimension-one face:
    /// the slope jump divided by the primitive wall normal.
    pub fn wall_weight(&self, s: usize, f: &FaceClass) -> Q {
        let n = self.wall_normal(f);
        let (c1, t1) = &f.containing[0];
        let (c2, t2) = &f.containing[f.containing.len() - 1];
        let d: Vec<Q> = self.slope(s, *c2, t2).iter().zip(self.slope(s, *c1, t1)).map(|(a, b)| a - b).collect();
        let k = n.iter().position(|x| !x.is_zero()).unwrap();
        (&d[k] / qi(&n[k])).abs()
    }

    /// Point of `M_R` (with zero lineality component) in the relative
    /// interior of a face class.
    pub fn face_point(&self, f: &FaceClass) -> Vec<Q> {
        self.lift_point(&f.poly.centroid())
    }

    /// Vertices of all face classes lifted to `Q^g`.
    pub fn vertex_points(&self) -> Vec<Vec<Q>> {
        self.faces.iter().filter(|f| f.dim == 0).map(|f| self.lift_point(&f.poly.vertices[0])).collect()
    }
}

/// `F ∩ (F + m) ≠ ∅` for some nonzero integer `m`.
pub fn is_immersed(f: &Polytope) -> bool {
    let g = f.dim;
    if g == 0 || f.is_empty() {
        return false;
    }
    let mut ranges = Vec::new();
    for k in 0..g {
        let lo = f.vertices.iter().map(|v| v[k].clone()).min().unwrap();
        let hi = f.vertices.iter().map(|v| v[k].clone()).max().unwrap();
        let w = floor_q(&(hi - lo));
        ranges.push(w);
    }
    let mut ms: Vec<Vec<Int>> = vec![Vec::new()];
    for w in &ranges {
        let mut next = Vec::new();
        for m in &ms {
            let mut x = -w.clone();
            while &x <= w {
                let mut m2 = m.clone();
                m2.push(x.clone());
                next.push(m2);
                x += 1;
            }
        }
        ms = next;
    }
    ms.into_iter().filter(|m| m.iter().any(|x| !x.is_zero())).any(|m| {
        let shift = |h: &Vec<Int>| {
            let mut h2 = h.clone();
            h2[0] = &h[0] - dot(&h[1..], &m);
            h2
        };
        let mut ineqs = f.facets.clone();
        ineqs.extend(f.facets.iter().map(shift));
        let mut eqs = f.equations.clone();
        eqs.extend(f.equations.iter().map(shift));
        Polytope::from_halfspaces(g, &ineqs, &eqs).is_some_and(|p| !p.is_empty())
    })
}

/// Every point of the arrangement `{x·m ∈ ρ + Z}` lies on hyperplanes with
/// linearly independent normals.
pub fn arrangement_is_transversal(g: usize, hyper: &[(Vec<Int>, Q)]) -> bool {
    let secs: Vec<PLSection> = hyper
        .iter()
        .map(|(x, r)| PLSection::family(x.clone(), vec![r.clone()], vec![Q::one()]).unwrap())
        .collect();
    let refs: Vec<&PLSection> = secs.iter().collect();
    let Ok(pc) = PeriodicComplex::refine(g, &refs) else { return false };
    for p in pc.vertex_points() {
        let through: Vec<Vec<Q>> = hyper
            .iter()
            .filter(|(x, r)| (dot_iq(x, &p) - r).denom().is_one())
            .map(|(x, _)| to_q(x))
            .collect();
        if rank_q(&through) < through.len() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{ints, q};
    use crate::plsection::{pl_from_form, tate};

    fn fam(n: &[i64], offs: &[(i64, i64)]) -> PLSection {
        PLSection::family(ints(n), offs.iter().map(|&(a, b)| q(a, b)).collect(), vec![q(1, 1); offs.len()]).unwrap()
    }

    #[test]
    fn tate_complex() {
        let t = tate();
        let pc = PeriodicComplex::refine(1, &[&t]).unwrap();
        assert_eq!(pc.census(), BTreeMap::from([(0, 1), (1, 1)]));
        let w = &pc.faces[0];
        assert_eq!(pc.wall_weight(0, w), q(1, 1));
        assert!(!pc.faces[0].immersed && pc.faces[1].immersed);
    }

    #[test]
    fn theta_graph_refinement() {
        let (a, b, c) = (fam(&[1, 0], &[(0, 1)]), fam(&[0, 1], &[(0, 1)]), fam(&[1, 1], &[(0, 1)]));
        let pc = PeriodicComplex::refine(2, &[&a, &b, &c]).unwrap();
        assert_eq!(pc.census(), BTreeMap::from([(0, 1), (1, 3), (2, 2)]));
        let only3 = PeriodicComplex::refine(2, &[&c]).unwrap();
        assert_eq!(only3.h(), 1);
        assert_eq!(only3.census(), BTreeMap::from([(0, 1), (1, 1)]));
    }

    #[test]
    fn shifted_theta_refinement() {
        let (a, b, c) = (fam(&[1, 0], &[(0, 1)]), fam(&[0, 1], &[(0, 1)]), fam(&[1, 1], &[(1, 2)]));
        let pc = PeriodicComplex::refine(2, &[&a, &b, &c]).unwrap();
        let maxes: Vec<usize> = pc.maximal.iter().map(|m| m.poly.vertices.len()).collect();
        let mut sorted = maxes.clone();
        sorted.sort();
        assert_eq!(sorted, vec![3, 3, 6]);
        let areas: Vec<Q> = pc.maximal.iter().map(|m| m.poly.volume()).collect();
        assert_eq!(areas.iter().sum::<Q>(), q(1, 1));
    }

    #[test]
    fn delaunay_form_refinement() {
        let s = pl_from_form(&IntMatrix::from_i64(&[&[4, 1], &[1, 3]]), None).unwrap();
        let pc = PeriodicComplex::refine(2, &[&s]).unwrap();
        assert_eq!(pc.census(), BTreeMap::from([(0, 1), (1, 3), (2, 2)]));
        let s = pl_from_form(&IntMatrix::identity(2), None).unwrap();
        let pc = PeriodicComplex::refine(2, &[&s]).unwrap();
        assert_eq!(pc.census(), BTreeMap::from([(0, 1), (1, 2), (2, 1)]));
    }

    #[test]
    fn slopes_jump_by_weights() {
        let s = fam(&[1], &[(0, 1), (1, 3)]);
        let pc = PeriodicComplex::refine(1, &[&s]).unwrap();
        for f in pc.faces.iter().filter(|f| f.dim == 0) {
            assert_eq!(pc.wall_weight(0, f), q(1, 1));
        }
        assert_eq!(pc.maximal.len(), 2);
    }

    #[test]
    fn transversality() {
        let x = |a: i64, b: i64| ints(&[a, b]);
        assert!(arrangement_is_transversal(2, &[(x(1, 0), q(0, 1)), (x(0, 1), q(0, 1)), (x(1, 1), q(1, 2))]));
        assert!(!arrangement_is_transversal(2, &[(x(1, 0), q(0, 1)), (x(0, 1), q(0, 1)), (x(1, 1), q(0, 1))]));
    }
}
