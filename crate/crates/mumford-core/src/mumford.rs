//! Mumford degenerations assembled from convex PL sections: overgraph
//! faces, fiber stratifications, singularity classification, K-triviality
//! and dual complexes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::arith::{clear_denominators, fmt_q, lcm_denoms, primitive, q_vec_json, qi, Int, Q};
use crate::complex::{FaceClass, PeriodicComplex};
use crate::delaunay::is_positive_definite;
use crate::error::{invalid, Error, Result};
use crate::lattice::matrix::int_to_json;
use crate::lattice::{elementary_divisors, kernel, IntMatrix, Polytope, RationalCone, Sublattice};
use crate::matroid::{is_unimodular, MatroidRep};
use crate::plsection::{is_transversal, Atom, PLSection};

/// Input of the construction: `k` convex sections on the torus of rank `g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MumfordData {
    pub name: String,
    pub g: usize,
    pub k: usize,
    pub d: Int,
    pub sections: Vec<PLSection>,
}

fn sum_q(a: &mut [Vec<Q>], b: &[Vec<Q>], c: &Q) {
    for (r, s) in a.iter_mut().zip(b) {
        for (x, y) in r.iter_mut().zip(s) {
            *x += y * c;
        }
    }
}

impl MumfordData {
    /// Validates maximality (positive-definite total form) and joint
    /// bending. `d` defaults to the least admissible denominator.
    pub fn new(name: &str, g: usize, d: Option<Int>, sections: Vec<PLSection>) -> Result<MumfordData> {
        if sections.is_empty() {
            return invalid("at least one section is required");
        }
        if let Some(s) = sections.iter().find(|s| s.g != g) {
            return invalid(format!("section of rank {} on a torus of rank {g}", s.g));
        }
        let mut covs = Vec::new();
        for s in &sections {
            covs.extend(s.bending_covectors());
        }
        if Sublattice::span(g, &covs).rank() < g {
            return invalid("the sections do not bend in every direction (no bounded cells)");
        }
        let mut total = vec![vec![Q::zero(); g]; g];
        for s in &sections {
            sum_q(&mut total, &s.quadratic_part_q(), &Q::one());
        }
        let den = lcm_denoms(&total.concat());
        let tm = IntMatrix::from_rows_with_cols(
            total.iter().map(|r| r.iter().map(|x| (x * qi(&den)).to_integer()).collect()).collect(),
            g,
        );
        if !is_positive_definite(&tm) {
            return invalid("the sum of the quadratic parts is not positive definite");
        }
        let mut data = MumfordData { name: name.to_string(), g, k: sections.len(), d: Int::one(), sections };
        let least = data.minimal_d()?;
        data.d = match d {
            Some(d) if d.is_positive() && d.is_multiple_of(&least) => d,
            Some(d) => return invalid(format!("denominator {d} is not a multiple of the required {least}")),
            None => least,
        };
        Ok(data)
    }

    pub fn from_json(v: &Value) -> Result<MumfordData> {
        let Some(g) = v.get("g").and_then(Value::as_u64) else {
            return invalid("missing integer field \"g\"");
        };
        let g = g as usize;
        let Some(secs) = v.get("sections").and_then(Value::as_array) else {
            return invalid("missing array field \"sections\"");
        };
        let sections: Vec<PLSection> = secs.iter().map(|s| PLSection::from_json(s, Some(g))).collect::<Result<_>>()?;
        if let Some(k) = v.get("k").and_then(Value::as_u64) {
            if k as usize != sections.len() {
                return invalid(format!("k = {k} but {} sections given", sections.len()));
            }
        }
        let d = match v.get("d") {
            Some(d) => Some(crate::lattice::matrix::int_from_json(d)?),
            None => None,
        };
        let name = v.get("name").and_then(Value::as_str).unwrap_or("unnamed");
        MumfordData::new(name, g, d, sections)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "g": self.g,
            "k": self.k,
            "d": int_to_json(&self.d),
            "sections": self.sections.iter().map(PLSection::to_json).collect::<Vec<_>>(),
        })
    }

    /// Sum of all sections.
    pub fn total(&self) -> PLSection {
        let mut t = PLSection::zero(self.g);
        for s in &self.sections {
            t = t.add(s);
        }
        t
    }

    pub fn total_form(&self) -> Vec<Vec<Q>> {
        self.total().quadratic_part_q()
    }

    pub fn refinement(&self, idx: &[usize]) -> Result<PeriodicComplex> {
        let secs: Vec<&PLSection> = idx.iter().map(|&i| &self.sections[i]).collect();
        PeriodicComplex::refine(self.g, &secs)
    }

    pub fn full_refinement(&self) -> Result<PeriodicComplex> {
        self.refinement(&(0..self.k).collect::<Vec<_>>())
    }

    /// Least `d` with every dicing vertex in `(1/d)M`, every section value
    /// at a vertex in `(1/d)Z` and every slope, on every translate of a
    /// cell, integral after scaling by `d`.
    pub fn minimal_d(&self) -> Result<Int> {
        let pc = self.full_refinement()?;
        let mut all: Vec<Q> = Vec::new();
        for v in pc.vertex_points() {
            all.extend(v.iter().cloned());
            for s in &self.sections {
                all.push(s.value(&v));
            }
        }
        for s in &self.sections {
            all.extend(s.quadratic_part_q().concat());
        }
        for c in 0..pc.maximal.len() {
            for s in 0..self.k {
                all.extend(pc.slope(s, c, &vec![Int::zero(); pc.gq()]));
            }
        }
        Ok(lcm_denoms(&all))
    }
}

/// A translation class of faces `(I, F)` of the overgraph, where `F` is a
/// face of the refinement of `Bend(b_i)`, `i ∈ I`, and the coordinates
/// `y_j`, `j ∉ I`, are free.
#[derive(Clone, Debug)]
pub struct FaceRecord {
    pub strata: Vec<usize>,
    /// Dimension of the overgraph face.
    pub dim: usize,
    /// Face of the refinement, in quotient coordinates.
    pub face: Polytope,
    /// Normal cone in `N_R × R^k`, generated by `(-a, e_i)` over the slopes
    /// `a` of `b_i` around the face.
    pub cone: RationalCone,
    pub compact: bool,
    pub h: usize,
    pub immersed: bool,
}

impl FaceRecord {
    /// Every ray maps into the face of the orthant spanned by `e_i`, `i ∈ I`.
    pub fn is_flat(&self, g: usize) -> bool {
        self.cone.rays.iter().all(|r| {
            let img: Vec<usize> = (0..r.len() - g).filter(|&j| !r[g + j].is_zero()).collect();
            img.len() == 1 && self.strata.contains(&img[0])
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "strata": self.strata.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "dim": self.dim,
            "face_vertices": self.face.vertices.iter().map(|v| q_vec_json(v)).collect::<Vec<_>>(),
            "cone_rays": self.cone.rays.iter().map(|r| r.iter().map(int_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "compact": self.compact,
            "h": self.h,
            "immersed": self.immersed,
            "standard_affine": self.cone.is_standard_affine(),
        })
    }
}

pub(crate) fn subsets(k: usize) -> Vec<Vec<usize>> {
    (1u64..(1u64 << k)).map(|m| (0..k).filter(|&i| m >> i & 1 == 1).collect()).collect()
}

/// Ray `(-a, e_i)` scaled to a primitive integer vector.
fn overgraph_ray(a: &[Q], i: usize, k: usize) -> Vec<Int> {
    let mut v: Vec<Q> = a.iter().map(|x| -x.clone()).collect();
    v.extend((0..k).map(|j| if j == i { Q::one() } else { Q::zero() }));
    primitive(&clear_denominators(&v))
}

fn face_rays(pc: &PeriodicComplex, f: &FaceClass, strata: &[usize], k: usize) -> Vec<Vec<Int>> {
    let mut rays = BTreeSet::new();
    for (pos, &i) in strata.iter().enumerate() {
        for (c, t) in &f.containing {
            rays.insert(overgraph_ray(&pc.slope(pos, *c, t), i, k));
        }
    }
    rays.into_iter().collect()
}

/// One record per translation class of faces of the overgraph
/// `Γ(b_1,…,b_k) + (R≥0)^k`, including the improper face over `I = ∅`.
pub fn overgraph_faces(data: &MumfordData) -> Result<Vec<FaceRecord>> {
    let (g, k) = (data.g, data.k);
    let mut out = vec![FaceRecord {
        strata: Vec::new(),
        dim: g + k,
        face: Polytope::from_vertices(0, &[Vec::new()]),
        cone: RationalCone::from_generators(g + k, &[], &[]),
        compact: false,
        h: g,
        immersed: false,
    }];
    for strata in subsets(k) {
        let pc = data.refinement(&strata)?;
        let h = pc.h();
        let recs = crate::par::map(&pc.faces, |f| {
            let rays = face_rays(&pc, f, &strata, k);
            FaceRecord {
                strata: strata.clone(),
                dim: f.dim + h + k - strata.len(),
                face: f.poly.clone(),
                cone: RationalCone::from_generators(g + k, &rays, &[]),
                compact: h == 0,
                h,
                immersed: f.immersed,
            }
        });
        out.extend(recs);
    }
    Ok(out)
}

/// Component of a fiber stratum.
#[derive(Clone, Debug)]
pub struct CellDescriptor {
    pub polytope: Polytope,
    pub compact: bool,
    /// Dimension of the abelian part: the cell is `F₀ × T^h`.
    pub h: usize,
    pub self_glued: bool,
    pub normalized_volume: Q,
    pub shape: String,
}

impl CellDescriptor {
    pub fn to_json(&self) -> Value {
        json!({
            "vertices": self.polytope.vertices.iter().map(|v| q_vec_json(v)).collect::<Vec<_>>(),
            "compact": self.compact,
            "h": self.h,
            "self_glued": self.self_glued,
            "normalized_volume": fmt_q(&self.normalized_volume),
            "shape": self.shape,
        })
    }
}

/// Name of the toric surface of the least lattice dilate of `p`.
fn shape_name(p: &Polytope) -> String {
    let n = p.vertices.len();
    let den = lcm_denoms(&p.vertices.concat());
    let vol = p.normalized_volume() * qi(&den).pow(p.dim as i32);
    let int = |k: i64| vol == Q::from_integer(Int::from(k));
    match (p.dim, n) {
        (0, _) => "point".into(),
        (1, _) => "P1".into(),
        (2, 3) if int(1) => "P2".into(),
        (2, 4) if int(2) => "P1xP1".into(),
        (2, 6) if int(6) => "Bl3P2".into(),
        (_, n) => format!("toric({n} vertices)"),
    }
}

#[derive(Clone, Debug)]
pub struct Stratification {
    pub strata: Vec<usize>,
    pub complex: PeriodicComplex,
    pub cells: Vec<CellDescriptor>,
}

impl Stratification {
    pub fn to_json(&self) -> Value {
        json!({
            "strata": self.strata.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "h": self.complex.h(),
            "census": self.complex.census().iter().map(|(d, n)| (d.to_string(), json!(n))).collect::<serde_json::Map<_, _>>(),
            "cells": self.cells.iter().map(CellDescriptor::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn summary(&self) -> String {
        let mut by: BTreeMap<(bool, usize, String), usize> = BTreeMap::new();
        for c in &self.cells {
            *by.entry((c.compact, c.polytope.dim, c.shape.clone())).or_insert(0) += 1;
        }
        let parts: Vec<String> = by
            .iter()
            .map(|((compact, dim, shape), n)| {
                if *compact {
                    format!("{n} compact {dim}-cell{} ({shape})", if *n == 1 { "" } else { "s" })
                } else {
                    format!("{n} cell{} F0xT^{} with F0 of dim {dim} ({shape})", if *n == 1 { "" } else { "s" }, self.complex.h())
                }
            })
            .collect();
        parts.join(", ")
    }
}

/// Components of the fiber over the stratum where `u_i = 0` exactly for
/// `i ∈ strata` (0-based).
pub fn stratification(data: &MumfordData, strata: &[usize]) -> Result<Stratification> {
    if strata.is_empty() {
        return invalid("the stratum index set must be nonempty");
    }
    if let Some(i) = strata.iter().find(|&&i| i >= data.k) {
        return invalid(format!("stratum index {} out of range 1..{}", i + 1, data.k));
    }
    let mut s: Vec<usize> = strata.to_vec();
    s.sort();
    s.dedup();
    let pc = data.refinement(&s)?;
    let h = pc.h();
    let cells = pc
        .maximal
        .iter()
        .map(|m| {
            let f = pc.faces.iter().find(|f| f.poly.vertices == m.poly.vertices && f.dim == pc.gq());
            let vol = m.poly.normalized_volume();
            CellDescriptor {
                shape: shape_name(&m.poly),
                polytope: m.poly.clone(),
                compact: h == 0,
                h,
                self_glued: f.is_some_and(|f| f.immersed),
                normalized_volume: vol,
            }
        })
        .collect();
    Ok(Stratification { strata: s, complex: pc, cells })
}

/// Local normal forms, ordered so that merging takes the worse one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocalForm {
    Nodal,
    Semistable,
    NearlyNodal,
    Other,
}

impl LocalForm {
    pub fn name(&self) -> &'static str {
        match self {
            LocalForm::Nodal => "nodal",
            LocalForm::Semistable => "semistable",
            LocalForm::NearlyNodal => "nearly-nodal",
            LocalForm::Other => "other",
        }
    }

    pub fn merge(self, o: LocalForm) -> LocalForm {
        match (self, o) {
            (a, b) if a == b => a,
            (LocalForm::Nodal, b) | (b, LocalForm::Nodal) => b,
            _ => LocalForm::Other,
        }
    }

    pub fn is_nearly_nodal(&self) -> bool {
        matches!(self, LocalForm::Nodal | LocalForm::NearlyNodal)
    }

    pub fn is_semistable(&self) -> bool {
        matches!(self, LocalForm::Nodal | LocalForm::Semistable)
    }
}

/// Unit vector index of the orthant image of a ray, if it is one.
fn unit_image(r: &[Int], g: usize) -> Option<usize> {
    let nz: Vec<usize> = (g..r.len()).filter(|&j| !r[j].is_zero()).collect();
    (nz.len() == 1 && r[nz[0]].is_one()).then(|| nz[0] - g)
}

pub(crate) fn is_lattice_basis_part(rows: &[Vec<Int>]) -> bool {
    if rows.is_empty() {
        return true;
    }
    let m = IntMatrix::from_rows(rows.to_vec());
    m.rank() == rows.len() && elementary_divisors(&m).iter().all(|d| d.is_one())
}

/// Matches a cone, given by its rays in `N × Z^k`, against the normal forms
/// `x y = u_i` (distinct `i`), products of such sharing a `u_i`, and
/// `x_1⋯x_n = u_i`.
pub fn classify_cone(rays: &[Vec<Int>], g: usize) -> LocalForm {
    let mut groups: BTreeMap<usize, Vec<Vec<Int>>> = BTreeMap::new();
    let mut horizontal = Vec::new();
    for r in rays {
        if r[g..].iter().all(|x| x.is_zero()) {
            horizontal.push(r.clone());
            continue;
        }
        match unit_image(r, g) {
            Some(i) => groups.entry(i).or_default().push(r[..g].to_vec()),
            None => return LocalForm::Other,
        }
    }
    if is_lattice_basis_part(rays) {
        return if groups.values().all(|v| v.len() <= 2) { LocalForm::Nodal } else { LocalForm::Semistable };
    }
    // products of unit cubes at each height
    let mut gens = horizontal;
    for (&i, pts) in &groups {
        let mut pts = pts.clone();
        pts.sort();
        let p0 = pts[0].clone();
        let diffs: BTreeSet<Vec<Int>> = pts.iter().map(|p| p.iter().zip(&p0).map(|(a, b)| a - b).collect()).collect();
        let nonzero: Vec<&Vec<Int>> = diffs.iter().filter(|d| d.iter().any(|x| !x.is_zero())).collect();
        let edges: Vec<Vec<Int>> = nonzero
            .iter()
            .filter(|d| {
                !nonzero.iter().any(|x| {
                    *x != **d && {
                        let y: Vec<Int> = d.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                        y.iter().any(|v| !v.is_zero()) && diffs.contains(&y) && y != **x
                    }
                })
            })
            .map(|d| (*d).clone())
            .collect();
        if pts.len() != 1 << edges.len() {
            return LocalForm::Other;
        }
        let mut sums: BTreeSet<Vec<Int>> = BTreeSet::new();
        for m in 0u64..(1 << edges.len()) {
            let mut s = vec![Int::zero(); g];
            for (j, e) in edges.iter().enumerate() {
                if m >> j & 1 == 1 {
                    for (a, b) in s.iter_mut().zip(e) {
                        *a += b;
                    }
                }
            }
            sums.insert(s);
        }
        if sums != diffs {
            return LocalForm::Other;
        }
        let mut base = p0.clone();
        base.extend((0..rays[0].len() - g).map(|j| if j == i { Int::one() } else { Int::zero() }));
        gens.push(base);
        for e in edges {
            let mut v = e.clone();
            v.extend(std::iter::repeat(Int::zero()).take(rays[0].len() - g));
            gens.push(v);
        }
    }
    if is_lattice_basis_part(&gens) {
        LocalForm::NearlyNodal
    } else {
        LocalForm::Other
    }
}

/// Maximal cones of the normal fan, one per vertex class of the full
/// refinement, with the strata index of every ray.
pub fn vertex_cones(data: &MumfordData, pc: &PeriodicComplex) -> Vec<Vec<(usize, Vec<Int>)>> {
    let all: Vec<usize> = (0..data.k).collect();
    pc.faces
        .iter()
        .filter(|f| f.dim == 0)
        .map(|f| {
            let mut out = Vec::new();
            for &i in &all {
                let mut rs = BTreeSet::new();
                for (c, t) in &f.containing {
                    rs.insert(overgraph_ray(&pc.slope(i, *c, t), i, data.k));
                }
                out.extend(rs.into_iter().map(|r| (i, r)));
            }
            out
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SingularityReport {
    pub smooth: bool,
    /// `(I, form)` for every nonempty coordinate stratum.
    pub strata: Vec<(Vec<usize>, LocalForm)>,
    pub overall: LocalForm,
    pub strict: bool,
    pub witnesses: Vec<String>,
}

impl SingularityReport {
    pub fn nodal(&self) -> bool {
        self.overall == LocalForm::Nodal
    }

    pub fn to_json(&self) -> Value {
        json!({
            "smooth": self.smooth,
            "classification": self.overall.name(),
            "strict": self.strict,
            "strata": self.strata.iter().map(|(i, f)| json!({
                "I": i.iter().map(|x| x + 1).collect::<Vec<_>>(),
                "form": f.name(),
            })).collect::<Vec<_>>(),
            "witnesses": self.witnesses,
        })
    }
}

/// Strata enumerated exhaustively up to this many parameters; beyond it,
/// only the singletons and the full set.
pub const MAX_STRATA_PARAMS: usize = 12;

pub fn classify_singularities(data: &MumfordData) -> Result<SingularityReport> {
    let g = data.g;
    let pc = data.full_refinement()?;
    let cones = vertex_cones(data, &pc);
    let verts: Vec<&FaceClass> = pc.faces.iter().filter(|f| f.dim == 0).collect();
    let mut witnesses = Vec::new();
    let mut smooth = true;
    for (v, cone) in verts.iter().zip(&cones) {
        let rays: Vec<Vec<Int>> = cone.iter().map(|(_, r)| r.clone()).collect();
        if !is_lattice_basis_part(&rays) || rays.len() != g + data.k {
            smooth = false;
            witnesses.push(format!(
                "vertex {} has a non-standard cone with {} rays",
                fmt_point(&pc.lift_point(&v.poly.vertices[0])),
                rays.len()
            ));
        }
    }
    let all_strata = if data.k <= MAX_STRATA_PARAMS {
        subsets(data.k)
    } else {
        let mut s: Vec<Vec<usize>> = (0..data.k).map(|i| vec![i]).collect();
        s.push((0..data.k).collect());
        s
    };
    let strata: Vec<(Vec<usize>, LocalForm)> = crate::par::map(&all_strata, |s| {
        let mut form = LocalForm::Nodal;
        for cone in &cones {
            let rays: Vec<Vec<Int>> = cone.iter().filter(|(i, _)| s.contains(i)).map(|(_, r)| r.clone()).collect();
            form = form.merge(classify_cone(&rays, g));
        }
        (s.clone(), form)
    });
    let overall = strata.iter().fold(LocalForm::Nodal, |a, (_, f)| a.merge(*f));
    for (s, f) in &strata {
        if *f == LocalForm::Other {
            witnesses.push(format!("stratum {:?} matches no normal form", s.iter().map(|i| i + 1).collect::<Vec<_>>()));
        }
    }
    let mut strict = true;
    for i in 0..data.k {
        let pci = data.refinement(&[i])?;
        if pci.faces.iter().any(|f| f.dim == pci.gq() && f.immersed) {
            strict = false;
            witnesses.push(format!("a component of the divisor u_{} = 0 meets its own translate", i + 1));
        }
    }
    Ok(SingularityReport { smooth, strata, overall, strict, witnesses })
}

fn fmt_point(v: &[Q]) -> String {
    format!("({})", v.iter().map(fmt_q).collect::<Vec<_>>().join(","))
}

/// Vertices of the height-`(1,…,1)` slice of the normal fan:
/// `-Σ_i a_i(C)` over maximal cells `C`.
pub fn slice_vertices(data: &MumfordData, pc: &PeriodicComplex) -> Vec<Vec<Q>> {
    (0..pc.maximal.len())
        .map(|c| {
            let zero = vec![Int::zero(); pc.gq()];
            let mut s = vec![Q::zero(); data.g];
            for i in 0..data.k {
                for (a, b) in s.iter_mut().zip(pc.slope(i, c, &zero)) {
                    *a -= b;
                }
            }
            s
        })
        .collect()
}

/// The slice is a tessellation by lattice polytopes. Translating a cell by
/// `m` moves its slice vertex by `-B·m`, so the total form must be integral.
pub fn is_k_trivial(data: &MumfordData) -> Result<bool> {
    let pc = data.full_refinement()?;
    let integral_form = data.total_form().iter().flatten().all(|x| x.denom().is_one());
    Ok(integral_form && slice_vertices(data, &pc).iter().flatten().all(|x| x.denom().is_one()))
}

/// Cellular chain data of the slice tessellation modulo `Λ_B`.
#[derive(Clone, Debug)]
pub struct DualComplex {
    /// Cell counts by dimension.
    pub cells: Vec<usize>,
    pub d1: IntMatrix,
    pub d2: IntMatrix,
    pub h1_rank: usize,
    pub h1_torsion: Vec<Int>,
    /// Image of `e_j` under `M -> H_1`: a closed edge path in the periodic
    /// dual graph from a cell to its translate by `e_j`.
    pub cycle_lifts: Option<Vec<Vec<Int>>>,
    /// The lifts together with the boundaries span all cycles.
    pub lifts_generate: Option<bool>,
}

impl DualComplex {
    pub fn to_json(&self) -> Value {
        json!({
            "cells": self.cells,
            "h1_rank": self.h1_rank,
            "h1_torsion": self.h1_torsion.iter().map(int_to_json).collect::<Vec<_>>(),
            "lifts_generate": self.lifts_generate,
        })
    }
}

fn face_key(vs: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut v = vs.to_vec();
    v.sort();
    v
}

/// Canonical translate of a vertex list and the shift `m` with
/// `face = canonical + m`.
fn canonicalize(vs: &[Vec<Q>]) -> (Vec<Vec<Q>>, Vec<Int>) {
    let v = face_key(vs);
    let m: Vec<Int> = v[0].iter().map(crate::arith::floor_q).collect();
    let c = v.iter().map(|p| p.iter().zip(&m).map(|(a, b)| a - qi(b)).collect()).collect();
    (c, m)
}

fn add_v(a: &[Int], b: &[Int]) -> Vec<Int> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub_v(a: &[Int], b: &[Int]) -> Vec<Int> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dual_complex(data: &MumfordData) -> Result<DualComplex> {
    let pc = data.full_refinement()?;
    let g = pc.gq();
    if pc.h() > 0 {
        return Err(Error::Validation("the full refinement has unbounded cells".into()));
    }
    let nv = pc.maximal.len();
    let walls: Vec<usize> = if g >= 1 { pc.faces_of_dim(g - 1) } else { Vec::new() };
    let ridges: Vec<usize> = if g >= 2 { pc.faces_of_dim(g - 2) } else { Vec::new() };
    let ends: Vec<[(usize, Vec<Int>); 2]> = walls
        .iter()
        .map(|&w| {
            let c = &pc.faces[w].containing;
            assert_eq!(c.len(), 2, "a wall lies in exactly two maximal cells");
            [c[0].clone(), c[1].clone()]
        })
        .collect();
    let mut d1 = IntMatrix::zeros(nv, walls.len());
    for (j, e) in ends.iter().enumerate() {
        let (a, b) = (e[0].0, e[1].0);
        if a != b {
            d1.set(b, j, d1.get(b, j) + 1);
            d1.set(a, j, d1.get(a, j) - 1);
        }
    }
    // walls through each ridge, with shifts
    let ridge_index: BTreeMap<Vec<Vec<Q>>, usize> =
        ridges.iter().enumerate().map(|(r, &f)| (face_key(&pc.faces[f].poly.vertices), r)).collect();
    let mut ridge_walls: Vec<Vec<(usize, Vec<Int>)>> = vec![Vec::new(); ridges.len()];
    for (j, &w) in walls.iter().enumerate() {
        let p = &pc.faces[w].poly;
        for (dim, idx) in p.faces() {
            if g < 2 || dim != g - 2 {
                continue;
            }
            let (key, m) = canonicalize(&p.face_vertices(&idx));
            if let Some(&r) = ridge_index.get(&key) {
                ridge_walls[r].push((j, m.iter().map(|x| -x).collect()));
            }
        }
    }
    let mut d2 = IntMatrix::zeros(walls.len(), ridges.len());
    for (r, ws) in ridge_walls.iter().enumerate() {
        let edges: Vec<(usize, (usize, Vec<Int>), (usize, Vec<Int>))> = ws
            .iter()
            .map(|(j, s)| {
                let [a, b] = &ends[*j];
                (*j, (a.0, add_v(&a.1, s)), (b.0, add_v(&b.1, s)))
            })
            .collect();
        if edges.is_empty() {
            continue;
        }
        let mut used = vec![false; edges.len()];
        let start = edges[0].1.clone();
        let mut cur = start.clone();
        loop {
            let Some(e) = (0..edges.len()).find(|&e| !used[e] && (edges[e].1 == cur || edges[e].2 == cur)) else {
                break;
            };
            used[e] = true;
            let (j, a, b) = &edges[e];
            if *a == cur {
                d2.set(*j, r, d2.get(*j, r) + 1);
                cur = b.clone();
            } else {
                d2.set(*j, r, d2.get(*j, r) - 1);
                cur = a.clone();
            }
            if cur == start {
                break;
            }
        }
    }
    let r1 = if walls.is_empty() { 0 } else { d1.rank() };
    let r2 = if ridges.is_empty() || walls.is_empty() { 0 } else { d2.rank() };
    let h1_rank = walls.len() - r1 - r2;
    let h1_torsion: Vec<Int> = if r2 > 0 { elementary_divisors(&d2).into_iter().filter(|d| !d.is_one()).collect() } else { Vec::new() };
    let (cycle_lifts, lifts_generate) = if g <= 3 && !walls.is_empty() {
        let lifts = cycle_lifts(&ends, g);
        let z: Vec<Vec<Int>> = match &lifts {
            Some(l) => l.clone(),
            None => Vec::new(),
        };
        let mut gens: Vec<Vec<Int>> = d2.cols_vec();
        gens.extend(z.iter().cloned());
        let span = Sublattice::span(walls.len(), &gens);
        let ker = Sublattice { ambient: walls.len(), basis: kernel(&d1) };
        let ok = lifts.is_some() && span == ker;
        (lifts, Some(ok))
    } else {
        (None, None)
    };
    let mut cells = vec![nv, walls.len()];
    if g >= 2 {
        cells.push(ridges.len());
    }
    Ok(DualComplex { cells, d1, d2, h1_rank, h1_torsion, cycle_lifts, lifts_generate })
}

/// Breadth-first paths in the periodic dual graph from cell 0 to its
/// translates by the unit vectors.
fn cycle_lifts(ends: &[[(usize, Vec<Int>); 2]], g: usize) -> Option<Vec<Vec<Int>>> {
    let ne = ends.len();
    let bound = Int::from(6);
    let origin = (0usize, vec![Int::zero(); g]);
    let mut parent: BTreeMap<(usize, Vec<Int>), Option<((usize, Vec<Int>), usize, i64)>> = BTreeMap::new();
    parent.insert(origin.clone(), None);
    let mut queue = VecDeque::from([origin.clone()]);
    while let Some(node) = queue.pop_front() {
        for (j, [a, b]) in ends.iter().enumerate() {
            let mut nexts = Vec::new();
            if a.0 == node.0 {
                nexts.push(((b.0, add_v(&b.1, &sub_v(&node.1, &a.1))), 1i64));
            }
            if b.0 == node.0 {
                nexts.push(((a.0, add_v(&a.1, &sub_v(&node.1, &b.1))), -1i64));
            }
            for (n, sgn) in nexts {
                if n.1.iter().any(|x| x.abs() > bound) || parent.contains_key(&n) {
                    continue;
                }
                parent.insert(n.clone(), Some((node.clone(), j, sgn)));
                queue.push_back(n);
            }
        }
    }
    let mut out = Vec::new();
    for k in 0..g {
        let mut target = origin.clone();
        target.1[k] = Int::one();
        parent.get(&target)?;
        let mut chain = vec![Int::zero(); ne];
        let mut cur = target;
        while let Some(Some((prev, j, s))) = parent.get(&cur) {
            chain[*j] += Int::from(*s);
            cur = prev.clone();
        }
        out.push(chain);
    }
    Some(out)
}

/// Recognise a transversely shifted matroidal arrangement: every section a
/// single hyperplane family with all bending parameters one, unimodular
/// normals and transversal hyperplanes.
pub fn recover_arrangement(data: &MumfordData) -> Option<(MatroidRep, Vec<Vec<Q>>)> {
    let mut cols = Vec::new();
    let mut offsets = Vec::new();
    for s in &data.sections {
        let [Atom::Family(f)] = s.atoms.as_slice() else { return None };
        if f.residue_params.iter().any(|p| !p.is_one()) {
            return None;
        }
        cols.push(f.normal.clone());
        offsets.push(f.residues.clone());
    }
    let m = IntMatrix::from_cols(&cols, data.g);
    if m.rank() != data.g || !is_unimodular(&m) {
        return None;
    }
    if !is_transversal(&data.sections).ok()? {
        return None;
    }
    Some((MatroidRep::new(m), offsets))
}

/// Smith-form view of `M -> H_1` for reporting.
pub fn h1_summary(dc: &DualComplex) -> String {
    let tors: Vec<String> = dc.h1_torsion.iter().map(|d| format!("Z/{d}")).collect();
    if tors.is_empty() {
        format!("Z^{}", dc.h1_rank)
    } else {
        format!("Z^{} + {}", dc.h1_rank, tors.join(" + "))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::arith::{int, ints, q};
    use crate::matroid::{r10, theta_rep};
    use crate::plsection::{shifted_matroidal_arrangement, tate};

    pub fn theta3(offs: [(i64, i64); 3]) -> MumfordData {
        let rep = theta_rep();
        let o: Vec<Vec<Q>> = offs.iter().map(|&(a, b)| vec![q(a, b)]).collect();
        let (s, _) = shifted_matroidal_arrangement(&rep, &o).unwrap();
        MumfordData::new("theta3", 2, None, s).unwrap()
    }

    fn tate_data() -> MumfordData {
        MumfordData::new("tate", 1, None, vec![tate()]).unwrap()
    }

    #[test]
    fn rejects_linear_only() {
        let s = PLSection::zero(1).with_linear(vec![q(1, 1)], q(0, 1));
        assert!(MumfordData::new("lin", 1, None, vec![s]).is_err());
    }

    #[test]
    fn tate_faces_and_report() {
        let d = tate_data();
        let f = overgraph_faces(&d).unwrap();
        assert_eq!(f.len(), 3);
        let dims: Vec<usize> = f.iter().map(|r| r.cone.cone_dim()).collect();
        assert_eq!(dims, vec![0, 2, 1]);
        assert!(f.iter().all(|r| r.is_flat(1) && r.cone.is_standard_affine()));
        let rep = classify_singularities(&d).unwrap();
        assert!(rep.smooth && rep.nodal() && !rep.strict);
        assert!(is_k_trivial(&d).unwrap());
        let dc = dual_complex(&d).unwrap();
        assert_eq!((dc.cells.clone(), dc.h1_rank), (vec![1, 1], 1));
        assert_eq!(dc.lifts_generate, Some(true));
    }

    #[test]
    fn halved_tate_not_k_trivial() {
        let s = tate().scaled(&q(1, 2)).unwrap();
        let d = MumfordData::new("half", 1, None, vec![s]).unwrap();
        assert!(!is_k_trivial(&d).unwrap());
        assert_eq!(d.d, int(2));
    }

    #[test]
    fn theta_three_parameter() {
        let d = theta3([(0, 1), (0, 1), (0, 1)]);
        let s = stratification(&d, &[0, 1, 2]).unwrap();
        assert_eq!(s.cells.len(), 2);
        assert!(s.cells.iter().all(|c| c.shape == "P2" && c.compact));
        let s3 = stratification(&d, &[2]).unwrap();
        assert_eq!(s3.cells.len(), 1);
        assert_eq!((s3.cells[0].h, s3.cells[0].compact, s3.cells[0].self_glued), (1, false, true));
        let s12 = stratification(&d, &[0, 1]).unwrap();
        assert_eq!(s12.cells[0].shape, "P1xP1");
        let rep = classify_singularities(&d).unwrap();
        assert!(!rep.smooth);
        let dc = dual_complex(&d).unwrap();
        assert_eq!(dc.cells, vec![2, 3, 1]);
        assert_eq!(dc.h1_rank, 2);
        assert_eq!(dc.lifts_generate, Some(true));
        let faces = overgraph_faces(&d).unwrap();
        let full: Vec<&FaceRecord> = faces.iter().filter(|f| f.strata.len() == 3).collect();
        assert_eq!(full.len(), 6);
    }

    #[test]
    fn shifted_theta_is_smooth_nodal() {
        let d = theta3([(0, 1), (0, 1), (1, 2)]);
        assert_eq!(d.d, int(2));
        let rep = classify_singularities(&d).unwrap();
        assert!(rep.smooth && rep.nodal() && !rep.strict, "{rep:?}");
        assert!(is_k_trivial(&d).unwrap());
        let s = stratification(&d, &[0, 1, 2]).unwrap();
        let mut shapes: Vec<String> = s.cells.iter().map(|c| c.shape.clone()).collect();
        shapes.sort();
        assert_eq!(shapes, vec!["Bl3P2", "P2", "P2"]);
        assert!(recover_arrangement(&d).is_some());
    }

    #[test]
    fn double_offsets_are_strict() {
        let rep = theta_rep();
        let o = vec![vec![q(0, 1), q(1, 2)], vec![q(1, 4)], vec![q(1, 8)]];
        let (s, t) = shifted_matroidal_arrangement(&rep, &o).unwrap();
        assert!(t);
        let d = MumfordData::new("x", 2, None, s).unwrap();
        let r = classify_singularities(&d).unwrap();
        assert!(r.smooth && r.nodal());
        assert!(!r.strict);
    }

    #[test]
    fn cone_forms() {
        let g = 1;
        // x y = u
        assert_eq!(classify_cone(&[ints(&[1, 1]), ints(&[0, 1])], g), LocalForm::Nodal);
        // x y = u^3
        assert_eq!(classify_cone(&[ints(&[3, 1]), ints(&[0, 1])], g), LocalForm::Other);
        // x y z = u
        let g = 2;
        assert_eq!(classify_cone(&[ints(&[0, 0, 1]), ints(&[1, 0, 1]), ints(&[0, 1, 1])], g), LocalForm::Semistable);
        // x1 y1 = x2 y2 = u: cone over the unit square
        let sq = [ints(&[0, 0, 1]), ints(&[1, 0, 1]), ints(&[0, 1, 1]), ints(&[1, 1, 1])];
        assert_eq!(classify_cone(&sq, g), LocalForm::NearlyNodal);
    }

    #[test]
    fn json_round_trip() {
        let d = theta3([(0, 1), (0, 1), (1, 2)]);
        let back = MumfordData::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn r10_dual_complex() {
        let rep = r10();
        let o = vec![vec![q(0, 1)]; 10];
        let (s, _) = shifted_matroidal_arrangement(&rep, &o).unwrap();
        let d = MumfordData::new("r10", 5, None, s).unwrap();
        assert_eq!(dual_complex(&d).unwrap().h1_rank, 5);
    }
}
