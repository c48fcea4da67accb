//! Monomial base change of Mumford data and the resolution of the result:
//! first separate the bends of every node so that each carries a single
//! new coordinate (nearly nodal), then subdivide the remaining cube cones
//! by ordered pulling (semistable).

use std::collections::BTreeMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::arith::{qi, Int, Q};
use crate::error::{invalid, Error, Result};
use crate::lattice::matrix::int_to_json;
use crate::lattice::{IntMatrix, Polytope};
use crate::mumford::{
    classify_cone, classify_singularities, dual_complex, is_lattice_basis_part, subsets, vertex_cones, DualComplex,
    LocalForm, MumfordData, SingularityReport,
};
use crate::plsection::{Atom, FamilyAtom, PLSection};

/// `u_i = Π_j w_j^{r_ij}`: `k` rows (old coordinates) by `n` columns
/// (new coordinates). On polydisks the preimage of the coordinate divisor
/// is always simple normal crossings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialMap {
    pub r: IntMatrix,
}

impl MonomialMap {
    pub fn new(r: IntMatrix) -> Result<Self> {
        if r.nrows() == 0 || r.ncols() == 0 {
            return invalid("exponent matrix is empty");
        }
        if r.rows().iter().flatten().any(|x| x.is_negative()) {
            return invalid("exponents must be nonnegative");
        }
        if let Some(i) = (0..r.nrows()).find(|&i| r.row(i).iter().all(|x| x.is_zero())) {
            return invalid(format!("u_{} pulls back to a constant", i + 1));
        }
        if let Some(j) = (0..r.ncols()).find(|&j| r.col(j).iter().all(|x| x.is_zero())) {
            return invalid(format!("w_{} does not occur, so its section would be constant", j + 1));
        }
        Ok(MonomialMap { r })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Validation(format!("bad matrix {s:?}: {e}")))?;
        MonomialMap::new(IntMatrix::from_json(&v)?)
    }

    pub fn identity(k: usize) -> Self {
        MonomialMap { r: IntMatrix::identity(k) }
    }

    pub fn k(&self) -> usize {
        self.r.nrows()
    }

    pub fn n(&self) -> usize {
        self.r.ncols()
    }

    pub fn max_entry(&self) -> Int {
        self.r.max_abs()
    }

    /// Row `i` restricted to the columns `cols`.
    pub fn row_on(&self, i: usize, cols: &[usize]) -> Vec<Int> {
        cols.iter().map(|&j| self.r.get(i, j).clone()).collect()
    }
}

/// `c_j = Σ_i r_ij b_i`.
pub fn monomial_base_change(data: &MumfordData, r: &MonomialMap) -> Result<MumfordData> {
    if r.k() != data.k {
        return invalid(format!("exponent matrix has {} rows but the data has {} sections", r.k(), data.k));
    }
    let mut sections = Vec::new();
    for j in 0..r.n() {
        let mut c = PLSection::zero(data.g);
        for (i, b) in data.sections.iter().enumerate() {
            let rij = r.r.get(i, j);
            if !rij.is_zero() {
                c = c.add(&b.scaled(&qi(rij))?);
            }
        }
        sections.push(c);
    }
    MumfordData::new(&format!("{}-base-change", data.name), data.g, None, sections)
}

/// Separation constant and component orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionPlan {
    /// `N`: the bends for new divisor `j` sit at `label(j)·N + ℓ`.
    pub separation: Int,
    /// New divisors in increasing order; `label(j)` is the 1-based position.
    pub divisor_order: Vec<usize>,
    /// Per old divisor: the branch `z > 0` precedes `z < 0`.
    pub flip: Vec<bool>,
}

impl ResolutionPlan {
    /// `N = n·(1 + max r_ij)`, natural divisor order, no flips.
    pub fn default_for(r: &MonomialMap) -> Self {
        ResolutionPlan {
            separation: Int::from(r.n()) * (Int::one() + r.max_entry()),
            divisor_order: (0..r.n()).collect(),
            flip: vec![false; r.k()],
        }
    }

    pub fn with_separation(mut self, n: Int) -> Self {
        self.separation = n;
        self
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        self.divisor_order = order;
        self
    }

    /// Bends for distinct divisors collide iff some `r_ij > N`.
    pub fn validate(&self, r: &MonomialMap) -> Result<()> {
        let need = r.max_entry();
        if self.separation < need || !self.separation.is_positive() {
            return invalid(format!("separation constant N = {} is too small; need N >= {need}", self.separation));
        }
        let mut o = self.divisor_order.clone();
        o.sort_unstable();
        if o != (0..r.n()).collect::<Vec<_>>() {
            return invalid("divisor order is not a permutation of the new divisors");
        }
        if self.flip.len() != r.k() {
            return invalid("one branch flag per old divisor is required");
        }
        Ok(())
    }

    pub fn label(&self, j: usize) -> usize {
        self.divisor_order.iter().position(|&x| x == j).unwrap() + 1
    }

    pub fn to_json(&self) -> Value {
        json!({
            "N": int_to_json(&self.separation),
            "divisor_order": self.divisor_order.iter().map(|j| j + 1).collect::<Vec<_>>(),
            "flip": self.flip,
        })
    }
}

/// Bends `(label(j)·N + ℓ, j)`, `ℓ = 1..=r_j`, sorted by position; the
/// bending parameter at each is `e_j`.
pub fn separated_bends(r: &[Int], cols: &[usize], plan: &ResolutionPlan) -> Vec<(Int, usize)> {
    let mut out = Vec::new();
    for (rj, &j) in r.iter().zip(cols) {
        let base = Int::from(plan.label(j)) * &plan.separation;
        let mut l = Int::one();
        while &l <= rj {
            out.push((&base + &l, j));
            l += 1;
        }
    }
    out.sort();
    out
}

/// Nodes `x_a y_a = u_{old[a]}` at a point of the new stratum `E_J`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalChart {
    pub old: Vec<usize>,
    pub cols: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct QVertex {
    /// Index into the node's bend list.
    pub at: Vec<usize>,
    /// For each column of `J`, the nodes bending there with that color.
    pub groups: Vec<Vec<usize>>,
    pub form: LocalForm,
}

#[derive(Clone, Debug)]
pub struct NearlyNodalStage {
    /// Nodes whose exponent vector on `J` is nonzero; the rest are smooth.
    pub chart: LocalChart,
    pub r: Vec<Vec<Int>>,
    pub bends: Vec<Vec<(Int, usize)>>,
    pub vertices: Vec<QVertex>,
    /// Maximal domains of linearity of `c = Σ c_a(z_a)`.
    pub cells: usize,
    pub form: LocalForm,
    /// Every vertex is nodal exactly when its colors are distinct.
    pub distinct_colors_iff_nodal: bool,
    pub witnesses: Vec<String>,
}

impl NearlyNodalStage {
    fn slope(&self, a: usize, at: usize, col: usize, left: bool) -> Int {
        let (p, c) = &self.bends[a][at];
        let after = self.bends[a].iter().filter(|(q, d)| q > p && *d == col).count();
        let own = usize::from(*c == col && left);
        -Int::from(after + own)
    }

    /// Ray `(-∇c^j, e_j)` of the cell on the given sides of the nodes in
    /// group `jj`.
    fn ray(&self, v: &QVertex, jj: usize, right: &[bool]) -> Vec<Int> {
        let col = self.chart.cols[jj];
        let m = self.bends.len();
        let mut out: Vec<Int> = (0..m)
            .map(|a| {
                let left = match v.groups[jj].iter().position(|&b| b == a) {
                    Some(t) => !right[t],
                    None => false,
                };
                -self.slope(a, v.at[a], col, left)
            })
            .collect();
        out.extend((0..self.chart.cols.len()).map(|t| if t == jj { Int::one() } else { Int::zero() }));
        out
    }

    /// Rays of group `jj` indexed by cube vertex masks (bit `t` set: node
    /// `groups[jj][t]` on its right side).
    fn group_rays(&self, v: &QVertex, jj: usize) -> Vec<Vec<Int>> {
        let s = v.groups[jj].len();
        (0..1usize << s)
            .map(|mask| {
                let right: Vec<bool> = (0..s).map(|t| mask >> t & 1 == 1).collect();
                self.ray(v, jj, &right)
            })
            .collect()
    }

    fn vertex_rays(&self, v: &QVertex) -> Vec<Vec<Int>> {
        (0..self.chart.cols.len()).flat_map(|jj| self.group_rays(v, jj)).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "J": self.chart.cols.iter().map(|j| j + 1).collect::<Vec<_>>(),
            "nodes": self.chart.old.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "bends": self.bends.iter().map(|b| b.iter().map(|(p, j)| json!([int_to_json(p), j + 1])).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "cells": self.cells,
            "vertices": self.vertices.len(),
            "form": self.form.name(),
        })
    }
}

fn product_indices(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &s in sizes {
        out = out.into_iter().flat_map(|p| (0..s).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

/// The separated PL functions `c_a` of the nodes in `chart` and the local
/// forms at the vertices of the refinement they induce.
pub fn nearly_nodal_stage(r: &MonomialMap, chart: &LocalChart, plan: &ResolutionPlan) -> Result<NearlyNodalStage> {
    plan.validate(r)?;
    let mut old = Vec::new();
    let mut rs = Vec::new();
    for &i in &chart.old {
        let v = r.row_on(i, &chart.cols);
        if v.iter().any(|x| !x.is_zero()) {
            old.push(i);
            rs.push(v);
        }
    }
    let bends: Vec<Vec<(Int, usize)>> = rs.iter().map(|v| separated_bends(v, &chart.cols, plan)).collect();
    let cells = bends.iter().map(|b| b.len() + 1).product();
    let mut stage = NearlyNodalStage {
        chart: LocalChart { old, cols: chart.cols.clone() },
        r: rs,
        bends,
        vertices: Vec::new(),
        cells,
        form: LocalForm::Nodal,
        distinct_colors_iff_nodal: true,
        witnesses: Vec::new(),
    };
    let m = stage.bends.len();
    let sizes: Vec<usize> = stage.bends.iter().map(Vec::len).collect();
    for at in product_indices(&sizes) {
        let groups: Vec<Vec<usize>> = stage
            .chart
            .cols
            .iter()
            .map(|&j| (0..m).filter(|&a| stage.bends[a][at[a]].1 == j).collect())
            .collect();
        let mut v = QVertex { at, groups, form: LocalForm::Nodal };
        v.form = classify_cone(&stage.vertex_rays(&v), m);
        let distinct = v.groups.iter().all(|g| g.len() <= 1);
        if distinct != (v.form == LocalForm::Nodal) {
            stage.distinct_colors_iff_nodal = false;
        }
        if !v.form.is_nearly_nodal() {
            stage.witnesses.push(format!("vertex {:?}: rays {:?}", v.at, stage.vertex_rays(&v)));
        }
        stage.form = stage.form.merge(v.form);
        stage.vertices.push(v);
    }
    Ok(stage)
}

fn cube_point(mask: usize, m: usize) -> Vec<Q> {
    (0..m).map(|t| Q::from_integer(Int::from((mask >> t) & 1))).collect()
}

/// Cube vertices in lexicographic order of their coordinates, with the
/// coordinates in `flip` reversed.
pub fn lex_order(m: usize, flip: &[bool]) -> Vec<usize> {
    let mut masks: Vec<usize> = (0..1usize << m).collect();
    masks.sort_by_key(|&mask| (0..m).map(|t| ((mask >> t) & 1 == 1) != flip[t]).collect::<Vec<bool>>());
    masks
}

/// Triangulation of `[0,1]^m` obtained by pulling the vertices in `order`
/// (each pull cones the vertex over the facets of every cell containing
/// it that miss it). Simplices are sorted lists of vertex masks.
pub fn cube_subdivision(m: usize, order: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..1usize << m).collect::<Vec<_>>() {
        return invalid("order is not a permutation of the cube vertices");
    }
    let mut cells: Vec<Vec<usize>> = vec![(0..1usize << m).collect()];
    for &v in order {
        let mut next = Vec::new();
        for c in cells {
            if c.len() <= m + 1 || !c.contains(&v) {
                next.push(c);
                continue;
            }
            let pts: Vec<Vec<Q>> = c.iter().map(|&x| cube_point(x, m)).collect();
            let poly = Polytope::from_vertices(m, &pts);
            let back: Vec<usize> =
                poly.vertices.iter().map(|p| c[pts.iter().position(|q| q == p).unwrap()]).collect();
            for f in poly.facet_vertex_sets() {
                let fm: Vec<usize> = f.iter().map(|&i| back[i]).collect();
                if fm.contains(&v) {
                    continue;
                }
                let mut cell = fm;
                cell.push(v);
                cell.sort_unstable();
                next.push(cell);
            }
        }
        cells = next;
    }
    cells.sort();
    Ok(cells)
}

/// Every simplex has `m + 1` vertices and determinant `±1`.
pub fn is_unimodular_triangulation(m: usize, simplices: &[Vec<usize>]) -> bool {
    simplices.iter().all(|s| {
        if s.len() != m + 1 {
            return false;
        }
        if m == 0 {
            return true;
        }
        let base = cube_point(s[0], m);
        let rows: Vec<Vec<Int>> = s[1..]
            .iter()
            .map(|&x| cube_point(x, m).iter().zip(&base).map(|(a, b)| (a - b).to_integer()).collect())
            .collect();
        IntMatrix::from_rows(rows).det().abs().is_one()
    })
}

#[derive(Clone, Debug)]
pub struct SemistableStage {
    /// Cube loci by dimension.
    pub cube_loci: BTreeMap<usize, usize>,
    pub final_cones: usize,
    pub form: LocalForm,
    /// Every final cone is standard affine with one ray per unit vector image.
    pub standard: bool,
    pub witnesses: Vec<String>,
}

impl SemistableStage {
    pub fn to_json(&self) -> Value {
        json!({
            "cube_loci": self.cube_loci.iter().map(|(d, c)| json!({"dim": d, "count": c})).collect::<Vec<_>>(),
            "final_cones": self.final_cones,
            "form": self.form.name(),
            "standard_affine": self.standard,
        })
    }
}

/// Subdivides every cube cone of the stage-one fan by ordered pulling.
pub fn semistable_stage(stage: &NearlyNodalStage, plan: &ResolutionPlan) -> Result<SemistableStage> {
    let m = stage.bends.len();
    let dim = m + stage.chart.cols.len();
    let mut out = SemistableStage {
        cube_loci: BTreeMap::new(),
        final_cones: 0,
        form: LocalForm::Nodal,
        standard: true,
        witnesses: Vec::new(),
    };
    for v in &stage.vertices {
        let mut options: Vec<Vec<Vec<Vec<Int>>>> = Vec::new();
        for jj in 0..stage.chart.cols.len() {
            let rays = stage.group_rays(v, jj);
            let s = v.groups[jj].len();
            if s < 2 {
                options.push(vec![rays]);
                continue;
            }
            *out.cube_loci.entry(s).or_insert(0) += 1;
            let flip: Vec<bool> = v.groups[jj].iter().map(|&a| plan.flip[stage.chart.old[a]]).collect();
            let simplices = cube_subdivision(s, &lex_order(s, &flip))?;
            options.push(simplices.iter().map(|sx| sx.iter().map(|&x| rays[x].clone()).collect()).collect());
        }
        let sizes: Vec<usize> = options.iter().map(Vec::len).collect();
        for pick in product_indices(&sizes) {
            let rays: Vec<Vec<Int>> = pick.iter().enumerate().flat_map(|(jj, &p)| options[jj][p].clone()).collect();
            let form = classify_cone(&rays, m);
            let standard = rays.len() == dim && is_lattice_basis_part(&rays);
            if !standard || !form.is_semistable() {
                out.standard &= standard;
                out.witnesses.push(format!("final cone {rays:?} is {}", form.name()));
            }
            out.form = out.form.merge(form);
            out.final_cones += 1;
        }
    }
    Ok(out)
}

/// Stage results over one stratum `E_J`, summed over the old vertex classes.
#[derive(Clone, Debug)]
pub struct StratumResult {
    pub cols: Vec<usize>,
    pub stage1: LocalForm,
    pub stage2: LocalForm,
    pub q_vertices: usize,
    pub nearly_nodal_vertices: usize,
    pub cube_loci: BTreeMap<usize, usize>,
    pub final_cones: usize,
    pub standard: bool,
    pub distinct_colors_iff_nodal: bool,
}

impl StratumResult {
    pub fn to_json(&self) -> Value {
        json!({
            "J": self.cols.iter().map(|j| j + 1).collect::<Vec<_>>(),
            "stage1": self.stage1.name(),
            "stage2": self.stage2.name(),
            "vertices": self.q_vertices,
            "cube_vertices": self.nearly_nodal_vertices,
            "cube_loci": self.cube_loci.iter().map(|(d, c)| json!({"dim": d, "count": c})).collect::<Vec<_>>(),
            "final_cones": self.final_cones,
            "standard_affine": self.standard,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ResolutionReport {
    pub plan: ResolutionPlan,
    pub base_changed: MumfordData,
    pub base_changed_report: SingularityReport,
    /// Old divisors of the nodes at each old vertex class, with multiplicity.
    pub node_sets: Vec<(Vec<usize>, usize)>,
    pub strata: Vec<StratumResult>,
    /// Forgetting colors outside `J' ⊂ J` reproduces the bends for `J'`.
    pub coherent: bool,
    /// The stage-one output realised as Mumford data, with hyperplanes
    /// shifted by multiples of `1/scale`.
    pub partial: MumfordData,
    pub scale: Int,
    pub partial_report: SingularityReport,
    pub partial_dual: DualComplex,
    /// Local charts and global data give the same forms and vertex counts.
    pub routes_agree: bool,
    /// The input has no self-nodal components, so the result is projective.
    pub strict_input: bool,
    pub stage1: LocalForm,
    pub stage2: LocalForm,
    pub standard: bool,
}

impl ResolutionReport {
    pub fn to_json(&self) -> Value {
        json!({
            "plan": self.plan.to_json(),
            "base_change": {
                "data": self.base_changed.to_json(),
                "singularities": self.base_changed_report.to_json(),
            },
            "node_sets": self.node_sets.iter().map(|(s, c)| json!({"nodes": s.iter().map(|i| i + 1).collect::<Vec<_>>(), "vertex_classes": c})).collect::<Vec<_>>(),
            "strata": self.strata.iter().map(StratumResult::to_json).collect::<Vec<_>>(),
            "coherent": self.coherent,
            "nearly_nodal": {
                "form": self.stage1.name(),
                "scale": int_to_json(&self.scale),
                "data": self.partial.to_json(),
                "singularities": self.partial_report.to_json(),
                "dual_complex": self.partial_dual.to_json(),
                "routes_agree": self.routes_agree,
            },
            "semistable": {
                "form": self.stage2.name(),
                "standard_affine": self.standard,
            },
            "projective": self.strict_input,
        })
    }
}

fn node_sets(data: &MumfordData) -> Result<Vec<(Vec<usize>, usize)>> {
    let pc = data.full_refinement()?;
    let mut out: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for cone in vertex_cones(data, &pc) {
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, _) in &cone {
            *count.entry(*i).or_insert(0) += 1;
        }
        let nodes: Vec<usize> = count.into_iter().filter(|&(_, c)| c == 2).map(|(i, _)| i).collect();
        *out.entry(nodes).or_insert(0) += 1;
    }
    Ok(out.into_iter().collect())
}

/// Each hyperplane of `b_i` is replaced, in `c_j`, by the hyperplanes
/// shifted by `(label(j)·N + ℓ)/scale`, `ℓ = 1..=r_ij`, with parameter one.
pub fn separated_data(data: &MumfordData, r: &MonomialMap, plan: &ResolutionPlan, scale: &Int) -> Result<MumfordData> {
    let all: Vec<usize> = (0..r.n()).collect();
    let mut sections = Vec::new();
    for j in 0..r.n() {
        let mut atoms = Vec::new();
        let mut linear = vec![Q::zero(); data.g];
        let mut constant = Q::zero();
        for (i, b) in data.sections.iter().enumerate() {
            let rij = r.r.get(i, j);
            if rij.is_zero() {
                continue;
            }
            let shifts: Vec<Q> = separated_bends(&r.row_on(i, &all), &all, plan)
                .into_iter()
                .filter(|(_, c)| *c == j)
                .map(|(p, _)| Q::new(p, scale.clone()))
                .collect();
            for a in &b.atoms {
                let Atom::Family(f) = a else {
                    return Err(Error::Refusal("resolution needs hyperplane-family sections".into()));
                };
                let mut offs = Vec::new();
                for (e, p) in f.offsets.iter().zip(&f.params) {
                    if !p.is_one() {
                        return Err(Error::Refusal("resolution needs bending parameters equal to one".into()));
                    }
                    offs.extend(shifts.iter().map(|s| e + s));
                }
                let n = offs.len();
                atoms.push(Atom::Family(FamilyAtom::new(f.normal.clone(), offs, vec![Q::one(); n])?));
            }
            for (x, y) in linear.iter_mut().zip(&b.linear) {
                *x += y * qi(rij);
            }
            constant += &b.constant * qi(rij);
        }
        sections.push(PLSection::new(data.g, atoms)?.with_linear(linear, constant));
    }
    MumfordData::new(&format!("{}-separated", data.name), data.g, None, sections)
}

/// Global vertex count and count of non-nodal vertices.
fn global_counts(data: &MumfordData) -> Result<(usize, usize)> {
    let pc = data.full_refinement()?;
    let cones = vertex_cones(data, &pc);
    let non_nodal = cones
        .iter()
        .filter(|c| {
            let rays: Vec<Vec<Int>> = c.iter().map(|(_, r)| r.clone()).collect();
            classify_cone(&rays, data.g) != LocalForm::Nodal
        })
        .count();
    Ok((cones.len(), non_nodal))
}

const MAX_SCALE_DOUBLINGS: usize = 4;

/// Base change along `r` followed by both resolution stages, checked
/// against each other in local charts and on the global separated data.
pub fn resolve(data: &MumfordData, r: &MonomialMap, plan: &ResolutionPlan) -> Result<ResolutionReport> {
    plan.validate(r)?;
    let base_changed = monomial_base_change(data, r)?;
    let base_changed_report = classify_singularities(&base_changed)?;
    let old = classify_singularities(data)?;
    if !old.nodal() || !old.smooth {
        return Err(Error::Refusal(format!("resolution needs smooth nodal input, found {}", old.overall.name())));
    }
    let node_sets = node_sets(data)?;
    let mut strata = Vec::new();
    let mut coherent = true;
    for cols in subsets(r.n()) {
        let mut s = StratumResult {
            cols: cols.clone(),
            stage1: LocalForm::Nodal,
            stage2: LocalForm::Nodal,
            q_vertices: 0,
            nearly_nodal_vertices: 0,
            cube_loci: BTreeMap::new(),
            final_cones: 0,
            standard: true,
            distinct_colors_iff_nodal: true,
        };
        for (nodes, mult) in &node_sets {
            let chart = LocalChart { old: nodes.clone(), cols: cols.clone() };
            let st1 = nearly_nodal_stage(r, &chart, plan)?;
            let st2 = semistable_stage(&st1, plan)?;
            s.stage1 = s.stage1.merge(st1.form);
            s.stage2 = s.stage2.merge(st2.form);
            s.q_vertices += mult * st1.vertices.len();
            s.nearly_nodal_vertices += mult * st1.vertices.iter().filter(|v| v.form != LocalForm::Nodal).count();
            for (d, c) in &st2.cube_loci {
                *s.cube_loci.entry(*d).or_insert(0) += mult * c;
            }
            s.final_cones += mult * st2.final_cones;
            s.standard &= st2.standard;
            s.distinct_colors_iff_nodal &= st1.distinct_colors_iff_nodal;
            for sub in subsets(cols.len()) {
                let sub: Vec<usize> = sub.iter().map(|&t| cols[t]).collect();
                coherent &= forgets_to(r, nodes, &cols, &sub, plan);
            }
        }
        strata.push(s);
    }
    let stage1 = strata.iter().fold(LocalForm::Nodal, |a, s| a.merge(s.stage1));
    let stage2 = strata.iter().fold(LocalForm::Nodal, |a, s| a.merge(s.stage2));
    let standard = strata.iter().all(|s| s.standard);
    let full = strata.last().unwrap();
    let max_bend = Int::from(r.n()) * &plan.separation + r.max_entry();
    let mut k = Int::one();
    while k <= max_bend {
        k *= 2;
    }
    let mut scale = &data.d * &k;
    let mut attempt = 0;
    let (partial, partial_report, routes_agree) = loop {
        let partial = separated_data(data, r, plan, &scale)?;
        let rep = classify_singularities(&partial)?;
        let (verts, non_nodal) = global_counts(&partial)?;
        let forms_agree = strata
            .iter()
            .all(|s| rep.strata.iter().any(|(i, f)| *i == s.cols && *f == s.stage1));
        let agree = forms_agree && verts == full.q_vertices && non_nodal == full.nearly_nodal_vertices;
        attempt += 1;
        if agree || attempt > MAX_SCALE_DOUBLINGS {
            break (partial, rep, agree);
        }
        scale *= 2;
    };
    let partial_dual = dual_complex(&partial)?;
    Ok(ResolutionReport {
        plan: plan.clone(),
        base_changed,
        base_changed_report,
        node_sets,
        strata,
        coherent,
        partial,
        scale,
        partial_report,
        partial_dual,
        routes_agree,
        strict_input: old.strict,
        stage1,
        stage2,
        standard,
    })
}

/// Bends over `J` restricted to the colors in `sub` equal the bends over `sub`.
pub fn forgets_to(r: &MonomialMap, nodes: &[usize], cols: &[usize], sub: &[usize], plan: &ResolutionPlan) -> bool {
    nodes.iter().all(|&i| {
        let big: Vec<(Int, usize)> =
            separated_bends(&r.row_on(i, cols), cols, plan).into_iter().filter(|(_, j)| sub.contains(j)).collect();
        big == separated_bends(&r.row_on(i, sub), sub, plan)
    })
}

/// Positions of the bends as plain integers, for reporting.
pub fn bend_positions(b: &[(Int, usize)]) -> Vec<(i64, usize)> {
    b.iter().map(|(p, j)| (p.to_i64().unwrap_or(i64::MAX), *j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, q};
    use crate::mumford::tests::theta3;
    use crate::plsection::tate;

    fn m(rows: &[&[i64]]) -> MonomialMap {
        MonomialMap::new(IntMatrix::from_i64(rows)).unwrap()
    }

    fn tate_data() -> MumfordData {
        MumfordData::new("tate", 1, None, vec![tate()]).unwrap()
    }

    #[test]
    fn map_validation() {
        assert!(MonomialMap::new(IntMatrix::from_i64(&[&[0, 0], &[1, 1]])).is_err());
        assert!(MonomialMap::new(IntMatrix::from_i64(&[&[1, 0], &[1, 0]])).is_err());
        assert!(MonomialMap::new(IntMatrix::from_i64(&[&[1, -1]])).is_err());
        assert_eq!(MonomialMap::parse("[[2,1],[0,4],[3,1]]").unwrap(), m(&[&[2, 1], &[0, 4], &[3, 1]]));
    }

    #[test]
    fn tate_base_change() {
        let bc = monomial_base_change(&tate_data(), &m(&[&[3]])).unwrap();
        assert_eq!(bc.sections[0].value_int(&[int(3)]), q(9, 1));
        assert_eq!(bc.d, int(1));
        let id = monomial_base_change(&tate_data(), &MonomialMap::identity(1)).unwrap();
        assert_eq!(id.sections, tate_data().sections);
    }

    #[test]
    fn separated_bends_tate() {
        let r = m(&[&[3]]);
        let plan = ResolutionPlan::default_for(&r);
        assert_eq!(plan.separation, int(4));
        let b = separated_bends(&r.row_on(0, &[0]), &[0], &plan);
        assert_eq!(bend_positions(&b), vec![(5, 0), (6, 0), (7, 0)]);
        assert!(ResolutionPlan::default_for(&r).with_separation(int(2)).validate(&r).is_err());
    }

    #[test]
    fn order_one_is_identity() {
        let r = m(&[&[1]]);
        let plan = ResolutionPlan::default_for(&r);
        let st = nearly_nodal_stage(&r, &LocalChart { old: vec![0], cols: vec![0] }, &plan).unwrap();
        assert_eq!(st.vertices.len(), 1);
        assert_eq!(st.form, LocalForm::Nodal);
        let s2 = semistable_stage(&st, &plan).unwrap();
        assert_eq!(s2.final_cones, 1);
        assert!(s2.cube_loci.is_empty());
    }

    #[test]
    fn cubes() {
        assert_eq!(cube_subdivision(1, &[0, 1]).unwrap(), vec![vec![0, 1]]);
        let sq = cube_subdivision(2, &lex_order(2, &[false, false])).unwrap();
        assert_eq!(sq, vec![vec![0, 1, 3], vec![0, 2, 3]]);
        for mm in 1..=4usize {
            let s = cube_subdivision(mm, &lex_order(mm, &vec![false; mm])).unwrap();
            assert_eq!(s.len(), (1..=mm).product::<usize>());
            assert!(is_unimodular_triangulation(mm, &s));
        }
        let rev: Vec<usize> = (0..8).rev().collect();
        let s = cube_subdivision(3, &rev).unwrap();
        assert_eq!(s.len(), 6);
        assert!(is_unimodular_triangulation(3, &s));
        assert!(cube_subdivision(2, &[0, 1, 2]).is_err());
    }

    #[test]
    fn tate_pipeline() {
        let r = m(&[&[3]]);
        let rep = resolve(&tate_data(), &r, &ResolutionPlan::default_for(&r)).unwrap();
        assert_eq!(rep.base_changed_report.overall, LocalForm::Other);
        assert!(rep.stage1.is_nearly_nodal());
        assert!(rep.stage2.is_semistable());
        assert!(rep.routes_agree && rep.coherent && rep.standard);
        assert_eq!(rep.partial_dual.cells, vec![3, 3]);
        assert_eq!(rep.partial_dual.h1_rank, 1);
        assert_eq!(rep.scale, int(8));
    }

    #[test]
    fn monomial_separation_pipeline() {
        let data = theta3([(0, 1), (0, 1), (1, 2)]);
        let r = m(&[&[2, 1], &[0, 4], &[3, 1]]);
        let plan = ResolutionPlan::default_for(&r).with_separation(int(4));
        let bc = monomial_base_change(&data, &r).unwrap();
        let lin = |s: &PLSection| s.quadratic_part_q();
        let b: Vec<Vec<Vec<Q>>> = data.sections.iter().map(lin).collect();
        let want0: Vec<Vec<Q>> =
            (0..2).map(|x| (0..2).map(|y| &b[0][x][y] * q(2, 1) + &b[2][x][y] * q(3, 1)).collect()).collect();
        assert_eq!(lin(&bc.sections[0]), want0);
        let rep = resolve(&data, &r, &plan).unwrap();
        assert_eq!(rep.stage1, LocalForm::NearlyNodal);
        assert!(rep.stage2.is_semistable());
        assert!(rep.standard && rep.coherent && rep.routes_agree);
        // 1/32 shifts create triple points near the old vertices
        assert_eq!(rep.scale, int(64));
        let full = rep.strata.last().unwrap();
        assert!(full.distinct_colors_iff_nodal);
        assert_eq!(full.cube_loci.get(&2), Some(&full.nearly_nodal_vertices));
        assert_eq!(full.final_cones, full.q_vertices + full.nearly_nodal_vertices);
    }

    #[test]
    fn separation_colors_precede() {
        let r = m(&[&[2, 1], &[0, 4], &[3, 1]]);
        let plan = ResolutionPlan::default_for(&r).with_separation(int(4));
        let all = [0, 1];
        let b: Vec<Vec<(i64, usize)>> =
            (0..3).map(|i| bend_positions(&separated_bends(&r.row_on(i, &all), &all, &plan))).collect();
        assert_eq!(b[0], vec![(5, 0), (6, 0), (9, 1)]);
        assert_eq!(b[1], vec![(9, 1), (10, 1), (11, 1), (12, 1)]);
        assert_eq!(b[2], vec![(5, 0), (6, 0), (7, 0), (9, 1)]);
        let swapped = plan.clone().with_order(vec![1, 0]);
        let b0 = bend_positions(&separated_bends(&r.row_on(0, &all), &all, &swapped));
        assert_eq!(b0, vec![(5, 1), (9, 0), (10, 0)]);
    }

    #[test]
    fn theta_series_pull_back() {
        use crate::theta::theta_expand;
        let data = theta3([(0, 1), (0, 1), (1, 2)]);
        let r = m(&[&[2, 1], &[0, 4], &[3, 1]]);
        let bc = monomial_base_change(&data, &r).unwrap();
        let t = q(12, 1);
        let w = int(2);
        let new = theta_expand(&bc, &[int(1), int(0)], &w, &t).unwrap();
        let old = theta_expand(&data, &[int(1), int(0)], &w, &t).unwrap();
        let mut mapped = std::collections::BTreeMap::new();
        for ((z, u), c) in &old.terms {
            let u2: Vec<Q> = (0..2).map(|j| (0..3).map(|i| &u[i] * qi(r.r.get(i, j))).sum()).collect();
            if crate::theta::degree(&u2) <= t {
                mapped.insert((z.clone(), u2), c.clone());
            }
        }
        assert!(!mapped.is_empty());
        assert_eq!(new.terms, mapped);
    }
}
