//! Convex quasi-periodic piecewise-linear functions on `M_R`.
//!
//! A section is a sum of atoms plus an affine part. A *family* atom bends
//! along the parallel hyperplanes `x·m ∈ ε_j + Z`; a *form* atom is the
//! convex lift of `(B(m,m) - L(m))/2`, bending along the Delaunay
//! decomposition of `B`.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::arith::{dot, dot_iq, floor_q, fmt_q, gcd_vec, lcm_denoms, parse_q, qi, to_q, Int, Q};
use crate::delaunay::{to_qmat, DelaunayLattice};
use crate::error::{invalid, Result};
use crate::lattice::matrix::{int_to_json, vec_from_json};
use crate::lattice::{smith_normal_form, IntMatrix, Sublattice};
use crate::matroid::{is_unimodular, MatroidRep};

/// `φ(s) = max_n (n·s - (n² + n)/2)`; equals `(s² - s)/2` on integers and
/// has slope `floor(s)`.
pub fn phi(s: &Q) -> Q {
    let n = floor_q(s);
    qi(&n) * s - Q::new(&n * &n + &n, Int::from(2))
}

/// Hyperplane family `{x·m ∈ ε_j + Z}` with bending parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyAtom {
    pub normal: Vec<Int>,
    pub offsets: Vec<Q>,
    pub params: Vec<Q>,
    /// Distinct residues of the offsets in `[0,1)`, sorted.
    pub residues: Vec<Q>,
    /// Bending parameter at each residue.
    pub residue_params: Vec<Q>,
}

impl FamilyAtom {
    pub fn new(normal: Vec<Int>, offsets: Vec<Q>, params: Vec<Q>) -> Result<FamilyAtom> {
        if offsets.is_empty() {
            return invalid("a hyperplane family needs at least one offset");
        }
        if offsets.len() != params.len() {
            return invalid("offsets and params differ in length");
        }
        if !gcd_vec(&normal).is_one() {
            return invalid(format!("normal {normal:?} is not primitive"));
        }
        if params.iter().any(|p| !p.is_positive()) {
            return invalid("bending parameters must be positive");
        }
        let mut pairs: Vec<(Q, Q)> = Vec::new();
        for (e, p) in offsets.iter().zip(&params) {
            let r = e - qi(&floor_q(e));
            match pairs.iter_mut().find(|(x, _)| *x == r) {
                Some((_, q)) => *q += p,
                None => pairs.push((r, p.clone())),
            }
        }
        pairs.sort();
        Ok(FamilyAtom {
            normal,
            offsets,
            params,
            residues: pairs.iter().map(|p| p.0.clone()).collect(),
            residue_params: pairs.into_iter().map(|p| p.1).collect(),
        })
    }

    fn n(&self) -> Int {
        Int::from(self.residues.len())
    }

    pub fn total_param(&self) -> Q {
        self.params.iter().sum()
    }

    pub fn value_s(&self, s: &Q) -> Q {
        self.offsets.iter().zip(&self.params).map(|(e, p)| p * phi(&(s - e))).sum()
    }

    /// `β_t`; intervals `[β_t, β_{t+1}]` are the linearity domains.
    pub fn breakpoint(&self, t: &Int) -> Q {
        let (q, r) = t.div_mod_floor(&self.n());
        let r = usize::try_from(&r).unwrap();
        &self.residues[r] + qi(&q)
    }

    /// Interval index `t` with `β_t <= s < β_{t+1}`.
    pub fn interval(&self, s: &Q) -> Int {
        let q = floor_q(s);
        let frac = s - qi(&q);
        let n = self.residues.len();
        match self.residues.iter().rposition(|r| *r <= frac) {
            Some(r) => q * Int::from(n) + Int::from(r),
            None => (q - 1) * Int::from(n) + Int::from(n - 1),
        }
    }

    pub fn is_break(&self, s: &Q) -> bool {
        self.breakpoint(&self.interval(s)) == *s
    }

    /// Derivative of the profile on interval `t`.
    pub fn slope_scalar(&self, t: &Int) -> Q {
        let mid = (self.breakpoint(t) + self.breakpoint(&(t + 1))) / Q::from_integer(Int::from(2));
        self.offsets.iter().zip(&self.params).map(|(e, p)| p * qi(&floor_q(&(&mid - e)))).sum()
    }

    /// Bending parameter at `β_t`.
    pub fn param_at(&self, t: &Int) -> Q {
        let r = t.mod_floor(&self.n());
        self.residue_params[usize::try_from(&r).unwrap()].clone()
    }
}

/// Reduction of a semi-definite form to a definite one on `Z^g / ker B`.
#[derive(Clone, Debug)]
pub struct FormReduction {
    /// `P: Z^g -> Z^{g'}`, surjective with kernel `ker B`.
    pub p: IntMatrix,
    pub b_red: IntMatrix,
    pub l_red: Vec<Int>,
    /// `(L - L'·P)/2`, subtracted from the value.
    pub resid: Vec<Q>,
    pub del: Option<DelaunayLattice>,
}

#[derive(Clone, Debug)]
pub struct FormAtom {
    pub b: IntMatrix,
    pub l: Vec<Int>,
    pub scale: Q,
    pub red: Arc<FormReduction>,
}

impl PartialEq for FormAtom {
    fn eq(&self, o: &Self) -> bool {
        self.b == o.b && self.l == o.l && self.scale == o.scale
    }
}
impl Eq for FormAtom {}

impl FormAtom {
    pub fn new(b: IntMatrix, l: Vec<Int>, scale: Q) -> Result<FormAtom> {
        let g = b.nrows();
        if !b.is_symmetric() {
            return invalid("form must be symmetric");
        }
        if l.len() != g {
            return invalid("linear form has wrong length");
        }
        if !scale.is_positive() {
            return invalid("scale must be positive");
        }
        for i in 0..g {
            if !(b.get(i, i) - &l[i]).is_even() {
                return invalid(format!("L is not characteristic: B[{i}][{i}] and L[{i}] differ in parity"));
            }
        }
        let ksub = Sublattice::span(g, &crate::lattice::kernel(&b));
        let comp = ksub.complement();
        let gp = comp.len();
        // P reads off complement coordinates in the basis (complement, kernel)
        let mut basis = comp.clone();
        basis.extend(ksub.saturate().basis);
        let full = IntMatrix::from_cols(&basis, g);
        let inv = unimodular_inverse(&full);
        let p = IntMatrix::from_rows_with_cols(inv.rows()[..gp].to_vec(), g);
        let sec = IntMatrix::from_cols(&comp, g);
        let b_red = sec.transpose().mul(&b).mul(&sec);
        if gp > 0 && !crate::delaunay::is_positive_definite(&b_red) {
            return invalid("form is not positive semi-definite");
        }
        let l_red: Vec<Int> = (0..gp).map(|j| dot(&l, &sec.col(j))).collect();
        let lp: Vec<Int> = (0..g).map(|i| dot(&l_red, &p.col(i))).collect();
        let resid: Vec<Q> = l.iter().zip(&lp).map(|(a, b)| Q::new(a - b, Int::from(2))).collect();
        let del = if gp > 0 { Some(DelaunayLattice::new(&b_red, &l_red)?) } else { None };
        Ok(FormAtom { b, l, scale, red: Arc::new(FormReduction { p, b_red, l_red, resid, del }) })
    }

    pub fn value(&self, x: &[Q]) -> Q {
        let r = &self.red;
        let z: Vec<Q> = r.p.rows().iter().map(|row| dot_iq(row, x)).collect();
        let v = match &r.del {
            Some(d) => d.value(&z),
            None => Q::zero(),
        };
        &self.scale * (v - crate::arith::dot_q(&r.resid, x))
    }
}

/// Inverse of a unimodular matrix.
pub fn unimodular_inverse(m: &IntMatrix) -> IntMatrix {
    let s = smith_normal_form(m);
    // U m V = I  =>  m^{-1} = V U
    s.v.mul(&s.u)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Family(FamilyAtom),
    Form(FormAtom),
}

impl Atom {
    pub fn value(&self, x: &[Q]) -> Q {
        match self {
            Atom::Family(f) => f.value_s(&dot_iq(&f.normal, x)),
            Atom::Form(f) => f.value(x),
        }
    }

    pub fn scaled(&self, c: &Q) -> Result<Atom> {
        Ok(match self {
            Atom::Family(f) => Atom::Family(FamilyAtom::new(
                f.normal.clone(),
                f.offsets.clone(),
                f.params.iter().map(|p| p * c).collect(),
            )?),
            Atom::Form(f) => Atom::Form(FormAtom { scale: &f.scale * c, ..f.clone() }),
        })
    }

    /// Quadratic part as a rational matrix.
    pub fn quadratic(&self, g: usize) -> Vec<Vec<Q>> {
        match self {
            Atom::Family(f) => {
                let t = f.total_param();
                (0..g).map(|i| (0..g).map(|j| qi(&(&f.normal[i] * &f.normal[j])) * &t).collect()).collect()
            }
            Atom::Form(f) => to_qmat(&f.b).into_iter().map(|r| r.into_iter().map(|x| x * &f.scale).collect()).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Atom::Family(f) => json!({
                "normal": f.normal.iter().map(int_to_json).collect::<Vec<_>>(),
                "offsets": f.offsets.iter().map(fmt_q).collect::<Vec<_>>(),
                "params": f.params.iter().map(fmt_q).collect::<Vec<_>>(),
            }),
            Atom::Form(f) => {
                let mut m = Map::new();
                m.insert("B".into(), f.b.to_json());
                m.insert("L".into(), json!(f.l.iter().map(int_to_json).collect::<Vec<_>>()));
                if !f.scale.is_one() {
                    m.insert("scale".into(), json!(fmt_q(&f.scale)));
                }
                Value::Object(m)
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<Atom> {
        if let Some(n) = v.get("normal") {
            let normal = vec_from_json(n)?;
            let offsets = q_list(v.get("offsets").ok_or_else(|| crate::Error::Validation("missing offsets".into()))?)?;
            let params = match v.get("params") {
                Some(p) => q_list(p)?,
                None => vec![Q::one(); offsets.len()],
            };
            Ok(Atom::Family(FamilyAtom::new(normal, offsets, params)?))
        } else if let Some(b) = v.get("B") {
            let b = IntMatrix::from_json(b)?;
            let l = match v.get("L") {
                Some(l) => vec_from_json(l)?,
                None => (0..b.nrows()).map(|i| b.get(i, i).clone()).collect(),
            };
            let scale = match v.get("scale") {
                Some(s) => q_from_json(s)?,
                None => Q::one(),
            };
            Ok(Atom::Form(FormAtom::new(b, l, scale)?))
        } else {
            invalid(format!("unrecognized PL atom: {v}"))
        }
    }

    pub fn normal_dim(&self) -> usize {
        match self {
            Atom::Family(f) => f.normal.len(),
            Atom::Form(f) => f.b.nrows(),
        }
    }
}

pub fn q_from_json(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => parse_q(s),
        Value::Number(n) => parse_q(&n.to_string()),
        _ => invalid(format!("not a rational: {v}")),
    }
}

pub fn q_list(v: &Value) -> Result<Vec<Q>> {
    match v.as_array() {
        Some(a) => a.iter().map(q_from_json).collect(),
        None => invalid("expected an array of rationals"),
    }
}

/// `b(x) = Σ atoms(x) + linear·x + constant` on `Q^g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLSection {
    pub g: usize,
    pub atoms: Vec<Atom>,
    pub linear: Vec<Q>,
    pub constant: Q,
}

impl PLSection {
    pub fn new(g: usize, atoms: Vec<Atom>) -> Result<PLSection> {
        if atoms.iter().any(|a| a.normal_dim() != g) {
            return invalid(format!("atom dimension does not match rank {g}"));
        }
        Ok(PLSection { g, atoms, linear: vec![Q::zero(); g], constant: Q::zero() })
    }

    pub fn zero(g: usize) -> PLSection {
        PLSection { g, atoms: Vec::new(), linear: vec![Q::zero(); g], constant: Q::zero() }
    }

    pub fn family(normal: Vec<Int>, offsets: Vec<Q>, params: Vec<Q>) -> Result<PLSection> {
        let g = normal.len();
        PLSection::new(g, vec![Atom::Family(FamilyAtom::new(normal, offsets, params)?)])
    }

    pub fn value(&self, x: &[Q]) -> Q {
        self.atoms.iter().map(|a| a.value(x)).sum::<Q>() + crate::arith::dot_q(&self.linear, x) + &self.constant
    }

    pub fn value_int(&self, m: &[Int]) -> Q {
        self.value(&to_q(m))
    }

    pub fn scaled(&self, c: &Q) -> Result<PLSection> {
        if c.is_zero() {
            return Ok(PLSection::zero(self.g));
        }
        if c.is_negative() {
            return invalid("negative multiple of a convex section");
        }
        Ok(PLSection {
            g: self.g,
            atoms: self.atoms.iter().map(|a| a.scaled(c)).collect::<Result<_>>()?,
            linear: self.linear.iter().map(|x| x * c).collect(),
            constant: &self.constant * c,
        })
    }

    pub fn add(&self, other: &PLSection) -> PLSection {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        PLSection {
            g: self.g,
            atoms,
            linear: self.linear.iter().zip(&other.linear).map(|(a, b)| a + b).collect(),
            constant: &self.constant + &other.constant,
        }
    }

    pub fn with_linear(mut self, linear: Vec<Q>, constant: Q) -> PLSection {
        self.linear = linear;
        self.constant = constant;
        self
    }

    pub fn quadratic_part_q(&self) -> Vec<Vec<Q>> {
        let mut out = vec![vec![Q::zero(); self.g]; self.g];
        for a in &self.atoms {
            for (r, ar) in out.iter_mut().zip(a.quadratic(self.g)) {
                for (x, y) in r.iter_mut().zip(ar) {
                    *x += y;
                }
            }
        }
        out
    }

    /// `B(m,m') = b(m+m') - b(m) - b(m') + b(0)` as an integer matrix.
    pub fn quadratic_part(&self) -> Result<IntMatrix> {
        let q = self.quadratic_part_q();
        if q.iter().flatten().any(|x| !x.denom().is_one()) {
            return invalid("quadratic part is not integral");
        }
        Ok(IntMatrix::from_rows_with_cols(q.into_iter().map(|r| r.into_iter().map(|x| x.to_integer()).collect()).collect(), self.g))
    }

    /// A subgradient at `x`: the slope of some linearity domain containing `x`.
    pub fn subgradient(&self, x: &[Q]) -> Vec<Q> {
        let mut out = self.linear.clone();
        for a in &self.atoms {
            match a {
                Atom::Family(f) => {
                    let s = f.slope_scalar(&f.interval(&dot_iq(&f.normal, x)));
                    for (o, n) in out.iter_mut().zip(&f.normal) {
                        *o += &s * qi(n);
                    }
                }
                Atom::Form(f) => {
                    let r = &f.red;
                    let dz = match &r.del {
                        Some(d) => {
                            let z: Vec<Q> = r.p.rows().iter().map(|row| dot_iq(row, x)).collect();
                            d.slope(&d.locate(&z))
                        }
                        None => Vec::new(),
                    };
                    for (i, o) in out.iter_mut().enumerate() {
                        let v: Q = dz.iter().zip(r.p.col(i)).map(|(a, b)| a * qi(&b)).sum::<Q>() - &r.resid[i];
                        *o += v * &f.scale;
                    }
                }
            }
        }
        out
    }

    /// Least `d` such that all offsets lie in `(1/d)Z`.
    pub fn offset_denominator(&self) -> Int {
        let mut all = Vec::new();
        for a in &self.atoms {
            if let Atom::Family(f) = a {
                all.extend(f.offsets.iter().cloned());
            }
        }
        lcm_denoms(&all)
    }

    pub fn has_bending(&self) -> bool {
        self.atoms.iter().any(|a| match a {
            Atom::Family(_) => true,
            Atom::Form(f) => f.red.del.is_some(),
        })
    }

    /// Directions of bending: integer covectors whose saturated span is the
    /// bending row lattice.
    pub fn bending_covectors(&self) -> Vec<Vec<Int>> {
        let mut out = Vec::new();
        for a in &self.atoms {
            match a {
                Atom::Family(f) => out.push(f.normal.clone()),
                Atom::Form(f) => out.extend(f.red.p.rows().iter().cloned()),
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        if self.atoms.len() == 1 && self.linear.iter().all(|x| x.is_zero()) && self.constant.is_zero() {
            return self.atoms[0].to_json();
        }
        let mut m = Map::new();
        m.insert("atoms".into(), Value::Array(self.atoms.iter().map(Atom::to_json).collect()));
        if self.linear.iter().any(|x| !x.is_zero()) {
            m.insert("linear".into(), json!(self.linear.iter().map(fmt_q).collect::<Vec<_>>()));
        }
        if !self.constant.is_zero() {
            m.insert("constant".into(), json!(fmt_q(&self.constant)));
        }
        m.insert("g".into(), json!(self.g));
        Value::Object(m)
    }

    pub fn from_json(v: &Value, g: Option<usize>) -> Result<PLSection> {
        if let Some(atoms) = v.get("atoms") {
            let Some(arr) = atoms.as_array() else {
                return invalid("\"atoms\" must be an array");
            };
            let atoms: Vec<Atom> = arr.iter().map(Atom::from_json).collect::<Result<_>>()?;
            let g = match (g, v.get("g").and_then(Value::as_u64), atoms.first()) {
                (Some(g), _, _) => g,
                (None, Some(g), _) => g as usize,
                (None, None, Some(a)) => a.normal_dim(),
                _ => return invalid("cannot infer rank of an empty section"),
            };
            let mut s = PLSection::new(g, atoms)?;
            if let Some(l) = v.get("linear") {
                s.linear = q_list(l)?;
                if s.linear.len() != g {
                    return invalid("linear part has wrong length");
                }
            }
            if let Some(c) = v.get("constant") {
                s.constant = q_from_json(c)?;
            }
            Ok(s)
        } else {
            let a = Atom::from_json(v)?;
            let g = g.unwrap_or(a.normal_dim());
            PLSection::new(g, vec![a])
        }
    }
}

/// Convex section agreeing with `(B(m,m) - L(m))/2` on `M`; `L` defaults to
/// the diagonal of `B`.
pub fn pl_from_form(b: &IntMatrix, l: Option<&[Int]>) -> Result<PLSection> {
    let g = b.nrows();
    let l: Vec<Int> = match l {
        Some(l) => l.to_vec(),
        None => (0..g).map(|i| b.get(i, i).clone()).collect(),
    };
    if b.is_zero() {
        if l.iter().any(|x| x.is_odd()) {
            return invalid("L is not characteristic");
        }
        let lin: Vec<Q> = l.iter().map(|x| -Q::new(x.clone(), Int::from(2))).collect();
        return Ok(PLSection::zero(g).with_linear(lin, Q::zero()));
    }
    PLSection::new(g, vec![Atom::Form(FormAtom::new(b.clone(), l, Q::one())?)])
}

/// The Tate section `(m² - m)/2` in rank one.
pub fn tate() -> PLSection {
    PLSection::family(vec![Int::one()], vec![Q::zero()], vec![Q::one()]).unwrap()
}

/// One section per ground element: normal `x_i`, the given offsets, all
/// bending parameters one.
pub fn shifted_matroidal_arrangement(rep: &MatroidRep, offsets: &[Vec<Q>]) -> Result<(Vec<PLSection>, bool)> {
    if !is_unimodular(&rep.cols) {
        return invalid("representation is not unimodular");
    }
    if offsets.len() != rep.ground_size() {
        return invalid("one offset list per column required");
    }
    let mut out = Vec::new();
    for (i, offs) in offsets.iter().enumerate() {
        let x = rep.column(i);
        out.push(PLSection::family(x, offs.clone(), vec![Q::one(); offs.len()])?);
    }
    let t = is_transversal(&out)?;
    Ok((out, t))
}

/// Normals of the hyperplanes through every intersection point are
/// linearly independent.
pub fn is_transversal(sections: &[PLSection]) -> Result<bool> {
    let mut hyper: Vec<(Vec<Int>, Q)> = Vec::new();
    for s in sections {
        for a in &s.atoms {
            match a {
                Atom::Family(f) => {
                    for r in &f.residues {
                        hyper.push((f.normal.clone(), r.clone()));
                    }
                }
                Atom::Form(_) => return invalid("transversality is defined for hyperplane arrangements"),
            }
        }
    }
    let g = sections.first().map_or(0, |s| s.g);
    Ok(crate::complex::arrangement_is_transversal(g, &hyper))
}

/// Integer values on `(1/d)M` over a fundamental domain, with the
/// quadratic growth data needed to extend them to all of `(1/d)M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueForm {
    pub g: usize,
    pub d: Int,
    pub quadratic: Vec<Vec<Q>>,
    /// `λ_j = b(e_j) - b(0) - B_jj/2`.
    pub lambda: Vec<Q>,
    pub b0: Q,
    /// Values at `k/d` for `k ∈ [0, d)^g`, keyed by `k`.
    pub table: std::collections::BTreeMap<Vec<Int>, Q>,
}

impl ValueForm {
    pub fn from_section(s: &PLSection, d: &Int) -> ValueForm {
        let g = s.g;
        let quadratic = s.quadratic_part_q();
        let b0 = s.value(&vec![Q::zero(); g]);
        let lambda: Vec<Q> = (0..g)
            .map(|j| {
                let mut e = vec![Int::zero(); g];
                e[j] = Int::one();
                s.value_int(&e) - &b0 - &quadratic[j][j] / Q::from_integer(Int::from(2))
            })
            .collect();
        let mut table = std::collections::BTreeMap::new();
        let dd = i64::try_from(d).expect("small denominator");
        let mut ks: Vec<Vec<Int>> = vec![Vec::new()];
        for _ in 0..g {
            ks = ks.into_iter().flat_map(|k| (0..dd).map(move |x| {
                let mut k = k.clone();
                k.push(Int::from(x));
                k
            })).collect();
        }
        for k in ks {
            let x: Vec<Q> = k.iter().map(|v| Q::new(v.clone(), d.clone())).collect();
            table.insert(k, s.value(&x));
        }
        ValueForm { g, d: d.clone(), quadratic, lambda, b0, table }
    }

    /// Value at `k/d` via `b(x + m) = b(x) + B(m,x) + b(m) - b(0)`.
    pub fn value(&self, k: &[Int]) -> Q {
        let (m, r): (Vec<Int>, Vec<Int>) = k.iter().map(|v| v.div_mod_floor(&self.d)).unzip();
        let x: Vec<Q> = r.iter().map(|v| Q::new(v.clone(), self.d.clone())).collect();
        let mq = to_q(&m);
        let bm = crate::delaunay::form_value_q(&self.quadratic, &mq, &mq) / Q::from_integer(Int::from(2))
            + crate::arith::dot_q(&self.lambda, &mq);
        &self.table[&r] + crate::delaunay::form_value_q(&self.quadratic, &mq, &x) + bm
    }
}
