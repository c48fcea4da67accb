//! Truncated theta series, their multiplication rule and the relations
//! they satisfy on the central fiber.
//!
//! `Θ_v̄ = Σ_{v ∈ v̄+M} (z^v u_1^{b_1(v)}⋯u_k^{b_k(v)})^w` with the trivial
//! twist. Enumeration is certified by the quadratic growth of `b = Σ b_i`:
//! `b = q + p` with `q(x) = B(x,x)/2 + λ·x + b(0)` and `p` periodic,
//! bounded on a unit cube by `flo ≤ p ≤ fhi`.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::arith::{ceil_q, dot_q, floor_q, fmt_q, inverse_q, qi, sqrt_upper, Int, Q};
use crate::delaunay::form_value_q;
use crate::error::{invalid, Error, Result};
use crate::lattice::matrix::int_to_json;
use crate::lattice::{left_kernel, row_hnf, IntMatrix};
use crate::mumford::MumfordData;
use crate::plsection::PLSection;

/// Polynomial in `u_1..u_k` with rational exponents and integer
/// coefficients.
pub type Poly = BTreeMap<Vec<Q>, Int>;

/// Class `v̄ = num / w` in `(1/w)M / M`, numerators reduced into `[0, w)`.
pub type ThetaClass = Vec<Int>;

pub fn reduce_class(num: &[Int], w: &Int) -> ThetaClass {
    num.iter().map(|x| x.mod_floor(w)).collect()
}

/// All `w^g` classes of weight `w`, lexicographically.
pub fn classes(g: usize, w: &Int) -> Vec<ThetaClass> {
    let mut out: Vec<ThetaClass> = vec![Vec::new()];
    for _ in 0..g {
        let mut next = Vec::new();
        for c in &out {
            let mut x = Int::zero();
            while &x < w {
                let mut c2 = c.clone();
                c2.push(x.clone());
                next.push(c2);
                x += 1;
            }
        }
        out = next;
    }
    out
}

/// Parse `a/w` or `a1,a2,…/w`; returns numerators scaled to weight `w`.
pub fn parse_class(s: &str, g: usize, w: &Int) -> Result<ThetaClass> {
    let (nums, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.trim()),
        None => (s, "1"),
    };
    let den: Int = den.parse().map_err(|_| Error::Validation(format!("bad class denominator in {s:?}")))?;
    if den.is_zero() || den.is_negative() {
        return invalid(format!("bad class denominator in {s:?}"));
    }
    let nums: Vec<Int> = nums
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Validation(format!("bad class numerator in {s:?}"))))
        .collect::<Result<_>>()?;
    if nums.len() != g {
        return invalid(format!("class {s:?} has {} coordinates, expected {g}", nums.len()));
    }
    let scaled: Vec<Q> = nums.iter().map(|n| Q::new(n * w, den.clone())).collect();
    if scaled.iter().any(|x| !x.denom().is_one()) {
        return invalid(format!("class {s:?} is not in (1/{w})M"));
    }
    Ok(reduce_class(&scaled.iter().map(|x| x.to_integer()).collect::<Vec<_>>(), w))
}

pub fn fmt_class(c: &[Int], w: &Int) -> String {
    let parts: Vec<String> = c.iter().map(|x| format!("{x}/{w}")).collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("({})", parts.join(","))
    }
}

/// Growth data of `b = Σ b_i` certifying finite enumerations.
#[derive(Clone, Debug)]
pub struct Growth {
    pub b: Vec<Vec<Q>>,
    pub binv: Vec<Vec<Q>>,
    pub lambda: Vec<Q>,
    pub b0: Q,
    pub flo: Q,
    pub fhi: Q,
}

impl Growth {
    pub fn new(total: &PLSection) -> Result<Growth> {
        let g = total.g;
        let b = total.quadratic_part_q();
        let binv = inverse_q(&b).ok_or_else(|| Error::Validation("total form is degenerate".into()))?;
        let zero = vec![Q::zero(); g];
        let b0 = total.value(&zero);
        let half = Q::new(1.into(), 2.into());
        let lambda: Vec<Q> = (0..g)
            .map(|j| {
                let mut e = zero.clone();
                e[j] = Q::from_integer(1.into());
                total.value(&e) - &b0 - &b[j][j] * &half
            })
            .collect();
        let s0 = total.subgradient(&zero);
        let mut flo = Q::zero();
        let mut fhi = Q::zero();
        for j in 0..g {
            let d = &s0[j] - &lambda[j];
            if d.is_negative() {
                flo += d;
            }
            fhi += lambda[j].abs();
            for k in 0..g {
                if b[j][k].is_positive() {
                    flo -= &b[j][k] * &half;
                }
                fhi += b[j][k].abs() * &half;
            }
        }
        Ok(Growth { b, binv, lambda, b0, flo, fhi })
    }

    /// Integer boxes containing `{x : B(x - c, x - c)/2 <= ρ}`.
    fn box_around(&self, c: &[Q], rho: &Q) -> Option<Vec<(Q, Q)>> {
        if rho.is_negative() {
            return None;
        }
        let two = Q::from_integer(2.into());
        Some(
            (0..c.len())
                .map(|i| {
                    let hw = sqrt_upper(&(&two * rho * &self.binv[i][i]));
                    (&c[i] - &hw, &c[i] + &hw)
                })
                .collect(),
        )
    }

    /// Points `x = (num + w·m)/w` with `q(x) <= r`, as the integer vectors `m`.
    fn lattice_points(&self, num: &[Int], w: &Int, r: &Q) -> Vec<Vec<Int>> {
        let g = num.len();
        let half = Q::new(1.into(), 2.into());
        let x0: Vec<Q> = (0..g).map(|i| -dot_q(&self.binv[i], &self.lambda)).collect();
        let qx0 = form_value_q(&self.b, &x0, &x0) * &half + dot_q(&self.lambda, &x0) + &self.b0;
        let Some(bx) = self.box_around(&x0, &(r - qx0)) else { return Vec::new() };
        let wq = qi(w);
        let ranges: Vec<(Int, Int)> = bx
            .iter()
            .zip(num)
            .map(|((lo, hi), n)| (ceil_q(&((lo * &wq - qi(n)) / &wq)), floor_q(&((hi * &wq - qi(n)) / &wq))))
            .collect();
        box_points(&ranges)
    }
}

fn box_points(ranges: &[(Int, Int)]) -> Vec<Vec<Int>> {
    let mut out: Vec<Vec<Int>> = vec![Vec::new()];
    for (lo, hi) in ranges {
        let mut next = Vec::new();
        for p in &out {
            let mut x = lo.clone();
            while &x <= hi {
                let mut p2 = p.clone();
                p2.push(x.clone());
                next.push(p2);
                x += 1;
            }
        }
        out = next;
    }
    out
}

fn check_weight(data: &MumfordData, w: &Int) -> Result<()> {
    if !w.is_positive() {
        return invalid("weights must be positive");
    }
    if !w.is_multiple_of(&data.d) {
        return invalid(format!("weight {w} is not divisible by d = {}", data.d));
    }
    Ok(())
}

/// `(z-exponent, u-exponents)` of the term at `v = (num + w·m)/w`.
fn term(data: &MumfordData, num: &[Int], m: &[Int], w: &Int) -> (Vec<Int>, Vec<Q>) {
    let z: Vec<Int> = num.iter().zip(m).map(|(n, x)| n + w * x).collect();
    let v: Vec<Q> = z.iter().map(|x| Q::new(x.clone(), w.clone())).collect();
    let u = data.sections.iter().map(|s| s.value(&v) * qi(w)).collect();
    (z, u)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaSeries {
    pub w: Int,
    pub class: ThetaClass,
    pub trunc: Q,
    /// `(z-exponent, u-exponents) -> coefficient`.
    pub terms: BTreeMap<(Vec<Int>, Vec<Q>), Int>,
}

pub fn degree(u: &[Q]) -> Q {
    u.iter().sum()
}

impl ThetaSeries {
    pub fn lines(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|((z, u), c)| {
                let zs: Vec<String> = z.iter().map(|x| x.to_string()).collect();
                let us: Vec<String> = u.iter().map(fmt_q).collect();
                format!("z^({}) u^({}) * {c}", zs.join(","), us.join(","))
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "weight": int_to_json(&self.w),
            "class": self.class.iter().map(int_to_json).collect::<Vec<_>>(),
            "trunc": fmt_q(&self.trunc),
            "terms": self.terms.iter().map(|((z, u), c)| json!({
                "z": z.iter().map(int_to_json).collect::<Vec<_>>(),
                "u": u.iter().map(fmt_q).collect::<Vec<_>>(),
                "coeff": int_to_json(c),
            })).collect::<Vec<_>>(),
        })
    }

    /// Product truncated at `trunc`. Exact when all exponents are
    /// nonnegative.
    pub fn mul(&self, o: &ThetaSeries, trunc: &Q) -> BTreeMap<(Vec<Int>, Vec<Q>), Int> {
        let mut out: BTreeMap<(Vec<Int>, Vec<Q>), Int> = BTreeMap::new();
        for ((z1, u1), c1) in &self.terms {
            for ((z2, u2), c2) in &o.terms {
                let u: Vec<Q> = u1.iter().zip(u2).map(|(a, b)| a + b).collect();
                if &degree(&u) > trunc {
                    continue;
                }
                let z: Vec<Int> = z1.iter().zip(z2).map(|(a, b)| a + b).collect();
                *out.entry((z, u)).or_insert_with(Int::zero) += c1 * c2;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
}

/// All terms of `Θ_{class/w}` with total u-degree at most `trunc`.
pub fn theta_expand(data: &MumfordData, class: &[Int], w: &Int, trunc: &Q) -> Result<ThetaSeries> {
    check_weight(data, w)?;
    if class.len() != data.g {
        return invalid("class has the wrong length");
    }
    let class = reduce_class(class, w);
    let gr = Growth::new(&data.total())?;
    let r = trunc / qi(w) - &gr.flo;
    let ms = gr.lattice_points(&class, w, &r);
    let terms: Vec<(Vec<Int>, Vec<Q>)> = crate::par::map(&ms, |m| term(data, &class, m, w));
    let mut out = BTreeMap::new();
    for t in terms {
        if &degree(&t.1) <= trunc {
            out.insert(t, Int::from(1));
        }
    }
    Ok(ThetaSeries { w: w.clone(), class, trunc: trunc.clone(), terms: out })
}

/// `Θ_{c1/w1}·Θ_{c2/w2} = Σ_{c3} p_{c3}(u)·Θ_{c3/(w1+w2)}`, with each
/// `p_{c3}` truncated at total degree `trunc`.
pub fn theta_multiply(
    data: &MumfordData,
    c1: &[Int],
    w1: &Int,
    c2: &[Int],
    w2: &Int,
    trunc: &Q,
) -> Result<BTreeMap<ThetaClass, Poly>> {
    check_weight(data, w1)?;
    check_weight(data, w2)?;
    let g = data.g;
    let w3 = w1 + w2;
    let (c1, c2) = (reduce_class(c1, w1), reduce_class(c2, w2));
    let gr = Growth::new(&data.total())?;
    let (q1, q2, q3) = (qi(w1), qi(w2), qi(&w3));
    let v1: Vec<Q> = c1.iter().map(|x| qi(x) / &q1).collect();
    let v20: Vec<Q> = c2.iter().map(|x| qi(x) / &q2).collect();
    // excess >= (w1 w2 / 2 w3) B(δ,δ) + w3 (flo - fhi), δ = v2 - v1
    let slack = trunc - &q3 * (&gr.flo - &gr.fhi);
    let rho = &slack * &q3 / (&q1 * &q2);
    let delta0: Vec<Q> = v20.iter().zip(&v1).map(|(a, b)| a - b).collect();
    let zero = vec![Q::zero(); g];
    let Some(bx) = gr.box_around(&zero, &rho) else { return Ok(BTreeMap::new()) };
    let ranges: Vec<(Int, Int)> =
        bx.iter().zip(&delta0).map(|((lo, hi), d0)| (ceil_q(&(lo - d0)), floor_q(&(hi - d0)))).collect();
    let ms = box_points(&ranges);
    let base1: Vec<Q> = data.sections.iter().map(|s| s.value(&v1) * &q1).collect();
    let contribs: Vec<Option<(ThetaClass, Vec<Q>)>> = crate::par::map(&ms, |m| {
        let v2: Vec<Q> = v20.iter().zip(m).map(|(a, b)| a + qi(b)).collect();
        let num3: Vec<Q> = v1.iter().zip(&v2).map(|(a, b)| a * &q1 + b * &q2).collect();
        let v3: Vec<Q> = num3.iter().map(|x| x / &q3).collect();
        let ex: Vec<Q> = data
            .sections
            .iter()
            .zip(&base1)
            .map(|(s, b1)| b1 + s.value(&v2) * &q2 - s.value(&v3) * &q3)
            .collect();
        if &degree(&ex) > trunc {
            return None;
        }
        let cls = reduce_class(&num3.iter().map(|x| x.to_integer()).collect::<Vec<_>>(), &w3);
        Some((cls, ex))
    });
    let mut out: BTreeMap<ThetaClass, Poly> = BTreeMap::new();
    for (cls, ex) in contribs.into_iter().flatten() {
        *out.entry(cls).or_default().entry(ex).or_insert_with(Int::zero) += 1;
    }
    Ok(out)
}

/// Coefficients of products of weight-`w` thetas modulo `(u_1,…,u_k)`.
pub struct ModU<'a> {
    data: &'a MumfordData,
    w: Int,
    cache: BTreeMap<(ThetaClass, Int, ThetaClass), BTreeMap<ThetaClass, Int>>,
}

impl<'a> ModU<'a> {
    pub fn new(data: &'a MumfordData, w: &Int) -> Result<Self> {
        check_weight(data, w)?;
        Ok(ModU { data, w: w.clone(), cache: BTreeMap::new() })
    }

    fn pair(&mut self, a: &ThetaClass, wa: &Int, b: &ThetaClass) -> Result<BTreeMap<ThetaClass, Int>> {
        let key = (a.clone(), wa.clone(), b.clone());
        if let Some(v) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let row = theta_multiply(self.data, a, wa, b, &self.w, &Q::zero())?;
        let g = self.data.k;
        let zero = vec![Q::zero(); g];
        let mut out = BTreeMap::new();
        for (c, p) in row {
            if let Some(x) = p.get(&zero) {
                out.insert(c, x.clone());
            }
        }
        self.cache.insert(key, out.clone());
        Ok(out)
    }

    /// Expansion of `Θ_{a_1}⋯Θ_{a_n}` in weight `n·w` classes.
    pub fn product(&mut self, factors: &[ThetaClass]) -> Result<BTreeMap<ThetaClass, Int>> {
        let mut cur: BTreeMap<ThetaClass, Int> = BTreeMap::from([(factors[0].clone(), Int::from(1))]);
        let mut wc = self.w.clone();
        for f in &factors[1..] {
            let mut next: BTreeMap<ThetaClass, Int> = BTreeMap::new();
            for (c, x) in &cur {
                for (e, y) in self.pair(c, &wc, f)? {
                    *next.entry(e).or_insert_with(Int::zero) += x * y;
                }
            }
            next.retain(|_, v| !v.is_zero());
            cur = next;
            wc += &self.w;
        }
        Ok(cur)
    }
}

/// Multisets of size `n` from `0..m`, as sorted index tuples in lex order.
pub fn multisets(m: usize, n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..m {
        for rest in multisets(m - first, n - 1) {
            let mut v = vec![first];
            v.extend(rest.into_iter().map(|x| x + first));
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Relations {
    pub w: Int,
    pub degree: usize,
    pub classes: Vec<ThetaClass>,
    /// Monomials as sorted index tuples into `classes`.
    pub monomials: Vec<Vec<usize>>,
    /// Expansion of each monomial in weight `degree·w` classes.
    pub expansions: Vec<BTreeMap<ThetaClass, Int>>,
    /// Integer relations among the monomials, one row each, in Hermite form.
    pub relations: Vec<Vec<Int>>,
    /// Some face of the dicing meets one of its own translates.
    pub immersed: bool,
}

impl Relations {
    pub fn monomial_name(&self, m: &[usize]) -> String {
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < m.len() {
            let j = m[i..].iter().take_while(|&&x| x == m[i]).count();
            let base = format!("T{}", fmt_class(&self.classes[m[i]], &self.w));
            parts.push(if j == 1 { base } else { format!("{base}^{j}") });
            i += j;
        }
        parts.join("*")
    }

    pub fn relation_strings(&self) -> Vec<String> {
        self.relations
            .iter()
            .map(|r| {
                let mut s = String::new();
                for (c, m) in r.iter().zip(&self.monomials) {
                    if c.is_zero() {
                        continue;
                    }
                    let sign = if c.is_negative() { " - " } else if s.is_empty() { "" } else { " + " };
                    let a = c.abs();
                    let coef = if a == Int::from(1) { String::new() } else { format!("{a}*") };
                    s.push_str(&format!("{sign}{coef}{}", self.monomial_name(m)));
                }
                format!("{s} = 0")
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "weight": int_to_json(&self.w),
            "degree": self.degree,
            "immersed": self.immersed,
            "monomials": self.monomials.iter().map(|m| self.monomial_name(m)).collect::<Vec<_>>(),
            "relations": self.relations.iter().map(|r| r.iter().map(int_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "readable": self.relation_strings(),
        })
    }
}

/// Kernel of `Sym^degree(weight-w thetas) -> weight (degree·w) thetas`
/// modulo `(u_1,…,u_k)`.
pub fn central_fiber_relations(data: &MumfordData, w: &Int, degree: usize) -> Result<Relations> {
    if degree == 0 {
        return invalid("degree must be positive");
    }
    let mut modu = ModU::new(data, w)?;
    let classes = classes(data.g, w);
    let monomials = multisets(classes.len(), degree);
    let mut expansions = Vec::new();
    for m in &monomials {
        let f: Vec<ThetaClass> = m.iter().map(|&i| classes[i].clone()).collect();
        expansions.push(modu.product(&f)?);
    }
    let targets = crate::theta::classes(data.g, &(w * Int::from(degree as u64)));
    let rows: Vec<Vec<Int>> = expansions
        .iter()
        .map(|e| targets.iter().map(|t| e.get(t).cloned().unwrap_or_else(Int::zero)).collect())
        .collect();
    let mat = IntMatrix::from_rows_with_cols(rows, targets.len());
    let ker = left_kernel(&mat);
    let relations = if ker.is_empty() {
        Vec::new()
    } else {
        let h = row_hnf(&IntMatrix::from_rows_with_cols(ker, monomials.len()));
        h.h.rows()[..h.rank].to_vec()
    };
    let pc = data.full_refinement()?;
    let immersed = pc.faces.iter().any(|f| f.immersed);
    Ok(Relations { w: w.clone(), degree, classes, monomials, expansions, relations, immersed })
}

/// `central_fiber_relations` that refuses when some face is immersed.
pub fn central_fiber_relations_strict(data: &MumfordData, w: &Int, degree: usize) -> Result<Relations> {
    let r = central_fiber_relations(data, w, degree)?;
    if r.immersed {
        return Err(Error::Refusal(
            "the dicing has faces meeting their own translates; theta functions of this weight do not embed the central fiber".into(),
        ));
    }
    Ok(r)
}
