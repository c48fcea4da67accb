//! Deterministic SVG pictures of bending complexes on the torus.
//!
//! Coordinates stay exact until they are rounded to thousandths of a pixel.

use std::collections::BTreeSet;
use std::fmt::Write;

use mumford_core::arith::{floor_q, fmt_q, Int, Q};
use mumford_core::complex::PeriodicComplex;
use mumford_core::mumford::MumfordData;
use mumford_core::{Error, Result};

const SIZE: i64 = 400;
const MARGIN: i64 = 40;
const PALETTE: [&str; 8] = ["#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn color(s: usize) -> &'static str {
    PALETTE[s % PALETTE.len()]
}

fn qn(n: i64) -> Q {
    Q::from_integer(Int::from(n))
}

/// Rounded to three decimals, half away from zero.
fn px(x: &Q) -> String {
    let r = (x * qn(1000)).round().to_integer();
    let neg = r < Int::from(0);
    let a = if neg { -r } else { r };
    let whole = &a / Int::from(1000);
    let frac = &a % Int::from(1000);
    format!("{}{whole}.{frac:0>3}", if neg { "-" } else { "" })
}

fn to_x(x: &Q) -> Q {
    qn(MARGIN) + x * qn(SIZE)
}

fn to_y(y: &Q) -> Q {
    qn(MARGIN) + (qn(1) - y) * qn(SIZE)
}

/// Parameter interval of `a + t(b - a)` inside the unit square.
fn clip(a: &[Q], b: &[Q]) -> Option<(Q, Q)> {
    let (mut lo, mut hi) = (qn(0), qn(1));
    for i in 0..2 {
        let d = &b[i] - &a[i];
        if d == qn(0) {
            if a[i] < qn(0) || a[i] > qn(1) {
                return None;
            }
            continue;
        }
        let t0 = -&a[i] / &d;
        let t1 = (qn(1) - &a[i]) / &d;
        let (s, e) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        lo = lo.max(s);
        hi = hi.min(e);
    }
    (lo < hi).then_some((lo, hi))
}

fn at(a: &[Q], b: &[Q], t: &Q) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

fn header(out: &mut String, title: &str) {
    let full = SIZE + 2 * MARGIN;
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{full}\" height=\"{full}\" viewBox=\"0 0 {full} {full}\">"
    )
    .unwrap();
    writeln!(out, "<title>{}</title>", escape(title)).unwrap();
    writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{full}\" height=\"{full}\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "<rect class=\"domain\" x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>"
    )
    .unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn label(out: &mut String, x: &Q, y: &Q, s: usize, text: &str) {
    writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" fill=\"{}\" font-family=\"sans-serif\" font-size=\"13\">{}</text>",
        px(&(x + qn(4))),
        px(&(y - qn(4))),
        color(s),
        escape(text)
    )
    .unwrap();
}

/// Bending complexes of the sections `idx` (all when empty) on the
/// fundamental domain. Rank one draws the circle as the square's boundary.
pub fn emit_svg(data: &MumfordData, idx: &[usize]) -> Result<String> {
    let idx: Vec<usize> = if idx.is_empty() { (0..data.k).collect() } else { idx.to_vec() };
    if let Some(i) = idx.iter().find(|&&i| i >= data.k) {
        return Err(Error::Validation(format!("section index {} out of range 1..{}", i + 1, data.k)));
    }
    let pc = data.refinement(&idx)?;
    match data.g {
        1 => Ok(circle(data, &idx, &pc)),
        2 => Ok(plane(data, &idx, &pc)),
        g => Err(Error::Validation(format!("SVG output needs a torus of dimension 1 or 2, got {g}"))),
    }
}

/// Position on the boundary of the square of a point `x ∈ [0,1)` of the circle.
fn perimeter(x: &Q) -> (Q, Q) {
    let t = x * qn(4);
    let side = floor_q(&t);
    let f = &t - Q::from_integer(side.clone());
    let (a, b) = match i64::try_from(&side).unwrap_or(0) {
        0 => (f, qn(0)),
        1 => (qn(1), f),
        2 => (qn(1) - f, qn(1)),
        _ => (qn(0), qn(1) - f),
    };
    (to_x(&a), to_y(&b))
}

fn circle(data: &MumfordData, idx: &[usize], pc: &PeriodicComplex) -> String {
    let mut out = String::new();
    header(&mut out, &data.name);
    let mut seen = BTreeSet::new();
    for f in pc.faces.iter().filter(|f| f.dim + 1 == pc.gq()) {
        let p = pc.lift_point(&f.poly.vertices[0]);
        let x = &p[0] - Q::from_integer(floor_q(&p[0]));
        for (pos, &s) in idx.iter().enumerate() {
            let w = pc.wall_weight(pos, f);
            if w == qn(0) || !seen.insert((x.clone(), s)) {
                continue;
            }
            let (cx, cy) = perimeter(&x);
            writeln!(
                out,
                "<circle class=\"wall s{}\" cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{}\"/>",
                s + 1,
                px(&cx),
                px(&cy),
                color(s)
            )
            .unwrap();
            label(&mut out, &cx, &cy, s, &fmt_q(&w));
        }
    }
    out.push_str("</svg>\n");
    out
}

fn plane(data: &MumfordData, idx: &[usize], pc: &PeriodicComplex) -> String {
    let mut out = String::new();
    header(&mut out, &data.name);
    let mut segs: BTreeSet<(usize, Vec<Q>, Vec<Q>, Q)> = BTreeSet::new();
    for f in pc.faces.iter().filter(|f| f.dim == 1) {
        let a = pc.lift_point(&f.poly.vertices[0]);
        let b = pc.lift_point(&f.poly.vertices[1]);
        let weights: Vec<(usize, Q)> =
            idx.iter().enumerate().map(|(pos, &s)| (s, pc.wall_weight(pos, f))).filter(|(_, w)| *w != qn(0)).collect();
        if weights.is_empty() {
            continue;
        }
        let lo: Vec<Int> = (0..2).map(|i| floor_q(&-a[i].clone().max(b[i].clone())) - Int::from(1)).collect();
        let hi: Vec<Int> = (0..2).map(|i| floor_q(&(qn(1) - a[i].clone().min(b[i].clone()))) + Int::from(1)).collect();
        let mut m0 = lo[0].clone();
        while m0 <= hi[0] {
            let mut m1 = lo[1].clone();
            while m1 <= hi[1] {
                let t = [Q::from_integer(m0.clone()), Q::from_integer(m1.clone())];
                let at_ = [&a[0] + &t[0], &a[1] + &t[1]];
                let bt = [&b[0] + &t[0], &b[1] + &t[1]];
                if let Some((s, e)) = clip(&at_, &bt) {
                    let (p, q) = (at(&at_, &bt, &s), at(&at_, &bt, &e));
                    let (p, q) = if p <= q { (p, q) } else { (q, p) };
                    for (sec, w) in &weights {
                        segs.insert((*sec, p.clone(), q.clone(), w.clone()));
                    }
                }
                m1 += 1;
            }
            m0 += 1;
        }
    }
    for (s, p, q, _) in &segs {
        writeln!(
            out,
            "<line class=\"wall s{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"3\"/>",
            s + 1,
            px(&to_x(&p[0])),
            px(&to_y(&p[1])),
            px(&to_x(&q[0])),
            px(&to_y(&q[1])),
            color(*s)
        )
        .unwrap();
    }
    for (s, p, q, w) in &segs {
        let mx = (&p[0] + &q[0]) / qn(2);
        let my = (&p[1] + &q[1]) / qn(2);
        label(&mut out, &to_x(&mx), &to_y(&my), *s, &fmt_q(w));
    }
    let mut dots = BTreeSet::new();
    for v in pc.vertex_points() {
        for d0 in -1..=1 {
            for d1 in -1..=1 {
                let r = [
                    &v[0] - Q::from_integer(floor_q(&v[0])) + qn(d0),
                    &v[1] - Q::from_integer(floor_q(&v[1])) + qn(d1),
                ];
                if r.iter().all(|c| *c >= qn(0) && *c <= qn(1)) {
                    dots.insert(r.to_vec());
                }
            }
        }
    }
    for d in &dots {
        writeln!(out, "<circle class=\"vertex\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"black\"/>", px(&to_x(&d[0])), px(&to_y(&d[1])))
            .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(px(&Q::new(Int::from(1), Int::from(3))), "0.333");
        assert_eq!(px(&Q::new(Int::from(-5), Int::from(2))), "-2.500");
        assert_eq!(px(&qn(440)), "440.000");
    }

    #[test]
    fn clipping() {
        let a = [qn(-1), Q::new(Int::from(1), Int::from(2))];
        let b = [qn(2), Q::new(Int::from(1), Int::from(2))];
        assert_eq!(clip(&a, &b), Some((Q::new(Int::from(1), Int::from(3)), Q::new(Int::from(2), Int::from(3)))));
        assert_eq!(clip(&[qn(2), qn(0)], &[qn(3), qn(0)]), None);
    }
}
