#![allow(dead_code)]

use std::collections::BTreeMap;

use mumford_core::arith::{Int, Q};
use mumford_core::lattice::IntMatrix;
use mumford_core::matroid::{is_unimodular, MatroidRep};
use mumford_core::mumford::MumfordData;
use mumford_core::plsection::{shifted_matroidal_arrangement, PLSection};
use mumford_core::theta::Poly;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn int(x: i64) -> Int {
    Int::from(x)
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(Int::from(n), Int::from(d))
}

pub fn m(rows: &[&[i64]]) -> IntMatrix {
    IntMatrix::from_i64(rows)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn load_example(name: &str) -> MumfordData {
    let path = format!("{}/../../data/examples/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    MumfordData::from_json(&v).unwrap()
}

/// Product of elementary matrices with unit multipliers.
pub fn random_gl(r: &mut ChaCha8Rng, g: usize, steps: usize) -> IntMatrix {
    let mut a = IntMatrix::identity(g);
    if g < 2 {
        return if r.gen_bool(0.5) { a } else { a.scale(&int(-1)) };
    }
    for _ in 0..steps {
        let i = r.gen_range(0..g);
        let mut j = r.gen_range(0..g - 1);
        if j >= i {
            j += 1;
        }
        let c = if r.gen_bool(0.5) { 1 } else { -1 };
        let mut e = IntMatrix::identity(g);
        e.set(i, j, int(c));
        a = e.mul(&a);
    }
    a
}

/// Unimodular `g × k` representation spanning `Z^g`, mixed by a random
/// lattice automorphism.
pub fn random_unimodular_rep(r: &mut ChaCha8Rng, g: usize, k: usize) -> MatroidRep {
    assert!(k >= g);
    loop {
        let mut cols: Vec<Vec<Int>> = (0..g).map(|i| (0..g).map(|j| int((i == j) as i64)).collect()).collect();
        while cols.len() < k {
            let c: Vec<Int> = (0..g).map(|_| int(r.gen_range(-1..=1))).collect();
            if c.iter().any(|x| *x != int(0)) {
                cols.push(c);
            }
        }
        cols.shuffle(r);
        let a = IntMatrix::from_cols(&cols, g);
        if !is_unimodular(&a) {
            continue;
        }
        let u = random_gl(r, g, 3);
        return MatroidRep::new(u.mul(&a));
    }
}

/// Random single offsets with denominators up to 4, resampled until the
/// arrangement is transversal.
pub fn random_transversal(r: &mut ChaCha8Rng, rep: &MatroidRep) -> Option<(Vec<PLSection>, Vec<Vec<Q>>)> {
    for _ in 0..50 {
        let offs: Vec<Vec<Q>> = (0..rep.ground_size())
            .map(|_| {
                let d = r.gen_range(1..=4);
                vec![q(r.gen_range(0..d), d)]
            })
            .collect();
        let (s, t) = shifted_matroidal_arrangement(rep, &offs).unwrap();
        if t {
            return Some((s, offs));
        }
    }
    None
}

/// Truncated product of two polynomials in `u`.
pub fn poly_mul(a: &Poly, b: &Poly, trunc: &Q) -> Poly {
    let mut out: Poly = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<Q> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            if &e.iter().sum::<Q>() > trunc {
                continue;
            }
            *out.entry(e).or_insert_with(|| int(0)) += ca * cb;
        }
    }
    out.retain(|_, c| *c != int(0));
    out
}

pub fn poly_add(a: &mut Poly, b: &Poly) {
    for (e, c) in b {
        *a.entry(e.clone()).or_insert_with(|| int(0)) += c;
    }
    a.retain(|_, c| *c != int(0));
}

/// Small random data: hyperplane families with offsets in `{0, 1/2}` and
/// bending parameters in `{1, 2}`.
/// Needs `k >= g`, otherwise the total form is always degenerate.
pub fn random_small_data(r: &mut ChaCha8Rng, g: usize, k: usize) -> MumfordData {
    assert!(k >= g, "k = {k} sections cannot span a rank {g} form");
    let normals: Vec<Vec<i64>> = if g == 1 { vec![vec![1]] } else { vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]] };
    loop {
        let sections: Vec<PLSection> = (0..k)
            .map(|_| {
                let n = normals[r.gen_range(0..normals.len())].iter().map(|&x| int(x)).collect();
                let off = if r.gen_bool(0.5) { q(0, 1) } else { q(1, 2) };
                let p = q(r.gen_range(1..=2), 1);
                PLSection::family(n, vec![off], vec![p]).unwrap()
            })
            .collect();
        if let Ok(d) = MumfordData::new("random", g, None, sections) {
            return d;
        }
    }
}
