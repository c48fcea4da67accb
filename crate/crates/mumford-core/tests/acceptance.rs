//! End-to-end acceptance suite. Prints one pass/fail line per criterion and
//! exits nonzero if any fails; runs without the libtest harness so the lines
//! always show.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use mumford_core::arith::{floor_q, Int, Q};
use mumford_core::delaunay::{delaunay, same_delaunay, voronoi_cell};
use mumford_core::lattice::IntMatrix;
use mumford_core::matroid::{check_axioms, cographic_rep, combinations, is_unimodular, r10, theta_rep, Graph};
use mumford_core::monodromy::{cycles_in_e, data_logs, monodromy_forms, picard_lefschetz, SymplecticLattice};
use mumford_core::mumford::{classify_singularities, dual_complex, is_k_trivial, recover_arrangement, MumfordData};
use mumford_core::plsection::{shifted_matroidal_arrangement, tate};
use mumford_core::resolve::{monomial_base_change, resolve, separated_bends, MonomialMap, ResolutionPlan};
use mumford_core::theta::{
    central_fiber_relations, classes, reduce_class, theta_expand, theta_multiply, Poly, ThetaClass,
};

type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($c:expr, $($m:tt)+) => {
        if !$c {
            return Err(format!($($m)+));
        }
    };
}

fn tate_data() -> MumfordData {
    MumfordData::new("tate", 1, None, vec![tate()]).unwrap()
}

/// `b(v)` for the Tate section, by linear interpolation of `(m² - m)/2`.
fn tate_b(v: &Q) -> Q {
    let m = floor_q(v);
    let t = v - Q::from_integer(m.clone());
    let bm = |m: &Int| Q::new(m * (m - int(1)), int(2));
    (Q::from_integer(int(1)) - &t) * bm(&m) + &t * bm(&(&m + int(1)))
}

fn c1_tate_golden() -> Check {
    let printed: [((i64, i64), [(i64, i64); 7]); 6] = [
        ((0, 1), [(-3, 6), (-2, 3), (-1, 1), (0, 0), (1, 0), (2, 1), (3, 3)]),
        ((0, 2), [(-6, 12), (-4, 6), (-2, 2), (0, 0), (2, 0), (4, 2), (6, 6)]),
        ((1, 2), [(-5, 9), (-3, 4), (-1, 1), (1, 0), (3, 1), (5, 4), (7, 9)]),
        ((0, 3), [(-9, 18), (-6, 9), (-3, 3), (0, 0), (3, 0), (6, 3), (9, 9)]),
        ((1, 3), [(-8, 15), (-5, 7), (-2, 2), (1, 0), (4, 1), (7, 5), (10, 12)]),
        ((2, 3), [(-7, 12), (-4, 5), (-1, 1), (2, 0), (5, 2), (8, 7), (11, 15)]),
    ];
    let d = tate_data();
    let trunc = q(9, 1);
    for ((a, w), terms) in printed {
        let s = theta_expand(&d, &[int(a)], &int(w), &trunc).map_err(|e| e.to_string())?;
        for (z, u) in terms.iter().filter(|(_, u)| *u <= 9) {
            let c = s.terms.get(&(vec![int(*z)], vec![q(*u, 1)]));
            ensure!(c == Some(&int(1)), "Θ_{a}/{w}: z^{z} u^{u} has coefficient {c:?}");
        }
        let mut oracle = BTreeMap::new();
        for n in -30..=30 {
            let v = q(a, w) + q(n, 1);
            let e = tate_b(&v) * q(w, 1);
            if e <= trunc {
                oracle.insert((vec![(q(w, 1) * &v).to_integer()], vec![e]), int(1));
            }
        }
        ensure!(s.terms == oracle, "Θ_{a}/{w} differs from the direct evaluation of b");
    }
    Ok(())
}

fn c2_nodal_cubic() -> Check {
    let d = tate_data();
    let r = central_fiber_relations(&d, &int(3), 3).map_err(|e| e.to_string())?;
    ensure!(r.relations.len() == 1, "expected one relation, got {}", r.relations.len());
    let mut want = vec![int(0); r.monomials.len()];
    for (mono, c) in [(vec![0, 1, 2], 1), (vec![1, 1, 1], -1), (vec![2, 2, 2], -1)] {
        let i = r.monomials.iter().position(|m| *m == mono).unwrap();
        want[i] = int(c);
    }
    let got = &r.relations[0];
    let neg: Vec<Int> = want.iter().map(|x| -x).collect();
    ensure!(*got == want || *got == neg, "relation {:?}", r.relation_strings());
    let table: [([usize; 3], &[(i64, i64)]); 10] = [
        ([0, 0, 0], &[(0, 1), (3, 3), (6, 3)]),
        ([1, 1, 1], &[(3, 1)]),
        ([0, 0, 1], &[(1, 1), (4, 2), (7, 1)]),
        ([1, 1, 2], &[(4, 1)]),
        ([0, 1, 1], &[(2, 1), (5, 1)]),
        ([0, 0, 2], &[(2, 1), (5, 2), (8, 1)]),
        ([1, 2, 2], &[(5, 1)]),
        ([0, 2, 2], &[(4, 1), (7, 1)]),
        ([0, 1, 2], &[(3, 1), (6, 1)]),
        ([2, 2, 2], &[(6, 1)]),
    ];
    for (mono, exp) in table {
        let i = r.monomials.iter().position(|m| *m == mono).unwrap();
        let want: BTreeMap<ThetaClass, Int> = exp.iter().map(|&(c, x)| (vec![int(c)], int(x))).collect();
        ensure!(r.expansions[i] == want, "{} = {:?}", r.monomial_name(&mono), r.expansions[i]);
    }
    Ok(())
}

fn c3_theta_graph() -> Check {
    let d3 = load_example("theta3");
    let s = theta_expand(&d3, &[int(0), int(0)], &int(1), &q(5, 1)).map_err(|e| e.to_string())?;
    let block: [((i64, i64), [i64; 3]); 9] = [
        ((-1, 1), [1, 0, 0]),
        ((0, 1), [0, 0, 0]),
        ((1, 1), [0, 0, 1]),
        ((-1, 0), [1, 0, 1]),
        ((0, 0), [0, 0, 0]),
        ((1, 0), [0, 0, 0]),
        ((-1, -1), [1, 1, 3]),
        ((0, -1), [0, 1, 1]),
        ((1, -1), [0, 1, 0]),
    ];
    for ((z1, z2), u) in block {
        let key = (vec![int(z1), int(z2)], u.iter().map(|&x| q(x, 1)).collect::<Vec<_>>());
        ensure!(s.terms.get(&key) == Some(&int(1)), "missing z^({z1},{z2}) u^{u:?}");
        let others = s.terms.keys().filter(|(z, _)| *z == key.0).count();
        ensure!(others == 1, "z^({z1},{z2}) appears {others} times");
    }
    let trunc = q(8, 1);
    let r = [3i64, 2, 1];
    let three = theta_expand(&d3, &[int(0), int(0)], &int(1), &trunc).map_err(|e| e.to_string())?;
    let mut substituted = BTreeMap::new();
    for ((z, u), c) in &three.terms {
        let e: Q = u.iter().zip(r).map(|(x, ri)| x * q(ri, 1)).sum();
        if e <= trunc {
            substituted.insert((z.clone(), vec![e]), c.clone());
        }
    }
    let one = theta_expand(&load_example("theta1"), &[int(0), int(0)], &int(1), &trunc).map_err(|e| e.to_string())?;
    ensure!(one.terms == substituted, "substitution u_i = u^r_i does not give the one-parameter series");
    let map = MonomialMap::new(IntMatrix::from_i64(&[&[3], &[2], &[1]])).unwrap();
    let bc = monomial_base_change(&d3, &map).map_err(|e| e.to_string())?;
    let via_bc = theta_expand(&bc, &[int(0), int(0)], &int(1), &trunc).map_err(|e| e.to_string())?;
    ensure!(via_bc.terms == one.terms, "base-changed data and the one-parameter data disagree");
    let printed: [((i64, i64), i64); 9] =
        [((-1, 1), 3), ((0, 1), 0), ((1, 1), 1), ((-1, 0), 4), ((0, 0), 0), ((1, 0), 0), ((-1, -1), 8), ((0, -1), 3), ((1, -1), 2)];
    for ((z1, z2), e) in printed {
        ensure!(
            one.terms.get(&(vec![int(z1), int(z2)], vec![q(e, 1)])) == Some(&int(1)),
            "one-parameter term z^({z1},{z2}) u^{e} missing"
        );
    }
    Ok(())
}

fn c4_matroids() -> Check {
    let rep = cographic_rep(&Graph::theta(), &[2]).map_err(|e| e.to_string())?;
    ensure!(rep.cols == m(&[&[1, 0, 1], &[0, 1, 1]]), "cographic rep {:?}", rep.cols);
    let r = r10();
    ensure!(is_unimodular(&r.cols), "R10 not unimodular");
    let subsets = combinations(10, 5);
    ensure!(subsets.len() == 252, "{} maximal minors", subsets.len());
    for s in &subsets {
        let d = r.cols.select_cols(s).det();
        ensure!(d >= int(-1) && d <= int(1), "minor {s:?} = {d}");
    }
    let col = |j: usize| r.column(j - 1);
    let comb = |a: usize, b: usize, c: usize| -> Vec<Int> {
        (0..5).map(|i| &col(a)[i] - &col(b)[i] + &col(c)[i]).collect()
    };
    for (lhs, (a, b, c)) in [(6, (5, 1, 2)), (7, (1, 2, 3)), (8, (2, 3, 4)), (9, (3, 4, 5)), (10, (4, 5, 1))] {
        ensure!(col(lhs) == comb(a, b, c), "relation for column {lhs} fails");
    }
    for rep in [&theta_rep(), &r] {
        check_axioms(rep)?;
    }
    Ok(())
}

fn c5_delaunay() -> Check {
    let b = m(&[&[4, 1], &[1, 3]]);
    let d = delaunay(&b).map_err(|e| e.to_string())?;
    let want: BTreeMap<usize, usize> = [(0, 1), (1, 3), (2, 2)].into_iter().collect();
    ensure!(d.census == want, "census {:?}", d.census);
    let v = voronoi_cell(&b).map_err(|e| e.to_string())?;
    ensure!(v.vertices.len() == 6 && v.facets.len() == 6, "Voronoi cell has {} vertices", v.vertices.len());
    ensure!(same_delaunay(&m(&[&[2, 1], &[1, 2]]), &b).map_err(|e| e.to_string())?, "A2 and (4,1;1,3) differ");
    ensure!(!same_delaunay(&IntMatrix::identity(2), &m(&[&[2, 1], &[1, 2]])).map_err(|e| e.to_string())?, "I and A2 agree");
    Ok(())
}

const RANDOM_ARRANGEMENTS: usize = 100;

fn c6_smooth_nodal() -> Check {
    let rep = classify_singularities(&load_example("shifted-theta")).map_err(|e| e.to_string())?;
    ensure!(rep.smooth && rep.nodal(), "shifted theta: {rep:?}");
    let rep = classify_singularities(&load_example("theta3")).map_err(|e| e.to_string())?;
    ensure!(!rep.smooth, "unshifted theta reported smooth");
    let mut r = rng(0xACCE_0006);
    let mut done = 0;
    while done < RANDOM_ARRANGEMENTS {
        let g = r_range(&mut r, 1, 3);
        let k = r_range(&mut r, g, 4);
        let rep = random_unimodular_rep(&mut r, g, k);
        let Some((sections, _)) = random_transversal(&mut r, &rep) else { continue };
        let data = MumfordData::new("random", g, None, sections).map_err(|e| e.to_string())?;
        let s = classify_singularities(&data).map_err(|e| e.to_string())?;
        ensure!(s.smooth && s.nodal(), "case {done}: {:?} not smooth nodal: {:?}", data.to_json(), s.witnesses);
        let Some((rep2, offs)) = recover_arrangement(&data) else {
            return Err(format!("case {done}: recovery failed for {}", data.to_json()));
        };
        let (again, t) = shifted_matroidal_arrangement(&rep2, &offs).map_err(|e| e.to_string())?;
        ensure!(t && again == data.sections && rep2.cols == rep.cols, "case {done}: recovered arrangement differs");
        done += 1;
    }
    Ok(())
}

fn r_range(r: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    r.gen_range(lo..=hi)
}

fn c7_k_trivial_dual() -> Check {
    for (name, h1) in [("tate", 1), ("shifted-theta", 2), ("theta3", 2), ("r10", 5)] {
        let d = load_example(name);
        ensure!(is_k_trivial(&d).map_err(|e| e.to_string())?, "{name} not K-trivial");
        let dc = dual_complex(&d).map_err(|e| e.to_string())?;
        ensure!(dc.h1_rank == h1, "{name}: H1 rank {}", dc.h1_rank);
        let logs = data_logs(&d).map_err(|e| e.to_string())?;
        let f = monodromy_forms(&logs, &SymplecticLattice::standard(d.g)).map_err(|e| e.to_string())?;
        ensure!(f.basis.len() == h1, "{name}: gr0 rank {}", f.basis.len());
        ensure!(f.in_rational_closure() && f.sum_definite, "{name}: forms not positive");
    }
    let lat = SymplecticLattice::standard(5);
    let pl = picard_lefschetz(&lat, &cycles_in_e(5, &r10().columns()));
    let f = monodromy_forms(&pl, &lat).map_err(|e| e.to_string())?;
    let logs = data_logs(&load_example("r10")).map_err(|e| e.to_string())?;
    let g = monodromy_forms(&logs, &lat).map_err(|e| e.to_string())?;
    ensure!(f.forms == g.forms, "vanishing-cycle and data forms differ for R10");
    let mut r = rng(0xACCE_0007);
    let mut done = 0;
    while done < 10 {
        let g = r_range(&mut r, 1, 3);
        let k = r_range(&mut r, g, 4);
        let rep = random_unimodular_rep(&mut r, g, k);
        let Some((sections, _)) = random_transversal(&mut r, &rep) else { continue };
        let data = MumfordData::new("random", g, None, sections).map_err(|e| e.to_string())?;
        ensure!(is_k_trivial(&data).map_err(|e| e.to_string())?, "random arrangement not K-trivial: {}", data.to_json());
        ensure!(dual_complex(&data).map_err(|e| e.to_string())?.h1_rank == g, "random arrangement H1 rank");
        done += 1;
    }
    Ok(())
}

fn c8_resolution() -> Check {
    let t = tate_data();
    let map = MonomialMap::new(m(&[&[3]])).unwrap();
    let rep = resolve(&t, &map, &ResolutionPlan::default_for(&map)).map_err(|e| e.to_string())?;
    ensure!(!rep.base_changed_report.smooth, "Tate base change should be singular");
    ensure!(rep.stage1.is_nearly_nodal(), "Tate stage 1 is {}", rep.stage1.name());
    ensure!(rep.stage2.is_semistable() && rep.standard, "Tate stage 2 is {}", rep.stage2.name());
    ensure!(rep.partial_dual.cells == vec![3, 3] && rep.partial_dual.h1_rank == 1, "Tate dual complex {:?}", rep.partial_dual.cells);
    ensure!(rep.routes_agree, "Tate local and global routes disagree");

    let data = load_example("mon-sep");
    let map = MonomialMap::new(m(&[&[2, 1], &[0, 4], &[3, 1]])).unwrap();
    let plan = ResolutionPlan::default_for(&map).with_separation(int(4));
    for i in 0..3 {
        let row = map.row_on(i, &[0, 1]);
        let bends = separated_bends(&row, &[0, 1], &plan);
        let mut want = Vec::new();
        for j in [0usize, 1] {
            for l in 1..=i64::try_from(&row[j]).unwrap() {
                want.push((int(4 * (j as i64 + 1) + l), j));
            }
        }
        ensure!(bends == want, "row {}: bends {bends:?}", i + 1);
    }
    let rep = resolve(&data, &map, &plan).map_err(|e| e.to_string())?;
    ensure!(rep.stage1.name() == "nearly-nodal", "stage 1 is {}", rep.stage1.name());
    ensure!(rep.stage2.name() == "semistable", "stage 2 is {}", rep.stage2.name());
    ensure!(rep.standard, "a final cone is not standard affine");
    ensure!(rep.coherent, "forgetting colors is not coherent");
    ensure!(rep.routes_agree, "local and global stage-one routes disagree");
    ensure!(rep.strata.iter().all(|s| s.distinct_colors_iff_nodal), "distinct colors do not match nodal vertices");
    Ok(())
}

fn structure_constants(d: &MumfordData, a: &[Int], wa: &Int, b: &[Int], wb: &Int, t: &Q) -> BTreeMap<ThetaClass, Poly> {
    theta_multiply(d, a, wa, b, wb, t).unwrap()
}

fn c9_structure_constants() -> Check {
    use rand::Rng;
    let mut r = rng(0xACCE_0009);
    for case in 0..12 {
        let g = r.gen_range(1..=2);
        let k = r.gen_range(g..=3);
        let d = random_small_data(&mut r, g, k);
        let w = d.d.clone();
        let trunc = q(r.gen_range(2..=6), 1);
        let cls = classes(g, &w);
        let pick = |r: &mut rand_chacha::ChaCha8Rng| cls[r.gen_range(0..cls.len())].clone();
        let (a, b, c) = (pick(&mut r), pick(&mut r), pick(&mut r));
        let w2 = &w + &w;
        let ab = structure_constants(&d, &a, &w, &b, &w, &trunc);
        let bc = structure_constants(&d, &b, &w, &c, &w, &trunc);
        let mut left: BTreeMap<ThetaClass, Poly> = BTreeMap::new();
        for (e, p) in &ab {
            for (f, p2) in structure_constants(&d, e, &w2, &c, &w, &trunc) {
                poly_add(left.entry(f).or_default(), &poly_mul(p, &p2, &trunc));
            }
        }
        let mut right: BTreeMap<ThetaClass, Poly> = BTreeMap::new();
        for (e, p) in &bc {
            for (f, p2) in structure_constants(&d, &a, &w, e, &w2, &trunc) {
                poly_add(right.entry(f).or_default(), &poly_mul(p, &p2, &trunc));
            }
        }
        left.retain(|_, p| !p.is_empty());
        right.retain(|_, p| !p.is_empty());
        ensure!(left == right, "case {case}: associativity fails for {}", d.to_json());
        for p in ab.values().chain(bc.values()) {
            for (e, c) in p {
                ensure!(e.iter().all(|x| *x >= q(0, 1)) && *c > int(0), "case {case}: negative term {e:?} {c}");
            }
        }
    }
    for g in 1..=3 {
        for w in 1..=4i64 {
            let cls = classes(g, &int(w));
            let distinct: BTreeSet<ThetaClass> = cls.iter().map(|c| reduce_class(c, &int(w))).collect();
            ensure!(cls.len() == (w as usize).pow(g as u32) && distinct.len() == cls.len(), "g={g} w={w}: {} classes", cls.len());
        }
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, u64, fn() -> Check); 9] = [
        ("1 Tate theta golden set", 1, c1_tate_golden),
        ("2 nodal cubic relation", 1, c2_nodal_cubic),
        ("3 theta graph series and base change", 2, c3_theta_graph),
        ("4 matroid suite", 30, c4_matroids),
        ("5 Delaunay and Voronoi", 5, c5_delaunay),
        ("6 smoothness and nodality", 60, c6_smooth_nodal),
        ("7 K-triviality and dual complexes", 30, c7_k_trivial_dual),
        ("8 resolution pipeline", 60, c8_resolution),
        ("9 structure-constant laws", 60, c9_structure_constants),
    ];
    let mut failed = Vec::new();
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let el = start.elapsed();
        let res = res.and_then(|_| {
            if el > Duration::from_secs(limit) {
                Err(format!("took {:.2}s, limit {limit}s", el.as_secs_f64()))
            } else {
                Ok(())
            }
        });
        match &res {
            Ok(()) => println!("PASS criterion {name} ({:.2}s, limit {limit}s)", el.as_secs_f64()),
            Err(e) => {
                println!("FAIL criterion {name} ({:.2}s, limit {limit}s): {e}", el.as_secs_f64());
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", criteria.len());
}
