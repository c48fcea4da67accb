//! Regular matroids through unimodular integer representations.

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::arith::{int, Int};
use crate::error::{invalid, Result};
use crate::lattice::{IntMatrix, Sublattice};

/// Column `i` of `cols` is the vector `x_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatroidRep {
    pub cols: IntMatrix,
}

impl MatroidRep {
    pub fn new(cols: IntMatrix) -> Self {
        MatroidRep { cols }
    }

    pub fn rank_ambient(&self) -> usize {
        self.cols.nrows()
    }

    pub fn ground_size(&self) -> usize {
        self.cols.ncols()
    }

    pub fn column(&self, i: usize) -> Vec<Int> {
        self.cols.col(i)
    }

    pub fn columns(&self) -> Vec<Vec<Int>> {
        self.cols.cols_vec()
    }

    /// Whether the columns generate `Z^g`.
    pub fn generates_lattice(&self) -> bool {
        Sublattice::span(self.rank_ambient(), &self.columns()) == Sublattice::full(self.rank_ambient())
    }
}

/// Every maximal minor lies in `{-1, 0, 1}`.
pub fn is_unimodular(a: &IntMatrix) -> bool {
    let a = if a.nrows() > a.ncols() { a.transpose() } else { a.clone() };
    let r = a.nrows();
    let subsets = combinations(a.ncols(), r);
    crate::par::all_range(subsets.len(), |i| a.select_cols(&subsets[i]).det().abs() <= Int::one())
}

pub fn independence(rep: &MatroidRep, subset: &[usize]) -> bool {
    if subset.is_empty() {
        return true;
    }
    rep.cols.select_cols(subset).rank() == subset.len()
}

/// Exhaustive check of the three independence axioms; returns the first
/// violation found.
pub fn check_axioms(rep: &MatroidRep) -> std::result::Result<(), String> {
    let k = rep.ground_size();
    assert!(k <= 20, "exhaustive axiom check limited to 20 elements");
    let n = 1usize << k;
    let indep: Vec<bool> = crate::par::map_range(n, |m| independence(rep, &bits(m, k)));
    if !indep[0] {
        return Err("empty set dependent".into());
    }
    for m in 0..n {
        if !indep[m] {
            continue;
        }
        let mut sub = m;
        loop {
            sub = (sub.wrapping_sub(1)) & m;
            if !indep[sub] {
                return Err(format!("subset {sub:#b} of independent {m:#b} is dependent"));
            }
            if sub == 0 {
                break;
            }
        }
    }
    let sizes: Vec<u32> = (0..n).map(|m| (m as u64).count_ones()).collect();
    let ok = crate::par::all_range(n, |a| {
        if !indep[a] {
            return true;
        }
        (0..n).all(|b| {
            if !indep[b] || sizes[b] <= sizes[a] {
                return true;
            }
            let diff = b & !a;
            (0..k).any(|x| diff >> x & 1 == 1 && indep[a | 1 << x])
        })
    });
    if ok {
        Ok(())
    } else {
        Err("exchange axiom fails".into())
    }
}

fn bits(m: usize, k: usize) -> Vec<usize> {
    (0..k).filter(|&i| m >> i & 1 == 1).collect()
}

pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, n, r, &mut cur, &mut out);
    out
}

/// Directed multigraph; loops and parallel edges allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Graph> {
        for &(u, v) in &edges {
            if u >= vertices || v >= vertices {
                return invalid(format!("edge ({u},{v}) out of range for {vertices} vertices"));
            }
        }
        Ok(Graph { vertices, edges })
    }

    pub fn from_json(v: &Value) -> Result<Graph> {
        let n = v.get("vertices").and_then(Value::as_u64);
        let e = v.get("edges").and_then(Value::as_array);
        let (Some(n), Some(e)) = (n, e) else {
            return invalid("graph needs \"vertices\" and \"edges\"");
        };
        let mut edges = Vec::new();
        for p in e {
            match p.as_array().map(|a| a.iter().filter_map(Value::as_u64).collect::<Vec<_>>()) {
                Some(a) if a.len() == 2 => edges.push((a[0] as usize, a[1] as usize)),
                _ => return invalid(format!("bad edge {p}")),
            }
        }
        Graph::new(n as usize, edges)
    }

    pub fn to_json(&self) -> Value {
        json!({"vertices": self.vertices, "edges": self.edges.iter().map(|&(u, v)| [u, v]).collect::<Vec<_>>()})
    }

    pub fn theta() -> Graph {
        Graph { vertices: 2, edges: vec![(0, 1), (0, 1), (1, 0)] }
    }

    pub fn components(&self) -> usize {
        let mut uf = UnionFind::new(self.vertices);
        for &(u, v) in &self.edges {
            uf.union(u, v);
        }
        (0..self.vertices).filter(|&v| uf.find(v) == v).count()
    }

    /// `|E| - |V| + c`.
    pub fn genus(&self) -> usize {
        self.edges.len() + self.components() - self.vertices
    }

    /// Spanning forest grown by breadth-first search from the lowest vertex of
    /// each component, scanning edges in order.
    pub fn bfs_forest(&self) -> Vec<usize> {
        let mut seen = vec![false; self.vertices];
        let mut forest = Vec::new();
        for root in 0..self.vertices {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                for (i, &(u, v)) in self.edges.iter().enumerate() {
                    let y = if u == x { v } else if v == x { u } else { continue };
                    if !seen[y] {
                        seen[y] = true;
                        forest.push(i);
                        queue.push_back(y);
                    }
                }
            }
        }
        forest.sort();
        forest
    }

    fn validate_forest(&self, forest: &[usize]) -> Result<()> {
        let mut uf = UnionFind::new(self.vertices);
        for &e in forest {
            if e >= self.edges.len() {
                return invalid(format!("forest edge {e} out of range"));
            }
            let (u, v) = self.edges[e];
            if !uf.union(u, v) {
                return invalid(format!("forest edges contain a cycle (edge {e})"));
            }
        }
        if forest.len() + self.components() != self.vertices {
            return invalid("forest does not span the graph");
        }
        Ok(())
    }

    /// Signed edge path from `a` to `b` inside the forest.
    fn forest_path(&self, forest: &[usize], a: usize, b: usize) -> Vec<(usize, i64)> {
        let mut prev: Vec<Option<(usize, usize, i64)>> = vec![None; self.vertices];
        let mut seen = vec![false; self.vertices];
        seen[a] = true;
        let mut queue = std::collections::VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            for &e in forest {
                let (u, v) = self.edges[e];
                let (y, s) = if u == x { (v, 1) } else if v == x { (u, -1) } else { continue };
                if !seen[y] {
                    seen[y] = true;
                    prev[y] = Some((x, e, s));
                    queue.push_back(y);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = b;
        while cur != a {
            let (p, e, s) = prev[cur].expect("forest path exists");
            path.push((e, s));
            cur = p;
        }
        path.reverse();
        path
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        self.0[a.max(b)] = a.min(b);
        true
    }
}

/// Rows are the fundamental circuits of the non-forest edges, in edge order;
/// each circuit runs along its own edge and returns through the forest.
pub fn cographic_rep(g: &Graph, spanning_forest: &[usize]) -> Result<MatroidRep> {
    g.validate_forest(spanning_forest)?;
    let mut rows = Vec::new();
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        if spanning_forest.contains(&i) {
            continue;
        }
        let mut row = vec![Int::zero(); g.edges.len()];
        row[i] = Int::one();
        for (e, s) in g.forest_path(spanning_forest, v, u) {
            row[e] += int(s);
        }
        rows.push(row);
    }
    Ok(MatroidRep::new(IntMatrix::from_rows_with_cols(rows, g.edges.len())))
}

/// Rank-one Gram matrices `x_i x_i^T`, in column order.
pub fn matroidal_cone(rep: &MatroidRep) -> Vec<IntMatrix> {
    rep.columns().iter().map(|x| outer(x)).collect()
}

pub fn outer(x: &[Int]) -> IntMatrix {
    IntMatrix::from_rows_with_cols(x.iter().map(|a| x.iter().map(|b| a * b).collect()).collect(), x.len())
}

/// The totally unimodular 5×10 matrix of the exceptional regular matroid.
pub fn r10() -> MatroidRep {
    MatroidRep::new(IntMatrix::from_i64(&[
        &[1, 0, 0, 0, 0, -1, 1, 0, 0, 1],
        &[0, 1, 0, 0, 0, 1, -1, 1, 0, 0],
        &[0, 0, 1, 0, 0, 0, 1, -1, 1, 0],
        &[0, 0, 0, 1, 0, 0, 0, 1, -1, 1],
        &[0, 0, 0, 0, 1, 1, 0, 0, 1, -1],
    ]))
}

pub fn theta_rep() -> MatroidRep {
    MatroidRep::new(IntMatrix::from_i64(&[&[1, 0, 1], &[0, 1, 1]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ints;

    #[test]
    fn unimodularity() {
        assert!(is_unimodular(&theta_rep().cols));
        assert!(is_unimodular(&r10().cols));
        assert!(!is_unimodular(&IntMatrix::from_i64(&[&[1, 1], &[-1, 1]])));
    }

    #[test]
    fn theta_independence() {
        let t = theta_rep();
        assert!(independence(&t, &[]));
        assert!(independence(&t, &[0, 1]));
        assert!(!independence(&t, &[0, 1, 2]));
    }

    #[test]
    fn cographic_examples() {
        let rep = cographic_rep(&Graph::theta(), &[2]).unwrap();
        assert_eq!(rep.cols, theta_rep().cols);
        let tree = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let rep = cographic_rep(&tree, &[0, 1]).unwrap();
        assert_eq!((rep.rank_ambient(), rep.ground_size()), (0, 2));
        let lp = Graph::new(1, vec![(0, 0)]).unwrap();
        assert_eq!(cographic_rep(&lp, &[]).unwrap().cols, IntMatrix::from_i64(&[&[1]]));
    }

    #[test]
    fn cographic_rejects_bad_forest() {
        assert!(cographic_rep(&Graph::theta(), &[0, 1]).is_err());
        assert!(cographic_rep(&Graph::theta(), &[]).is_err());
    }

    #[test]
    fn matroidal_cone_theta() {
        let c = matroidal_cone(&theta_rep());
        assert_eq!(c[0], IntMatrix::from_i64(&[&[1, 0], &[0, 0]]));
        assert_eq!(c[1], IntMatrix::from_i64(&[&[0, 0], &[0, 1]]));
        assert_eq!(c[2], IntMatrix::from_i64(&[&[1, 1], &[1, 1]]));
        let b6 = &matroidal_cone(&r10())[5];
        assert_eq!((0..5).map(|i| b6.get(i, i).clone()).collect::<Vec<_>>(), ints(&[1, 1, 0, 0, 1]));
    }

    #[test]
    fn r10_columns() {
        let r = r10();
        assert_eq!(r.column(0), ints(&[1, 0, 0, 0, 0]));
        assert_eq!(r.column(6), ints(&[1, -1, 1, 0, 0]));
        assert!(r.generates_lattice());
    }

    #[test]
    fn theta_axioms() {
        assert!(check_axioms(&theta_rep()).is_ok());
    }
}
