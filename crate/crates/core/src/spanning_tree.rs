//! The spanning-tree indicator over the edge variables of `K_m`: exact marginal
//! counting by Matrix-Tree cofactors, a uniform tree sampler, and the
//! constraint-triangle machinery built on a red/blue edge coloring.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::bareiss_determinant;
use crate::rational::Rational;
use crate::{Error, Result};

/// Largest side (in edges) for which [`dichotomy_check`] accepts tables.
pub const MAX_TABLE_EDGES: usize = 20;

/// Lexicographic labelling of the `C(m,2)` edges `(u,v)`, `u < v`, vertices `0..m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeIndexing {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl EdgeIndexing {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::NoVertices);
        }
        let pairs = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).collect();
        Ok(EdgeIndexing { m, pairs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of edges, `m(m−1)/2`.
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, label: usize) -> Result<(usize, usize)> {
        self.pairs.get(label).copied().ok_or(Error::BadEdge(label))
    }

    /// Label of the edge `{u, v}` in either order.
    pub fn label(&self, u: usize, v: usize) -> Result<usize> {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        if u == v || v >= self.m {
            return Err(Error::BadEdge(usize::MAX));
        }
        // edges before row u: Σ_{i<u} (m−1−i)
        Ok(u * (2 * self.m - u - 1) / 2 + (v - u - 1))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::WrongLength { got: len, expected: self.n() });
        }
        Ok(())
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(k: usize) -> Self {
        UnionFind((0..k).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// False if `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// 1 iff the edges present in `x` form a spanning tree of `K_m`.
pub fn density(m: usize, x: &[bool]) -> Result<u8> {
    let idx = EdgeIndexing::new(m)?;
    idx.check_len(x.len())?;
    Ok(u8::from(is_spanning_tree(&idx, x)))
}

fn is_spanning_tree(idx: &EdgeIndexing, x: &[bool]) -> bool {
    if x.iter().filter(|&&b| b).count() != idx.m - 1 {
        return false;
    }
    let mut uf = UnionFind::new(idx.m);
    idx.pairs.iter().zip(x).filter(|(_, &b)| b).all(|(&(u, v), _)| uf.union(u, v))
}

/// Edge labels fixed present (`true`) or absent (`false`).
pub type PartialAssignment = BTreeMap<usize, bool>;

/// Number of spanning trees of `K_m` consistent with `partial`.
///
/// Forced-present edges must be acyclic; their components are contracted into a
/// multigraph over the free edges, whose Laplacian cofactor (first row and column
/// removed) is the count.
pub fn count_consistent_trees(m: usize, partial: &PartialAssignment) -> Result<BigInt> {
    let idx = EdgeIndexing::new(m)?;
    if let Some((&e, _)) = partial.range(idx.n()..).next() {
        return Err(Error::BadEdge(e));
    }
    let mut uf = UnionFind::new(m);
    for (&e, _) in partial.iter().filter(|(_, &present)| present) {
        let (u, v) = idx.pairs[e];
        if !uf.union(u, v) {
            return Ok(BigInt::zero());
        }
    }
    let mut component = vec![usize::MAX; m];
    let mut k = 0;
    for v in 0..m {
        let r = uf.find(v);
        if component[r] == usize::MAX {
            component[r] = k;
            k += 1;
        }
        component[v] = component[r];
    }
    let mut lap = vec![vec![BigInt::zero(); k]; k];
    for (e, &(u, v)) in idx.pairs.iter().enumerate() {
        if partial.contains_key(&e) {
            continue;
        }
        let (cu, cv) = (component[u], component[v]);
        if cu == cv {
            continue;
        }
        lap[cu][cu] += 1;
        lap[cv][cv] += 1;
        lap[cu][cv] -= 1;
        lap[cv][cu] -= 1;
    }
    let minor: Vec<Vec<BigInt>> = lap.into_iter().skip(1).map(|row| row.into_iter().skip(1).collect()).collect();
    Ok(bareiss_determinant(&minor))
}

/// `m^{m−2}`, the number of spanning trees of `K_m` (1 for `m = 1`).
pub fn cayley(m: usize) -> Result<BigInt> {
    match m {
        0 => Err(Error::NoVertices),
        1 => Ok(BigInt::one()),
        _ => Ok(Pow::pow(BigInt::from(m), m - 2)),
    }
}

/// Probability under the uniform spanning-tree distribution that `partial` holds.
pub fn marginal(m: usize, partial: &PartialAssignment) -> Result<Rational> {
    Ok(Rational::new(count_consistent_trees(m, partial)?, cayley(m)?))
}

/// Uniform spanning tree of `K_m` by the random walk that moves to a uniformly
/// chosen vertex (possibly the current one) and records first-entry edges.
pub fn sample_tree<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Vec<bool>> {
    let idx = EdgeIndexing::new(m)?;
    let mut x = vec![false; idx.n()];
    let mut visited = vec![false; m];
    let mut v = rng.gen_range(0..m);
    visited[v] = true;
    let mut seen = 1;
    while seen < m {
        let u = rng.gen_range(0..m);
        if !visited[u] {
            visited[u] = true;
            seen += 1;
            x[idx.label(v, u)?] = true;
        }
        v = u;
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    #[serde(rename = "r")]
    Red,
    #[serde(rename = "b")]
    Blue,
}

/// One color per edge label.
pub type Coloring = Vec<Color>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TriangleCounts {
    pub total: u64,
    pub monochromatic: u64,
    pub dichromatic: u64,
}

/// Classifies all `C(m,3)` triangles of the colored `K_m`.
pub fn count_dichromatic_triangles(m: usize, coloring: &[Color]) -> Result<TriangleCounts> {
    let idx = EdgeIndexing::new(m)?;
    idx.check_len(coloring.len())?;
    let mut counts = TriangleCounts { total: 0, monochromatic: 0, dichromatic: 0 };
    for [a, b, c] in triangles(&idx) {
        counts.total += 1;
        if coloring[a] == coloring[b] && coloring[b] == coloring[c] {
            counts.monochromatic += 1;
        } else {
            counts.dichromatic += 1;
        }
    }
    Ok(counts)
}

/// Edge-label triples `[uv, uw, vw]` for all `u < v < w`.
fn triangles(idx: &EdgeIndexing) -> impl Iterator<Item = [usize; 3]> + '_ {
    let m = idx.m;
    (0..m).flat_map(move |u| {
        (u + 1..m).flat_map(move |v| {
            (v + 1..m).map(move |w| {
                [idx.label(u, v).unwrap(), idx.label(u, w).unwrap(), idx.label(v, w).unwrap()]
            })
        })
    })
}

/// Number of triangles in the graph on `m` vertices whose edges are those set in `x`.
pub fn count_triangles(m: usize, x: &[bool]) -> Result<u64> {
    let idx = EdgeIndexing::new(m)?;
    idx.check_len(x.len())?;
    Ok(triangles(&idx).filter(|t| t.iter().all(|&e| x[e])).count() as u64)
}

/// `(√(8e+1) − 3)e/6`, the maximum triangle count of a graph with `e` edges.
pub fn fisher_bound(e: u64) -> f64 {
    let e = e as f64;
    ((8.0 * e + 1.0).sqrt() - 3.0) * e / 6.0
}

/// The same bound as an exact rational when `8e+1` is a perfect square.
pub fn fisher_bound_exact(e: u64) -> Option<Rational> {
    let d = 8 * u128::from(e) + 1;
    let r = d.isqrt();
    (r * r == d).then(|| {
        Rational::new(BigInt::from((r as i128 - 3) * i128::from(e)), BigInt::from(6))
    })
}

/// Exact test of `t ≤ (√(8e+1) − 3)e/6`, i.e. `(6t + 3e)² ≤ (8e+1)e²`.
pub fn fisher_holds(t: u64, e: u64) -> bool {
    let (t, e) = (BigInt::from(t), BigInt::from(e));
    let lhs: BigInt = Pow::pow(&t * 6 + &e * 3, 2u32);
    lhs <= (&e * 8 + 1) * &e * &e
}

/// `(1 − C/m³)^{C/(6m²)}`, the bound on the fraction of spanning trees obeying `C` constraints.
pub fn fraction_bound(m: usize, c: u64) -> f64 {
    let (m, c) = (m as f64, c as f64);
    (1.0 - c / m.powi(3)).powf(c / (6.0 * m * m))
}

/// A dichromatic triangle split into its same-colored pair `a, b` and odd edge `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintTriangle {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub pair_color: Color,
}

fn constraint_triangle(idx: &EdgeIndexing, coloring: &[Color], edges: [usize; 3]) -> Result<ConstraintTriangle> {
    let mut vertices = Vec::with_capacity(6);
    for &e in &edges {
        let (u, v) = idx.pair(e)?;
        vertices.extend([u, v]);
    }
    vertices.sort_unstable();
    vertices.dedup();
    let [x, y, z] = edges;
    if vertices.len() != 3 || x == y || y == z || x == z {
        return Err(Error::NotDichromatic(edges));
    }
    let col = edges.map(|e| coloring[e]);
    let odd = match (col[0] == col[1], col[1] == col[2], col[0] == col[2]) {
        (true, false, _) => 2,
        (false, true, _) => 0,
        (false, false, true) => 1,
        _ => return Err(Error::NotDichromatic(edges)),
    };
    let pair: Vec<usize> = (0..3).filter(|&i| i != odd).map(|i| edges[i]).collect();
    Ok(ConstraintTriangle { a: pair[0], b: pair[1], c: edges[odd], pair_color: col[(odd + 1) % 3] })
}

/// All constraint triangles of the coloring in triangle order.
pub fn constraint_triangles(m: usize, coloring: &[Color]) -> Result<Vec<ConstraintTriangle>> {
    let idx = EdgeIndexing::new(m)?;
    idx.check_len(coloring.len())?;
    triangles(&idx)
        .filter(|t| !(coloring[t[0]] == coloring[t[1]] && coloring[t[1]] == coloring[t[2]]))
        .map(|t| constraint_triangle(&idx, coloring, t))
        .collect()
}

/// Which of the two zero patterns a term `g(y)h(z)` obeys on a constraint triangle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DichotomyOutcome {
    pub triangle: ConstraintTriangle,
    /// `g h = 0` whenever both `a` and `b` are present.
    pub not_both_holds: bool,
    /// `g h = 0` whenever `c` is present.
    pub not_c_holds: bool,
    /// If neither holds: `x′` containing `a, b` and `x″` containing `c`, both with `g h > 0`.
    pub counterexample: Option<(Vec<bool>, Vec<bool>)>,
}

/// Exhaustively decides both branches for a term whose `g` is tabulated over the red
/// edges and `h` over the blue edges (each side in increasing label order, bit `i`
/// of the table index is the `i`-th edge of that side).
pub fn dichotomy_check(
    m: usize,
    coloring: &[Color],
    g: &[Rational],
    h: &[Rational],
    edges: [usize; 3],
) -> Result<DichotomyOutcome> {
    let idx = EdgeIndexing::new(m)?;
    idx.check_len(coloring.len())?;
    let red: Vec<usize> = (0..idx.n()).filter(|&e| coloring[e] == Color::Red).collect();
    let blue: Vec<usize> = (0..idx.n()).filter(|&e| coloring[e] == Color::Blue).collect();
    for (side, table) in [(&red, g), (&blue, h)] {
        if side.len() > MAX_TABLE_EDGES {
            return Err(Error::TooLarge(format!("table over {} edges (limit {MAX_TABLE_EDGES})", side.len())));
        }
        if table.len() != 1 << side.len() {
            return Err(Error::WrongLength { got: table.len(), expected: 1 << side.len() });
        }
    }
    let triangle = constraint_triangle(&idx, coloring, edges)?;
    let bit = |side: &[usize], e: usize| 1usize << side.iter().position(|&x| x == e).unwrap();
    // orient so that `pair` is the table whose side holds a and b
    let (pair_side, pair_table, odd_side, odd_table) =
        if triangle.pair_color == Color::Red { (&red, g, &blue, h) } else { (&blue, h, &red, g) };
    let ab = bit(pair_side, triangle.a) | bit(pair_side, triangle.b);
    let c = bit(odd_side, triangle.c);
    let positive = |t: &[Rational], mask: usize| (0..t.len()).find(|&i| i & mask == mask && t[i].is_positive());
    let pair_ab = positive(pair_table, ab);
    let pair_any = positive(pair_table, 0);
    let odd_c = positive(odd_table, c);
    let odd_any = positive(odd_table, 0);
    let not_both_holds = pair_ab.is_none() || odd_any.is_none();
    let not_c_holds = pair_any.is_none() || odd_c.is_none();
    let counterexample = match (pair_ab, odd_any, pair_any, odd_c) {
        (Some(p1), Some(o1), Some(p2), Some(o2)) if !not_both_holds && !not_c_holds => {
            let assemble = |p: usize, o: usize| {
                let mut x = vec![false; idx.n()];
                for (i, &e) in pair_side.iter().enumerate() {
                    x[e] = p >> i & 1 == 1;
                }
                for (i, &e) in odd_side.iter().enumerate() {
                    x[e] = o >> i & 1 == 1;
                }
                x
            };
            Some((assemble(p1, o1), assemble(p2, o2)))
        }
        _ => None,
    };
    Ok(DichotomyOutcome { triangle, not_both_holds, not_c_holds, counterexample })
}

/// A restriction every spanning tree with `g h > 0` must obey.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Constraint {
    /// Not both edges present.
    NotBoth { a: usize, b: usize },
    /// Edge absent.
    Not { c: usize },
}

impl Constraint {
    pub fn obeyed_by(&self, x: &[bool]) -> bool {
        match *self {
            Constraint::NotBoth { a, b } => !(x[a] && x[b]),
            Constraint::Not { c } => !x[c],
        }
    }
}

/// Which constraint form to take from each triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    NotBoth,
    NotC,
}

pub fn derive_constraints(m: usize, coloring: &[Color], strategy: Strategy) -> Result<Vec<Constraint>> {
    Ok(constraint_triangles(m, coloring)?
        .into_iter()
        .map(|t| match strategy {
            Strategy::NotBoth => Constraint::NotBoth { a: t.a, b: t.b },
            Strategy::NotC => Constraint::Not { c: t.c },
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractionReport {
    pub m: usize,
    pub constraints: usize,
    pub samples: usize,
    pub obeying: usize,
    pub fraction: f64,
    /// `(1 − C/m³)^{C/(6m²)}` with `C` the number of constraints.
    pub bound: f64,
}

/// Fraction of sampled uniform spanning trees obeying every constraint.
pub fn constraint_fraction<R: Rng + ?Sized>(
    m: usize,
    constraints: &[Constraint],
    samples: usize,
    rng: &mut R,
) -> Result<FractionReport> {
    let n = EdgeIndexing::new(m)?.n();
    for c in constraints {
        let e = match *c {
            Constraint::NotBoth { a, b } => a.max(b),
            Constraint::Not { c } => c,
        };
        if e >= n {
            return Err(Error::BadEdge(e));
        }
    }
    let mut obeying = 0;
    for _ in 0..samples {
        let x = sample_tree(m, rng)?;
        if constraints.iter().all(|c| c.obeyed_by(&x)) {
            obeying += 1;
        }
    }
    Ok(FractionReport {
        m,
        constraints: constraints.len(),
        samples,
        obeying,
        fraction: if samples == 0 { 1.0 } else { obeying as f64 / samples as f64 },
        bound: fraction_bound(m, constraints.len() as u64),
    })
}

/// Derives one constraint per dichromatic triangle under `strategy` and runs [`constraint_fraction`].
pub fn constraint_fraction_experiment<R: Rng + ?Sized>(
    m: usize,
    coloring: &[Color],
    strategy: Strategy,
    samples: usize,
    rng: &mut R,
) -> Result<FractionReport> {
    let constraints = derive_constraints(m, coloring, strategy)?;
    constraint_fraction(m, &constraints, samples, rng)
}
