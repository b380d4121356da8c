//! Depth-3 lower-bound machinery: communication matrices, their exact rank, the
//! identity-perturbation rank bound, and the balanced decomposition of a D&C SPN
//! into at most `s²` products of functions on complementary variable sets.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::circuit::{Circuit, Node, NodeKind};
use crate::linalg::{exact_rank, RationalMatrix};
use crate::rational::{self, Rational};
use crate::structure::{check_complete, check_decomposable, prune_degenerate, prune_removing};
use crate::{Error, NodeId, Result, VarId};

/// Largest side of a partition accepted by [`comm_matrix`].
pub const MAX_SIDE: usize = 12;
/// Largest table materialized by [`decompose`].
pub const MAX_TABLE: usize = 1 << 14;

/// A partition `(A, B)` of the variables `0..n`, both sides sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub a: Vec<VarId>,
    pub b: Vec<VarId>,
}

impl Partition {
    /// `A` as given, `B` its complement in `0..n`.
    pub fn new(n: usize, a: &[VarId]) -> Result<Self> {
        let set: BTreeSet<VarId> = a.iter().copied().collect();
        if set.len() != a.len() {
            return Err(Error::BadPartition("repeated variable in A".into()));
        }
        if let Some(&v) = set.iter().find(|&&v| v >= n) {
            return Err(Error::BadPartition(format!("variable {v} is not in 0..{n}")));
        }
        Ok(Partition { a: set.iter().copied().collect(), b: (0..n).filter(|v| !set.contains(v)).collect() })
    }

    /// Checks that `a` and `b` are disjoint and cover `0..n`.
    pub fn from_sides(n: usize, a: &[VarId], b: &[VarId]) -> Result<Self> {
        let p = Self::new(n, a)?;
        let mut bs: Vec<VarId> = b.to_vec();
        bs.sort_unstable();
        if bs != p.b {
            return Err(Error::BadPartition("sides must be disjoint and cover every variable".into()));
        }
        Ok(p)
    }

    /// `H₁ = {0..n/2}`, `H₂` the rest.
    pub fn first_half(n: usize) -> Self {
        Partition { a: (0..n / 2).collect(), b: (n / 2..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.a.len() + self.b.len()
    }
}

/// `M[r][c] = f(x)` where bit `i` of `r` is `x_{A[i]}` and bit `j` of `c` is `x_{B[j]}`.
pub fn comm_matrix<F: Fn(&[usize]) -> Rational>(f: F, partition: &Partition) -> Result<RationalMatrix> {
    let (a, b) = (&partition.a, &partition.b);
    if a.len() > MAX_SIDE || b.len() > MAX_SIDE {
        return Err(Error::TooLarge(format!("sides of {} and {} variables (limit {MAX_SIDE})", a.len(), b.len())));
    }
    let mut m = RationalMatrix::zeros(1 << a.len(), 1 << b.len());
    let mut x = vec![0usize; partition.n()];
    for r in 0..1usize << a.len() {
        for (i, &v) in a.iter().enumerate() {
            x[v] = r >> i & 1;
        }
        for c in 0..1usize << b.len() {
            for (j, &v) in b.iter().enumerate() {
                x[v] = c >> j & 1;
            }
            m.set(r, c, f(&x));
        }
    }
    Ok(m)
}

/// Communication matrix of a circuit over binary variables (bits are domain positions).
pub fn circuit_comm_matrix(circuit: &Circuit, partition: &Partition) -> Result<RationalMatrix> {
    if partition.n() != circuit.variables().len() {
        return Err(Error::BadPartition(format!(
            "partition covers {} variables, circuit has {}",
            partition.n(),
            circuit.variables().len()
        )));
    }
    if let Some(v) = circuit.variables().iter().find(|v| !v.is_binary()) {
        return Err(Error::NotBinary(v.id));
    }
    comm_matrix(|x| circuit.evaluate_indexed(x), partition)
}

/// `k/2 − Δ/2` with `Δ = Σ|D_ij|`, a lower bound on `rank(I + D)`.
pub fn perturbation_rank_bound(d: &RationalMatrix) -> Result<Rational> {
    if !d.is_square() {
        return Err(Error::NotSquare(d.rows(), d.cols()));
    }
    Ok((Rational::from_integer(d.rows().into()) - d.abs_sum()) / Rational::from_integer(2.into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerturbationAudit {
    pub bound: String,
    pub rank: usize,
    pub holds: bool,
}

/// Computes the bound and `rank(I + D)` exactly.
pub fn audit_perturbation(d: &RationalMatrix) -> Result<PerturbationAudit> {
    let bound = perturbation_rank_bound(d)?;
    let rank = exact_rank(&RationalMatrix::identity(d.rows()).add(d));
    Ok(PerturbationAudit {
        holds: bound <= Rational::from_integer(rank.into()),
        bound: rational::format(&bound),
        rank,
    })
}

/// Rank of the communication matrix, hence the minimum second-layer width of any
/// depth-3 D&C SPN computing the function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Depth3Report {
    pub partition: Partition,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub min_second_layer_width: usize,
}

pub fn depth3_report(matrix: &RationalMatrix, partition: &Partition) -> Depth3Report {
    let rank = exact_rank(matrix);
    Depth3Report {
        partition: partition.clone(),
        rows: matrix.rows(),
        cols: matrix.cols(),
        rank,
        min_second_layer_width: rank,
    }
}

/// One term `g(y) h(z)`; tables are indexed in mixed radix over the domain
/// positions of `y` (resp. `z`), first variable fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionTerm {
    pub y: Vec<VarId>,
    pub z: Vec<VarId>,
    pub g: Vec<Rational>,
    pub h: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub terms: Vec<DecompositionTerm>,
    pub source_size: usize,
    pub binarized_size: usize,
    pub domain_sizes: Vec<usize>,
}

fn table_index(vars: &[VarId], sizes: &[usize], x: &[usize]) -> usize {
    vars.iter().rev().fold(0, |acc, &v| acc * sizes[v] + x[v])
}

fn assignments(vars: &[VarId], sizes: &[usize], len: usize) -> Vec<Vec<usize>> {
    let count: usize = vars.iter().map(|&v| sizes[v]).product();
    (0..count)
        .map(|mut p| {
            let mut x = vec![0usize; len];
            for &v in vars {
                x[v] = p % sizes[v];
                p /= sizes[v];
            }
            x
        })
        .collect()
}

impl Decomposition {
    /// `Σ_i g_i(y_i) h_i(z_i)` at `x` given as domain positions.
    pub fn evaluate_indexed(&self, x: &[usize]) -> Rational {
        let s = &self.domain_sizes;
        self.terms.iter().fold(Rational::zero(), |acc, t| {
            acc + &t.g[table_index(&t.y, s, x)] * &t.h[table_index(&t.z, s, x)]
        })
    }

    /// Describes every violated structural invariant (count, balance, partition, sign).
    pub fn invariant_violations(&self) -> Vec<String> {
        let n = self.domain_sizes.len();
        let mut out = Vec::new();
        if self.terms.len() > self.source_size * self.source_size {
            out.push(format!("{} terms exceed s² = {}", self.terms.len(), self.source_size * self.source_size));
        }
        for (i, t) in self.terms.iter().enumerate() {
            for (name, side) in [("y", &t.y), ("z", &t.z)] {
                if 3 * side.len() < n || 3 * side.len() > 2 * n {
                    out.push(format!("term {i}: |{name}| = {} outside [n/3, 2n/3]", side.len()));
                }
            }
            let mut all: Vec<VarId> = t.y.iter().chain(&t.z).copied().collect();
            all.sort_unstable();
            if all != (0..n).collect::<Vec<_>>() {
                out.push(format!("term {i}: y and z do not partition the variables"));
            }
            if t.g.iter().chain(&t.h).any(Signed::is_negative) {
                out.push(format!("term {i}: negative table entry"));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let strs = |v: &[Rational]| v.iter().map(rational::format).collect::<Vec<_>>();
        serde_json::json!({
            "source_size": self.source_size,
            "binarized_size": self.binarized_size,
            "terms": self.terms.iter().map(|t| serde_json::json!({
                "y": t.y,
                "z": t.z,
                "g_table": strs(&t.g),
                "h_table": strs(&t.h),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Replaces every product of fan-in `ℓ ≥ 3` by a balanced binary tree of `ℓ − 1` products.
pub fn binarize_products(circuit: &Circuit) -> Result<Circuit> {
    fn build(nodes: &mut Vec<Node>, ch: &[NodeId]) -> NodeId {
        if ch.len() == 1 {
            return ch[0];
        }
        let (l, r) = ch.split_at(ch.len() / 2);
        let (l, r) = (build(nodes, l), build(nodes, r));
        nodes.push(Node { id: nodes.len(), kind: NodeKind::Product(vec![l, r]) });
        nodes.len() - 1
    }
    let (variables, leaf_functions, old, root, extended) = circuit.clone().into_parts();
    let mut nodes: Vec<Node> = Vec::with_capacity(old.len());
    let mut new_id = vec![0usize; old.len()];
    for node in old {
        let kind = match node.kind {
            NodeKind::Product(ch) if ch.len() >= 3 => {
                let ch: Vec<NodeId> = ch.iter().map(|c| new_id[*c]).collect();
                let (l, r) = ch.split_at(ch.len() / 2);
                let (l, r) = (build(&mut nodes, l), build(&mut nodes, r));
                NodeKind::Product(vec![l, r])
            }
            NodeKind::Product(ch) => NodeKind::Product(ch.into_iter().map(|c| new_id[c]).collect()),
            NodeKind::Sum(ch) => NodeKind::Sum(ch.into_iter().map(|(c, w)| (new_id[c], w)).collect()),
            other => other,
        };
        new_id[node.id] = nodes.len();
        nodes.push(Node { id: nodes.len(), kind });
    }
    Circuit::from_parts(variables, leaf_functions, nodes, new_id[root], extended)
}

fn is_balanced(size: usize, n: usize) -> bool {
    3 * size >= n && 3 * size <= 2 * n
}

/// Walks from the root, always into the child with the largest dependency-scope
/// (smallest id on ties), until the scope size lies in `[n/3, 2n/3]`.
fn balanced_node(circuit: &Circuit, ds: &[BTreeSet<VarId>], n: usize) -> Result<NodeId> {
    let mut u = circuit.root();
    while !is_balanced(ds[u].len(), n) {
        let mut best: Option<NodeId> = None;
        for c in circuit.node(u).kind.children() {
            match best {
                Some(b) if ds[b].len() > ds[c].len() || (ds[b].len() == ds[c].len() && b < c) => {}
                _ => best = Some(c),
            }
        }
        u = best.ok_or(Error::NoBalancedNode)?;
    }
    Ok(u)
}

/// Writes `q_Φ = Σ_i g_i h_i` with balanced, complementary scopes and `≤ s²` terms.
///
/// After binarizing products, repeatedly pick a balanced node `v` by the scope walk,
/// tabulate `g = q_v` over its scope `y` and `h = q_Φ[v↦1] − q_Φ[v↦0]` over the
/// complement `z` (the output is affine in `q_v` by set-multilinearity, so the
/// difference is the coefficient of `q_v`; `y` is held at its first values, on which
/// `h` does not depend), then replace `v` by zero and prune. Stops at the zero circuit.
pub fn decompose(circuit: &Circuit) -> Result<Decomposition> {
    let n = circuit.variables().len();
    let pre = |msg: String| Error::DecompositionPrecondition(msg);
    if circuit.is_extended() {
        return Err(Error::ExtendedRejected);
    }
    if n < 3 {
        return Err(pre(format!("needs at least 3 variables, found {n}")));
    }
    if !check_decomposable(circuit)?.holds || !check_complete(circuit)?.holds {
        return Err(pre("circuit is not decomposable and complete".into()));
    }
    if circuit.root_dependency_scope().len() != n {
        return Err(pre("root dependency-scope must contain every variable".into()));
    }
    let domain_sizes: Vec<usize> = circuit.variables().iter().map(|v| v.domain.len()).collect();
    let mut sorted = domain_sizes.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let widest: usize = sorted.iter().take(2 * n / 3).product();
    if widest > MAX_TABLE {
        return Err(pre(format!("tables over 2n/3 variables may need {widest} entries (limit {MAX_TABLE})")));
    }

    let binarized = binarize_products(circuit)?;
    let mut decomposition = Decomposition {
        terms: Vec::new(),
        source_size: circuit.size(),
        binarized_size: binarized.size(),
        domain_sizes: domain_sizes.clone(),
    };
    let mut current = match prune_degenerate(&binarized) {
        Ok(c) => c,
        Err(Error::ZeroCircuit) => return Ok(decomposition),
        Err(e) => return Err(e),
    };
    let one = Rational::one();
    let zero = Rational::zero();
    loop {
        let ds = current.dependency_scopes();
        let v = balanced_node(&current, &ds, n)?;
        let y: Vec<VarId> = ds[v].iter().copied().collect();
        let z: Vec<VarId> = (0..n).filter(|i| !ds[v].contains(i)).collect();
        let g = assignments(&y, &domain_sizes, n)
            .iter()
            .map(|x| current.evaluate_node_leaves(v, &current.leaf_values_at(x)))
            .collect();
        let root = current.root();
        let mut h = Vec::new();
        for x in assignments(&z, &domain_sizes, n) {
            let leaves = current.leaf_values_at(&x);
            let hi = current.node_values(&leaves, Some((v, &one))).swap_remove(root)
                - current.node_values(&leaves, Some((v, &zero))).swap_remove(root);
            if hi.is_negative() {
                return Err(Error::AuditMismatch(format!("negative coefficient {} for node {v}", rational::format(&hi))));
            }
            h.push(hi);
        }
        decomposition.terms.push(DecompositionTerm { y, z, g, h });
        current = match prune_removing(&current, Some(v)) {
            Ok(c) => c,
            Err(Error::ZeroCircuit) => break,
            Err(e) => return Err(e),
        };
    }
    Ok(decomposition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::compilers::{build_equal, equal_function};
    use crate::rational::{frac, int};

    fn bits(v: usize, n: usize) -> Vec<usize> {
        (0..n).map(|i| v >> i & 1).collect()
    }

    #[test]
    fn equal_matrix_is_identity() {
        let c = build_equal(8).unwrap();
        let p = Partition::first_half(8);
        let m = circuit_comm_matrix(&c, &p).unwrap();
        assert_eq!(m, RationalMatrix::identity(16));
        let r = depth3_report(&m, &p);
        assert_eq!((r.rank, r.min_second_layer_width), (16, 16));
    }

    #[test]
    fn constant_and_factorized_functions_have_rank_one() {
        let p = Partition::new(4, &[0, 2]).unwrap();
        assert_eq!(p.b, vec![1, 3]);
        let ones = comm_matrix(|_| int(1), &p).unwrap();
        assert_eq!(exact_rank(&ones), 1);
        let fact = comm_matrix(|x| x.iter().enumerate().fold(int(1), |a, (i, &b)| a * int((i + 1 + 2 * b) as i64)), &p).unwrap();
        assert_eq!(exact_rank(&fact), 1);
        let eq = comm_matrix(|x| int(equal_function(x) as i64), &Partition::first_half(4)).unwrap();
        assert_eq!(eq, RationalMatrix::identity(4));
    }

    #[test]
    fn partition_errors() {
        assert!(Partition::new(3, &[0, 0]).is_err());
        assert!(Partition::new(3, &[5]).is_err());
        assert!(Partition::from_sides(3, &[0], &[1]).is_err());
        assert!(Partition::from_sides(3, &[0], &[2, 1]).is_ok());
        assert!(matches!(comm_matrix(|_| int(0), &Partition::first_half(26)), Err(Error::TooLarge(_))));
    }

    #[test]
    fn perturbation_examples() {
        let zero = RationalMatrix::zeros(8, 8);
        assert_eq!(perturbation_rank_bound(&zero).unwrap(), int(4));
        assert_eq!(audit_perturbation(&zero).unwrap(), PerturbationAudit { bound: "4".into(), rank: 8, holds: true });
        let minus = RationalMatrix::identity(8).scale(&int(-1));
        assert_eq!(audit_perturbation(&minus).unwrap(), PerturbationAudit { bound: "0".into(), rank: 0, holds: true });
        assert!(matches!(perturbation_rank_bound(&RationalMatrix::zeros(2, 3)), Err(Error::NotSquare(2, 3))));
        let half = RationalMatrix::identity(3).scale(&frac(-1, 2));
        assert_eq!(perturbation_rank_bound(&half).unwrap(), frac(3, 4));
    }

    fn check_reconstruction(c: &Circuit, d: &Decomposition) {
        let n = c.variables().len();
        assert!(d.invariant_violations().is_empty(), "{:?}", d.invariant_violations());
        for v in 0..1usize << n {
            let x = bits(v, n);
            assert_eq!(d.evaluate_indexed(&x), c.evaluate_indexed(&x));
        }
    }

    #[test]
    fn equal_decomposition() {
        let c = build_equal(4).unwrap();
        let d = decompose(&c).unwrap();
        assert!(d.terms.iter().all(|t| t.y.len() == 2 && t.z.len() == 2));
        check_reconstruction(&c, &d);
    }

    #[test]
    fn three_leaf_product() {
        let mut b = CircuitBuilder::new();
        let mut leaves = Vec::new();
        for t in 0..3 {
            let x = b.add_binary_variable();
            let f = b.add_leaf_function(x, vec![int(1 + t), int(2)]).unwrap();
            leaves.push(b.leaf(f));
        }
        let p = b.product(leaves);
        let c = b.build(p).unwrap();
        let bin = binarize_products(&c).unwrap();
        assert_eq!(bin.size(), 5);
        let d = decompose(&c).unwrap();
        assert!((1..=2).contains(&d.terms.len()));
        for t in &d.terms {
            let mut sizes = [t.y.len(), t.z.len()];
            sizes.sort_unstable();
            assert_eq!(sizes, [1, 2]);
        }
        check_reconstruction(&c, &d);
    }

    #[test]
    fn decomposition_preconditions() {
        let mut b = CircuitBuilder::new();
        let x = b.add_binary_variable();
        let y = b.add_binary_variable();
        let f = b.add_leaf_function(x, vec![int(1), int(1)]).unwrap();
        let g = b.add_leaf_function(y, vec![int(1), int(1)]).unwrap();
        let (lf, lg) = (b.leaf(f), b.leaf(g));
        let p = b.product(vec![lf, lg]);
        let c = b.build(p).unwrap();
        assert!(matches!(decompose(&c), Err(Error::DecompositionPrecondition(_))));
    }
}
