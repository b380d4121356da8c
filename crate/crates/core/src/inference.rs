//! Marginal inference, weight normalization and ancestral sampling on D&C SPNs.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;

use crate::circuit::{Circuit, LeafFunction, Node, NodeKind};
use crate::rational::{self, Rational};
use crate::structure::{is_dc, prune_degenerate};
use crate::{Error, Result, VarId};

/// Integrate some variables over subsets of their domains and fix the rest.
///
/// The keys of `integrate_over` and `fixed` must partition the circuit's root
/// dependency-scope.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarginalQuery {
    pub integrate_over: BTreeMap<VarId, Vec<Rational>>,
    pub fixed: BTreeMap<VarId, Rational>,
}

impl MarginalQuery {
    /// Integrates every scope variable over its full domain.
    pub fn full(circuit: &Circuit) -> Self {
        let integrate_over = circuit
            .root_dependency_scope()
            .into_iter()
            .map(|v| (v, circuit.variables()[v].domain.clone()))
            .collect();
        MarginalQuery { integrate_over, fixed: BTreeMap::new() }
    }

    /// Moves fixed variables into the integrated set, i.e. integrating the result of
    /// `self` further over `outer`.
    pub fn compose(&self, outer: &BTreeMap<VarId, Vec<Rational>>) -> Result<MarginalQuery> {
        let mut q = self.clone();
        for (v, s) in outer {
            if q.fixed.remove(v).is_none() {
                return Err(Error::BadQuery(format!("variable {v} is not fixed in the inner query")));
            }
            q.integrate_over.insert(*v, s.clone());
        }
        Ok(q)
    }

    /// Leaf values of the substituted circuit: integrated leaves carry `Σ_{v∈S_i} f(v)`.
    pub fn leaf_values(&self, circuit: &Circuit) -> Result<Vec<Rational>> {
        let scope = circuit.root_dependency_scope();
        let mut seen = BTreeSet::new();
        let mut masks: Vec<Option<Vec<bool>>> = vec![None; circuit.variables().len()];
        for (&v, subset) in &self.integrate_over {
            let spec = circuit.variables().get(v).ok_or(Error::UnknownVariable(v))?;
            if subset.is_empty() {
                return Err(Error::BadQuery(format!("empty subset for variable {v}")));
            }
            let mut mask = vec![false; spec.domain.len()];
            for value in subset {
                let i = spec
                    .index_of(value)
                    .ok_or_else(|| Error::ValueOutsideDomain { var: v, value: rational::format(value) })?;
                if mask[i] {
                    return Err(Error::BadQuery(format!("repeated value in subset for variable {v}")));
                }
                mask[i] = true;
            }
            masks[v] = Some(mask);
            seen.insert(v);
        }
        for (&v, value) in &self.fixed {
            let spec = circuit.variables().get(v).ok_or(Error::UnknownVariable(v))?;
            let i = spec
                .index_of(value)
                .ok_or_else(|| Error::ValueOutsideDomain { var: v, value: rational::format(value) })?;
            if !seen.insert(v) {
                return Err(Error::BadQuery(format!("variable {v} is both integrated and fixed")));
            }
            let mut mask = vec![false; spec.domain.len()];
            mask[i] = true;
            masks[v] = Some(mask);
        }
        if seen != scope {
            return Err(Error::BadQuery(format!(
                "query covers variables {seen:?} but the dependency-scope is {scope:?}"
            )));
        }
        Ok(circuit
            .leaf_functions()
            .iter()
            .map(|f| masks[f.variable].as_ref().map_or_else(Rational::zero, |m| f.integral(m)))
            .collect())
    }
}

/// Decomposable and complete after removing degenerate parts (a zero circuit counts).
pub fn is_strongly_valid_spn(circuit: &Circuit) -> Result<bool> {
    if circuit.is_extended() {
        return Ok(false);
    }
    if is_dc(circuit)? {
        return Ok(true);
    }
    match prune_degenerate(circuit) {
        Ok(p) => is_dc(&p),
        Err(Error::ZeroCircuit) => Ok(true),
        Err(e) => Err(e),
    }
}

/// Exact marginal by one bottom-up evaluation with integrated leaves.
///
/// Without `force` the circuit must be (after pruning) decomposable and complete;
/// with it the substituted evaluation is returned regardless of its meaning.
pub fn marginalize(circuit: &Circuit, query: &MarginalQuery, force: bool) -> Result<Rational> {
    if !force && !is_strongly_valid_spn(circuit)? {
        return Err(Error::InvalidSpn);
    }
    Ok(circuit.evaluate_leaves(&query.leaf_values(circuit)?))
}

/// `Z`, the integral of the output over the whole domain.
pub fn partition_function(circuit: &Circuit) -> Result<Rational> {
    let z = marginalize(circuit, &MarginalQuery::full(circuit), false)?;
    if z.is_zero() {
        return Err(Error::ZeroPartition);
    }
    Ok(z)
}

/// A D&C circuit with its cached partition function.
#[derive(Clone, Debug)]
pub struct DistributionHandle {
    circuit: Circuit,
    z: Rational,
}

impl DistributionHandle {
    pub fn new(circuit: Circuit) -> Result<Self> {
        let z = partition_function(&circuit)?;
        Ok(DistributionHandle { circuit, z })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn partition_function(&self) -> &Rational {
        &self.z
    }

    /// `p(x) = q(f(x)) / Z` for `x` given as domain positions.
    pub fn density_indexed(&self, value_index: &[usize]) -> Rational {
        self.circuit.evaluate_indexed(value_index) / &self.z
    }

    pub fn marginal(&self, query: &MarginalQuery) -> Result<Rational> {
        Ok(marginalize(&self.circuit, query, false)? / &self.z)
    }
}

/// Sum weights sum to 1 at every sum node, leaf tables sum to 1 and constants are 1.
pub fn is_weight_normalized(circuit: &Circuit) -> bool {
    let one = Rational::one();
    let leaves_ok = circuit.leaf_functions().iter().all(|f| f.total() == one);
    leaves_ok
        && circuit.nodes().iter().all(|n| match &n.kind {
            NodeKind::Sum(ch) => ch.iter().fold(Rational::zero(), |a, (_, w)| a + w) == one,
            NodeKind::Constant(c) => *c == one,
            _ => true,
        })
}

/// Rewrites weights so every sub-circuit integrates to 1, keeping the structure.
///
/// Bottom-up, each node's normalizer is `Z_leaf = Σ table`, `Z_const = c`,
/// `Z_prod = ∏ Z_child` and `Z_sum = Σ w Z_child`. Leaf tables are divided by their
/// sums, constants become 1 and each sum edge weight becomes `w Z_child / Z_u`. The
/// root then integrates to 1 and the normalized density is unchanged.
pub fn normalize_weights(circuit: &Circuit) -> Result<Circuit> {
    if !is_dc(circuit)? {
        return Err(Error::InvalidSpn);
    }
    let (variables, leaf_functions, nodes, root, extended) = circuit.clone().into_parts();
    let leaf_z: Vec<Rational> = leaf_functions.iter().map(LeafFunction::total).collect();
    let mut z: Vec<Rational> = Vec::with_capacity(nodes.len());
    let mut out = Vec::with_capacity(nodes.len());
    for node in nodes {
        let (zu, kind) = match node.kind {
            NodeKind::Leaf(l) => (leaf_z[l].clone(), NodeKind::Leaf(l)),
            NodeKind::Constant(c) => (c, NodeKind::Constant(Rational::one())),
            NodeKind::Product(ch) => (ch.iter().fold(Rational::one(), |a, c| a * &z[*c]), NodeKind::Product(ch)),
            NodeKind::Sum(ch) => {
                let zu = ch.iter().fold(Rational::zero(), |a, (c, w)| a + w * &z[*c]);
                if zu.is_zero() {
                    return Err(Error::ZeroSumNode(node.id));
                }
                let ch = ch.into_iter().map(|(c, w)| (c, w * &z[c] / &zu)).collect();
                (zu, NodeKind::Sum(ch))
            }
        };
        if zu.is_zero() && !matches!(kind, NodeKind::Product(_)) {
            return Err(Error::ZeroSumNode(node.id));
        }
        z.push(zu);
        out.push(Node { id: node.id, kind });
    }
    if z[root].is_zero() {
        return Err(Error::ZeroPartition);
    }
    let leaf_functions = leaf_functions
        .into_iter()
        .zip(&leaf_z)
        .map(|(mut f, zf)| {
            if !zf.is_zero() {
                f.table = f.table.iter().map(|v| v / zf).collect();
            }
            f
        })
        .collect();
    Circuit::from_parts(variables, leaf_functions, out, root, extended)
}

/// Top-down ancestral sampler over a weight-normalized D&C circuit.
#[derive(Clone, Debug)]
pub struct Sampler {
    circuit: Circuit,
    sum_choice: Vec<Option<WeightedIndex<f64>>>,
    leaf_choice: Vec<Option<WeightedIndex<f64>>>,
}

impl Sampler {
    /// Requires a weight-normalized D&C circuit whose scope covers every declared variable.
    pub fn new(circuit: Circuit) -> Result<Self> {
        if !is_dc(&circuit)? {
            return Err(Error::InvalidSpn);
        }
        if !is_weight_normalized(&circuit) {
            return Err(Error::NotNormalized);
        }
        if circuit.root_dependency_scope().len() != circuit.variables().len() {
            return Err(Error::IncompleteScope);
        }
        let to_index = |ws: Vec<f64>| WeightedIndex::new(ws).map_err(|_| Error::NotNormalized);
        let mut sum_choice = Vec::with_capacity(circuit.size());
        for node in circuit.nodes() {
            sum_choice.push(match &node.kind {
                NodeKind::Sum(ch) => Some(to_index(ch.iter().map(|(_, w)| rational::to_f64(w)).collect())?),
                _ => None,
            });
        }
        let leaf_choice = circuit
            .leaf_functions()
            .iter()
            .map(|f| to_index(f.table.iter().map(rational::to_f64).collect()).map(Some))
            .collect::<Result<_>>()?;
        Ok(Sampler { circuit, sum_choice, leaf_choice })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// One joint sample as domain positions, one per variable.
    pub fn sample_indexed<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let mut assigned: Vec<Option<usize>> = vec![None; self.circuit.variables().len()];
        let mut stack = vec![self.circuit.root()];
        while let Some(id) = stack.pop() {
            match &self.circuit.node(id).kind {
                NodeKind::Constant(_) => {}
                NodeKind::Leaf(l) => {
                    let var = self.circuit.leaf_functions()[*l].variable;
                    if assigned[var].is_some() {
                        return Err(Error::DoubleAssignment(var));
                    }
                    let dist = self.leaf_choice[*l].as_ref().expect("leaf distribution");
                    assigned[var] = Some(dist.sample(rng));
                }
                NodeKind::Product(ch) => stack.extend(ch.iter().rev()),
                NodeKind::Sum(ch) => {
                    let dist = self.sum_choice[id].as_ref().expect("sum distribution");
                    stack.push(ch[dist.sample(rng)].0);
                }
            }
        }
        assigned.into_iter().collect::<Option<Vec<_>>>().ok_or(Error::IncompleteScope)
    }

    /// One joint sample as domain values.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Rational>> {
        let idx = self.sample_indexed(rng)?;
        Ok(idx
            .iter()
            .enumerate()
            .map(|(v, &i)| self.circuit.variables()[v].domain[i].clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::compilers::build_equal;
    use crate::rational::{frac, int};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn product_circuit() -> Circuit {
        let mut b = CircuitBuilder::new();
        let x1 = b.add_binary_variable();
        let x2 = b.add_binary_variable();
        let f11 = b.add_leaf_function(x1, vec![int(1), int(2)]).unwrap();
        let f21 = b.add_leaf_function(x2, vec![int(1), int(3)]).unwrap();
        let (l1, l2) = (b.leaf(f11), b.leaf(f21));
        let p = b.product(vec![l1, l2]);
        b.build(p).unwrap()
    }

    #[test]
    fn marginal_of_product() {
        let c = product_circuit();
        let q = MarginalQuery {
            integrate_over: BTreeMap::from([(1, vec![int(0), int(1)])]),
            fixed: BTreeMap::from([(0, int(1))]),
        };
        assert_eq!(marginalize(&c, &q, false).unwrap(), int(8));
        let point = MarginalQuery { integrate_over: BTreeMap::new(), fixed: BTreeMap::from([(0, int(1)), (1, int(0))]) };
        assert_eq!(marginalize(&c, &point, false).unwrap(), int(2));
        assert_eq!(partition_function(&c).unwrap(), int(12));
    }

    #[test]
    fn malformed_queries() {
        let c = product_circuit();
        let missing = MarginalQuery { integrate_over: BTreeMap::new(), fixed: BTreeMap::from([(0, int(1))]) };
        assert!(matches!(marginalize(&c, &missing, false), Err(Error::BadQuery(_))));
        let both = MarginalQuery {
            integrate_over: BTreeMap::from([(0, vec![int(0)]), (1, vec![int(1)])]),
            fixed: BTreeMap::from([(0, int(1))]),
        };
        assert!(matches!(marginalize(&c, &both, false), Err(Error::BadQuery(_))));
        let empty = MarginalQuery {
            integrate_over: BTreeMap::from([(0, vec![]), (1, vec![int(1)])]),
            fixed: BTreeMap::new(),
        };
        assert!(matches!(marginalize(&c, &empty, false), Err(Error::BadQuery(_))));
    }

    #[test]
    fn invalid_spn_needs_force() {
        let mut b = CircuitBuilder::new();
        let x1 = b.add_binary_variable();
        let x2 = b.add_binary_variable();
        let f = b.add_leaf_function(x1, vec![int(1), int(2)]).unwrap();
        let g = b.add_leaf_function(x2, vec![int(1), int(1)]).unwrap();
        let (lf, lg) = (b.leaf(f), b.leaf(g));
        let s = b.plain_sum(vec![lf, lg]);
        let c = b.build(s).unwrap();
        let q = MarginalQuery::full(&c);
        assert!(matches!(marginalize(&c, &q, false), Err(Error::InvalidSpn)));
        // the substituted value 3 + 2 is not the true integral 2*3 + 2*2
        assert_eq!(marginalize(&c, &q, true).unwrap(), int(5));
    }

    #[test]
    fn equal_partition_function_and_normalization() {
        let c = build_equal(4).unwrap();
        assert_eq!(partition_function(&c).unwrap(), int(4));
        let n = normalize_weights(&c).unwrap();
        assert!(is_weight_normalized(&n));
        assert_eq!(partition_function(&n).unwrap(), int(1));
        let h = DistributionHandle::new(c.clone()).unwrap();
        for bits in 0..16usize {
            let x: Vec<usize> = (0..4).map(|i| bits >> i & 1).collect();
            assert_eq!(n.evaluate_indexed(&x), h.density_indexed(&x));
        }
    }

    #[test]
    fn normalization_rescales_nested_sums() {
        // root = 1 * s, s = 2 a + 3 b with normalized leaves a, b over x
        let mut b = CircuitBuilder::new();
        let x = b.add_binary_variable();
        let fa = b.add_leaf_function(x, vec![frac(1, 2), frac(1, 2)]).unwrap();
        let fb = b.add_leaf_function(x, vec![int(1), int(0)]).unwrap();
        let (la, lb) = (b.leaf(fa), b.leaf(fb));
        let s = b.sum(vec![(la, int(2)), (lb, int(3))]);
        let root = b.sum(vec![(s, int(1))]);
        let c = b.build(root).unwrap();
        let n = normalize_weights(&c).unwrap();
        assert_eq!(n.node(2).kind, NodeKind::Sum(vec![(0, frac(2, 5)), (1, frac(3, 5))]));
        assert_eq!(n.node(3).kind, NodeKind::Sum(vec![(2, int(1))]));
        assert_eq!(normalize_weights(&n).unwrap(), n);
    }

    #[test]
    fn zero_partition_is_reported() {
        let mut b = CircuitBuilder::new();
        let x = b.add_binary_variable();
        let f = b.add_leaf_function(x, vec![int(0), int(0)]).unwrap();
        let l = b.leaf(f);
        let c = b.build(l).unwrap();
        assert!(matches!(partition_function(&c), Err(Error::ZeroPartition)));
        assert!(normalize_weights(&c).is_err());
    }

    #[test]
    fn point_mass_sampler_is_deterministic() {
        let mut b = CircuitBuilder::new();
        let x1 = b.add_binary_variable();
        let x2 = b.add_variable(vec![int(5), int(6), int(7)]).unwrap();
        let f1 = b.add_leaf_function(x1, vec![int(0), int(1)]).unwrap();
        let f2 = b.add_leaf_function(x2, vec![int(0), int(0), int(1)]).unwrap();
        let (l1, l2) = (b.leaf(f1), b.leaf(f2));
        let s = b.plain_sum(vec![l1]);
        let p = b.product(vec![s, l2]);
        let c = b.build(p).unwrap();
        let sampler = Sampler::new(c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(sampler.sample(&mut rng).unwrap(), vec![int(1), int(7)]);
        }
    }

    #[test]
    fn sampler_requires_normalization_and_is_seeded() {
        let c = build_equal(4).unwrap();
        assert!(matches!(Sampler::new(c.clone()), Err(Error::NotNormalized)));
        let s = Sampler::new(normalize_weights(&c).unwrap()).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| s.sample_indexed(&mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        for x in draw(1) {
            assert_eq!(x[0..2], x[2..4]);
        }
    }
}
