//! Reduction from CNF unsatisfiability to validity of extended SPNs.

use crate::circuit::{Circuit, CircuitBuilder};
use crate::rational::int;
use crate::{Error, Result};

/// Builds the extended circuit whose validity is equivalent to `clauses` being unsatisfiable.
///
/// Clauses use DIMACS literals (`k` for `x_k`, `-k` for its negation, 1-based).
/// Each variable gets the leaf functions `f_{i,1}(x) = x` and `f_{i,2}(x) = 1 - x`;
/// clauses become unit-weight sums of literal leaves and the conjunction a product.
/// The output is multiplied by a guard `∏_i (1 - f_{i,1} f_{i,2})`, which is 1 on
/// every point evaluation and 0 as soon as some variable is integrated over both values.
pub fn cnf_to_extended_spn(num_vars: usize, clauses: &[Vec<i64>]) -> Result<Circuit> {
    if clauses.is_empty() {
        return Err(Error::EmptyCnf);
    }
    let mut b = CircuitBuilder::new().extended();
    let mut pos = Vec::with_capacity(num_vars);
    let mut neg = Vec::with_capacity(num_vars);
    for _ in 0..num_vars {
        let x = b.add_binary_variable();
        let f1 = b.add_leaf_function(x, vec![int(0), int(1)])?;
        let f2 = b.add_leaf_function(x, vec![int(1), int(0)])?;
        pos.push(b.leaf(f1));
        neg.push(b.leaf(f2));
    }
    let mut clause_nodes = Vec::with_capacity(clauses.len());
    for clause in clauses {
        let mut lits = Vec::with_capacity(clause.len());
        for &lit in clause {
            let var = lit.unsigned_abs() as usize;
            if lit == 0 || var > num_vars {
                return Err(Error::Malformed(format!("literal {lit} outside 1..={num_vars}")));
            }
            lits.push(if lit > 0 { pos[var - 1] } else { neg[var - 1] });
        }
        clause_nodes.push(if lits.is_empty() { b.constant(int(0)) } else { b.plain_sum(lits) });
    }
    let formula = b.product(clause_nodes);
    let mut root_factors = vec![formula];
    if num_vars > 0 {
        let one = b.constant(int(1));
        let mut guards = Vec::with_capacity(num_vars);
        for i in 0..num_vars {
            let both = b.product(vec![pos[i], neg[i]]);
            guards.push(b.sum(vec![(one, int(1)), (both, int(-1))]));
        }
        root_factors.push(b.product(guards));
    }
    let root = b.product(root_factors);
    b.build(root)
}
