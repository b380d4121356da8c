//! Brute-force check of the validity identity on small instances.
//!
//! A circuit is valid when, for every set `I` of variables, every choice of subsets
//! `S_i` of their domains and every value of the remaining variables, summing the
//! output over `S_I` equals one evaluation with each leaf of `x_i` (`i ∈ I`) replaced
//! by its sum over `S_i`. Fixing a variable to `v` is the same as integrating it
//! over `{v}`, so it suffices to range over one non-empty subset per variable.
//! Empty subsets make both sides zero and are skipped. The variables considered are
//! those in the root's dependency-scope.

use num_traits::Zero;
use serde::Serialize;

use crate::circuit::Circuit;
use crate::rational::{self, Rational};
use crate::{Error, Result, VarId};

pub const MAX_VARIABLES: usize = 4;
pub const MAX_DOMAIN: usize = 3;

/// A tuple of subsets on which the validity identity fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidityViolation {
    /// `(variable, S_i)`; singletons are fixed variables.
    pub subsets: Vec<(VarId, Vec<String>)>,
    /// Sum of the output over the Cartesian product.
    pub integral: String,
    /// One evaluation with integrated leaves.
    pub substituted: String,
}

/// Searches for a violation; `None` means the circuit is valid.
pub fn find_validity_violation(circuit: &Circuit) -> Result<Option<ValidityViolation>> {
    let vars: Vec<VarId> = circuit.root_dependency_scope().into_iter().collect();
    if vars.len() > MAX_VARIABLES {
        return Err(Error::TooLarge(format!(
            "{} variables in scope (limit {MAX_VARIABLES})",
            vars.len()
        )));
    }
    let sizes: Vec<usize> = vars.iter().map(|&v| circuit.variables()[v].domain.len()).collect();
    if let Some(pos) = sizes.iter().position(|&s| s > MAX_DOMAIN) {
        return Err(Error::TooLarge(format!(
            "variable {} has {} domain values (limit {MAX_DOMAIN})",
            vars[pos], sizes[pos]
        )));
    }

    // Output at every point of the scope grid, mixed radix with vars[0] fastest.
    let points: usize = sizes.iter().product();
    let mut index = vec![0usize; circuit.variables().len()];
    let mut value_at = Vec::with_capacity(points);
    for p in 0..points {
        let mut rest = p;
        for (k, &v) in vars.iter().enumerate() {
            index[v] = rest % sizes[k];
            rest /= sizes[k];
        }
        value_at.push(circuit.evaluate_indexed(&index));
    }

    let masks: Vec<u32> = sizes.iter().map(|&s| (1u32 << s) - 1).collect();
    let mut choice: Vec<u32> = vec![1; vars.len()];
    loop {
        let singletons = choice.iter().all(|m| m.count_ones() == 1);
        if !singletons {
            if let Some(v) = check_tuple(circuit, &vars, &sizes, &choice, &value_at) {
                return Ok(Some(v));
            }
        }
        // next tuple of non-empty masks
        let mut k = 0;
        loop {
            if k == vars.len() {
                return Ok(None);
            }
            if choice[k] < masks[k] {
                choice[k] += 1;
                break;
            }
            choice[k] = 1;
            k += 1;
        }
    }
}

fn check_tuple(
    circuit: &Circuit,
    vars: &[VarId],
    sizes: &[usize],
    choice: &[u32],
    value_at: &[Rational],
) -> Option<ValidityViolation> {
    let mut integral = Rational::zero();
    for (p, val) in value_at.iter().enumerate() {
        let mut rest = p;
        let inside = sizes.iter().zip(choice).all(|(&s, &m)| {
            let i = rest % s;
            rest /= s;
            m >> i & 1 == 1
        });
        if inside {
            integral += val;
        }
    }
    let mut pos_of = vec![usize::MAX; circuit.variables().len()];
    for (k, &v) in vars.iter().enumerate() {
        pos_of[v] = k;
    }
    let leaf_values: Vec<Rational> = circuit
        .leaf_functions()
        .iter()
        .map(|f| {
            let k = pos_of[f.variable];
            if k == usize::MAX {
                return Rational::zero();
            }
            let mask: Vec<bool> = (0..sizes[k]).map(|i| choice[k] >> i & 1 == 1).collect();
            f.integral(&mask)
        })
        .collect();
    let substituted = circuit.evaluate_leaves(&leaf_values);
    if substituted == integral {
        return None;
    }
    let subsets = vars
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let dom = &circuit.variables()[v].domain;
            let s = (0..sizes[k]).filter(|i| choice[k] >> i & 1 == 1).map(|i| rational::format(&dom[i])).collect();
            (v, s)
        })
        .collect();
    Some(ValidityViolation {
        subsets,
        integral: rational::format(&integral),
        substituted: rational::format(&substituted),
    })
}

/// Exhaustive validity decision (scope ≤ 4 variables, domains ≤ 3 values).
pub fn brute_force_validity(circuit: &Circuit) -> Result<bool> {
    Ok(find_validity_violation(circuit)?.is_none())
}
