//! Structural analysis: decomposability, completeness, degeneracy, strong validity.
//!
//! For a non-degenerate SPN over non-trivial variables, decomposability plus
//! completeness, set-multilinearity of the output polynomial and strong validity
//! (validity for every choice of leaf functions) are equivalent. The structural
//! test is therefore the decision procedure; polynomial expansion and the
//! brute-force oracle in [`validity`] serve as audits.

mod cnf;
mod complete;
mod prune;
pub mod validity;

pub use cnf::cnf_to_extended_spn;
pub use complete::complete_transform;
pub use prune::{degeneracies, is_non_degenerate, prune_degenerate, Degeneracy};
pub(crate) use prune::prune_removing;
pub use validity::{brute_force_validity, find_validity_violation, ValidityViolation};

use serde::Serialize;

use crate::circuit::{Circuit, NodeKind};
use crate::polynomial::expand_root;
use crate::{Error, NodeId, Result, VarId};

/// Outcome of a structural predicate with the offending nodes in id order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub violations: Vec<NodeId>,
}

impl Check {
    fn from_violations(violations: Vec<NodeId>) -> Self {
        Check { holds: violations.is_empty(), violations }
    }
}

/// Product nodes whose children have overlapping dependency-scopes.
pub fn check_decomposable(circuit: &Circuit) -> Result<Check> {
    if circuit.is_extended() {
        return Err(Error::ExtendedRejected);
    }
    let ds = circuit.dependency_scopes();
    let mut bad = Vec::new();
    for node in circuit.nodes() {
        if let NodeKind::Product(ch) = &node.kind {
            let total: usize = ch.iter().map(|c| ds[*c].len()).sum();
            if total != ds[node.id].len() {
                bad.push(node.id);
            }
        }
    }
    Ok(Check::from_violations(bad))
}

/// Sum nodes whose children do not all share one dependency-scope.
pub fn check_complete(circuit: &Circuit) -> Result<Check> {
    if circuit.is_extended() {
        return Err(Error::ExtendedRejected);
    }
    let ds = circuit.dependency_scopes();
    let mut bad = Vec::new();
    for node in circuit.nodes() {
        if let NodeKind::Sum(ch) = &node.kind {
            if ch.iter().any(|(c, _)| ds[*c] != ds[node.id]) {
                bad.push(node.id);
            }
        }
    }
    Ok(Check::from_violations(bad))
}

/// Decomposable and complete.
pub fn is_dc(circuit: &Circuit) -> Result<bool> {
    Ok(check_decomposable(circuit)?.holds && check_complete(circuit)?.holds)
}

/// Variables in the root's dependency-scope whose domain has a single value.
pub fn trivial_variables(circuit: &Circuit) -> Vec<VarId> {
    circuit
        .root_dependency_scope()
        .into_iter()
        .filter(|&v| !circuit.variables()[v].is_nontrivial())
        .collect()
}

/// Decides strong validity of a non-degenerate circuit over non-trivial variables.
///
/// With `audit`, the output polynomial is also expanded and its set-multilinearity
/// must agree with the structural answer.
pub fn check_strong_validity(circuit: &Circuit, audit: bool) -> Result<bool> {
    if circuit.is_extended() {
        return Err(Error::ExtendedRejected);
    }
    if let Some(&v) = trivial_variables(circuit).first() {
        return Err(Error::TrivialVariable(v));
    }
    if !is_non_degenerate(circuit) {
        return Err(Error::Degenerate);
    }
    let structural = is_dc(circuit)?;
    if audit {
        let sml = expand_root(circuit)?.is_set_multilinear()?;
        if sml != structural {
            return Err(Error::AuditMismatch(format!(
                "decomposable-and-complete = {structural} but set-multilinear output = {sml}"
            )));
        }
    }
    Ok(structural)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub decomposable: Check,
    pub complete: Check,
    pub non_degenerate: bool,
    pub degeneracies: Vec<Degeneracy>,
    pub all_variables_nontrivial: bool,
    pub trivial_variables: Vec<VarId>,
    /// Strong validity of the pruned circuit (which computes the same polynomial);
    /// `None` when a trivial variable makes the equivalence inapplicable.
    pub strongly_valid: Option<bool>,
}

/// Runs every structural predicate.
pub fn analyze(circuit: &Circuit, audit: bool) -> Result<StructureReport> {
    let decomposable = check_decomposable(circuit)?;
    let complete = check_complete(circuit)?;
    let degeneracies = degeneracies(circuit);
    let trivial = trivial_variables(circuit);
    let strongly_valid = if !trivial.is_empty() {
        None
    } else {
        match prune_degenerate(circuit) {
            Ok(pruned) => Some(check_strong_validity(&pruned, audit)?),
            // the zero polynomial is valid for every choice of leaf functions
            Err(Error::ZeroCircuit) => Some(true),
            Err(e) => return Err(e),
        }
    };
    Ok(StructureReport {
        decomposable,
        complete,
        non_degenerate: degeneracies.is_empty(),
        degeneracies,
        all_variables_nontrivial: trivial.is_empty(),
        trivial_variables: trivial,
        strongly_valid,
    })
}
