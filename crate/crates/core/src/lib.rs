//! Sum-product networks (SPNs) over finite discrete domains.
//!
//! An SPN is represented as a monotone arithmetic circuit whose inputs are
//! univariate leaf functions of the model variables. The crate provides
//!
//! * the circuit IR with evaluation, scopes, metrics and a JSON interchange format
//!   ([`circuit`], [`json`]),
//! * exact polynomial expansion and (set-)multilinearity predicates ([`polynomial`]),
//! * structural analysis: decomposability, completeness, degeneracy pruning,
//!   the completeness transform, a brute-force validity oracle and the CNF reduction
//!   ([`structure`]),
//! * marginal inference, weight normalization and ancestral sampling ([`inference`]),
//! * compilers from fixed-permutation state machines to D&C SPNs ([`compilers`]),
//! * communication-matrix rank bounds and the balanced product decomposition
//!   ([`separation`]),
//! * the spanning-tree distribution with exact Matrix-Tree marginal counting
//!   ([`spanning_tree`]).
//!
//! All correctness-critical arithmetic is exact ([`Rational`] / [`num_bigint::BigInt`]).

pub mod circuit;
pub mod compilers;
pub mod dimacs;
mod error;
pub mod inference;
pub mod json;
pub mod linalg;
pub mod polynomial;
pub mod random;
pub mod rational;
pub mod separation;
pub mod spanning_tree;
pub mod structure;

pub use circuit::{Circuit, CircuitBuilder, CircuitMetrics, LeafFunction, Node, NodeKind, VariableSpec};
pub use error::{Error, Result};
pub use rational::Rational;

/// Identifier of a model variable `x_i` (0-based).
pub type VarId = usize;
/// Identifier of a leaf function `f_{i,j}` (0-based, global across variables).
pub type LeafId = usize;
/// Identifier of a circuit node (0-based, topologically ordered).
pub type NodeId = usize;
