//! Non-degeneracy pruning.

use num_traits::Zero;
use serde::Serialize;

use crate::circuit::{Circuit, Node, NodeKind};
use crate::{Error, NodeId, Result};

/// A zero weight or zero constant, the two ways a monotone circuit can be degenerate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Degeneracy {
    ZeroWeight { node: NodeId, child: NodeId },
    ZeroConstant { node: NodeId },
}

/// All zero weights and zero constants, ordered by node id.
pub fn degeneracies(circuit: &Circuit) -> Vec<Degeneracy> {
    let mut out = Vec::new();
    for node in circuit.nodes() {
        match &node.kind {
            NodeKind::Constant(c) if c.is_zero() => out.push(Degeneracy::ZeroConstant { node: node.id }),
            NodeKind::Sum(ch) => {
                for (c, w) in ch {
                    if w.is_zero() {
                        out.push(Degeneracy::ZeroWeight { node: node.id, child: *c });
                    }
                }
            }
            _ => {}
        }
    }
    out
}

pub fn is_non_degenerate(circuit: &Circuit) -> bool {
    degeneracies(circuit).is_empty()
}

/// Removes zero-weight edges and zero constants, then every node that can only
/// compute the zero polynomial or no longer feeds the root.
///
/// A sum loses edges to removed children and is removed once it has none left; a
/// product is removed as soon as any child is. Leaf-function and variable ids are
/// kept, so the output polynomial is literally unchanged. Node ids are compacted
/// in their original order, which makes the procedure a fixed point on
/// non-degenerate circuits.
pub fn prune_degenerate(circuit: &Circuit) -> Result<Circuit> {
    prune_removing(circuit, None)
}

/// Pruning with one extra node treated as computing zero (removed from the circuit).
pub(crate) fn prune_removing(circuit: &Circuit, zeroed: Option<NodeId>) -> Result<Circuit> {
    if circuit.is_extended() {
        return Err(Error::ExtendedRejected);
    }
    let n = circuit.size();
    let mut removed = vec![false; n];
    for node in circuit.nodes() {
        if Some(node.id) == zeroed {
            removed[node.id] = true;
            continue;
        }
        removed[node.id] = match &node.kind {
            NodeKind::Leaf(_) => false,
            NodeKind::Constant(c) => c.is_zero(),
            NodeKind::Sum(ch) => !ch.iter().any(|(c, w)| !w.is_zero() && !removed[*c]),
            NodeKind::Product(ch) => ch.iter().any(|c| removed[*c]),
        };
    }
    let root = circuit.root();
    if removed[root] {
        return Err(Error::ZeroCircuit);
    }
    let mut reachable = vec![false; n];
    reachable[root] = true;
    for id in (0..=root).rev() {
        if !reachable[id] {
            continue;
        }
        match &circuit.node(id).kind {
            NodeKind::Sum(ch) => {
                for (c, w) in ch {
                    if !w.is_zero() && !removed[*c] {
                        reachable[*c] = true;
                    }
                }
            }
            NodeKind::Product(ch) => {
                for c in ch {
                    reachable[*c] = true;
                }
            }
            _ => {}
        }
    }
    let mut new_id = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for node in circuit.nodes() {
        if removed[node.id] || !reachable[node.id] {
            continue;
        }
        let id = nodes.len();
        new_id[node.id] = id;
        let kind = match &node.kind {
            NodeKind::Sum(ch) => NodeKind::Sum(
                ch.iter()
                    .filter(|(c, w)| !w.is_zero() && !removed[*c])
                    .map(|(c, w)| (new_id[*c], w.clone()))
                    .collect(),
            ),
            NodeKind::Product(ch) => NodeKind::Product(ch.iter().map(|c| new_id[*c]).collect()),
            other => other.clone(),
        };
        nodes.push(Node { id, kind });
    }
    let (variables, leaf_functions, _, _, extended) = circuit.clone().into_parts();
    Circuit::from_parts(variables, leaf_functions, nodes, new_id[root], extended)
}
