//! The completeness transform.

use std::collections::BTreeMap;

use crate::circuit::{Circuit, LeafFunction, Node, NodeKind};
use crate::rational;
use crate::{Error, NodeId, Result, VarId};

/// Makes every sum node complete without changing the computed function.
///
/// Each sum child `v` whose dependency-scope misses variables of its parent `u` is
/// replaced by a product of `v` with one constant-1 leaf per missing variable. The
/// constant-1 leaf functions and their leaf nodes are created once per variable and
/// shared, so the result has at most `s + n + k` nodes (`k` = total sum fan-in).
/// Decomposability is preserved because the new factors range over variables
/// outside `v`'s scope. Complete circuits are returned unchanged.
pub fn complete_transform(circuit: &Circuit) -> Result<Circuit> {
    if circuit.is_extended() {
        return Err(Error::ExtendedRejected);
    }
    let ds = circuit.dependency_scopes();
    let (variables, mut leaf_functions, old_nodes, root, extended) = circuit.clone().into_parts();
    let mut per_variable = vec![0usize; variables.len()];
    for f in &leaf_functions {
        per_variable[f.variable] += 1;
    }
    let mut one_leaf: BTreeMap<VarId, NodeId> = BTreeMap::new();
    let mut nodes: Vec<Node> = Vec::with_capacity(old_nodes.len());
    let mut new_id = vec![0usize; old_nodes.len()];
    for node in old_nodes {
        let kind = match node.kind {
            NodeKind::Sum(ch) => {
                let mut children = Vec::with_capacity(ch.len());
                for (c, w) in ch {
                    let missing: Vec<VarId> = ds[node.id].difference(&ds[c]).copied().collect();
                    if missing.is_empty() {
                        children.push((new_id[c], w));
                        continue;
                    }
                    let mut factors = vec![new_id[c]];
                    for var in missing {
                        let leaf_node = *one_leaf.entry(var).or_insert_with(|| {
                            per_variable[var] += 1;
                            let leaf = leaf_functions.len();
                            leaf_functions.push(LeafFunction {
                                id: leaf,
                                variable: var,
                                name: format!("f_{{{},{}}}", var + 1, per_variable[var]),
                                table: vec![rational::one(); variables[var].domain.len()],
                            });
                            nodes.push(Node { id: nodes.len(), kind: NodeKind::Leaf(leaf) });
                            nodes.len() - 1
                        });
                        factors.push(leaf_node);
                    }
                    nodes.push(Node { id: nodes.len(), kind: NodeKind::Product(factors) });
                    children.push((nodes.len() - 1, w));
                }
                NodeKind::Sum(children)
            }
            NodeKind::Product(ch) => NodeKind::Product(ch.into_iter().map(|c| new_id[c]).collect()),
            other => other,
        };
        new_id[node.id] = nodes.len();
        nodes.push(Node { id: nodes.len(), kind });
    }
    Circuit::from_parts(variables, leaf_functions, nodes, new_id[root], extended)
}
