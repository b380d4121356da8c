//! JSON interchange format for circuits.
//!
//! ```json
//! {
//!   "variables": [{"id": 0, "domain": ["0", "1"]}],
//!   "leaf_functions": [{"id": 0, "variable": 0, "name": "f_{1,1}", "table": {"0": "1", "1": "2"}}],
//!   "nodes": [
//!     {"id": 0, "kind": "leaf", "leaf_function": 0},
//!     {"id": 1, "kind": "constant", "value": "1/2"},
//!     {"id": 2, "kind": "sum", "children": [0, 1], "weights": ["1", "3"]},
//!     {"id": 3, "kind": "product", "children": [0, 2]}
//!   ],
//!   "root": 3,
//!   "extended": false
//! }
//! ```
//!
//! Rationals are strings `"p"` or `"p/q"`. Table keys are domain values in the same encoding.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::circuit::{Circuit, LeafFunction, Node, NodeKind, VariableSpec};
use crate::rational::{self, Rational};
use crate::{Error, LeafId, NodeId, Result, VarId};

#[derive(Serialize, Deserialize)]
struct VariableDoc {
    id: VarId,
    domain: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LeafDoc {
    id: LeafId,
    variable: VarId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    table: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: NodeId,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf_function: Option<LeafId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<NodeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    variables: Vec<VariableDoc>,
    leaf_functions: Vec<LeafDoc>,
    nodes: Vec<NodeDoc>,
    root: NodeId,
    #[serde(default)]
    extended: bool,
}

fn to_doc(c: &Circuit) -> CircuitDoc {
    let variables = c
        .variables()
        .iter()
        .map(|v| VariableDoc { id: v.id, domain: v.domain.iter().map(rational::format).collect() })
        .collect();
    let leaf_functions = c
        .leaf_functions()
        .iter()
        .map(|f| {
            let domain = &c.variables()[f.variable].domain;
            let table = domain
                .iter()
                .zip(&f.table)
                .map(|(k, v)| (rational::format(k), Value::String(rational::format(v))))
                .collect();
            LeafDoc { id: f.id, variable: f.variable, name: Some(f.name.clone()), table }
        })
        .collect();
    let nodes = c
        .nodes()
        .iter()
        .map(|n| {
            let mut doc = NodeDoc {
                id: n.id,
                kind: String::new(),
                leaf_function: None,
                children: None,
                weights: None,
                value: None,
            };
            match &n.kind {
                NodeKind::Leaf(l) => {
                    doc.kind = "leaf".into();
                    doc.leaf_function = Some(*l);
                }
                NodeKind::Constant(v) => {
                    doc.kind = "constant".into();
                    doc.value = Some(rational::format(v));
                }
                NodeKind::Sum(ch) => {
                    doc.kind = "sum".into();
                    doc.children = Some(ch.iter().map(|(c, _)| *c).collect());
                    doc.weights = Some(ch.iter().map(|(_, w)| rational::format(w)).collect());
                }
                NodeKind::Product(ch) => {
                    doc.kind = "product".into();
                    doc.children = Some(ch.clone());
                }
            }
            doc
        })
        .collect();
    CircuitDoc { variables, leaf_functions, nodes, root: c.root(), extended: c.is_extended() }
}

fn value_str(v: &Value) -> Result<&str> {
    v.as_str().ok_or_else(|| Error::Malformed(format!("expected a rational string, found {v}")))
}

fn from_doc(doc: CircuitDoc) -> Result<Circuit> {
    let mut variables = Vec::with_capacity(doc.variables.len());
    for v in doc.variables {
        let domain = v.domain.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>()?;
        variables.push(VariableSpec::new(v.id, domain)?);
    }
    let mut per_variable = vec![0usize; variables.len()];
    let mut leaf_functions = Vec::with_capacity(doc.leaf_functions.len());
    for f in doc.leaf_functions {
        let var: &VariableSpec =
            variables.get(f.variable).ok_or(Error::DanglingVariable { leaf: f.id, var: f.variable })?;
        let mismatch = |detail: String| Error::TableMismatch { leaf: f.id, var: f.variable, detail };
        let mut table: Vec<Option<Rational>> = vec![None; var.domain.len()];
        for (k, v) in &f.table {
            let key = rational::parse(k)?;
            let pos = var.index_of(&key).ok_or_else(|| mismatch(format!("key {k} is not a domain value")))?;
            if table[pos].is_some() {
                return Err(mismatch(format!("duplicate key {k}")));
            }
            table[pos] = Some(rational::parse(value_str(v)?)?);
        }
        let table = table
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| mismatch("missing entries".into()))?;
        per_variable[f.variable] += 1;
        let name = f.name.unwrap_or_else(|| format!("f_{{{},{}}}", f.variable + 1, per_variable[f.variable]));
        leaf_functions.push(LeafFunction { id: f.id, variable: f.variable, name, table });
    }
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in doc.nodes {
        let missing = |field: &str| Error::Malformed(format!("node {} ({}) lacks `{field}`", n.id, n.kind));
        let kind = match n.kind.as_str() {
            "leaf" => NodeKind::Leaf(n.leaf_function.ok_or_else(|| missing("leaf_function"))?),
            "constant" => NodeKind::Constant(rational::parse(n.value.as_deref().ok_or_else(|| missing("value"))?)?),
            "sum" => {
                let children = n.children.clone().ok_or_else(|| missing("children"))?;
                let weights = match &n.weights {
                    Some(w) => w.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>()?,
                    None => vec![rational::one(); children.len()],
                };
                if weights.len() != children.len() {
                    return Err(Error::Malformed(format!("node {}: {} weights for {} children", n.id, weights.len(), children.len())));
                }
                NodeKind::Sum(children.into_iter().zip(weights).collect())
            }
            "product" => NodeKind::Product(n.children.clone().ok_or_else(|| missing("children"))?),
            other => return Err(Error::Malformed(format!("unknown node kind {other:?}"))),
        };
        nodes.push(Node { id: n.id, kind });
    }
    Circuit::from_parts(variables, leaf_functions, nodes, doc.root, doc.extended)
}

/// Serializes to the interchange JSON (pretty-printed, deterministic).
pub fn to_json(circuit: &Circuit) -> String {
    serde_json::to_string_pretty(&to_doc(circuit)).expect("circuit documents always serialize")
}

pub fn to_value(circuit: &Circuit) -> Value {
    serde_json::to_value(to_doc(circuit)).expect("circuit documents always serialize")
}

/// Parses and validates a circuit document.
pub fn from_json(text: &str) -> Result<Circuit> {
    let doc: CircuitDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    from_doc(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::rational::{frac, int};

    fn sample_circuit() -> Circuit {
        let mut b = CircuitBuilder::new();
        let x1 = b.add_binary_variable();
        let x2 = b.add_variable(vec![int(0), frac(1, 2), int(7)]).unwrap();
        let f11 = b.add_leaf_function(x1, vec![int(1), int(2)]).unwrap();
        let f21 = b.add_leaf_function(x2, vec![int(1), int(3), frac(2, 3)]).unwrap();
        let l1 = b.leaf(f11);
        let l2 = b.leaf(f21);
        let k = b.constant(frac(5, 2));
        let s = b.sum(vec![(l2, int(2)), (k, frac(1, 3))]);
        let p = b.product(vec![l1, s]);
        b.build(p).unwrap()
    }

    #[test]
    fn round_trip_is_structural_identity() {
        let c = sample_circuit();
        let text = to_json(&c);
        assert_eq!(from_json(&text).unwrap(), c);
        assert_eq!(to_json(&from_json(&text).unwrap()), text);
    }

    #[test]
    fn forward_reference_is_an_ordering_error() {
        let text = r#"{"variables":[{"id":0,"domain":["0","1"]}],
            "leaf_functions":[{"id":0,"variable":0,"table":{"0":"1","1":"1"}}],
            "nodes":[{"id":0,"kind":"product","children":[1]},{"id":1,"kind":"leaf","leaf_function":0}],
            "root":0,"extended":false}"#;
        assert!(matches!(from_json(text), Err(Error::Ordering { node: 0, child: 1 })));
        let dangling = text.replace("\"children\":[1]", "\"children\":[5]");
        assert!(matches!(from_json(&dangling), Err(Error::DanglingNode { node: 0, child: 5 })));
    }

    #[test]
    fn negative_weight_requires_extended_flag() {
        let text = r#"{"variables":[{"id":0,"domain":["0","1"]}],
            "leaf_functions":[{"id":0,"variable":0,"table":{"0":"1","1":"1"}}],
            "nodes":[{"id":0,"kind":"leaf","leaf_function":0},{"id":1,"kind":"sum","children":[0],"weights":["-1"]}],
            "root":1,"extended":false}"#;
        assert!(matches!(from_json(text), Err(Error::NotMonotone(_))));
        let ext = text.replace("\"extended\":false", "\"extended\":true");
        assert!(from_json(&ext).is_ok());
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(from_json("{"), Err(Error::Malformed(_))));
        let missing_entry = r#"{"variables":[{"id":0,"domain":["0","1"]}],
            "leaf_functions":[{"id":0,"variable":0,"table":{"0":"1"}}],
            "nodes":[{"id":0,"kind":"leaf","leaf_function":0}],"root":0}"#;
        assert!(matches!(from_json(missing_entry), Err(Error::TableMismatch { .. })));
    }
}
