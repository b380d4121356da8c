//! The arithmetic-circuit IR.
//!
//! A [`Circuit`] is a DAG of leaf, constant, sum and product nodes stored in
//! topological order: every child id is strictly smaller than its parent's id.
//! Leaves reference [`LeafFunction`]s, which are tables over the finite domain of
//! one [`VariableSpec`]. Integration is always with respect to the counting
//! measure, so integrals are finite sums.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::rational::{self, Rational};
use crate::{Error, LeafId, NodeId, Result, VarId};

/// A variable together with its finite, ordered domain `R_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableSpec {
    pub id: VarId,
    pub domain: Vec<Rational>,
}

impl VariableSpec {
    pub fn new(id: VarId, domain: Vec<Rational>) -> Result<Self> {
        let spec = VariableSpec { id, domain };
        spec.validate()?;
        Ok(spec)
    }

    /// Domain `{0, 1}`.
    pub fn binary(id: VarId) -> Self {
        VariableSpec { id, domain: vec![rational::zero(), rational::one()] }
    }

    fn validate(&self) -> Result<()> {
        if self.domain.is_empty() {
            return Err(Error::EmptyDomain(self.id));
        }
        let mut seen = BTreeSet::new();
        for v in &self.domain {
            if !seen.insert(v) {
                return Err(Error::DuplicateDomainValue(self.id, rational::format(v)));
            }
        }
        Ok(())
    }

    /// At least two domain values carry (counting) mass.
    pub fn is_nontrivial(&self) -> bool {
        self.domain.len() >= 2
    }

    pub fn index_of(&self, value: &Rational) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }

    pub fn is_binary(&self) -> bool {
        self.domain.len() == 2
    }
}

/// A univariate function `f_{i,j}` stored as a table aligned with the domain of its variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafFunction {
    pub id: LeafId,
    pub variable: VarId,
    pub name: String,
    pub table: Vec<Rational>,
}

impl LeafFunction {
    /// Integral over the domain positions flagged in `mask` (counting measure).
    pub fn integral(&self, mask: &[bool]) -> Rational {
        self.table
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(Rational::zero(), |acc, (v, _)| acc + v)
    }

    pub fn total(&self) -> Rational {
        self.table.iter().fold(Rational::zero(), |acc, v| acc + v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Leaf(LeafId),
    Constant(Rational),
    Sum(Vec<(NodeId, Rational)>),
    Product(Vec<NodeId>),
}

impl NodeKind {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            NodeKind::Leaf(_) | NodeKind::Constant(_) => Vec::new(),
            NodeKind::Sum(ch) => ch.iter().map(|(c, _)| *c).collect(),
            NodeKind::Product(ch) => ch.clone(),
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, NodeKind::Sum(_))
    }

    pub fn is_product(&self) -> bool {
        matches!(self, NodeKind::Product(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

/// Scope of a node: the leaf functions below it and the variables they depend on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeScope {
    pub leaves: BTreeSet<LeafId>,
    pub variables: BTreeSet<VarId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CircuitMetrics {
    pub size: usize,
    pub depth: usize,
    pub product_depth: usize,
    pub is_formula: bool,
}

/// An SPN (or, with `extended`, an arithmetic circuit allowing negative parameters).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    variables: Vec<VariableSpec>,
    leaf_functions: Vec<LeafFunction>,
    nodes: Vec<Node>,
    root: NodeId,
    extended: bool,
}

impl Circuit {
    /// Assembles a circuit and checks every structural invariant.
    pub fn from_parts(
        variables: Vec<VariableSpec>,
        leaf_functions: Vec<LeafFunction>,
        nodes: Vec<Node>,
        root: NodeId,
        extended: bool,
    ) -> Result<Self> {
        let c = Circuit { variables, leaf_functions, nodes, root, extended };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let neg = |r: &Rational| !self.extended && rational::is_negative(r);
        for (i, v) in self.variables.iter().enumerate() {
            if v.id != i {
                return Err(Error::IdMismatch(format!("variable at position {i} has id {}", v.id)));
            }
            v.validate()?;
        }
        for (i, f) in self.leaf_functions.iter().enumerate() {
            if f.id != i {
                return Err(Error::IdMismatch(format!("leaf function at position {i} has id {}", f.id)));
            }
            let var = self
                .variables
                .get(f.variable)
                .ok_or(Error::DanglingVariable { leaf: f.id, var: f.variable })?;
            if f.table.len() != var.domain.len() {
                return Err(Error::TableMismatch {
                    leaf: f.id,
                    var: f.variable,
                    detail: format!("{} entries for {} domain values", f.table.len(), var.domain.len()),
                });
            }
            if let Some(v) = f.table.iter().find(|v| neg(v)) {
                return Err(Error::NotMonotone(format!("leaf function {} value {}", f.name, rational::format(v))));
            }
        }
        if self.nodes.is_empty() {
            return Err(Error::Malformed("circuit has no nodes".into()));
        }
        let mut has_parent = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::IdMismatch(format!("node at position {i} has id {}", node.id)));
            }
            match &node.kind {
                NodeKind::Leaf(l) => {
                    if *l >= self.leaf_functions.len() {
                        return Err(Error::DanglingLeaf { node: i, leaf: *l });
                    }
                }
                NodeKind::Constant(c) => {
                    if neg(c) {
                        return Err(Error::NotMonotone(format!("constant node {i}")));
                    }
                }
                NodeKind::Sum(ch) => {
                    if let Some((_, w)) = ch.iter().find(|(_, w)| neg(w)) {
                        return Err(Error::NotMonotone(format!(
                            "weight {} on sum node {i}",
                            rational::format(w)
                        )));
                    }
                }
                NodeKind::Product(_) => {}
            }
            let children = node.kind.children();
            if matches!(node.kind, NodeKind::Sum(_) | NodeKind::Product(_)) && children.is_empty() {
                return Err(Error::NoChildren(i));
            }
            for c in children {
                if c >= self.nodes.len() {
                    return Err(Error::DanglingNode { node: i, child: c });
                }
                if c >= i {
                    return Err(Error::Ordering { node: i, child: c });
                }
                has_parent[c] = true;
            }
        }
        if self.root >= self.nodes.len() {
            return Err(Error::BadRoot(self.root, "out of range".into()));
        }
        if has_parent[self.root] {
            return Err(Error::BadRoot(self.root, "root has a parent".into()));
        }
        if let Some(extra) = (0..self.nodes.len()).find(|&i| i != self.root && !has_parent[i]) {
            return Err(Error::ExtraOutput(extra));
        }
        Ok(())
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn leaf_functions(&self) -> &[LeafFunction] {
        &self.leaf_functions
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// `groups[leaf] = variable`, the partition `G_i = f_i` of the leaf functions.
    pub fn variable_groups(&self) -> Vec<VarId> {
        self.leaf_functions.iter().map(|f| f.variable).collect()
    }

    /// Decomposes the circuit for rebuilding by transformations in this crate.
    pub fn into_parts(self) -> (Vec<VariableSpec>, Vec<LeafFunction>, Vec<Node>, NodeId, bool) {
        (self.variables, self.leaf_functions, self.nodes, self.root, self.extended)
    }

    /// Parents of every node (in increasing id order).
    pub fn parents(&self) -> Vec<Vec<NodeId>> {
        let mut parents = vec![Vec::new(); self.nodes.len()];
        for node in &self.nodes {
            for c in node.kind.children() {
                parents[c].push(node.id);
            }
        }
        parents
    }

    /// One bottom-up pass computing scope and dependency-scope of every node.
    pub fn scopes(&self) -> Vec<NodeScope> {
        let mut out: Vec<NodeScope> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let scope = match &node.kind {
                NodeKind::Leaf(l) => NodeScope {
                    leaves: BTreeSet::from([*l]),
                    variables: BTreeSet::from([self.leaf_functions[*l].variable]),
                },
                NodeKind::Constant(_) => NodeScope::default(),
                _ => {
                    let mut s = NodeScope::default();
                    for c in node.kind.children() {
                        s.leaves.extend(out[c].leaves.iter().copied());
                        s.variables.extend(out[c].variables.iter().copied());
                    }
                    s
                }
            };
            out.push(scope);
        }
        out
    }

    /// Dependency-scope of every node only (cheaper than [`Circuit::scopes`]).
    pub fn dependency_scopes(&self) -> Vec<BTreeSet<VarId>> {
        let mut out: Vec<BTreeSet<VarId>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let s = match &node.kind {
                NodeKind::Leaf(l) => BTreeSet::from([self.leaf_functions[*l].variable]),
                NodeKind::Constant(_) => BTreeSet::new(),
                kind => {
                    let mut s = BTreeSet::new();
                    for c in kind.children() {
                        s.extend(out[c].iter().copied());
                    }
                    s
                }
            };
            out.push(s);
        }
        out
    }

    pub fn root_dependency_scope(&self) -> BTreeSet<VarId> {
        self.dependency_scopes().swap_remove(self.root)
    }

    pub fn metrics(&self) -> CircuitMetrics {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut pdepth = vec![0usize; self.nodes.len()];
        let mut out_degree = vec![0usize; self.nodes.len()];
        for node in &self.nodes {
            let children = node.kind.children();
            let d = children.iter().map(|&c| depth[c]).max().unwrap_or(0);
            let p = children.iter().map(|&c| pdepth[c]).max().unwrap_or(0);
            depth[node.id] = d + 1;
            pdepth[node.id] = p + usize::from(node.kind.is_product());
            for c in children {
                out_degree[c] += 1;
            }
        }
        CircuitMetrics {
            size: self.nodes.len(),
            depth: depth.iter().copied().max().unwrap_or(0),
            product_depth: pdepth.iter().copied().max().unwrap_or(0),
            is_formula: out_degree.iter().all(|&d| d <= 1),
        }
    }

    /// Evaluates every node given the value of each leaf function.
    ///
    /// `override_node` replaces the value of one node (used to substitute a node by
    /// a constant without rebuilding the circuit).
    pub fn node_values(&self, leaf_values: &[Rational], override_node: Option<(NodeId, &Rational)>) -> Vec<Rational> {
        let mut vals: Vec<Rational> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            if let Some((id, v)) = override_node {
                if id == node.id {
                    vals.push(v.clone());
                    continue;
                }
            }
            vals.push(self.node_value(&node.kind, leaf_values, &vals));
        }
        vals
    }

    fn node_value(&self, kind: &NodeKind, leaf_values: &[Rational], vals: &[Rational]) -> Rational {
        match kind {
            NodeKind::Leaf(l) => leaf_values[*l].clone(),
            NodeKind::Constant(c) => c.clone(),
            NodeKind::Sum(ch) => {
                let mut acc = Rational::zero();
                for (c, w) in ch {
                    if !vals[*c].is_zero() && !w.is_zero() {
                        acc += w * &vals[*c];
                    }
                }
                acc
            }
            NodeKind::Product(ch) => {
                let mut acc = Rational::one();
                for c in ch {
                    if vals[*c].is_zero() {
                        return Rational::zero();
                    }
                    acc *= &vals[*c];
                }
                acc
            }
        }
    }

    /// Root value given the value of each leaf function.
    pub fn evaluate_leaves(&self, leaf_values: &[Rational]) -> Rational {
        self.node_values(leaf_values, None).swap_remove(self.root)
    }

    /// Value of node `target`, evaluating only its sub-circuit.
    pub fn evaluate_node_leaves(&self, target: NodeId, leaf_values: &[Rational]) -> Rational {
        let mut needed = vec![false; target + 1];
        needed[target] = true;
        for id in (0..=target).rev() {
            if needed[id] {
                for c in self.nodes[id].kind.children() {
                    needed[c] = true;
                }
            }
        }
        let mut vals: Vec<Rational> = vec![Rational::zero(); target + 1];
        for id in 0..=target {
            if needed[id] {
                vals[id] = self.node_value(&self.nodes[id].kind, leaf_values, &vals);
            }
        }
        vals.swap_remove(target)
    }

    /// Leaf values `f_{i,j}(x_i)` for an assignment given as domain positions per variable.
    pub fn leaf_values_at(&self, value_index: &[usize]) -> Vec<Rational> {
        self.leaf_functions
            .iter()
            .map(|f| f.table[value_index[f.variable]].clone())
            .collect()
    }

    /// `q_Φ(f(x))` for `x` given as domain positions (one per declared variable).
    pub fn evaluate_indexed(&self, value_index: &[usize]) -> Rational {
        self.evaluate_leaves(&self.leaf_values_at(value_index))
    }

    /// `q_Φ(f(x))` for an assignment of domain values.
    ///
    /// The assignment must cover the root's dependency-scope; variables outside it
    /// may be omitted.
    pub fn evaluate(&self, assignment: &BTreeMap<VarId, Rational>) -> Result<Rational> {
        let index = self.resolve_assignment(assignment)?;
        let leaf_values: Vec<Rational> = self
            .leaf_functions
            .iter()
            .map(|f| index[f.variable].map(|i| f.table[i].clone()))
            .map(|v| v.unwrap_or_else(Rational::zero))
            .collect();
        Ok(self.evaluate_leaves(&leaf_values))
    }

    /// Maps an assignment to domain positions, checking the root scope is covered.
    pub fn resolve_assignment(&self, assignment: &BTreeMap<VarId, Rational>) -> Result<Vec<Option<usize>>> {
        let mut index = vec![None; self.variables.len()];
        for (&var, value) in assignment {
            let spec = self.variables.get(var).ok_or(Error::UnknownVariable(var))?;
            let pos = spec
                .index_of(value)
                .ok_or_else(|| Error::ValueOutsideDomain { var, value: rational::format(value) })?;
            index[var] = Some(pos);
        }
        if let Some(&missing) = self.root_dependency_scope().iter().find(|&&v| index[v].is_none()) {
            return Err(Error::MissingVariable(missing));
        }
        Ok(index)
    }
}

/// Incremental construction of a [`Circuit`]; ids are handed out in topological order.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    variables: Vec<VariableSpec>,
    leaf_functions: Vec<LeafFunction>,
    nodes: Vec<Node>,
    extended: bool,
    per_variable: Vec<usize>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allows negative weights, constants and table values.
    pub fn extended(mut self) -> Self {
        self.extended = true;
        self
    }

    pub fn add_variable(&mut self, domain: Vec<Rational>) -> Result<VarId> {
        let spec = VariableSpec::new(self.variables.len(), domain)?;
        self.variables.push(spec);
        self.per_variable.push(0);
        Ok(self.variables.len() - 1)
    }

    pub fn add_binary_variable(&mut self) -> VarId {
        let id = self.variables.len();
        self.variables.push(VariableSpec::binary(id));
        self.per_variable.push(0);
        id
    }

    pub fn variable(&self, id: VarId) -> &VariableSpec {
        &self.variables[id]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Registers `f_{i,j}` with `j` counting the functions of variable `i` (both 1-based in the name).
    pub fn add_leaf_function(&mut self, variable: VarId, table: Vec<Rational>) -> Result<LeafId> {
        let counter = self.per_variable.get_mut(variable).ok_or(Error::UnknownVariable(variable))?;
        *counter += 1;
        let name = format!("f_{{{},{}}}", variable + 1, counter);
        self.add_named_leaf_function(variable, name, table)
    }

    pub fn add_named_leaf_function(&mut self, variable: VarId, name: String, table: Vec<Rational>) -> Result<LeafId> {
        let id = self.leaf_functions.len();
        let var = self.variables.get(variable).ok_or(Error::DanglingVariable { leaf: id, var: variable })?;
        if table.len() != var.domain.len() {
            return Err(Error::TableMismatch {
                leaf: id,
                var: variable,
                detail: format!("{} entries for {} domain values", table.len(), var.domain.len()),
            });
        }
        self.leaf_functions.push(LeafFunction { id, variable, name, table });
        Ok(id)
    }

    fn push(&mut self, kind: NodeKind) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { id, kind });
        id
    }

    pub fn leaf(&mut self, leaf: LeafId) -> NodeId {
        self.push(NodeKind::Leaf(leaf))
    }

    pub fn constant(&mut self, value: Rational) -> NodeId {
        self.push(NodeKind::Constant(value))
    }

    pub fn sum(&mut self, children: Vec<(NodeId, Rational)>) -> NodeId {
        self.push(NodeKind::Sum(children))
    }

    /// Sum with all weights equal to one.
    pub fn plain_sum(&mut self, children: Vec<NodeId>) -> NodeId {
        self.sum(children.into_iter().map(|c| (c, rational::one())).collect())
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(NodeKind::Product(children))
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn build(self, root: NodeId) -> Result<Circuit> {
        Circuit::from_parts(self.variables, self.leaf_functions, self.nodes, root, self.extended)
    }

    /// Like [`build`](Self::build) but first drops the nodes `root` does not reach.
    pub fn build_reachable(self, root: NodeId) -> Result<Circuit> {
        if root >= self.nodes.len() {
            return Err(Error::BadRoot(root, "no such node".into()));
        }
        let mut live = vec![false; self.nodes.len()];
        live[root] = true;
        for id in (0..=root).rev() {
            if live[id] {
                for c in self.nodes[id].kind.children() {
                    if let Some(l) = live.get_mut(c) {
                        *l = true;
                    }
                }
            }
        }
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for node in self.nodes.into_iter().filter(|n| live[n.id]) {
            let kind = match node.kind {
                NodeKind::Sum(ch) => NodeKind::Sum(ch.into_iter().map(|(c, w)| (new_id[c], w)).collect()),
                NodeKind::Product(ch) => NodeKind::Product(ch.into_iter().map(|c| new_id[c]).collect()),
                other => other,
            };
            new_id[node.id] = nodes.len();
            nodes.push(Node { id: nodes.len(), kind });
        }
        Circuit::from_parts(self.variables, self.leaf_functions, nodes, new_id[root], self.extended)
    }
}
