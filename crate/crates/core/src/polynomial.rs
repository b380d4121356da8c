//! Exact sparse polynomials in the leaf functions and the (set-)multilinearity predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::circuit::{Circuit, NodeKind};
use crate::rational::{self, Rational};
use crate::{Error, LeafId, NodeId, Result, VarId};

pub const DEFAULT_TERM_CAP: usize = 1_000_000;
/// Largest number of distinct formal variables accepted by [`multilinear_identity_test`].
pub const IDENTITY_TEST_MAX_VARS: usize = 24;

/// A product of leaf functions with positive exponents, sorted by leaf id.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(LeafId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(leaf: LeafId) -> Self {
        Monomial(vec![(leaf, 1)])
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (LeafId, u32)>) -> Self {
        let mut map: BTreeMap<LeafId, u32> = BTreeMap::new();
        for (l, e) in factors {
            *map.entry(l).or_default() += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn factors(&self) -> &[(LeafId, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }
}

/// Polynomial over the leaf functions with like terms collected and no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePolynomial {
    terms: BTreeMap<Monomial, Rational>,
    /// `groups[leaf]` is the variable of that leaf function.
    groups: Vec<VarId>,
}

impl SparsePolynomial {
    pub fn zero(groups: Vec<VarId>) -> Self {
        SparsePolynomial { terms: BTreeMap::new(), groups }
    }

    pub fn constant(groups: Vec<VarId>, c: Rational) -> Self {
        let mut p = Self::zero(groups);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn from_terms(groups: Vec<VarId>, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero(groups);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rational> {
        &self.terms
    }

    pub fn groups(&self) -> &[VarId] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn sub(&self, other: &SparsePolynomial) -> SparsePolynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    /// Leaf functions appearing in some monomial (the polynomial's scope).
    pub fn scope(&self) -> BTreeSet<LeafId> {
        self.terms.keys().flat_map(|m| m.0.iter().map(|(l, _)| *l)).collect()
    }

    /// Groups (variables) intersecting the scope.
    pub fn set_scope(&self) -> Result<BTreeSet<VarId>> {
        self.scope().into_iter().map(|l| self.group_of(l)).collect()
    }

    fn group_of(&self, leaf: LeafId) -> Result<VarId> {
        self.groups.get(leaf).copied().ok_or(Error::Ungrouped(leaf))
    }

    pub fn is_multilinear(&self) -> bool {
        self.terms.keys().all(|m| m.0.iter().all(|&(_, e)| e == 1))
    }

    /// Every monomial takes exactly one factor (with exponent one) from each group in the set-scope.
    pub fn is_set_multilinear(&self) -> Result<bool> {
        let set_scope = self.set_scope()?;
        for m in self.terms.keys() {
            let mut seen = BTreeSet::new();
            for &(l, e) in &m.0 {
                if e != 1 || !seen.insert(self.group_of(l)?) {
                    return Ok(false);
                }
            }
            if seen != set_scope {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Substitutes a value for every leaf function.
    pub fn evaluate(&self, leaf_values: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(l, e) in &m.0 {
                for _ in 0..e {
                    t *= &leaf_values[l];
                }
            }
            acc += t;
        }
        acc
    }

    /// One line per monomial, `coeff * name^e * ...`, in monomial order.
    pub fn dump(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0\n".into();
        }
        let mut out = String::new();
        for (m, c) in &self.terms {
            out.push_str(&rational::format(c));
            for &(l, e) in &m.0 {
                let name = names.get(l).cloned().unwrap_or_else(|| format!("y_{l}"));
                if e == 1 {
                    let _ = write!(out, " * {name}");
                } else {
                    let _ = write!(out, " * {name}^{e}");
                }
            }
            out.push('\n');
        }
        out
    }

    fn scaled_add(&mut self, other: &SparsePolynomial, w: &Rational) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * w);
        }
    }

    fn mul_capped(&self, other: &SparsePolynomial, cap: usize) -> Result<SparsePolynomial> {
        let mut out = SparsePolynomial::zero(self.groups.clone());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
                if out.terms.len() > cap {
                    return Err(Error::TermExplosion(cap));
                }
            }
        }
        Ok(out)
    }
}

/// Expands `q_node` exactly with the default monomial cap.
pub fn expand(circuit: &Circuit, node: NodeId) -> Result<SparsePolynomial> {
    expand_with_cap(circuit, node, DEFAULT_TERM_CAP)
}

pub fn expand_root(circuit: &Circuit) -> Result<SparsePolynomial> {
    expand(circuit, circuit.root())
}

pub fn expand_with_cap(circuit: &Circuit, node: NodeId, cap: usize) -> Result<SparsePolynomial> {
    let groups = circuit.variable_groups();
    let mut needed = vec![false; node + 1];
    needed[node] = true;
    for id in (0..=node).rev() {
        if needed[id] {
            for c in circuit.node(id).kind.children() {
                needed[c] = true;
            }
        }
    }
    let mut polys: Vec<Option<SparsePolynomial>> = vec![None; node + 1];
    for id in 0..=node {
        if !needed[id] {
            continue;
        }
        let p = match &circuit.node(id).kind {
            NodeKind::Leaf(l) => SparsePolynomial::from_terms(groups.clone(), [(Monomial::var(*l), Rational::one())]),
            NodeKind::Constant(c) => SparsePolynomial::constant(groups.clone(), c.clone()),
            NodeKind::Sum(ch) => {
                let mut acc = SparsePolynomial::zero(groups.clone());
                for (c, w) in ch {
                    acc.scaled_add(polys[*c].as_ref().expect("children precede parents"), w);
                    if acc.len() > cap {
                        return Err(Error::TermExplosion(cap));
                    }
                }
                acc
            }
            NodeKind::Product(ch) => {
                let mut acc = SparsePolynomial::constant(groups.clone(), Rational::one());
                for c in ch {
                    acc = acc.mul_capped(polys[*c].as_ref().expect("children precede parents"), cap)?;
                }
                acc
            }
        };
        polys[id] = Some(p);
    }
    Ok(polys[node].take().expect("target computed"))
}

/// Decides `p == q` for multilinear polynomials by checking `p - q` vanishes on `{0,1}^ℓ`.
pub fn multilinear_identity_test(p: &SparsePolynomial, q: &SparsePolynomial) -> Result<bool> {
    if !p.is_multilinear() || !q.is_multilinear() {
        return Err(Error::NotMultilinear);
    }
    let vars: Vec<LeafId> = p.scope().union(&q.scope()).copied().collect();
    if vars.len() > IDENTITY_TEST_MAX_VARS {
        return Err(Error::TooManyVariables(vars.len(), IDENTITY_TEST_MAX_VARS));
    }
    let diff = p.sub(q);
    // Each monomial as a bitmask over `vars`; it evaluates to 1 exactly on supersets.
    let terms: Vec<(u32, &Rational)> = diff
        .terms
        .iter()
        .map(|(m, c)| {
            let mask = m.0.iter().fold(0u32, |acc, (l, _)| acc | 1 << vars.binary_search(l).expect("scope var"));
            (mask, c)
        })
        .collect();
    for point in 0u32..(1u32 << vars.len()) {
        let mut acc = Rational::zero();
        for (mask, c) in &terms {
            if point & mask == *mask {
                acc += *c;
            }
        }
        if !acc.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}
