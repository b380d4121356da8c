//! Compilers from fixed-permutation machines to D&C SPNs, the built-in machines,
//! and the depth-4 EQUAL circuit.
//!
//! A state-space machine (FPSSM) reads its inputs once in the order given by a
//! permutation, updating a state in `0..k` with per-variable transition tables, and
//! decodes the final state into a non-negative rational. A linear machine (FPLM)
//! instead multiplies a working vector by one non-negative `k × k` matrix per input.
//! One-hot state encoding turns the former into the latter, and each matrix-vector
//! product becomes one layer of `k²` products and `k` sums.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitBuilder};
use crate::rational::{self, int, Rational};
use crate::{Error, NodeId, Result, VarId};

/// Fixed-permutation state-space machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fpssm {
    /// `permutation[t]` is the variable read at step `t`.
    pub permutation: Vec<VarId>,
    pub domains: Vec<Vec<Rational>>,
    pub state_size: usize,
    pub initial_state: usize,
    /// `transitions[i][value_index][state]` is `g_i(value, state)`.
    pub transitions: Vec<Vec<Vec<usize>>>,
    /// `decode[state]` is `h(state)`.
    pub decode: Vec<Rational>,
}

/// Fixed-permutation linear model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fplm {
    pub permutation: Vec<VarId>,
    pub domains: Vec<Vec<Rational>>,
    pub dimension: usize,
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
    /// `matrices[i][value_index][row][col]` is `T_i(value)`.
    pub matrices: Vec<Vec<Vec<Vec<Rational>>>>,
}

fn check_permutation(permutation: &[VarId], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if permutation.len() != n {
        return Err(Error::BadMachine(format!("permutation has {} entries for {n} inputs", permutation.len())));
    }
    for &p in permutation {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::BadMachine(format!("permutation is not a bijection on 0..{n}")));
        }
    }
    Ok(())
}

fn check_domains(domains: &[Vec<Rational>]) -> Result<()> {
    for (i, d) in domains.iter().enumerate() {
        crate::circuit::VariableSpec::new(i, d.clone())?;
    }
    Ok(())
}

fn value_indices(domains: &[Vec<Rational>], x: &[Rational]) -> Result<Vec<usize>> {
    if x.len() != domains.len() {
        return Err(Error::WrongLength { got: x.len(), expected: domains.len() });
    }
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            domains[i]
                .iter()
                .position(|d| d == v)
                .ok_or_else(|| Error::ValueOutsideDomain { var: i, value: rational::format(v) })
        })
        .collect()
}

impl Fpssm {
    pub fn n(&self) -> usize {
        self.domains.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        check_permutation(&self.permutation, n)?;
        check_domains(&self.domains)?;
        let k = self.state_size;
        if k == 0 || self.initial_state >= k {
            return Err(Error::BadMachine(format!("initial state {} not in 0..{k}", self.initial_state)));
        }
        if self.decode.len() != k || self.decode.iter().any(rational::is_negative) {
            return Err(Error::BadMachine("decode must give a non-negative value per state".into()));
        }
        if self.transitions.len() != n {
            return Err(Error::BadMachine(format!("{} transition functions for {n} inputs", self.transitions.len())));
        }
        for (i, g) in self.transitions.iter().enumerate() {
            if g.len() != self.domains[i].len() || g.iter().any(|row| row.len() != k || row.iter().any(|&s| s >= k)) {
                return Err(Error::BadMachine(format!("transition table of input {i} is malformed")));
            }
        }
        Ok(())
    }

    /// `h(g_{π(n)}(x_{π(n)}, … g_{π(1)}(x_{π(1)}, c)))` for `x` given as domain positions.
    pub fn eval_indexed(&self, x: &[usize]) -> Rational {
        let mut state = self.initial_state;
        for &i in &self.permutation {
            state = self.transitions[i][x[i]][state];
        }
        self.decode[state].clone()
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        Ok(self.eval_indexed(&value_indices(&self.domains, x)?))
    }
}

impl Fplm {
    pub fn n(&self) -> usize {
        self.domains.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        check_permutation(&self.permutation, n)?;
        check_domains(&self.domains)?;
        let k = self.dimension;
        let nonneg = |v: &[Rational]| v.iter().all(|x| !rational::is_negative(x));
        if self.a.len() != k || self.b.len() != k || !nonneg(&self.a) || !nonneg(&self.b) {
            return Err(Error::BadMachine(format!("a and b must be non-negative vectors of length {k}")));
        }
        if self.matrices.len() != n {
            return Err(Error::BadMachine(format!("{} matrix functions for {n} inputs", self.matrices.len())));
        }
        for (i, t) in self.matrices.iter().enumerate() {
            let ok = t.len() == self.domains[i].len()
                && t.iter().all(|m| m.len() == k && m.iter().all(|row| row.len() == k && nonneg(row)));
            if !ok {
                return Err(Error::BadMachine(format!("matrices of input {i} must be non-negative {k}x{k}")));
            }
        }
        Ok(())
    }

    /// `bᵀ T_{π(n)}(x_{π(n)}) ⋯ T_{π(1)}(x_{π(1)}) a` for `x` given as domain positions.
    pub fn eval_indexed(&self, x: &[usize]) -> Rational {
        let mut v = self.a.clone();
        for &i in &self.permutation {
            let t = &self.matrices[i][x[i]];
            v = t
                .iter()
                .map(|row| row.iter().zip(&v).fold(Rational::zero(), |acc, (m, e)| acc + m * e))
                .collect();
        }
        self.b.iter().zip(&v).fold(Rational::zero(), |acc, (b, e)| acc + b * e)
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        Ok(self.eval_indexed(&value_indices(&self.domains, x)?))
    }
}

/// One-hot simulation: `a = e_c`, `T_i(v) = [e_{g_i(v,0)} ⋯ e_{g_i(v,k-1)}]`, `b = h`.
pub fn fpssm_to_fplm(m: &Fpssm) -> Result<Fplm> {
    m.validate()?;
    let k = m.state_size;
    let unit = |s: usize| (0..k).map(|j| if j == s { Rational::one() } else { Rational::zero() }).collect::<Vec<_>>();
    let matrices = m
        .transitions
        .iter()
        .map(|g| {
            g.iter()
                .map(|g_v| {
                    (0..k)
                        .map(|r| (0..k).map(|c| if g_v[c] == r { Rational::one() } else { Rational::zero() }).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(Fplm {
        permutation: m.permutation.clone(),
        domains: m.domains.clone(),
        dimension: k,
        a: unit(m.initial_state),
        b: m.decode.clone(),
        matrices,
    })
}

/// Node count of [`fplm_to_spn`]: `n(2k² + k) + k + 1`.
pub fn fplm_spn_size(n: usize, k: usize) -> usize {
    n * (2 * k * k + k) + k + 1
}

/// Layered D&C SPN computing the same function as the FPLM.
///
/// The working vector starts as `k` constant nodes holding `a`. Step `t` reads
/// `x_i`, `i = π(t)`: for every cell `(r, c)` a leaf function of `x_i` tabulating
/// `T_i(·)[r][c]` is multiplied with component `c`, and component `r` of the new
/// vector is the unit-weight sum of the `k` products of row `r`. The output is a
/// sum over the final components with weights `b`.
pub fn fplm_to_spn(m: &Fplm) -> Result<Circuit> {
    m.validate()?;
    let k = m.dimension;
    let mut bld = CircuitBuilder::new();
    for d in &m.domains {
        bld.add_variable(d.clone())?;
    }
    let mut current: Vec<NodeId> = m.a.iter().map(|a| bld.constant(a.clone())).collect();
    for (t, &i) in m.permutation.iter().enumerate() {
        let mut leaves = Vec::with_capacity(k * k);
        for r in 0..k {
            for c in 0..k {
                let table = m.matrices[i].iter().map(|mat| mat[r][c].clone()).collect();
                let name = format!("T[{}]_{{{},{}}}(x_{})", t + 1, r + 1, c + 1, i + 1);
                let f = bld.add_named_leaf_function(i, name, table)?;
                leaves.push(bld.leaf(f));
            }
        }
        let mut next = Vec::with_capacity(k);
        for r in 0..k {
            let prods: Vec<NodeId> = (0..k).map(|c| bld.product(vec![leaves[r * k + c], current[c]])).collect();
            next.push(bld.plain_sum(prods));
        }
        current = next;
    }
    let root = bld.sum(current.into_iter().zip(m.b.iter().cloned()).collect());
    bld.build(root)
}

/// FPSSM → FPLM → SPN.
pub fn compile_fpssm(m: &Fpssm) -> Result<Circuit> {
    fplm_to_spn(&fpssm_to_fplm(m)?)
}

fn binary_domains(n: usize) -> Vec<Vec<Rational>> {
    vec![vec![int(0), int(1)]; n]
}

/// Counter over binary inputs: the state is the number of ones read, modulo `k`.
fn counter(n: usize, k: usize, decode: Vec<Rational>) -> Fpssm {
    let step: Vec<Vec<usize>> = vec![(0..k).collect(), (0..k).map(|s| (s + 1) % k).collect()];
    Fpssm {
        permutation: (0..n).collect(),
        domains: binary_domains(n),
        state_size: k,
        initial_state: 0,
        transitions: vec![step; n],
        decode,
    }
}

/// Parity of the input: two states, decoded as `(0, 1)`.
pub fn parity_machine(n: usize) -> Fpssm {
    counter(n, 2, vec![int(0), int(1)])
}

/// 1 iff at least half the inputs are 1; `n + 1` states counting ones.
pub fn majority_machine(n: usize) -> Fpssm {
    counter(n, n + 1, (0..=n).map(|s| if 2 * s >= n { int(1) } else { int(0) }).collect())
}

/// Number of ones; `n + 1` states decoded by the identity.
pub fn count_ones_machine(n: usize) -> Fpssm {
    counter(n, n + 1, (0..=n).map(|s| int(s as i64)).collect())
}

/// `1` iff the first half of a binary input equals the second half.
pub fn equal_function(x: &[usize]) -> bool {
    let h = x.len() / 2;
    x[..h] == x[h..]
}

/// The depth-4 D&C circuit for EQUAL on `n` (even) binary inputs.
///
/// Layer 1 holds the leaves `x_i` and `1 - x_i`; layer 2 the products
/// `x_i x_{i+n/2}` and `x̄_i x̄_{i+n/2}`; layer 3 one sum per pair; layer 4 the root
/// product. Size `3.5n + 1`.
pub fn build_equal(n: usize) -> Result<Circuit> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::OddEqual(n));
    }
    let mut b = CircuitBuilder::new();
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    for _ in 0..n {
        let x = b.add_binary_variable();
        pos.push(b.add_leaf_function(x, vec![int(0), int(1)])?);
        neg.push(b.add_leaf_function(x, vec![int(1), int(0)])?);
    }
    let pos: Vec<NodeId> = pos.into_iter().map(|f| b.leaf(f)).collect();
    let neg: Vec<NodeId> = neg.into_iter().map(|f| b.leaf(f)).collect();
    let h = n / 2;
    let mut pairs = Vec::with_capacity(n);
    for i in 0..h {
        pairs.push(b.product(vec![pos[i], pos[i + h]]));
        pairs.push(b.product(vec![neg[i], neg[i + h]]));
    }
    let sums: Vec<NodeId> = (0..h).map(|i| b.plain_sum(vec![pairs[2 * i], pairs[2 * i + 1]])).collect();
    let root = b.product(sums);
    b.build(root)
}

#[derive(Serialize, Deserialize)]
struct FpssmDoc {
    permutation: Vec<VarId>,
    domains: Vec<Vec<String>>,
    state_size: usize,
    initial_state: usize,
    transitions: Vec<Vec<Vec<usize>>>,
    decode: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FplmDoc {
    permutation: Vec<VarId>,
    domains: Vec<Vec<String>>,
    dimension: usize,
    a: Vec<String>,
    b: Vec<String>,
    matrices: Vec<Vec<Vec<Vec<String>>>>,
}

fn strs(v: &[Rational]) -> Vec<String> {
    v.iter().map(rational::format).collect()
}

fn rats(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| rational::parse(s)).collect()
}

impl Fpssm {
    pub fn to_json(&self) -> String {
        let doc = FpssmDoc {
            permutation: self.permutation.clone(),
            domains: self.domains.iter().map(|d| strs(d)).collect(),
            state_size: self.state_size,
            initial_state: self.initial_state,
            transitions: self.transitions.clone(),
            decode: strs(&self.decode),
        };
        serde_json::to_string_pretty(&doc).expect("machine documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FpssmDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let m = Fpssm {
            permutation: doc.permutation,
            domains: doc.domains.iter().map(|d| rats(d)).collect::<Result<_>>()?,
            state_size: doc.state_size,
            initial_state: doc.initial_state,
            transitions: doc.transitions,
            decode: rats(&doc.decode)?,
        };
        m.validate()?;
        Ok(m)
    }
}

impl Fplm {
    pub fn to_json(&self) -> String {
        let doc = FplmDoc {
            permutation: self.permutation.clone(),
            domains: self.domains.iter().map(|d| strs(d)).collect(),
            dimension: self.dimension,
            a: strs(&self.a),
            b: strs(&self.b),
            matrices: self
                .matrices
                .iter()
                .map(|t| t.iter().map(|m| m.iter().map(|r| strs(r)).collect()).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("machine documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FplmDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let matrices = doc
            .matrices
            .iter()
            .map(|t| t.iter().map(|m| m.iter().map(|r| rats(r)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let m = Fplm {
            permutation: doc.permutation,
            domains: doc.domains.iter().map(|d| rats(d)).collect::<Result<_>>()?,
            dimension: doc.dimension,
            a: rats(&doc.a)?,
            b: rats(&doc.b)?,
            matrices,
        };
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::is_dc;

    fn bits(v: usize, n: usize) -> Vec<usize> {
        (0..n).map(|i| v >> i & 1).collect()
    }

    #[test]
    fn builtin_machine_examples() {
        assert_eq!(parity_machine(3).eval(&[int(1), int(0), int(1)]).unwrap(), int(0));
        assert_eq!(majority_machine(3).eval(&[int(1), int(1), int(0)]).unwrap(), int(1));
        assert_eq!(count_ones_machine(4).eval(&[int(1), int(1), int(1), int(0)]).unwrap(), int(3));
        assert!(matches!(parity_machine(2).eval(&[int(2), int(0)]), Err(Error::ValueOutsideDomain { var: 0, .. })));
    }

    #[test]
    fn parity_matrices() {
        let l = fpssm_to_fplm(&parity_machine(3)).unwrap();
        let id = vec![vec![int(1), int(0)], vec![int(0), int(1)]];
        let swap = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        for t in &l.matrices {
            assert_eq!(t[0], id);
            assert_eq!(t[1], swap);
        }
    }

    #[test]
    fn identity_machine() {
        let m = Fpssm {
            permutation: vec![1, 0],
            domains: binary_domains(2),
            state_size: 3,
            initial_state: 2,
            transitions: vec![vec![(0..3).collect(); 2]; 2],
            decode: vec![int(0), int(0), int(7)],
        };
        let l = fpssm_to_fplm(&m).unwrap();
        for t in l.matrices.iter().flatten() {
            for (r, row) in t.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    assert_eq!(*v, if r == c { int(1) } else { int(0) });
                }
            }
        }
        for v in 0..4 {
            assert_eq!(l.eval_indexed(&bits(v, 2)), int(7));
        }
    }

    #[test]
    fn majority_chain_agrees_n9() {
        let m = majority_machine(9);
        let l = fpssm_to_fplm(&m).unwrap();
        for v in 0..512 {
            let x = bits(v, 9);
            assert_eq!(l.eval_indexed(&x), m.eval_indexed(&x));
        }
    }

    #[test]
    fn parity_spn_n4() {
        let c = compile_fpssm(&parity_machine(4)).unwrap();
        assert!(is_dc(&c).unwrap());
        assert_eq!(c.size(), fplm_spn_size(4, 2));
        for v in 0..16 {
            let x = bits(v, 4);
            assert_eq!(c.evaluate_indexed(&x), int((x.iter().sum::<usize>() % 2) as i64));
        }
    }

    #[test]
    fn scalar_chain_is_product() {
        let n = 3;
        let doms = vec![vec![int(0), int(2), frac_third()]; n];
        let m = Fplm {
            permutation: (0..n).collect(),
            domains: doms.clone(),
            dimension: 1,
            a: vec![int(1)],
            b: vec![int(1)],
            matrices: doms.iter().map(|d| d.iter().map(|v| vec![vec![v.clone()]]).collect()).collect(),
        };
        let c = fplm_to_spn(&m).unwrap();
        for v in 0..27usize {
            let x = [v % 3, v / 3 % 3, v / 9];
            let expect = x.iter().fold(int(1), |acc, &i| acc * &doms[0][i]);
            assert_eq!(c.evaluate_indexed(&x), expect);
        }
    }

    fn frac_third() -> Rational {
        rational::frac(1, 3)
    }

    #[test]
    fn equal_circuit() {
        let c = build_equal(2).unwrap();
        let vals: Vec<Rational> = (0..4).map(|v| c.evaluate_indexed(&bits(v, 2))).collect();
        assert_eq!(vals, vec![int(1), int(0), int(0), int(1)]);
        let c4 = build_equal(4).unwrap();
        assert_eq!(c4.evaluate_indexed(&[1, 0, 1, 0]), int(1));
        assert_eq!(c4.evaluate_indexed(&[1, 0, 0, 1]), int(0));
        let m = c4.metrics();
        assert_eq!((m.depth, m.size), (4, 15));
        assert!(is_dc(&c4).unwrap());
        assert!(matches!(build_equal(3), Err(Error::OddEqual(3))));
        assert!(matches!(build_equal(0), Err(Error::OddEqual(0))));
    }

    #[test]
    fn machine_json_round_trip() {
        let m = majority_machine(3);
        assert_eq!(Fpssm::from_json(&m.to_json()).unwrap(), m);
        let l = fpssm_to_fplm(&m).unwrap();
        assert_eq!(Fplm::from_json(&l.to_json()).unwrap(), l);
        let mut bad = m.clone();
        bad.permutation = vec![0, 0, 1];
        assert!(matches!(Fpssm::from_json(&bad.to_json()), Err(Error::BadMachine(_))));
    }
}
