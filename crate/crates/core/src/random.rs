//! Seeded generators for circuits, formulas, colorings and matrices used by the
//! test suites and the CLI.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{Circuit, CircuitBuilder};
use crate::dimacs::Cnf;
use crate::linalg::RationalMatrix;
use crate::rational::{frac, int, Rational};
use crate::spanning_tree::{Color, Coloring, EdgeIndexing};
use crate::structure::prune_degenerate;
use crate::{Error, LeafId, NodeId, Result, VarId};

/// Shape of [`random_dc_spn`].
#[derive(Clone, Debug)]
pub struct DcConfig {
    pub num_vars: usize,
    /// Domains have between 2 and `max_domain` values.
    pub max_domain: usize,
    pub max_size: usize,
    pub leaves_per_var: usize,
    /// Allow zero entries in leaf tables.
    pub zero_entries: bool,
    /// Let sum children range over random subsets of the sum's scope, giving
    /// decomposable circuits that are usually not complete.
    pub incomplete_sums: bool,
}

impl DcConfig {
    pub fn binary(num_vars: usize, max_size: usize) -> Self {
        DcConfig { num_vars, max_domain: 2, max_size, leaves_per_var: 2, zero_entries: true, incomplete_sums: false }
    }
}

fn random_weight<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    [int(1), int(2), int(3), frac(1, 2), frac(1, 3), frac(2, 5)].choose(rng).unwrap().clone()
}

fn random_table<R: Rng + ?Sized>(rng: &mut R, len: usize, zero_entries: bool) -> Vec<Rational> {
    let lo = if zero_entries { 0 } else { 1 };
    loop {
        let t: Vec<Rational> = (0..len).map(|_| int(rng.gen_range(lo..=4))).collect();
        if t.iter().any(|v| *v != int(0)) {
            return t;
        }
    }
}

fn add_variables<R: Rng + ?Sized>(rng: &mut R, b: &mut CircuitBuilder, n: usize, max_domain: usize) -> Result<()> {
    for _ in 0..n {
        let k = rng.gen_range(2..=max_domain.max(2));
        b.add_variable((0..k as i64).map(int).collect())?;
    }
    Ok(())
}

struct DcGen<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    incomplete: bool,
    b: CircuitBuilder,
    leaves: Vec<Vec<LeafId>>,
    leaf_nodes: BTreeMap<LeafId, NodeId>,
    built: BTreeMap<Vec<VarId>, Vec<NodeId>>,
}

impl<R: Rng + ?Sized> DcGen<'_, R> {
    fn leaf(&mut self, v: VarId) -> NodeId {
        let f = *self.leaves[v].choose(self.rng).unwrap();
        if let Some(&id) = self.leaf_nodes.get(&f) {
            return id;
        }
        let id = self.b.leaf(f);
        self.leaf_nodes.insert(f, id);
        id
    }

    fn sum_scope(&mut self, vars: &[VarId]) -> Vec<VarId> {
        if !self.incomplete || self.rng.gen_bool(0.5) {
            return vars.to_vec();
        }
        let keep = self.rng.gen_range(1..=vars.len());
        let mut sub: Vec<VarId> = vars.choose_multiple(self.rng, keep).copied().collect();
        sub.sort_unstable();
        sub
    }

    fn build(&mut self, vars: &[VarId], depth: i32) -> NodeId {
        if let Some(existing) = self.built.get(vars) {
            if self.rng.gen_bool(0.3) {
                return *existing.choose(self.rng).unwrap();
            }
        }
        let id = if vars.len() == 1 {
            if self.leaves[vars[0]].len() > 1 && self.rng.gen_bool(0.4) {
                let (l1, l2) = (self.leaf(vars[0]), self.leaf(vars[0]));
                let (w1, w2) = (random_weight(self.rng), random_weight(self.rng));
                if l1 == l2 {
                    l1
                } else {
                    self.b.sum(vec![(l1, w1), (l2, w2)])
                }
            } else {
                self.leaf(vars[0])
            }
        } else if self.rng.gen_bool(0.35 * 0.6f64.powi(depth)) {
            let (s1, s2) = (self.sum_scope(vars), self.sum_scope(vars));
            let (c1, c2) = (self.build(&s1, depth + 1), self.build(&s2, depth + 1));
            if c1 == c2 {
                c1
            } else {
                let (w1, w2) = (random_weight(self.rng), random_weight(self.rng));
                self.b.sum(vec![(c1, w1), (c2, w2)])
            }
        } else {
            let mut shuffled = vars.to_vec();
            shuffled.shuffle(self.rng);
            let parts = if vars.len() >= 3 && self.rng.gen_bool(0.3) { 3 } else { 2 };
            let mut cuts: Vec<usize> = (1..vars.len()).collect();
            cuts.shuffle(self.rng);
            let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
            cuts.sort_unstable();
            cuts.push(vars.len());
            let mut start = 0;
            let mut children = Vec::new();
            for c in cuts {
                let mut part = shuffled[start..c].to_vec();
                part.sort_unstable();
                children.push(self.build(&part, depth + 1));
                start = c;
            }
            self.b.product(children)
        };
        self.built.entry(vars.to_vec()).or_default().push(id);
        id
    }
}

fn dc_attempt<R: Rng + ?Sized>(rng: &mut R, cfg: &DcConfig) -> Result<Circuit> {
    let mut b = CircuitBuilder::new();
    add_variables(rng, &mut b, cfg.num_vars, cfg.max_domain)?;
    let mut leaves = Vec::with_capacity(cfg.num_vars);
    for v in 0..cfg.num_vars {
        let k = b.variable(v).domain.len();
        let mut fs = Vec::new();
        for _ in 0..cfg.leaves_per_var.max(1) {
            let t = random_table(rng, k, cfg.zero_entries);
            fs.push(b.add_leaf_function(v, t)?);
        }
        leaves.push(fs);
    }
    let mut g = DcGen { rng, incomplete: cfg.incomplete_sums, b, leaves, leaf_nodes: BTreeMap::new(), built: BTreeMap::new() };
    let all: Vec<VarId> = (0..cfg.num_vars).collect();
    let root = g.build(&all, 0);
    g.b.build_reachable(root)
}

/// A random decomposable SPN whose root scope is every variable, complete unless
/// `incomplete_sums` is set.
///
/// Product nodes split their scope into 2 or 3 random parts, sum nodes mix two
/// children over the same scope, and subcircuits over equal scopes are sometimes
/// shared. Falls back to a product of leaves if no draw fits within `max_size`.
pub fn random_dc_spn<R: Rng + ?Sized>(rng: &mut R, cfg: &DcConfig) -> Result<Circuit> {
    if cfg.num_vars == 0 {
        return Err(Error::Malformed("at least one variable is needed".into()));
    }
    for _ in 0..200 {
        let c = dc_attempt(rng, cfg)?;
        if c.size() <= cfg.max_size {
            return Ok(c);
        }
    }
    let mut b = CircuitBuilder::new();
    add_variables(rng, &mut b, cfg.num_vars, cfg.max_domain)?;
    let mut nodes = Vec::new();
    for v in 0..cfg.num_vars {
        let t = random_table(rng, b.variable(v).domain.len(), cfg.zero_entries);
        let f = b.add_leaf_function(v, t)?;
        nodes.push(b.leaf(f));
    }
    let root = if nodes.len() == 1 { nodes[0] } else { b.product(nodes) };
    b.build(root)
}

/// Shape of [`random_monotone_circuit`].
#[derive(Clone, Debug)]
pub struct MonotoneConfig {
    pub max_vars: usize,
    pub max_domain: usize,
    pub max_size: usize,
}

/// A random monotone, pruned circuit of at most `max_size` nodes over non-trivial
/// variables. Sums and products take 2 or 3 earlier nodes with no regard to scope,
/// so most draws are neither decomposable nor complete.
pub fn random_monotone_circuit<R: Rng + ?Sized>(rng: &mut R, cfg: &MonotoneConfig) -> Result<Circuit> {
    loop {
        let n = rng.gen_range(1..=cfg.max_vars.max(1));
        let mut b = CircuitBuilder::new();
        add_variables(rng, &mut b, n, cfg.max_domain)?;
        let mut nodes = Vec::new();
        for v in 0..n {
            for _ in 0..rng.gen_range(1..=2) {
                let t = random_table(rng, b.variable(v).domain.len(), true);
                let f = b.add_leaf_function(v, t)?;
                nodes.push(b.leaf(f));
            }
        }
        if nodes.len() >= cfg.max_size {
            continue;
        }
        if rng.gen_bool(0.2) {
            nodes.push(b.constant(int(rng.gen_range(1..=2))));
        }
        let internal = rng.gen_range(1..=cfg.max_size.saturating_sub(nodes.len()).max(1));
        for _ in 0..internal {
            let fan = rng.gen_range(2..=3).min(nodes.len());
            // bias towards recent nodes so the result stays connected
            let mut picks: Vec<NodeId> = Vec::with_capacity(fan);
            while picks.len() < fan {
                let back = rng.gen_range(0..nodes.len().min(4));
                let choice = if rng.gen_bool(0.6) { nodes[nodes.len() - 1 - back] } else { *nodes.choose(rng).unwrap() };
                if !picks.contains(&choice) {
                    picks.push(choice);
                }
            }
            let id = if rng.gen_bool(0.5) {
                b.sum(picks.into_iter().map(|c| (c, random_weight(rng))).collect())
            } else {
                b.product(picks)
            };
            nodes.push(id);
        }
        let root = *nodes.last().unwrap();
        let c = prune_degenerate(&b.build_reachable(root)?)?;
        if c.size() <= cfg.max_size {
            return Ok(c);
        }
    }
}

/// Same structure with every leaf table redrawn from small non-negative integers.
pub fn randomize_leaf_tables<R: Rng + ?Sized>(rng: &mut R, circuit: &Circuit) -> Result<Circuit> {
    let (variables, mut leaves, nodes, root, extended) = circuit.clone().into_parts();
    for f in &mut leaves {
        f.table = random_table(rng, f.table.len(), true);
    }
    Circuit::from_parts(variables, leaves, nodes, root, extended)
}

/// `num_clauses` clauses over `num_vars` variables, each on `min(width, num_vars)` distinct variables.
pub fn random_cnf<R: Rng + ?Sized>(rng: &mut R, num_vars: usize, num_clauses: usize, width: usize) -> Cnf {
    let vars: Vec<i64> = (1..=num_vars as i64).collect();
    let clauses = (0..num_clauses)
        .map(|_| {
            vars.choose_multiple(rng, width.min(num_vars))
                .map(|&v| if rng.gen_bool(0.5) { v } else { -v })
                .collect()
        })
        .collect();
    Cnf { num_vars, clauses }
}

/// A coloring of `K_m` with `r` red edges, `r` uniform in `[⌈n/3⌉, ⌊2n/3⌋]`.
pub fn random_balanced_coloring<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<Coloring> {
    let n = EdgeIndexing::new(m)?.n();
    let r = rng.gen_range(n.div_ceil(3)..=2 * n / 3);
    let mut coloring: Coloring = (0..n).map(|i| if i < r { Color::Red } else { Color::Blue }).collect();
    coloring.shuffle(rng);
    Ok(coloring)
}

/// Each edge of `K_m` present independently with probability `p`.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, m: usize, p: f64) -> Result<Vec<bool>> {
    let n = EdgeIndexing::new(m)?.n();
    Ok((0..n).map(|_| rng.gen_bool(p)).collect())
}

/// A random `k × k` perturbation. Draws mix dense small entries, sparse large
/// entries, and partial cancellation of the identity's diagonal.
pub fn random_perturbation<R: Rng + ?Sized>(rng: &mut R, k: usize) -> RationalMatrix {
    let mut d = RationalMatrix::zeros(k, k);
    if k == 0 {
        return d;
    }
    let k2 = (k * k) as i64;
    match rng.gen_range(0..4) {
        0 => {
            let scale = rng.gen_range(1..=4 * k as i64);
            for i in 0..k {
                for j in 0..k {
                    d.set(i, j, frac(rng.gen_range(-8..=8), 8 * k2) * int(scale));
                }
            }
        }
        1 => {
            for _ in 0..rng.gen_range(1..=2 * k) {
                let (i, j) = (rng.gen_range(0..k), rng.gen_range(0..k));
                d.set(i, j, frac(rng.gen_range(-6..=6), rng.gen_range(1..=3)));
            }
        }
        2 => {
            for i in 0..k {
                if rng.gen_bool(0.5) {
                    d.set(i, i, int(-1));
                }
            }
        }
        _ => {
            // −I on a block plus a rank-one correction elsewhere
            let cut = rng.gen_range(0..=k);
            for i in 0..cut {
                d.set(i, i, int(-1));
            }
            let u: Vec<Rational> = (0..k).map(|_| frac(rng.gen_range(-3..=3), 4)).collect();
            d = d.add(&RationalMatrix::outer(&u, &u).scale(&frac(1, k as i64)));
        }
    }
    d
}

/// An unnormalized joint table over two halves of size `N = 2^half` shaped like
/// an approximation of EQUAL: diagonal entries in `[a/2, a]` and non-negative
/// off-diagonal mass at most a third of the diagonal mass (so at most 1/4 of the
/// total). The adversarial draw spends that mass on merging diagonal pairs into
/// all-equal 2×2 blocks, each of which lowers the rank by one.
pub fn approximate_equal_matrix<R: Rng + ?Sized>(rng: &mut R, half: usize, adversarial: bool) -> RationalMatrix {
    let big_n = 1usize << half;
    let a = 12i64;
    let mut m = RationalMatrix::zeros(big_n, big_n);
    let mut diag = 0i64;
    for i in 0..big_n {
        let d = if adversarial { a } else { rng.gen_range(a / 2..=a) };
        m.set(i, i, int(d));
        diag += d;
    }
    let mut budget = diag / 3;
    if adversarial {
        let mut order: Vec<usize> = (0..big_n).collect();
        order.shuffle(rng);
        for pair in order.chunks_exact(2) {
            if budget < 2 * a {
                break;
            }
            m.set(pair[0], pair[1], int(a));
            m.set(pair[1], pair[0], int(a));
            budget -= 2 * a;
        }
    } else if big_n > 1 {
        while budget > 0 {
            let (i, j) = (rng.gen_range(0..big_n), rng.gen_range(0..big_n));
            if i == j {
                continue;
            }
            let w = rng.gen_range(1..=budget.min(a));
            m.set(i, j, m.get(i, j) + int(w));
            budget -= w;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{is_dc, trivial_variables};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dc_generator_is_dc_with_full_scope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..8 {
            for _ in 0..20 {
                let c = random_dc_spn(&mut rng, &DcConfig { num_vars: n, max_domain: 3, max_size: 40, leaves_per_var: 2, zero_entries: true, incomplete_sums: false }).unwrap();
                assert!(is_dc(&c).unwrap());
                assert!(c.size() <= 40);
                assert_eq!(c.root_dependency_scope().len(), n);
            }
        }
    }

    #[test]
    fn monotone_generator_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = MonotoneConfig { max_vars: 4, max_domain: 3, max_size: 15 };
        let mut non_dc = 0;
        for _ in 0..100 {
            let c = random_monotone_circuit(&mut rng, &cfg).unwrap();
            assert!(c.size() <= 15 && !c.is_extended());
            assert!(trivial_variables(&c).is_empty());
            non_dc += usize::from(!is_dc(&c).unwrap());
        }
        assert!(non_dc > 20);
    }

    #[test]
    fn coloring_and_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_balanced_coloring(&mut rng, 20).unwrap();
        let r = c.iter().filter(|&&x| x == Color::Red).count();
        assert!(3 * r >= 190 && 3 * r <= 380);
        let m = approximate_equal_matrix(&mut rng, 3, false);
        let diag: Rational = (0..8).map(|i| m.get(i, i).clone()).sum();
        let total = m.abs_sum();
        assert!((&total - &diag) * int(3) <= diag);
        let cnf = random_cnf(&mut rng, 4, 6, 3);
        assert!(cnf.clauses.iter().all(|c| c.len() == 3));
    }
}
