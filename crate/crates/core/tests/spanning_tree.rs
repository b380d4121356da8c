mod common;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::Rng;
use spn_core::rational::{int, Rational};
use spn_core::separation::decompose;
use spn_core::spanning_tree::{
    constraint_fraction, constraint_fraction_experiment, constraint_triangles, count_consistent_trees,
    count_dichromatic_triangles, count_triangles, density, derive_constraints, dichotomy_check, fisher_bound,
    fisher_bound_exact, fisher_holds, marginal, sample_tree, Color, Constraint, EdgeIndexing, PartialAssignment,
    Strategy as ConstraintStrategy,
};
use spn_core::structure::is_dc;
use spn_core::{Circuit, CircuitBuilder};

use common::rng;

/// A D&C SPN computing the spanning-tree indicator of `K_m`: one product of edge
/// indicators per spanning tree, summed.
fn spanning_tree_spn(m: usize) -> Circuit {
    let idx = EdgeIndexing::new(m).unwrap();
    let n = idx.n();
    let mut b = CircuitBuilder::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for _ in 0..n {
        let x = b.add_binary_variable();
        let (p, q) = (b.add_leaf_function(x, vec![int(0), int(1)]).unwrap(), b.add_leaf_function(x, vec![int(1), int(0)]).unwrap());
        pos.push(b.leaf(p));
        neg.push(b.leaf(q));
    }
    let mut trees = Vec::new();
    for v in 0..1u64 << n {
        let x: Vec<bool> = (0..n).map(|i| v >> i & 1 == 1).collect();
        if density(m, &x).unwrap() == 1 {
            trees.push(b.product((0..n).map(|i| if x[i] { pos[i] } else { neg[i] }).collect()));
        }
    }
    let root = b.plain_sum(trees);
    b.build(root).unwrap()
}

#[test]
fn spn_terms_obey_the_dichotomy() {
    let m = 4;
    let c = spanning_tree_spn(m);
    assert!(is_dc(&c).unwrap());
    for v in 0..64u64 {
        let x: Vec<usize> = (0..6).map(|i| (v >> i & 1) as usize).collect();
        let xb: Vec<bool> = x.iter().map(|&b| b == 1).collect();
        assert_eq!(c.evaluate_indexed(&x), int(i64::from(density(m, &xb).unwrap())));
    }
    let d = decompose(&c).unwrap();
    assert!(!d.terms.is_empty());
    let mut checked = 0;
    for t in &d.terms {
        let coloring: Vec<Color> = (0..6).map(|e| if t.y.contains(&e) { Color::Red } else { Color::Blue }).collect();
        for tri in constraint_triangles(m, &coloring).unwrap() {
            let out = dichotomy_check(m, &coloring, &t.g, &t.h, [tri.a, tri.b, tri.c]).unwrap();
            assert!(out.not_both_holds || out.not_c_holds, "{out:?}");
            assert!(out.counterexample.is_none());
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn adversarial_tables_give_a_counterexample() {
    use Color::*;
    let m = 4;
    let coloring = vec![Red, Red, Blue, Red, Blue, Blue];
    let red: Vec<usize> = (0..6).filter(|&e| coloring[e] == Red).collect();
    let blue: Vec<usize> = (0..6).filter(|&e| coloring[e] == Blue).collect();
    let tri = constraint_triangles(m, &coloring).unwrap()[0];
    let g: Vec<Rational> = (0..1usize << red.len()).map(|i| int(i64::from(i != 0))).collect();
    let h: Vec<Rational> = (0..1usize << blue.len()).map(|i| int(i64::from(i != 0))).collect();
    let out = dichotomy_check(m, &coloring, &g, &h, [tri.a, tri.b, tri.c]).unwrap();
    let (x1, x2) = out.counterexample.expect("no counterexample");
    assert!(x1[tri.a] && x1[tri.b] && x2[tri.c]);
}

#[test]
fn counting_identities() {
    for m in 2..=9usize {
        let want: BigInt = num_traits::Pow::pow(BigInt::from(m), m - 2);
        assert_eq!(count_consistent_trees(m, &PartialAssignment::new()).unwrap(), want);
    }
    for m in 4..=8usize {
        let total = count_consistent_trees(m, &PartialAssignment::new()).unwrap();
        for e in 0..m * (m - 1) / 2 {
            let a = count_consistent_trees(m, &PartialAssignment::from([(e, true)])).unwrap();
            let b = count_consistent_trees(m, &PartialAssignment::from([(e, false)])).unwrap();
            assert_eq!(a + b, total);
        }
    }
    assert_eq!(marginal(4, &PartialAssignment::from([(0, true)])).unwrap(), Rational::new(1.into(), 2.into()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn counts_match_enumeration(m in 3usize..=5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = m * (m - 1) / 2;
        let mut partial = PartialAssignment::new();
        for e in 0..n {
            match r.gen_range(0..5) {
                0 => { partial.insert(e, true); }
                1 => { partial.insert(e, false); }
                _ => {}
            }
        }
        let mut brute = 0u64;
        for v in 0..1u64 << n {
            let x: Vec<bool> = (0..n).map(|i| v >> i & 1 == 1).collect();
            if partial.iter().all(|(&e, &p)| x[e] == p) && density(m, &x).unwrap() == 1 {
                brute += 1;
            }
        }
        prop_assert_eq!(count_consistent_trees(m, &partial).unwrap(), BigInt::from(brute));
    }

    #[test]
    fn triangle_counts_partition_all_triangles(m in 3usize..=20, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = m * (m - 1) / 2;
        let coloring: Vec<Color> = (0..n).map(|_| if r.gen_bool(0.5) { Color::Red } else { Color::Blue }).collect();
        let counts = count_dichromatic_triangles(m, &coloring).unwrap();
        prop_assert_eq!(counts.total, (m * (m - 1) * (m - 2) / 6) as u64);
        prop_assert_eq!(counts.monochromatic + counts.dichromatic, counts.total);
        prop_assert_eq!(constraint_triangles(m, &coloring).unwrap().len() as u64, counts.dichromatic);
        let red: Vec<bool> = coloring.iter().map(|&c| c == Color::Red).collect();
        let blue: Vec<bool> = red.iter().map(|b| !b).collect();
        prop_assert_eq!(count_triangles(m, &red).unwrap() + count_triangles(m, &blue).unwrap(), counts.monochromatic);
    }

    #[test]
    fn fisher_test_matches_float_bound(t in 0u64..2000, e in 0u64..2000) {
        let f = fisher_bound(e);
        // away from the boundary the float formula decides the same way
        if (t as f64 - f).abs() > 1e-6 {
            prop_assert_eq!(fisher_holds(t, e), (t as f64) <= f);
        }
        if let Some(exact) = fisher_bound_exact(e) {
            prop_assert!((exact.to_f64().unwrap() - f).abs() < 1e-9);
        }
    }
}

#[test]
fn sampled_trees_are_spanning_and_unbiased() {
    let mut r = rng(21);
    let m = 6;
    let idx = EdgeIndexing::new(m).unwrap();
    let samples = 10_000;
    let mut hits = vec![0u64; idx.n()];
    for _ in 0..samples {
        let t = sample_tree(m, &mut r).unwrap();
        assert_eq!(t.iter().filter(|&&b| b).count(), m - 1);
        assert_eq!(density(m, &t).unwrap(), 1);
        for (h, &b) in hits.iter_mut().zip(&t) {
            *h += u64::from(b);
        }
    }
    for (e, &h) in hits.iter().enumerate() {
        let p = marginal(m, &PartialAssignment::from([(e, true)])).unwrap().to_f64().unwrap();
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        assert!(((h as f64 / samples as f64) - p).abs() <= 5.0 * sigma, "edge {e}");
    }
}

#[test]
fn fraction_experiments() {
    let mut r = rng(4);
    let report = constraint_fraction(4, &[Constraint::Not { c: 0 }], 16_000, &mut r).unwrap();
    let sigma = (0.25f64 / 16_000.0).sqrt();
    assert!((report.fraction - 0.5).abs() < 5.0 * sigma);

    let m = 12;
    let coloring = spn_core::random::random_balanced_coloring(&mut r, m).unwrap();
    let constraints = derive_constraints(m, &coloring, ConstraintStrategy::NotBoth).unwrap();
    let report = constraint_fraction_experiment(m, &coloring, ConstraintStrategy::NotBoth, 2000, &mut r).unwrap();
    assert_eq!(report.constraints, constraints.len());
    assert!(report.bound > 0.0 && report.bound <= 1.0);
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for c in derive_constraints(m, &coloring, ConstraintStrategy::NotC).unwrap() {
        *tally.entry(match c { Constraint::Not { .. } => "not", Constraint::NotBoth { .. } => "both" }).or_default() += 1;
    }
    assert_eq!(tally.get("not"), Some(&constraints.len()));
}
