mod common;

use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;
use spn_core::compilers::build_equal;
use spn_core::linalg::{exact_rank, rational_rank, RationalMatrix};
use spn_core::random::{approximate_equal_matrix, random_dc_spn, random_perturbation};
use spn_core::rational::{frac, int, Rational};
use spn_core::separation::{
    audit_perturbation, binarize_products, circuit_comm_matrix, comm_matrix, decompose, depth3_report, Partition,
};
use spn_core::structure::{check_complete, check_decomposable};

use common::{all_assignments, dc, rng};

fn small_rational() -> impl Strategy<Value = Rational> {
    (-4i64..=4, 1i64..=3).prop_map(|(n, d)| frac(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn two_eliminations_agree(rows in 1usize..9, cols in 1usize..9, seed in any::<u64>()) {
        let mut r = rng(seed);
        // low-rank structure is more interesting than generic full rank
        let k = r.gen_range(0..=rows.min(cols));
        let mut m = RationalMatrix::zeros(rows, cols);
        for _ in 0..k {
            let u: Vec<Rational> = (0..rows).map(|_| frac(r.gen_range(-3..=3), r.gen_range(1..=4))).collect();
            let v: Vec<Rational> = (0..cols).map(|_| frac(r.gen_range(-3..=3), r.gen_range(1..=4))).collect();
            m = m.add(&RationalMatrix::outer(&u, &v));
        }
        let rank = exact_rank(&m);
        prop_assert_eq!(rank, rational_rank(&m));
        prop_assert_eq!(rank, exact_rank(&m.transpose()));
        // subadditivity: a sum of k rank-one matrices has rank at most k
        prop_assert!(rank <= k);
    }

    #[test]
    fn factorized_functions_have_rank_one(
        tables in prop::collection::vec((small_rational(), small_rational()), 2..9),
        seed in any::<u64>(),
    ) {
        prop_assume!(tables.iter().all(|(a, b)| !a.is_zero() || !b.is_zero()));
        let n = tables.len();
        let mut r = rng(seed);
        let a: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
        let p = Partition::new(n, &a).unwrap();
        let f = |x: &[usize]| {
            x.iter().zip(&tables).fold(int(1), |acc, (&b, (t0, t1))| acc * if b == 0 { t0 } else { t1 })
        };
        prop_assert_eq!(exact_rank(&comm_matrix(f, &p).unwrap()), 1);
    }

    #[test]
    fn perturbation_bound_holds_for_small_mass(k in 1usize..24, seed in any::<u64>()) {
        let mut r = rng(seed);
        // total absolute mass at most k/4
        let mut d = RationalMatrix::zeros(k, k);
        let mut left = frac(k as i64, 4);
        while left > Zero::zero() {
            let (i, j) = (r.gen_range(0..k), r.gen_range(0..k));
            let step = frac(r.gen_range(1..=4), 8).min(left.clone());
            let signed = if r.gen_bool(0.5) { step.clone() } else { -step.clone() };
            d.set(i, j, d.get(i, j) + signed);
            left -= step;
        }
        let audit = audit_perturbation(&d).unwrap();
        prop_assert!(audit.holds, "{:?}", audit);
        let audit = audit_perturbation(&random_perturbation(&mut r, k)).unwrap();
        prop_assert!(audit.holds, "{:?}", audit);
    }
}

#[test]
fn equal_reports() {
    for (n, width) in [(8usize, 16usize), (12, 64)] {
        let c = build_equal(n).unwrap();
        let p = Partition::first_half(n);
        let report = depth3_report(&circuit_comm_matrix(&c, &p).unwrap(), &p);
        assert_eq!(report.min_second_layer_width, width);
    }
    // a partition that pairs each bit with its partner collapses the rank
    let p = Partition::new(8, &[0, 4, 1, 5]).unwrap();
    let m = circuit_comm_matrix(&build_equal(8).unwrap(), &p).unwrap();
    assert_eq!(exact_rank(&m), 1);
}

#[test]
fn approximate_equal_has_large_rank() {
    let mut r = rng(12);
    for half in 1..=6 {
        let big_n = 1usize << half;
        for adversarial in [false, true] {
            for _ in 0..5 {
                let m = approximate_equal_matrix(&mut r, half, adversarial);
                let diag: Rational = (0..big_n).map(|i| m.get(i, i).clone()).sum();
                let off = m.abs_sum() - &diag;
                assert!(off * int(4) <= m.abs_sum(), "off-diagonal mass exceeds 1/4");
                let rank = exact_rank(&m);
                assert!(12 * rank >= big_n, "half={half}: rank {rank} < N/12");
            }
        }
    }
}

#[test]
fn decompositions_reconstruct_random_circuits() {
    let mut r = rng(31);
    for _ in 0..60 {
        let n = r.gen_range(3..=8);
        let c = random_dc_spn(&mut r, &dc(n, 2, 25)).unwrap();
        let bin = binarize_products(&c).unwrap();
        assert!(check_decomposable(&bin).unwrap().holds && check_complete(&bin).unwrap().holds);
        assert!(bin.nodes().iter().all(|node| node.kind.children().len() <= 2 || node.kind.is_sum()));
        for x in all_assignments(&c) {
            assert_eq!(bin.evaluate_indexed(&x), c.evaluate_indexed(&x));
        }
        let d = decompose(&c).unwrap();
        assert!(d.invariant_violations().is_empty(), "{:?}", d.invariant_violations());
        assert!(d.terms.len() <= c.size() * c.size());
        for x in all_assignments(&c) {
            assert_eq!(d.evaluate_indexed(&x), c.evaluate_indexed(&x));
        }
        let json = d.to_json();
        assert_eq!(json["terms"].as_array().unwrap().len(), d.terms.len());
    }
}

#[test]
fn decomposition_of_ternary_variables() {
    let mut r = rng(8);
    for _ in 0..20 {
        let c = random_dc_spn(&mut r, &dc(5, 3, 25)).unwrap();
        let d = decompose(&c).unwrap();
        assert!(d.invariant_violations().is_empty());
        for x in all_assignments(&c) {
            assert_eq!(d.evaluate_indexed(&x), c.evaluate_indexed(&x));
        }
    }
}
