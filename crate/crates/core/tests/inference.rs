mod common;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use spn_core::inference::{
    is_weight_normalized, marginalize, normalize_weights, partition_function, DistributionHandle, MarginalQuery,
    Sampler,
};
use spn_core::random::random_dc_spn;
use spn_core::rational::{self, Rational};
use spn_core::{Error, NodeKind};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::{all_assignments, dc, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn nested_integration_matches_joint_integration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=5);
        let c = random_dc_spn(&mut r, &dc(n, 3, 30)).unwrap();
        let mut vars: Vec<usize> = (0..n).collect();
        vars.shuffle(&mut r);
        let split = r.gen_range(0..=n);
        let cut = r.gen_range(split..=n);
        let (i_vars, j_vars, rest) = (&vars[..split], &vars[split..cut], &vars[cut..]);
        let random_subset = |r: &mut rand_chacha::ChaCha8Rng, v: usize| {
            let dom = &c.variables()[v].domain;
            let k = r.gen_range(1..=dom.len());
            dom.choose_multiple(r, k).cloned().collect::<Vec<Rational>>()
        };
        let mut inner = MarginalQuery::default();
        for &v in i_vars {
            inner.integrate_over.insert(v, random_subset(&mut r, v));
        }
        for &v in rest {
            let dom = &c.variables()[v].domain;
            inner.fixed.insert(v, dom[r.gen_range(0..dom.len())].clone());
        }
        let outer: BTreeMap<usize, Vec<Rational>> = j_vars.iter().map(|&v| (v, random_subset(&mut r, v))).collect();
        // nested: sum the inner marginal over the outer grid of J
        let mut nested = Rational::zero();
        let grid: usize = outer.values().map(Vec::len).product();
        for mut p in 0..grid {
            let mut q = inner.clone();
            for (v, s) in &outer {
                q.fixed.insert(*v, s[p % s.len()].clone());
                p /= s.len();
            }
            nested += marginalize(&c, &q, false).unwrap();
        }
        let joint = marginalize(&c, &joint_query(&inner, &outer), false).unwrap();
        prop_assert_eq!(&nested, &joint);
        let composed = {
            let mut q = inner.clone();
            for v in outer.keys() {
                q.fixed.insert(*v, Rational::zero());
            }
            q.compose(&outer).unwrap()
        };
        prop_assert_eq!(marginalize(&c, &composed, false).unwrap(), joint);
    }

    #[test]
    fn normalization_keeps_the_density(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let c = random_dc_spn(&mut r, &dc(n, 3, 30)).unwrap();
        let norm = normalize_weights(&c).unwrap();
        prop_assert!(is_weight_normalized(&norm));
        for node in norm.nodes() {
            if let NodeKind::Sum(ch) = &node.kind {
                prop_assert_eq!(ch.iter().fold(Rational::zero(), |a, (_, w)| a + w), Rational::one());
            }
        }
        prop_assert_eq!(partition_function(&norm).unwrap(), Rational::one());
        let before = DistributionHandle::new(c.clone()).unwrap();
        for x in all_assignments(&c) {
            prop_assert_eq!(before.density_indexed(&x), norm.evaluate_indexed(&x));
        }
    }
}

/// `inner` with the variables of `outer` integrated instead of fixed.
fn joint_query(inner: &MarginalQuery, outer: &BTreeMap<usize, Vec<Rational>>) -> MarginalQuery {
    let mut q = inner.clone();
    for (v, s) in outer {
        q.fixed.remove(v);
        q.integrate_over.insert(*v, s.clone());
    }
    q
}

#[test]
fn marginal_equals_grid_sum_of_evaluations() {
    let mut r = rng(5);
    for _ in 0..50 {
        let n = r.gen_range(1..=4);
        let c = random_dc_spn(&mut r, &dc(n, 3, 25)).unwrap();
        let mut q = MarginalQuery::default();
        let mut grid: Vec<Vec<usize>> = Vec::new();
        for v in 0..n {
            let k = c.variables()[v].domain.len();
            let mut idx: Vec<usize> = (0..k).collect();
            idx.shuffle(&mut r);
            idx.truncate(r.gen_range(1..=k));
            q.integrate_over.insert(v, idx.iter().map(|&i| c.variables()[v].domain[i].clone()).collect());
            grid.push(idx);
        }
        let want: Rational = all_assignments(&c)
            .into_iter()
            .filter(|x| x.iter().zip(&grid).all(|(xi, s)| s.contains(xi)))
            .map(|x| c.evaluate_indexed(&x))
            .sum();
        assert_eq!(marginalize(&c, &q, false).unwrap(), want);
    }
}

#[test]
fn sampler_matches_exact_density() {
    let mut r = rng(9);
    for trial in 0..4 {
        let n = 3 + trial;
        let c = normalize_weights(&random_dc_spn(&mut r, &dc(n, 2, 30)).unwrap()).unwrap();
        let sampler = Sampler::new(c.clone()).unwrap();
        let samples = 20_000;
        let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for _ in 0..samples {
            *counts.entry(sampler.sample_indexed(&mut r).unwrap()).or_default() += 1;
        }
        // pool cells with small expectation so the chi-square approximation holds
        let (mut chi2, mut cells, mut pool_e, mut pool_o) = (0.0, 0usize, 0.0, 0.0);
        for x in all_assignments(&c) {
            let p = rational::to_f64(&c.evaluate_indexed(&x));
            let o = *counts.get(&x).unwrap_or(&0) as f64;
            if p == 0.0 {
                assert_eq!(o, 0.0, "sampled a zero-density point");
                continue;
            }
            let e = p * samples as f64;
            if e < 5.0 {
                pool_e += e;
                pool_o += o;
            } else {
                chi2 += (o - e).powi(2) / e;
                cells += 1;
            }
        }
        if pool_e > 0.0 {
            chi2 += (pool_o - pool_e).powi(2) / pool_e;
            cells += 1;
        }
        if cells > 1 {
            let pval = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
            assert!(pval > 0.01, "n={n}: chi-square {chi2:.2} over {cells} cells, p = {pval:.4}");
        }
    }
}

#[test]
fn sampler_preconditions() {
    let c = random_dc_spn(&mut rng(1), &dc(3, 2, 20)).unwrap();
    if !is_weight_normalized(&c) {
        assert!(matches!(Sampler::new(c.clone()), Err(Error::NotNormalized)));
    }
    let norm = normalize_weights(&c).unwrap();
    let s = Sampler::new(norm).unwrap();
    let x = s.sample(&mut rng(2)).unwrap();
    assert_eq!(x.len(), 3);
}
