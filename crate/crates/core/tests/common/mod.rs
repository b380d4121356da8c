#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spn_core::random::{DcConfig, MonotoneConfig};
use spn_core::Circuit;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every point of the circuit's domain grid as domain positions, first variable fastest.
pub fn all_assignments(c: &Circuit) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = c.variables().iter().map(|v| v.domain.len()).collect();
    let total: usize = sizes.iter().product();
    (0..total)
        .map(|mut p| {
            sizes
                .iter()
                .map(|&k| {
                    let x = p % k;
                    p /= k;
                    x
                })
                .collect()
        })
        .collect()
}

pub fn dc(num_vars: usize, max_domain: usize, max_size: usize) -> DcConfig {
    DcConfig { num_vars, max_domain, max_size, leaves_per_var: 2, zero_entries: true, incomplete_sums: false }
}

pub fn monotone(max_vars: usize, max_domain: usize, max_size: usize) -> MonotoneConfig {
    MonotoneConfig { max_vars, max_domain, max_size }
}
