#![allow(dead_code)]

use std::collections::HashMap;
use std::hash::Hash;

use moran::families::{generate, Family};
use moran::graph::{Graph, MutantSet};
use moran::rational::to_f64;
use num_rational::BigRational;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn fam(f: Family) -> Graph {
    generate(f, None).unwrap().graph
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    generate(Family::RandomConnected { n, p }, Some(seed)).unwrap().graph
}

pub fn set(n: usize, vs: &[usize]) -> MutantSet {
    MutantSet::from_vertices(n, vs.iter().copied())
}

/// Empirical frequencies from raw counts.
pub fn frequencies<K: Eq + Hash + Clone>(counts: &HashMap<K, u64>, total: u64) -> HashMap<K, f64> {
    counts.iter().map(|(k, &c)| (k.clone(), c as f64 / total as f64)).collect()
}

/// Total variation distance between an exact law and observed counts.
pub fn total_variation<K: Eq + Hash + Clone>(exact: &[(K, BigRational)], counts: &HashMap<K, u64>, total: u64) -> f64 {
    let freq = frequencies(counts, total);
    let mut tv = 0.0;
    for (k, p) in exact {
        tv += (to_f64(p) - freq.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, f) in &freq {
        if !exact.iter().any(|(e, _)| e == k) {
            tv += f;
        }
    }
    tv / 2.0
}

/// Pearson chi-square p-value of observed counts against an exact law.
pub fn chi_square_p<K: Eq + Hash + Clone>(exact: &[(K, BigRational)], counts: &HashMap<K, u64>, total: u64) -> f64 {
    let support: Vec<_> = exact.iter().filter(|(_, p)| to_f64(p) > 0.0).collect();
    if counts.keys().any(|k| !support.iter().any(|(e, _)| e == k)) {
        return 0.0;
    }
    if support.len() < 2 {
        return 1.0;
    }
    let stat: f64 = support
        .iter()
        .map(|(k, p)| {
            let e = to_f64(p) * total as f64;
            let o = counts.get(k).copied().unwrap_or(0) as f64;
            (o - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((support.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// Binomial standard deviation of a frequency over `runs` trials.
pub fn binomial_sigma(p: f64, runs: u64) -> f64 {
    (p * (1.0 - p) / runs as f64).sqrt()
}
