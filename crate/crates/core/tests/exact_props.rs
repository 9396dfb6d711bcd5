mod common;

use common::{fam, random_graph};
use moran::exact::{
    fixation_probability_exact, one_step_expected_change, solve_fixation, transition_distribution, PotentialKind, Start,
};
use moran::families::Family;
use moran::graph::MutantSet;
use moran::potential::{is_valid_for, ProcessConstants, WeightFunction};
use moran::rational::{int, rat};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn transitions_sum_to_one(n in 2usize..=9, seed in any::<u64>(), mask in any::<u64>(), num in 1i64..12, den in 1i64..6) {
        let g = random_graph(n, 0.4, seed);
        let full = (1u64 << n) - 1;
        let mask = mask & full;
        prop_assume!(mask != 0 && mask != full);
        let s = MutantSet::from_mask(n, mask);
        let d = transition_distribution(&g, &rat(num, den), &s).unwrap();
        let total: BigRational = d.iter().map(|(_, p)| p).sum();
        prop_assert_eq!(total, int(1));
        for (t, _) in &d {
            let diff = (t.to_mask().unwrap() ^ mask).count_ones();
            prop_assert!(diff <= 1);
        }
    }

    #[test]
    fn weighted_potential_submartingale_when_valid(seed in any::<u64>(), weights in proptest::collection::vec(0i64..5, 7), r in prop_oneof![Just(rat(3, 2)), Just(int(2)), Just(int(3))]) {
        prop_assume!(weights.iter().any(|&w| w > 0));
        let g = random_graph(7, 0.45, seed);
        let f = WeightFunction::new(&g, weights.iter().map(|&w| int(w)).collect()).unwrap();
        let consts = ProcessConstants::new(r.clone()).unwrap();
        for mask in 1u64..127 {
            let x = MutantSet::from_mask(7, mask);
            if !is_valid_for(&g, &consts, &f, &x).unwrap().valid {
                continue;
            }
            let add = one_step_expected_change(&g, &r, &x, PotentialKind::PhiWeighted(&f)).unwrap();
            prop_assert!(add.exact().unwrap() >= &BigRational::zero());
            let mult = one_step_expected_change(&g, &r, &x, PotentialKind::PsiWeighted(&f)).unwrap();
            prop_assert!(mult.to_f64() <= 1e-9);
        }
    }
}

#[test]
fn fixation_increases_with_fitness() {
    for seed in 0..4 {
        let g = random_graph(7, 0.4, seed);
        let mut prev = 0.0;
        for r in [rat(1, 3), rat(1, 2), int(1), rat(3, 2), int(2), int(4)] {
            let f = fixation_probability_exact(&g, &r, &Start::Uniform).unwrap();
            assert!(f >= prev - 1e-12);
            prev = f;
        }
    }
}

#[test]
fn larger_start_sets_fix_more_often() {
    let g = random_graph(8, 0.35, 9);
    let sol = solve_fixation(&g, &int(2)).unwrap();
    for mask in 0u64..256 {
        for v in 0..8 {
            let bigger = mask | 1 << v;
            assert!(sol.by_mask(bigger) + 1e-12 >= *sol.by_mask(mask));
        }
    }
}

#[test]
fn gauss_seidel_range_matches_closed_form() {
    let k = fam(Family::Complete { n: 13 });
    let r = int(2);
    let f = fixation_probability_exact(&k, &r, &Start::Uniform).unwrap();
    let expect = (1.0 - 0.5) / (1.0 - 0.5f64.powi(13));
    assert!((f - expect).abs() < 1e-10, "{f} vs {expect}");
}
