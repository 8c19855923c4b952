use std::collections::BTreeMap;

use proptest::prelude::*;
use remlab_core::analytic_bk::{bk_chain, bk_energy_chain, bk_energy_min, block_tree_energy, pi_grem, BkSpec};
use remlab_core::analytic_grem::{grem_energy, weighted_gaussian_rem, GremSpec};
use remlab_core::external_field::{
    field_variational, rem_field_energy, rem_field_solution, word_grem_solve, FieldParams, Word, WordSpec,
};
use remlab_core::numeric::LN2;

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
    let n = p.len();
    let head: f64 = p[..n - 1].iter().sum();
    p[n - 1] = 1.0 - head;
    p
}

fn bk_inputs() -> impl Strategy<Value = BkSpec> {
    (2usize..=4).prop_flat_map(|n| {
        let subsets = (1u32 << n) - 1;
        (
            prop::collection::vec(0.1f64..1.0, n),
            prop::collection::btree_map(1u32..=subsets, 0.1f64..2.0, 1..6),
        )
            .prop_filter_map("weights must cover every symbol", move |(w, weights)| {
                let cover = weights.keys().fold(0, |m, k| m | k);
                (cover == subsets).then(|| BkSpec::gaussian(n, normalize(&w), weights).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chain_agrees_with_permutation_minimum(spec in bk_inputs(), beta in 0.0f64..3.0) {
        let min = bk_energy_min(&spec, beta).unwrap();
        let chain = bk_energy_chain(&spec, beta).unwrap();
        prop_assert!((min - chain).abs() < 1e-9, "min {min} chain {chain}");
    }

    #[test]
    fn chain_sets_increase(spec in bk_inputs()) {
        let ch = bk_chain(&spec).unwrap();
        prop_assert!(ch.betas.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ch.sets.windows(2).all(|w| w[0] & w[1] == w[0] && w[0] != w[1]));
        prop_assert_eq!(*ch.sets.last().unwrap(), spec.full());
    }

    #[test]
    fn adding_a_zero_weight_is_invisible(spec in bk_inputs(), beta in 0.0f64..3.0) {
        let mut padded = spec.clone();
        let missing = (1..=spec.full()).find(|k| !spec.weights.contains_key(k));
        prop_assume!(missing.is_some());
        padded.weights.insert(missing.unwrap(), 0.0);
        prop_assert_eq!(
            bk_energy_min(&spec, beta).unwrap().to_bits(),
            bk_energy_min(&padded, beta).unwrap().to_bits()
        );
    }

    #[test]
    fn field_energy_grows_with_field(a in 0.2f64..2.0, h in 0.0f64..1.5, dh in 0.01f64..0.5, beta in 0.0f64..3.0) {
        let lo = rem_field_energy(FieldParams::new(a, h).unwrap(), beta).unwrap();
        let hi = rem_field_energy(FieldParams::new(a, h + dh).unwrap(), beta).unwrap();
        prop_assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn field_closed_form_matches_oracle(a in 0.2f64..2.0, h in 0.0f64..1.5, beta in 0.0f64..3.0) {
        let fp = FieldParams::new(a, h).unwrap();
        let exact = rem_field_energy(fp, beta).unwrap();
        let oracle = field_variational(fp, beta).unwrap();
        prop_assert!((exact - oracle).abs() < 1e-6, "exact {exact} oracle {oracle}");
    }
}

#[test]
fn nested_subsets_reduce_to_a_grem() {
    let mut w = BTreeMap::new();
    w.insert(0b001, 1.1);
    w.insert(0b011, 0.6);
    w.insert(0b111, 0.4);
    let p = vec![0.3, 0.3, 0.4];
    let spec = BkSpec::gaussian(3, p.clone(), w).unwrap();
    let grem = pi_grem(&spec, &[0, 1, 2]).unwrap();
    assert_eq!(grem.p, p);
    for (got, want) in grem.a.iter().zip([1.1, 0.6, 0.4]) {
        assert!((got - want).abs() < 1e-15);
    }
    for i in 0..=30 {
        let b = i as f64 * 0.1;
        let direct = grem_energy(&GremSpec::uniform(p.clone(), vec![1.1, 0.6, 0.4], 2.0).unwrap(), b).unwrap();
        assert!((bk_energy_min(&spec, b).unwrap() - direct).abs() < 1e-12);
    }
}

#[test]
fn block_tree_with_equal_weights_is_a_rem() {
    for i in 0..=20 {
        let b = i as f64 * 0.15;
        let e = block_tree_energy(&[0.25, 0.75], &[0.8, 0.8], b).unwrap();
        assert!(e >= weighted_gaussian_rem(0.8, b) - 1e-12);
    }
}

#[test]
fn word_model_matches_the_bk_model_it_encodes() {
    let words = vec![
        Word { sym: vec![1], a: 0.9 },
        Word { sym: vec![2, 3], a: 0.7 },
        Word { sym: vec![1, 2, 3], a: 0.5 },
    ];
    let p = vec![0.2, 0.3, 0.5];
    let ws = WordSpec { n: 3, words: words.clone(), p: p.clone(), h: 0.0 };
    let weights: BTreeMap<u32, f64> = words.iter().map(|w| (w.mask(), w.a)).collect();
    let bk = BkSpec::gaussian(3, p, weights).unwrap();
    for i in 0..=12 {
        let b = i as f64 * 0.25;
        let sol = word_grem_solve(&ws, b).unwrap();
        let want = bk_energy_min(&bk, b).unwrap();
        assert!(sol.lower <= sol.upper + 1e-12);
        assert!((sol.energy - want).abs() < 1e-6, "beta {b}: {} vs {want}", sol.energy);
    }
}

#[test]
fn word_model_with_one_full_word_is_a_rem() {
    let ws = WordSpec { n: 2, words: vec![Word { sym: vec![1, 2], a: 1.3 }], p: vec![0.5, 0.5], h: 0.0 };
    for i in 0..=12 {
        let b = i as f64 * 0.25;
        let e = word_grem_solve(&ws, b).unwrap().energy;
        assert!((e - weighted_gaussian_rem(1.3, b)).abs() < 1e-7);
    }
}

#[test]
fn field_curve_is_continuous_across_the_frontier() {
    for (a, h) in [(1.0, 0.3), (0.5, 1.0), (1.5, 0.05)] {
        let fp = FieldParams::new(a, h).unwrap();
        let mut prev = rem_field_solution(fp, 0.0).unwrap();
        assert_eq!(prev.energy, LN2);
        let step = 1e-4;
        for i in 1..=30_000 {
            let b = i as f64 * step;
            let cur = rem_field_solution(fp, b).unwrap();
            assert!((cur.energy - prev.energy).abs() < 1e-3, "jump at beta {b}");
            prev = cur;
        }
    }
}
