use proptest::prelude::*;
use remlab_core::analytic_grem::{
    beta_ladder, exp_ladder, grem_curve, grem_energy, grem_variational, recover_params, weighted_gaussian_rem, GremSpec, RecoveryFamily,
};
use remlab_core::analytic_rem::{rem_gaussian, rem_variational, Objective, RemModel};
use remlab_core::numeric::LN2;
use remlab_core::RateFunction;

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
    let n = p.len();
    let head: f64 = p[..n - 1].iter().sum();
    p[n - 1] = 1.0 - head;
    p
}

fn grem_inputs(max_levels: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_levels).prop_flat_map(|n| {
        (prop::collection::vec(0.1f64..1.0, n), prop::collection::vec(0.1f64..3.0, n))
            .prop_map(|(w, a)| (normalize(&w), a))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ladder_is_strictly_increasing((p, a) in grem_inputs(4), gamma in 1.2f64..4.0) {
        let spec = GremSpec::uniform(p, a, gamma).unwrap();
        let ladder = beta_ladder(&spec).unwrap();
        prop_assert_eq!(ladder.betas.len(), ladder.ranks.len());
        prop_assert!(ladder.betas.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ladder.ranks.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*ladder.ranks.last().unwrap(), spec.n());
    }

    #[test]
    fn gaussian_curve_is_normalized_and_convex((p, a) in grem_inputs(4)) {
        let spec = GremSpec::uniform(p, a, 2.0).unwrap();
        let curve = grem_curve(&spec).unwrap();
        prop_assert!((curve.eval(0.0) - LN2).abs() < 1e-12);
        prop_assert!(curve.max_jump() < 1e-9);
        prop_assert!(curve.max_slope_jump() < 1e-7);
        let h = 0.01;
        for i in 1..300 {
            let b = i as f64 * h;
            let d2 = curve.eval(b + h) - 2.0 * curve.eval(b) + curve.eval(b - h);
            prop_assert!(d2 >= -1e-9);
        }
    }

    #[test]
    fn closed_form_matches_oracle((p, a) in grem_inputs(3), gamma in 1.3f64..3.5, beta in 0.05f64..3.0) {
        let spec = GremSpec::uniform(p, a, gamma).unwrap();
        let exact = grem_energy(&spec, beta).unwrap();
        let oracle = grem_variational(&spec, beta).unwrap();
        prop_assert!((exact - oracle).abs() < 1e-5, "exact {exact} oracle {oracle}");
    }

    #[test]
    fn exponential_closed_form_matches_oracle((p, a) in grem_inputs(3), beta in 0.05f64..3.0) {
        let spec = GremSpec::uniform(p, a, 1.0).unwrap();
        let exact = grem_energy(&spec, beta).unwrap();
        let oracle = grem_variational(&spec, beta).unwrap();
        prop_assert!((exact - oracle).abs() < 1e-5, "exact {exact} oracle {oracle}");
        let ladder = exp_ladder(&spec).unwrap();
        prop_assert!(ladder.betas.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gaussian_grem_never_exceeds_rem_with_pooled_weight((p, a) in grem_inputs(4), beta in 0.0f64..3.0) {
        let spec = GremSpec::uniform(p, a.clone(), 2.0).unwrap();
        let pooled: f64 = a.iter().map(|ai| ai * ai).sum::<f64>().sqrt();
        let rem = weighted_gaussian_rem(pooled, beta);
        prop_assert!(grem_energy(&spec, beta).unwrap() <= rem + 1e-12);
    }

    #[test]
    fn recovery_round_trips((p, a) in grem_inputs(4), gamma in 1.2f64..3.0) {
        let spec = GremSpec::uniform(p, a, gamma).unwrap();
        let ladder = beta_ladder(&spec).unwrap();
        prop_assume!(ladder.ranks.len() == spec.n() && ladder.betas.iter().all(|b| b.is_finite()));
        let curve = grem_curve(&spec).unwrap();
        let back = recover_params(&curve, RecoveryFamily::Gamma(gamma)).unwrap();
        for i in 0..spec.n() {
            prop_assert!((back.p[i] - spec.p[i]).abs() < 1e-8);
            prop_assert!((back.a[i] - spec.a[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn weibull_rem_matches_oracle(gamma in 0.3f64..4.0, beta in 0.0f64..3.0) {
        let exact = RemModel::Weibull { gamma }.energy(beta).unwrap();
        let oracle = rem_variational(&RateFunction::PowerGamma { gamma }, Objective::Identity, beta);
        prop_assert!((exact - oracle).abs() < 1e-6, "exact {exact} oracle {oracle}");
    }

    #[test]
    fn level_sets_hit_the_budget(theta in 0.1f64..3.0, prob in 0.05f64..0.95) {
        for rf in [RateFunction::Poisson { theta }, RateFunction::Binomial { p: prob }, RateFunction::Gaussian] {
            if let Some((lo, hi)) = rf.level_set(LN2) {
                for x in [lo, hi] {
                    let (d0, d1) = rf.domain();
                    if x > d0 && x < d1 {
                        prop_assert!((rf.eval(x) - LN2).abs() < 1e-8, "{rf:?} at {x}: {}", rf.eval(x));
                    }
                }
            }
        }
    }
}

#[test]
fn gaussian_rem_is_the_single_level_grem() {
    let spec = GremSpec::uniform(vec![1.0], vec![1.0], 2.0).unwrap();
    for i in 0..=30 {
        let b = i as f64 * 0.1;
        assert!((grem_energy(&spec, b).unwrap() - rem_gaussian(b)).abs() < 1e-14);
    }
}

#[test]
fn zero_trailing_weight_leaves_energy_unchanged() {
    let base = GremSpec::uniform(vec![0.4, 0.6], vec![1.2, 0.7], 2.0).unwrap();
    let padded = GremSpec::uniform(vec![0.4, 0.6 - 0.25, 0.25], vec![1.2, 0.7, 0.0], 2.0).unwrap();
    let ladder = beta_ladder(&padded).unwrap();
    assert_eq!(*ladder.betas.last().unwrap(), f64::INFINITY);
    for i in 0..=20 {
        let b = i as f64 * 0.15;
        let e = grem_energy(&padded, b).unwrap();
        let o = grem_variational(&padded, b).unwrap();
        assert!((e - o).abs() < 1e-5, "beta {b}: {e} vs {o}");
        assert!(e <= grem_energy(&base, b).unwrap() + 1e-12);
    }
}

#[test]
fn rate_descriptor_round_trips() {
    let rates = vec![
        RateFunction::Gaussian,
        RateFunction::PowerGamma { gamma: 1.7 },
        RateFunction::Binomial { p: 0.3 },
        RateFunction::negated(RateFunction::Poisson { theta: 2.0 }),
        RateFunction::truncated(RateFunction::TwoSidedExponential, 0.5).unwrap(),
        RateFunction::piecewise(RateFunction::Gaussian, RateFunction::TwoSidedExponential).unwrap(),
    ];
    for r in rates {
        let json = serde_json::to_string(&r).unwrap();
        let back: RateFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r, "{json}");
    }
}
