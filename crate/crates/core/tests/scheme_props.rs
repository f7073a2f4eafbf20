use lfr_core::model::{random_instance, Rational, SystemConfig};
use lfr_core::schemes::{build_transforms, choose_regime, deliver, SchemePlan, Variant};
use lfr_core::verify::{feasible_variants, minimal_symbols, replay, run_trial};
use lfr_core::field::FieldMatrix;
use proptest::prelude::*;

/// `(K, mu, lambda, q)` with a library small enough for quick trials.
fn point() -> impl Strategy<Value = (usize, Rational, Rational, u64)> {
    (1usize..=7, 0i64..=12, 1i64..=12, 1i64..=3, 1i64..=14, prop::sample::select(vec![2u64, 3, 7]))
        .prop_filter_map("lambda <= 1 and small F", |(k, a, b, ln, ld, q)| {
            let mu = Rational::new(a.min(b), b);
            let lambda = Rational::new(ln.min(ld), ld);
            let f = minimal_symbols(k, mu, lambda).ok()?;
            (f <= 400).then_some((k, mu, lambda, q))
        })
}

fn config_of(k: usize, mu: Rational, lambda: Rational, q: u64) -> SystemConfig {
    let f = minimal_symbols(k, mu, lambda).unwrap() as usize;
    SystemConfig::from_fractions(k, mu, lambda, q, f).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_feasible_variant_decodes((k, mu, lambda, q) in point(), seed in any::<u64>()) {
        let config = config_of(k, mu, lambda, q);
        let variants = feasible_variants(&config);
        prop_assert!(variants.contains(&Variant::BaselineUnicast));
        prop_assert!(variants.contains(&Variant::BaselineFull));
        for v in variants {
            let (outcome, _) = run_trial(&config, v, seed).unwrap();
            prop_assert!(outcome.passed(), "{} at K={} mu={} lambda={}: {:?}", v, k, mu, lambda, outcome);
        }
    }

    #[test]
    fn interpolation_and_top_variants_are_exclusive((k, mu, lambda, q) in point()) {
        let config = config_of(k, mu, lambda, q);
        let rho1 = SchemePlan::new(&config, Variant::Rho1).is_ok();
        let rho2 = SchemePlan::new(&config, Variant::Rho2).is_ok();
        let rho3 = SchemePlan::new(&config, Variant::Rho3).is_ok();
        prop_assert_eq!(rho1, rho2);
        prop_assert_ne!(rho1, rho3);
    }

    #[test]
    fn transform_invariants((k, mu, lambda, q) in point(), seed in any::<u64>()) {
        let config = config_of(k, mu, lambda, q);
        prop_assume!(SchemePlan::new(&config, Variant::Rho2).is_ok());
        let plan = SchemePlan::new(&config, Variant::Rho2).unwrap();
        let (_, demands) = random_instance(&config, seed);
        for t in build_transforms(&plan.layout, &demands).unwrap() {
            let l = config.demand_rows;
            prop_assert_eq!(t.top + t.bottom, l);
            let bottom_a = t.transformed.block(t.top..l, 0..t.part1_width);
            prop_assert!(bottom_a.is_zero());
            prop_assert_eq!(t.transform.mat_mul(&t.inverse).unwrap(), FieldMatrix::identity(config.field(), l));
        }
    }

    #[test]
    fn dumps_replay_exactly((k, mu, lambda, q) in point(), seed in any::<u64>()) {
        let config = config_of(k, mu, lambda, q);
        for v in feasible_variants(&config) {
            let (outcome, dump) = run_trial(&config, v, seed).unwrap();
            let back = lfr_core::verify::ReplayDump::from_json(&dump.to_json()).unwrap();
            prop_assert_eq!(&back, &dump);
            prop_assert_eq!(replay(&back).unwrap(), outcome);
        }
    }
}

#[test]
fn transcript_length_ignores_demands() {
    let r = Rational::new;
    for (k, mu, lambda) in [(6, r(47, 72), r(1, 12)), (5, r(3, 10), r(1, 2)), (4, r(7, 8), r(1, 8)), (7, r(0, 1), r(1, 7))] {
        let config = config_of(k, mu, lambda, 3);
        for v in feasible_variants(&config) {
            let plan = SchemePlan::new(&config, v).unwrap();
            let lengths: Vec<usize> = (0..50)
                .map(|seed| {
                    let (w, d) = random_instance(&config, seed);
                    deliver(&plan, &config, &d, &w).unwrap().len()
                })
                .collect();
            assert!(lengths.windows(2).all(|p| p[0] == p[1]), "{v}: {lengths:?}");
        }
    }
}

#[test]
fn full_memory_needs_no_transmission() {
    let config = SystemConfig::new(5, 10, 2, 7, 10).unwrap();
    assert!(choose_regime(5, config.mu()).is_ok());
    for v in feasible_variants(&config) {
        let (outcome, dump) = run_trial(&config, v, 3).unwrap();
        assert!(outcome.passed());
        // unicast ignores the cache and the corner scheme stores only (g-1)F/g
        if !matches!(v, Variant::BaselineUnicast | Variant::Corner(_)) {
            assert_eq!(dump.transcript.len(), 0, "{v}");
        }
    }
}
