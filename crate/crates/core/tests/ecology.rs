use phygital_core::ecology::{
    density_sweep, flash_crash_scenario, mass_convergence_experiment, trust_accrual, verification_threshold,
    ConvergenceScenario, CostCurve, FlashCrashSpec, Platform, SyntheticAgentSpec, VerificationModel,
};
use phygital_core::{Block, MassTensor};
use proptest::prelude::*;

proptest! {
    #[test]
    fn accrual_never_exceeds_the_interaction_bound(
        trust in 0.0f64..1.0,
        n in 1u64..10_000,
        cap in prop::option::of(0.0f64..50.0),
        dt in 1e-4f64..10.0,
    ) {
        let mut sa = SyntheticAgentSpec::new(1.0, 1.0, 0.2, n).unwrap();
        sa.accrual_rate = cap;
        let got = trust_accrual(&sa, trust, dt).unwrap();
        prop_assert!(got >= 0.0);
        prop_assert!(got <= trust * n as f64 * dt);
    }

    #[test]
    fn synthetic_tensors_have_no_physical_presence(dd in 0.01f64..10.0, ss in 0.01f64..10.0, t in -1.0f64..1.0, n in 1u64..100) {
        let sa = SyntheticAgentSpec::new(dd, ss, t * (dd * ss).sqrt(), n).unwrap();
        let c = sa.mass_tensor().unwrap().classify();
        prop_assert!(c.rank <= 2);
        prop_assert!(c.present.iter().all(|b| *b != Block::Physical));
    }

    #[test]
    fn threshold_root_is_accurate_for_increasing_costs(
        value in 0.1f64..5.0,
        intercept in 0.0f64..2.0,
        scale in 0.1f64..5.0,
        exponent in 0.5f64..3.0,
    ) {
        let m = VerificationModel::new(value, CostCurve::Power { intercept, scale, exponent }).unwrap();
        match verification_threshold(&m).unwrap() {
            Some(r) => {
                prop_assert!((0.0..=1.0).contains(&r));
                prop_assert!(m.expected_value(r).abs() < 1e-8);
                if r > 1e-6 {
                    prop_assert!(m.expected_value(r - 1e-6) > 0.0);
                }
                if r < 1.0 - 1e-6 {
                    prop_assert!(m.expected_value(r + 1e-6) < 0.0);
                }
            }
            None => {
                let ev0 = m.expected_value(0.0);
                let ev1 = m.expected_value(1.0);
                prop_assert!(ev0 * ev1 >= 0.0 || ev0 == 0.0 || ev1 == 0.0);
            }
        }
    }

    #[test]
    fn engagement_is_monotone_in_density(
        value in 0.1f64..5.0,
        intercept in 0.0f64..2.0,
        slope in 0.0f64..5.0,
        grid in prop::collection::btree_set(0u32..=1000, 1..50),
    ) {
        let m = VerificationModel::new(value, CostCurve::Affine { intercept, slope }).unwrap();
        let rho: Vec<f64> = grid.into_iter().map(|g| g as f64 / 1000.0).collect();
        let rows = density_sweep(&m, &rho).unwrap();
        prop_assert!(rows.windows(2).all(|w| w[0].engaged >= w[1].engaged));
    }

    #[test]
    fn convergence_preserves_trace_and_shrinks_spread(d in prop::array::uniform3(0.0f64..5.0), gain in 0.05f64..2.0) {
        let scn = ConvergenceScenario::new(
            vec![Platform { name: "p".into(), mass: MassTensor::diagonal(d).unwrap() }],
            gain,
            5.0,
        )
        .unwrap();
        let r = &mass_convergence_experiment(&scn).unwrap()[0];
        prop_assert!(r.trace_drift < 1e-8 * (1.0 + d.iter().sum::<f64>()));
        prop_assert!(r.spread_monotone);
    }

    #[test]
    fn short_crashes_lag_at_least_their_duration(frac in 0.01f64..0.99, ratio in 10u32..500) {
        let dt_cpu = 1e-3;
        let dt_phy = ratio as f64 * dt_cpu;
        let rep = flash_crash_scenario(&FlashCrashSpec::new(dt_cpu, ratio, frac * dt_phy, 5.0)).unwrap();
        prop_assert!(rep.detection_lag >= rep.crash_duration);
    }

    #[test]
    fn finer_sampling_never_detects_later(start in 0.0f64..1.0, duration in 0.001f64..0.5) {
        let mut lags = Vec::new();
        for ratio in [512u32, 256, 128, 64, 32, 16] {
            let mut spec = FlashCrashSpec::new(1e-4, ratio, duration, 3.0);
            spec.start = Some(start);
            lags.push(flash_crash_scenario(&spec).unwrap().detection_lag);
        }
        prop_assert!(lags.windows(2).all(|w| w[1] <= w[0]), "{lags:?}");
    }
}
