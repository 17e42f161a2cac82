use chaosync::experiments::{build_preset, PresetOptions, ScenarioName};
use chaosync::signals::{
    chirp_source, random_source, sampled_hold, sine_source, square_wave, Codomain, Source,
};
use proptest::prelude::*;

fn source() -> impl Strategy<Value = Source> {
    prop_oneof![
        (0.1f64..5.0, 0.0f64..0.5).prop_map(|(w, a)| sine_source(w, a, 0.5).unwrap()),
        (0.05f64..1.0, 0.1f64..3.0, 1.0f64..60.0)
            .prop_map(|(f0, f1, d)| chirp_source(f0, f1, d).unwrap()),
    ]
}

proptest! {
    #[test]
    fn hold_matches_source_at_sample_instants(src in source(), ts in 0.01f64..1.0, k in 0u32..500) {
        let held = sampled_hold(src.clone(), ts).unwrap();
        let t = k as f64 * ts;
        prop_assert!((held.eval(t) - src.eval(t)).abs() <= 1e-12);
        // Constant until just before the next sample.
        prop_assert_eq!(held.eval(t + 0.5 * ts), held.eval(t));
        prop_assert_eq!(held.eval(t + 0.99 * ts), held.eval(t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn alpha_presets_stay_in_unit_interval(seed in any::<u64>(), ts in 0.05f64..0.5) {
        for name in [ScenarioName::Sine, ScenarioName::Chirp, ScenarioName::Random, ScenarioName::RandomIc] {
            let s = build_preset(name, &PresetOptions { seed, sample_time: Some(ts), ..Default::default() }).unwrap();
            for i in 0..=3000 {
                let v = s.alpha.eval(i as f64 * 0.01);
                prop_assert!((0.0..=1.0).contains(&v), "{name}: {v}");
            }
        }
    }

}

proptest! {
    #[test]
    fn random_signal_is_reproducible(seed in any::<u64>(), ts in 0.01f64..1.0, t in 0.0f64..100.0) {
        let a = random_source(seed, ts, 0.0, 1.0).unwrap();
        let b = random_source(seed, ts, 0.0, 1.0).unwrap();
        prop_assert_eq!(a.eval(t), b.eval(t));
    }

    #[test]
    fn square_wave_is_periodic(
        period in 0.5f64..30.0, duty in 0.05f64..0.95, delay in 0.0f64..10.0, t in 0.0f64..100.0
    ) {
        let w = square_wave(period, duty, delay, 0.0, 1.0, Codomain::Binary).unwrap();
        // Stay clear of the edges, where rounding of t + period may cross one.
        let phase = ((t - delay) / period).rem_euclid(1.0);
        prop_assume!((phase - duty).abs() > 1e-6 && phase > 1e-6 && phase < 1.0 - 1e-6);
        prop_assert_eq!(w.eval(t), w.eval(t + period));
        prop_assert_eq!(w.is_on(t), phase < duty);
    }
}
