use mittag::bounds::generalized_log;
use mittag::crossings::{find_x_ab, g_ab};
use mittag::random::{sample, GeneratorSpec, RngSeed};
use mittag::special::rgamma;
use mittag::{eval_ml, eval_ml_scaled, EvalConfig, MLParams, Method};
use proptest::prelude::*;

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

fn ml(a: f64, b: f64, x: f64) -> f64 {
    eval_ml(MLParams::new(a, b).unwrap(), x, Method::Auto, &cfg()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_recurrence(a in 0.3f64..1.5, b in 0.5f64..3.0, x in -5.0f64..3.0) {
        let lhs = ml(a, b, x);
        let rhs = rgamma(b) + x * ml(a, a + b, x);
        let scale = rgamma(b).abs() + (x * ml(a, a + b, x)).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn completely_monotone_on_negative_axis(a in 0.05f64..1.0, x in 0.0f64..40.0, dx in 0.01f64..5.0) {
        let (u, v) = (ml(a, 1.0, -x), ml(a, 1.0, -x - dx));
        prop_assert!(0.0 < v && v < u && u <= 1.0, "{u} {v}");
    }

    #[test]
    fn generalized_log_inverts(a in 0.3f64..1.0, extra in 0.0f64..5.0, t in -8.0f64..4.0) {
        let b = a + extra;
        let y = eval_ml_scaled(MLParams::new(a, b).unwrap(), t, Method::Auto, &cfg()).unwrap();
        let back = generalized_log(a, b, y, &cfg()).unwrap();
        prop_assert!((back - t).abs() < 1e-8, "{t} -> {y} -> {back}");
    }

    #[test]
    fn single_crossing(a in 0.05f64..0.9, frac in 0.05f64..0.95) {
        let b = a + (1.0 - a) * frac;
        let r = find_x_ab(a, b, &cfg()).unwrap();
        prop_assert!(r.certified && r.root < 1.0);
        prop_assert!(g_ab(a, b, 0.5 * r.root, &cfg()).unwrap() < 0.0);
        prop_assert!(g_ab(a, b, 1.5 * r.root, &cfg()).unwrap() > 0.0);
    }

    #[test]
    fn seeded_streams_repeat(a in 0.1f64..0.9, seed in any::<u64>()) {
        let spec = GeneratorSpec::MittagLefflerM { alpha: a };
        let x = sample(spec, 200, RngSeed(seed)).unwrap();
        let y = sample(spec, 200, RngSeed(seed)).unwrap();
        prop_assert_eq!(x.values, y.values);
    }
}
