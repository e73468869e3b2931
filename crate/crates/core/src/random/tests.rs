use super::*;
use crate::ml_eval::{eval_ml_scaled, kernel_value, KernelDensity, MLParams, Method};
use crate::quad::integrate;
use crate::special::{gamma, pochhammer_ratio};

const EULER: f64 = 0.5772156649015329;

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

fn within(est: (f64, f64), target: f64, k: f64) -> bool {
    (est.0 - target).abs() <= k * est.1
}

fn t_law(alpha: f64) -> GeneratorSpec {
    GeneratorSpec::BetaProduct { product: BetaLaw::T { alpha }, truncation: DEFAULT_TRUNCATION }
}

#[test]
fn same_seed_same_stream() {
    for spec in [GeneratorSpec::Stable { alpha: 0.3 }, t_law(0.6), GeneratorSpec::AtomX { alpha: 1.4 }] {
        let a = sample(spec, 500, RngSeed(9)).unwrap();
        let b = sample(spec, 500, RngSeed(9)).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample(spec, 500, RngSeed(10)).unwrap();
        assert_ne!(a.values, c.values);
    }
}

#[test]
fn stable_laplace_and_mellin() {
    let b = sample(GeneratorSpec::Stable { alpha: 0.5 }, 200_000, RngSeed(1)).unwrap();
    assert!(within(empirical_laplace(&b.values, 1.0), (-1.0f64).exp(), 3.0));
    for s in [0.5, 1.0] {
        let p: Vec<f64> = b.values.iter().map(|z| z.powf(-s)).collect();
        let target = gamma(1.0 + s / 0.5).unwrap() / gamma(1.0 + s).unwrap();
        // Levy form: Z = 1 / (4 G) with G ~ Gamma(1/2) gives 4^s Gamma(1/2 + s) / Gamma(1/2)
        let levy = 4f64.powf(s) * gamma(0.5 + s).unwrap() / gamma(0.5).unwrap();
        assert!((target - levy).abs() < 1e-12 * levy);
        assert!(within(mean_se(&p), target, 3.0), "{s}: {:?} vs {target}", mean_se(&p));
    }
}

#[test]
fn mittag_leffler_moments() {
    let alpha = 0.6;
    let b = sample(GeneratorSpec::MittagLefflerM { alpha }, 200_000, RngSeed(2)).unwrap();
    for k in 1..=3 {
        let p: Vec<f64> = b.values.iter().map(|m| m.powi(k)).collect();
        let target = gamma(1.0 + k as f64).unwrap() / gamma(1.0 + k as f64 * alpha).unwrap();
        assert!(within(mean_se(&p), target, 3.0), "k = {k}");
    }
}

#[test]
fn pillai_log_mean_and_density() {
    let b = sample(GeneratorSpec::Pillai { alpha: 0.5 }, 200_000, RngSeed(3)).unwrap();
    assert!(within(log_mean(&b), -EULER, 3.0), "{:?}", log_mean(&b));
    let chi = pillai_chi_square(&b, &cfg()).unwrap();
    assert!(chi.pass && chi.dof > 10, "{chi:?}");
    let b7 = sample(GeneratorSpec::Pillai { alpha: 0.7 }, 100_000, RngSeed(4)).unwrap();
    assert!(pillai_chi_square(&b7, &cfg()).unwrap().pass);
    assert!(matches!(
        pillai_chi_square(&sample(GeneratorSpec::Stable { alpha: 0.5 }, 200, RngSeed(0)).unwrap(), &cfg()),
        Err(Error::WrongKind(_))
    ));
}

#[test]
fn stable_ratio_laplace_and_cdf() {
    let c = cfg();
    for alpha in [0.3, 0.7] {
        let b = sample(GeneratorSpec::StableRatioV { alpha }, 100_000, RngSeed(5)).unwrap();
        for x in [0.5, 1.0, 2.0] {
            let target = eval_ml_power(alpha, x, -1.0, &c).unwrap();
            assert!(within(empirical_laplace(&b.values, x), target, 3.0), "{alpha} {x}");
        }
        assert!(ks_one_sample(&b.values, |t| stable_ratio_cdf(alpha, t)).unwrap().pass);
        // closed-form distribution function against the integrated density
        for t in [0.1, 1.0, 7.0] {
            let q = integrate(|u| kernel_value(KernelDensity::G { alpha }, u).unwrap(), 0.0, t, &[], 1e-12, 0.0, 2000)
                .unwrap()
                .value;
            assert!((q - stable_ratio_cdf(alpha, t)).abs() < 1e-8, "{q} vs {}", stable_ratio_cdf(alpha, t));
        }
        assert!((stable_ratio_cdf(alpha, 1.0) - 0.5).abs() < 1e-14);
    }
}

#[test]
fn self_reciprocal() {
    for alpha in [0.5, 0.9] {
        let b = sample(GeneratorSpec::StableRatioV { alpha }, 100_000, RngSeed(6)).unwrap();
        assert!(check_self_reciprocal(&b).unwrap().pass);
    }
    let one = sample(GeneratorSpec::StableRatioV { alpha: 0.5 }, 1, RngSeed(0)).unwrap();
    assert!(matches!(check_self_reciprocal(&one), Err(Error::InsufficientSample(_))));
    let wrong = sample(GeneratorSpec::Stable { alpha: 0.5 }, 10, RngSeed(0)).unwrap();
    assert!(matches!(check_self_reciprocal(&wrong), Err(Error::WrongKind(_))));
}

#[test]
fn ks_detects_a_shift() {
    let b = sample(GeneratorSpec::Stable { alpha: 0.5 }, 20_000, RngSeed(7)).unwrap();
    let shifted: Vec<f64> = b.values.iter().map(|v| v * 1.1).collect();
    let c = sample(GeneratorSpec::Stable { alpha: 0.5 }, 20_000, RngSeed(8)).unwrap();
    assert!(!ks_two_sample(&b.values, &shifted).unwrap().pass);
    assert!(ks_two_sample(&b.values, &c.values).unwrap().pass);
    assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
}

#[test]
fn beta_products_match_exact_laws() {
    for alpha in [0.25, 0.5] {
        let r = cross_validate_factorizations(alpha, 100_000, RngSeed(11)).unwrap();
        assert!(r.ks.pass, "{r:?}");
        assert!((r.mean - 1.0).abs() < 3.0 * r.mean_se);
    }
    let a = sample(t_law(0.4), 100_000, RngSeed(12)).unwrap();
    let b = sample(
        GeneratorSpec::BetaProduct { product: BetaLaw::TPower { alpha: 0.4 }, truncation: DEFAULT_TRUNCATION },
        100_000,
        RngSeed(13),
    )
    .unwrap();
    assert!(ks_two_sample(&a.values, &b.values).unwrap().pass);
    assert!(cross_validate_factorizations(0.95, 10, RngSeed(0)).is_err());
}

#[test]
fn scaled_m0_laplace() {
    let c = cfg();
    let alpha = 0.5;
    let b = sample(
        GeneratorSpec::BetaProduct { product: BetaLaw::ScaledM0 { alpha }, truncation: DEFAULT_TRUNCATION },
        100_000,
        RngSeed(14),
    )
    .unwrap();
    let k = pochhammer_ratio(alpha, alpha).unwrap();
    for x in [-1.0, -3.0] {
        let target = eval_ml_scaled(MLParams::new(alpha, alpha).unwrap(), k * x, Method::Auto, &c).unwrap();
        assert!(within(empirical_laplace(&b.values, -x), target, 3.0));
    }
}

#[test]
fn m_tilde_mean_and_laplace() {
    let c = cfg();
    let (alpha, beta) = (0.5, 2.0);
    let b = sample(
        GeneratorSpec::BetaProduct { product: BetaLaw::MTilde { alpha, beta }, truncation: DEFAULT_TRUNCATION },
        100_000,
        RngSeed(15),
    )
    .unwrap();
    assert!(within(mean_se(&b.values), 1.0, 3.0));
    let k = pochhammer_ratio(alpha, beta).unwrap();
    let target = eval_ml_scaled(MLParams::new(alpha, beta).unwrap(), -k, Method::Auto, &c).unwrap();
    assert!(within(empirical_laplace(&b.values, 1.0), target, 3.0));
}

#[test]
fn truncation_is_stable() {
    let r = truncation_check(BetaLaw::T { alpha: 0.3 }, DEFAULT_TRUNCATION, 50_000, RngSeed(16)).unwrap();
    assert!((r.mean_n - r.mean_4n).abs() < r.se, "{r:?}");
    let short = GeneratorSpec::BetaProduct { product: BetaLaw::T { alpha: 0.5 }, truncation: 1 };
    assert!(sample(short, 10, RngSeed(0)).is_err());
}

#[test]
fn convex_order_of_t() {
    let x = sample(t_law(0.7), 100_000, RngSeed(17)).unwrap();
    let y = sample(t_law(0.3), 100_000, RngSeed(18)).unwrap();
    let r = check_convex_order(&x, &y, &ConvexFamily::default()).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert!(r.deltas.iter().all(|d| d.se > 0.0));
    let same = check_convex_order(&x, &x, &ConvexFamily::default()).unwrap();
    assert!(same.deltas.iter().all(|d| d.delta == 0.0) && same.mean_delta == 0.0);
    let twin = sample(t_law(0.7), 100_000, RngSeed(17)).unwrap();
    assert!(check_convex_order(&x, &twin, &ConvexFamily::default()).unwrap().deltas.iter().all(|d| d.delta == 0.0));
}

#[test]
fn convex_order_flags_mean_mismatch() {
    let x = sample(t_law(0.5), 50_000, RngSeed(19)).unwrap();
    let mut y = x.clone();
    y.values.iter_mut().for_each(|v| *v *= 1.2);
    assert!(matches!(check_convex_order(&x, &y, &ConvexFamily::default()), Err(Error::MeanMismatch(_))));
}

#[test]
fn atom_law() {
    let c = cfg();
    let alpha = 1.5;
    let b = sample(GeneratorSpec::AtomX { alpha }, 200_000, RngSeed(20)).unwrap();
    let atoms = b.values.iter().filter(|&&v| v == -1.0).count() as f64 / b.n as f64;
    assert!((atoms - 1.0 / alpha).abs() < 3.0 * (atoms * (1.0 - atoms) / b.n as f64).sqrt());
    for x in [0.5, 1.0] {
        let target = eval_ml_power(alpha, x, 1.0, &c).unwrap();
        assert!(within(empirical_laplace(&b.values, x), target, 3.0), "{x}");
    }
    // the quantile function inverts the continuous distribution function
    let p = 1.0 / alpha + 0.2;
    let t = atom_x_quantile(alpha, p);
    let dens = |u: f64| {
        let ua = u.powf(alpha);
        -sin_pi(alpha) * ua / u / (PI * (ua * ua - 2.0 * cos_pi(alpha) * ua + 1.0))
    };
    let mass = integrate(dens, 0.0, t, &[], 1e-12, 0.0, 2000).unwrap().value;
    assert!((mass - 0.2).abs() < 1e-9, "{mass}");
}

#[test]
fn invalid_specs() {
    assert!(sample(GeneratorSpec::Stable { alpha: 1.0 }, 10, RngSeed(0)).is_err());
    assert!(sample(GeneratorSpec::AtomX { alpha: 0.5 }, 10, RngSeed(0)).is_err());
    assert!(sample(GeneratorSpec::Pillai { alpha: 0.5 }, 0, RngSeed(0)).is_err());
    let bad = GeneratorSpec::BetaProduct { product: BetaLaw::MTilde { alpha: 0.5, beta: 0.4 }, truncation: 64 };
    assert!(sample(bad, 10, RngSeed(0)).is_err());
}
