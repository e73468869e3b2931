use super::*;
use crate::ml_eval::{kernel_value, KernelDensity};
use crate::quad::integrate_half_line;
use crate::special::ln_gamma;

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

// plain power series, only trusted where the terms stay modest
fn series_ml(alpha: f64, beta: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    for n in 0..4000 {
        let g = ln_gamma(beta + alpha * n as f64).unwrap();
        let t = (n as f64 * z.abs().ln() - g.log_abs).exp() * g.sign * if z < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        sum += t;
        if n > 20 && t.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m).signum() == flo.signum() {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

fn laplace(mut kernel: impl FnMut(f64) -> f64, x: f64) -> f64 {
    integrate_half_line(|t| (-x * t).exp() * kernel(t), 2.0, 1e-12, 1e-15, 4000).unwrap().value
}

// frozen from the series bisection above
const X_AB_03_07: f64 = 0.6549094531083811;

#[test]
fn x_ab_matches_series_bisection() {
    let (lo, hi) = x_ab_bracket(0.3, 0.7).unwrap();
    let oracle = bisect(|x| series_ml(0.3, 1.0, -x.powf(0.3)) - series_ml(0.7, 1.0, -x.powf(0.7)), lo, hi);
    let r = find_x_ab(0.3, 0.7, &cfg()).unwrap();
    assert!((r.root - oracle).abs() < 1e-10 * oracle, "{} vs {oracle}", r.root);
    assert!((r.root - X_AB_03_07).abs() < 1e-10);
    assert!(r.certified && r.bracket_lo < r.root && r.root < r.bracket_hi && r.root < 1.0);
}

#[test]
fn x_ab_sign_pattern() {
    let c = cfg();
    for (a, b) in [(0.1, 0.2), (0.3, 0.7), (0.5, 0.95), (0.05, 0.9)] {
        let r = find_x_ab(a, b, &c).unwrap();
        assert!(g_ab(a, b, r.root / 2.0, &c).unwrap() < 0.0);
        assert!(g_ab(a, b, 2.0 * r.root, &c).unwrap() > 0.0);
    }
}

#[test]
fn x_ab_small_parameter_limit() {
    let r = find_x_ab(0.01, 0.02, &cfg()).unwrap();
    let target = (-0.5772156649015329f64).exp();
    assert!((r.root / target - 1.0).abs() < 0.05, "{}", r.root);
}

#[test]
fn lambda_one_is_the_plain_crossing() {
    let c = cfg();
    let a = find_x_ab(0.3, 0.7, &c).unwrap().root;
    // force the generic search path by a lambda that rounds to one only in the assertion
    let b = find_x_ab_lambda(0.3, 0.7, 1.0 + 1e-15, &c).unwrap().root;
    assert!((a - b).abs() < 1e-10);
    assert_eq!(find_x_ab_lambda(0.3, 0.7, 1.0, &c).unwrap().root, a);
}

#[test]
fn lambda_roots() {
    let c = cfg();
    let r = find_x_ab_lambda(0.4, 0.6, 0.5, &c).unwrap();
    assert!(r.root <= 0.5f64.powf(-1.0 / 0.4));
    let r2 = find_x_ab_lambda(0.4, 0.6, 2.0, &c).unwrap();
    let oracle = bisect(
        |x| series_ml(0.4, 1.0, -2.0 * x.powf(0.4)) - series_ml(0.6, 1.0, -2.0 * x.powf(0.6)),
        r2.bracket_lo,
        r2.bracket_hi,
    );
    assert!((r2.root - oracle).abs() < 1e-9 * oracle, "{} vs {oracle}", r2.root);
}

#[test]
fn yz_enclose_crossing() {
    let c = cfg();
    let (y, z) = find_yz(0.3, 0.7, &c).unwrap();
    let x = find_x_ab(0.3, 0.7, &c).unwrap().root;
    assert!(y.root < x && x < z.root);
    // G' from its Laplace representation with t (g_beta - g_alpha)
    let gd = |t: f64| {
        t * (kernel_value(KernelDensity::G { alpha: 0.7 }, t).unwrap()
            - kernel_value(KernelDensity::G { alpha: 0.3 }, t).unwrap())
    };
    for r in [y, z] {
        let lo = bisect(|s| laplace(gd, s), r.bracket_lo, r.bracket_hi);
        assert!((lo - r.root).abs() < 1e-7 * r.root, "{lo} vs {}", r.root);
    }
    // negative near both ends
    assert!(g_ab_derivative(0.3, 0.7, 1e-6, &c).unwrap().0 < 0.0);
    assert!(g_ab_derivative(0.3, 0.7, 1e5, &c).unwrap().0 < 0.0);
}

#[test]
fn x_star_above_half_order_crossing() {
    let c = cfg();
    assert!((h_ab(1.2, 1.6, 0.0, &c).unwrap() - 0.4).abs() < 1e-15);
    let r = find_x_star(1.2, 1.6, &c).unwrap();
    assert!(r.root > find_x_ab(0.6, 0.8, &c).unwrap().root);
    // H from the difference of the scaled f kernels
    let k = |t: f64| {
        let f = |a: f64| {
            let ta = t.powf(a);
            a * (std::f64::consts::PI * a).sin() * ta / t
                / (std::f64::consts::PI * (ta * ta - 2.0 * (std::f64::consts::PI * a).cos() * ta + 1.0))
        };
        f(1.2) - f(1.6)
    };
    let oracle = bisect(|x| laplace(k, x), r.bracket_lo, r.bracket_hi);
    assert!((oracle - r.root).abs() < 1e-7 * r.root, "{oracle} vs {}", r.root);
}

#[test]
fn mode_matches_golden_on_series() {
    let c = cfg();
    let (root, ext) = find_mode_m(0.5, &c).unwrap();
    let (xs, fx) = golden_min(|x| -x * series_ml(0.5, 0.5, -x), 0.0, 1.0, 1e-9, 300).unwrap();
    assert!((root.root - xs).abs() < 1e-6, "{} vs {xs}", root.root);
    assert!((ext.value + fx).abs() < 1e-12);
    let (lo, hi) = mode_bounds(0.5).unwrap();
    assert!(lo <= ext.value && ext.value <= hi && hi < 0.25);
}

#[test]
fn mode_small_alpha_near_quarter() {
    let (root, ext) = find_mode_m(0.02, &cfg()).unwrap();
    assert!(root.root < 1.0);
    let ratio = ext.value / 0.02;
    assert!(ratio > 0.19 && ratio < 0.5, "{ratio}");
}

#[test]
fn mu_constant() {
    let (_, m) = mode_lower_factor_min().unwrap();
    assert!((m - MU).abs() < 1e-6, "{m}");
}

#[test]
fn mode_derivative_identity() {
    let c = cfg();
    for x in [0.1, 0.5, 0.9] {
        let h = 1e-5;
        let fd = (pillai_moment_fn(0.4, x + h, &c).unwrap() - pillai_moment_fn(0.4, x - h, &c).unwrap()) / (2.0 * h);
        let d = pillai_moment_derivative(0.4, x, &c).unwrap().0;
        assert!((fd - d).abs() < 1e-8, "{fd} vs {d}");
    }
}

#[test]
fn unimodal_moment_function() {
    let c = cfg();
    let rep = crate::ml_eval::count_sign_changes(|x| pillai_moment_derivative(0.5, x, &c).map(|p| p.0), 1e-6, 1e6, 4096, 0.0)
        .unwrap();
    assert_eq!(rep.count, 1);
    assert_eq!(rep.starting_sign, 1);
}

#[test]
fn probes_report_consistently() {
    let c = cfg();
    for id in CONJECTURES {
        let mut g = ProbeGrid::default_for(id).unwrap();
        if id == "lambda_gt1_root_le1" {
            g.alphas = vec![0.2, 0.5, 0.8];
        }
        let rep = probe_conjecture(id, &g, &c).unwrap();
        assert_eq!(rep.violations.is_empty(), rep.min_margin > 0.0, "{id}");
        assert!(rep.violations.is_empty(), "{id}: {:?}", rep.violations);
    }
    assert!(probe_conjecture("nope", &ProbeGrid::default_for("alpha_dec_Ea_minus1").unwrap(), &c).is_err());
}

#[test]
fn rejects_bad_parameters() {
    let c = cfg();
    assert!(find_x_ab(0.7, 0.3, &c).is_err());
    assert!(find_x_star(0.9, 1.5, &c).is_err());
    assert!(find_mode_m(1.0, &c).is_err());
    assert!(find_x_ab_lambda(0.3, 0.7, -1.0, &c).is_err());
}

#[test]
fn close_orders_with_tiny_lower_bracket() {
    let c = cfg();
    let (a, b) = (0.77, 0.77 + 0.23 / 11.0);
    let (lo, _) = x_ab_bracket(a, b).unwrap();
    assert!(lo < 1e-20);
    // both terms equal one to double precision at lo, so the sign must come from the series tails
    assert!(g_ab(a, b, lo, &c).unwrap() < 0.0);
    let r = find_x_ab(a, b, &c).unwrap();
    assert!(r.certified && r.root > lo && r.root < 1.0);
    assert!(g_ab(a, b, r.root / 2.0, &c).unwrap() < 0.0 && g_ab(a, b, 2.0 * r.root, &c).unwrap() > 0.0);
}
