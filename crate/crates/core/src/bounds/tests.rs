use super::*;

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

fn erf(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    for n in 1..400 {
        term *= 2.0 * z * z / (2 * n + 1) as f64;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * sum
}

fn geom(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn unif_half_order_against_erfc() {
    let e = envelope(BoundKind::Unif, 0.5, f64::NAN, 1.0, &cfg()).unwrap();
    let exact = 1f64.exp() * (1.0 - erf(1.0));
    assert!((e.value - exact).abs() < 1e-14, "{} vs {exact}", e.value);
    assert!((e.value - 0.42758).abs() < 1e-5);
    let pi = std::f64::consts::PI;
    assert!((e.lo - 1.0 / (1.0 + pi.sqrt())).abs() < 1e-15);
    assert!((e.hi - 1.0 / (1.0 + 2.0 / pi.sqrt())).abs() < 1e-15);
    assert!(e.holds() && e.slack_lo > 0.0 && e.slack_hi > 0.0);
}

#[test]
fn bind_at_origin_is_trivial() {
    for a in [0.1, 0.5, 0.9] {
        let e = envelope(BoundKind::Bind, a, f64::NAN, 0.0, &cfg()).unwrap();
        assert_eq!((e.lo, e.value, e.hi), (1.0, 1.0, 1.0));
    }
}

#[test]
fn mode_envelope() {
    let e = envelope(BoundKind::BsBi, 0.5, f64::NAN, 0.0, &cfg()).unwrap();
    assert!(e.holds(), "{e:?}");
    assert!((e.hi - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    assert!(e.lo >= crate::crossings::MU * 0.5);
}

#[test]
fn small_alpha_limit_of_diagonal() {
    for x in [-2.0, -0.5, 0.5] {
        let v = envelope(BoundKind::Bind, 0.01, f64::NAN, x, &cfg()).unwrap().value;
        let lim = (1.0f64 - x / 2.0).powi(-2);
        assert!((v / lim - 1.0).abs() < 0.02, "{x}: {v} vs {lim}");
    }
}

#[test]
fn generalized_log_basics() {
    let c = cfg();
    assert!((generalized_log(1.0, 1.0, std::f64::consts::E, &c).unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(generalized_log(0.4, 1.0, 1.0, &c).unwrap(), 0.0);
    let v = generalized_log(0.01, 0.01, 4.0, &c).unwrap() / pochhammer_ratio(0.01, 0.01).unwrap();
    assert!((v - 1.0).abs() < 0.02, "{v}");
    assert!(generalized_log(0.5, 1.0, 0.0, &c).is_err());
    assert!(generalized_log(0.5, 0.3, 2.0, &c).is_err());
}

#[test]
fn generalized_log_round_trip() {
    let c = cfg();
    for (a, b) in [(0.3, 0.3), (0.5, 1.0), (0.8, 3.0), (0.95, 20.0)] {
        for i in 0..=30 {
            let t = -10.0 + 0.5 * i as f64;
            let y = scaled(a, b, t, &c).unwrap();
            let back = generalized_log(a, b, y, &c).unwrap();
            assert!((back - t).abs() < 1e-8, "({a},{b}) {t}: {back}");
        }
    }
}

#[test]
fn sweeps_have_no_violations() {
    let c = cfg();
    let alphas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let unif = sweep_check(BoundKind::Unif, &BoundGrid { alphas: alphas.clone(), betas: vec![], xs: geom(0.01, 100.0, 25) }, &c).unwrap();
    assert!(unif.violations.is_empty() && unif.points == 225 && unif.skipped == 0);
    let mut xs = geom(0.01, 50.0, 20);
    xs.insert(0, 0.0);
    let unif1 = sweep_check(BoundKind::Unif1, &BoundGrid { alphas: alphas.clone(), betas: alphas.clone(), xs }, &c).unwrap();
    assert!(unif1.violations.is_empty());
    assert_eq!(unif1.points, 36 * 21);
    let bind2 = sweep_check(
        BoundKind::Bind2,
        &BoundGrid { alphas: alphas.clone(), betas: vec![], xs: (0..=50).map(|i| -(i as f64)).collect() },
        &c,
    )
    .unwrap();
    assert!(bind2.violations.is_empty());
    let ksb = sweep_check(
        BoundKind::KSB,
        &BoundGrid { alphas: vec![0.3, 0.7, 1.0], betas: vec![0.5, 1.0, 2.0, 10.0], xs: vec![-20.0, -3.0, -1.0, -0.1, 0.0] },
        &c,
    )
    .unwrap();
    assert!(ksb.violations.is_empty() && ksb.points > 0);
    let bd1 = sweep_check(
        BoundKind::Bd1,
        &BoundGrid { alphas: vec![0.3, 0.7, 1.0], betas: vec![0.3, 0.7, 1.0, 5.0], xs: vec![-10.0, -1.0, 0.3, 0.9, 1.0, 3.0] },
        &c,
    )
    .unwrap();
    assert!(bd1.violations.is_empty());
    let bind = sweep_check(BoundKind::Bind, &BoundGrid { alphas, betas: vec![], xs: vec![-30.0, -2.0, 0.5, 1.9, 2.0, 5.0] }, &c).unwrap();
    assert!(bind.violations.is_empty());
    // e.g. E_{0.1,0.1} at 2.4 overflows
    assert!(bind.overflowed > 0 && bind.points + bind.overflowed == 54);
}

#[test]
fn rigid_and_sandwich() {
    let c = cfg();
    let rigid = sweep_check(
        BoundKind::Rigid,
        &BoundGrid { alphas: vec![0.1, 0.4, 0.8], betas: vec![0.2, 0.5, 0.9], xs: geom(0.01, 30.0, 12) },
        &c,
    )
    .unwrap();
    assert!(rigid.violations.is_empty());
    let sand = sweep_check(
        BoundKind::GenLogSandwich,
        &BoundGrid { alphas: vec![0.1, 0.5, 0.9], betas: vec![0.5, 1.0, 4.0], xs: vec![-0.99, -0.5, 0.1, 1.0, 10.0, 100.0] },
        &c,
    )
    .unwrap();
    assert!(sand.violations.is_empty(), "{:?}", sand.violations.first());
}

#[test]
fn unif_upper_slack_shrinks_with_alpha() {
    let c = cfg();
    for x in [0.5, 2.0, 10.0] {
        let s1 = envelope(BoundKind::Unif, 0.05, f64::NAN, x, &c).unwrap().slack_hi;
        let s2 = envelope(BoundKind::Unif, 0.5, f64::NAN, x, &c).unwrap().slack_hi;
        assert!(s1 < s2, "{x}");
    }
}

#[test]
fn hypotheses_are_enforced() {
    let c = cfg();
    assert!(matches!(envelope(BoundKind::Unif, 0.5, 0.0, -1.0, &c), Err(Error::Hypothesis(_))));
    assert!(matches!(envelope(BoundKind::Bind2, 0.5, 0.0, 0.5, &c), Err(Error::Hypothesis(_))));
    assert!(envelope(BoundKind::Unif1, 0.6, 0.4, 1.0, &c).is_err());
    let e = envelope(BoundKind::Bd1, 0.5, 1.0, 2.0, &c).unwrap();
    assert!(e.hi.is_infinite() && e.holds());
    assert_eq!("bs_bi".parse::<BoundKind>().unwrap(), BoundKind::BsBi);
}

#[test]
fn generalized_log_of_tiny_values() {
    let c = cfg();
    assert!((generalized_log(1.0, 1.0, (-10f64).exp(), &c).unwrap() + 10.0).abs() < 1e-12);
    assert!((generalized_log(1.0, 1.0, 1e-300, &c).unwrap() - 1e-300f64.ln()).abs() < 1e-9);
}
