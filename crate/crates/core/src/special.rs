//! Gamma-family functions and the evaluation configuration shared by the crate.
//!
//! Log-gamma uses a Lanczos approximation (g = 7, nine coefficients) on
//! `[0.5, 10)`, Stirling's series above that and reflection below `0.5`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{out_of_range, Error, Result};

/// Tolerances and iteration caps used by every numerical routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
    pub max_iter: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { rel_tol: 1e-12, abs_tol: 1e-300, max_terms: 10_000, max_iter: 200 }
    }
}

impl EvalConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_terms: usize, max_iter: usize) -> Result<Self> {
        let cfg = EvalConfig { rel_tol, abs_tol, max_terms, max_iter };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(out_of_range("rel_tol", format!("{} not in (0, 1)", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(out_of_range("abs_tol", format!("{} must be finite and >= 0", self.abs_tol)));
        }
        if self.max_terms == 0 {
            return Err(out_of_range("max_terms", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(out_of_range("max_iter", "must be positive"));
        }
        Ok(())
    }
}

/// `Gamma(x) = sign * exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValue {
    pub log_abs: f64,
    pub sign: f64,
}

impl GammaValue {
    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `sin(pi x)` with exact argument reduction, so it vanishes at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let n = (2.0 * x).round();
    let r = x - 0.5 * n;
    let (s, c) = (PI * r).sin_cos();
    match (n as i64).rem_euclid(4) {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    }
}

/// `cos(pi x)` with exact argument reduction.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn ln_gamma_positive(x: f64) -> f64 {
    if x >= 10.0 {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                + inv2
                    * (-1.0 / 360.0
                        + inv2
                            * (1.0 / 1260.0
                                + inv2
                                    * (-1.0 / 1680.0
                                        + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
        (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

/// `ln|Gamma(x)|` together with the sign of `Gamma(x)`.
pub fn ln_gamma(x: f64) -> Result<GammaValue> {
    if x.is_nan() {
        return Err(out_of_range("x", "NaN"));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x == f64::INFINITY {
        return Err(Error::Overflow(format!("ln Gamma({x})")));
    }
    if x == f64::NEG_INFINITY {
        return Err(out_of_range("x", "-inf"));
    }
    let out = if x >= 0.5 {
        GammaValue { log_abs: ln_gamma_positive(x), sign: 1.0 }
    } else {
        let s = sin_pi(x);
        let rest = ln_gamma_positive(1.0 - x);
        GammaValue { log_abs: PI.ln() - s.abs().ln() - rest, sign: s.signum() }
    };
    if !out.log_abs.is_finite() {
        return Err(Error::Overflow(format!("ln Gamma({x})")));
    }
    Ok(out)
}

/// `Gamma(x)`; errors at poles and when the value is not representable.
pub fn gamma(x: f64) -> Result<f64> {
    if x > 0.0 && x < 1e-300 {
        return Err(Error::Overflow(format!("Gamma({x})")));
    }
    let g = ln_gamma(x)?;
    if g.log_abs > f64::MAX.ln() {
        return Err(Error::Overflow(format!("Gamma({x})")));
    }
    Ok(g.value())
}

/// `1 / Gamma(x)` for every real `x`; zero at the poles of Gamma.
pub fn rgamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x >= 0.5 {
        return (-ln_gamma_positive(x)).exp();
    }
    // 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
    let s = sin_pi(x);
    s * (ln_gamma_positive(1.0 - x) - PI.ln()).exp()
}

/// Digamma function `psi(x)`.
pub fn digamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(out_of_range("x", "NaN"));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        let t = sin_pi(x) / cos_pi(x);
        return Ok(digamma(1.0 - x)? - PI / t);
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// Trigamma function `psi'(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(out_of_range("x", format!("trigamma needs x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                - inv2
                    * (1.0 / 30.0
                        - inv2
                            * (1.0 / 42.0
                                - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
    Ok(acc + tail)
}

/// `Gamma(alpha + beta) / Gamma(beta)`, the rising factorial `(beta)_alpha`.
pub fn pochhammer_ratio(alpha: f64, beta: f64) -> Result<f64> {
    let num = ln_gamma(alpha + beta)?;
    let den = ln_gamma(beta)?;
    let l = num.log_abs - den.log_abs;
    if l > f64::MAX.ln() {
        return Err(Error::Overflow(format!("Gamma({})/Gamma({beta})", alpha + beta)));
    }
    Ok(num.sign * den.sign * l.exp())
}

/// Minimiser of `Gamma(1 + beta)` on `(0, 1)` and the minimum value.
pub fn gamma_min() -> (f64, f64) {
    let (mut lo, mut hi) = (0.4_f64, 0.5_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if digamma(1.0 + mid).unwrap_or(0.0) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    (b, ln_gamma(1.0 + b).map(|g| g.value()).unwrap_or(f64::NAN))
}

/// Regularised upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(out_of_range("a", format!("gamma_q needs a > 0 and x >= 0, got ({a}, {x})")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let lg = ln_gamma(a)?.log_abs;
    let front = (a * x.ln() - x - lg).exp();
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut k = a;
        for _ in 0..10_000 {
            k += 1.0;
            term *= x / k;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                return Ok((1.0 - sum * front).clamp(0.0, 1.0));
            }
        }
        Err(Error::NonConvergence(format!("gamma_q series at ({a}, {x})")))
    } else {
        // modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                return Ok((front * h).clamp(0.0, 1.0));
            }
        }
        Err(Error::NonConvergence(format!("gamma_q fraction at ({a}, {x})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn gamma_matches_factorials() {
        for n in 1..25u32 {
            let g = gamma(n as f64 + 1.0).unwrap();
            let f = factorial(n);
            assert!((g - f).abs() <= 1e-13 * f, "n = {n}: {g} vs {f}");
        }
    }

    #[test]
    fn half_integer_values() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(0.5).unwrap() - sqrt_pi).abs() < 1e-14);
        assert!((gamma(-0.5).unwrap() + 2.0 * sqrt_pi).abs() < 1e-13);
        assert!((gamma(1.5).unwrap() - 0.5 * sqrt_pi).abs() < 1e-14);
        assert!((gamma(2.5).unwrap() - 0.75 * sqrt_pi).abs() < 1e-14);
    }

    #[test]
    fn recurrence_holds_across_branches() {
        let mut x = -7.3;
        while x < 40.0 {
            let a = ln_gamma(x + 1.0).unwrap();
            let b = ln_gamma(x).unwrap();
            let lhs = a.log_abs - b.log_abs;
            assert!((lhs - x.abs().ln()).abs() < 2e-13 * (1.0 + a.log_abs.abs()), "x = {x}");
            assert_eq!(a.sign * b.sign, x.signum());
            x += 0.37;
        }
    }

    #[test]
    fn poles_and_reciprocal() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Pole(_))));
        assert!(matches!(ln_gamma(-3.0), Err(Error::Pole(_))));
        assert_eq!(rgamma(-3.0), 0.0);
        assert_eq!(rgamma(0.0), 0.0);
        // 1/Gamma passes smoothly through its zeros
        let eps = 1e-8;
        let slope = (rgamma(-2.0 + eps) - rgamma(-2.0 - eps)) / (2.0 * eps);
        assert!((slope - 2.0).abs() < 1e-6, "slope {slope}");
        assert!((rgamma(3.7) * gamma(3.7).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(gamma(200.0), Err(Error::Overflow(_))));
        assert!(ln_gamma(200.0).is_ok());
        assert!(pochhammer_ratio(0.5, 1e300).is_ok());
    }

    #[test]
    fn digamma_against_series_oracle() {
        // psi(x) = -gamma + sum_{k>=0} (1/(k+1) - 1/(k+x)), summed with an integral tail correction
        fn oracle(x: f64) -> f64 {
            let euler = 0.577_215_664_901_532_9;
            let n = 200_000usize;
            let mut s = 0.0;
            for k in (0..n).rev() {
                let k = k as f64;
                s += 1.0 / (k + 1.0) - 1.0 / (k + x);
            }
            let m = n as f64;
            // remaining terms behave like (x - 1)/k^2
            s += (x - 1.0) / (m + 0.5 * (x)) ;
            -euler + s
        }
        for &x in &[0.1, 0.5, 1.0, 1.4616, 2.5, 7.9, 13.0] {
            let d = digamma(x).unwrap();
            assert!((d - oracle(x)).abs() < 1e-9, "x = {x}: {d} vs {}", oracle(x));
        }
        assert!((digamma(1.0).unwrap() + 0.577_215_664_901_532_9).abs() < 1e-15);
        let r = digamma(-0.5).unwrap() - digamma(1.5).unwrap();
        assert!(r.abs() < 1e-13, "reflection at -1/2 gives psi(1.5) exactly, got {r}");
    }

    #[test]
    fn trigamma_known_values() {
        assert!((trigamma(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((trigamma(0.5).unwrap() - PI * PI / 2.0).abs() < 1e-13);
        let x = 3.3;
        assert!((trigamma(x).unwrap() - trigamma(x + 1.0).unwrap() - 1.0 / (x * x)).abs() < 1e-14);
    }

    #[test]
    fn gamma_minimum() {
        let (b, g) = gamma_min();
        assert!((b - 0.461_632_144_968_362_3).abs() < 1e-12, "{b}");
        assert!((g - 0.885_603_194_410_888_7).abs() < 1e-14, "{g}");
    }

    #[test]
    fn pochhammer_is_gamma_ratio() {
        let p = pochhammer_ratio(0.5, 2.0).unwrap();
        assert!((p - 0.75 * PI.sqrt()).abs() < 1e-14);
        let big = pochhammer_ratio(0.7, 200.0).unwrap();
        assert!((big.ln() - 0.7 * 200.0_f64.ln()).abs() < 1e-2);
    }

    #[test]
    fn sin_pi_exact_at_integers() {
        for k in -10..10 {
            assert_eq!(sin_pi(k as f64), 0.0);
        }
        assert!((sin_pi(0.25) - 0.5f64.sqrt()).abs() < 1e-16);
        assert!((cos_pi(1.0) + 1.0).abs() < 1e-16);
    }

    #[test]
    fn incomplete_gamma_exponential_case() {
        for &x in &[0.1f64, 1.0, 2.5, 10.0, 40.0] {
            let q = gamma_q(1.0, x).unwrap();
            assert!((q - (-x).exp()).abs() < 1e-14 * (1.0 + (-x).exp()));
        }
        // Q(2, x) = (1 + x) e^{-x}
        let q = gamma_q(2.0, 3.0).unwrap();
        assert!((q - 4.0 * (-3.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::new(0.0, 0.0, 10, 10).is_err());
        assert!(EvalConfig::new(1e-10, -1.0, 10, 10).is_err());
        assert!(EvalConfig::new(1e-10, 0.0, 0, 10).is_err());
        assert!(EvalConfig::default().validate().is_ok());
    }
}
