//! Evaluation of the Mittag-Leffler functions `E_{a,b}(x) = sum x^n / Gamma(b + a n)` on the real line.
//!
//! Arguments are carried as `sign * exp(ln|x|)` so that powers such as `30^25`
//! never have to be formed. Several methods are available:
//!
//! * power series, in double precision or double-double when the terms cancel;
//! * Laplace-type integral representations (`IntegralRep`), split at `u = 1` with the tail
//!   folded back by `u -> 1/u`, plus the beta mixture `Gamma(b) E_{a,b}(z) = E[E_a(z T^a)]`,
//!   `T ~ Beta(1, b - 1)` and the recurrence in `b` for large negative arguments;
//! * the duplication formula `E_a(x^a) = (E_{a/2}(x^{a/2}) + E_{a/2}(-x^{a/2})) / 2`;
//! * the algebraic asymptotic expansion for large `|x|`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dd::{self, DD};
use crate::error::{out_of_range, Error, Result};
use crate::quad;
use crate::special::{cos_pi, ln_gamma, pochhammer_ratio, rgamma, sin_pi, EvalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Series,
    IntegralRep,
    Duplication,
    Asymptotic,
    Auto,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Series => "series",
            Method::IntegralRep => "integral",
            Method::Duplication => "duplication",
            Method::Asymptotic => "asymptotic",
            Method::Auto => "auto",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "series" => Ok(Method::Series),
            "integral" | "integralrep" | "integral-rep" => Ok(Method::IntegralRep),
            "duplication" => Ok(Method::Duplication),
            "asymptotic" => Ok(Method::Asymptotic),
            "auto" => Ok(Method::Auto),
            other => Err(Error::Invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Parameters `(alpha, beta)` of `E_{alpha,beta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

pub const MAX_ALPHA: f64 = 26.0;
pub const MAX_BETA: f64 = 200.0;

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = MLParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn one(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= MAX_ALPHA) {
            return Err(out_of_range("alpha", format!("{} not in (0, {MAX_ALPHA}]", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta <= MAX_BETA) {
            return Err(out_of_range("beta", format!("{} not in (0, {MAX_BETA}]", self.beta)));
        }
        Ok(())
    }
}

/// `sign * exp(ln)`, used for intermediate values outside the double range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogVal {
    pub ln: f64,
    pub sign: f64,
}

impl LogVal {
    pub fn from_f64(x: f64) -> LogVal {
        if x == 0.0 {
            LogVal { ln: f64::NEG_INFINITY, sign: 0.0 }
        } else {
            LogVal { ln: x.abs().ln(), sign: x.signum() }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    fn add(self, o: LogVal) -> LogVal {
        if self.sign == 0.0 {
            return o;
        }
        if o.sign == 0.0 {
            return self;
        }
        let (big, small) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        let r = 1.0 + small.sign * big.sign * (small.ln - big.ln).exp();
        if r == 0.0 {
            return LogVal::from_f64(0.0);
        }
        LogVal { ln: big.ln + r.abs().ln(), sign: big.sign * r.signum() }
    }

    fn scale_ln(self, l: f64) -> LogVal {
        LogVal { ln: self.ln + l, sign: self.sign }
    }

    fn finish(self, what: &str) -> Result<f64> {
        if self.sign == 0.0 {
            return Ok(0.0);
        }
        if self.ln.is_nan() {
            return Err(Error::NonConvergence(format!("{what}: NaN")));
        }
        if self.ln > f64::MAX.ln() {
            return Err(Error::Overflow(format!("{what}: log-magnitude {:.6e}", self.ln)));
        }
        if self.ln < -745.0 {
            return Err(Error::Underflow(format!("{what}: log-magnitude {:.6e}", self.ln)));
        }
        Ok(self.to_f64())
    }
}

/// Argument `sign * exp(ln)` with `ln` in double-double.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Arg {
    pub sign: f64,
    pub ln: DD,
}

impl Arg {
    pub fn from_value(x: f64) -> Result<Arg> {
        if !x.is_finite() {
            return Err(out_of_range("x", format!("{x} is not finite")));
        }
        if x == 0.0 {
            return Ok(Arg { sign: 0.0, ln: DD::ZERO });
        }
        Ok(Arg { sign: x.signum(), ln: dd::ln(DD::from_f64(x.abs())) })
    }

    /// `sign * t^alpha`.
    pub fn from_power(alpha: f64, t: f64, sign: f64) -> Result<Arg> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(out_of_range("x", format!("power base {t} must be finite and >= 0")));
        }
        if t == 0.0 {
            return Ok(Arg { sign: 0.0, ln: DD::ZERO });
        }
        Ok(Arg { sign: sign.signum(), ln: dd::ln(DD::from_f64(t)).mul_f64(alpha) })
    }

    fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    fn ln_s(&self, alpha: f64) -> f64 {
        self.ln.hi / alpha
    }

    fn scaled(&self, ln_factor: f64) -> Arg {
        Arg { sign: self.sign, ln: self.ln + DD::from_f64(ln_factor) }
    }
}

fn near_integer_alpha(alpha: f64) -> bool {
    sin_pi(alpha).abs() < 1e-6
}

// the kernel representation needs (1 - beta)/alpha > -1 with some room
fn kernel_beta_ok(alpha: f64, beta: f64) -> bool {
    beta < 1.0 + 0.95 * alpha
}

struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn new() -> Self {
        Neumaier { sum: 0.0, c: 0.0 }
    }
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn series_plan(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<(f64, f64, f64)> {
    let ln_s = arg.ln_s(alpha);
    if ln_s > 700.0 {
        return Err(Error::NonConvergence("series: argument too large".into()));
    }
    let s = ln_s.exp();
    let n_star = ((s - beta) / alpha).max(0.0);
    let n_end = n_star + (9.0 * s.sqrt() + 40.0) / alpha;
    if n_end > cfg.max_terms as f64 {
        return Err(Error::NonConvergence(format!(
            "series needs about {n_end:.0} terms, budget is {}",
            cfg.max_terms
        )));
    }
    let lnz = arg.ln.hi;
    let term_ln = |n: f64| n * lnz - ln_gamma(beta + alpha * n).map(|g| g.log_abs).unwrap_or(f64::INFINITY);
    let lref = term_ln(n_star.floor()).max(term_ln(n_star.ceil())).max(term_ln(0.0));
    Ok((lref, n_star, n_end))
}

struct SeriesOut {
    val: LogVal,
    err: f64,
}

fn series_f64(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<SeriesOut> {
    let (lref, n_star, n_end) = series_plan(alpha, beta, arg, cfg)?;
    let lnz = arg.ln.hi;
    let neg = arg.sign < 0.0;
    let mut acc = Neumaier::new();
    let mut abs_sum = 0.0;
    let mut max_l: f64 = 1.0;
    let mut small = 0;
    let limit = (n_end as usize + 50).min(cfg.max_terms);
    for n in 0..=limit {
        let nf = n as f64;
        let l = nf * lnz - ln_gamma(beta + alpha * nf)?.log_abs - lref;
        let mut t = l.exp();
        if neg && n % 2 == 1 {
            t = -t;
        }
        acc.add(t);
        abs_sum += t.abs();
        max_l = max_l.max((l + lref).abs());
        if nf > n_star {
            let total = acc.value().abs();
            if t.abs() <= 1e-17 * total || t.abs() <= 1e-30 * abs_sum {
                small += 1;
                if small >= 2 {
                    let v = acc.value();
                    let err = if v == 0.0 { f64::INFINITY } else { abs_sum / v.abs() * f64::EPSILON * max_l };
                    return Ok(SeriesOut { val: LogVal::from_f64(v).scale_ln(lref), err });
                }
            } else {
                small = 0;
            }
        }
    }
    Err(Error::NonConvergence(format!("series did not converge within {limit} terms")))
}

fn series_dd(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<SeriesOut> {
    let (lref, n_star, n_end) = series_plan(alpha, beta, arg, cfg)?;
    let neg = arg.sign < 0.0;
    let lref_dd = DD::from_f64(lref);
    let mut acc = DD::ZERO;
    let mut abs_sum = 0.0;
    let mut max_l: f64 = 1.0;
    let mut small = 0;
    let limit = (n_end as usize + 50).min(cfg.max_terms);
    for n in 0..=limit {
        let nf = n as f64;
        let y = DD::prod(alpha, nf) + DD::from_f64(beta);
        let l = arg.ln.mul_f64(nf) - dd::ln_gamma(y);
        let mut t = dd::exp(l - lref_dd);
        if neg && n % 2 == 1 {
            t = -t;
        }
        acc = acc + t;
        abs_sum += t.hi.abs();
        max_l = max_l.max(l.hi.abs());
        if nf > n_star {
            let total = acc.hi.abs();
            if t.hi.abs() <= 1e-33 * total || t.hi.abs() <= 1e-40 * abs_sum {
                small += 1;
                if small >= 2 {
                    let v = acc.to_f64();
                    let err = if v == 0.0 { f64::INFINITY } else { abs_sum / v.abs() * 1e-31 * max_l };
                    return Ok(SeriesOut { val: LogVal::from_f64(v).scale_ln(lref), err });
                }
            } else {
                small = 0;
            }
        }
    }
    Err(Error::NonConvergence(format!("series did not converge within {limit} terms")))
}

/// Power series; falls back to double-double when the double sum cancels too much.
fn series(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig, strict: bool) -> Result<LogVal> {
    if arg.is_zero() {
        return Ok(LogVal::from_f64(rgamma(beta)));
    }
    let first = series_f64(alpha, beta, arg, cfg)?;
    if first.err <= cfg.rel_tol {
        return Ok(first.val);
    }
    let second = series_dd(alpha, beta, arg, cfg)?;
    if second.err <= cfg.rel_tol || (strict && second.err <= cfg.rel_tol.sqrt()) {
        return Ok(second.val);
    }
    Err(Error::NonConvergence(format!(
        "series loses too many digits to cancellation (estimated error {:.1e})",
        second.err
    )))
}

/// `(1/(alpha pi)) int_0^inf exp(-s u^{1/alpha}) u^p (u sin(pi b) + sigma sin(pi(b-a))) / (u^2 + 2 sigma cos(pi a) u + 1) du`
/// with `p = (1 - b)/a`; `sigma = +1` is the kernel of `E(-s^a)`, `sigma = -1` the one of `E(+s^a)`.
pub(crate) fn kernel_integral(alpha: f64, beta: f64, sigma: f64, ln_s: f64, cfg: &EvalConfig) -> Result<f64> {
    let p = (1.0 - beta) / alpha;
    let m = if p < 0.0 { 1.0 / (1.0 + p) } else { 1.0 };
    let ln_m = m.ln();
    let c = cos_pi(alpha);
    let sb = sin_pi(beta);
    let sba = sin_pi(beta - alpha);
    let inv_a = 1.0 / alpha;
    let integrand = |w: f64| -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let lw = w.ln();
        let lu = m * lw;
        let u = lu.exp();
        let jac = ln_m + (m - 1.0) * lw;
        let den = u * u + 2.0 * sigma * c * u + 1.0;
        let mut out = 0.0;
        let ea = (-(ln_s + lu * inv_a).exp()).exp();
        if ea > 0.0 {
            out += ea * (p * lu + jac).exp() * (u * sb + sigma * sba);
        }
        let eb = (-(ln_s - lu * inv_a).exp()).exp();
        if eb > 0.0 {
            out += eb * ((-p - 1.0) * lu + jac).exp() * (sb + sigma * sba * u);
        }
        out / den
    };
    let mut breaks = Vec::new();
    let peak = -sigma * c;
    if peak > 0.0 && peak < 1.0 {
        breaks.push(peak.powf(1.0 / m));
    }
    // points where s u^{1/alpha} (resp. s v^{-1/alpha}) reaches 1, 4, 16, ...; beyond them the
    // exponential factor is negligible and a panel straddling the decay would look flat
    for k in 0..6 {
        let lc = (4f64.powi(k)).ln();
        let ua = (alpha * (lc - ln_s)).exp();
        if ua < 1.0 {
            breaks.push(ua.powf(1.0 / m));
        }
        let ub = (alpha * (ln_s - lc)).exp();
        if ub < 1.0 && ub > 0.0 {
            breaks.push(ub.powf(1.0 / m));
        }
    }
    let r = quad::integrate(integrand, 0.0, 1.0, &breaks, cfg.rel_tol * 0.1, 1e-300, 4000)?;
    Ok(r.value / (alpha * PI))
}

// E_a(-s^a) = 1/(pi a) int_0^{pi a} exp(-s (sin p / sin(pi a - p))^{1/a}) dp for a in (0, 1);
// the integrand is bounded and smooth even as a -> 1, where the kernel form degenerates
fn angular(alpha: f64, arg: &Arg, cfg: &EvalConfig) -> Result<LogVal> {
    if !(alpha > 0.0 && alpha < 1.0) || arg.sign > 0.0 {
        return Err(Error::UnsupportedRegion("angular form needs alpha in (0, 1) and a negative argument".into()));
    }
    if arg.is_zero() {
        return Ok(LogVal::from_f64(1.0));
    }
    let ln_s = arg.ln_s(alpha);
    let top = PI * alpha;
    // sin(pi a - p), written around the endpoint that is close to a multiple of pi
    let d = PI * (1.0 - alpha);
    let far_sin = |p: f64| if alpha > 0.5 { (d + p).sin() } else { (top - p).sin() };
    let integrand = |p: f64| -> f64 {
        let den = far_sin(p);
        if p <= 0.0 {
            return 1.0;
        }
        if !(den > 0.0) {
            return 0.0;
        }
        let ln_w = p.sin().ln() - den.ln();
        (-(ln_s + ln_w / alpha).exp()).exp()
    };
    let (sa, ca) = (sin_pi(alpha), cos_pi(alpha));
    let mut breaks = Vec::new();
    for k in -6..16 {
        // angle where s t = 2^k
        let w = (alpha * (k as f64 * 2f64.ln() - ln_s)).exp();
        let p = (w * sa).atan2(1.0 + w * ca);
        if p > 0.0 && p < top {
            breaks.push(p);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let r = quad::integrate(integrand, 0.0, top, &breaks, cfg.rel_tol * 0.1, 1e-300, 4000)?;
    Ok(LogVal::from_f64(r.value / top))
}

// contribution of the two poles exp(+-i pi/alpha) for alpha in (1, 2), without the s^{1-b} factor
fn pole_term(alpha: f64, beta: f64, s: f64) -> f64 {
    let th = PI / alpha;
    2.0 / alpha * (s * th.cos()).exp() * (s * th.sin() + PI * (1.0 - beta) / alpha).cos()
}

fn integral_rep(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<LogVal> {
    if arg.is_zero() {
        return Ok(LogVal::from_f64(rgamma(beta)));
    }
    if !(alpha < 2.0) || near_integer_alpha(alpha) {
        return Err(Error::UnsupportedRegion(format!(
            "integral representation needs alpha in (0, 2) away from 1, got {alpha}"
        )));
    }
    if !kernel_beta_ok(alpha, beta) {
        if arg.sign < 0.0 {
            if let Ok(v) = recurrence(alpha, beta, arg, cfg) {
                return Ok(v);
            }
        }
        return mixture(alpha, beta, arg, cfg);
    }
    let ln_s = arg.ln_s(alpha);
    let s = ln_s.exp();
    let pre = (1.0 - beta) * ln_s;
    if arg.sign < 0.0 {
        let mut v = kernel_integral(alpha, beta, 1.0, ln_s, cfg)?;
        if alpha > 1.0 {
            v += pole_term(alpha, beta, s);
        }
        Ok(LogVal::from_f64(v).scale_ln(pre))
    } else {
        let i = kernel_integral(alpha, beta, -1.0, ln_s, cfg)?;
        let lead = LogVal { ln: s - alpha.ln(), sign: 1.0 };
        Ok(lead.add(LogVal::from_f64(i)).scale_ln(pre))
    }
}

// Gamma(b) E_{a,b}(z) = (b-1) int_0^1 u^(b-2) E_a(z (1-u)^a) du, integrated in v = u^(b-1) when b <= 2
// so that the endpoint singularity goes away
fn mixture(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<LogVal> {
    if !(beta > 1.0) {
        return Err(Error::UnsupportedRegion(format!("beta mixture needs beta > 1, got {beta}")));
    }
    let b1 = beta - 1.0;
    let ln_s = arg.ln_s(alpha);
    let s = ln_s.exp();
    let in_v = b1 <= 1.0;
    // log of the integrand's peak, so the scaled integrand stays near one
    let scale = if arg.sign > 0.0 {
        let top = auto(alpha, 1.0, arg, cfg)?.ln;
        if in_v || s <= b1 - 1.0 {
            top
        } else {
            let u = (b1 - 1.0) / s;
            top + b1.ln() + (b1 - 1.0) * u.ln() - s * u
        }
    } else {
        0.0
    };
    let mut failure = None;
    let integrand = |w: f64| -> f64 {
        let (u, weight) = if in_v {
            (w.powf(1.0 / b1), 1.0)
        } else {
            (w, b1 * w.powf(b1 - 1.0))
        };
        if weight == 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return weight * (-scale).exp() * rgamma(1.0);
        }
        let inner = arg.scaled(alpha * (-u).ln_1p());
        match auto(alpha, 1.0, &inner, cfg) {
            Ok(e) => weight * e.scale_ln(-scale).to_f64(),
            Err(err) => {
                failure.get_or_insert(err);
                0.0
            }
        }
    };
    // where s u (resp. s (1 - u)) is of order one, mapped to the integration variable
    let to_w = |u: f64| if in_v { u.powf(b1) } else { u };
    let mut breaks = Vec::new();
    for k in [1.0, 10.0, 100.0] {
        let u = k / s;
        if u < 1.0 {
            breaks.push(to_w(u));
            breaks.push(to_w(1.0 - u));
        }
    }
    if !in_v && b1 > 1.0 && (b1 - 1.0) / s < 1.0 {
        breaks.push((b1 - 1.0) / s);
    }
    breaks.retain(|w| *w > 0.0 && *w < 1.0);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    // exp of a log-magnitude L carries a relative error of about L eps
    let rel = cfg.rel_tol.max(8.0 * scale.abs() * f64::EPSILON);
    let r = quad::integrate(integrand, 0.0, 1.0, &breaks, rel, 1e-300, 2000);
    if let Some(e) = failure {
        return Err(e);
    }
    let r = r?;
    let lg = ln_gamma(beta)?.log_abs;
    Ok(LogVal::from_f64(r.value).scale_ln(scale - lg))
}

// Gamma(b + a) E_{a,b+a}(z) = (b)_a (Gamma(b) E_{a,b}(z) - 1) / z, started from the kernel representation
fn recurrence(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<LogVal> {
    let z = arg.sign * arg.ln.hi.exp();
    if !z.is_finite() || z >= 0.0 {
        return Err(Error::UnsupportedRegion("recurrence needs a finite negative argument".into()));
    }
    let steps = ((beta - 1.0 - 0.95 * alpha) / alpha).ceil().max(0.0) as usize;
    let b0 = beta - steps as f64 * alpha;
    if !(b0 > 0.0) {
        return Err(Error::UnsupportedRegion("recurrence base below zero".into()));
    }
    let base = integral_rep(alpha, b0, arg, cfg)?;
    let mut s_val = base.scale_ln(ln_gamma(b0)?.log_abs).to_f64();
    let mut rel = 10.0 * cfg.rel_tol;
    let mut b = b0;
    for _ in 0..steps {
        let d = s_val - 1.0;
        rel = rel * (s_val / d).abs() + f64::EPSILON;
        s_val = pochhammer_ratio(alpha, b)? * d / z;
        b += alpha;
    }
    if rel > 10.0 * cfg.rel_tol {
        return Err(Error::NonConvergence(format!("recurrence amplified errors to {rel:.1e}")));
    }
    Ok(LogVal::from_f64(s_val).scale_ln(-ln_gamma(beta)?.log_abs))
}

fn asymptotic(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<LogVal> {
    if !(alpha < 2.0) || (arg.sign < 0.0 && near_integer_alpha(alpha)) {
        return Err(Error::UnsupportedRegion(format!("asymptotic expansion not available for alpha = {alpha}")));
    }
    if arg.ln.hi < ASYMPTOTIC_MIN_LN_ABS {
        return Err(Error::UnsupportedRegion("argument too small for the asymptotic expansion".into()));
    }
    let ln_s = arg.ln_s(alpha);
    let s = ln_s.exp();
    let lnz = arg.ln.hi;
    let mut lead = LogVal::from_f64(0.0);
    if arg.sign > 0.0 {
        lead = LogVal { ln: (1.0 - beta) * ln_s + s - alpha.ln(), sign: 1.0 };
    } else if alpha > 1.0 {
        lead = LogVal::from_f64(pole_term(alpha, beta, s)).scale_ln((1.0 - beta) * ln_s);
    }
    // -sum_{n>=1} z^{-n} / Gamma(b - a n), truncated at its smallest term, relative to exp(base)
    let mut acc = Neumaier::new();
    let mut base = f64::NAN;
    let mut prev = f64::INFINITY;
    let mut last = f64::INFINITY;
    for n in 1..=cfg.max_terms {
        let nf = n as f64;
        let g = match ln_gamma(beta - alpha * nf) {
            Ok(g) => g,
            Err(Error::Pole(_)) => continue,
            Err(e) => return Err(e),
        };
        let ln_mag = -nf * lnz - g.log_abs;
        if base.is_nan() {
            base = ln_mag;
        }
        let mag = (ln_mag - base).exp();
        if mag > prev {
            break;
        }
        let sgn = if arg.sign < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        acc.add(-sgn * g.sign * mag);
        prev = mag;
        last = mag;
        if mag <= 1e-17 * acc.value().abs() {
            break;
        }
    }
    let tail = if base.is_nan() { LogVal::from_f64(0.0) } else { LogVal::from_f64(acc.value()).scale_ln(base) };
    let total = lead.add(tail);
    let rel_last = if base.is_nan() { 0.0 } else { (last.ln() + base - total.ln).exp() };
    if !(rel_last <= cfg.rel_tol) {
        return Err(Error::NonConvergence(format!(
            "asymptotic series stalls with smallest term {rel_last:.1e} relative to the sum"
        )));
    }
    Ok(total)
}

/// `ln|x|` above which the asymptotic expansion is attempted explicitly.
pub const ASYMPTOTIC_MIN_LN_ABS: f64 = 2.302_585_092_994_046;

fn duplication(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<LogVal> {
    if beta != 1.0 || arg.sign < 0.0 || !(alpha <= 4.0) {
        return Err(Error::UnsupportedRegion(
            "duplication needs beta = 1, a non-negative argument and alpha in (0, 4]".into(),
        ));
    }
    if arg.is_zero() {
        return Ok(LogVal::from_f64(1.0));
    }
    let half = alpha / 2.0;
    let inner = Arg { sign: 1.0, ln: DD { hi: arg.ln.hi * 0.5, lo: arg.ln.lo * 0.5 } };
    let neg_inner = Arg { sign: -1.0, ..inner };
    let a = auto(half, 1.0, &inner, cfg)?;
    let b = auto(half, 1.0, &neg_inner, cfg)?;
    Ok(a.add(b).scale_ln(-std::f64::consts::LN_2))
}

fn closed_form(alpha: f64, beta: f64, arg: &Arg) -> Option<LogVal> {
    if beta != 1.0 {
        return None;
    }
    if arg.is_zero() {
        return Some(LogVal::from_f64(1.0));
    }
    let ln_s = arg.ln_s(alpha);
    if alpha == 1.0 {
        let z = arg.sign * arg.ln.hi.exp();
        return Some(LogVal { ln: z, sign: 1.0 });
    }
    if alpha == 2.0 {
        let s = ln_s.exp();
        if arg.sign > 0.0 {
            return Some(LogVal { ln: s + (0.5 * (1.0 + (-2.0 * s).exp())).ln(), sign: 1.0 });
        }
        return Some(LogVal::from_f64(s.cos()));
    }
    None
}

fn auto(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<LogVal> {
    Ok(auto_with_method(alpha, beta, arg, cfg)?.0)
}

fn auto_with_method(alpha: f64, beta: f64, arg: &Arg, cfg: &EvalConfig) -> Result<(LogVal, Method)> {
    if arg.is_zero() {
        return Ok((LogVal::from_f64(rgamma(beta)), Method::Series));
    }
    if let Some(v) = closed_form(alpha, beta, arg) {
        return Ok((v, Method::Series));
    }
    let ln_s = arg.ln_s(alpha);
    let regular = alpha < 2.0 && !near_integer_alpha(alpha);
    if arg.sign > 0.0 {
        if let Ok(v) = series(alpha, beta, arg, cfg, false) {
            return Ok((v, Method::Series));
        }
        if regular && kernel_beta_ok(alpha, beta) {
            return Ok((integral_rep(alpha, beta, arg, cfg)?, Method::IntegralRep));
        }
        if beta == 1.0 && alpha <= 4.0 {
            return Ok((duplication(alpha, beta, arg, cfg)?, Method::Duplication));
        }
        if regular {
            if let Ok(v) = asymptotic(alpha, beta, arg, cfg) {
                return Ok((v, Method::Asymptotic));
            }
        }
        if beta > 1.0 && alpha <= 4.0 {
            return Ok((mixture(alpha, beta, arg, cfg)?, Method::IntegralRep));
        }
        return Err(Error::UnsupportedRegion(format!(
            "no method for alpha = {alpha}, beta = {beta} at ln x = {:.3}",
            arg.ln.hi
        )));
    }
    if ln_s <= 30f64.ln() {
        if let Ok(v) = series(alpha, beta, arg, cfg, false) {
            return Ok((v, Method::Series));
        }
    }
    if beta == 1.0 && alpha < 1.0 && sin_pi(alpha) < 1e-2 {
        return Ok((angular(alpha, arg, cfg)?, Method::IntegralRep));
    }
    if regular {
        if ln_s >= 50f64.ln() {
            if let Ok(v) = asymptotic(alpha, beta, arg, cfg) {
                return Ok((v, Method::Asymptotic));
            }
        }
        if kernel_beta_ok(alpha, beta) {
            return Ok((integral_rep(alpha, beta, arg, cfg)?, Method::IntegralRep));
        }
        if let Ok(v) = recurrence(alpha, beta, arg, cfg) {
            return Ok((v, Method::IntegralRep));
        }
    }
    if beta > 1.0 && alpha < 2.0 {
        return Ok((mixture(alpha, beta, arg, cfg)?, Method::IntegralRep));
    }
    series(alpha, beta, arg, cfg, true).map(|v| (v, Method::Series)).map_err(|e| {
        Error::UnsupportedRegion(format!("no stable method for alpha = {alpha}, beta = {beta} here ({e})"))
    })
}

pub(crate) fn evaluate(alpha: f64, beta: f64, arg: &Arg, method: Method, cfg: &EvalConfig) -> Result<(LogVal, Method)> {
    MLParams::new(alpha, beta)?;
    cfg.validate()?;
    match method {
        Method::Auto => auto_with_method(alpha, beta, arg, cfg),
        Method::Series => {
            if let Some(v) = closed_form(alpha, beta, arg) {
                if alpha == 1.0 {
                    return Ok((v, method));
                }
            }
            series(alpha, beta, arg, cfg, true).map(|v| (v, method))
        }
        Method::IntegralRep => integral_rep(alpha, beta, arg, cfg).map(|v| (v, method)),
        Method::Duplication => duplication(alpha, beta, arg, cfg).map(|v| (v, method)),
        Method::Asymptotic => asymptotic(alpha, beta, arg, cfg).map(|v| (v, method)),
    }
}

/// Value together with the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlEval {
    pub value: f64,
    pub method: Method,
}

/// `E_{alpha,beta}(x)`.
pub fn eval_ml(params: MLParams, x: f64, method: Method, cfg: &EvalConfig) -> Result<f64> {
    eval_ml_report(params, x, method, cfg).map(|r| r.value)
}

pub fn eval_ml_report(params: MLParams, x: f64, method: Method, cfg: &EvalConfig) -> Result<MlEval> {
    let arg = Arg::from_value(x)?;
    let (v, m) = evaluate(params.alpha, params.beta, &arg, method, cfg)?;
    Ok(MlEval { value: v.finish("E_{alpha,beta}(x)")?, method: m })
}

/// `Gamma(beta) E_{alpha,beta}(x)`, finite in cases where the two factors alone are not.
pub fn eval_ml_scaled(params: MLParams, x: f64, method: Method, cfg: &EvalConfig) -> Result<f64> {
    if x == 0.0 {
        params.validate()?;
        return Ok(1.0);
    }
    let arg = Arg::from_value(x)?;
    let (v, _) = evaluate(params.alpha, params.beta, &arg, method, cfg)?;
    v.scale_ln(ln_gamma(params.beta)?.log_abs).finish("Gamma(beta) E_{alpha,beta}(x)")
}

/// `(ln|E_{alpha,beta}(x)|, sign)`, available where the value itself overflows or underflows.
pub fn eval_ml_ln(params: MLParams, x: f64, method: Method, cfg: &EvalConfig) -> Result<(f64, f64)> {
    let arg = Arg::from_value(x)?;
    let (v, _) = evaluate(params.alpha, params.beta, &arg, method, cfg)?;
    if v.ln.is_nan() {
        return Err(Error::NonConvergence("ln E_{alpha,beta}(x): NaN".into()));
    }
    Ok((v.ln, v.sign))
}

/// `E_alpha(sign * x^alpha)` with the power kept in log space.
pub fn eval_ml_power(alpha: f64, x: f64, sign: f64, cfg: &EvalConfig) -> Result<f64> {
    eval_ml_power_ab(MLParams::one(alpha)?, x, sign, Method::Auto, cfg)
}

/// `E_{alpha,beta}(sign * x^alpha)`.
pub fn eval_ml_power_ab(params: MLParams, x: f64, sign: f64, method: Method, cfg: &EvalConfig) -> Result<f64> {
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::Invalid(format!("sign must be +1 or -1, got {sign}")));
    }
    let arg = Arg::from_power(params.alpha, x, sign)?;
    let (v, _) = evaluate(params.alpha, params.beta, &arg, method, cfg)?;
    v.finish("E_{alpha,beta}(sign x^alpha)")
}

/// `G_alpha(x) = e^x - alpha E_alpha(x^alpha)` for `alpha in (0, 4]`, `x >= 0`.
pub fn residual_g(alpha: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 4.0) {
        return Err(out_of_range("alpha", format!("{alpha} not in (0, 4]")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(out_of_range("x", format!("{x} must be finite and >= 0")));
    }
    if x == 0.0 {
        return Ok(1.0 - alpha);
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    if alpha == 2.0 {
        return Ok(-(-x).exp());
    }
    if alpha < 2.0 && !near_integer_alpha(alpha) {
        // G = alpha * int e^{-xt} f_alpha(t) dt
        return Ok(-alpha * kernel_integral(alpha, 1.0, -1.0, x.ln(), cfg)?);
    }
    if alpha > 2.0 {
        let half = alpha / 2.0;
        let e = eval_ml_power(half, x, -1.0, cfg)?;
        return Ok(residual_g(half, x, cfg)? - half * e);
    }
    let e = eval_ml_power(alpha, x, 1.0, cfg)?;
    Ok(x.exp() - alpha * e)
}

/// Densities appearing in the Laplace representations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelDensity {
    F { alpha: f64 },
    G { alpha: f64 },
    H { alpha: f64 },
    GLambda { alpha: f64, beta: f64, lambda: f64 },
}

impl KernelDensity {
    pub fn validate(&self) -> Result<()> {
        let in01 = |a: f64| a > 0.0 && a < 1.0;
        let in12 = |a: f64| a > 1.0 && a < 2.0;
        match *self {
            KernelDensity::F { alpha } if in01(alpha) || in12(alpha) => Ok(()),
            KernelDensity::F { alpha } => Err(out_of_range("alpha", format!("f needs alpha in (0,1) or (1,2), got {alpha}"))),
            KernelDensity::G { alpha } if in01(alpha) => Ok(()),
            KernelDensity::G { alpha } => Err(out_of_range("alpha", format!("g needs alpha in (0,1), got {alpha}"))),
            KernelDensity::H { alpha } if in12(alpha) => Ok(()),
            KernelDensity::H { alpha } => Err(out_of_range("alpha", format!("h needs alpha in (1,2), got {alpha}"))),
            KernelDensity::GLambda { alpha, beta, lambda } => {
                if !(alpha > 0.0 && alpha < beta && beta < 1.0) {
                    return Err(out_of_range("alpha", format!("g_lambda needs 0 < alpha < beta < 1, got ({alpha}, {beta})")));
                }
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return Err(out_of_range("lambda", format!("{lambda} must be positive")));
                }
                Ok(())
            }
        }
    }
}

/// Value of the kernel density at `t > 0`.
pub fn kernel_value(kd: KernelDensity, t: f64) -> Result<f64> {
    kd.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(out_of_range("t", format!("{t} must be positive")));
    }
    let v = match kd {
        KernelDensity::F { alpha } => {
            let ta = t.powf(alpha);
            sin_pi(alpha) * ta / t / (PI * (ta * ta - 2.0 * cos_pi(alpha) * ta + 1.0))
        }
        KernelDensity::G { alpha } => {
            let ta = t.powf(alpha);
            sin_pi(alpha) * ta / t / (PI * (ta * ta + 2.0 * cos_pi(alpha) * ta + 1.0))
        }
        KernelDensity::H { alpha } => {
            let ta = t.powf(alpha);
            -alpha * sin_pi(alpha) * ta / (PI * (ta * ta - 2.0 * cos_pi(alpha) * ta + 1.0))
        }
        KernelDensity::GLambda { alpha, beta, lambda } => {
            let ta = t.powf(alpha);
            let tb = t.powf(beta);
            let l2 = lambda * lambda;
            let num = sin_pi(alpha) * ta * (l2 + tb * tb) - sin_pi(beta) * tb * (l2 + ta * ta)
                + 2.0 * lambda * sin_pi(alpha - beta) * ta * tb;
            let da = ta * ta + 2.0 * lambda * cos_pi(alpha) * ta + l2;
            let db = tb * tb + 2.0 * lambda * cos_pi(beta) * tb + l2;
            num / (PI * t * da * db)
        }
    };
    Ok(v)
}

/// Strict sign changes of a function on a geometric grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignChangeReport {
    pub count: usize,
    pub locations: Vec<f64>,
    pub starting_sign: i8,
}

/// Counts strict sign changes of `f` on `[t_lo, t_hi]`, values with `|f| <= dead_band` having no sign.
pub fn count_sign_changes<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    t_lo: f64,
    t_hi: f64,
    grid_size: usize,
    dead_band: f64,
) -> Result<SignChangeReport> {
    if !(t_lo > 0.0 && t_lo < t_hi) || !t_hi.is_finite() {
        return Err(Error::Invalid(format!("need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    if grid_size < 64 {
        return Err(Error::Invalid(format!("grid_size must be at least 64, got {grid_size}")));
    }
    let ratio = (t_hi / t_lo).ln() / (grid_size - 1) as f64;
    let sign_of = |v: f64| -> i8 {
        if v > dead_band {
            1
        } else if v < -dead_band {
            -1
        } else {
            0
        }
    };
    let mut locations = Vec::new();
    let mut starting_sign = 0i8;
    let mut last: Option<(f64, i8)> = None;
    let mut prev_zero = false;
    for i in 0..grid_size {
        let t = if i + 1 == grid_size { t_hi } else { t_lo * (ratio * i as f64).exp() };
        let v = f(t)?;
        if v.is_nan() {
            return Err(Error::NonConvergence(format!("function is NaN at t = {t}")));
        }
        let sg = sign_of(v);
        if sg == 0 {
            if prev_zero {
                return Err(Error::AmbiguousSign(t));
            }
            prev_zero = true;
            continue;
        }
        prev_zero = false;
        if starting_sign == 0 {
            starting_sign = sg;
        }
        if let Some((tl, sl)) = last {
            if sl != sg {
                let (mut a, mut b) = (tl, t);
                for _ in 0..60 {
                    let mid = (a * b).sqrt();
                    if mid <= a || mid >= b {
                        break;
                    }
                    let sm = sign_of(f(mid)?);
                    if sm == sl {
                        a = mid;
                    } else if sm == sg {
                        b = mid;
                    } else {
                        a = mid;
                        b = mid;
                        break;
                    }
                }
                locations.push((a * b).sqrt());
            }
        }
        last = Some((t, sg));
    }
    if starting_sign == 0 {
        return Err(Error::AmbiguousSign(t_lo));
    }
    Ok(SignChangeReport { count: locations.len(), locations, starting_sign })
}
