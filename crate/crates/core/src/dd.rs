//! Double-double arithmetic, just enough for the cancellation-heavy power series.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = 134_217_729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    #[cfg(test)]
    pub fn new(hi: f64, lo: f64) -> DD {
        let (h, l) = quick_two_sum(hi, lo);
        DD { hi: h, lo: l }
    }

    pub fn from_f64(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn prod(a: f64, b: f64) -> DD {
        let (p, e) = two_prod(a, b);
        DD { hi: p, lo: e }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqr(self) -> DD {
        self * self
    }

    pub fn mul_f64(self, b: f64) -> DD {
        let (p, e) = two_prod(self.hi, b);
        let (h, l) = quick_two_sum(p, e + self.lo * b);
        DD { hi: h, lo: l }
    }

    fn ldexp(self, k: i32) -> DD {
        let mut out = self;
        let mut k = k;
        while k != 0 {
            let step = k.clamp(-1000, 1000);
            let f = 2f64.powi(step);
            out = DD { hi: out.hi * f, lo: out.lo * f };
            k -= step;
        }
        out
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        DD { hi: h, lo: l }
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p, e);
        DD { hi: h, lo: l }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        DD { hi: h, lo: l } + DD::from_f64(q3)
    }
}

pub const LN2: DD = DD { hi: 0.693_147_180_559_945_3, lo: 2.319_046_813_846_299_6e-17 };
pub const PI: DD = DD { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_2e-16 };

/// `exp(x)`; infinite above the double range, zero below it.
pub fn exp(x: DD) -> DD {
    if x.hi > 709.8 {
        return DD::from_f64(f64::INFINITY);
    }
    if x.hi < -745.2 {
        return DD::ZERO;
    }
    let k = (x.hi / LN2.hi).round();
    let r = (x - LN2.mul_f64(k)).ldexp(-6);
    // expm1(r) by Taylor, then six doublings of (1 + p)^2 - 1 = 2p + p^2
    let mut term = r;
    let mut p = r;
    for n in 2..=16 {
        term = term * r / DD::from_f64(n as f64);
        p = p + term;
        if term.hi.abs() < 1e-34 * p.hi.abs() {
            break;
        }
    }
    for _ in 0..6 {
        p = p.mul_f64(2.0) + p.sqr();
    }
    (DD::ONE + p).ldexp(k as i32)
}

/// Natural logarithm for `x > 0`, one Newton step on top of the double result.
pub fn ln(x: DD) -> DD {
    let y = DD::from_f64(x.hi.ln());
    y + x * exp(-y) - DD::ONE
}

fn stirling_coefficients() -> &'static [DD; 12] {
    static C: OnceLock<[DD; 12]> = OnceLock::new();
    C.get_or_init(|| {
        let bern: [(f64, f64); 12] = [
            (1.0, 6.0),
            (-1.0, 30.0),
            (1.0, 42.0),
            (-1.0, 30.0),
            (5.0, 66.0),
            (-691.0, 2730.0),
            (7.0, 6.0),
            (-3617.0, 510.0),
            (43867.0, 798.0),
            (-174_611.0, 330.0),
            (854_513.0, 138.0),
            (-236_364_091.0, 2730.0),
        ];
        let mut out = [DD::ZERO; 12];
        for (k, (num, den)) in bern.iter().enumerate() {
            let m = 2.0 * (k as f64 + 1.0);
            out[k] = DD::from_f64(*num) / (DD::from_f64(*den) * DD::from_f64(m * (m - 1.0)));
        }
        out
    })
}

fn half_ln_2pi() -> DD {
    static C: OnceLock<DD> = OnceLock::new();
    *C.get_or_init(|| {
        let l = ln(PI.mul_f64(2.0));
        DD { hi: l.hi * 0.5, lo: l.lo * 0.5 }
    })
}

/// `ln Gamma(y)` for `y > 0`.
pub fn ln_gamma(y: DD) -> DD {
    let mut y = y;
    let mut shift = DD::ZERO;
    if y.hi < 40.0 {
        let mut prod = DD::ONE;
        while y.hi < 40.0 {
            prod = prod * y;
            y = y + DD::ONE;
            if prod.hi > 1e250 {
                shift = shift + ln(prod);
                prod = DD::ONE;
            }
        }
        shift = shift + ln(prod);
    }
    let inv = DD::ONE / y;
    let inv2 = inv.sqr();
    let mut series = DD::ZERO;
    let mut pw = inv;
    for c in stirling_coefficients() {
        let t = *c * pw;
        series = series + t;
        if t.hi.abs() < 1e-34 {
            break;
        }
        pw = pw * inv2;
    }
    (y - DD::from_f64(0.5)) * ln(y) - y + half_ln_2pi() + series - shift
}
