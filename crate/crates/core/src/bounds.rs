//! Two-sided bounds on Mittag-Leffler functions as checkable envelopes,
//! and the generalized logarithms obtained by inverting `Gamma(beta) E_{alpha,beta}`.

use serde::{Deserialize, Serialize};

use crate::crossings::{find_mode_m, mode_bounds};
use crate::error::{out_of_range, Error, Result};
use crate::ml_eval::{eval_ml, eval_ml_scaled, residual_g, MLParams, Method};
use crate::roots::brent;
use crate::special::{gamma, ln_gamma, pochhammer_ratio, EvalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    /// `1/(1 + Gamma(1-a) x) <= E_a(-x) <= 1/(1 + x/Gamma(1+a))`.
    Unif,
    /// `e^-x <= E_b(-Gamma(1+b) x) <= E_a(-Gamma(1+a) x) <= 1/(1+x)`.
    Unif1,
    /// `0 < e^x - b E_b(x^b) < e^x - a E_a(x^a) < 1 - a`.
    Rigid,
    /// Two-sided hyperbolic bounds on `Gamma(b) E_{a,b}((b)_a x)` for `x <= 0`.
    KSB,
    /// `Gamma(a) E_{a,a}(Gamma(2a)/Gamma(a) x) <= Gamma(b) E_{a,b}((b)_a x) <= 1/(1-x)_+`.
    Bd1,
    /// `e^x <= Gamma(a) E_{a,a}(Gamma(2a)/Gamma(a) x) <= 1/(1-x/2)_+^2`.
    Bind,
    /// The squared hyperbolic lower bound for `x <= 0`.
    Bind2,
    /// `mu a <= m_a <= Gamma(2a)/(2 Gamma(a)^2) < a/2`.
    #[serde(rename = "BS_BI")]
    BsBi,
    /// Bounds on the rescaled generalized logarithms at `1 + x`.
    GenLogSandwich,
}

pub const ALL_KINDS: [BoundKind; 9] = [
    BoundKind::Unif,
    BoundKind::Unif1,
    BoundKind::Rigid,
    BoundKind::KSB,
    BoundKind::Bd1,
    BoundKind::Bind,
    BoundKind::Bind2,
    BoundKind::BsBi,
    BoundKind::GenLogSandwich,
];

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Unif => "Unif",
            BoundKind::Unif1 => "Unif1",
            BoundKind::Rigid => "Rigid",
            BoundKind::KSB => "KSB",
            BoundKind::Bd1 => "Bd1",
            BoundKind::Bind => "Bind",
            BoundKind::Bind2 => "Bind2",
            BoundKind::BsBi => "BS_BI",
            BoundKind::GenLogSandwich => "GenLogSandwich",
        }
    }

    /// Whether `beta` enters the bound.
    pub fn uses_beta(&self) -> bool {
        matches!(self, BoundKind::Unif1 | BoundKind::Rigid | BoundKind::KSB | BoundKind::Bd1 | BoundKind::GenLogSandwich)
    }
}

impl std::str::FromStr for BoundKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_KINDS
            .iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::Invalid(format!("unknown bound kind {s:?}")))
    }
}

/// Tolerance allowed between consecutive chain members.
pub const ENVELOPE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub kind: BoundKind,
    pub lo: f64,
    pub value: f64,
    /// `+inf` when the upper bound is vacuous.
    pub hi: f64,
    pub slack_lo: f64,
    pub slack_hi: f64,
    /// Each chain must be nondecreasing; the first one runs `lo, ..., value, ..., hi`.
    pub chains: Vec<Vec<f64>>,
}

impl Envelope {
    fn new(kind: BoundKind, value: f64, chains: Vec<Vec<f64>>) -> Envelope {
        let lo = chains[0][0];
        let hi = *chains[0].last().unwrap();
        Envelope { kind, lo, value, hi, slack_lo: value - lo, slack_hi: hi - value, chains }
    }

    /// First link `(chain, position)` where the order fails beyond tolerance.
    pub fn violation(&self) -> Option<(usize, usize)> {
        for (c, chain) in self.chains.iter().enumerate() {
            for (i, w) in chain.windows(2).enumerate() {
                if w[1] < w[0] - ENVELOPE_TOL * (1.0 + w[0].abs()) || w[0].is_nan() || w[1].is_nan() {
                    return Some((c, i));
                }
            }
        }
        None
    }

    pub fn holds(&self) -> bool {
        self.violation().is_none()
    }
}

fn need(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Hypothesis(what.to_string()))
    }
}

fn unit_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(out_of_range("alpha", format!("{alpha} not in (0, 1)")))
    }
}

fn ml(alpha: f64, beta: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    eval_ml(MLParams::new(alpha, beta)?, x, Method::Auto, cfg)
}

fn scaled(alpha: f64, beta: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    eval_ml_scaled(MLParams::new(alpha, beta)?, x, Method::Auto, cfg)
}

/// `Gamma(a) E_{a,a}(Gamma(2a)/Gamma(a) x)`.
fn diag(alpha: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    scaled(alpha, alpha, pochhammer_ratio(alpha, alpha)? * x, cfg)
}

/// `1/(1-x)_+` and friends, infinite past the pole.
fn hyperbolic(d: f64, power: i32) -> f64 {
    if d <= 0.0 {
        f64::INFINITY
    } else {
        d.powi(-power)
    }
}

/// Evaluates the bound `kind` at `(alpha, beta, x)`; `beta` is ignored by one-parameter kinds and `x` by `BS_BI`.
pub fn envelope(kind: BoundKind, alpha: f64, beta: f64, x: f64, cfg: &EvalConfig) -> Result<Envelope> {
    cfg.validate()?;
    if !x.is_finite() {
        return Err(out_of_range("x", format!("{x} is not finite")));
    }
    match kind {
        BoundKind::Unif => {
            unit_alpha(alpha)?;
            need(x >= 0.0, "Unif needs x >= 0")?;
            let v = ml(alpha, 1.0, -x, cfg)?;
            let lo = 1.0 / (1.0 + gamma(1.0 - alpha)? * x);
            let hi = 1.0 / (1.0 + x / gamma(1.0 + alpha)?);
            Ok(Envelope::new(kind, v, vec![vec![lo, v, hi]]))
        }
        BoundKind::Unif1 => {
            need(0.0 < alpha && alpha < beta && beta < 1.0, "Unif1 needs 0 < alpha < beta < 1")?;
            need(x >= 0.0, "Unif1 needs x >= 0")?;
            let eb = ml(beta, 1.0, -gamma(1.0 + beta)? * x, cfg)?;
            let ea = ml(alpha, 1.0, -gamma(1.0 + alpha)? * x, cfg)?;
            Ok(Envelope::new(kind, ea, vec![vec![(-x).exp(), eb, ea, 1.0 / (1.0 + x)]]))
        }
        BoundKind::Rigid => {
            need(0.0 < alpha && alpha < beta && beta < 1.0, "Rigid needs 0 < alpha < beta < 1")?;
            need(x > 0.0, "Rigid needs x > 0")?;
            let gb = residual_g(beta, x, cfg)?;
            let ga = residual_g(alpha, x, cfg)?;
            Ok(Envelope::new(kind, ga, vec![vec![0.0, gb, ga, 1.0 - alpha]]))
        }
        BoundKind::KSB => {
            need(0.0 < alpha && alpha <= 1.0 && beta > alpha, "KSB needs alpha in (0, 1], beta > alpha")?;
            need(x <= 0.0, "KSB lower bound needs x <= 0")?;
            let v = scaled(alpha, beta, pochhammer_ratio(alpha, beta)? * x, cfg)?;
            let c = (ln_gamma(alpha + beta)?.log_abs + ln_gamma(beta - alpha)?.log_abs - 2.0 * ln_gamma(beta)?.log_abs).exp();
            Ok(Envelope::new(kind, v, vec![vec![1.0 / (1.0 - c * x), v, 1.0 / (1.0 - x)]]))
        }
        BoundKind::Bd1 => {
            need(0.0 < alpha && alpha <= 1.0 && beta >= alpha, "Bd1 needs alpha in (0, 1], beta >= alpha")?;
            let v = scaled(alpha, beta, pochhammer_ratio(alpha, beta)? * x, cfg)?;
            let lo = diag(alpha, x, cfg)?;
            Ok(Envelope::new(kind, v, vec![vec![lo, v, hyperbolic(1.0 - x, 1)]]))
        }
        BoundKind::Bind => {
            unit_alpha(alpha)?;
            let v = diag(alpha, x, cfg)?;
            Ok(Envelope::new(kind, v, vec![vec![x.exp(), v, hyperbolic(1.0 - x / 2.0, 2)]]))
        }
        BoundKind::Bind2 => {
            unit_alpha(alpha)?;
            need(x <= 0.0, "Bind2 holds for x <= 0 only")?;
            let v = diag(alpha, x, cfg)?;
            let k = (gamma(1.0 - alpha)? / gamma(1.0 + alpha)?).sqrt() * pochhammer_ratio(alpha, alpha)?;
            Ok(Envelope::new(kind, v, vec![vec![(1.0 - k * x).powi(-2), v, hyperbolic(1.0 - x / 2.0, 2)]]))
        }
        BoundKind::BsBi => {
            unit_alpha(alpha)?;
            let (_, m) = find_mode_m(alpha, cfg)?;
            let (lo, hi) = mode_bounds(alpha)?;
            let at_one = ml(alpha, alpha, -1.0, cfg)?;
            let mu = crate::crossings::MU;
            let chains = vec![vec![lo, m.value, hi], vec![lo, at_one, m.value], vec![hi, alpha / 2.0], vec![mu * alpha, lo]];
            Ok(Envelope::new(kind, m.value, chains))
        }
        BoundKind::GenLogSandwich => {
            unit_alpha(alpha)?;
            need(beta >= alpha, "GenLogSandwich needs beta >= alpha")?;
            need(x > -1.0, "GenLogSandwich needs x > -1")?;
            let y = 1.0 + x;
            let lb = generalized_log(alpha, beta, y, cfg)? / pochhammer_ratio(alpha, beta)?;
            let la = generalized_log(alpha, alpha, y, cfg)? / pochhammer_ratio(alpha, alpha)?;
            let lower = x / y;
            let sqrt_limit = 2.0 * (1.0 - 1.0 / y.sqrt());
            let log = x.ln_1p();
            Ok(Envelope::new(kind, lb, vec![vec![lower, lb, la, log], vec![lower, sqrt_limit, la]]))
        }
    }
}

/// `log_{alpha,beta}(y)`: the unique `t` with `Gamma(beta) E_{alpha,beta}(t) = y`.
pub fn generalized_log(alpha: f64, beta: f64, y: f64, cfg: &EvalConfig) -> Result<f64> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(out_of_range("alpha", format!("{alpha} not in (0, 1]")));
    }
    if !(beta >= alpha) || !beta.is_finite() {
        return Err(out_of_range("beta", format!("{beta} must be >= alpha = {alpha}")));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(out_of_range("y", format!("{y} must be positive and finite")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    let c = pochhammer_ratio(alpha, beta)?;
    let target = y.ln();
    let mut failure = None;
    let mut f = |t: f64| match scaled(alpha, beta, t, cfg) {
        Ok(v) if v > 0.0 => v.ln() - target,
        Ok(v) if v == 0.0 => -f64::MAX,
        Ok(_) => f64::NAN,
        // far above or below any finite target
        Err(Error::Overflow(_)) => f64::MAX,
        Err(Error::Underflow(_)) => -f64::MAX,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    // starting bracket from the rescaled sandwich, widened until the signs disagree
    let a = (1.0 - 1.0 / y) * c;
    let b = target * c;
    let pad = 1e-9 * (1.0 + a.abs().max(b.abs()));
    let (mut lo, mut hi) = (a.min(b) - pad, a.max(b) + pad);
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut expansions = 0;
    while flo > 0.0 || fhi < 0.0 {
        if expansions > 200 || flo.is_nan() || fhi.is_nan() {
            return Err(failure.unwrap_or(Error::NonConvergence(format!("no bracket for log_{{{alpha},{beta}}}({y})"))));
        }
        let w = hi - lo;
        if flo > 0.0 {
            lo -= w;
            flo = f(lo);
        }
        if fhi < 0.0 {
            hi += w;
            fhi = f(hi);
        }
        expansions += 1;
    }
    if !(fhi > flo) {
        return Err(Error::Invalid(format!("Gamma(beta) E_{{alpha,beta}} not increasing on [{lo}, {hi}]")));
    }
    // brent adds a relative 2 eps |x| to this
    let r = brent(&mut f, lo, hi, 1e-15, cfg.max_iter.max(2000));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.x)
}

/// Points of a bound sweep; `betas` is ignored for one-parameter kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub xs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
    pub chain: usize,
    pub link: usize,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub kind: BoundKind,
    pub grid: BoundGrid,
    pub points: usize,
    /// Grid points outside the kind's hypotheses, left out of the sweep.
    pub skipped: usize,
    /// Grid points where the function value is not representable in `f64`.
    pub overflowed: usize,
    pub violations: Vec<BoundViolation>,
    pub max_slack: f64,
    pub rows: Vec<Envelope>,
    pub row_params: Vec<(f64, f64, f64)>,
}

/// Evaluates `kind` over the grid and collects every point where an envelope chain breaks.
pub fn sweep_check(kind: BoundKind, grid: &BoundGrid, cfg: &EvalConfig) -> Result<SweepReport> {
    let betas = if kind.uses_beta() { grid.betas.clone() } else { vec![f64::NAN] };
    let xs = if kind == BoundKind::BsBi { vec![0.0] } else { grid.xs.clone() };
    let mut rep = SweepReport {
        kind,
        grid: grid.clone(),
        points: 0,
        skipped: 0,
        overflowed: 0,
        violations: Vec::new(),
        max_slack: 0.0,
        rows: Vec::new(),
        row_params: Vec::new(),
    };
    for &a in &grid.alphas {
        for &b in &betas {
            for &x in &xs {
                let env = match envelope(kind, a, b, x, cfg) {
                    Ok(e) => e,
                    Err(Error::Hypothesis(_)) | Err(Error::OutOfRange { .. }) => {
                        rep.skipped += 1;
                        continue;
                    }
                    Err(Error::Overflow(_)) => {
                        rep.overflowed += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                rep.points += 1;
                for s in [env.slack_lo, env.slack_hi] {
                    if s.is_finite() {
                        rep.max_slack = rep.max_slack.max(s);
                    }
                }
                if let Some((chain, link)) = env.violation() {
                    rep.violations.push(BoundViolation { alpha: a, beta: b, x, chain, link, envelope: env.clone() });
                }
                rep.rows.push(env);
                rep.row_params.push((a, b, x));
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests;
