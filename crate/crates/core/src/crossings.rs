//! Sign-change points, extrema and open-conjecture probes for differences of
//! Mittag-Leffler functions.

use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::ml_eval::{eval_ml, eval_ml_power, eval_ml_power_ab, residual_g, MLParams, Method};
use crate::roots::{brent, golden_min};
use crate::special::{gamma, rgamma, EvalConfig};

/// Largest abscissa any crossing search is allowed to reach.
pub const X_MAX: f64 = 1e6;

/// The positive minimum of the lower-bound bracket for `m_alpha / alpha`.
pub const MU: f64 = 0.192744;

/// A root together with the bracket that certifies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingResult {
    pub root: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub residual: f64,
    pub iterations: usize,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremumResult {
    pub argmax: f64,
    pub value: f64,
}

/// Outcome of a numerical probe of an unproven claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub conjecture_id: String,
    pub grid: String,
    /// Parameter points where the claimed inequality failed.
    pub violations: Vec<Vec<f64>>,
    pub min_margin: f64,
}

/// Grid over which a conjecture is probed; unused axes are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ProbeGrid {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub xs: Vec<f64>,
}

pub const CONJECTURES: [&str; 4] =
    ["alpha_dec_Ea_minus1", "alpha_inc_Eaa_minus1", "lambda_gt1_root_le1", "stoch_order_M_over_Gamma"];

impl ProbeGrid {
    pub fn default_for(conjecture_id: &str) -> Result<ProbeGrid> {
        let step = |lo: f64, n: usize, h: f64| (0..n).map(|i| lo + h * i as f64).collect::<Vec<_>>();
        let g = match conjecture_id {
            "alpha_dec_Ea_minus1" | "alpha_inc_Eaa_minus1" => {
                ProbeGrid { alphas: step(0.05, 19, 0.05), lambdas: vec![], xs: vec![] }
            }
            "lambda_gt1_root_le1" => ProbeGrid { alphas: step(0.1, 9, 0.1), lambdas: vec![1.5, 2.0, 5.0], xs: vec![] },
            "stoch_order_M_over_Gamma" => ProbeGrid {
                alphas: step(0.1, 9, 0.1),
                lambdas: vec![],
                xs: (0..25).map(|i| 10f64.powf(-2.0 + i as f64 / 6.0)).collect(),
            },
            other => return Err(Error::Invalid(format!("unknown conjecture id {other:?}"))),
        };
        Ok(g)
    }

    fn describe(&self) -> String {
        let axis = |name: &str, v: &[f64]| match (v.first(), v.last()) {
            (Some(a), Some(b)) => format!("{name}: {} points in [{a}, {b}]", v.len()),
            _ => format!("{name}: none"),
        };
        format!("{}; {}; {}", axis("alpha", &self.alphas), axis("lambda", &self.lambdas), axis("x", &self.xs))
    }
}

fn check_ordered01(alpha: f64, beta: f64) -> Result<()> {
    if alpha > 0.0 && alpha < beta && beta < 1.0 {
        Ok(())
    } else {
        Err(out_of_range("alpha", format!("need 0 < alpha < beta < 1, got ({alpha}, {beta})")))
    }
}

/// `E_a(-z) - 1` for `0 <= z <= 1/2`, summed without the leading one.
fn ml_minus_one(a: f64, ln_z: f64, cfg: &EvalConfig) -> f64 {
    let mut sum = 0.0;
    for n in 1..=cfg.max_terms {
        let nf = n as f64;
        let t = (nf * ln_z).exp() * rgamma(1.0 + a * nf);
        sum += if n % 2 == 1 { -t } else { t };
        if t <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `E_alpha(-lambda x^alpha) - E_beta(-lambda x^beta)` and the sum of the magnitudes of its two terms.
fn g_lambda_parts(alpha: f64, beta: f64, lambda: f64, x: f64, cfg: &EvalConfig) -> Result<(f64, f64)> {
    let (za, zb) = (lambda.ln() + alpha * x.ln(), lambda.ln() + beta * x.ln());
    if x > 0.0 && za.max(zb) <= -std::f64::consts::LN_2 {
        // both terms are within 1/2 of one; cancel the ones exactly
        let (a, b) = (ml_minus_one(alpha, za, cfg), ml_minus_one(beta, zb, cfg));
        return Ok((a - b, a.abs() + b.abs()));
    }
    let a = eval_ml_power(alpha, lambda.powf(1.0 / alpha) * x, -1.0, cfg)?;
    let b = eval_ml_power(beta, lambda.powf(1.0 / beta) * x, -1.0, cfg)?;
    Ok((a - b, a.abs() + b.abs()))
}

/// `G_{alpha,beta}(x) = E_alpha(-x^alpha) - E_beta(-x^beta)`.
pub fn g_ab(alpha: f64, beta: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    g_lambda_parts(alpha, beta, 1.0, x, cfg).map(|p| p.0)
}

/// The bracket `(lower, upper)` enclosing `x_{alpha,beta}`, the upper end capped at 1.
pub fn x_ab_bracket(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    check_ordered01(alpha, beta)?;
    let d = beta - alpha;
    let lo = (gamma(1.0 - beta)? * gamma(1.0 + alpha)?).powf(-1.0 / d);
    let hi = (gamma(1.0 + beta)? / gamma(1.0 + alpha)?).powf(1.0 / d);
    Ok((lo, hi.min(1.0)))
}

/// Runs Brent on `[lo, hi]` and certifies the result; `f` returns `(value, scale)`.
fn certified_root<F>(mut f: F, lo: f64, hi: f64, cfg: &EvalConfig) -> Result<CrossingResult>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut failure = None;
    let mut g = |x: f64| match f(x) {
        Ok((v, _)) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let r = brent(&mut g, lo, hi, cfg.rel_tol * lo.abs().max(f64::MIN_POSITIVE), cfg.max_iter);
    if let Some(e) = failure {
        return Err(e);
    }
    let r = r?;
    let (flo, _) = f(lo)?;
    let (fhi, _) = f(hi)?;
    let (fx, scale) = f(r.x)?;
    let tol = cfg.abs_tol + cfg.rel_tol * scale;
    let certified = flo.signum() != fhi.signum() && fx.abs() <= tol;
    if !certified {
        return Err(Error::NonConvergence(format!(
            "root {} on [{lo}, {hi}] not certified: residual {fx:e} against tolerance {tol:e}",
            r.x
        )));
    }
    Ok(CrossingResult { root: r.x, bracket_lo: lo, bracket_hi: hi, residual: fx, iterations: r.iterations, certified })
}

/// Walks `x -> x * factor` from `start` until `pred(f(x))`, returning the last two points.
fn expand<F>(mut f: F, start: f64, factor: f64, limit: f64, mut pred: impl FnMut(f64) -> bool) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut prev = start;
    let mut x = start;
    loop {
        if pred(f(x)?) {
            return Ok((prev, x));
        }
        prev = x;
        x *= factor;
        let out = if factor > 1.0 { x > limit } else { x < limit };
        if out {
            return Err(Error::NonConvergence(format!("no sign change found between {start} and {limit}")));
        }
    }
}

/// The unique zero `x_{alpha,beta}` of `G_{alpha,beta}` for `0 < alpha < beta < 1`.
pub fn find_x_ab(alpha: f64, beta: f64, cfg: &EvalConfig) -> Result<CrossingResult> {
    cfg.validate()?;
    let (lo, hi) = x_ab_bracket(alpha, beta)?;
    certified_root(|x| g_lambda_parts(alpha, beta, 1.0, x, cfg), lo, hi, cfg)
}

/// The unique zero of `E_alpha(-lambda x^alpha) - E_beta(-lambda x^beta)`.
pub fn find_x_ab_lambda(alpha: f64, beta: f64, lambda: f64, cfg: &EvalConfig) -> Result<CrossingResult> {
    cfg.validate()?;
    check_ordered01(alpha, beta)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(out_of_range("lambda", format!("{lambda} must be positive")));
    }
    if lambda == 1.0 {
        return find_x_ab(alpha, beta, cfg);
    }
    // start where lambda x^alpha is small: the function is negative there
    let f = |x: f64| g_lambda_parts(alpha, beta, lambda, x, cfg).map(|p| p.0);
    let mut start = (1e-3 / lambda).powf(1.0 / alpha);
    while f(start)? >= 0.0 {
        start *= 1e-3;
        if start < 1e-300 {
            return Err(Error::Hypothesis("difference is not negative near the origin".into()));
        }
    }
    let (lo, hi) = expand(f, start, 2.0, X_MAX, |v| v > 0.0)?;
    certified_root(|x| g_lambda_parts(alpha, beta, lambda, x, cfg), lo, hi, cfg)
}

/// `x^{a-1} E_{a,a}(-x^a)` for `a in (0, 1)`.
fn pillai_density(a: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    let e = eval_ml_power_ab(MLParams::new(a, a)?, x, -1.0, Method::Auto, cfg)?;
    Ok(x.powf(a - 1.0) * e)
}

fn g_ab_derivative(alpha: f64, beta: f64, x: f64, cfg: &EvalConfig) -> Result<(f64, f64)> {
    let b = pillai_density(beta, x, cfg)?;
    let a = pillai_density(alpha, x, cfg)?;
    Ok((b - a, a.abs() + b.abs()))
}

/// The two zeros `y < z` of `G'_{alpha,beta}`, which enclose `x_{alpha,beta}`.
pub fn find_yz(alpha: f64, beta: f64, cfg: &EvalConfig) -> Result<(CrossingResult, CrossingResult)> {
    let x = find_x_ab(alpha, beta, cfg)?.root;
    let d = |t: f64| g_ab_derivative(alpha, beta, t, cfg).map(|p| p.0);
    if d(x)? <= 0.0 {
        return Err(Error::Hypothesis(format!("G' is not positive at the crossing point {x}")));
    }
    let (y_hi, y_lo) = expand(d, x, 0.5, 1e-300, |v| v < 0.0)?;
    let (z_lo, z_hi) = expand(d, x, 2.0, X_MAX, |v| v < 0.0)?;
    let y = certified_root(|t| g_ab_derivative(alpha, beta, t, cfg), y_lo, y_hi, cfg)?;
    let z = certified_root(|t| g_ab_derivative(alpha, beta, t, cfg), z_lo, z_hi, cfg)?;
    Ok((y, z))
}

/// `H_{alpha,beta}(x) = beta E_beta(x^beta) - alpha E_alpha(x^alpha)` written as `G_alpha - G_beta`
/// so that the common leading term `e^x` cancels exactly.
pub fn h_ab(alpha: f64, beta: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    h_parts(alpha, beta, x, cfg).map(|p| p.0)
}

fn h_parts(alpha: f64, beta: f64, x: f64, cfg: &EvalConfig) -> Result<(f64, f64)> {
    let ga = residual_g(alpha, x, cfg)?;
    let gb = residual_g(beta, x, cfg)?;
    Ok((ga - gb, ga.abs() + gb.abs()))
}

/// The unique zero `x*_{alpha,beta}` of `H_{alpha,beta}` for `1 < alpha < beta < 2`.
pub fn find_x_star(alpha: f64, beta: f64, cfg: &EvalConfig) -> Result<CrossingResult> {
    if !(alpha > 1.0 && alpha < beta && beta < 2.0) {
        return Err(out_of_range("alpha", format!("need 1 < alpha < beta < 2, got ({alpha}, {beta})")));
    }
    let lower = find_x_ab(alpha / 2.0, beta / 2.0, cfg)?.root;
    let h = |x: f64| h_ab(alpha, beta, x, cfg);
    if h(lower)? <= 0.0 {
        return Err(Error::Hypothesis(format!("H is not positive at the lower bound {lower}")));
    }
    let (lo, hi) = expand(h, lower, 2.0, X_MAX, |v| v < 0.0)?;
    certified_root(|x| h_parts(alpha, beta, x, cfg), lo, hi, cfg)
}

/// `E_{alpha,beta}(z)` for any real `beta`, shifting `beta` up by `alpha` until it is positive.
fn ml_any_beta(alpha: f64, beta: f64, z: f64, cfg: &EvalConfig) -> Result<f64> {
    let mut head = 0.0;
    let mut b = beta;
    let mut zk = 1.0;
    while b < alpha.min(1.0) {
        head += zk * rgamma(b);
        zk *= z;
        b += alpha;
    }
    Ok(head + zk * eval_ml(MLParams::new(alpha, b)?, z, Method::Auto, cfg)?)
}

/// `x E_{alpha,alpha}(-x)`.
pub fn pillai_moment_fn(alpha: f64, x: f64, cfg: &EvalConfig) -> Result<f64> {
    Ok(x * eval_ml(MLParams::new(alpha, alpha)?, -x, Method::Auto, cfg)?)
}

/// Derivative of `x E_{alpha,alpha}(-x)`, equal to `(E_{alpha,alpha}(-x) + E_{alpha,alpha-1}(-x)) / alpha`.
fn pillai_moment_derivative(alpha: f64, x: f64, cfg: &EvalConfig) -> Result<(f64, f64)> {
    let a = eval_ml(MLParams::new(alpha, alpha)?, -x, Method::Auto, cfg)?;
    let b = ml_any_beta(alpha, alpha - 1.0, -x, cfg)?;
    Ok(((a + b) / alpha, (a.abs() + b.abs()) / alpha))
}

/// The bounds `(lower, upper)` on `m_alpha = sup x E_{alpha,alpha}(-x)`.
pub fn mode_bounds(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(out_of_range("alpha", format!("{alpha} not in (0, 1)")));
    }
    let upper = gamma(2.0 * alpha)? / (2.0 * gamma(alpha)?.powi(2));
    Ok((alpha * mode_lower_factor(alpha)?, upper))
}

fn mode_lower_factor(alpha: f64) -> Result<f64> {
    let first = (-gamma(alpha)? / gamma(2.0 * alpha)?).exp() / gamma(1.0 + alpha)?;
    let second = (gamma(1.0 + alpha)?.sqrt() + gamma(1.0 - alpha)?.sqrt()).powi(-2);
    Ok(first.max(second))
}

/// Minimum over `alpha in (0, 1)` of the lower-bound factor, with its location.
pub fn mode_lower_factor_min() -> Result<(f64, f64)> {
    golden_min(|a| mode_lower_factor(a).unwrap_or(f64::INFINITY), 1e-6, 1.0 - 1e-6, 1e-10, 200)
}

/// Location `x_alpha` and value `m_alpha` of the maximum of `x E_{alpha,alpha}(-x)`.
pub fn find_mode_m(alpha: f64, cfg: &EvalConfig) -> Result<(CrossingResult, ExtremumResult)> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(out_of_range("alpha", format!("{alpha} not in (0, 1)")));
    }
    let mut failure = None;
    let (xg, _) = golden_min(
        |x| match pillai_moment_fn(alpha, x, cfg) {
            Ok(v) => -v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        1e-6,
        cfg.max_iter,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let d = |x: f64| pillai_moment_derivative(alpha, x, cfg);
    let (mut lo, mut hi) = ((xg - 1e-4).max(1e-9), (xg + 1e-4).min(1.0));
    if d(lo)?.0 <= 0.0 || d(hi)?.0 >= 0.0 {
        lo = 1e-9;
        hi = 1.0;
    }
    let root = certified_root(d, lo, hi, cfg)?;
    let value = pillai_moment_fn(alpha, root.root, cfg)?;
    Ok((root, ExtremumResult { argmax: root.root, value }))
}

/// Evaluates an unproven claim on a grid, reporting the smallest margin by which it holds.
pub fn probe_conjecture(conjecture_id: &str, grid: &ProbeGrid, cfg: &EvalConfig) -> Result<ProbeReport> {
    cfg.validate()?;
    if !CONJECTURES.contains(&conjecture_id) {
        return Err(Error::Invalid(format!("unknown conjecture id {conjecture_id:?}")));
    }
    let mut margins: Vec<(Vec<f64>, f64)> = Vec::new();
    let alphas = &grid.alphas;
    match conjecture_id {
        "alpha_dec_Ea_minus1" | "alpha_inc_Eaa_minus1" => {
            let inc = conjecture_id == "alpha_inc_Eaa_minus1";
            let mut vals = Vec::with_capacity(alphas.len());
            for &a in alphas {
                let b = if inc { a } else { 1.0 };
                vals.push(eval_ml(MLParams::new(a, b)?, -1.0, Method::Auto, cfg)?);
            }
            for i in 1..alphas.len() {
                let m = if inc { vals[i] - vals[i - 1] } else { vals[i - 1] - vals[i] };
                margins.push((vec![alphas[i - 1], alphas[i]], m));
            }
        }
        "lambda_gt1_root_le1" => {
            for &l in &grid.lambdas {
                for (i, &a) in alphas.iter().enumerate() {
                    for &b in &alphas[i + 1..] {
                        let r = find_x_ab_lambda(a, b, l, cfg)?.root;
                        margins.push((vec![a, b, l], 1.0 - r));
                    }
                }
            }
        }
        _ => {
            // Laplace transforms of M_alpha / Gamma(1 - alpha) must increase with alpha and dominate 1/(1+x)
            for &x in &grid.xs {
                let mut prev: Option<(f64, f64)> = None;
                for &a in alphas {
                    let v = eval_ml(MLParams::one(a)?, -x / gamma(1.0 - a)?, Method::Auto, cfg)?;
                    match prev {
                        None => margins.push((vec![a, x], v - 1.0 / (1.0 + x))),
                        Some((pa, pv)) => margins.push((vec![pa, a, x], v - pv)),
                    }
                    prev = Some((a, v));
                }
            }
        }
    }
    let min_margin = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let violations = margins.into_iter().filter(|m| !(m.1 > 0.0)).map(|m| m.0).collect();
    Ok(ProbeReport { conjecture_id: conjecture_id.to_string(), grid: grid.describe(), violations, min_margin })
}

#[cfg(test)]
mod tests;
