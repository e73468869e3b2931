//! Abel integral equations of the second kind and fractional Cauchy problems,
//! solved through their Mittag-Leffler resolvents by product integration.

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::ml_eval::{eval_ml, MLParams, Method};
use crate::special::{ln_gamma, rgamma, EvalConfig};

pub const MIN_NODES: usize = 8;

/// Named forcing functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Forcing {
    One,
    Zero,
    Exp,
    /// `0` before `x = 1`, `1` from there on.
    Step,
    Const(f64),
    /// `x^gamma / Gamma(1 + gamma)`.
    Power(f64),
}

impl Forcing {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Forcing::One => 1.0,
            Forcing::Zero => 0.0,
            Forcing::Exp => x.exp(),
            Forcing::Step => {
                if x < 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Forcing::Const(c) => c,
            Forcing::Power(g) => {
                if x == 0.0 {
                    if g == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (g * x.ln() - ln_gamma(1.0 + g).map(|v| v.log_abs).unwrap_or(f64::NAN)).exp()
                }
            }
        }
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.eval(x)).collect()
    }
}

impl std::str::FromStr for Forcing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(Forcing::One),
            "zero" => Ok(Forcing::Zero),
            "exp" => Ok(Forcing::Exp),
            "step" => Ok(Forcing::Step),
            other => Err(Error::Invalid(format!("unknown forcing {other:?}; expected one, zero, exp or step"))),
        }
    }
}

/// Uniform grid `0, h, ..., t_max` with `n` nodes.
pub fn uniform_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if n < MIN_NODES {
        return Err(Error::Invalid(format!("grid too coarse: {n} nodes, need at least {MIN_NODES}")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(out_of_range("t_max", format!("{t_max} must be positive")));
    }
    let h = t_max / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { t_max } else { i as f64 * h }).collect())
}

/// `f = g + lambda^alpha I^alpha f` on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelProblem {
    pub alpha: f64,
    pub lambda: f64,
    pub t_max: f64,
    /// Forcing at the uniform nodes.
    pub g: Vec<f64>,
}

/// `D^alpha f - lambda f = g` with `I^(1-alpha) f(0) = mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RLCauchyProblem {
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub t_max: f64,
    pub g: Vec<f64>,
}

/// Caputo problem `D^alpha f - lambda f = g` with `f(0) = mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaputoProblem {
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub t_max: f64,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionTrace {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Convolution kernel at the nodes; infinite at the origin when it is singular there.
    pub kernel: Vec<f64>,
    /// Observed order from solves on the grid and its two coarsenings, when they differ measurably.
    pub order: Option<f64>,
    /// Coefficient `mu` of the `x^(alpha-1)` singularity when `values[0]` is not a finite limit.
    pub singular_at_origin: Option<f64>,
}

fn check_grid(t_max: f64, g: &[f64]) -> Result<Vec<f64>> {
    let nodes = uniform_grid(t_max, g.len())?;
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(out_of_range("g", format!("forcing is not finite at node {i}")));
    }
    Ok(nodes)
}

fn check_alpha(alpha: f64, allow_one: bool) -> Result<()> {
    let ok = alpha > 0.0 && (alpha < 1.0 || (allow_one && alpha == 1.0));
    if ok {
        Ok(())
    } else {
        Err(out_of_range("alpha", format!("{alpha} not in (0, {})", if allow_one { "1]" } else { "1)" })))
    }
}

/// `E_{alpha,beta}(z)` including `z = 0`.
fn ml(alpha: f64, beta: f64, z: f64, cfg: &EvalConfig) -> Result<f64> {
    if z == 0.0 {
        return Ok(rgamma(beta));
    }
    eval_ml(MLParams::new(alpha, beta)?, z, Method::Auto, cfg)
}

/// Kernel `c y^(alpha-1) E_{alpha,alpha}(lam y^alpha)` with its antiderivatives
/// `K0(y) = c y^alpha E_{alpha,alpha+1}(lam y^alpha)` and `J(y) = int_0^y K0 = c y^(alpha+1) E_{alpha,alpha+2}(lam y^alpha)`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    alpha: f64,
    c: f64,
    lam: f64,
}

impl Kernel {
    fn value(&self, y: f64, cfg: &EvalConfig) -> Result<f64> {
        if y == 0.0 {
            return Ok(if self.alpha < 1.0 { f64::INFINITY } else { self.c * rgamma(self.alpha) });
        }
        Ok(self.c * y.powf(self.alpha - 1.0) * ml(self.alpha, self.alpha, self.lam * y.powf(self.alpha), cfg)?)
    }

    fn k0_j(&self, y: f64, cfg: &EvalConfig) -> Result<(f64, f64)> {
        if y == 0.0 {
            return Ok((0.0, 0.0));
        }
        let ya = y.powf(self.alpha);
        let z = self.lam * ya;
        let k0 = self.c * ya * ml(self.alpha, self.alpha + 1.0, z, cfg)?;
        let j = self.c * ya * y * ml(self.alpha, self.alpha + 2.0, z, cfg)?;
        if !k0.is_finite() || !j.is_finite() {
            return Err(Error::Overflow(format!("kernel integral at y = {y}")));
        }
        Ok((k0, j))
    }

    /// Panel weights `(w_left, w_right)` for `int_{y_j}^{y_j+h} phi(y) k(y) dy` with `phi` linear.
    fn weights(&self, h: f64, n: usize, cfg: &EvalConfig) -> Result<Vec<(f64, f64)>> {
        let mut prev = self.k0_j(0.0, cfg)?;
        let mut w = Vec::with_capacity(n);
        for j in 0..n {
            let next = self.k0_j((j + 1) as f64 * h, cfg)?;
            let dj = (next.1 - prev.1) / h;
            w.push((dj - prev.0, next.0 - dj));
            prev = next;
        }
        Ok(w)
    }

    /// `int_0^{x_i} g(x_i - y) k(y) dy` at every node for piecewise-linear `g`.
    fn convolve(&self, g: &[f64], h: f64, cfg: &EvalConfig) -> Result<Vec<f64>> {
        let n = g.len();
        let w = self.weights(h, n.saturating_sub(1), cfg)?;
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            // panel j covers y in [jh, (j+1)h], where g runs from g[i-j] to g[i-j-1]
            *o = (0..i).map(|j| w[j].0 * g[i - j] + w[j].1 * g[i - j - 1]).sum();
        }
        Ok(out)
    }
}

/// `lambda^alpha y^(alpha-1) E_{alpha,alpha}((lambda y)^alpha)`.
pub fn resolvent_kernel(alpha: f64, lambda: f64, y: f64, cfg: &EvalConfig) -> Result<f64> {
    check_alpha(alpha, true)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(out_of_range("lambda", format!("{lambda} must be positive")));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(out_of_range("y", format!("{y} must be positive")));
    }
    let la = lambda.powf(alpha);
    let v = Kernel { alpha, c: la, lam: la }.value(y, cfg)?;
    if !v.is_finite() {
        return Err(Error::Overflow(format!("resolvent kernel at lambda y = {}", lambda * y)));
    }
    Ok(v)
}

/// Observed order from errors `e(h)`, `e(h/2)`... as the mean of successive log2 ratios.
pub fn observed_order(errors: &[f64]) -> Option<f64> {
    let ratios: Vec<f64> = errors.windows(2).filter(|w| w[0] > 0.0 && w[1] > 0.0).map(|w| (w[0] / w[1]).log2()).collect();
    if ratios.len() + 1 != errors.len() || ratios.is_empty() {
        return None;
    }
    Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Differences between solves on the grid and its coarsenings by 2 and 4, turned into an order.
fn self_order<F>(g: &[f64], mut solve: F) -> Result<Option<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = g.len();
    if (n - 1) % 4 != 0 || (n - 1) / 4 + 1 < MIN_NODES {
        return Ok(None);
    }
    let fine = solve(g)?;
    let g2: Vec<f64> = g.iter().step_by(2).copied().collect();
    let g4: Vec<f64> = g.iter().step_by(4).copied().collect();
    let mid = solve(&g2)?;
    let coarse = solve(&g4)?;
    let mut d1: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for i in 1..coarse.len() {
        d1 = d1.max((coarse[i] - mid[2 * i]).abs());
        d2 = d2.max((mid[2 * i] - fine[4 * i]).abs());
    }
    let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if d2 <= 1e-12 * scale {
        return Ok(None);
    }
    Ok(Some((d1 / d2).log2()))
}

fn second_kind_values(alpha: f64, lambda: f64, t_max: f64, g: &[f64], cfg: &EvalConfig) -> Result<Vec<f64>> {
    let h = t_max / (g.len() - 1) as f64;
    let la = lambda.powf(alpha);
    let conv = Kernel { alpha, c: la, lam: la }.convolve(g, h, cfg)?;
    Ok(g.iter().zip(conv).map(|(a, b)| a + b).collect())
}

/// Solves `f = g + lambda^alpha I^alpha f` through `f = g + int g(x-y) k(y) dy`.
pub fn solve_second_kind(p: &AbelProblem, cfg: &EvalConfig) -> Result<SolutionTrace> {
    check_alpha(p.alpha, false)?;
    if !(p.lambda > 0.0) || !p.lambda.is_finite() {
        return Err(out_of_range("lambda", format!("{} must be positive", p.lambda)));
    }
    let nodes = check_grid(p.t_max, &p.g)?;
    let values = second_kind_values(p.alpha, p.lambda, p.t_max, &p.g, cfg)?;
    let order = self_order(&p.g, |g| second_kind_values(p.alpha, p.lambda, p.t_max, g, cfg))?;
    let la = p.lambda.powf(p.alpha);
    let k = Kernel { alpha: p.alpha, c: la, lam: la };
    let kernel = nodes.iter().map(|&y| k.value(y, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(SolutionTrace { nodes, values, kernel, order, singular_at_origin: None })
}

fn rl_values(p: &RLCauchyProblem, g: &[f64], cfg: &EvalConfig) -> Result<Vec<f64>> {
    let n = g.len();
    let h = p.t_max / (n - 1) as f64;
    let k = Kernel { alpha: p.alpha, c: 1.0, lam: p.lambda };
    let conv = k.convolve(g, h, cfg)?;
    let mut out = Vec::with_capacity(n);
    for (i, c) in conv.into_iter().enumerate() {
        let x = if i == n - 1 { p.t_max } else { i as f64 * h };
        let free = if p.mu == 0.0 { 0.0 } else { p.mu * k.value(x, cfg)? };
        out.push(free + c);
    }
    Ok(out)
}

/// Solves the Riemann-Liouville problem by `f = mu x^(alpha-1) E_{alpha,alpha}(lambda x^alpha) + int g(x-y) k(y) dy`.
pub fn solve_rl_cauchy(p: &RLCauchyProblem, cfg: &EvalConfig) -> Result<SolutionTrace> {
    check_alpha(p.alpha, true)?;
    if !(p.lambda >= 0.0) || !p.lambda.is_finite() {
        return Err(out_of_range("lambda", format!("{} must be finite and >= 0", p.lambda)));
    }
    if !(p.mu >= 0.0) || !p.mu.is_finite() {
        return Err(out_of_range("mu", format!("{} must be finite and >= 0", p.mu)));
    }
    let nodes = check_grid(p.t_max, &p.g)?;
    let values = rl_values(p, &p.g, cfg)?;
    // the singular term is evaluated exactly, so only the convolution enters the order
    let conv_only = RLCauchyProblem { mu: 0.0, ..p.clone() };
    let order = self_order(&p.g, |g| rl_values(&conv_only, g, cfg))?;
    let k = Kernel { alpha: p.alpha, c: 1.0, lam: p.lambda };
    let kernel = nodes.iter().map(|&y| k.value(y, cfg)).collect::<Result<Vec<_>>>()?;
    let singular = p.alpha < 1.0 && p.mu > 0.0;
    Ok(SolutionTrace { nodes, values, kernel, order, singular_at_origin: singular.then_some(p.mu) })
}

/// Solves the Caputo problem as the second-kind equation `f = mu + I^alpha g + lambda I^alpha f`.
/// The constant shift `mu` goes through the second-kind solver; the resolvent applied to `I^alpha g`
/// collapses to a single convolution of `g`, which keeps piecewise-linear forcing exact.
pub fn solve_caputo(p: &CaputoProblem, cfg: &EvalConfig) -> Result<SolutionTrace> {
    check_alpha(p.alpha, false)?;
    if !(p.lambda > 0.0) || !p.lambda.is_finite() {
        return Err(out_of_range("lambda", format!("{} must be positive", p.lambda)));
    }
    if !(p.mu >= 0.0) || !p.mu.is_finite() {
        return Err(out_of_range("mu", format!("{} must be finite and >= 0", p.mu)));
    }
    check_grid(p.t_max, &p.g)?;
    let shift = AbelProblem { alpha: p.alpha, lambda: p.lambda.powf(1.0 / p.alpha), t_max: p.t_max, g: vec![p.mu; p.g.len()] };
    let mut trace = solve_second_kind(&shift, cfg)?;
    let h = p.t_max / (p.g.len() - 1) as f64;
    let k = Kernel { alpha: p.alpha, c: 1.0, lam: p.lambda };
    let conv = k.convolve(&p.g, h, cfg)?;
    for (v, c) in trace.values.iter_mut().zip(conv) {
        *v += c;
    }
    trace.order = self_order(&p.g, |g| k.convolve(g, p.t_max / (g.len() - 1) as f64, cfg))?;
    Ok(trace)
}

/// A pair of problems of one family for the comparison theorems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Comparable {
    SecondKind(AbelProblem),
    RiemannLiouville(RLCauchyProblem),
    Caputo(CaputoProblem),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub hypotheses: Vec<(String, bool)>,
    pub hypotheses_met: bool,
    /// Minimum of `f1 - f2` over the nodes where both are finite.
    pub min_difference: f64,
    /// `Some(min_difference >= -tol)` when the hypotheses hold, otherwise `None`.
    pub conclusion: Option<bool>,
}

pub const COMPARISON_TOL: f64 = 1e-10;

fn pointwise_ge(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Checks the hypotheses of the comparison theorem for `(p1, p2)` and, when they hold, its conclusion `f1 >= f2`.
pub fn verify_comparison(p1: &Comparable, p2: &Comparable, cfg: &EvalConfig) -> Result<ComparisonReport> {
    let h = |s: &str, b: bool| (s.to_string(), b);
    let (hyp, s1, s2) = match (p1, p2) {
        (Comparable::SecondKind(a), Comparable::SecondKind(b)) => {
            same_grid(a.t_max, &a.g, b.t_max, &b.g)?;
            let hyp = vec![
                h("alpha2 >= alpha1", b.alpha >= a.alpha),
                h("lambda1 >= lambda2", a.lambda >= b.lambda),
                h("g1 >= g2", pointwise_ge(&a.g, &b.g)),
                h("g1 >= 0", a.g.iter().all(|&v| v >= 0.0)),
            ];
            (hyp, solve_second_kind(a, cfg)?, solve_second_kind(b, cfg)?)
        }
        (Comparable::RiemannLiouville(a), Comparable::RiemannLiouville(b)) => {
            same_grid(a.t_max, &a.g, b.t_max, &b.g)?;
            let hyp = vec![
                h("alpha2 >= alpha1", b.alpha >= a.alpha),
                h("common lambda >= 1", a.lambda == b.lambda && a.lambda >= 1.0),
                h("mu1 >= mu2 >= 0", a.mu >= b.mu && b.mu >= 0.0),
                h("g1 >= g2", pointwise_ge(&a.g, &b.g)),
                h("g1 >= 0", a.g.iter().all(|&v| v >= 0.0)),
            ];
            (hyp, solve_rl_cauchy(a, cfg)?, solve_rl_cauchy(b, cfg)?)
        }
        (Comparable::Caputo(a), Comparable::Caputo(b)) => {
            same_grid(a.t_max, &a.g, b.t_max, &b.g)?;
            let hyp = vec![
                h("alpha2 >= alpha1", b.alpha >= a.alpha),
                h("common lambda >= 1", a.lambda == b.lambda && a.lambda >= 1.0),
                h("mu1 >= mu2 >= 0", a.mu >= b.mu && b.mu >= 0.0),
                h("g1 >= g2", pointwise_ge(&a.g, &b.g)),
                h("g1 >= 0", a.g.iter().all(|&v| v >= 0.0)),
            ];
            (hyp, solve_caputo(a, cfg)?, solve_caputo(b, cfg)?)
        }
        _ => return Err(Error::Invalid("comparison needs two problems of the same kind".into())),
    };
    let min_difference = s1
        .values
        .iter()
        .zip(&s2.values)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    let met = hyp.iter().all(|(_, b)| *b);
    Ok(ComparisonReport {
        hypotheses: hyp,
        hypotheses_met: met,
        min_difference,
        conclusion: met.then_some(min_difference >= -COMPARISON_TOL),
    })
}

fn same_grid(t1: f64, g1: &[f64], t2: f64, g2: &[f64]) -> Result<()> {
    if t1 != t2 || g1.len() != g2.len() {
        return Err(Error::Invalid(format!("grids differ: [0, {t1}] with {} nodes vs [0, {t2}] with {}", g1.len(), g2.len())));
    }
    Ok(())
}

/// Max-norm errors of the second-kind solver on `g = x^gamma / Gamma(1+gamma)`,
/// whose solution is `x^gamma E_{alpha,1+gamma}(lambda^alpha x^alpha)`, for each node count.
pub fn convergence_study(alpha: f64, lambda: f64, gamma: f64, t_max: f64, node_counts: &[usize], cfg: &EvalConfig) -> Result<Vec<f64>> {
    let la = lambda.powf(alpha);
    let mut errs = Vec::with_capacity(node_counts.len());
    for &n in node_counts {
        let nodes = uniform_grid(t_max, n)?;
        let p = AbelProblem { alpha, lambda, t_max, g: Forcing::Power(gamma).sample(&nodes) };
        let s = solve_second_kind(&p, cfg)?;
        let mut e: f64 = 0.0;
        for (x, v) in nodes.iter().zip(&s.values) {
            let exact = if *x == 0.0 {
                Forcing::Power(gamma).eval(0.0)
            } else {
                x.powf(gamma) * ml(alpha, 1.0 + gamma, la * x.powf(alpha), cfg)?
            };
            e = e.max((v - exact).abs());
        }
        errs.push(e);
    }
    Ok(errs)
}
