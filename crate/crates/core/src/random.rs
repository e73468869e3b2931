//! Seeded samplers for stable, Mittag-Leffler and beta-product laws, with
//! goodness-of-fit and empirical ordering checks.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::ml_eval::eval_ml_power;
use crate::special::{digamma, gamma_q, ln_gamma, sin_pi, cos_pi, trigamma, EvalConfig};

/// Default number of exact beta factors before the tail is replaced by a log-normal.
pub const DEFAULT_TRUNCATION: usize = 128;

/// Largest standard deviation of the omitted log-factors that is still accepted.
pub const MAX_TAIL_LOG_SD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// Infinite products of independent beta variables, each factor normalised to mean one
/// unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law")]
pub enum BetaLaw {
    /// `T_alpha = prod (n+1)/(n+alpha) B(1 + n/alpha, 1/alpha - 1)`.
    T { alpha: f64 },
    /// The same law through powers `B(alpha(1+n), 1-alpha)^alpha`.
    TPower { alpha: f64 },
    /// `(alpha)_alpha M_{alpha,0} = prod (n+1+alpha)/(n+2 alpha) B(2 + n/alpha, 1/alpha - 1)`.
    ScaledM0 { alpha: f64 },
    /// `(beta)_alpha B(alpha, beta-alpha)^alpha M_{alpha,0}`, mean one.
    MTilde { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GeneratorSpec {
    /// Positive stable `Z` with `E[exp(-t Z)] = exp(-t^alpha)`.
    Stable { alpha: f64 },
    /// `M_alpha = Z_alpha^(-alpha)` with `E[exp(x M)] = E_alpha(x)`.
    MittagLefflerM { alpha: f64 },
    /// Laplace transform `1 / (1 + t^alpha)`.
    Pillai { alpha: f64 },
    /// Ratio of two independent `Z_alpha`, with density `g_alpha`.
    StableRatioV { alpha: f64 },
    BetaProduct { product: BetaLaw, truncation: usize },
    /// Signed law with atom `1/alpha` at -1 and `E[exp(-x X)] = E_alpha(x^alpha)`, `alpha in (1,2)`.
    AtomX { alpha: f64 },
}

fn open01(name: &'static str, a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(out_of_range(name, format!("{a} not in (0, 1)")))
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratorSpec::Stable { alpha }
            | GeneratorSpec::MittagLefflerM { alpha }
            | GeneratorSpec::Pillai { alpha }
            | GeneratorSpec::StableRatioV { alpha } => open01("alpha", alpha),
            GeneratorSpec::AtomX { alpha } => {
                if alpha > 1.0 && alpha < 2.0 {
                    Ok(())
                } else {
                    Err(out_of_range("alpha", format!("{alpha} not in (1, 2)")))
                }
            }
            GeneratorSpec::BetaProduct { product, truncation } => {
                if truncation == 0 {
                    return Err(out_of_range("truncation", "must be at least 1"));
                }
                match product {
                    BetaLaw::T { alpha } | BetaLaw::TPower { alpha } | BetaLaw::ScaledM0 { alpha } => open01("alpha", alpha),
                    BetaLaw::MTilde { alpha, beta } => {
                        open01("alpha", alpha)?;
                        if beta >= alpha && beta.is_finite() {
                            Ok(())
                        } else {
                            Err(out_of_range("beta", format!("{beta} must be >= alpha = {alpha}")))
                        }
                    }
                }
            }
        }
    }

    /// Whether every draw is positive.
    pub fn is_positive(&self) -> bool {
        !matches!(self, GeneratorSpec::AtomX { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub spec: GeneratorSpec,
    pub n: usize,
    pub seed: RngSeed,
    pub values: Vec<f64>,
    /// Standard deviation of the log of the omitted beta factors, for beta products.
    pub tail_log_sd: Option<f64>,
}

fn rng_for(seed: RngSeed, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(stream);
    rng
}

/// `ln Z` for a positive stable `Z` of index `alpha` by Kanter's representation.
fn ln_stable<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let u = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    (alpha * u).sin().ln() - u.sin().ln() / alpha + (1.0 - alpha) / alpha * (((1.0 - alpha) * u).sin() / w).ln()
}

/// One factor `exp(shift) * B(a, b)^power`.
struct Factor {
    shift: f64,
    power: f64,
    a: Gamma<f64>,
}

struct BetaSampler {
    factors: Vec<Factor>,
    b: Gamma<f64>,
    /// extra `B(alpha, beta-alpha)^alpha` factor with its log-scale
    mix: Option<(f64, Gamma<f64>, Gamma<f64>, f64)>,
    tail_mu: f64,
    tail_sd: f64,
}

fn gamma_dist(shape: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0).map_err(|e| Error::Invalid(format!("gamma shape {shape}: {e}")))
}

/// `ln B(a, b)` from two gamma draws, accurate when `B` is close to one.
fn ln_beta_draw<R: Rng>(a: &Gamma<f64>, b: &Gamma<f64>, rng: &mut R) -> f64 {
    let x = a.sample(rng);
    let y = b.sample(rng);
    -(y / x).ln_1p()
}

/// Variance of `ln B(a, b)`.
fn ln_beta_var(a: f64, b: f64) -> Result<f64> {
    Ok(trigamma(a)? - trigamma(a + b)?)
}

impl BetaSampler {
    fn new(law: BetaLaw, truncation: usize) -> Result<Self> {
        // factor n: shift, power, a_n; common b
        let (alpha, b, power): (f64, f64, f64) = match law {
            BetaLaw::T { alpha } | BetaLaw::ScaledM0 { alpha } | BetaLaw::MTilde { alpha, .. } => {
                (alpha, 1.0 / alpha - 1.0, 1.0)
            }
            BetaLaw::TPower { alpha } => (alpha, 1.0 - alpha, alpha),
        };
        let a_of = |n: f64| match law {
            BetaLaw::T { .. } => 1.0 + n / alpha,
            BetaLaw::TPower { .. } => alpha * (1.0 + n),
            _ => 2.0 + n / alpha,
        };
        // the factor shifts make each factor mean one: E[B^p] = (a)_p / (a+b)_p
        let shift_of = |a: f64| -> Result<f64> {
            Ok(ln_gamma(a)?.log_abs - ln_gamma(a + power)?.log_abs + ln_gamma(a + b + power)?.log_abs
                - ln_gamma(a + b)?.log_abs)
        };
        let mut factors = Vec::with_capacity(truncation);
        for n in 0..truncation {
            let a = a_of(n as f64);
            factors.push(Factor { shift: shift_of(a)?, power, a: gamma_dist(a)? });
        }
        // tail: sum of log-variances, exact up to a cut and then by its 1/n^2 decay
        let mut var = 0.0;
        let cut = truncation + 20_000;
        let mut last = 0.0;
        for n in truncation..cut {
            last = power * power * ln_beta_var(a_of(n as f64), b)?;
            var += last;
        }
        var += last * cut as f64;
        let mix = match law {
            BetaLaw::MTilde { alpha, beta } if beta > alpha => {
                // (beta)_alpha / (alpha)_alpha B(alpha, beta - alpha)^alpha has mean one
                let scale = ln_gamma(alpha + beta)?.log_abs - ln_gamma(beta)?.log_abs
                    - (ln_gamma(2.0 * alpha)?.log_abs - ln_gamma(alpha)?.log_abs);
                Some((scale, gamma_dist(alpha)?, gamma_dist(beta - alpha)?, alpha))
            }
            _ => None,
        };
        Ok(BetaSampler { factors, b: gamma_dist(b)?, mix, tail_mu: -0.5 * var, tail_sd: var.sqrt() })
    }

    /// Draws `n` values; factor `k` has its own stream so that truncations share their leading factors.
    fn draw_all(&self, n: usize, seed: RngSeed, stream: u64) -> Vec<f64> {
        let base = stream << 32;
        let mut logs = vec![0.0; n];
        for (k, f) in self.factors.iter().enumerate() {
            let mut rng = rng_for(seed, base + 1 + k as u64);
            for l in logs.iter_mut() {
                *l += f.shift + f.power * ln_beta_draw(&f.a, &self.b, &mut rng);
            }
        }
        let mut tail = rng_for(seed, base);
        for l in logs.iter_mut() {
            let z: f64 = tail.sample(StandardNormal);
            *l += self.tail_mu + self.tail_sd * z;
        }
        if let Some((scale, ga, gb, p)) = &self.mix {
            let mut rng = rng_for(seed, base + (1 << 31));
            for l in logs.iter_mut() {
                *l += scale + p * ln_beta_draw(ga, gb, &mut rng);
            }
        }
        logs.into_iter().map(f64::exp).collect()
    }
}

/// Inverse CDF of the atom law `X_alpha`: the atom sits at the bottom of the unit interval.
fn atom_x_quantile(alpha: f64, p: f64) -> f64 {
    let w = 1.0 / alpha;
    if p < w {
        return -1.0;
    }
    let c = cos_pi(alpha);
    let s = -sin_pi(alpha);
    let phi = (c / s).atan();
    let u = c + s * (alpha * PI * (p - w) - phi).tan();
    u.max(0.0).powf(1.0 / alpha)
}

/// Draws `n` values of `spec` from the seeded stream.
pub fn sample(spec: GeneratorSpec, n: usize, seed: RngSeed) -> Result<SampleBatch> {
    sample_stream(spec, n, seed, 0)
}

fn sample_stream(spec: GeneratorSpec, n: usize, seed: RngSeed, stream: u64) -> Result<SampleBatch> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InsufficientSample("n must be at least 1".into()));
    }
    let mut rng = rng_for(seed, stream);
    let mut tail_log_sd = None;
    let values: Vec<f64> = match spec {
        GeneratorSpec::Stable { alpha } => (0..n).map(|_| ln_stable(alpha, &mut rng).exp()).collect(),
        GeneratorSpec::MittagLefflerM { alpha } => (0..n).map(|_| (-alpha * ln_stable(alpha, &mut rng)).exp()).collect(),
        GeneratorSpec::Pillai { alpha } => (0..n)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                (e.ln() / alpha + ln_stable(alpha, &mut rng)).exp()
            })
            .collect(),
        GeneratorSpec::StableRatioV { alpha } => {
            (0..n).map(|_| (ln_stable(alpha, &mut rng) - ln_stable(alpha, &mut rng)).exp()).collect()
        }
        GeneratorSpec::BetaProduct { product, truncation } => {
            let s = BetaSampler::new(product, truncation)?;
            if s.tail_sd > MAX_TAIL_LOG_SD {
                return Err(Error::Invalid(format!(
                    "truncation {truncation} too small: omitted log-factors have standard deviation {:.3e} > {MAX_TAIL_LOG_SD}",
                    s.tail_sd
                )));
            }
            tail_log_sd = Some(s.tail_sd);
            s.draw_all(n, seed, stream)
        }
        GeneratorSpec::AtomX { alpha } => (0..n).map(|_| atom_x_quantile(alpha, rng.sample(Open01))).collect(),
    };
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || (spec.is_positive() && **v <= 0.0)) {
        return Err(Error::NonConvergence(format!("sampler produced an invalid value {bad}")));
    }
    Ok(SampleBatch { spec, n, seed, values, tail_log_sd })
}

/// Sample mean and its standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// `E[exp(-t X)]` estimated from the batch, with standard error.
pub fn empirical_laplace(values: &[f64], t: f64) -> (f64, f64) {
    let e: Vec<f64> = values.iter().map(|v| (-t * v).exp()).collect();
    mean_se(&e)
}

/// Distribution function of the stable ratio `V_alpha`.
pub fn stable_ratio_cdf(alpha: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let (s, c) = (sin_pi(alpha), cos_pi(alpha));
    (((t.powf(alpha) + c) / s).atan() - (0.5 - alpha) * PI) / (alpha * PI)
}

/// Kolmogorov survival function `P[K > lambda]`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..200 {
        let jf = j as f64;
        let t = 2.0 * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { t } else { -t };
        if t < 1e-17 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
}

const KS_LEVEL: f64 = 0.01;

fn ks_p(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-sample Kolmogorov-Smirnov test against `cdf`.
pub fn ks_one_sample(values: &[f64], mut cdf: impl FnMut(f64) -> f64) -> Result<KsResult> {
    if values.len() < 2 {
        return Err(Error::InsufficientSample(format!("{} values", values.len())));
    }
    let s = sorted(values);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let p = ks_p(d, n);
    Ok(KsResult { statistic: d, p_value: p, pass: p > KS_LEVEL })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InsufficientSample(format!("sizes {} and {}", x.len(), y.len())));
    }
    let (a, b) = (sorted(x), sorted(y));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let p = ks_p(d, n * m / (n + m));
    Ok(KsResult { statistic: d, p_value: p, pass: p > KS_LEVEL })
}

/// KS test of `V =d 1/V`, comparing the even-indexed draws with reciprocals of the odd-indexed ones
/// so that the two samples are independent.
pub fn check_self_reciprocal(batch: &SampleBatch) -> Result<KsResult> {
    if !matches!(batch.spec, GeneratorSpec::StableRatioV { .. }) {
        return Err(Error::WrongKind(format!("self-reciprocity needs a stable ratio batch, got {:?}", batch.spec)));
    }
    if batch.values.len() < 4 {
        return Err(Error::InsufficientSample(format!("{} values", batch.values.len())));
    }
    let even: Vec<f64> = batch.values.iter().step_by(2).copied().collect();
    let inv: Vec<f64> = batch.values.iter().skip(1).step_by(2).map(|v| 1.0 / v).collect();
    ks_two_sample(&even, &inv)
}

/// Test functions for the convex-order comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexFamily {
    /// Probabilities of the pooled quantiles used as kinks `c` of `|t - c|`.
    pub quantiles: Vec<f64>,
    /// Rates `s` of `exp(s t)` and `exp(-s t)`.
    pub rates: Vec<f64>,
    pub require_equal_means: bool,
}

impl Default for ConvexFamily {
    fn default() -> Self {
        ConvexFamily {
            quantiles: (1..20).map(|i| i as f64 / 20.0).collect(),
            rates: vec![0.25, 0.5, 1.0],
            require_equal_means: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionDelta {
    pub label: String,
    /// `E[phi(X)] - E[phi(Y)]`, non-positive under `X <=cx Y`.
    pub delta: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub x: GeneratorSpec,
    pub y: GeneratorSpec,
    pub mean_delta: f64,
    pub mean_se: f64,
    pub deltas: Vec<FunctionDelta>,
    /// Labels of test functions with `delta > 3 se`.
    pub violations: Vec<String>,
    /// Significant sign changes of `F_X - F_Y` on the pooled quantile grid.
    pub cdf_crossings: usize,
}

fn delta_of(x: &[f64], y: &[f64], phi: impl Fn(f64) -> f64) -> (f64, f64) {
    let fx: Vec<f64> = x.iter().map(|&v| phi(v)).collect();
    let fy: Vec<f64> = y.iter().map(|&v| phi(v)).collect();
    let (mx, sx) = mean_se(&fx);
    let (my, sy) = mean_se(&fy);
    (mx - my, if x.as_ptr() == y.as_ptr() { 0.0 } else { sx.hypot(sy) })
}

fn ecdf(s: &[f64], t: f64) -> f64 {
    s.partition_point(|&v| v <= t) as f64 / s.len() as f64
}

/// Empirical test of `X <=cx Y` on the test-function family.
pub fn check_convex_order(x: &SampleBatch, y: &SampleBatch, family: &ConvexFamily) -> Result<OrderReport> {
    let (xv, yv) = (&x.values, &y.values);
    if xv.len() < 2 || yv.len() < 2 {
        return Err(Error::InsufficientSample(format!("sizes {} and {}", xv.len(), yv.len())));
    }
    let (mean_delta, mse) = delta_of(xv, yv, |t| t);
    if family.require_equal_means && mean_delta.abs() > 5.0 * mse {
        return Err(Error::MeanMismatch(format!("means differ by {mean_delta:e}, {:.1} standard errors", mean_delta.abs() / mse)));
    }
    let mut pooled: Vec<f64> = xv.iter().chain(yv.iter()).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let q = |p: f64| pooled[((p * pooled.len() as f64) as usize).min(pooled.len() - 1)];
    let mut deltas = Vec::new();
    for &p in &family.quantiles {
        let c = q(p);
        let (d, se) = delta_of(xv, yv, |t| (t - c).abs());
        deltas.push(FunctionDelta { label: format!("|t - {c:.6}|"), delta: d, se });
    }
    for &s in &family.rates {
        for sign in [1.0, -1.0] {
            let (d, se) = delta_of(xv, yv, |t| (sign * s * t).exp());
            deltas.push(FunctionDelta { label: format!("exp({}{s} t)", if sign > 0.0 { "" } else { "-" }), delta: d, se });
        }
    }
    let violations = deltas.iter().filter(|d| d.delta > 3.0 * d.se).map(|d| d.label.clone()).collect();

    let (sx, sy) = (sorted(xv), sorted(yv));
    let (n, m) = (sx.len() as f64, sy.len() as f64);
    let mut sign = 0.0;
    let mut crossings = 0;
    for i in 1..100 {
        let t = q(i as f64 / 100.0);
        let (fx, fy) = (ecdf(&sx, t), ecdf(&sy, t));
        let f = 0.5 * (fx + fy);
        let noise = 3.0 * (f * (1.0 - f) * (1.0 / n + 1.0 / m)).sqrt();
        let d = fx - fy;
        if d.abs() > noise {
            if sign != 0.0 && d.signum() != sign {
                crossings += 1;
            }
            sign = d.signum();
        }
    }
    Ok(OrderReport {
        x: x.spec,
        y: y.spec,
        mean_delta,
        mean_se: mse,
        deltas,
        violations,
        cdf_crossings: crossings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossValidation {
    pub alpha: f64,
    pub ks: KsResult,
    pub mean: f64,
    pub mean_se: f64,
    pub tail_log_sd: f64,
}

/// Compares the beta-product `T_alpha` with `Gamma(1+alpha) Z_alpha^(-alpha)` drawn from an independent stream.
pub fn cross_validate_factorizations(alpha: f64, n: usize, seed: RngSeed) -> Result<CrossValidation> {
    if !(alpha > 0.1 && alpha < 0.9) {
        return Err(out_of_range("alpha", format!("{alpha} not in (0.1, 0.9)")));
    }
    let t = sample(GeneratorSpec::BetaProduct { product: BetaLaw::T { alpha }, truncation: DEFAULT_TRUNCATION }, n, seed)?;
    let m = sample_stream(GeneratorSpec::MittagLefflerM { alpha }, n, seed, 1)?;
    let g = crate::special::gamma(1.0 + alpha)?;
    let exact: Vec<f64> = m.values.iter().map(|v| g * v).collect();
    let ks = ks_two_sample(&t.values, &exact)?;
    let (mean, se) = mean_se(&t.values);
    Ok(CrossValidation { alpha, ks, mean, mean_se: se, tail_log_sd: t.tail_log_sd.unwrap_or(0.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationCheck {
    pub mean_n: f64,
    pub mean_4n: f64,
    pub se: f64,
}

/// Empirical means of a beta product at truncation `N` and `4N` on the same seed.
pub fn truncation_check(product: BetaLaw, truncation: usize, n: usize, seed: RngSeed) -> Result<TruncationCheck> {
    let a = sample(GeneratorSpec::BetaProduct { product, truncation }, n, seed)?;
    let b = sample(GeneratorSpec::BetaProduct { product, truncation: 4 * truncation }, n, seed)?;
    let (ma, sa) = mean_se(&a.values);
    let (mb, _) = mean_se(&b.values);
    Ok(TruncationCheck { mean_n: ma, mean_4n: mb, se: sa })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub pass: bool,
}

/// Chi-square test of a Pillai batch against the distribution function `1 - E_alpha(-x^alpha)`.
pub fn pillai_chi_square(batch: &SampleBatch, cfg: &EvalConfig) -> Result<ChiSquare> {
    let GeneratorSpec::Pillai { alpha } = batch.spec else {
        return Err(Error::WrongKind(format!("chi-square check needs a Pillai batch, got {:?}", batch.spec)));
    };
    let n = batch.values.len();
    if n < 100 {
        return Err(Error::InsufficientSample(format!("{n} values")));
    }
    // geometric edges, merged until every bin expects at least 20 draws
    let mut edges = vec![0.0];
    let mut cdf_prev = 0.0;
    for k in -40..=40 {
        let e = 10f64.powf(k as f64 / 5.0);
        let c = 1.0 - eval_ml_power(alpha, e, -1.0, cfg)?;
        if (c - cdf_prev) * n as f64 >= 20.0 && (1.0 - c) * n as f64 >= 20.0 {
            edges.push(e);
            cdf_prev = c;
        }
    }
    let mut probs = Vec::with_capacity(edges.len());
    let mut prev = 0.0;
    for &e in &edges[1..] {
        let c = 1.0 - eval_ml_power(alpha, e, -1.0, cfg)?;
        probs.push(c - prev);
        prev = c;
    }
    probs.push(1.0 - prev);
    let mut counts = vec![0usize; probs.len()];
    for &v in &batch.values {
        counts[edges.partition_point(|&e| e < v) - 1] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = probs.len() - 1;
    let p = gamma_q(dof as f64 / 2.0, stat / 2.0)?;
    Ok(ChiSquare { statistic: stat, dof, p_value: p, pass: p > 0.01 })
}

/// Mean of `ln` of a positive batch with its standard error, compared against `-gamma` for Pillai draws.
pub fn log_mean(batch: &SampleBatch) -> (f64, f64) {
    let l: Vec<f64> = batch.values.iter().map(|v| v.ln()).collect();
    mean_se(&l)
}

/// `E[ln(c B(a, b))]`, used to audit individual beta factors.
pub fn ln_beta_mean(a: f64, b: f64) -> Result<f64> {
    Ok(digamma(a)? - digamma(a + b)?)
}

#[cfg(test)]
mod tests;
