//! Gini, power and nonsymmetric generalized Bajraktarević means.
//!
//! For a generator `f` with nonvanishing derivative and positive weight maps
//! `p_1..p_n`, the Bajraktarević mean is
//!
//! ```text
//! A_{f,p}(x) = f⁻¹( Σ p_ℓ(x_ℓ) f(x_ℓ) / Σ p_ℓ(x_ℓ) )
//! ```
//!
//! Gini means are the special case `f(t) = t^(r-s)` (or `ln t` when `r = s`)
//! with `p_ℓ(t) = λ_ℓ t^s`; power means are Gini means with `s = 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::axis_points;
use crate::{Error, Interval, Result};

/// Exponent gap below which a Gini mean or `χ` is evaluated on the
/// logarithmic `r = s` branch.
pub const SEAM_TOLERANCE: f64 = 1e-9;

/// Weight sums must equal one to this tolerance after normalization.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Sample count used when validating user-supplied generator and weight maps.
const VALIDATION_SAMPLES: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiniParams {
    pub r: f64,
    pub s: f64,
}

impl GiniParams {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        if !r.is_finite() || !s.is_finite() {
            return Err(Error::InvalidSpec(format!("Gini exponents must be finite, got ({r}, {s})")));
        }
        Ok(GiniParams { r, s })
    }

    /// Power mean of exponent `p`, i.e. `(p, 0)`.
    pub fn power(p: f64) -> Result<Self> {
        GiniParams::new(p, 0.0)
    }

    pub fn is_log_branch(&self) -> bool {
        (self.r - self.s).abs() < SEAM_TOLERANCE
    }

    pub fn sum(&self) -> f64 {
        self.r + self.s
    }

    pub fn min(&self) -> f64 {
        self.r.min(self.s)
    }

    pub fn max(&self) -> f64 {
        self.r.max(self.s)
    }

    /// `(-r, -s)`.
    pub fn negated(&self) -> GiniParams {
        GiniParams { r: -self.r, s: -self.s }
    }
}

impl fmt::Display for GiniParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.r, self.s)
    }
}

/// Positive weight vector, normalized to unit sum on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights {
    lambda: Vec<f64>,
}

impl Weights {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidSpec("weight vector is empty".into()));
        }
        if let Some(bad) = raw.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpec(format!("weights must be positive and finite, got {bad}")));
        }
        let total: f64 = raw.iter().sum();
        let lambda: Vec<f64> = raw.iter().map(|w| w / total).collect();
        debug_assert!((lambda.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOLERANCE * lambda.len() as f64);
        Ok(Weights { lambda })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Weights::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    /// Sup-norm distance between two weight vectors of equal length.
    pub fn distance(&self, other: &Weights) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.lambda.iter().zip(&other.lambda).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Weights::new(v)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.lambda
    }
}

fn check_positive_input(w: &Weights, x: &[f64]) -> Result<()> {
    if x.len() != w.len() {
        return Err(Error::Shape(format!("{} inputs for {} weights", x.len(), w.len())));
    }
    if let Some(bad) = x.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("mean input must be positive and finite, got {bad}")));
    }
    Ok(())
}

/// `ln Σ λ_i x_i^p`, evaluated as a shifted log-sum-exp with `ln_1p`/`exp_m1`
/// so that it stays accurate for large `|p|` and for `p` near zero.
fn log_power_sum(p: f64, lambda: &[f64], logs: &[f64]) -> f64 {
    let shift = logs.iter().fold(f64::NEG_INFINITY, |m, l| m.max(p * l));
    let acc: f64 = lambda.iter().zip(logs).map(|(w, l)| w * (p * l - shift).exp_m1()).sum();
    shift + acc.max(-1.0).ln_1p()
}

/// Softmax weights `λ_i x_i^p / Σ λ_j x_j^p`.
fn tilted_weights(p: f64, lambda: &[f64], logs: &[f64]) -> Vec<f64> {
    let shift = logs.iter().fold(f64::NEG_INFINITY, |m, l| m.max(p * l));
    let raw: Vec<f64> = lambda.iter().zip(logs).map(|(w, l)| w * (p * l - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// `Σ λ_i x_i^p ln x_i / Σ λ_i x_i^p`, the derivative of `p ↦ ln Σ λ_i x_i^p`.
fn tilted_log_mean(p: f64, lambda: &[f64], logs: &[f64]) -> f64 {
    tilted_weights(p, lambda, logs).iter().zip(logs).map(|(t, l)| t * l).sum()
}

/// Nodes and weights of 8-point Gauss–Legendre quadrature on `[-1, 1]`.
const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Weighted `n`-variable Gini mean `G_{r,s;λ}(x)`.
pub fn gini_mean(params: GiniParams, w: &Weights, x: &[f64]) -> Result<f64> {
    check_positive_input(w, x)?;
    let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let lambda = w.as_slice();
    let (lo, hi) = logs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), l| (a.min(*l), b.max(*l)));
    let log_mean = if params.is_log_branch() {
        tilted_log_mean(0.5 * (params.r + params.s), lambda, &logs)
    } else if (params.r - params.s).abs() * (hi - lo) <= 1.0 {
        // Average of the tilted log-mean over [s, r]; avoids the cancellation
        // in the difference quotient when r and s are close.
        let mid = 0.5 * (params.r + params.s);
        let half = 0.5 * (params.r - params.s);
        GAUSS_LEGENDRE_8
            .iter()
            .map(|(x, w)| 0.5 * w * tilted_log_mean(mid + half * x, lambda, &logs))
            .sum()
    } else {
        (log_power_sum(params.r, lambda, &logs) - log_power_sum(params.s, lambda, &logs))
            / (params.r - params.s)
    };
    Ok(clamp_to_hull(log_mean.exp(), x))
}

/// Weighted power mean `H_{p;λ}(x)`, the weighted geometric mean at `p = 0`.
pub fn power_mean(p: f64, w: &Weights, x: &[f64]) -> Result<f64> {
    check_positive_input(w, x)?;
    if !p.is_finite() {
        return Err(Error::Domain(format!("power mean exponent must be finite, got {p}")));
    }
    let lambda = w.as_slice();
    let value = if p == 0.0 {
        lambda.iter().zip(x).map(|(w, v)| w * v.ln()).sum::<f64>().exp()
    } else if p.abs() < 0.5 {
        // H = exp(ln(1 + Σ λ (x^p - 1)) / p), anchored at 1 to avoid losing
        // digits when raising a sum near one to the large power 1/p.
        let acc: f64 = lambda.iter().zip(x).map(|(w, v)| w * (p * v.ln()).exp_m1()).sum();
        (acc.ln_1p() / p).exp()
    } else {
        // Scale by the dominant entry so every ratio raised to p is at most one.
        let anchor = if p > 0.0 {
            x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        } else {
            x.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        let acc: f64 = lambda.iter().zip(x).map(|(w, v)| w * (v / anchor).powf(p)).sum();
        anchor * acc.powf(1.0 / p)
    };
    Ok(clamp_to_hull(value, x))
}

fn clamp_to_hull(value: f64, x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    value.clamp(lo, hi)
}

/// `χ_{r,s}(t) = (t^r - t^s)/(r - s)`, or `t^r ln t` when `r = s`.
pub fn chi(params: GiniParams, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("chi needs a positive argument, got {t}")));
    }
    Ok(chi_unchecked(params, t))
}

pub(crate) fn chi_unchecked(params: GiniParams, t: f64) -> f64 {
    let lt = t.ln();
    if params.is_log_branch() {
        let p = 0.5 * (params.r + params.s);
        (p * lt).exp() * lt
    } else {
        // t^r - t^s = t^s (exp((r - s) ln t) - 1), exact near t = 1.
        let d = params.r - params.s;
        (params.s * lt).exp() * (d * lt).exp_m1() / d
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Wraps a closure as a [`ScalarFn`].
pub fn scalar_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// A strictly monotone generator `f` with derivatives and inverse.
#[derive(Clone)]
pub struct Generator {
    pub value: ScalarFn,
    pub d1: ScalarFn,
    pub d2: Option<ScalarFn>,
    pub inverse: ScalarFn,
}

/// Positive weight map `p_ℓ` with optional derivative.
#[derive(Clone)]
pub struct WeightFn {
    pub value: ScalarFn,
    pub d1: Option<ScalarFn>,
}

/// An antiderivative `φ` of `p_0² f'` with its derivative and inverse,
/// used to convexify the coupling map.
#[derive(Clone)]
pub enum Convexifier {
    /// Closed form for Gini means: `φ'(t) = c t^(g-1)` with `g = r + s` and
    /// `c = r - s` (or `c = 1` on the `r = s` branch).
    Power { c: f64, g: f64 },
    Custom { value: ScalarFn, d1: ScalarFn, inverse: ScalarFn },
}

/// `(e^{g z} - 1)/g`, continuous at `g = 0`.
fn expm1_over(g: f64, z: f64) -> f64 {
    if g == 0.0 {
        z
    } else {
        (g * z).exp_m1() / g
    }
}

/// Inverse of [`expm1_over`] in `z`.
fn ln1p_over(g: f64, w: f64) -> Option<f64> {
    if g == 0.0 {
        return Some(w);
    }
    let arg = g * w;
    (arg > -1.0).then(|| arg.ln_1p() / g)
}

impl Convexifier {
    pub fn for_gini(params: GiniParams) -> Self {
        let c = if params.is_log_branch() { 1.0 } else { params.r - params.s };
        Convexifier::Power { c, g: params.sum() }
    }

    fn anchor_scale(anchor: f64) -> f64 {
        if anchor != 0.0 { anchor.abs() } else { 1.0 }
    }

    /// Sign of `φ'` at the anchor.
    pub fn orientation(&self, anchor: f64) -> f64 {
        match self {
            Convexifier::Power { c, .. } => c.signum(),
            Convexifier::Custom { d1, .. } => d1(anchor).signum(),
        }
    }

    /// `(φ(t) - φ(a)) / (|φ'(a)| · |a|)`: `φ` rescaled by a positive factor and
    /// shifted so the anchor `a` maps to zero with unit relative slope.
    pub fn anchored(&self, anchor: f64, t: f64) -> f64 {
        match self {
            Convexifier::Power { c, g } => c.signum() * expm1_over(*g, (t / anchor).ln()),
            Convexifier::Custom { value, d1, .. } => {
                (value(t) - value(anchor)) / (d1(anchor).abs() * Self::anchor_scale(anchor))
            }
        }
    }

    /// Inverse of [`Convexifier::anchored`]; `None` outside the range.
    pub fn anchored_inverse(&self, anchor: f64, u: f64) -> Option<f64> {
        match self {
            Convexifier::Power { c, g } => ln1p_over(*g, c.signum() * u).map(|z| anchor * z.exp()),
            Convexifier::Custom { value, d1, inverse } => {
                let v = value(anchor) + u * d1(anchor).abs() * Self::anchor_scale(anchor);
                let t = inverse(v);
                t.is_finite().then_some(t)
            }
        }
    }
}

/// Nonsymmetric generalized Bajraktarević mean `A_{f,p}` on `domain^n`.
#[derive(Clone)]
pub struct BajraktarevicSpec {
    f: Generator,
    p: Vec<WeightFn>,
    domain: Interval,
    convexifier: Option<Convexifier>,
}

impl fmt::Debug for BajraktarevicSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BajraktarevicSpec")
            .field("n", &self.p.len())
            .field("domain", &self.domain)
            .field("has_second_order", &self.has_second_order())
            .finish()
    }
}

impl BajraktarevicSpec {
    /// Validates the generator and weights by sampling the domain: `f'` must
    /// keep a strict sign and every `p_ℓ` must stay positive.
    pub fn new(f: Generator, p: Vec<WeightFn>, domain: Interval) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidSpec("at least one weight function is required".into()));
        }
        let samples = axis_points(&domain, VALIDATION_SAMPLES, 0.01, 1e6);
        let mut sign = 0.0;
        for &t in &samples {
            let d = (f.d1)(t);
            if !d.is_finite() || d == 0.0 {
                return Err(Error::InvalidSpec(format!("generator derivative vanishes or is undefined at {t}")));
            }
            if sign == 0.0 {
                sign = d.signum();
            } else if d.signum() != sign {
                return Err(Error::InvalidSpec(format!("generator derivative changes sign near {t}")));
            }
            for (l, w) in p.iter().enumerate() {
                let v = (w.value)(t);
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidSpec(format!("weight p_{} is not positive at {t}", l + 1)));
                }
            }
        }
        Ok(BajraktarevicSpec { f, p, domain, convexifier: None })
    }

    /// Attaches a custom `φ = ∫ p_0² f'`.
    pub fn with_convexifier(mut self, phi: Convexifier) -> Self {
        self.convexifier = Some(phi);
        self
    }

    /// The Bajraktarević representation of `G_{r,s;λ}`.
    pub fn gini(params: GiniParams, w: &Weights) -> Self {
        let GiniParams { r, s } = params;
        let f = if params.is_log_branch() {
            Generator {
                value: scalar_fn(f64::ln),
                d1: scalar_fn(|t| 1.0 / t),
                d2: Some(scalar_fn(|t| -1.0 / (t * t))),
                inverse: scalar_fn(f64::exp),
            }
        } else {
            let d = r - s;
            Generator {
                value: scalar_fn(move |t| t.powf(d)),
                d1: scalar_fn(move |t| d * t.powf(d - 1.0)),
                d2: Some(scalar_fn(move |t| d * (d - 1.0) * t.powf(d - 2.0))),
                inverse: scalar_fn(move |u| u.powf(1.0 / d)),
            }
        };
        let p = w
            .as_slice()
            .iter()
            .map(|&l| WeightFn {
                value: scalar_fn(move |t| l * t.powf(s)),
                d1: Some(scalar_fn(move |t| l * s * t.powf(s - 1.0))),
            })
            .collect();
        BajraktarevicSpec { f, p, domain: Interval::positive(), convexifier: Some(Convexifier::for_gini(params)) }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn generator(&self) -> &Generator {
        &self.f
    }

    pub fn weight_fns(&self) -> &[WeightFn] {
        &self.p
    }

    pub fn convexifier(&self) -> Option<&Convexifier> {
        self.convexifier.as_ref()
    }

    /// Second derivative of `f` and first derivatives of every `p_ℓ` present.
    pub fn has_second_order(&self) -> bool {
        self.f.d2.is_some() && self.p.iter().all(|w| w.d1.is_some())
    }

    pub(crate) fn check_in_domain(&self, t: f64) -> Result<()> {
        if self.domain.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{t} is outside {}", self.domain)))
        }
    }

    /// `p_0 = p_1 + ... + p_n`.
    pub fn p0(&self, t: f64) -> f64 {
        self.p.iter().map(|w| (w.value)(t)).sum()
    }

    /// `p_0'`, when every weight carries its derivative.
    pub fn p0_prime(&self, t: f64) -> Result<f64> {
        self.p
            .iter()
            .map(|w| w.d1.as_ref().map(|d| d(t)))
            .sum::<Option<f64>>()
            .ok_or_else(|| Error::Capability("weight derivatives are not available".into()))
    }

    pub fn f_second(&self, t: f64) -> Result<f64> {
        self.f
            .d2
            .as_ref()
            .map(|d| d(t))
            .ok_or_else(|| Error::Capability("generator second derivative is not available".into()))
    }
}

/// `f⁻¹` of the `p`-weighted average of `f(x_i)`.
pub fn bajraktarevic_mean(spec: &BajraktarevicSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.n() {
        return Err(Error::Shape(format!("{} inputs for an {}-variable mean", x.len(), spec.n())));
    }
    for &v in x {
        spec.check_in_domain(v)?;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, &v) in spec.p.iter().zip(x) {
        let pv = (w.value)(v);
        num += pv * (spec.f.value)(v);
        den += pv;
    }
    let value = (spec.f.inverse)(num / den);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("generator inverse failed at {}", num / den)));
    }
    Ok(clamp_to_hull(value, x))
}

/// One of the means the analysis understands.
#[derive(Debug, Clone)]
pub enum MeanSpec {
    Gini { params: GiniParams, weights: Weights },
    Bajraktarevic(Arc<BajraktarevicSpec>),
}

impl MeanSpec {
    pub fn gini(params: GiniParams, weights: Weights) -> Self {
        MeanSpec::Gini { params, weights }
    }

    pub fn power(p: f64, weights: Weights) -> Result<Self> {
        Ok(MeanSpec::Gini { params: GiniParams::power(p)?, weights })
    }

    pub fn custom(spec: BajraktarevicSpec) -> Self {
        MeanSpec::Bajraktarevic(Arc::new(spec))
    }

    pub fn n(&self) -> usize {
        match self {
            MeanSpec::Gini { weights, .. } => weights.len(),
            MeanSpec::Bajraktarevic(b) => b.n(),
        }
    }

    pub fn domain(&self) -> Interval {
        match self {
            MeanSpec::Gini { .. } => Interval::positive(),
            MeanSpec::Bajraktarevic(b) => b.domain(),
        }
    }

    pub fn gini_params(&self) -> Option<GiniParams> {
        match self {
            MeanSpec::Gini { params, .. } => Some(*params),
            MeanSpec::Bajraktarevic(_) => None,
        }
    }

    /// Bajraktarević representation, built on demand for Gini means.
    pub fn to_bajraktarevic(&self) -> Arc<BajraktarevicSpec> {
        match self {
            MeanSpec::Gini { params, weights } => Arc::new(BajraktarevicSpec::gini(*params, weights)),
            MeanSpec::Bajraktarevic(b) => Arc::clone(b),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match self {
            MeanSpec::Gini { params, weights } => gini_mean(*params, weights, x),
            MeanSpec::Bajraktarevic(b) => bajraktarevic_mean(b, x),
        }
    }

    pub(crate) fn check_in_domain(&self, t: f64) -> Result<()> {
        if self.domain().contains(t) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{t} is outside {}", self.domain())))
        }
    }

    /// `2 p_0'/p_0 + f''/f'` at `t`; equals `(r + s - 1)/t` for Gini means.
    pub fn curvature_ratio(&self, t: f64) -> Result<f64> {
        self.check_in_domain(t)?;
        match self {
            MeanSpec::Gini { params, .. } => Ok((params.sum() - 1.0) / t),
            MeanSpec::Bajraktarevic(b) => {
                let p0 = b.p0(t);
                Ok(2.0 * b.p0_prime(t)? / p0 + b.f_second(t)? / (b.f.d1)(t))
            }
        }
    }

    /// `p_0(y)(f(y) - f(u)) / (p_0(u) f'(u))`; equals `u χ_{r,s}(y/u)` for
    /// Gini means.
    pub fn sufficient_condition_term(&self, u: f64, y: f64) -> Result<f64> {
        self.check_in_domain(u)?;
        self.check_in_domain(y)?;
        match self {
            MeanSpec::Gini { params, .. } => Ok(u * chi_unchecked(*params, y / u)),
            MeanSpec::Bajraktarevic(b) => {
                let f = &b.f;
                Ok(b.p0(y) * ((f.value)(y) - (f.value)(u)) / (b.p0(u) * (f.d1)(u)))
            }
        }
    }

    /// Sign of `f'` on the domain.
    pub fn orientation(&self) -> f64 {
        match self {
            MeanSpec::Gini { params, .. } => {
                if params.is_log_branch() { 1.0 } else { (params.r - params.s).signum() }
            }
            MeanSpec::Bajraktarevic(b) => {
                let (lo, hi) = b.domain.capped(1e6);
                (b.f.d1)(0.5 * (lo + hi)).signum()
            }
        }
    }

    pub fn convexifier(&self) -> Option<Convexifier> {
        match self {
            MeanSpec::Gini { params, .. } => Some(Convexifier::for_gini(*params)),
            MeanSpec::Bajraktarevic(b) => b.convexifier.clone(),
        }
    }
}
