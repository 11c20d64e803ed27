//! Diagonal calculus for the inequality `M0(Φ(x_1..x_n)) <= Φ(M1(x^1)..Mk(x^k))`.
//!
//! The deficiency `F(x) = Φ(M1(x^1), ..., Mk(x^k)) - M0(Φ(x_1), ..., Φ(x_n))`
//! vanishes on diagonal matrices `Δ(y)` (every column constant), so its first
//! and second partials there govern local validity. This module provides the
//! analytic diagonal partials of Bajraktarević means, the analytic partials of
//! `F` on the diagonal, and finite-difference checks of both.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{axis_points, ProductGrid, DEFAULT_CAP, DEFAULT_CLIP};
use crate::means::{BajraktarevicSpec, MeanSpec, Weights};
use crate::{Error, Interval, Matrix, Result};

/// Relative step of first-order central differences.
pub const FIRST_ORDER_STEP: f64 = 1e-5;
/// Relative step of second-order central differences.
pub const SECOND_ORDER_STEP: f64 = 1e-4;
/// Sup-deviation below which sampled weight ratios count as constant.
pub const PROPORTIONALITY_TOLERANCE: f64 = 1e-9;

pub type VectorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// User-supplied coupling map with explicit partials.
#[derive(Clone)]
pub struct CustomPhi {
    pub value: VectorFn,
    pub gradient: GradientFn,
    pub hessian: HessianFn,
    pub codomain: Interval,
}

/// The coupling map `Φ`.
#[derive(Clone)]
pub enum PhiSpec {
    /// `y_1 + ... + y_k`
    Sum,
    /// `y_1 ⋯ y_k` on positive boxes
    Product,
    Custom(CustomPhi),
}

impl fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PhiSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PhiSpec::Sum => "sum",
            PhiSpec::Product => "product",
            PhiSpec::Custom(_) => "custom",
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            PhiSpec::Sum => y.iter().sum(),
            PhiSpec::Product => y.iter().product(),
            PhiSpec::Custom(c) => (c.value)(y),
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match self {
            PhiSpec::Sum => vec![1.0; y.len()],
            PhiSpec::Product => (0..y.len()).map(|i| product_except(y, &[i])).collect(),
            PhiSpec::Custom(c) => (c.gradient)(y),
        }
    }

    pub fn hessian(&self, y: &[f64]) -> Matrix {
        let k = y.len();
        match self {
            PhiSpec::Sum => Matrix::zeros(k, k),
            PhiSpec::Product => Matrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { product_except(y, &[i, j]) }),
            PhiSpec::Custom(c) => (c.hessian)(y),
        }
    }

    /// An interval containing `Φ(box)`.
    pub fn codomain(&self, boxes: &[Interval]) -> Result<Interval> {
        match self {
            PhiSpec::Sum => Interval::new(boxes.iter().map(Interval::lo).sum(), boxes.iter().map(Interval::hi).sum()),
            PhiSpec::Product => {
                if let Some(b) = boxes.iter().find(|b| !b.is_positive()) {
                    return Err(Error::InvalidSpec(format!("product coupling needs positive boxes, got {b}")));
                }
                let lo: f64 = boxes.iter().map(Interval::lo).product();
                let hi = if boxes.iter().any(|b| b.hi().is_infinite()) {
                    f64::INFINITY
                } else {
                    boxes.iter().map(Interval::hi).product()
                };
                Interval::new(lo, hi)
            }
            PhiSpec::Custom(c) => Ok(c.codomain),
        }
    }
}

/// `Π_{l ∉ skip} y_l`, computed without division so zeros are harmless.
fn product_except(y: &[f64], skip: &[usize]) -> f64 {
    y.iter().enumerate().filter(|(l, _)| !skip.contains(l)).map(|(_, v)| v).product()
}

/// Left side `M0(Φ(x_1), ..., Φ(x_n))`, right side `Φ(M1(x^1), ..., Mk(x^k))`
/// and `gap = rhs - lhs`, the deficiency. The inequality holds at `x` iff
/// `gap >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// One instance of the coupled mean inequality with `n` rows and `k` columns.
#[derive(Debug, Clone)]
pub struct InequalityProblem {
    n: usize,
    left: MeanSpec,
    right: Vec<MeanSpec>,
    phi: PhiSpec,
    boxes: Vec<Interval>,
}

impl InequalityProblem {
    pub fn new(n: usize, left: MeanSpec, right: Vec<MeanSpec>, phi: PhiSpec, boxes: Vec<Interval>) -> Result<Self> {
        let k = right.len();
        if n < 2 {
            return Err(Error::InvalidSpec(format!("need at least two rows, got n = {n}")));
        }
        if k < 2 {
            return Err(Error::InvalidSpec(format!("need at least two inner means, got k = {k}")));
        }
        if boxes.len() != k {
            return Err(Error::Shape(format!("{} boxes for {k} inner means", boxes.len())));
        }
        for (j, m) in std::iter::once(&left).chain(&right).enumerate() {
            if m.n() != n {
                return Err(Error::Shape(format!("mean {j} has {} variables, expected {n}", m.n())));
            }
        }
        for (j, (m, b)) in right.iter().zip(&boxes).enumerate() {
            if !m.domain().contains_interval(b) {
                return Err(Error::InvalidSpec(format!("box {b} of column {} leaves the mean's domain {}", j + 1, m.domain())));
            }
        }
        let image = phi.codomain(&boxes)?;
        if !left.domain().contains_interval(&image) {
            return Err(Error::InvalidSpec(format!("Φ(box) ⊆ {image} leaves the outer mean's domain {}", left.domain())));
        }
        if let PhiSpec::Custom(_) = phi {
            let grid = ProductGrid::over_box(&boxes, sample_count_per_axis(k));
            for idx in 0..grid.len() {
                let y = grid.point(idx);
                if let Some(j) = phi.gradient(&y).iter().position(|g| !g.is_finite() || *g == 0.0) {
                    return Err(Error::InvalidSpec(format!("∂_{}Φ vanishes at {y:?}", j + 1)));
                }
            }
        }
        Ok(InequalityProblem { n, left, right, phi, boxes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.right.len()
    }

    pub fn left(&self) -> &MeanSpec {
        &self.left
    }

    pub fn right(&self) -> &[MeanSpec] {
        &self.right
    }

    pub fn phi(&self) -> &PhiSpec {
        &self.phi
    }

    pub fn boxes(&self) -> &[Interval] {
        &self.boxes
    }

    pub fn box_contains(&self, y: &[f64]) -> bool {
        y.len() == self.k() && self.boxes.iter().zip(y).all(|(b, v)| b.contains(*v))
    }

    pub(crate) fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.k() {
            return Err(Error::Shape(format!("point has {} coordinates, expected {}", y.len(), self.k())));
        }
        if !self.box_contains(y) {
            return Err(Error::Domain(format!("{y:?} is outside the box")));
        }
        Ok(())
    }

    /// Every mean is a Gini mean; returns `(r_0,s_0), ..., (r_k,s_k)`.
    pub fn gini_params(&self) -> Option<Vec<crate::means::GiniParams>> {
        std::iter::once(&self.left).chain(&self.right).map(MeanSpec::gini_params).collect()
    }

    /// Both sides of the inequality at the `n × k` matrix `x`.
    pub fn evaluate(&self, x: &Matrix) -> Result<Evaluation> {
        if x.rows() != self.n || x.cols() != self.k() {
            return Err(Error::Shape(format!(
                "expected a {}×{} matrix, got {}×{}",
                self.n,
                self.k(),
                x.rows(),
                x.cols()
            )));
        }
        for i in 0..self.n {
            if !self.box_contains(x.row(i)) {
                return Err(Error::Domain(format!("row {} = {:?} is outside the box", i + 1, x.row(i))));
            }
        }
        let inner: Vec<f64> = (0..self.k())
            .map(|j| self.right[j].evaluate(&x.column(j)))
            .collect::<Result<_>>()?;
        let coupled: Vec<f64> = (0..self.n).map(|i| self.phi.value(x.row(i))).collect();
        let lhs = self.left.evaluate(&coupled)?;
        let rhs = self.phi.value(&inner);
        Ok(Evaluation { lhs, rhs, gap: rhs - lhs })
    }
}

fn sample_count_per_axis(k: usize) -> usize {
    // At most ~4096 samples overall.
    ((4096f64).powf(1.0 / k as f64).floor() as usize).clamp(2, 17)
}

/// `F(x)`, the right side minus the left side.
pub fn deficiency(problem: &InequalityProblem, x: &Matrix) -> Result<f64> {
    problem.evaluate(x).map(|e| e.gap)
}

/// `∂_ℓ A_{f,p}(Δ(t)) = p_ℓ(t)/p_0(t)`.
pub fn diag_first_partials(spec: &BajraktarevicSpec, t: f64) -> Result<Vec<f64>> {
    spec.check_in_domain(t)?;
    let p: Vec<f64> = spec.weight_fns().iter().map(|w| (w.value)(t)).collect();
    let p0: f64 = p.iter().sum();
    Ok(p.into_iter().map(|v| v / p0).collect())
}

/// Second partials `∂_ℓ ∂_m A_{f,p}` on the diagonal:
///
/// ```text
/// ℓ = m:  2 p_ℓ'(p0 - p_ℓ)/p0² + p_ℓ(p0 - p_ℓ)/p0² · f''/f'
/// ℓ ≠ m: -(p_ℓ p_m)'/p0²      - p_ℓ p_m/p0²       · f''/f'
/// ```
pub fn diag_second_partials(spec: &BajraktarevicSpec, t: f64) -> Result<Matrix> {
    spec.check_in_domain(t)?;
    if !spec.has_second_order() {
        return Err(Error::Capability("second-order partials need f'' and every p_ℓ'".into()));
    }
    let w = spec.weight_fns();
    let p: Vec<f64> = w.iter().map(|w| (w.value)(t)).collect();
    let dp: Vec<f64> = w.iter().map(|w| w.d1.as_ref().expect("checked above")(t)).collect();
    let p0: f64 = p.iter().sum();
    let p0sq = p0 * p0;
    let ratio = spec.f_second(t)? / (spec.generator().d1)(t);
    let n = spec.n();
    Ok(Matrix::from_fn(n, n, |l, m| {
        if l == m {
            2.0 * dp[l] * (p0 - p[l]) / p0sq + p[l] * (p0 - p[l]) / p0sq * ratio
        } else {
            -(dp[l] * p[m] + p[l] * dp[m]) / p0sq - p[l] * p[m] / p0sq * ratio
        }
    }))
}

/// Diagonal first partials of any supported mean; `λ` for Gini means.
pub fn mean_diag_first(mean: &MeanSpec, t: f64) -> Result<Vec<f64>> {
    match mean {
        MeanSpec::Gini { weights, .. } => {
            mean.check_in_domain(t)?;
            Ok(weights.as_slice().to_vec())
        }
        MeanSpec::Bajraktarevic(b) => diag_first_partials(b, t),
    }
}

/// Diagonal second partials of any supported mean; for Gini means the closed
/// form `λ_m (δ_ℓm - λ_ℓ)(r + s - 1)/t`.
pub fn mean_diag_second(mean: &MeanSpec, t: f64) -> Result<Matrix> {
    match mean {
        MeanSpec::Gini { params, weights } => {
            mean.check_in_domain(t)?;
            let lam = weights.as_slice();
            let c = (params.sum() - 1.0) / t;
            Ok(Matrix::from_fn(lam.len(), lam.len(), |l, m| {
                lam[m] * (if l == m { 1.0 } else { 0.0 } - lam[l]) * c
            }))
        }
        MeanSpec::Bajraktarevic(b) => diag_second_partials(b, t),
    }
}

/// Analytic gradient and Hessian of `F` at `Δ(y)`. Variables are flattened
/// column by column: entry `x[ℓ][i]` has index `ℓ + n·i`.
pub fn deficiency_partials(problem: &InequalityProblem, y: &[f64]) -> Result<(Vec<f64>, Matrix)> {
    problem.check_point(y)?;
    let n = problem.n();
    let k = problem.k();
    let phi = problem.phi();
    let y0 = phi.value(y);
    let grad = phi.gradient(y);
    let hess = phi.hessian(y);
    let d1_0 = mean_diag_first(problem.left(), y0)?;
    let d2_0 = mean_diag_second(problem.left(), y0)?;
    let d1: Vec<Vec<f64>> = (0..k).map(|i| mean_diag_first(&problem.right()[i], y[i])).collect::<Result<_>>()?;
    let d2: Vec<Matrix> = (0..k).map(|i| mean_diag_second(&problem.right()[i], y[i])).collect::<Result<_>>()?;

    let mut first = vec![0.0; n * k];
    for i in 0..k {
        for l in 0..n {
            first[l + n * i] = grad[i] * (d1[i][l] - d1_0[l]);
        }
    }
    let mut second = Matrix::zeros(n * k, n * k);
    for i in 0..k {
        for j in 0..k {
            for l in 0..n {
                for m in 0..n {
                    let delta_lm = if l == m { 1.0 } else { 0.0 };
                    let own = if i == j { d2[j][(l, m)] } else { 0.0 };
                    second[(l + n * i, m + n * j)] = hess[(i, j)] * (d1[j][m] * d1[i][l] - delta_lm * d1_0[m])
                        - grad[j] * (grad[i] * d2_0[(l, m)] - own);
                }
            }
        }
    }
    Ok((first, second))
}

/// Analytic-versus-numerical comparison of the diagonal partials of `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckReport {
    pub point: Vec<f64>,
    pub max_abs_first: f64,
    pub max_rel_first: f64,
    pub max_abs_second: f64,
    pub max_rel_second: f64,
    /// Hypotheses the analytic formulas rely on that are not checked.
    pub assumptions: Vec<String>,
}

impl GradientCheckReport {
    pub fn max_rel(&self) -> f64 {
        self.max_rel_first.max(self.max_rel_second)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_first.max(self.max_abs_second)
    }
}

/// Mixed relative deviation `|a - b| / max(1, |a|, |b|)`.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Central-difference gradient and Hessian of `F` at `x`.
pub fn numerical_deficiency_partials(problem: &InequalityProblem, x: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = problem.n();
    let nk = n * problem.k();
    let entry = |v: usize| (v % n, v / n);
    let eval = |m: &Matrix| deficiency(problem, m);
    let shifted = |moves: &[(usize, f64)]| {
        let mut m = x.clone();
        for &(v, h) in moves {
            m[entry(v)] += h;
        }
        eval(&m)
    };
    let h1: Vec<f64> = (0..nk).map(|v| FIRST_ORDER_STEP * x[entry(v)].abs().max(1.0)).collect();
    let h2: Vec<f64> = (0..nk).map(|v| SECOND_ORDER_STEP * x[entry(v)].abs().max(1.0)).collect();

    let mut first = vec![0.0; nk];
    for v in 0..nk {
        first[v] = (shifted(&[(v, h1[v])])? - shifted(&[(v, -h1[v])])?) / (2.0 * h1[v]);
    }
    let center = eval(x)?;
    let mut second = Matrix::zeros(nk, nk);
    for a in 0..nk {
        second[(a, a)] = (shifted(&[(a, h2[a])])? - 2.0 * center + shifted(&[(a, -h2[a])])?) / (h2[a] * h2[a]);
        for b in a + 1..nk {
            let (ha, hb) = (h2[a], h2[b]);
            let v = (shifted(&[(a, ha), (b, hb)])? - shifted(&[(a, ha), (b, -hb)])?
                - shifted(&[(a, -ha), (b, hb)])?
                + shifted(&[(a, -ha), (b, -hb)])?)
                / (4.0 * ha * hb);
            second[(a, b)] = v;
            second[(b, a)] = v;
        }
    }
    Ok((first, second))
}

/// Compares the analytic diagonal partials of `F` at `Δ(y)` with central
/// differences of [`deficiency`].
pub fn deficiency_gradient_check(problem: &InequalityProblem, y: &[f64]) -> Result<GradientCheckReport> {
    for m in std::iter::once(problem.left()).chain(problem.right()) {
        if let MeanSpec::Bajraktarevic(b) = m {
            if !b.has_second_order() {
                return Err(Error::Capability("gradient check needs second derivatives of every mean".into()));
            }
        }
    }
    let (a1, a2) = deficiency_partials(problem, y)?;
    let x = Matrix::diagonal_embedding(problem.n(), y);
    let (n1, n2) = numerical_deficiency_partials(problem, &x)?;
    let fold = |pairs: Vec<(f64, f64)>| {
        pairs.into_iter().fold((0.0f64, 0.0f64), |(ma, mr), (a, b)| {
            (ma.max((a - b).abs()), mr.max(relative_deviation(a, b)))
        })
    };
    let (max_abs_first, max_rel_first) = fold(a1.iter().cloned().zip(n1.iter().cloned()).collect());
    let (max_abs_second, max_rel_second) =
        fold(a2.as_slice().iter().cloned().zip(n2.as_slice().iter().cloned()).collect());
    let mut assumptions = Vec::new();
    if let PhiSpec::Custom(_) = problem.phi() {
        assumptions.push("surjectivity of the custom coupling map onto its codomain is assumed, not verified".into());
    }
    Ok(GradientCheckReport {
        point: y.to_vec(),
        max_abs_first,
        max_rel_first,
        max_abs_second,
        max_rel_second,
        assumptions,
    })
}

/// Returns the common weight vector `λ` when `p_ℓ/p_0` is constant on the
/// sampled interior of the domain, and `None` when it is not (the weights
/// are then not of the proportional form `p_ℓ = λ_ℓ p_0`).
pub fn weight_proportionality_check(spec: &BajraktarevicSpec, samples: usize) -> Result<Option<Weights>> {
    if samples < 2 {
        return Err(Error::Contract(format!("need at least two samples, got {samples}")));
    }
    let pts = axis_points(&spec.domain(), samples, DEFAULT_CLIP, DEFAULT_CAP);
    let ratios: Vec<Vec<f64>> = pts.iter().map(|&t| diag_first_partials(spec, t)).collect::<Result<_>>()?;
    let base = &ratios[0];
    let deviation = ratios
        .iter()
        .flat_map(|r| r.iter().zip(base).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    if deviation > PROPORTIONALITY_TOLERANCE {
        return Ok(None);
    }
    let n = base.len();
    let mean: Vec<f64> = (0..n).map(|l| ratios.iter().map(|r| r[l]).sum::<f64>() / ratios.len() as f64).collect();
    Weights::new(mean).map(Some)
}

/// [`weight_proportionality_check`] for any supported mean.
pub fn mean_common_weights(mean: &MeanSpec, samples: usize) -> Result<Option<Weights>> {
    match mean {
        MeanSpec::Gini { weights, .. } => Ok(Some(weights.clone())),
        MeanSpec::Bajraktarevic(b) => weight_proportionality_check(b, samples),
    }
}
