//! Local validity near the diagonal.
//!
//! With common weights `λ`, the inequality holds near `Δ(y)` only if the
//! `k × k` matrix
//!
//! ```text
//! Γ_ij(y) = -∂_i∂_jΦ(y) - ∂_iΦ(y) ∂_jΦ(y) ρ_0(Φ(y)) + δ_ij ∂_jΦ(y) ρ_j(y_j),
//! ρ_α = 2 (p_0^α)'/p_0^α + f_α''/f_α'
//! ```
//!
//! is positive semidefinite, and it holds locally when `Γ` is positive
//! definite on the whole box. For Gini means `ρ(t) = (r + s - 1)/t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagcalc::{mean_common_weights, InequalityProblem, PhiSpec};
use crate::grid::{axis_points, ProductGrid, DEFAULT_CAP};
use crate::means::{MeanSpec, Weights};
use crate::psd::{classify_eigen, classify_shifted_diagonal, symmetric_eigen, PsdClass, ShiftedDiagonal};
use crate::{Error, Interval, Matrix, Result};

/// Eigenvalue band used when classifying scanned `Γ` matrices.
pub const SCAN_TOLERANCE: f64 = 1e-9;
/// Fraction of each (log-)interval trimmed before scanning. Kept tiny so
/// that thin failing regions at the box corners are still sampled.
pub const SCAN_CLIP: f64 = 1e-6;
/// Zero threshold for exponent sums in the closed-form deciders.
pub const EXPONENT_TOLERANCE: f64 = 1e-12;
/// Step of the central differences in [`build_psi_probe`].
pub const PSI_STEP: f64 = 1e-4;

const PROPORTIONALITY_SAMPLES: usize = 64;

/// A problem whose means all have second-order data and share one weight
/// vector `λ` of the form `p_ℓ = λ_ℓ p_0`.
#[derive(Debug, Clone)]
pub struct GammaSpec {
    problem: InequalityProblem,
    lambda: Weights,
}

impl GammaSpec {
    pub fn new(problem: InequalityProblem) -> Result<Self> {
        let mut common: Option<Weights> = None;
        for (j, m) in std::iter::once(problem.left()).chain(problem.right()).enumerate() {
            if let MeanSpec::Bajraktarevic(b) = m {
                if !b.has_second_order() {
                    return Err(Error::Capability(format!("mean {j} lacks second-order derivative data")));
                }
            }
            let w = mean_common_weights(m, PROPORTIONALITY_SAMPLES)?
                .ok_or_else(|| Error::InvalidSpec(format!("mean {j} has weights that are not proportional")))?;
            match &common {
                None => common = Some(w),
                Some(c) if c.distance(&w) <= 1e-9 => {}
                Some(c) => {
                    return Err(Error::InvalidSpec(format!(
                        "mean {j} has weights {:?}, mean 0 has {:?}",
                        w.as_slice(),
                        c.as_slice()
                    )))
                }
            }
        }
        Ok(GammaSpec { problem, lambda: common.expect("at least three means") })
    }

    pub fn problem(&self) -> &InequalityProblem {
        &self.problem
    }

    pub fn weights(&self) -> &Weights {
        &self.lambda
    }
}

/// `Γ(y)`.
pub fn gamma_at(spec: &GammaSpec, y: &[f64]) -> Result<Matrix> {
    let p = &spec.problem;
    p.check_point(y)?;
    let phi = p.phi();
    let grad = phi.gradient(y);
    let hess = phi.hessian(y);
    let rho0 = p.left().curvature_ratio(phi.value(y))?;
    let rho: Vec<f64> = p.right().iter().zip(y).map(|(m, &t)| m.curvature_ratio(t)).collect::<Result<_>>()?;
    let k = y.len();
    Ok(Matrix::from_fn(k, k, |i, j| {
        let own = if i == j { grad[j] * rho[j] } else { 0.0 };
        -hess[(i, j)] - grad[i] * grad[j] * rho0 + own
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalClass {
    SufficientHolds,
    NecessaryFails,
    Boundary,
}

impl LocalClass {
    /// `SufficientHolds` against `NecessaryFails`, in either order.
    pub fn contradicts(self, other: LocalClass) -> bool {
        matches!(
            (self, other),
            (LocalClass::SufficientHolds, LocalClass::NecessaryFails) | (LocalClass::NecessaryFails, LocalClass::SufficientHolds)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalWitness {
    pub point: Vec<f64>,
    pub gamma: Matrix,
    /// `v` with `vᵀ Γ v < 0`, present when `Γ` is indefinite.
    pub direction: Option<Vec<f64>>,
}

/// Outcome of a closed-form decision run alongside a grid scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub class: LocalClass,
    pub summary: String,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalVerdict {
    pub class: LocalClass,
    pub witness: Option<LocalWitness>,
    pub summary: String,
    pub closed_form: Option<ClosedFormCheck>,
}

impl LocalVerdict {
    fn new(class: LocalClass, witness: Option<LocalWitness>, summary: String) -> Self {
        LocalVerdict { class, witness, summary, closed_form: None }
    }
}

struct ScanPoint {
    class: PsdClass,
    margin: f64,
    direction: Option<Vec<f64>>,
}

/// Classifies `Γ` on a product grid with `grid` points per axis.
pub fn local_scan(spec: &GammaSpec, grid: usize) -> Result<LocalVerdict> {
    if grid < 3 {
        return Err(Error::Contract(format!("scan needs at least 3 points per axis, got {grid}")));
    }
    let boxes = spec.problem.boxes();
    let points =
        ProductGrid::new(boxes.iter().map(|b| axis_points(b, grid, SCAN_CLIP, DEFAULT_CAP)).collect());
    let results: Vec<ScanPoint> = (0..points.len())
        .into_par_iter()
        .map(|idx| {
            let g = gamma_at(spec, &points.point(idx))?;
            let eig = symmetric_eigen(&g)?;
            let r = classify_eigen(&eig, SCAN_TOLERANCE);
            Ok(ScanPoint { class: r.class, margin: eig.relative_min(), direction: r.witness })
        })
        .collect::<Result<_>>()?;

    let total = results.len();
    let worst = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.class == PsdClass::Indefinite)
        .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin).then(a.0.cmp(&b.0)));
    let mut verdict = if let Some((idx, r)) = worst {
        let point = points.point(idx);
        let count = results.iter().filter(|r| r.class == PsdClass::Indefinite).count();
        LocalVerdict::new(
            LocalClass::NecessaryFails,
            Some(LocalWitness { gamma: gamma_at(spec, &point)?, point, direction: r.direction.clone() }),
            format!("Γ indefinite at {count} of {total} grid points (resolution {grid})"),
        )
    } else if let Some(idx) = results.iter().position(|r| r.class == PsdClass::PositiveSemidefiniteOnly) {
        let point = points.point(idx);
        LocalVerdict::new(
            LocalClass::Boundary,
            Some(LocalWitness { gamma: gamma_at(spec, &point)?, point, direction: None }),
            format!("Γ positive semidefinite but not definite on part of the grid (resolution {grid})"),
        )
    } else {
        LocalVerdict::new(
            LocalClass::SufficientHolds,
            None,
            format!("Γ positive definite at all {total} grid points (resolution {grid})"),
        )
    };

    if let Some(closed) = closed_form_decision(&spec.problem)? {
        verdict.closed_form = Some(ClosedFormCheck {
            class: closed.class,
            agrees: !closed.class.contradicts(verdict.class),
            summary: closed.summary,
        });
    }
    Ok(verdict)
}

/// The exact decision for Gini means under `Σ` or `Π`, if applicable.
pub fn closed_form_decision(problem: &InequalityProblem) -> Result<Option<LocalVerdict>> {
    let Some(params) = problem.gini_params() else {
        return Ok(None);
    };
    match problem.phi() {
        PhiSpec::Sum => {
            let gammas: Vec<f64> = params.iter().map(|p| p.sum() - 1.0).collect();
            decide_minkowski_local(&gammas, problem.boxes()).map(Some)
        }
        PhiSpec::Product => {
            // The outer Gini mean G_{a,b} enters with γ_0 = -(a + b).
            let gammas: Vec<f64> =
                params.iter().enumerate().map(|(i, p)| if i == 0 { -p.sum() } else { p.sum() }).collect();
            decide_hoelder_local(&gammas).map(Some)
        }
        PhiSpec::Custom(_) => Ok(None),
    }
}

fn sign(v: f64) -> i8 {
    if v > EXPONENT_TOLERANCE {
        1
    } else if v < -EXPONENT_TOLERANCE {
        -1
    } else {
        0
    }
}

/// `Γ(y) = diag(γ_i / y_i) - γ_0 / Σ y` for Gini means under `Σ`.
fn minkowski_gamma(gammas: &[f64], y: &[f64]) -> ShiftedDiagonal {
    let total: f64 = y.iter().sum();
    ShiftedDiagonal::new(-gammas[0] / total, gammas[1..].iter().zip(y).map(|(g, t)| g / t).collect())
        .expect("finite entries")
}

/// Log-coordinates of a box: `(ln inf, ln sup, ln centre)`.
fn log_frame(b: &Interval) -> (f64, f64, f64) {
    let lo = b.lo().ln();
    let hi = b.hi().ln();
    let centre = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (false, true) => hi - 1.0,
        (true, false) => lo + 1.0,
        (false, false) => 0.0,
    };
    (lo, hi, centre)
}

fn box_centre(boxes: &[Interval]) -> Vec<f64> {
    boxes.iter().map(|b| log_frame(b).2.exp()).collect()
}

/// Local decision for
/// `G_{r0,s0}(Σ_j x_1^j, ...) <= Σ_j G_{rj,sj}(x^j)` with `γ_i = r_i + s_i - 1`.
///
/// Necessary: exactly one of (i) `γ_0 <= 0 <= min γ_i`; (ii) all `γ > 0`
/// and the interval inequality
/// `Σ_{J+} (1/γ_i - 1/γ_0) sup I_i <= Σ_{J-} (1/γ_0 - 1/γ_i) inf I_i`;
/// (iii) `γ_0 < 0`, exactly one `γ_i < 0`, the other `γ_j > 0`, and the same
/// interval inequality. Sufficient: (i) with at most one zero among
/// `γ_0..γ_k`, or (ii)/(iii) with `γ_ℓ ≠ γ_0` for some `ℓ`.
pub fn decide_minkowski_local(gammas: &[f64], boxes: &[Interval]) -> Result<LocalVerdict> {
    let k = boxes.len();
    if k < 2 || gammas.len() != k + 1 {
        return Err(Error::Shape(format!("{} exponents for {k} boxes", gammas.len())));
    }
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidSpec("exponent sums must be finite".into()));
    }
    if let Some(b) = boxes.iter().find(|b| !b.is_positive()) {
        return Err(Error::InvalidSpec(format!("box {b} is not positive")));
    }
    let s: Vec<i8> = gammas.iter().map(|&g| sign(g)).collect();
    let inner = &s[1..];
    let zeros = s.iter().filter(|&&v| v == 0).count();
    let case_i = s[0] <= 0 && inner.iter().all(|&v| v >= 0);
    let case_ii = s.iter().all(|&v| v > 0);
    let case_iii = s[0] < 0
        && inner.iter().filter(|&&v| v < 0).count() == 1
        && inner.iter().filter(|&&v| v > 0).count() == k - 1;

    if case_i {
        let (class, summary) = if zeros <= 1 {
            (LocalClass::SufficientHolds, format!("case (i): γ_0 <= 0 <= min γ_i with {zeros} zero(s); Γ positive definite"))
        } else {
            (LocalClass::Boundary, format!("case (i): γ_0 <= 0 <= min γ_i with {zeros} zeros; sufficiency not established"))
        };
        return Ok(boundary_or_holds(class, summary, gammas, boxes));
    }
    if !(case_ii || case_iii) {
        let centre = box_centre(boxes);
        let c = minkowski_gamma(gammas, &centre);
        return Ok(LocalVerdict::new(
            LocalClass::NecessaryFails,
            Some(LocalWitness { gamma: c.to_matrix(), direction: indefinite_direction(&c), point: centre }),
            format!("sign pattern of γ = {gammas:?} fits none of the admissible cases; Γ indefinite everywhere"),
        ));
    }

    let label = if case_ii { "case (ii)" } else { "case (iii)" };
    let inv0 = 1.0 / gammas[0];
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut towards = vec![0i8; k];
    for i in 0..k {
        let invi = 1.0 / gammas[i + 1];
        let a = inv0 - invi;
        if a.abs() <= EXPONENT_TOLERANCE * inv0.abs().max(invi.abs()) {
            continue;
        }
        if a < 0.0 {
            towards[i] = 1;
            lhs += -a * boxes[i].hi();
        } else {
            towards[i] = -1;
            rhs += a * boxes[i].lo();
        }
    }
    let holds = lhs.is_finite() && lhs <= rhs + EXPONENT_TOLERANCE * lhs.abs().max(rhs.abs()).max(1.0);
    if holds {
        let distinct = gammas[1..]
            .iter()
            .any(|g| (g - gammas[0]).abs() > EXPONENT_TOLERANCE * gammas[0].abs().max(1.0));
        let (class, summary) = if distinct {
            (LocalClass::SufficientHolds, format!("{label}: interval condition {lhs} <= {rhs} with γ_ℓ ≠ γ_0; Γ positive definite"))
        } else {
            (LocalClass::Boundary, format!("{label}: interval condition {lhs} <= {rhs} but all γ_i = γ_0; Γ singular"))
        };
        return Ok(boundary_or_holds(class, summary, gammas, boxes));
    }

    let summary = format!("{label}: interval condition fails ({lhs} > {rhs})");
    match corner_witness(gammas, boxes, &towards) {
        Some(w) => Ok(LocalVerdict::new(LocalClass::NecessaryFails, Some(w), summary)),
        None => Ok(LocalVerdict::new(
            LocalClass::Boundary,
            Some(centre_witness(gammas, boxes)),
            format!("{summary}, but no indefinite Γ was located; treated as boundary"),
        )),
    }
}

fn boundary_or_holds(class: LocalClass, summary: String, gammas: &[f64], boxes: &[Interval]) -> LocalVerdict {
    let witness = (class != LocalClass::SufficientHolds).then(|| centre_witness(gammas, boxes));
    LocalVerdict::new(class, witness, summary)
}

fn centre_witness(gammas: &[f64], boxes: &[Interval]) -> LocalWitness {
    let centre = box_centre(boxes);
    let c = minkowski_gamma(gammas, &centre);
    LocalWitness { gamma: c.to_matrix(), direction: indefinite_direction(&c), point: centre }
}

fn indefinite_direction(c: &ShiftedDiagonal) -> Option<Vec<f64>> {
    let r = classify_shifted_diagonal(c);
    (r.class == PsdClass::Indefinite).then(|| {
        r.witness.unwrap_or_else(|| symmetric_eigen(&c.to_matrix()).expect("finite matrix").vector(0))
    })
}

/// Walks from the box centre towards the corner that minimises
/// `Σ (1/γ_0 - 1/γ_i) y_i` and returns a point where `Γ` is clearly
/// indefinite: the one closest to the centre among those reaching at least
/// half of the most negative relative eigenvalue seen on the path.
fn corner_witness(gammas: &[f64], boxes: &[Interval], towards: &[i8]) -> Option<LocalWitness> {
    let frames: Vec<(f64, f64, f64)> = boxes.iter().map(log_frame).collect();
    let mut path: Vec<(Vec<f64>, f64)> = Vec::new();
    for m in 0..=200 {
        let tau = (-(m as f64) / 4.0).exp2();
        let y: Vec<f64> = frames
            .iter()
            .zip(towards)
            .map(|(&(lo, hi, c), &dir)| {
                let l = match dir {
                    1 if hi.is_finite() => hi - tau * (hi - c),
                    1 => c + (1.0 / tau - 1.0),
                    -1 if lo.is_finite() => lo + tau * (c - lo),
                    -1 => c - (1.0 / tau - 1.0),
                    _ => c,
                };
                l.exp()
            })
            .collect();
        if !y.iter().zip(boxes).all(|(v, b)| b.contains(*v) && v.is_normal()) {
            break;
        }
        let eig = symmetric_eigen(&minkowski_gamma(gammas, &y).to_matrix()).ok()?;
        let margin = eig.relative_min();
        if margin < -SCAN_TOLERANCE {
            path.push((y, margin));
        }
    }
    let best = path.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let (point, _) = path.into_iter().find(|p| p.1 <= 0.5 * best)?;
    let c = minkowski_gamma(gammas, &point);
    let direction = indefinite_direction(&c);
    Some(LocalWitness { gamma: c.to_matrix(), direction, point })
}

/// Local decision for
/// `G_{-r0,-s0}(Π_j x_1^j, ...) <= Π_j G_{rj,sj}(x^j)` with `γ_i = r_i + s_i`.
/// Here `Γ(y)` is a positive multiple of `(δ_ij γ_j + γ_0)` conjugated by a
/// diagonal matrix, so the class is that of the shifted-diagonal matrix with
/// `c_0 = γ_0`, `c_i = γ_i`.
pub fn decide_hoelder_local(gammas: &[f64]) -> Result<LocalVerdict> {
    if gammas.len() < 3 {
        return Err(Error::Shape(format!("need γ_0 and at least two inner exponents, got {}", gammas.len())));
    }
    let c = ShiftedDiagonal::new(gammas[0], gammas[1..].to_vec())?;
    let r = classify_shifted_diagonal(&c);
    let class = match r.class {
        PsdClass::PositiveDefinite => LocalClass::SufficientHolds,
        PsdClass::PositiveSemidefiniteOnly => LocalClass::Boundary,
        PsdClass::Indefinite => LocalClass::NecessaryFails,
    };
    let witness = (class != LocalClass::SufficientHolds).then(|| LocalWitness {
        point: vec![1.0; c.k()],
        gamma: c.to_matrix(),
        direction: indefinite_direction(&c),
    });
    Ok(LocalVerdict::new(class, witness, format!("(δ_ij γ_j + γ_0) is {}: {}", r.class, r.certificate)))
}

/// Central-difference Hessian of `Ψ(u) = φ_0(Φ(φ⁻¹(u)))` at the point
/// corresponding to `y`, with each `φ_α` anchored there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiProbe {
    pub point: Vec<f64>,
    pub hessian: Matrix,
    /// Sign of `f_0'`; `orientation · hessian` is congruent to `-Γ(y)`.
    pub orientation: f64,
}

impl PsiProbe {
    /// `orientation · hessian`, negative semidefinite exactly when `Γ(y)`
    /// is positive semidefinite.
    pub fn signed_hessian(&self) -> Matrix {
        self.hessian.scale(self.orientation)
    }
}

pub fn build_psi_probe(spec: &GammaSpec, y: &[f64]) -> Result<PsiProbe> {
    let p = &spec.problem;
    p.check_point(y)?;
    let missing = |j: usize| Error::Capability(format!("mean {j} has no convexifying antiderivative"));
    let outer = p.left().convexifier().ok_or_else(|| missing(0))?;
    let inner: Vec<_> = p
        .right()
        .iter()
        .enumerate()
        .map(|(j, m)| m.convexifier().ok_or_else(|| missing(j + 1)))
        .collect::<Result<_>>()?;
    let a0 = p.phi().value(y);
    let psi = |u: &[f64]| -> Result<f64> {
        let t: Vec<f64> = inner
            .iter()
            .zip(y)
            .zip(u)
            .map(|((c, &a), &v)| {
                c.anchored_inverse(a, v)
                    .ok_or_else(|| Error::Numeric(format!("convexifier inverse undefined at {v}")))
            })
            .collect::<Result<_>>()?;
        Ok(outer.anchored(a0, p.phi().value(&t)))
    };
    let k = y.len();
    let h = PSI_STEP;
    let at = |moves: &[(usize, f64)]| {
        let mut u = vec![0.0; k];
        for &(i, d) in moves {
            u[i] += d;
        }
        psi(&u)
    };
    let centre = at(&[])?;
    let mut hess = Matrix::zeros(k, k);
    for i in 0..k {
        hess[(i, i)] = (at(&[(i, h)])? - 2.0 * centre + at(&[(i, -h)])?) / (h * h);
        for j in i + 1..k {
            let v = (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                + at(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(PsiProbe { point: y.to_vec(), hessian: hess, orientation: outer.orientation(a0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::means::GiniParams;
    use crate::psd::classify_symmetric;

    fn gini(r: f64, s: f64) -> MeanSpec {
        MeanSpec::gini(GiniParams::new(r, s).unwrap(), Weights::uniform(2).unwrap())
    }

    fn spec(phi: PhiSpec, outer: (f64, f64), inner: &[(f64, f64)], boxes: Vec<Interval>) -> GammaSpec {
        let right = inner.iter().map(|&(r, s)| gini(r, s)).collect();
        GammaSpec::new(InequalityProblem::new(2, gini(outer.0, outer.1), right, phi, boxes).unwrap()).unwrap()
    }

    fn pos(k: usize) -> Vec<Interval> {
        vec![Interval::positive(); k]
    }

    fn bounded(k: usize) -> Vec<Interval> {
        vec![Interval::new(0.5, 4.0).unwrap(); k]
    }

    fn close(a: &Matrix, b: &[[f64; 2]; 2]) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[(i, j)] - b[i][j]).abs() < 1e-12))
    }

    #[test]
    fn gamma_sum_example() {
        // γ_0 = 1, γ_1 = γ_2 = 2
        let s = spec(PhiSpec::Sum, (2.0, 0.0), &[(3.0, 0.0), (3.0, 0.0)], pos(2));
        let g = gamma_at(&s, &[1.0, 1.0]).unwrap();
        assert!(close(&g, &[[1.5, -0.5], [-0.5, 1.5]]), "{g:?}");
    }

    #[test]
    fn gamma_arithmetic_is_zero() {
        let s = spec(PhiSpec::Sum, (1.0, 0.0), &[(1.0, 0.0), (1.0, 0.0)], pos(2));
        for y in [[0.3, 2.0], [5.0, 5.0]] {
            assert!(gamma_at(&s, &y).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_product_is_scaled_shifted_diagonal() {
        // outer arithmetic (γ_0 = -1), inner p = q = 2
        let s = spec(PhiSpec::Product, (1.0, 0.0), &[(2.0, 0.0), (2.0, 0.0)], pos(2));
        let g = gamma_at(&s, &[1.0, 1.0]).unwrap();
        assert!(close(&g, &[[1.0, -1.0], [-1.0, 1.0]]), "{g:?}");
        let y = [2.0, 0.5];
        let g = gamma_at(&s, &y).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = (y[0] * y[1]) / (y[i] * y[j]) * (if i == j { 2.0 } else { 0.0 } - 1.0);
                assert!((g[(i, j)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sum_gamma_matches_closed_form() {
        let gammas = [0.7, 1.5, -0.4];
        let s = spec(PhiSpec::Sum, (1.0, 0.7), &[(2.0, 0.5), (0.3, 0.3)], pos(2));
        for y in [[0.2, 3.0], [1.0, 1.0], [7.0, 0.1]] {
            let g = gamma_at(&s, &y).unwrap();
            let c = minkowski_gamma(&gammas, &y);
            let m = c.to_matrix();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((g[(i, j)] - m[(i, j)]).abs() <= 1e-12 * m[(i, j)].abs().max(1.0));
                }
            }
            let a = classify_symmetric(&g, 1e-9).unwrap().class;
            assert_eq!(a, classify_shifted_diagonal(&c).class);
        }
    }

    #[test]
    fn weights_must_be_common() {
        let w = |v: Vec<f64>| Weights::new(v).unwrap();
        let p = GiniParams::new(2.0, 0.0).unwrap();
        let problem = InequalityProblem::new(
            2,
            MeanSpec::gini(p, w(vec![0.5, 0.5])),
            vec![MeanSpec::gini(p, w(vec![0.3, 0.7])), MeanSpec::gini(p, w(vec![0.5, 0.5]))],
            PhiSpec::Sum,
            pos(2),
        )
        .unwrap();
        assert!(matches!(GammaSpec::new(problem), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn scan_examples() {
        // power means, 1 < p0 < min p_j
        let s = spec(PhiSpec::Sum, (1.5, 0.0), &[(2.0, 0.0), (3.0, 0.0)], bounded(2));
        let v = local_scan(&s, 9).unwrap();
        assert_eq!(v.class, LocalClass::SufficientHolds);
        assert!(v.witness.is_none());
        assert_eq!(v.closed_form.as_ref().unwrap().class, LocalClass::SufficientHolds);

        // r0 + s0 = 3 outside, r + s = 2 inside
        let s = spec(PhiSpec::Sum, (2.0, 1.0), &[(1.0, 1.0), (2.0, 0.0)], bounded(2));
        let v = local_scan(&s, 9).unwrap();
        assert_eq!(v.class, LocalClass::NecessaryFails);
        let w = v.witness.unwrap();
        let d = w.direction.unwrap();
        assert!(w.gamma.quadratic_form(&d) < 0.0);
        assert!(v.closed_form.unwrap().agrees);

        // same (r, s) with r + s = 2 everywhere
        let s = spec(PhiSpec::Sum, (2.0, 0.0), &[(2.0, 0.0), (2.0, 0.0)], bounded(2));
        let v = local_scan(&s, 9).unwrap();
        assert_eq!(v.class, LocalClass::Boundary);
        assert!(v.witness.is_some());
        assert!(local_scan(&s, 2).is_err());
    }

    #[test]
    fn minkowski_decider_examples() {
        let v = decide_minkowski_local(&[0.0, 1.0, 1.0], &pos(2)).unwrap();
        assert_eq!(v.class, LocalClass::SufficientHolds);
        assert!(v.witness.is_none());

        let v = decide_minkowski_local(&[1.0, 1.0, 1.0], &pos(2)).unwrap();
        assert_eq!(v.class, LocalClass::Boundary);
        assert!(v.witness.is_some());

        let v = decide_minkowski_local(&[2.0, 1.0, 1.0], &pos(2)).unwrap();
        assert_eq!(v.class, LocalClass::NecessaryFails);
        let w = v.witness.unwrap();
        assert!(w.gamma.quadratic_form(w.direction.as_ref().unwrap()) < 0.0);
    }

    #[test]
    fn minkowski_decider_on_bounded_boxes() {
        // γ_0 = 2 > γ_1 = γ_2 = 1: J+ = {1, 2}, condition (1 - ½)(4 + 4) <= 0 fails.
        let v = decide_minkowski_local(&[2.0, 1.0, 1.0], &bounded(2)).unwrap();
        assert_eq!(v.class, LocalClass::NecessaryFails);
        // γ_0 = 2, γ_1 = 1, γ_2 = 4 on (1,2) × (10, 20):
        // (1 - ½)·2 = 1 <= (½ - ¼)·10 = 2.5 holds.
        let boxes = vec![Interval::new(1.0, 2.0).unwrap(), Interval::new(10.0, 20.0).unwrap()];
        let v = decide_minkowski_local(&[2.0, 1.0, 4.0], &boxes).unwrap();
        assert_eq!(v.class, LocalClass::SufficientHolds);
        // swapping the boxes breaks it: (1 - ½)·20 = 10 > (½ - ¼)·1
        let swapped = vec![boxes[1], boxes[0]];
        let v = decide_minkowski_local(&[2.0, 1.0, 4.0], &swapped).unwrap();
        assert_eq!(v.class, LocalClass::NecessaryFails);
        let w = v.witness.unwrap();
        assert!(swapped.iter().zip(&w.point).all(|(b, t)| b.contains(*t)));
        // case (iii): γ_0 < 0, one negative inner
        let v = decide_minkowski_local(&[-1.0, -2.0, 1.0], &bounded(2)).unwrap();
        assert_ne!(v.class, LocalClass::Boundary);
        // two negatives inner
        let v = decide_minkowski_local(&[-1.0, -2.0, -1.0], &bounded(2)).unwrap();
        assert_eq!(v.class, LocalClass::NecessaryFails);
    }

    #[test]
    fn hoelder_decider_examples() {
        let v = decide_hoelder_local(&[-1.0, 2.0, 2.0]).unwrap();
        assert_eq!(v.class, LocalClass::Boundary);
        let v = decide_hoelder_local(&[-1.0, 3.0, 1.5]).unwrap();
        assert_eq!(v.class, LocalClass::Boundary);
        let v = decide_hoelder_local(&[-1.0, 4.0, 4.0 / 3.0]).unwrap();
        assert_eq!(v.class, LocalClass::Boundary);
        assert_eq!(decide_hoelder_local(&[1.0, 1.0, 1.0]).unwrap().class, LocalClass::SufficientHolds);
        let v = decide_hoelder_local(&[-1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v.class, LocalClass::NecessaryFails);
        let w = v.witness.unwrap();
        assert!(w.gamma.quadratic_form(w.direction.as_ref().unwrap()) < 0.0);
    }

    #[test]
    fn product_classification_is_independent_of_y() {
        let s = spec(PhiSpec::Product, (0.5, 0.5), &[(2.0, 0.0), (0.5, 1.0)], pos(2));
        let base = classify_symmetric(&gamma_at(&s, &[1.0, 1.0]).unwrap(), 1e-9).unwrap().class;
        for y in [[0.01, 30.0], [2.0, 2.0], [100.0, 0.2]] {
            let g = gamma_at(&s, &y).unwrap();
            assert_eq!(classify_symmetric(&g, 1e-9).unwrap().class, base);
        }
    }

    #[test]
    fn psi_probe_examples() {
        let s = spec(PhiSpec::Sum, (1.0, 0.0), &[(1.0, 0.0), (1.0, 0.0)], pos(2));
        let p = build_psi_probe(&s, &[1.3, 0.4]).unwrap();
        assert!(p.hessian.max_abs() < 1e-6, "{:?}", p.hessian);

        let s = spec(PhiSpec::Sum, (2.0, 0.0), &[(3.0, 0.0), (3.0, 0.0)], pos(2));
        let p = build_psi_probe(&s, &[1.0, 1.0]).unwrap();
        let e = symmetric_eigen(&p.signed_hessian()).unwrap();
        assert!(e.values.iter().all(|v| *v < 0.0), "{:?}", e.values);
    }

    #[test]
    fn psi_probe_matches_gamma_with_negative_orientation() {
        // r - s < 0 flips the orientation of f_0'.
        let s = spec(PhiSpec::Sum, (-1.0, 2.5), &[(0.5, 3.0), (4.0, 0.5)], pos(2));
        for y in [[0.5, 0.5], [1.0, 3.0], [4.0, 0.2]] {
            let p = build_psi_probe(&s, &y).unwrap();
            assert_eq!(p.orientation, -1.0);
            let g = classify_symmetric(&gamma_at(&s, &y).unwrap(), 1e-6).unwrap().class;
            let h = classify_symmetric(&p.signed_hessian().scale(-1.0), 1e-6).unwrap().class;
            assert_eq!(g.is_psd(), h.is_psd(), "{y:?}");
        }
    }
}
