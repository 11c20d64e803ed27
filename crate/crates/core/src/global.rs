//! Global validity: grid checkers for the pointwise sufficient conditions
//! and exact deciders for Gini-mean Minkowski and Hölder type inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagcalc::InequalityProblem;
use crate::grid::{axis_points, simplex_points, ProductGrid, DEFAULT_CLIP};
use crate::means::{chi_unchecked, GiniParams};
use crate::{Error, Interval, Result};

/// Relative slack allowed in pointwise checks: `lhs <= rhs + tol·max(1, |lhs|, |rhs|)`.
pub const POINTWISE_TOLERANCE: f64 = 1e-10;
/// Relative band for reciprocal sums compared with zero.
pub const RECIPROCAL_TOLERANCE: f64 = 1e-12;
/// Largest magnitude of a grid coordinate in the general checker.
pub const GSC0_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlobalClass {
    HoldsGlobal,
    FailsGlobal,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Exact parameter characterization; unconditional.
    Characterization { rule: String, detail: String },
    /// A sufficient condition that passed at every probe of a finite grid.
    GridCertified { condition: String, resolution: usize, probes: usize },
    /// A clause of an exact characterization that fails; a violating matrix
    /// can be produced by the search module.
    ClauseFails { rule: String, clauses: Vec<String>, detail: String },
    /// The first probe (in grid order) where a sufficient condition fails.
    FailingProbe { condition: String, index: usize, point: Vec<f64>, lhs: f64, rhs: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalVerdict {
    pub class: GlobalClass,
    pub evidence: Evidence,
}

impl GlobalVerdict {
    pub fn holds(&self) -> bool {
        self.class == GlobalClass::HoldsGlobal
    }
}

fn passes(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + POINTWISE_TOLERANCE * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Runs `probe` on `0..count` in parallel and reports the failing index with
/// the smallest position, independent of scheduling.
fn first_failure(count: usize, probe: impl Fn(usize) -> (f64, f64) + Sync) -> Option<(usize, f64, f64)> {
    (0..count).into_par_iter().find_map_first(|i| {
        let (lhs, rhs) = probe(i);
        (!passes(lhs, rhs)).then_some((i, lhs, rhs))
    })
}

fn grid_verdict(
    condition: &str,
    resolution: usize,
    probes: usize,
    failure: Option<(usize, f64, f64)>,
    point: impl Fn(usize) -> Vec<f64>,
) -> GlobalVerdict {
    match failure {
        None => GlobalVerdict {
            class: GlobalClass::HoldsGlobal,
            evidence: Evidence::GridCertified { condition: condition.into(), resolution, probes },
        },
        Some((index, lhs, rhs)) => GlobalVerdict {
            class: GlobalClass::Inconclusive,
            evidence: Evidence::FailingProbe { condition: condition.into(), index, point: point(index), lhs, rhs },
        },
    }
}

/// Checks the pointwise condition
///
/// ```text
/// p_0⁰(Φ(y)) (f_0(Φ(y)) - f_0(Φ(u))) / (p_0⁰(Φ(u)) f_0'(Φ(u)))
///     <= Σ_j ∂_jΦ(u) p_0^j(y_j) (f_j(y_j) - f_j(u_j)) / (p_0^j(u_j) f_j'(u_j))
/// ```
///
/// at every pair `(u, y)` of a product grid with `grid` points per axis. The
/// failing probe point is `u` followed by `y`.
pub fn check_gsc0(problem: &InequalityProblem, grid: usize) -> Result<GlobalVerdict> {
    if grid < 2 {
        return Err(Error::Contract(format!("grid needs at least 2 points per axis, got {grid}")));
    }
    let points = ProductGrid::new(
        problem.boxes().iter().map(|b| axis_points(b, grid, DEFAULT_CLIP, GSC0_CAP)).collect(),
    );
    let m = points.len();
    let phi = problem.phi();
    let probe = |idx: usize| -> Result<(f64, f64)> {
        let u = points.point(idx / m);
        let y = points.point(idx % m);
        let lhs = problem.left().sufficient_condition_term(phi.value(&u), phi.value(&y))?;
        let rhs = phi
            .gradient(&u)
            .iter()
            .zip(problem.right())
            .enumerate()
            .map(|(j, (d, mean))| Ok(d * mean.sufficient_condition_term(u[j], y[j])?))
            .sum::<Result<f64>>()?;
        Ok((lhs, rhs))
    };
    // Surface domain errors before the scan.
    probe(0)?;
    let failure = first_failure(m * m, |i| probe(i).unwrap_or((f64::NAN, f64::NAN)));
    Ok(grid_verdict("pointwise sufficient condition on (u, y) pairs", grid, m * m, failure, |i| {
        let mut p = points.point(i / m);
        p.extend(points.point(i % m));
        p
    }))
}

/// Grid for [`check_gsc0_minkowski`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiGrid {
    /// Log-spaced points per `z` axis.
    pub z_points: usize,
    /// `z` ranges over `[1/z_max, z_max]`.
    pub z_max: f64,
    /// Simplex weights are multiples of `1/divisions`.
    pub divisions: usize,
}

impl Default for MinkowskiGrid {
    fn default() -> Self {
        MinkowskiGrid { z_points: 33, z_max: 1e3, divisions: 8 }
    }
}

fn log_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| if count == 1 { (0.5 * (a + b)).exp() } else { (a + (b - a) * i as f64 / (count - 1) as f64).exp() })
        .collect()
}

fn check_params(params: &[GiniParams]) -> Result<usize> {
    if params.len() < 3 {
        return Err(Error::Shape(format!("need an outer and at least two inner pairs, got {}", params.len())));
    }
    Ok(params.len() - 1)
}

/// Checks `χ_{r0,s0}(Σ t_j z_j) <= Σ t_j χ_{rj,sj}(z_j)` for `z` on a log
/// grid and `t` on the simplex. The failing probe point is `z` followed by `t`.
pub fn check_gsc0_minkowski(params: &[GiniParams], grid: &MinkowskiGrid) -> Result<GlobalVerdict> {
    let k = check_params(params)?;
    if grid.z_points < 2 || grid.divisions < 1 || !(grid.z_max > 1.0) {
        return Err(Error::Contract(format!("degenerate probe grid {grid:?}")));
    }
    let zs = ProductGrid::new(vec![log_points(1.0 / grid.z_max, grid.z_max, grid.z_points); k]);
    let ts = simplex_points(k, grid.divisions);
    let nt = ts.len();
    let probe = |idx: usize| {
        let z = zs.point(idx / nt);
        let t = &ts[idx % nt];
        let mix: f64 = t.iter().zip(&z).map(|(a, b)| a * b).sum();
        let lhs = chi_unchecked(params[0], mix);
        let rhs: f64 = (0..k).map(|j| t[j] * chi_unchecked(params[j + 1], z[j])).sum();
        (lhs, rhs)
    };
    let probes = zs.len() * nt;
    let failure = first_failure(probes, probe);
    Ok(grid_verdict("χ_0(Σ t_j z_j) <= Σ t_j χ_j(z_j) on the positive orthant", grid.z_points, probes, failure, |i| {
        let mut p = zs.point(i / nt);
        p.extend(&ts[i % nt]);
        p
    }))
}

/// Checks `χ_{-r0,-s0}(z_1⋯z_k) <= Σ χ_{rj,sj}(z_j)` for `z_j` on a log grid
/// over the ratio set `I_j/I_j` (capped at `[1e-3, 1e3]`). Parameters follow
/// the convention in which the outer mean is `G_{-r0,-s0}`.
pub fn check_gsc0_hoelder(params: &[GiniParams], ratio_boxes: &[Interval], grid: usize) -> Result<GlobalVerdict> {
    let k = check_params(params)?;
    if ratio_boxes.len() != k {
        return Err(Error::Shape(format!("{} ratio boxes for {k} inner means", ratio_boxes.len())));
    }
    if grid < 2 {
        return Err(Error::Contract(format!("grid needs at least 2 points per axis, got {grid}")));
    }
    if let Some(b) = ratio_boxes.iter().find(|b| !b.is_positive()) {
        return Err(Error::InvalidSpec(format!("ratio box {b} is not positive")));
    }
    let zs = ProductGrid::new(ratio_boxes.iter().map(|b| axis_points(b, grid, 0.0, GSC0_CAP)).collect());
    let outer = params[0].negated();
    let probe = |idx: usize| {
        let z = zs.point(idx);
        let lhs = chi_unchecked(outer, z.iter().product());
        let rhs: f64 = (0..k).map(|j| chi_unchecked(params[j + 1], z[j])).sum();
        (lhs, rhs)
    };
    let failure = first_failure(zs.len(), probe);
    Ok(grid_verdict("χ_{-r0,-s0}(Π z_j) <= Σ χ_j(z_j) on the ratio sets", grid, zs.len(), failure, |i| zs.point(i)))
}

fn verdict(rule: &str, failed: Vec<(&str, String)>, detail: String) -> GlobalVerdict {
    if failed.is_empty() {
        return GlobalVerdict {
            class: GlobalClass::HoldsGlobal,
            evidence: Evidence::Characterization { rule: rule.into(), detail },
        };
    }
    GlobalVerdict {
        class: GlobalClass::FailsGlobal,
        evidence: Evidence::ClauseFails {
            rule: rule.into(),
            clauses: failed.iter().map(|(c, _)| c.to_string()).collect(),
            detail: failed.into_iter().map(|(_, d)| d).collect::<Vec<_>>().join("; "),
        },
    }
}

fn inner_min(params: &[GiniParams]) -> f64 {
    params[1..].iter().map(GiniParams::min).fold(f64::INFINITY, f64::min)
}

fn first_two_clauses(params: &[GiniParams], m: f64) -> Vec<(&'static str, String)> {
    let mut failed = Vec::new();
    if m < 0.0 {
        failed.push(("(i)", format!("min inner parameter {m} < 0")));
    }
    if params[0].min() > m.min(1.0) {
        failed.push(("(ii)", format!("min(r0, s0) = {} > min(1, inner) = {}", params[0].min(), m.min(1.0))));
    }
    failed
}

/// Two-variable Minkowski characterization (`n = 2`, equal weights, positive
/// orthant): valid iff
/// (i) `0 <= min(r_1, s_1, ..., r_k, s_k)`,
/// (ii) `min(r_0, s_0) <= min(1, r_1, s_1, ..., r_k, s_k)`,
/// (iii) `max(1, r_0 + s_0) <= min(r_1 + s_1, ..., r_k + s_k)`.
pub fn decide_minkowski_2var(params: &[GiniParams]) -> Result<GlobalVerdict> {
    check_params(params)?;
    let rule = "two-variable Minkowski characterization";
    let m = inner_min(params);
    let sum_min = params[1..].iter().map(GiniParams::sum).fold(f64::INFINITY, f64::min);
    let lhs3 = params[0].sum().max(1.0);
    let mut failed = first_two_clauses(params, m);
    if lhs3 > sum_min {
        failed.push(("(iii)", format!("max(1, r0 + s0) = {lhs3} > min(r_j + s_j) = {sum_min}")));
    }
    Ok(verdict(rule, failed, format!("(i)-(iii) hold: {m} >= 0, {} <= {}, {lhs3} <= {sum_min}", params[0].min(), m.min(1.0))))
}

/// Minkowski characterization for every `n` and every weight vector: valid iff
/// (i) `0 <= min(r_1, s_1, ..., r_k, s_k)`,
/// (ii) `min(r_0, s_0) <= min(1, r_1, s_1, ..., r_k, s_k)`,
/// (iii) `max(1, r_0, s_0) <= min(max(r_1, s_1), ..., max(r_k, s_k))`.
/// A characterization for one fixed `n` is not known.
pub fn decide_minkowski_global(params: &[GiniParams]) -> Result<GlobalVerdict> {
    check_params(params)?;
    let rule = "Minkowski characterization for all n";
    let m = inner_min(params);
    let max_min = params[1..].iter().map(GiniParams::max).fold(f64::INFINITY, f64::min);
    let lhs3 = params[0].max().max(1.0);
    let mut failed = first_two_clauses(params, m);
    if lhs3 > max_min {
        failed.push(("(iii)", format!("max(1, r0, s0) = {lhs3} > min max(r_j, s_j) = {max_min}")));
    }
    Ok(verdict(
        rule,
        failed,
        format!("(i)-(iii) hold: {m} >= 0, {} <= {}, {lhs3} <= {max_min}; the fixed-n characterization is open", params[0].min(), m.min(1.0)),
    ))
}

/// Hölder characterization for `G_{-r0,-s0}(Π_j x^j) <= Π_j G_{rj,sj}(x^j)`
/// for every `n`: valid iff
/// (i) `max(r_i, s_i) >= 0` for all `i`, and
/// (ii) for every `i` with `min(r_i, s_i) < 0`: `max(r_j, s_j) > 0` for all
/// `j ≠ i` and `1/min(r_i, s_i) + Σ_{j≠i} 1/max(r_j, s_j) <= 0`.
pub fn decide_hoelder_global(params: &[GiniParams]) -> Result<GlobalVerdict> {
    check_params(params)?;
    let rule = "Hölder characterization for all n";
    if let Some(i) = params.iter().position(|p| p.max() < 0.0) {
        return Ok(verdict(rule, vec![("(i)", format!("max(r_{i}, s_{i}) = {} < 0", params[i].max()))], String::new()));
    }
    let mut sums = Vec::new();
    for (i, p) in params.iter().enumerate() {
        if p.min() >= 0.0 {
            continue;
        }
        if let Some(j) = (0..params.len()).find(|&j| j != i && !(params[j].max() > 0.0)) {
            return Ok(verdict(
                rule,
                vec![("(ii)", format!("min(r_{i}, s_{i}) < 0 but max(r_{j}, s_{j}) = {} <= 0", params[j].max()))],
                String::new(),
            ));
        }
        let terms: Vec<f64> = std::iter::once(1.0 / p.min())
            .chain((0..params.len()).filter(|&j| j != i).map(|j| 1.0 / params[j].max()))
            .collect();
        let sum: f64 = terms.iter().sum();
        let band = RECIPROCAL_TOLERANCE * terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        if sum > band {
            return Ok(verdict(rule, vec![("(ii)", format!("reciprocal sum for i = {i} is {sum} > 0"))], String::new()));
        }
        sums.push(format!("i = {i}: reciprocal sum {sum}"));
    }
    let detail = if sums.is_empty() {
        "(i) holds and no pair has a negative parameter".to_string()
    } else {
        format!("(i) holds; (ii) {}", sums.join(", "))
    };
    Ok(verdict(rule, Vec::new(), detail))
}

/// Reciprocal sums `1/min(r_i, s_i) + Σ_{j≠i} 1/max(r_j, s_j)` for every `i`
/// with a negative parameter, as used by [`decide_hoelder_global`].
pub fn hoelder_reciprocal_sums(params: &[GiniParams]) -> Vec<(usize, f64)> {
    params
        .iter()
        .enumerate()
        .filter(|(_, p)| p.min() < 0.0)
        .map(|(i, p)| {
            let rest: f64 = (0..params.len()).filter(|&j| j != i).map(|j| 1.0 / params[j].max()).sum();
            (i, 1.0 / p.min() + rest)
        })
        .collect()
}
