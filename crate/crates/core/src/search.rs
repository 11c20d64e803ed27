//! Counterexample search near the diagonal and over whole boxes, plus
//! witness shrinking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagcalc::{deficiency, Evaluation, InequalityProblem};
use crate::local::{gamma_at, GammaSpec};
use crate::psd::symmetric_eigen;
use crate::{Error, Interval, Matrix, Result};

/// A witness violates when `gap < -VIOLATION_TOLERANCE·max(1, |lhs|, |rhs|)`.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;
/// Independent sampling streams in [`search_global`].
pub const STREAMS: u64 = 8;
/// Seed used by [`search_local`].
pub const LOCAL_SEED: u64 = 0x5eed;
const SAMPLING_CAP: f64 = 1e3;
const SCALES: u32 = 24;
const SHRINK_HALVINGS: i32 = 10;
const SHRINK_PASSES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x: Matrix,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub distance_to_diagonal: f64,
}

/// Scale-aware violation test shared by every search routine.
pub fn violates(e: &Evaluation) -> bool {
    e.gap < -VIOLATION_TOLERANCE * e.lhs.abs().max(e.rhs.abs()).max(1.0)
}

fn normalized_gap(e: &Evaluation) -> f64 {
    e.gap / e.lhs.abs().max(e.rhs.abs()).max(1.0)
}

/// Euclidean distance from `x` to the matrix with every column replaced by
/// its mean.
pub fn distance_to_diagonal(x: &Matrix) -> f64 {
    (0..x.cols())
        .map(|j| {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

impl Counterexample {
    /// Evaluates `x` afresh and keeps it only if it violates.
    pub fn confirm(problem: &InequalityProblem, x: Matrix) -> Option<Counterexample> {
        let e = problem.evaluate(&x).ok()?;
        let gap = deficiency(problem, &x).ok()?;
        let e = Evaluation { gap, ..e };
        violates(&e).then(|| Counterexample {
            distance_to_diagonal: distance_to_diagonal(&x),
            x,
            lhs: e.lhs,
            rhs: e.rhs,
            gap,
        })
    }
}

fn try_eval(problem: &InequalityProblem, x: &Matrix) -> Option<Evaluation> {
    problem.evaluate(x).ok().filter(|e| e.gap.is_finite())
}

/// Unit eigenvector of the smallest eigenvalue of `Γ(center)` when that
/// eigenvalue is negative.
pub fn negative_direction(problem: &InequalityProblem, center: &[f64]) -> Option<Vec<f64>> {
    let spec = GammaSpec::new(problem.clone()).ok()?;
    let gamma = gamma_at(&spec, center).ok()?;
    let eig = symmetric_eigen(&gamma).ok()?;
    (eig.values[0] < -1e-12 * eig.scale().max(f64::MIN_POSITIVE)).then(|| eig.vector(0))
}

/// Searches the neighbourhood of `Δ(center)`, seeding along the negative
/// direction of `Γ(center)` when it exists.
pub fn search_local(
    problem: &InequalityProblem,
    center: &[f64],
    radius: f64,
    budget: usize,
) -> Result<Option<Counterexample>> {
    let direction = negative_direction(problem, center);
    search_local_with(problem, center, radius, budget, direction.as_deref(), LOCAL_SEED)
}

/// [`search_local`] with an explicit seed direction and random seed.
///
/// Directed probes set row `ℓ` to `center + ε a_ℓ v` for a few zero-sum row
/// patterns `a` and `ε = radius·2^-m`; the remaining budget goes to uniform
/// perturbations of size `ε` cycling through the same scales.
pub fn search_local_with(
    problem: &InequalityProblem,
    center: &[f64],
    radius: f64,
    budget: usize,
    direction: Option<&[f64]>,
    seed: u64,
) -> Result<Option<Counterexample>> {
    let (n, k) = (problem.n(), problem.k());
    if center.len() != k {
        return Err(Error::Shape(format!("center has {} coordinates, expected {k}", center.len())));
    }
    if !problem.box_contains(center) {
        return Err(Error::Domain(format!("center {center:?} is outside the box")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Contract(format!("radius must be positive, got {radius}")));
    }
    if let Some(v) = direction {
        if v.len() != k {
            return Err(Error::Shape(format!("direction has {} coordinates, expected {k}", v.len())));
        }
    }
    let mut spent = 0;
    let attempt = |x: Matrix, spent: &mut usize| -> Option<Counterexample> {
        if !(0..n).all(|i| problem.box_contains(x.row(i))) {
            return None;
        }
        *spent += 1;
        let e = try_eval(problem, &x)?;
        if violates(&e) {
            Counterexample::confirm(problem, x)
        } else {
            None
        }
    };

    if let Some(v) = direction {
        let patterns = row_patterns(n);
        'scales: for m in 0..SCALES {
            let eps = radius * 0.5f64.powi(m as i32);
            for a in &patterns {
                for sign in [1.0, -1.0] {
                    if spent >= budget {
                        break 'scales;
                    }
                    let x = Matrix::from_fn(n, k, |i, j| center[j] + sign * eps * a[i] * v[j]);
                    if let Some(w) = attempt(x, &mut spent) {
                        return Ok(Some(w));
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = 0;
    let mut stalled = 0;
    while spent < budget {
        let eps = radius * 0.5f64.powi((m % SCALES) as i32);
        m += 1;
        let x = Matrix::from_fn(n, k, |_, j| center[j] + eps * rng.gen_range(-1.0..=1.0));
        let before = spent;
        if let Some(w) = attempt(x, &mut spent) {
            return Ok(Some(w));
        }
        // Every sample may fall outside a tiny box; stop rather than spin.
        stalled = if spent == before { stalled + 1 } else { 0 };
        if stalled > 64 * budget.max(1) {
            break;
        }
    }
    Ok(None)
}

fn row_patterns(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut basis = vec![0.0; n];
    basis[0] = 1.0;
    basis[1] = -1.0;
    out.push(basis);
    if n > 2 {
        out.push((0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
        let mut spike = vec![-1.0 / (n - 1) as f64; n];
        spike[0] = 1.0;
        out.push(spike);
    }
    out
}

enum Axis {
    Log(f64, f64),
    Linear(f64, f64),
}

impl Axis {
    fn for_interval(b: &Interval) -> Axis {
        if b.is_positive() {
            let lo = b.lo();
            let hi = b.hi();
            let a = if lo > 0.0 { lo } else { 1e-3 * hi.min(1.0) };
            let top = if hi.is_finite() { hi } else { SAMPLING_CAP * lo.max(1.0) };
            Axis::Log(a.ln(), top.ln())
        } else {
            let (lo, hi) = b.capped(SAMPLING_CAP);
            Axis::Linear(lo, hi)
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Axis::Log(a, b) => rng.gen_range(a..=b).exp(),
            Axis::Linear(a, b) => rng.gen_range(a..=b),
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    score: f64,
    stream: u64,
    index: usize,
    x: Matrix,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    let key = |c: &Candidate| (c.score, c.stream, c.index);
    match key(&a).partial_cmp(&key(&b)) {
        Some(std::cmp::Ordering::Greater) => b,
        _ => a,
    }
}

/// Log-uniform sampling over the box in [`STREAMS`] parallel streams (80% of
/// the budget), then multiplicative coordinate descent from the worst sample.
/// Deterministic in `(problem, budget, seed)`.
pub fn search_global(problem: &InequalityProblem, budget: usize, seed: u64) -> Result<Option<Counterexample>> {
    let (n, k) = (problem.n(), problem.k());
    if budget == 0 {
        return Ok(None);
    }
    let axes: Vec<Axis> = problem.boxes().iter().map(Axis::for_interval).collect();
    let sampling = (budget * 4 / 5).max(1);
    let worst = (0..STREAMS)
        .into_par_iter()
        .filter_map(|stream| {
            let share = sampling / STREAMS as usize + usize::from((stream as usize) < sampling % STREAMS as usize);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut best: Option<Candidate> = None;
            for index in 0..share {
                let x = Matrix::from_fn(n, k, |_, j| axes[j].sample(&mut rng));
                if !(0..n).all(|i| problem.box_contains(x.row(i))) {
                    continue;
                }
                let Some(e) = try_eval(problem, &x) else { continue };
                let c = Candidate { score: normalized_gap(&e), stream, index, x };
                best = Some(match best {
                    None => c,
                    Some(b) => better(b, c),
                });
            }
            best
        })
        .reduce_with(better);
    let Some(worst) = worst else { return Ok(None) };
    let refined = coordinate_descent(problem, worst.x, worst.score, budget - sampling.min(budget));
    Ok(Counterexample::confirm(problem, refined))
}

fn coordinate_descent(problem: &InequalityProblem, mut x: Matrix, mut score: f64, budget: usize) -> Matrix {
    let (n, k) = (problem.n(), problem.k());
    let positive: Vec<bool> = problem.boxes().iter().map(Interval::is_positive).collect();
    let mut spent = 0;
    let mut step: f64 = 0.5;
    while step >= 1e-8 && spent < budget {
        let mut improved = false;
        for i in 0..n {
            for j in 0..k {
                for dir in [1.0, -1.0] {
                    if spent >= budget {
                        return x;
                    }
                    let old = x[(i, j)];
                    x[(i, j)] = if positive[j] {
                        old * (dir * step).exp()
                    } else {
                        old + dir * step * old.abs().max(1.0)
                    };
                    let accepted = problem.box_contains(x.row(i)) && {
                        spent += 1;
                        match try_eval(problem, &x) {
                            Some(e) if normalized_gap(&e) < score => {
                                score = normalized_gap(&e);
                                true
                            }
                            _ => false,
                        }
                    };
                    if accepted {
                        improved = true;
                    } else {
                        x[(i, j)] = old;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    x
}

/// Greedily moves single entries toward their column mean while the matrix
/// keeps violating. Never increases the distance to the diagonal.
pub fn shrink(problem: &InequalityProblem, witness: &Counterexample) -> Result<Counterexample> {
    let mut current = Counterexample::confirm(problem, witness.x.clone())
        .ok_or_else(|| Error::Contract("shrink needs a violating witness".into()))?;
    let (n, k) = (problem.n(), problem.k());
    for _ in 0..SHRINK_PASSES {
        let mut moved = false;
        for j in 0..k {
            for i in 0..n {
                let mean = current.x.column(j).iter().sum::<f64>() / n as f64;
                let old = current.x[(i, j)];
                if old == mean {
                    continue;
                }
                for h in 0..=SHRINK_HALVINGS {
                    let mut x = current.x.clone();
                    x[(i, j)] = old + 0.5f64.powi(h) * (mean - old);
                    if x[(i, j)] == old || !problem.box_contains(x.row(i)) {
                        continue;
                    }
                    if let Some(c) = Counterexample::confirm(problem, x) {
                        if c.distance_to_diagonal < current.distance_to_diagonal {
                            current = c;
                            moved = true;
                            break;
                        }
                    }
                }
            }
        }
        if !moved {
            break;
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagcalc::PhiSpec;
    use crate::means::{GiniParams, MeanSpec, Weights};

    fn power_problem(outer: f64, inner: f64, phi: PhiSpec) -> InequalityProblem {
        let w = Weights::uniform(2).unwrap();
        let m = |p: f64| MeanSpec::power(p, w.clone()).unwrap();
        InequalityProblem::new(2, m(outer), vec![m(inner), m(inner)], phi, vec![Interval::positive(); 2]).unwrap()
    }

    #[test]
    fn half_power_witness_and_shrink() {
        let p = power_problem(0.5, 0.5, PhiSpec::Sum);
        let x = Matrix::from_rows(vec![vec![1.0, 0.01], vec![0.01, 1.0]]).unwrap();
        let c = Counterexample::confirm(&p, x).unwrap();
        assert!((c.lhs - 1.01).abs() < 1e-12);
        assert!((c.rhs - 0.605).abs() < 1e-12);
        let s = shrink(&p, &c).unwrap();
        assert!(s.gap < 0.0);
        assert!(s.distance_to_diagonal <= c.distance_to_diagonal);
        assert!(s.distance_to_diagonal < 0.5 * c.distance_to_diagonal);
    }

    #[test]
    fn shrink_rejects_valid_points() {
        let p = power_problem(2.0, 2.0, PhiSpec::Sum);
        let c = Counterexample {
            x: Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap(),
            lhs: 0.0,
            rhs: -1.0,
            gap: -1.0,
            distance_to_diagonal: 0.0,
        };
        assert!(matches!(shrink(&p, &c), Err(Error::Contract(_))));
    }

    #[test]
    fn local_search() {
        let p = power_problem(0.5, 0.5, PhiSpec::Sum);
        let w = search_local(&p, &[1.0, 1.0], 1e-2, 10_000).unwrap().unwrap();
        assert!(w.gap < -1e-9);
        assert!(w.distance_to_diagonal < 0.1);
        let p = power_problem(2.0, 2.0, PhiSpec::Sum);
        assert_eq!(search_local(&p, &[1.0, 3.0], 1e-2, 2_000).unwrap(), None);
    }

    #[test]
    fn global_search() {
        let w = Weights::uniform(2).unwrap();
        let g = |r: f64, s: f64| MeanSpec::gini(GiniParams::new(r, s).unwrap(), w.clone());
        let p = InequalityProblem::new(2, g(3.0, 0.0), vec![g(2.0, 0.0), g(2.0, 0.0)], PhiSpec::Sum, vec![Interval::positive(); 2])
            .unwrap();
        let a = search_global(&p, 20_000, 7).unwrap().unwrap();
        assert!(a.gap < -1e-9);
        assert_eq!(Some(a), search_global(&p, 20_000, 7).unwrap());
        assert_eq!(search_global(&p, 0, 7).unwrap(), None);
        let holder = power_problem(1.0, 2.0, PhiSpec::Product);
        assert_eq!(search_global(&holder, 20_000, 7).unwrap(), None);
    }
}
