//! Positive (semi)definiteness of `C = diag(c_1..c_k) + c_0 J` in closed form,
//! and an eigenvalue oracle for general symmetric matrices.
//!
//! With `x_0 := -(x_1 + ... + x_k)` the quadratic form of `C` is
//! `c_0 x_0² + c_1 x_1² + ... + c_k x_k²` restricted to `Σ x_i = 0`, which is
//! where the reciprocal-sum test comes from.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Entries with `|c_i| <= ZERO_TOLERANCE · max |c_j|` count as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;
/// Relative band around zero for the reciprocal sum `Σ 1/c_i`.
pub const RECIPROCAL_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedDiagonal {
    c0: f64,
    c: Vec<f64>,
}

impl ShiftedDiagonal {
    pub fn new(c0: f64, c: Vec<f64>) -> Result<Self> {
        if c.len() < 2 {
            return Err(Error::Shape(format!("need k >= 2 diagonal entries, got {}", c.len())));
        }
        if !c0.is_finite() || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("shifted diagonal entries must be finite".into()));
        }
        Ok(ShiftedDiagonal { c0, c })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn k(&self) -> usize {
        self.c.len()
    }

    /// `(c_0, c_1, ..., c_k)`.
    pub fn all(&self) -> Vec<f64> {
        std::iter::once(self.c0).chain(self.c.iter().copied()).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        let k = self.k();
        Matrix::from_fn(k, k, |i, j| if i == j { self.c[i] + self.c0 } else { self.c0 })
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().sum();
        self.c.iter().zip(x).map(|(c, v)| c * v * v).sum::<f64>() + self.c0 * s * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PsdClass {
    PositiveDefinite,
    PositiveSemidefiniteOnly,
    Indefinite,
}

impl PsdClass {
    pub fn is_psd(self) -> bool {
        self != PsdClass::Indefinite
    }
}

impl fmt::Display for PsdClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsdClass::PositiveDefinite => "positive definite",
            PsdClass::PositiveSemidefiniteOnly => "positive semidefinite only",
            PsdClass::Indefinite => "indefinite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdResult {
    pub class: PsdClass,
    pub certificate: String,
    /// A vector with negative quadratic form when the class is indefinite.
    pub witness: Option<Vec<f64>>,
}

/// Closed-form classification of `diag(c) + c_0 J`.
///
/// PSD iff all `c_i >= 0` (`i = 0..k`), or exactly one is negative, the rest
/// are positive and `Σ 1/c_i <= 0`. PD iff all are nonnegative with at most
/// one zero, or the one-negative case holds with `Σ 1/c_i < 0`.
pub fn classify_shifted_diagonal(m: &ShiftedDiagonal) -> PsdResult {
    let all = m.all();
    let scale = all.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return PsdResult {
            class: PsdClass::PositiveSemidefiniteOnly,
            certificate: "zero matrix".into(),
            witness: None,
        };
    }
    let zero = ZERO_TOLERANCE * scale;
    let negatives: Vec<usize> = (0..all.len()).filter(|&i| all[i] < -zero).collect();
    let zeros: Vec<usize> = (0..all.len()).filter(|&i| all[i].abs() <= zero).collect();
    let indefinite = |certificate: String| PsdResult {
        class: PsdClass::Indefinite,
        certificate,
        witness: indefinite_witness(m),
    };
    match negatives.len() {
        0 if zeros.len() <= 1 => PsdResult {
            class: PsdClass::PositiveDefinite,
            certificate: format!("all c_i >= 0 with {} zero(s)", zeros.len()),
            witness: None,
        },
        0 => PsdResult {
            class: PsdClass::PositiveSemidefiniteOnly,
            certificate: format!("all c_i >= 0 but c_i = 0 for i in {zeros:?}"),
            witness: None,
        },
        1 if zeros.is_empty() => {
            let (sum, band) = reciprocal_sum(&all);
            if sum < -band {
                PsdResult {
                    class: PsdClass::PositiveDefinite,
                    certificate: format!("one negative entry c_{}; reciprocal sum {sum} < 0", negatives[0]),
                    witness: None,
                }
            } else if sum <= band {
                PsdResult {
                    class: PsdClass::PositiveSemidefiniteOnly,
                    certificate: format!("one negative entry c_{}; reciprocal sum {sum} = 0", negatives[0]),
                    witness: None,
                }
            } else {
                indefinite(format!("one negative entry c_{}; reciprocal sum {sum} > 0", negatives[0]))
            }
        }
        1 => indefinite(format!("c_{} < 0 while c_i = 0 for i in {zeros:?}", negatives[0])),
        _ => indefinite(format!("{} negative entries at {negatives:?}", negatives.len())),
    }
}

/// `(Σ 1/c_i, RECIPROCAL_TOLERANCE · max 1/|c_i|)`.
fn reciprocal_sum(all: &[f64]) -> (f64, f64) {
    let sum: f64 = all.iter().map(|c| 1.0 / c).sum();
    let band = RECIPROCAL_TOLERANCE * all.iter().fold(0.0f64, |a, c| a.max(1.0 / c.abs()));
    (sum, band)
}

/// A vector `x` with `xᵀ C x < 0` when `C` is indefinite, built in the
/// `(k+1)`-dimensional picture: `e_i - e_j` for two nonpositive entries one of
/// which is negative, or `x_j = 1/c_j` (`j ≠ i`), `x_i = -Σ_{j≠i} 1/c_j` when
/// `c_i` is the single negative entry. The `x_0` coordinate is dropped.
pub fn indefinite_witness(m: &ShiftedDiagonal) -> Option<Vec<f64>> {
    let all = m.all();
    let scale = all.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let zero = ZERO_TOLERANCE * scale;
    let negative: Vec<usize> = (0..all.len()).filter(|&i| all[i] < -zero).collect();
    let nonpositive: Vec<usize> = (0..all.len()).filter(|&i| all[i] <= zero).collect();
    let mut ext = vec![0.0; all.len()];
    let &i = negative.first()?;
    if let Some(&j) = nonpositive.iter().find(|&&j| j != i) {
        ext[i] = 1.0;
        ext[j] = -1.0;
    } else {
        let t: f64 = (0..all.len()).filter(|&j| j != i).map(|j| 1.0 / all[j]).sum();
        for j in (0..all.len()).filter(|&j| j != i) {
            ext[j] = 1.0 / all[j];
        }
        ext[i] = -t;
    }
    let x = ext[1..].to_vec();
    (m.quadratic_form(&x) < 0.0).then_some(x)
}

/// Eigen-decomposition of a symmetric matrix; eigenvalues ascending and
/// eigenvectors as the matching columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    /// `max(1, spectral radius)`.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(1.0f64, |a, v| a.max(v.abs()))
    }

    /// `λ_min / scale`.
    pub fn relative_min(&self) -> f64 {
        self.values.first().map_or(0.0, |l| l / self.scale())
    }
}

/// Cyclic Jacobi iteration. The input must be square; only its symmetric part
/// is used.
pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}×{} matrix is not square", m.rows(), m.cols())));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let n = m.rows();
    let mut a = Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = Matrix::identity(n);
    let frob = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-3 * f64::EPSILON * frob || off < f64::MIN_POSITIVE {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| a[(i, i)]).collect(),
        vectors: Matrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    })
}

/// Eigenvalue classification: PD if `λ_min > tol·scale`, PSD-only if
/// `|λ_min| <= tol·scale`, indefinite otherwise, with
/// `scale = max(1, spectral radius)`.
pub fn classify_symmetric(m: &Matrix, tol: f64) -> Result<PsdResult> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}×{} matrix is not square", m.rows(), m.cols())));
    }
    let asym_tol = tol * m.max_abs().max(1.0);
    for i in 0..m.rows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > asym_tol {
                return Err(Error::Shape(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let eig = symmetric_eigen(m)?;
    if eig.values.is_empty() {
        return Err(Error::Shape("empty matrix".into()));
    }
    Ok(classify_eigen(&eig, tol))
}

/// The rule of [`classify_symmetric`] applied to a precomputed decomposition.
pub fn classify_eigen(eig: &SymmetricEigen, tol: f64) -> PsdResult {
    let lmin = eig.values[0];
    let scale = eig.scale();
    let band = tol * scale;
    let (class, witness) = if lmin > band {
        (PsdClass::PositiveDefinite, None)
    } else if lmin >= -band {
        (PsdClass::PositiveSemidefiniteOnly, None)
    } else {
        (PsdClass::Indefinite, Some(eig.vector(0)))
    };
    PsdResult {
        class,
        certificate: format!("λ_min = {lmin:e}, scale = {scale:e}, band = {band:e}"),
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sd(c0: f64, c: &[f64]) -> ShiftedDiagonal {
        ShiftedDiagonal::new(c0, c.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(classify_shifted_diagonal(&sd(1.0, &[1.0, 1.0])).class, PsdClass::PositiveDefinite);
        assert_eq!(classify_shifted_diagonal(&sd(-1.0, &[3.0, 3.0])).class, PsdClass::PositiveDefinite);
        assert_eq!(classify_shifted_diagonal(&sd(-1.0, &[2.0, 2.0])).class, PsdClass::PositiveSemidefiniteOnly);
        let r = classify_shifted_diagonal(&sd(-1.0, &[1.0, 1.0]));
        assert_eq!(r.class, PsdClass::Indefinite);
        assert!(!r.certificate.is_empty());
        assert_eq!(classify_shifted_diagonal(&sd(0.0, &[0.0, 1.0])).class, PsdClass::PositiveSemidefiniteOnly);
        assert_eq!(classify_shifted_diagonal(&sd(0.0, &[1.0, 1.0])).class, PsdClass::PositiveDefinite);
    }

    #[test]
    fn eigen_examples() {
        let id = Matrix::identity(3);
        assert_eq!(classify_symmetric(&id, 1e-9).unwrap().class, PsdClass::PositiveDefinite);
        let ones = Matrix::from_fn(2, 2, |_, _| 1.0);
        assert_eq!(classify_symmetric(&ones, 1e-9).unwrap().class, PsdClass::PositiveSemidefiniteOnly);
        let d = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert_eq!(classify_symmetric(&d, 1e-9).unwrap().class, PsdClass::Indefinite);
        let skew = Matrix::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(classify_symmetric(&skew, 1e-9), Err(Error::Shape(_))));
    }

    #[test]
    fn eigen_values_of_known_matrix() {
        let m = sd(-1.0, &[3.0, 3.0]).to_matrix();
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..9 {
            let raw = Matrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
            let m = Matrix::from_fn(n, n, |i, j| raw[(i, j)] + raw[(j, i)]);
            let e = symmetric_eigen(&m).unwrap();
            for (c, &lam) in e.values.iter().enumerate() {
                let v = e.vector(c);
                let mv = m.mul_vec(&v);
                for i in 0..n {
                    assert!((mv[i] - lam * v[i]).abs() < 1e-12 * m.max_abs().max(1.0));
                }
            }
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn agrees_with_nalgebra() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..9);
            let raw = Matrix::from_fn(n, n, |_, _| rng.gen_range(-5.0..5.0));
            let m = Matrix::from_fn(n, n, |i, j| raw[(i, j)] + raw[(j, i)]);
            let ours = symmetric_eigen(&m).unwrap().values;
            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
            let mut theirs: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-10 * m.max_abs(), "{ours:?} vs {theirs:?}");
            }
        }
    }

    #[test]
    fn witnesses_have_negative_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut seen = 0;
        for _ in 0..20_000 {
            let k = rng.gen_range(2..9);
            let m = sd(rng.gen_range(-5.0..5.0), &(0..k).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>());
            let r = classify_shifted_diagonal(&m);
            if r.class == PsdClass::Indefinite {
                let x = r.witness.unwrap();
                assert!(m.quadratic_form(&x) < 0.0);
                assert!(m.to_matrix().quadratic_form(&x) < 0.0);
                seen += 1;
            } else {
                assert!(r.witness.is_none());
            }
        }
        assert!(seen > 1000);
        // c_0 the only negative: the witness lives entirely in x_0.
        let m = sd(-1.0, &[1.0, 1.0]);
        assert!(m.quadratic_form(&indefinite_witness(&m).unwrap()) < 0.0);
        // one negative, one zero
        let m = sd(2.0, &[-1.0, 0.0, 4.0]);
        assert_eq!(classify_shifted_diagonal(&m).class, PsdClass::Indefinite);
    }

    #[test]
    fn scale_invariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5000 {
            let k = rng.gen_range(2..9);
            let c0: f64 = rng.gen_range(-5.0..5.0);
            let c: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let base = classify_shifted_diagonal(&sd(c0, &c)).class;
            for t in [1e-6, 0.37, 12.0, 1e7] {
                let scaled: Vec<f64> = c.iter().map(|v| v * t).collect();
                assert_eq!(classify_shifted_diagonal(&sd(c0 * t, &scaled)).class, base);
            }
        }
    }

    #[test]
    fn near_boundary_instances_stay_adjacent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5000 {
            let k = rng.gen_range(2..9);
            let c: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..5.0)).collect();
            let target: f64 = rng.gen_range(-1e-6..1e-6);
            // choose c0 < 0 so that 1/c0 + Σ 1/c_i = target
            let inv: f64 = c.iter().map(|v| 1.0 / v).sum();
            let c0 = 1.0 / (target - inv);
            let m = sd(c0, &c);
            let closed = classify_shifted_diagonal(&m).class;
            let eig = classify_symmetric(&m.to_matrix(), 1e-9).unwrap().class;
            let far = matches!(
                (closed, eig),
                (PsdClass::PositiveDefinite, PsdClass::Indefinite) | (PsdClass::Indefinite, PsdClass::PositiveDefinite)
            );
            assert!(!far, "{m:?}: {closed:?} vs {eig:?}");
        }
    }

    #[test]
    fn shape_checks() {
        assert!(ShiftedDiagonal::new(1.0, vec![1.0]).is_err());
        assert!(ShiftedDiagonal::new(f64::NAN, vec![1.0, 1.0]).is_err());
        assert!(symmetric_eigen(&Matrix::zeros(2, 3)).is_err());
    }
}
