//! Sampling grids over open boxes and simplices.

use crate::Interval;

/// Fraction of each interval trimmed from both ends before gridding.
pub const DEFAULT_CLIP: f64 = 0.01;

/// Replacement magnitude for unbounded interval ends.
pub const DEFAULT_CAP: f64 = 1e6;

/// `count` points inside `interval`.
///
/// Positive intervals are sampled geometrically (a zero lower end is raised
/// to `1/cap`), others linearly. Unbounded ends are capped at `±cap`, then
/// `clip` of the (log-)width is trimmed from each end so every point lies
/// strictly inside the open interval.
pub fn axis_points(interval: &Interval, count: usize, clip: f64, cap: f64) -> Vec<f64> {
    let (lo, hi) = interval.capped(cap);
    let log = interval.is_positive();
    let (a, b) = if log { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let width = b - a;
    let (a, b) = (a + clip * width, b - clip * width);
    let map = |v: f64| if log { v.exp() } else { v };
    match count {
        0 => Vec::new(),
        1 => vec![map(0.5 * (a + b))],
        _ => (0..count)
            .map(|i| map(a + (b - a) * i as f64 / (count - 1) as f64))
            .map(|v| v.clamp(lo, hi))
            .collect(),
    }
}

/// Points `(t_1, ..., t_k)` with `t_j = m_j / divisions`, `Σ m_j = divisions`.
pub fn simplex_points(k: usize, divisions: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, divisions: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == k {
            prefix.push(left);
            out.push(prefix.iter().map(|&m| m as f64 / divisions as f64).collect());
            prefix.pop();
            return;
        }
        for m in 0..=left {
            prefix.push(m);
            rec(k, left - m, divisions, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 || divisions == 0 {
        return out;
    }
    rec(k, divisions, divisions, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Cartesian product of per-axis point lists, indexed lexicographically with
/// the first axis varying slowest.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    axes: Vec<Vec<f64>>,
}

impl ProductGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Self {
        ProductGrid { axes }
    }

    /// One axis per interval, `count` points each.
    pub fn over_box(boxes: &[Interval], count: usize) -> Self {
        ProductGrid::new(boxes.iter().map(|b| axis_points(b, count, DEFAULT_CLIP, DEFAULT_CAP)).collect())
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(Vec::len).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        for (slot, axis) in p.iter_mut().zip(&self.axes).rev() {
            *slot = axis[index % axis.len()];
            index /= axis.len();
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_stay_inside() {
        for i in [Interval::positive(), Interval::new(0.1, 10.0).unwrap(), Interval::real_line()] {
            let pts = axis_points(&i, 9, DEFAULT_CLIP, DEFAULT_CAP);
            assert_eq!(pts.len(), 9);
            assert!(pts.iter().all(|&p| i.contains(p)), "{i}: {pts:?}");
            assert!(pts.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn geometric_on_positive_axes() {
        let pts = axis_points(&Interval::new(1.0, 100.0).unwrap(), 3, 0.0, DEFAULT_CAP);
        assert!((pts[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn simplex() {
        let pts = simplex_points(2, 8);
        assert_eq!(pts.len(), 9);
        assert_eq!(simplex_points(3, 8).len(), 45);
        for p in simplex_points(4, 5) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn product_indexing() {
        let g = ProductGrid::new(vec![vec![1.0, 2.0], vec![10.0, 20.0, 30.0]]);
        assert_eq!(g.len(), 6);
        assert_eq!(g.point(0), vec![1.0, 10.0]);
        assert_eq!(g.point(1), vec![1.0, 20.0]);
        assert_eq!(g.point(5), vec![2.0, 30.0]);
    }
}
