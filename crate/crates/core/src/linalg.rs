//! Dense complex linear algebra for the small systems in this crate.
//!
//! One-sided (Hestenes) Jacobi SVD: column pairs are rotated until mutually
//! orthogonal, which keeps small singular values accurate to working precision
//! relative to the largest one. That matters for the nullspace threshold of the
//! conjugator solver.

use crate::scalar::{Cx, Real};
use num_complex::Complex;
use num_traits::{One, Zero};

/// Singular value decomposition `A V = W`, where the columns of `W` are
/// orthogonal with norms equal to the singular values.
#[derive(Debug, Clone)]
pub struct Svd<T: Real> {
    /// Singular values, descending.
    pub singular: Vec<T>,
    /// Right singular vectors (columns of V), in the same order.
    pub right: Vec<Vec<Cx<T>>>,
    /// Columns of `A V` in the same order.
    left_scaled: Vec<Vec<Cx<T>>>,
}

impl<T: Real> Svd<T> {
    /// Decomposes a row-major `rows x cols` matrix.
    pub fn new(rows: usize, cols: usize, a: &[Cx<T>]) -> Self {
        assert_eq!(a.len(), rows * cols, "matrix shape mismatch");
        let mut w: Vec<Vec<Cx<T>>> = (0..cols)
            .map(|j| (0..rows).map(|i| a[i * cols + j]).collect())
            .collect();
        let mut v: Vec<Vec<Cx<T>>> = (0..cols)
            .map(|j| {
                (0..cols)
                    .map(|i| if i == j { Complex::one() } else { Complex::zero() })
                    .collect()
            })
            .collect();

        let eps = T::epsilon();
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..cols {
                for q in (p + 1)..cols {
                    let alpha = norm_sqr(&w[p]);
                    let beta = norm_sqr(&w[q]);
                    let gamma = dot(&w[p], &w[q]);
                    let g = gamma.norm();
                    if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    // rotate the phase out of q so the pair problem is real
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (T::two() * g);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, phase, c, s);
                    rotate(&mut v, p, q, phase, c, s);
                }
            }
            if !rotated {
                break;
            }
        }

        let mut order: Vec<usize> = (0..cols).collect();
        let norms: Vec<T> = w.iter().map(|col| norm_sqr(col).sqrt()).collect();
        order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
        Svd {
            singular: order.iter().map(|&i| norms[i]).collect(),
            right: order.iter().map(|&i| v[i].clone()).collect(),
            left_scaled: order.iter().map(|&i| w[i].clone()).collect(),
        }
    }

    /// Indices of right singular vectors with `sigma <= rel_cutoff * sigma_max`.
    pub fn null_indices(&self, rel_cutoff: T) -> Vec<usize> {
        let top = self.singular.first().copied().unwrap_or_else(T::zero);
        (0..self.singular.len())
            .filter(|&i| self.singular[i] <= rel_cutoff * top)
            .collect()
    }

    /// Minimum-norm least-squares solution of `A x = b`, discarding singular
    /// values below `rel_cutoff * sigma_max`.
    pub fn solve(&self, b: &[Cx<T>], rel_cutoff: T) -> Vec<Cx<T>> {
        let n = self.right.len();
        let top = self.singular.first().copied().unwrap_or_else(T::zero);
        let mut x = vec![Complex::zero(); n];
        for k in 0..n {
            let s = self.singular[k];
            if s <= rel_cutoff * top || s == T::zero() {
                continue;
            }
            let coef = dot(&self.left_scaled[k], b) / (s * s);
            for (xi, vi) in x.iter_mut().zip(&self.right[k]) {
                *xi = *xi + *vi * coef;
            }
        }
        x
    }
}

fn rotate<T: Real>(cols: &mut [Vec<Cx<T>>], p: usize, q: usize, phase: Cx<T>, c: T, s: T) {
    let conj = phase.conj();
    for i in 0..cols[p].len() {
        let xp = cols[p][i];
        let xq = cols[q][i] * conj;
        cols[p][i] = xp * c - xq * s;
        cols[q][i] = xp * s + xq * c;
    }
}

fn norm_sqr<T: Real>(x: &[Cx<T>]) -> T {
    x.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Hermitian inner product `x^H y`.
fn dot<T: Real>(x: &[Cx<T>], y: &[Cx<T>]) -> Cx<T> {
    x.iter()
        .zip(y)
        .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cxf;

    fn apply(rows: usize, cols: usize, a: &[Cx<f64>], x: &[Cx<f64>]) -> Vec<Cx<f64>> {
        (0..rows)
            .map(|i| (0..cols).fold(Complex::zero(), |acc, j| acc + a[i * cols + j] * x[j]))
            .collect()
    }

    #[test]
    fn diagonal_singular_values() {
        let a: Vec<Cx<f64>> = vec![
            cxf(3.0, 0.0),
            cxf(0.0, 0.0),
            cxf(0.0, 0.0),
            cxf(0.0, -2.0),
        ];
        let svd = Svd::new(2, 2, &a);
        assert!((svd.singular[0] - 3.0).abs() < 1e-14);
        assert!((svd.singular[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_nullspace() {
        // rows are multiples of (1, i, 2)
        let row = [cxf(1.0, 0.0), cxf(0.0, 1.0), cxf(2.0, 0.0)];
        let mut a = Vec::new();
        for k in [1.0, -2.0, 0.5] {
            a.extend(row.iter().map(|z| z * k));
        }
        let svd = Svd::new(3, 3, &a);
        let null = svd.null_indices(1e-12);
        assert_eq!(null.len(), 2);
        for &k in &null {
            let r = apply(3, 3, &a, &svd.right[k]);
            assert!(r.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn least_squares_recovers_consistent_solution() {
        let a: Vec<Cx<f64>> = [
            (1.0, 0.5),
            (2.0, 0.0),
            (0.0, 1.0),
            (-1.0, 0.0),
            (0.3, 0.3),
            (1.0, -1.0),
        ]
        .iter()
        .map(|&(r, i)| cxf(r, i))
        .collect();
        let x = [cxf(0.7, -0.2), cxf(-1.1, 0.4)];
        let b = apply(3, 2, &a, &x);
        let sol = Svd::new(3, 2, &a).solve(&b, 1e-14);
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).norm() < 1e-13);
        }
    }
}
