//! `SL(2,C)` arithmetic and the Möbius action on the Riemann sphere.

use crate::linalg::Svd;
use crate::scalar::{cx, is_finite_cx, Cx, Real};
use num_complex::Complex;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Mul, Neg};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoebiusError {
    #[error("matrix entry is not finite")]
    NonFinite,
    #[error("determinant {det_re}{det_im:+}i is not 1 within {tol}")]
    Determinant { det_re: f64, det_im: f64, tol: f64 },
    #[error("matrix is plus or minus the identity; every point is fixed")]
    FixesEverything,
    #[error("source and target lists must be nonempty and of equal length (got {source_len} and {target_len})")]
    LengthMismatch { source_len: usize, target_len: usize },
    #[error("no conjugator: smallest singular value {smallest:e} is above the cutoff")]
    NoSolution { smallest: f64 },
    #[error("conjugator is not unique: nullspace has dimension {dimension} (elementary or reducible source group)")]
    Ambiguous { dimension: usize },
    #[error("nullspace vector has determinant {det:e}; no SL(2,C) representative")]
    Degenerate { det: f64 },
    #[error("A^{order} is not plus or minus the identity (distances {dist_plus:e}, {dist_minus:e})")]
    NotFiniteOrder {
        order: u32,
        dist_plus: f64,
        dist_minus: f64,
    },
}

/// Tolerances of the matrix layer. Defaults are pinned for `f64` and rescaled
/// by [`Real::tol_scale`] for other precisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusTolerances<T> {
    /// Allowed `|det - 1|`.
    pub det_tol: T,
    /// Relative singular-value cutoff for the conjugator nullspace.
    pub null_cutoff: T,
    /// Conjugation residual above which a solved conjugator is flagged.
    pub residual_warn: T,
    /// Band used by [`classify`] and the conjugator sign convention.
    pub classify_tol: T,
}

impl<T: Real> Default for MoebiusTolerances<T> {
    fn default() -> Self {
        Self {
            det_tol: T::tol(1e-10),
            null_cutoff: T::tol(1e-9),
            residual_warn: T::tol(1e-8),
            classify_tol: T::tol(1e-10),
        }
    }
}

/// A 2×2 complex matrix of determinant 1, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMatrix<T: Real> {
    pub a: Cx<T>,
    pub b: Cx<T>,
    pub c: Cx<T>,
    pub d: Cx<T>,
}

impl<T: Real> MoebiusMatrix<T> {
    /// Builds a matrix and checks finiteness and `|det - 1| <= det_tol`.
    pub fn new(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>, det_tol: T) -> Result<Self, MoebiusError> {
        let m = Self::new_unchecked(a, b, c, d);
        m.check(det_tol)?;
        Ok(m)
    }

    pub const fn new_unchecked(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Self {
        Self { a, b, c, d }
    }

    /// Real matrix `[[a, b], [c, d]]`, unchecked.
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        let r = |x: f64| cx(T::lit(x), T::zero());
        Self::new_unchecked(r(a), r(b), r(c), r(d))
    }

    /// Rescales an invertible matrix to determinant 1.
    pub fn normalized(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Self {
        let k = (a * d - b * c).sqrt().inv();
        Self::new_unchecked(a * k, b * k, c * k, d * k)
    }

    pub fn identity() -> Self {
        Self::new_unchecked(Complex::one(), Complex::zero(), Complex::zero(), Complex::one())
    }

    pub fn entries(&self) -> [Cx<T>; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn check(&self, det_tol: T) -> Result<(), MoebiusError> {
        if !self.entries().iter().all(|z| is_finite_cx(*z)) {
            return Err(MoebiusError::NonFinite);
        }
        let det = self.det();
        if (det - Complex::one()).norm() > det_tol {
            return Err(MoebiusError::Determinant {
                det_re: det.re.to_f64().unwrap_or(f64::NAN),
                det_im: det.im.to_f64().unwrap_or(f64::NAN),
                tol: det_tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    pub fn det(&self) -> Cx<T> {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Cx<T> {
        self.a + self.d
    }

    /// Inverse of a determinant-1 matrix.
    pub fn inverse(&self) -> Self {
        Self::new_unchecked(self.d, -self.b, -self.c, self.a)
    }

    /// `g · self · g⁻¹`.
    pub fn conjugated_by(&self, g: &Self) -> Self {
        *g * *self * g.inverse()
    }

    /// `self^n` by repeated squaring; negative powers use the inverse.
    pub fn pow(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn scale(&self, k: Cx<T>) -> Self {
        Self::new_unchecked(self.a * k, self.b * k, self.c * k, self.d * k)
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> T {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .fold(T::zero(), |acc, (x, y)| acc + (x - y).norm_sqr())
            .sqrt()
    }

    /// `min(‖self - other‖, ‖self + other‖)`: distance in `PSL(2,C)`.
    pub fn projective_distance(&self, other: &Self) -> T {
        self.distance(other).min(self.distance(&-*other))
    }

    pub fn norm(&self) -> T {
        self.distance(&Self::new_unchecked(
            Complex::zero(),
            Complex::zero(),
            Complex::zero(),
            Complex::zero(),
        ))
    }

    /// Möbius action on a sphere point.
    pub fn apply(&self, p: &SpherePoint<T>) -> SpherePoint<T> {
        SpherePoint::from_homogeneous(self.a * p.u + self.b * p.v, self.c * p.u + self.d * p.v)
    }

    /// Converts to another precision without re-checking.
    pub fn cast<S: Real>(&self) -> MoebiusMatrix<S> {
        let e = self.entries().map(crate::scalar::cast_cx::<T, S>);
        MoebiusMatrix::new_unchecked(e[0], e[1], e[2], e[3])
    }
}

impl<T: Real> Mul for MoebiusMatrix<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new_unchecked(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }
}

impl<T: Real> Neg for MoebiusMatrix<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new_unchecked(-self.a, -self.b, -self.c, -self.d)
    }
}

impl<T: Real> fmt::Display for MoebiusMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Applies `m` to `p`.
pub fn moebius_apply<T: Real>(m: &MoebiusMatrix<T>, p: &SpherePoint<T>) -> SpherePoint<T> {
    m.apply(p)
}

/// A point `u : v` of the Riemann sphere in homogeneous coordinates,
/// normalized so that `max(|u|, |v|) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint<T: Real> {
    pub u: Cx<T>,
    pub v: Cx<T>,
}

impl<T: Real> SpherePoint<T> {
    /// Normalizes `(u, v)`.
    ///
    /// # Panics
    /// Panics if `(u, v) = (0, 0)` or an entry is not finite.
    pub fn from_homogeneous(u: Cx<T>, v: Cx<T>) -> Self {
        Self::try_from_homogeneous(u, v).expect("homogeneous coordinates must be finite and not both zero")
    }

    pub fn try_from_homogeneous(u: Cx<T>, v: Cx<T>) -> Option<Self> {
        if !is_finite_cx(u) || !is_finite_cx(v) {
            return None;
        }
        let s = u.norm().max(v.norm());
        if s == T::zero() || !s.is_finite() {
            return None;
        }
        Some(Self { u: u / s, v: v / s })
    }

    pub fn from_complex(z: Cx<T>) -> Self {
        Self::from_homogeneous(z, Complex::one())
    }

    pub fn infinity() -> Self {
        Self {
            u: Complex::one(),
            v: Complex::zero(),
        }
    }

    /// Affine coordinate `u / v`, `None` at infinity.
    pub fn to_complex(&self) -> Option<Cx<T>> {
        if self.v == Complex::zero() {
            None
        } else {
            Some(self.u / self.v)
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.v == Complex::zero()
    }

    /// Chordal distance on the unit sphere, in `[0, 2]`.
    pub fn chordal_distance(&self, other: &Self) -> T {
        let cross = (self.u * other.v - other.u * self.v).norm();
        let n1 = (self.u.norm_sqr() + self.v.norm_sqr()).sqrt();
        let n2 = (other.u.norm_sqr() + other.v.norm_sqr()).sqrt();
        T::two() * cross / (n1 * n2)
    }

    /// Inverse stereographic image on the unit sphere; `∞ ↦ (0, 0, 1)`.
    pub fn to_unit_vector(&self) -> [T; 3] {
        let uu = self.u.norm_sqr();
        let vv = self.v.norm_sqr();
        let w = self.u * self.v.conj();
        let s = uu + vv;
        [T::two() * w.re / s, T::two() * w.im / s, (uu - vv) / s]
    }

    pub fn from_unit_vector(x: [T; 3]) -> Self {
        // z = (x + iy) / (1 - z3), or the antipodal chart near the north pole
        if x[2] <= T::zero() {
            Self::from_homogeneous(cx(x[0], x[1]), cx(T::one() - x[2], T::zero()))
        } else {
            Self::from_homogeneous(cx(T::one() + x[2], T::zero()), cx(x[0], -x[1]))
        }
    }

    pub fn cast<S: Real>(&self) -> SpherePoint<S> {
        SpherePoint::from_homogeneous(crate::scalar::cast_cx(self.u), crate::scalar::cast_cx(self.v))
    }
}

impl<T: Real> fmt::Display for SpherePoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_complex() {
            Some(z) => write!(f, "{z}"),
            None => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Identity,
    Parabolic,
    Elliptic,
    Loxodromic,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElementKind::Identity => "identity",
            ElementKind::Parabolic => "parabolic",
            ElementKind::Elliptic => "elliptic",
            ElementKind::Loxodromic => "loxodromic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementClass<T: Real> {
    pub kind: ElementKind,
    pub trace: Cx<T>,
}

/// Trace classification: identity (`±1`), parabolic (`tr = ±2`), elliptic
/// (real `|tr| < 2`), loxodromic otherwise.
pub fn classify<T: Real>(m: &MoebiusMatrix<T>, tol: T) -> ElementClass<T> {
    let trace = m.trace();
    let id = MoebiusMatrix::identity();
    let kind = if m.projective_distance(&id) <= tol {
        ElementKind::Identity
    } else if (trace - cx(T::two(), T::zero())).norm() <= tol
        || (trace + cx(T::two(), T::zero())).norm() <= tol
    {
        ElementKind::Parabolic
    } else if trace.im.abs() < tol && trace.re.abs() < T::two() {
        ElementKind::Elliptic
    } else {
        ElementKind::Loxodromic
    };
    ElementClass { kind, trace }
}

/// Fixed points of `m` with the default tolerance; see [`fixed_points_tol`].
pub fn fixed_points<T: Real>(m: &MoebiusMatrix<T>) -> Result<Vec<SpherePoint<T>>, MoebiusError> {
    fixed_points_tol(m, MoebiusTolerances::default().classify_tol)
}

/// Fixed points as eigenvector directions: one point for a parabolic
/// element, otherwise two with the attracting one (larger eigenvalue modulus)
/// first.
pub fn fixed_points_tol<T: Real>(m: &MoebiusMatrix<T>, tol: T) -> Result<Vec<SpherePoint<T>>, MoebiusError> {
    let scale = T::one().max(m.norm());
    if m.projective_distance(&MoebiusMatrix::identity()) <= tol * scale {
        return Err(MoebiusError::FixesEverything);
    }
    let tr = m.trace();
    let four = cx(T::lit(4.0), T::zero());
    let mut s = (tr * tr - four).sqrt();
    if (tr.conj() * s).re < T::zero() {
        s = -s;
    }
    let half = T::lit(0.5);
    let lambda_big = (tr + s) * half;
    let parabolic = s.norm() <= tol.sqrt() * scale && (tr * tr - four).norm() <= tol * scale * scale;
    let eigvec = |lambda: Cx<T>| -> Option<SpherePoint<T>> {
        let (u1, v1) = (m.b, lambda - m.a);
        let (u2, v2) = (lambda - m.d, m.c);
        let n1 = u1.norm_sqr() + v1.norm_sqr();
        let n2 = u2.norm_sqr() + v2.norm_sqr();
        if n1 >= n2 {
            SpherePoint::try_from_homogeneous(u1, v1)
        } else {
            SpherePoint::try_from_homogeneous(u2, v2)
        }
    };
    if parabolic {
        let p = eigvec(tr * half).ok_or(MoebiusError::FixesEverything)?;
        return Ok(vec![p]);
    }
    let lambda_small = lambda_big.inv();
    let p1 = eigvec(lambda_big).ok_or(MoebiusError::FixesEverything)?;
    let p2 = eigvec(lambda_small).ok_or(MoebiusError::FixesEverything)?;
    Ok(vec![p1, p2])
}

/// Diagnostics reported with a solved conjugator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatorDiagnostics<T: Real> {
    pub nullspace_dimension: usize,
    pub singular_values: Vec<T>,
    /// Smallest singular value above the cutoff.
    pub smallest_retained: T,
    /// Largest singular value at or below the cutoff.
    pub largest_discarded: T,
    /// `max_j ‖target_j − A·source_j·A⁻¹‖`.
    pub residual: T,
    /// Set when the residual exceeds the configured warning level.
    pub residual_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatorSolution<T: Real> {
    pub matrix: MoebiusMatrix<T>,
    pub diagnostics: ConjugatorDiagnostics<T>,
}

/// Finds `A` with `target_j = A·source_j·A⁻¹` for every `j`.
///
/// Each pair contributes the four linear equations `target_j·A − A·source_j = 0`
/// in the entries of `A`. The solution is the one-dimensional numerical
/// nullspace of the stacked system, rescaled to determinant 1 and fixed up to
/// sign by [`canonical_sign`].
pub fn solve_conjugator<T: Real>(
    source: &[MoebiusMatrix<T>],
    target: &[MoebiusMatrix<T>],
    tol: &MoebiusTolerances<T>,
) -> Result<ConjugatorSolution<T>, MoebiusError> {
    if source.is_empty() || source.len() != target.len() {
        return Err(MoebiusError::LengthMismatch {
            source_len: source.len(),
            target_len: target.len(),
        });
    }
    for m in source.iter().chain(target) {
        m.check(tol.det_tol)?;
    }
    let rows = 4 * source.len();
    let mut sys = vec![Complex::zero(); rows * 4];
    for (pair, (s, t)) in source.iter().zip(target).enumerate() {
        let sm = [[s.a, s.b], [s.c, s.d]];
        let tm = [[t.a, t.b], [t.c, t.d]];
        for i in 0..2 {
            for j in 0..2 {
                let row = 4 * pair + 2 * i + j;
                for k in 0..2 {
                    // (T A)_{ij} = sum_k T_ik A_kj
                    sys[row * 4 + 2 * k + j] = sys[row * 4 + 2 * k + j] + tm[i][k];
                    // (A S)_{ij} = sum_k A_ik S_kj
                    sys[row * 4 + 2 * i + k] = sys[row * 4 + 2 * i + k] - sm[k][j];
                }
            }
        }
    }
    let svd = Svd::new(rows, 4, &sys);
    let null = svd.null_indices(tol.null_cutoff);
    let smallest = *svd.singular.last().expect("four columns");
    let top = svd.singular[0];
    let largest_discarded = null.first().map(|&i| svd.singular[i]).unwrap_or_else(T::zero);
    let smallest_retained = svd
        .singular
        .iter()
        .copied()
        .filter(|s| *s > tol.null_cutoff * top)
        .fold(T::infinity(), T::min);
    match null.len() {
        0 => {
            return Err(MoebiusError::NoSolution {
                smallest: (smallest / top.max(T::min_positive_value())).to_f64().unwrap_or(f64::NAN),
            })
        }
        1 => {}
        dimension => return Err(MoebiusError::Ambiguous { dimension }),
    }
    let x = &svd.right[null[0]];
    let det = x[0] * x[3] - x[1] * x[2];
    if det.norm() <= T::tol(1e-8) {
        return Err(MoebiusError::Degenerate {
            det: det.norm().to_f64().unwrap_or(f64::NAN),
        });
    }
    let a = canonical_sign(MoebiusMatrix::normalized(x[0], x[1], x[2], x[3]), tol.classify_tol);
    let ainv = a.inverse();
    let residual = source
        .iter()
        .zip(target)
        .map(|(s, t)| t.distance(&(a * *s * ainv)))
        .fold(T::zero(), T::max);
    Ok(ConjugatorSolution {
        matrix: a,
        diagnostics: ConjugatorDiagnostics {
            nullspace_dimension: 1,
            singular_values: svd.singular.clone(),
            smallest_retained,
            largest_discarded,
            residual,
            residual_warning: residual > tol.residual_warn,
        },
    })
}

/// Picks the representative of `±m` whose first entry (in the order a, b, c, d)
/// of modulus above `tol` has argument in `(−π/2, π/2]`. Real parts within
/// `tol·|z|` of zero count as zero.
pub fn canonical_sign<T: Real>(m: MoebiusMatrix<T>, tol: T) -> MoebiusMatrix<T> {
    for z in m.entries() {
        let r = z.norm();
        if r <= tol {
            continue;
        }
        let keep = if z.re > tol * r {
            true
        } else if z.re < -tol * r {
            false
        } else {
            z.im > T::zero()
        };
        return if keep { m } else { -m };
    }
    m
}

/// Outcome of the finite-order check `A^m = ±1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteOrderCertificate<T: Real> {
    pub order: u32,
    /// `+1` or `-1`.
    pub sign: i8,
    /// `‖A^m − sign·1‖`.
    pub distance: T,
    /// `‖A^{2m} − 1‖`.
    pub double_order_distance: T,
    pub double_order_is_identity: bool,
}

pub fn finite_order_certificate<T: Real>(
    a: &MoebiusMatrix<T>,
    order: u32,
    tol: T,
) -> Result<FiniteOrderCertificate<T>, MoebiusError> {
    assert!(order >= 1, "order must be positive");
    let power = a.pow(order as i64);
    let id = MoebiusMatrix::identity();
    let dist_plus = power.distance(&id);
    let dist_minus = power.distance(&-id);
    let double = (power * power).distance(&id);
    let (sign, distance) = if dist_plus <= dist_minus {
        (1, dist_plus)
    } else {
        (-1, dist_minus)
    };
    if distance >= tol {
        return Err(MoebiusError::NotFiniteOrder {
            order,
            dist_plus: dist_plus.to_f64().unwrap_or(f64::NAN),
            dist_minus: dist_minus.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(FiniteOrderCertificate {
        order,
        sign,
        distance,
        double_order_distance: double,
        double_order_is_identity: double < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cxf;
    use proptest::prelude::*;

    type M = MoebiusMatrix<f64>;
    type P = SpherePoint<f64>;

    fn sanov() -> (M, M) {
        (M::real(1.0, 2.0, 0.0, 1.0), M::real(1.0, 0.0, 2.0, 1.0))
    }

    fn diag_i() -> M {
        M::new_unchecked(cxf(0.0, 1.0), cxf(0.0, 0.0), cxf(0.0, 0.0), cxf(0.0, -1.0))
    }

    fn close(p: &P, q: &P, tol: f64) -> bool {
        p.chordal_distance(q) < tol
    }

    #[test]
    fn apply_examples() {
        let t = M::real(1.0, 1.0, 0.0, 1.0);
        assert!(close(&t.apply(&P::from_complex(cxf(0.0, 0.0))), &P::from_complex(cxf(1.0, 0.0)), 1e-15));
        let s = M::real(0.0, -1.0, 1.0, 0.0);
        let img = s.apply(&P::infinity());
        assert_eq!(img.to_complex(), Some(cxf(0.0, 0.0)));
        let t2 = M::real(1.0, 2.0, 0.0, 1.0);
        let z = t2.apply(&P::from_complex(cxf(0.0, 1.0))).to_complex().unwrap();
        assert!((z - cxf(2.0, 1.0)).norm() < 1e-15);
        // infinity is fixed by affine maps, no special casing
        assert!(t2.apply(&P::infinity()).is_infinity());
    }

    #[test]
    fn normalization_invariant() {
        let p = P::from_homogeneous(cxf(3.0, 4.0), cxf(0.5, 0.0));
        assert!((p.u.norm().max(p.v.norm()) - 1.0).abs() < 1e-15);
        assert!(P::try_from_homogeneous(cxf(0.0, 0.0), cxf(0.0, 0.0)).is_none());
    }

    #[test]
    fn unit_vector_round_trip() {
        for z in [cxf(0.0, 0.0), cxf(1.0, -2.0), cxf(1e3, 1e3)] {
            let p = P::from_complex(z);
            let q = P::from_unit_vector(p.to_unit_vector());
            assert!(close(&p, &q, 1e-12));
        }
        assert_eq!(P::infinity().to_unit_vector(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn classify_examples() {
        let tol = 1e-10;
        let c = classify(&M::real(1.0, 2.0, 0.0, 1.0), tol);
        assert_eq!(c.kind, ElementKind::Parabolic);
        assert_eq!(c.trace, cxf(2.0, 0.0));
        let h = M::real(2.0, 1.0, 1.0, 1.0);
        let c = classify(&h, tol);
        assert_eq!(c.kind, ElementKind::Loxodromic);
        assert_eq!(c.trace, cxf(3.0, 0.0));
        // hyperbolic times elliptic need not be hyperbolic
        let prod = h * M::real(0.0, -1.0, 1.0, 0.0);
        assert_eq!(prod, M::real(1.0, -2.0, 1.0, -1.0));
        let c = classify(&prod, tol);
        assert_eq!(c.kind, ElementKind::Elliptic);
        assert_eq!(c.trace, cxf(0.0, 0.0));
        assert_eq!(classify(&-M::identity(), tol).kind, ElementKind::Identity);
        // loxodromic with non-real trace
        let lox = M::normalized(cxf(2.0, 1.0), cxf(0.0, 0.0), cxf(0.0, 0.0), cxf(1.0, 0.0));
        assert_eq!(classify(&lox, tol).kind, ElementKind::Loxodromic);
    }

    #[test]
    fn fixed_point_examples() {
        let fp = fixed_points(&M::real(1.0, 2.0, 0.0, 1.0)).unwrap();
        assert_eq!(fp.len(), 1);
        assert!(fp[0].is_infinity());

        let fp = fixed_points(&M::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert_eq!(fp.len(), 2);
        assert!(fp[0].is_infinity());
        assert_eq!(fp[1].to_complex(), Some(cxf(0.0, 0.0)));

        // quadratic-formula oracle on c z^2 + (d - a) z - b = 0 for [[2,1],[1,1]]
        let fp = fixed_points(&M::real(2.0, 1.0, 1.0, 1.0)).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let conj = (1.0 - 5f64.sqrt()) / 2.0;
        assert!((fp[0].to_complex().unwrap() - cxf(golden, 0.0)).norm() < 1e-14);
        assert!((fp[1].to_complex().unwrap() - cxf(conj, 0.0)).norm() < 1e-14);

        assert_eq!(fixed_points(&M::identity()), Err(MoebiusError::FixesEverything));
        assert_eq!(fixed_points(&-M::identity()), Err(MoebiusError::FixesEverything));
    }

    #[test]
    fn parabolic_lower_triangular() {
        let fp = fixed_points(&M::real(1.0, 0.0, 2.0, 1.0)).unwrap();
        assert_eq!(fp.len(), 1);
        assert_eq!(fp[0].to_complex(), Some(cxf(0.0, 0.0)));
    }

    #[test]
    fn determinant_validation() {
        let bad = M::new(cxf(2.0, 0.0), cxf(0.0, 0.0), cxf(0.0, 0.0), cxf(1.0, 0.0), 1e-10);
        assert!(matches!(bad, Err(MoebiusError::Determinant { .. })));
        let nan = M::new(cxf(f64::NAN, 0.0), cxf(0.0, 0.0), cxf(0.0, 0.0), cxf(1.0, 0.0), 1e-10);
        assert_eq!(nan, Err(MoebiusError::NonFinite));
    }

    #[test]
    fn conjugator_inverting_involution() {
        let (a, b) = sanov();
        let sol = solve_conjugator(&[a, b], &[a.inverse(), b.inverse()], &Default::default()).unwrap();
        assert!(sol.matrix.distance(&diag_i()) < 1e-12, "{}", sol.matrix);
        assert!(sol.diagnostics.residual < 1e-12);
        assert_eq!(sol.diagnostics.nullspace_dimension, 1);
        assert!(!sol.diagnostics.residual_warning);
    }

    #[test]
    fn conjugator_identity_and_swap() {
        let (a, b) = sanov();
        let sol = solve_conjugator(&[a, b], &[a, b], &Default::default()).unwrap();
        assert!(sol.matrix.distance(&M::identity()) < 1e-12);

        let sol = solve_conjugator(&[a, b], &[b, a], &Default::default()).unwrap();
        let swap = M::new_unchecked(cxf(0.0, 0.0), cxf(0.0, 1.0), cxf(0.0, 1.0), cxf(0.0, 0.0));
        assert!(sol.matrix.distance(&swap) < 1e-12, "{}", sol.matrix);
        assert!((sol.matrix * sol.matrix).distance(&-M::identity()) < 1e-12);
    }

    #[test]
    fn conjugator_error_paths() {
        let (a, b) = sanov();
        assert!(matches!(
            solve_conjugator(&[a], &[], &Default::default()),
            Err(MoebiusError::LengthMismatch { .. })
        ));
        // a and a^2 share their commutant: two-dimensional nullspace
        assert!(matches!(
            solve_conjugator(&[a], &[a], &Default::default()),
            Err(MoebiusError::Ambiguous { dimension: 2 })
        ));
        // traces differ, nothing conjugates a to the loxodromic
        let h = M::real(2.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            solve_conjugator(&[a, b], &[h, b], &Default::default()),
            Err(MoebiusError::NoSolution { .. })
        ));
    }

    #[test]
    fn conjugator_degenerate_rank_one_solution() {
        // a·X = X with X commuting with a diagonal loxodromic forces X = e22
        let (a, _) = sanov();
        let d = M::real(2.0, 0.0, 0.0, 0.5);
        let res = solve_conjugator(&[a, d], &[M::identity(), d], &Default::default());
        assert!(matches!(res, Err(MoebiusError::Degenerate { .. })), "{res:?}");
    }

    #[test]
    fn sign_convention() {
        let tol = 1e-10;
        assert_eq!(canonical_sign(-diag_i(), tol), diag_i());
        assert_eq!(canonical_sign(-M::identity(), tol), M::identity());
        let m = M::real(0.0, -1.0, 1.0, 0.0);
        assert_eq!(canonical_sign(m, tol), M::real(0.0, 1.0, -1.0, 0.0));
    }

    #[test]
    fn finite_order_examples() {
        let cert = finite_order_certificate(&diag_i(), 2, 1e-10).unwrap();
        assert_eq!(cert.sign, -1);
        assert!(cert.double_order_is_identity);
        for m in 1..5 {
            assert_eq!(finite_order_certificate(&M::identity(), m, 1e-10).unwrap().sign, 1);
        }
        assert!(matches!(
            finite_order_certificate(&M::real(2.0, 1.0, 1.0, 1.0), 2, 1e-10),
            Err(MoebiusError::NotFiniteOrder { order: 2, .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let a = MoebiusMatrix::<f32>::real(1.0, 2.0, 0.0, 1.0);
        let b = MoebiusMatrix::<f32>::real(1.0, 0.0, 2.0, 1.0);
        let sol = solve_conjugator(&[a, b], &[a.inverse(), b.inverse()], &Default::default()).unwrap();
        assert!(sol.diagnostics.residual < 1e-4);
        assert_eq!(finite_order_certificate(&sol.matrix, 2, 1e-4).unwrap().sign, -1);
    }

    fn arb_matrix() -> impl Strategy<Value = M> {
        prop::array::uniform4((-2.0f64..2.0, -2.0f64..2.0)).prop_filter_map("invertible", |e| {
            let z: Vec<Cx<f64>> = e.iter().map(|&(r, i)| cxf(r, i)).collect();
            let det = z[0] * z[3] - z[1] * z[2];
            (det.norm() > 0.1).then(|| M::normalized(z[0], z[1], z[2], z[3]))
        })
    }

    fn arb_point() -> impl Strategy<Value = P> {
        (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(r, i)| P::from_complex(cxf(r, i)))
    }

    proptest! {
        #[test]
        fn action_law(m1 in arb_matrix(), m2 in arb_matrix(), p in arb_point()) {
            let lhs = (m1 * m2).apply(&p);
            let rhs = m1.apply(&m2.apply(&p));
            prop_assert!(lhs.chordal_distance(&rhs) < 1e-10);
        }

        #[test]
        fn fixed_points_are_fixed(m in arb_matrix()) {
            if let Ok(fps) = fixed_points(&m) {
                for p in fps {
                    prop_assert!(m.apply(&p).chordal_distance(&p) < 1e-8);
                }
            }
        }

        #[test]
        fn classification_is_conjugation_invariant(m in arb_matrix(), g in arb_matrix()) {
            let c1 = classify(&m, 1e-8);
            let c2 = classify(&m.conjugated_by(&g), 1e-8);
            prop_assert_eq!(c1.kind, c2.kind);
            prop_assert!((c1.trace - c2.trace).norm() < 1e-9);
        }

        #[test]
        fn conjugator_round_trip(s1 in arb_matrix(), s2 in arb_matrix(), g in arb_matrix()) {
            let targets = [s1.conjugated_by(&g), s2.conjugated_by(&g)];
            if let Ok(sol) = solve_conjugator(&[s1, s2], &targets, &Default::default()) {
                prop_assert!(sol.diagnostics.residual < 1e-8);
                prop_assert!(sol.matrix.projective_distance(&g) < 1e-6 * g.norm().max(1.0));
            }
        }
    }
}
