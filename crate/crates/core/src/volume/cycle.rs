//! Decorated cycles: formal sums of ideal simplices with vertices on the
//! sphere, and their signed Bloch–Wigner volume.

use super::dilog::bloch_wigner;
use super::VolumeError;
use crate::moebius::{MoebiusMatrix, SpherePoint};
use crate::scalar::{Cx, Real};
use rayon::prelude::*;

/// Cross ratio `[30][12] / ([10][32])` with `[ij] = u_i v_j − u_j v_i`, so
/// that `(0, 1, ∞, z)` has cross ratio `z`.
///
/// Fails with [`VolumeError::DegenerateSimplex`] if two points are closer than
/// `tol` in chordal distance.
pub fn cross_ratio<T: Real>(p: &[SpherePoint<T>; 4], tol: T) -> Result<Cx<T>, VolumeError> {
    for i in 0..4 {
        for j in (i + 1)..4 {
            if p[i].chordal_distance(&p[j]) <= tol {
                return Err(VolumeError::DegenerateSimplex { i, j });
            }
        }
    }
    let br = |i: usize, j: usize| p[i].u * p[j].v - p[j].u * p[i].v;
    Ok(br(3, 0) * br(1, 2) / (br(1, 0) * br(3, 2)))
}

/// An ideal simplex with decorated vertices and an orientation sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoratedSimplex<T: Real> {
    pub vertices: [SpherePoint<T>; 4],
    pub sign: i8,
}

impl<T: Real> DecoratedSimplex<T> {
    pub fn new(vertices: [SpherePoint<T>; 4], sign: i8) -> Self {
        Self { vertices, sign }
    }

    pub fn mapped(&self, g: &MoebiusMatrix<T>) -> Self {
        Self {
            vertices: self.vertices.map(|p| g.apply(&p)),
            sign: self.sign,
        }
    }

    /// The four simplices of the 1-4 move with new vertex `q`:
    /// `[p0 p1 p2 p3] = Σ_j (−1)^j [q, p0 .. p̂j .. p3]` as cycles.
    pub fn stellar_subdivision(&self, q: SpherePoint<T>) -> [Self; 4] {
        std::array::from_fn(|j| {
            let mut vertices = [q; 4];
            let mut slot = 1;
            for (i, p) in self.vertices.iter().enumerate() {
                if i != j {
                    vertices[slot] = *p;
                    slot += 1;
                }
            }
            let parity = if j % 2 == 0 { 1 } else { -1 };
            Self {
                vertices,
                sign: self.sign * parity,
            }
        })
    }
}

/// A formal signed sum of decorated ideal simplices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecoratedCycle<T: Real> {
    pub simplices: Vec<DecoratedSimplex<T>>,
}

impl<T: Real> DecoratedCycle<T> {
    pub fn new(simplices: Vec<DecoratedSimplex<T>>) -> Self {
        Self { simplices }
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Image under a global Möbius transformation.
    pub fn mapped(&self, g: &MoebiusMatrix<T>) -> Self {
        Self::new(self.simplices.iter().map(|s| s.mapped(g)).collect())
    }

    /// Orientation reversal of every simplex.
    pub fn negated(&self) -> Self {
        Self::new(
            self.simplices
                .iter()
                .map(|s| DecoratedSimplex::new(s.vertices, -s.sign))
                .collect(),
        )
    }

    pub fn extend(&mut self, other: &Self) {
        self.simplices.extend_from_slice(&other.simplices);
    }

    /// Disjoint union of `g^k · self` for `k = 0..count`.
    pub fn translates(&self, g: &MoebiusMatrix<T>, count: usize) -> Self {
        let mut out = Self::default();
        let mut power = MoebiusMatrix::identity();
        for _ in 0..count {
            out.extend(&self.mapped(&power));
            power = *g * power;
        }
        out
    }

    /// Replaces simplex `index` by its 1-4 subdivision with new vertex `q`.
    pub fn subdivided(&self, index: usize, q: SpherePoint<T>) -> Self {
        let mut simplices = Vec::with_capacity(self.len() + 3);
        for (i, s) in self.simplices.iter().enumerate() {
            if i == index {
                simplices.extend_from_slice(&s.stellar_subdivision(q));
            } else {
                simplices.push(*s);
            }
        }
        Self::new(simplices)
    }
}

/// Volume of a decorated cycle with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CycleVolume<T> {
    pub volume: T,
    /// `Σ |sign · D|`, the size of the terms that cancel in `volume`.
    pub absolute: T,
    pub simplices: usize,
    /// Simplices with two vertices within the degeneracy tolerance; they contribute 0.
    pub degenerate: usize,
}

/// `Σ sign · D(cross_ratio)` with the default degeneracy tolerance.
pub fn volume_of_decorated_cycle<T: Real>(cycle: &DecoratedCycle<T>) -> CycleVolume<T> {
    volume_of_decorated_cycle_tol(cycle, T::tol(1e-12))
}

/// Evaluates simplices in parallel and reduces them with a fixed pairwise
/// tree, so the sum does not depend on the thread count.
pub fn volume_of_decorated_cycle_tol<T: Real>(cycle: &DecoratedCycle<T>, degenerate_tol: T) -> CycleVolume<T> {
    let terms: Vec<Option<T>> = cycle
        .simplices
        .par_iter()
        .map(|s| {
            cross_ratio(&s.vertices, degenerate_tol)
                .ok()
                .map(|z| T::lit(f64::from(s.sign)) * bloch_wigner(z))
        })
        .collect();
    let degenerate = terms.iter().filter(|t| t.is_none()).count();
    let values: Vec<T> = terms.into_iter().map(|t| t.unwrap_or_else(T::zero)).collect();
    let magnitudes: Vec<T> = values.iter().map(|v| v.abs()).collect();
    CycleVolume {
        volume: pairwise_sum(&values),
        absolute: pairwise_sum(&magnitudes),
        simplices: cycle.len(),
        degenerate,
    }
}

pub(crate) fn pairwise_sum<T: Real>(x: &[T]) -> T {
    match x.len() {
        0 => T::zero(),
        1 => x[0],
        n => {
            let (a, b) = x.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use proptest::prelude::*;

    type P = SpherePoint<f64>;

    fn pt(re: f64, im: f64) -> P {
        P::from_complex(Complex::new(re, im))
    }

    fn regular() -> [P; 4] {
        let w = Complex::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        [pt(0.0, 0.0), pt(1.0, 0.0), P::infinity(), P::from_complex(w)]
    }

    #[test]
    fn normalization() {
        let z = Complex::new(0.3, 1.7);
        let p = [pt(0.0, 0.0), pt(1.0, 0.0), P::infinity(), P::from_complex(z)];
        assert!((cross_ratio(&p, 1e-12).unwrap() - z).norm() < 1e-14);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let p = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 0.0), P::infinity()];
        assert_eq!(cross_ratio(&p, 1e-12), Err(VolumeError::DegenerateSimplex { i: 1, j: 2 }));
        let c = DecoratedCycle::new(vec![DecoratedSimplex::new(p, 1), DecoratedSimplex::new(regular(), 1)]);
        let v = volume_of_decorated_cycle(&c);
        assert_eq!(v.degenerate, 1);
        assert!((v.volume - 1.0149416064096536).abs() < 1e-12);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(volume_of_decorated_cycle(&DecoratedCycle::<f64>::default()).volume, 0.0);
        let c = DecoratedCycle::new(vec![DecoratedSimplex::new(regular(), 1)]);
        let v = volume_of_decorated_cycle(&c).volume;
        assert!((v - bloch_wigner(Complex::from_polar(1.0, std::f64::consts::FRAC_PI_3))).abs() < 1e-15);
        assert_eq!(volume_of_decorated_cycle(&c.negated()).volume, -v);
    }

    /// Orbit of the cross ratio under all 24 orderings, enumerated directly.
    #[test]
    fn permutation_orbits() {
        let p = [pt(0.2, -0.4), pt(1.3, 0.7), pt(-2.0, 0.1), pt(0.5, 2.5)];
        let z = cross_ratio(&p, 1e-12).unwrap();
        let one = Complex::new(1.0, 0.0);
        let even_orbit = [z, one / (one - z), one - one / z];
        let odd_orbit = [one / z, one - z, z / (z - one)];
        let d = bloch_wigner(z);
        let perms = permutations();
        for perm in perms {
            let q = perm.map(|i| p[i]);
            let w = cross_ratio(&q, 1e-12).unwrap();
            let orbit = if parity(&perm) { &even_orbit } else { &odd_orbit };
            assert!(orbit.iter().any(|o| (o - w).norm() < 1e-12), "{perm:?}");
            let expected = if parity(&perm) { d } else { -d };
            assert!((bloch_wigner(w) - expected).abs() < 1e-12);
        }
    }

    fn permutations() -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        let mut seen = [false; 4];
                        p.iter().for_each(|&i| seen[i] = true);
                        if seen.iter().all(|&s| s) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    /// True for even permutations, by counting inversions.
    fn parity(p: &[usize; 4]) -> bool {
        let mut inv = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if p[i] > p[j] {
                    inv += 1;
                }
            }
        }
        inv % 2 == 0
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_eq!(pairwise_sum(&x), pairwise_sum(&x));
        let naive: f64 = x.iter().sum();
        assert!((pairwise_sum(&x) - naive).abs() < 1e-12);
    }

    fn arb_point() -> impl Strategy<Value = P> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| pt(a, b))
    }

    fn arb_matrix() -> impl Strategy<Value = MoebiusMatrix<f64>> {
        proptest::array::uniform8(-2.0f64..2.0).prop_filter_map("singular", |e| {
            let a = Complex::new(e[0], e[1]);
            let b = Complex::new(e[2], e[3]);
            let c = Complex::new(e[4], e[5]);
            let d = Complex::new(e[6], e[7]);
            let det = a * d - b * c;
            (det.norm() > 0.2).then(|| MoebiusMatrix::normalized(a, b, c, d))
        })
    }

    proptest! {
        #[test]
        fn moebius_invariance(p in proptest::array::uniform4(arb_point()), g in arb_matrix()) {
            let c = DecoratedCycle::new(vec![DecoratedSimplex::new(p, 1)]);
            let v = volume_of_decorated_cycle(&c);
            prop_assume!(v.degenerate == 0);
            let w = volume_of_decorated_cycle(&c.mapped(&g));
            prop_assert!((v.volume - w.volume).abs() < 1e-9);
        }

        #[test]
        fn one_four_move_preserves_volume(p in proptest::array::uniform4(arb_point()), q in arb_point()) {
            let c = DecoratedCycle::new(vec![DecoratedSimplex::new(p, 1)]);
            let v = volume_of_decorated_cycle(&c);
            let s = volume_of_decorated_cycle(&c.subdivided(0, q));
            prop_assume!(v.degenerate == 0 && s.degenerate == 0);
            prop_assert!((v.volume - s.volume).abs() < 1e-9);
        }
    }
}
