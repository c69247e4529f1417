//! Volume identities around a mutation: equality of the two volumes, the
//! vanishing of product cycles `Σ × S¹` with trivial circle holonomy, and
//! multiplicativity of volume in cyclic covers.

use super::cycle::{volume_of_decorated_cycle, DecoratedCycle, DecoratedSimplex};
use super::develop::{common_fixed_point, develop_cycle_with, DevelopOptions};
use super::gluing::solve_gluing_equations;
use super::triangulation::{permutation_is_even, IdealTriangulation};
use super::VolumeError;
use crate::moebius::{MoebiusMatrix, SpherePoint};
use crate::presentation::GroupWord;
use crate::representation::MatrixRepresentation;
use crate::scalar::Real;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Volume of one manifold by both routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate<T> {
    /// Signed Bloch–Wigner sum over the developed cycle.
    pub cycle_volume: T,
    pub degenerate_simplices: usize,
    pub max_mismatch: T,
    /// Volume from the gluing-equation shapes, when Newton converged to a
    /// positively oriented solution.
    pub gluing_volume: Option<T>,
    /// `|cycle_volume − gluing_volume|`.
    pub gluing_difference: Option<T>,
}

/// Both volumes of a mutation pair and their agreement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutationVolumeReport<T> {
    pub original: VolumeEstimate<T>,
    pub mutant: VolumeEstimate<T>,
    pub difference: T,
    pub tol: T,
    pub passed: bool,
}

/// Develops `rep` over `tri` and evaluates its volume, cross-checked against
/// the gluing equations when they can be solved.
pub fn estimate_volume<T: Real>(
    tri: &IdealTriangulation,
    rep: &MatrixRepresentation<T>,
    opts: &DevelopOptions<T>,
) -> Result<VolumeEstimate<T>, VolumeError> {
    let developed = develop_cycle_with(tri, rep, opts)?;
    let v = volume_of_decorated_cycle(&developed.cycle);
    let gluing_volume = solve_gluing_equations::<T>(tri)
        .ok()
        .filter(|s| s.is_positively_oriented())
        .map(|s| s.volume());
    Ok(VolumeEstimate {
        cycle_volume: v.volume,
        degenerate_simplices: v.degenerate,
        max_mismatch: developed.max_mismatch,
        gluing_volume,
        gluing_difference: gluing_volume.map(|g| (g - v.volume).abs()),
    })
}

/// Compares the volumes of a manifold and its mutant. Passes when the
/// difference and every available gluing cross-check are within `tol`.
pub fn verify_mutation_volume<T: Real>(
    original: (&IdealTriangulation, &MatrixRepresentation<T>),
    mutant: (&IdealTriangulation, &MatrixRepresentation<T>),
    tol: T,
) -> Result<MutationVolumeReport<T>, VolumeError> {
    let opts = DevelopOptions::default();
    let a = estimate_volume(original.0, original.1, &opts)?;
    let b = estimate_volume(mutant.0, mutant.1, &opts)?;
    let difference = (a.cycle_volume - b.cycle_volume).abs();
    let cross_ok = [a.gluing_difference, b.gluing_difference]
        .iter()
        .flatten()
        .all(|&d| d <= tol);
    Ok(MutationVolumeReport {
        original: a,
        mutant: b,
        difference,
        tol,
        passed: difference <= tol && cross_ok,
    })
}

/// A vertex of a triangulated closed surface.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceVertex {
    /// A puncture, decorated by the fixed point of the image of this peripheral word.
    Cusp(GroupWord),
    /// An interior vertex, decorated by a seeded random point on every level.
    Interior,
}

/// An oriented triangulated closed surface: every edge occurs once in each
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCycle {
    vertices: Vec<SurfaceVertex>,
    triangles: Vec<[usize; 3]>,
}

impl SurfaceCycle {
    pub fn new(vertices: Vec<SurfaceVertex>, triangles: Vec<[usize; 3]>) -> Result<Self, VolumeError> {
        let mut directed = std::collections::BTreeMap::<(usize, usize), i32>::new();
        for (index, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(VolumeError::SurfaceTriangle { index });
            }
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *directed.entry(key).or_default() += if a < b { 1 } else { -1 };
            }
        }
        if let Some((&(a, b), _)) = directed.iter().find(|(_, &n)| n != 0) {
            return Err(VolumeError::SurfaceNotClosed { a, b });
        }
        Ok(Self { vertices, triangles })
    }

    pub fn vertices(&self) -> &[SurfaceVertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductCycleOptions<T> {
    pub circle_steps: usize,
    pub seed: u64,
    /// Allowed projective distance of the circle holonomy from the identity.
    pub holonomy_tol: T,
    pub cone_tol: T,
}

impl<T: Real> Default for ProductCycleOptions<T> {
    fn default() -> Self {
        Self {
            circle_steps: 4,
            seed: 0,
            holonomy_tol: T::tol(1e-8),
            cone_tol: T::tol(1e-8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductCycleReport<T> {
    pub volume: T,
    /// Sum of the absolute simplex volumes.
    pub absolute: T,
    pub simplices: usize,
    pub degenerate: usize,
    pub holonomy_distance: T,
    pub circle_steps: usize,
}

/// Volume of the decorated product cycle `Σ × S¹`.
///
/// The circle is cut into `circle_steps` levels. Cusp vertices carry their
/// cone point on every level, interior vertices a fresh random point per
/// level, and the last level is the first one moved by the circle holonomy
/// `ρ(circle)`, which must be `±1`. Each prism over a triangle
/// `v0 < v1 < v2` splits as `[v0 v0' v1' v2'] − [v0 v1 v1' v2'] + [v0 v1 v2 v2']`.
pub fn product_cycle_volume<T: Real>(
    surface: &SurfaceCycle,
    rep: &MatrixRepresentation<T>,
    circle: &GroupWord,
    opts: &ProductCycleOptions<T>,
) -> Result<ProductCycleReport<T>, VolumeError> {
    if opts.circle_steps == 0 {
        return Err(VolumeError::ZeroCircleSteps);
    }
    let holonomy = rep.evaluate(circle);
    let distance = holonomy.projective_distance(&MoebiusMatrix::identity());
    if distance.is_nan() || distance > opts.holonomy_tol {
        return Err(VolumeError::HolonomyNotIdentity {
            distance: distance.to_f64().unwrap_or(f64::NAN),
        });
    }

    let mut cone: Vec<Option<SpherePoint<T>>> = Vec::with_capacity(surface.vertices.len());
    for (vertex, v) in surface.vertices.iter().enumerate() {
        cone.push(match v {
            SurfaceVertex::Cusp(word) => Some(
                common_fixed_point(&[rep.evaluate(word)], opts.cone_tol)
                    .map_err(|residual| VolumeError::SurfaceCusp { vertex, residual })?,
            ),
            SurfaceVertex::Interior => None,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let steps = opts.circle_steps;
    let mut levels: Vec<Vec<SpherePoint<T>>> = (0..steps)
        .map(|_| {
            cone.iter()
                .map(|c| {
                    c.unwrap_or_else(|| {
                        let re = T::lit(rng.gen_range(-2.0..2.0));
                        let im = T::lit(rng.gen_range(-2.0..2.0));
                        SpherePoint::from_complex(Complex::new(re, im))
                    })
                })
                .collect()
        })
        .collect();
    let closing: Vec<SpherePoint<T>> = levels[0].iter().map(|p| holonomy.apply(p)).collect();
    levels.push(closing);

    let mut cycle = DecoratedCycle::default();
    for tri in &surface.triangles {
        let mut sorted = *tri;
        sorted.sort_unstable();
        let parity: i8 = if permutation_is_even(&rank(tri)) { 1 } else { -1 };
        let [v0, v1, v2] = sorted;
        for k in 0..steps {
            let (lo, hi) = (&levels[k], &levels[k + 1]);
            cycle.simplices.push(DecoratedSimplex::new([lo[v0], hi[v0], hi[v1], hi[v2]], parity));
            cycle.simplices.push(DecoratedSimplex::new([lo[v0], lo[v1], hi[v1], hi[v2]], -parity));
            cycle.simplices.push(DecoratedSimplex::new([lo[v0], lo[v1], lo[v2], hi[v2]], parity));
        }
    }
    let v = volume_of_decorated_cycle(&cycle);
    Ok(ProductCycleReport {
        volume: v.volume,
        absolute: v.absolute,
        simplices: v.simplices,
        degenerate: v.degenerate,
        holonomy_distance: distance,
        circle_steps: steps,
    })
}

/// Positions of each entry in sorted order, e.g. `[5, 2, 9] -> [1, 0, 2]`.
fn rank(t: &[usize; 3]) -> [usize; 3] {
    std::array::from_fn(|i| t.iter().filter(|&&x| x < t[i]).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverVolumeReport<T> {
    pub base_volume: T,
    pub degree: usize,
    pub cover_volume: T,
    pub expected: T,
    pub difference: T,
    pub tol: T,
    pub passed: bool,
}

/// Checks `vol(cover) = degree · base_volume` within `tol`.
pub fn cover_volume_check<T: Real>(
    base_volume: T,
    degree: usize,
    cover: &DecoratedCycle<T>,
    tol: T,
) -> CoverVolumeReport<T> {
    let cover_volume = volume_of_decorated_cycle(cover).volume;
    let expected = T::lit(degree as f64) * base_volume;
    let difference = (cover_volume - expected).abs();
    CoverVolumeReport {
        base_volume,
        degree,
        cover_volume,
        expected,
        difference,
        tol,
        passed: difference <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::super::develop::develop_cycle;
    use super::super::develop::tests::figure8_rep;
    use super::super::triangulation::tests::figure8;
    use super::*;
    use crate::presentation::FinitePresentation;

    fn sanov_rep() -> MatrixRepresentation<f64> {
        // thrice-punctured sphere group with t acting as an involution
        let pres = FinitePresentation::parse(&["a", "b", "t"], &["t^4"]).unwrap();
        let i = Complex::new(0.0, 1.0);
        let zero = Complex::new(0.0, 0.0);
        MatrixRepresentation::new(
            pres,
            vec![
                MoebiusMatrix::real(1.0, 2.0, 0.0, 1.0),
                MoebiusMatrix::real(1.0, 0.0, 2.0, 1.0),
                MoebiusMatrix::normalized(i, zero, zero, -i),
            ],
            1e-10,
        )
        .unwrap()
    }

    /// Sphere with the three parabolic cusps `a`, `b^-1`, `b a^-1` and two
    /// interior vertices, one coning off each side. No two prism simplices
    /// share a vertex set, so the vanishing is not a pairwise cancellation.
    fn pants(pres: &FinitePresentation) -> SurfaceCycle {
        let w = |s: &str| SurfaceVertex::Cusp(pres.parse_word(s).unwrap());
        let vertices = vec![
            w("a"),
            w("b^-1"),
            w("b a^-1"),
            SurfaceVertex::Interior,
            SurfaceVertex::Interior,
        ];
        // two faces on the boundary triangle 0 1 2, coned from 3 and from 4
        let front = vec![[0, 1, 3], [1, 2, 3], [2, 0, 3]];
        let back = vec![[1, 0, 4], [2, 1, 4], [0, 2, 4]];
        SurfaceCycle::new(vertices, front.into_iter().chain(back).collect()).unwrap()
    }

    #[test]
    fn mutation_against_itself() {
        let (tri, rep) = (figure8(), figure8_rep());
        let r = verify_mutation_volume((&tri, &rep), (&tri, &rep), 1e-9).unwrap();
        assert_eq!(r.difference, 0.0);
        assert!(r.passed);
        assert!(r.original.gluing_difference.unwrap() < 1e-9);
    }

    #[test]
    fn product_cycle_vanishes() {
        let rep = sanov_rep();
        let s = pants(rep.presentation());
        let t4 = rep.presentation().parse_word("t^4").unwrap();
        let r = product_cycle_volume(&s, &rep, &t4, &ProductCycleOptions::default()).unwrap();
        assert!(r.volume.abs() < 1e-8, "{}", r.volume);
        assert_eq!(r.simplices, 6 * 3 * 4);
        assert!(r.degenerate < r.simplices);
        assert!(r.absolute > 1.0, "{}", r.absolute);
        let one_level = ProductCycleOptions {
            circle_steps: 1,
            ..ProductCycleOptions::default()
        };
        let r1 = product_cycle_volume(&s, &rep, &t4, &one_level).unwrap();
        assert!(r1.volume.abs() < 1e-8);
    }

    #[test]
    fn product_cycle_refinement() {
        let rep = sanov_rep();
        let s = pants(rep.presentation());
        let t4 = rep.presentation().parse_word("t^4").unwrap();
        for steps in [3, 6, 12] {
            let opts = ProductCycleOptions {
                circle_steps: steps,
                seed: 7,
                ..ProductCycleOptions::default()
            };
            assert!(product_cycle_volume(&s, &rep, &t4, &opts).unwrap().volume.abs() < 1e-8);
        }
    }

    #[test]
    fn open_product_cycle_does_not_vanish() {
        // dropping one triangle leaves a chain with boundary
        let rep = sanov_rep();
        let s = pants(rep.presentation());
        let mut triangles = s.triangles().to_vec();
        triangles.pop();
        assert!(matches!(
            SurfaceCycle::new(s.vertices().to_vec(), triangles),
            Err(VolumeError::SurfaceNotClosed { .. })
        ));
    }

    #[test]
    fn nontrivial_circle_holonomy_is_rejected() {
        let rep = sanov_rep();
        let s = pants(rep.presentation());
        let t = rep.presentation().parse_word("t").unwrap();
        let err = product_cycle_volume(&s, &rep, &t, &ProductCycleOptions::default()).unwrap_err();
        assert!(matches!(err, VolumeError::HolonomyNotIdentity { .. }));
        let t2 = rep.presentation().parse_word("t^2").unwrap();
        // t^2 maps to -1, the identity of PSL(2,C)
        assert!(product_cycle_volume(&s, &rep, &t2, &ProductCycleOptions::default()).is_ok());
    }

    #[test]
    fn empty_surface() {
        let rep = sanov_rep();
        let s = SurfaceCycle::new(vec![], vec![]).unwrap();
        let t4 = rep.presentation().parse_word("t^4").unwrap();
        let r = product_cycle_volume(&s, &rep, &t4, &ProductCycleOptions::default()).unwrap();
        assert_eq!(r.volume, 0.0);
    }

    #[test]
    fn cover_multiplicativity() {
        let base = develop_cycle(&figure8(), &figure8_rep()).unwrap().cycle;
        let vol = volume_of_decorated_cycle(&base).volume;
        let g = MoebiusMatrix::normalized(
            Complex::new(0.0, 1.0),
            Complex::new(0.3, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, -1.0),
        );
        for degree in 1..=4 {
            let r = cover_volume_check(vol, degree, &base.translates(&g, degree), 1e-10);
            assert!(r.passed, "{r:?}");
        }
        let mut bad = base.translates(&g, 2);
        bad.extend(&base.negated());
        assert!(!cover_volume_check(vol, 3, &bad, 1e-10).passed);
    }
}
