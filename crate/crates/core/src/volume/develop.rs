//! Developing a representation over an ideal triangulation: every ideal
//! vertex is decorated by a sphere point, cusp by cusp, starting from the
//! common fixed point of the cusp's peripheral holonomy.

use super::cycle::{DecoratedCycle, DecoratedSimplex};
use super::triangulation::{Corner, IdealTriangulation};
use super::VolumeError;
use crate::moebius::{fixed_points_tol, MoebiusMatrix, SpherePoint};
use crate::presentation::GroupWord;
use crate::representation::MatrixRepresentation;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevelopOptions<T> {
    /// Largest allowed chordal displacement of the cone point by a peripheral element.
    pub cone_tol: T,
    /// Largest allowed decoration disagreement across a face.
    pub mismatch_tol: T,
}

impl<T: Real> Default for DevelopOptions<T> {
    fn default() -> Self {
        Self {
            cone_tol: T::tol(1e-8),
            mismatch_tol: T::tol(1e-8),
        }
    }
}

/// Result of developing: the decorated cycle plus the data behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Developed<T: Real> {
    pub cycle: DecoratedCycle<T>,
    /// Cone point of each cusp class.
    pub cone_points: Vec<SpherePoint<T>>,
    /// Peripheral words found on each cusp link, in the representation's generators.
    pub peripheral_words: Vec<Vec<GroupWord>>,
    /// Largest decoration disagreement over all faces.
    pub max_mismatch: T,
}

/// Develops with default tolerances.
pub fn develop_cycle<T: Real>(
    tri: &IdealTriangulation,
    rep: &MatrixRepresentation<T>,
) -> Result<Developed<T>, VolumeError> {
    develop_cycle_with(tri, rep, &DevelopOptions::default())
}

pub fn develop_cycle_with<T: Real>(
    tri: &IdealTriangulation,
    rep: &MatrixRepresentation<T>,
    opts: &DevelopOptions<T>,
) -> Result<Developed<T>, VolumeError> {
    let n = tri.tetrahedron_count();
    let pres = rep.presentation();
    let mut face_words: Vec<[GroupWord; 4]> = Vec::with_capacity(n);
    for t in 0..n {
        let mut words: [GroupWord; 4] = std::array::from_fn(|_| GroupWord::identity());
        for (f, w) in words.iter_mut().enumerate() {
            *w = pres
                .parse_word(&tri.gluing(t, f).word)
                .map_err(|source| VolumeError::FaceWord { tet: t, face: f, source })?;
        }
        face_words.push(words);
    }
    let face_matrices: Vec<[MoebiusMatrix<T>; 4]> = face_words
        .iter()
        .map(|ws| std::array::from_fn(|f| rep.evaluate(&ws[f])))
        .collect();

    let mut decorations: Vec<[Option<SpherePoint<T>>; 4]> = vec![[None; 4]; n];
    let mut cone_points = Vec::new();
    let mut peripheral_words = Vec::new();
    for cusp in 0..tri.cusp_classes().len() {
        let link = tri.cusp_link(cusp);
        // P[c] = ρ(U[c]) · cone point
        let mut path: std::collections::BTreeMap<Corner, GroupWord> = std::collections::BTreeMap::new();
        for (corner, step) in &link.tree {
            let word = match step {
                None => GroupWord::identity(),
                Some(s) => face_words[s.from.tet][s.face].inverse().mul(&path[&s.from]),
            };
            path.insert(*corner, word);
        }
        let words: Vec<GroupWord> = link
            .chords
            .iter()
            .map(|s| {
                path[&s.from]
                    .inverse()
                    .mul(&face_words[s.from.tet][s.face])
                    .mul(&path[&s.to])
            })
            .collect();
        let matrices = rep.evaluate_all(&words);
        let cone = common_fixed_point(&matrices, opts.cone_tol)
            .map_err(|residual| VolumeError::NoCommonFixedPoint { cusp, residual })?;
        for (corner, word) in &path {
            decorations[corner.tet][corner.vertex] = Some(rep.evaluate(word).apply(&cone));
        }
        cone_points.push(cone);
        peripheral_words.push(words);
    }
    let decorations: Vec<[SpherePoint<T>; 4]> = decorations
        .into_iter()
        .map(|d| d.map(|p| p.expect("every corner lies in a cusp class")))
        .collect();

    let mut max_mismatch = T::zero();
    for t in 0..n {
        for f in 0..4 {
            let g = tri.gluing(t, f);
            for x in (0..4).filter(|&x| x != f) {
                let image = face_matrices[t][f].apply(&decorations[g.neighbor][g.perm.apply(x)]);
                let d = decorations[t][x].chordal_distance(&image);
                if d.is_nan() || d > opts.mismatch_tol {
                    return Err(VolumeError::PropagationMismatch {
                        tet: t,
                        face: f,
                        neighbor: g.neighbor,
                        neighbor_face: g.perm.apply(f),
                        distance: d.to_f64().unwrap_or(f64::NAN),
                    });
                }
                max_mismatch = max_mismatch.max(d);
            }
        }
    }

    let cycle = DecoratedCycle::new(
        decorations
            .iter()
            .zip(tri.orientation())
            .map(|(v, &s)| DecoratedSimplex::new(*v, s))
            .collect(),
    );
    Ok(Developed {
        cycle,
        cone_points,
        peripheral_words,
        max_mismatch,
    })
}

/// Point fixed by every matrix within `tol`, chosen among fixed-point
/// candidates of the first few non-identity elements. On failure returns
/// the best residual found (infinite when every element is `±1`).
pub(crate) fn common_fixed_point<T: Real>(matrices: &[MoebiusMatrix<T>], tol: T) -> Result<SpherePoint<T>, f64> {
    let identity = MoebiusMatrix::identity();
    let nontrivial: Vec<&MoebiusMatrix<T>> = matrices
        .iter()
        .filter(|m| m.projective_distance(&identity) > tol * T::one().max(m.norm()))
        .collect();
    let mut candidates = Vec::new();
    for m in nontrivial.iter().take(3) {
        if let Ok(points) = fixed_points_tol(m, tol) {
            candidates.extend(points);
        }
        // double root (a - d) / 2c of a parabolic, free of the square-root loss
        if let Some(p) = SpherePoint::try_from_homogeneous(m.a - m.d, m.c + m.c) {
            candidates.push(p);
        }
    }
    let residual = |p: &SpherePoint<T>| {
        matrices
            .iter()
            .fold(T::zero(), |acc, m| acc.max(m.apply(p).chordal_distance(p)))
    };
    let best = candidates
        .iter()
        .map(|p| (residual(p), *p))
        .filter(|(r, _)| !r.is_nan())
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    match best {
        Some((r, p)) if r <= tol => Ok(p),
        Some((r, _)) => Err(r.to_f64().unwrap_or(f64::NAN)),
        None => Err(f64::INFINITY),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::super::cycle::volume_of_decorated_cycle;
    use super::super::triangulation::tests::figure8;
    use super::*;
    use crate::presentation::FinitePresentation;
    use num_complex::Complex;

    pub(crate) fn figure8_rep() -> MatrixRepresentation<f64> {
        let h = 3f64.sqrt() / 2.0;
        let m = |e: [f64; 8]| MoebiusMatrix {
            a: Complex::new(e[0], e[1]),
            b: Complex::new(e[2], e[3]),
            c: Complex::new(e[4], e[5]),
            d: Complex::new(e[6], e[7]),
        };
        let pres = FinitePresentation::parse(&["x", "y", "z"], &["z x^-1 y z^-1 x", "y x^-1 y^-1 z"]).unwrap();
        MatrixRepresentation::new(
            pres,
            vec![
                m([1.5, -h, -0.5, h, 0.5, -h, 0.5, h]),
                m([-1.0, 0.0, 1.0, 0.0, -0.5, h, -0.5, -h]),
                m([1.0, 0.0, 0.0, 0.0, 0.5, -h, 1.0, 0.0]),
            ],
            1e-10,
        )
        .unwrap()
    }

    #[test]
    fn figure_eight_develops() {
        let rep = figure8_rep();
        rep.verify(1e-12, crate::representation::LiftMode::Projective).unwrap();
        let d = develop_cycle(&figure8(), &rep).unwrap();
        assert!(d.max_mismatch < 1e-8);
        assert_eq!(d.cycle.len(), 2);
        let v = volume_of_decorated_cycle(&d.cycle);
        assert_eq!(v.degenerate, 0);
        // two regular ideal tetrahedra
        let regular = super::super::dilog::bloch_wigner(Complex::from_polar(1.0, std::f64::consts::FRAC_PI_3));
        assert!((v.volume - 2.0 * regular).abs() < 1e-9, "{}", v.volume);
    }

    #[test]
    fn conjugated_representation_moves_decorations() {
        let rep = figure8_rep();
        let g = MoebiusMatrix::normalized(
            Complex::new(1.2, 0.3),
            Complex::new(-0.4, 0.9),
            Complex::new(0.7, -0.2),
            Complex::new(1.1, 0.5),
        );
        let base = develop_cycle(&figure8(), &rep).unwrap();
        let moved = develop_cycle(&figure8(), &rep.conjugated_by(&g)).unwrap();
        for (s, t) in base.cycle.simplices.iter().zip(&moved.cycle.simplices) {
            for (p, q) in s.vertices.iter().zip(&t.vertices) {
                assert!(g.apply(p).chordal_distance(q) < 1e-8);
            }
        }
        let a = volume_of_decorated_cycle(&base.cycle).volume;
        let b = volume_of_decorated_cycle(&moved.cycle).volume;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn trivial_representation_has_no_cone_point() {
        let pres = figure8_rep().presentation().clone();
        let rep = MatrixRepresentation::new(pres, vec![MoebiusMatrix::identity(); 3], 1e-10).unwrap();
        let err = develop_cycle(&figure8(), &rep).unwrap_err();
        assert!(matches!(err, VolumeError::NoCommonFixedPoint { cusp: 0, .. }), "{err}");
    }

    #[test]
    fn perturbed_representation_is_rejected() {
        let rep = figure8_rep();
        let mut images = rep.images().to_vec();
        let bump = MoebiusMatrix::normalized(
            Complex::new(1.0, 0.0),
            Complex::new(0.01, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(1.0, 0.0),
        );
        images[1] = images[1] * bump;
        let rep = MatrixRepresentation::new(rep.presentation().clone(), images, 1e-10).unwrap();
        assert!(develop_cycle(&figure8(), &rep).is_err());
    }
}
