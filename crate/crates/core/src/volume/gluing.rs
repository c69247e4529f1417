//! Shape parameters from the gluing equations: one logarithmic equation per
//! edge class (angles sum to `2πi`) and one per fundamental cycle of each cusp
//! link (holonomy derivative equal to 1), solved by damped Gauss–Newton from
//! `z = i`.

use super::dilog::bloch_wigner;
use super::triangulation::{edge_index, edge_shape_kind, permutation_is_even, IdealTriangulation, LinkCrossing};
use super::VolumeError;
use crate::linalg::Svd;
use crate::scalar::{Cx, Real};
use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Relative singular value cutoff for the least-squares step.
    pub rank_cutoff: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-12),
            max_iter: 100,
            rank_cutoff: T::tol(1e-10),
        }
    }
}

/// Converged shapes with the final residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeSolution<T: Real> {
    #[serde(serialize_with = "serialize_shapes")]
    pub shapes: Vec<Cx<T>>,
    pub edge_residuals: Vec<T>,
    pub cusp_residuals: Vec<T>,
    pub iterations: usize,
    /// Tetrahedra with `Im z <= 0`.
    pub flat_or_negative: Vec<usize>,
}

fn serialize_shapes<T: Real, S: serde::Serializer>(shapes: &[Cx<T>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(shapes.len()))?;
    for z in shapes {
        seq.serialize_element(&[z.re.to_f64(), z.im.to_f64()])?;
    }
    seq.end()
}

impl<T: Real> ShapeSolution<T> {
    pub fn max_residual(&self) -> T {
        self.edge_residuals
            .iter()
            .chain(&self.cusp_residuals)
            .fold(T::zero(), |m, &r| m.max(r))
    }

    pub fn is_positively_oriented(&self) -> bool {
        self.flat_or_negative.is_empty()
    }

    /// Signed volume `Σ D(z_j)`.
    pub fn volume(&self) -> T {
        let terms: Vec<T> = self.shapes.iter().map(|&z| bloch_wigner(z)).collect();
        super::cycle::pairwise_sum(&terms)
    }

    /// Fails with [`VolumeError::FlatOrNegative`] unless every shape has
    /// positive imaginary part.
    pub fn require_positive(self) -> Result<Self, VolumeError> {
        if self.is_positively_oriented() {
            Ok(self)
        } else {
            Err(VolumeError::FlatOrNegative {
                tetrahedra: self.flat_or_negative.clone(),
            })
        }
    }
}

/// One logarithmic term: `Log(shape of edge kind on tetrahedron)` with a sign.
#[derive(Debug, Clone, Copy)]
struct Term {
    tet: usize,
    kind: usize,
    sign: i32,
}

struct Equations {
    edges: Vec<Vec<Term>>,
    cusps: Vec<Vec<Term>>,
}

fn shape_log<T: Real>(z: Cx<T>, kind: usize) -> Cx<T> {
    let one: Cx<T> = Complex::one();
    match kind {
        0 => z.ln(),
        1 => (one / (one - z)).ln(),
        _ => (one - one / z).ln(),
    }
}

fn shape_log_derivative<T: Real>(z: Cx<T>, kind: usize) -> Cx<T> {
    let one: Cx<T> = Complex::one();
    match kind {
        0 => one / z,
        1 => one / (one - z),
        _ => one / (z * (z - one)),
    }
}

/// Terms of the holonomy of a closed curve in a cusp link: in each corner the
/// curve cuts off the link vertex `q` between its entry and exit faces, and
/// picks up `±log` of the shape on edge `{v, q}`, positive when `q` is on its
/// left.
fn holonomy_terms(cycle: &[LinkCrossing]) -> Vec<Term> {
    let mut terms = Vec::new();
    for i in 0..cycle.len() {
        let into = cycle[i];
        let out = cycle[(i + 1) % cycle.len()];
        let c = into.to;
        let (v, w_in, w_out) = (c.vertex, into.to_face, out.face);
        if w_in == w_out {
            continue;
        }
        let q = (0..4).find(|&q| q != v && q != w_in && q != w_out).expect("four vertices");
        let sign = if permutation_is_even(&[v, q, w_out, w_in]) { 1 } else { -1 };
        terms.push(Term {
            tet: c.tet,
            kind: edge_shape_kind(edge_index(v, q)),
            sign,
        });
    }
    terms
}

fn build_equations(tri: &IdealTriangulation) -> Equations {
    let edges = tri
        .edge_classes()
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|&(tet, e)| Term {
                    tet,
                    kind: edge_shape_kind(e),
                    sign: 1,
                })
                .collect()
        })
        .collect();
    let mut cusps = Vec::new();
    for cusp in 0..tri.cusp_classes().len() {
        let link = tri.cusp_link(cusp);
        for chord in &link.chords {
            let terms = holonomy_terms(&link.cycle(chord));
            if !terms.is_empty() {
                cusps.push(terms);
            }
        }
    }
    Equations { edges, cusps }
}

fn sum_terms<T: Real>(terms: &[Term], z: &[Cx<T>]) -> Cx<T> {
    terms.iter().fold(Complex::zero(), |acc, t| {
        acc + shape_log(z[t.tet], t.kind) * T::lit(f64::from(t.sign))
    })
}

impl Equations {
    fn residual<T: Real>(&self, z: &[Cx<T>]) -> (Vec<Cx<T>>, usize) {
        let two_pi = T::two() * T::PI();
        let mut f = Vec::with_capacity(self.edges.len() + self.cusps.len());
        for eq in &self.edges {
            f.push(sum_terms(eq, z) - Complex::new(T::zero(), two_pi));
        }
        for eq in &self.cusps {
            // holonomy derivative 1: the log sum is a multiple of 2πi
            let s = sum_terms(eq, z);
            let k = (s.im / two_pi).round();
            f.push(s - Complex::new(T::zero(), k * two_pi));
        }
        (f, self.edges.len())
    }

    fn jacobian<T: Real>(&self, z: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = z.len();
        let rows = self.edges.len() + self.cusps.len();
        let mut j = vec![Complex::zero(); rows * n];
        for (r, eq) in self.edges.iter().chain(&self.cusps).enumerate() {
            for t in eq {
                j[r * n + t.tet] =
                    j[r * n + t.tet] + shape_log_derivative(z[t.tet], t.kind) * T::lit(f64::from(t.sign));
            }
        }
        j
    }
}

fn max_abs<T: Real>(f: &[Cx<T>]) -> T {
    f.iter().fold(T::zero(), |m, z| {
        let a = z.norm();
        if a.is_nan() {
            T::infinity()
        } else {
            m.max(a)
        }
    })
}

/// Solves the gluing equations with default options.
pub fn solve_gluing_equations<T: Real>(tri: &IdealTriangulation) -> Result<ShapeSolution<T>, VolumeError> {
    solve_gluing_equations_with(tri, &NewtonOptions::default())
}

pub fn solve_gluing_equations_with<T: Real>(
    tri: &IdealTriangulation,
    opts: &NewtonOptions<T>,
) -> Result<ShapeSolution<T>, VolumeError> {
    if !tri.is_consistently_ordered() {
        return Err(VolumeError::NotConsistentlyOrdered);
    }
    let eqs = build_equations(tri);
    let n = tri.tetrahedron_count();
    let rows = eqs.edges.len() + eqs.cusps.len();
    let mut z: Vec<Cx<T>> = vec![Complex::new(T::zero(), T::one()); n];
    let (mut f, _) = eqs.residual(&z);
    let mut r = max_abs(&f);
    let mut iterations = 0;
    while r >= opts.tol {
        if iterations >= opts.max_iter {
            return Err(VolumeError::NewtonDiverged {
                iterations,
                residual: r.to_f64().unwrap_or(f64::NAN),
            });
        }
        iterations += 1;
        let svd = Svd::new(rows, n, &eqs.jacobian(&z));
        let rhs: Vec<Cx<T>> = f.iter().map(|v| -*v).collect();
        let step = svd.solve(&rhs, opts.rank_cutoff);
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<Cx<T>> = z.iter().zip(&step).map(|(a, d)| *a + *d * lambda).collect();
            let (ft, _) = eqs.residual(&trial);
            let rt = max_abs(&ft);
            if rt < r {
                z = trial;
                f = ft;
                r = rt;
                accepted = true;
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        if !accepted {
            return Err(VolumeError::NewtonDiverged {
                iterations,
                residual: r.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let (f, edge_count) = eqs.residual(&z);
    let norms: Vec<T> = f.iter().map(|v| v.norm()).collect();
    Ok(ShapeSolution {
        flat_or_negative: (0..n).filter(|&i| z[i].im <= T::zero()).collect(),
        shapes: z,
        edge_residuals: norms[..edge_count].to_vec(),
        cusp_residuals: norms[edge_count..].to_vec(),
        iterations,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::super::triangulation::tests::{figure8, glue};
    use super::*;

    #[test]
    fn figure_eight_shapes_are_regular() {
        let s = solve_gluing_equations::<f64>(&figure8()).unwrap();
        // closed-form root of z(1 - z) = 1 in the upper half plane
        let root = Complex::new(0.5, 3f64.sqrt() / 2.0);
        for z in &s.shapes {
            assert!((z - root).norm() < 1e-10, "{z}");
        }
        assert!(s.max_residual() < 1e-12);
        assert!(s.is_positively_oriented());
        let regular = bloch_wigner(root);
        assert!((s.volume() - 2.0 * regular).abs() < 1e-12);
    }

    #[test]
    fn figure_eight_cusp_equations_present() {
        let eqs = build_equations(&figure8());
        assert_eq!(eqs.edges.len(), 2);
        assert_eq!(eqs.cusps.len(), 5);
    }

    #[test]
    fn figure_eight_single_precision() {
        let s = solve_gluing_equations_with::<f32>(
            &figure8(),
            &NewtonOptions {
                tol: 1e-5,
                max_iter: 100,
                rank_cutoff: 1e-5,
            },
        )
        .unwrap();
        assert!((s.volume() - 2.0298832) .abs() < 1e-4);
    }

    /// Two tetrahedra where faces 2 and 3 of tetrahedron 0 fold onto each
    /// other around edge 01, which therefore has valence 1. Its equation
    /// `Log(1 - 1/z) = 2πi` has no solution since `|Im Log| <= π`.
    pub(crate) fn folded_edge() -> IdealTriangulation {
        IdealTriangulation::new(vec![
            [glue(1, "0213", "1"), glue(1, "0132", "1"), glue(0, "0132", "1"), glue(0, "0132", "1")],
            [glue(0, "0213", "1"), glue(0, "0132", "1"), glue(1, "1230", "1"), glue(1, "3012", "1")],
        ])
        .unwrap()
    }

    #[test]
    fn unsolvable_triangulation_diverges() {
        let tri = folded_edge();
        assert!(tri.edge_classes().iter().any(|c| c.len() == 1));
        let err = solve_gluing_equations::<f64>(&tri).unwrap_err();
        assert!(matches!(err, VolumeError::NewtonDiverged { .. }), "{err}");
    }
}
