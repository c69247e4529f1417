//! Matrix representations of finite presentations and the representations
//! attached to a mutation: the extended one (`t ↦ A`), the mutant one, and
//! the one on the cyclic cover.

use crate::moebius::{
    finite_order_certificate, solve_conjugator, ConjugatorDiagnostics, FiniteOrderCertificate, MoebiusError,
    MoebiusMatrix, MoebiusTolerances,
};
use crate::presentation::{
    build_extended_presentation, build_mutant_amalgam, build_mutant_hnn, CoverData, FinitePresentation,
    GroupWord, Letter, PresentationError, SurfaceInclusion,
};
use crate::scalar::Real;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepresentationError {
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error("{generators} generators but {images} matrices")]
    ImageCount { generators: usize, images: usize },
    #[error("image of generator `{name}`: {source}")]
    BadImage { name: String, source: MoebiusError },
    #[error("relator {index} (`{relator}`) has residual {residual:e} above {tol:e} ({mode} lift)")]
    Residual {
        index: usize,
        relator: String,
        residual: f64,
        tol: f64,
        mode: LiftMode,
    },
    #[error("mutation has no solved conjugator")]
    NotSolved,
    #[error("mutation has no splitting data")]
    MissingSplitting,
    #[error("image of t^{degree} is not the identity (distance {distance:e})")]
    CoverHolonomy { degree: u32, distance: f64 },
}

/// How relator images are compared with the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftMode {
    /// A relator may evaluate to `+1` or `-1` (lift of a `PSL(2,C)` representation).
    #[default]
    Projective,
    /// A relator must evaluate to `+1`.
    Strict,
}

impl std::fmt::Display for LiftMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LiftMode::Projective => "projective",
            LiftMode::Strict => "strict",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepTolerances<T> {
    pub rep_tol: T,
    pub lift: LiftMode,
    pub moebius: MoebiusTolerances<T>,
}

impl<T: Real> Default for RepTolerances<T> {
    fn default() -> Self {
        Self {
            rep_tol: T::tol(1e-8),
            lift: LiftMode::Projective,
            moebius: MoebiusTolerances::default(),
        }
    }
}

/// Residual of one relator: distance of its image to `sign · 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelatorResidual<T> {
    pub index: usize,
    pub residual: T,
    pub sign: i8,
}

/// A presentation with one `SL(2,C)` matrix per generator.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRepresentation<T: Real> {
    presentation: FinitePresentation,
    images: Vec<MoebiusMatrix<T>>,
}

impl<T: Real> MatrixRepresentation<T> {
    /// Checks the image count and determinants; relator residuals are checked
    /// separately by [`Self::verify`].
    pub fn new(
        presentation: FinitePresentation,
        images: Vec<MoebiusMatrix<T>>,
        det_tol: T,
    ) -> Result<Self, RepresentationError> {
        if presentation.generator_count() != images.len() {
            return Err(RepresentationError::ImageCount {
                generators: presentation.generator_count(),
                images: images.len(),
            });
        }
        for (name, m) in presentation.generator_names().iter().zip(&images) {
            m.check(det_tol).map_err(|source| RepresentationError::BadImage {
                name: name.clone(),
                source,
            })?;
        }
        Ok(Self { presentation, images })
    }

    pub fn presentation(&self) -> &FinitePresentation {
        &self.presentation
    }

    pub fn images(&self) -> &[MoebiusMatrix<T>] {
        &self.images
    }

    pub fn image(&self, name: &str) -> Option<&MoebiusMatrix<T>> {
        self.presentation.index_of(name).map(|i| &self.images[i])
    }

    /// Ordered product of generator images along `w`.
    pub fn evaluate(&self, w: &GroupWord) -> MoebiusMatrix<T> {
        evaluate_letters(&self.images, w.letters())
    }

    /// Evaluates many words in parallel; output order matches input order.
    pub fn evaluate_all(&self, words: &[GroupWord]) -> Vec<MoebiusMatrix<T>> {
        words.par_iter().map(|w| self.evaluate(w)).collect()
    }

    pub fn residuals(&self, mode: LiftMode) -> Vec<RelatorResidual<T>> {
        let id = MoebiusMatrix::identity();
        self.evaluate_all(self.presentation.relators())
            .into_iter()
            .enumerate()
            .map(|(index, m)| {
                let plus = m.distance(&id);
                let minus = m.distance(&-id);
                if mode == LiftMode::Strict || plus <= minus {
                    RelatorResidual { index, residual: plus, sign: 1 }
                } else {
                    RelatorResidual {
                        index,
                        residual: minus,
                        sign: -1,
                    }
                }
            })
            .collect()
    }

    pub fn max_residual(&self, mode: LiftMode) -> T {
        self.residuals(mode)
            .iter()
            .map(|r| r.residual)
            .fold(T::zero(), T::max)
    }

    /// Fails on the first relator whose residual exceeds `tol`.
    pub fn verify(&self, tol: T, mode: LiftMode) -> Result<(), RepresentationError> {
        for r in self.residuals(mode) {
            if !(r.residual <= tol) {
                return Err(RepresentationError::Residual {
                    index: r.index,
                    relator: self.presentation.format_word(&self.presentation.relators()[r.index]),
                    residual: r.residual.to_f64().unwrap_or(f64::NAN),
                    tol: tol.to_f64().unwrap_or(f64::NAN),
                    mode,
                });
            }
        }
        Ok(())
    }

    /// The representation `g ρ g⁻¹`.
    pub fn conjugated_by(&self, g: &MoebiusMatrix<T>) -> Self {
        Self {
            presentation: self.presentation.clone(),
            images: self.images.iter().map(|m| m.conjugated_by(g)).collect(),
        }
    }
}

fn evaluate_letters<T: Real>(images: &[MoebiusMatrix<T>], letters: &[Letter]) -> MoebiusMatrix<T> {
    letters.iter().fold(MoebiusMatrix::identity(), |acc, l| {
        let m = images[l.generator];
        acc * if l.inverse { m.inverse() } else { m }
    })
}

/// Evaluates `w` under `rep`.
pub fn evaluate_word<T: Real>(rep: &MatrixRepresentation<T>, w: &GroupWord) -> MoebiusMatrix<T> {
    rep.evaluate(w)
}

/// How the surface cuts the manifold, with the data needed to write down the
/// mutant group. All `phi` words are in the generators of the piece they map
/// into; `*_embedding` words express the piece's generators in the ambient
/// presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Splitting {
    Separating {
        side1: FinitePresentation,
        side2: FinitePresentation,
        side1_embedding: Vec<GroupWord>,
        side2_embedding: Vec<GroupWord>,
        phi1: Vec<GroupWord>,
        phi2: Vec<GroupWord>,
    },
    NonSeparating {
        complement: FinitePresentation,
        embedding: Vec<GroupWord>,
        phi1: Vec<GroupWord>,
        phi2: Vec<GroupWord>,
        /// `α` on surface generators; composed with `τ_*` internally.
        alpha: Vec<GroupWord>,
        /// The extending element `v`, as an ambient word.
        extending_word: GroupWord,
        stable_name: String,
    },
}

/// A solved conjugator with its diagnostics and finite-order certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedConjugator<T: Real> {
    pub matrix: MoebiusMatrix<T>,
    pub diagnostics: ConjugatorDiagnostics<T>,
    pub certificate: FiniteOrderCertificate<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationSpec<T: Real> {
    pub ambient: MatrixRepresentation<T>,
    pub inclusion: SurfaceInclusion,
    pub splitting: Option<Splitting>,
    pub conjugator: Option<SolvedConjugator<T>>,
}

impl<T: Real> MutationSpec<T> {
    pub fn new(
        ambient: MatrixRepresentation<T>,
        inclusion: SurfaceInclusion,
        splitting: Option<Splitting>,
    ) -> Result<Self, RepresentationError> {
        inclusion.validate(ambient.presentation())?;
        Ok(Self {
            ambient,
            inclusion,
            splitting,
            conjugator: None,
        })
    }

    pub fn conjugator_matrix(&self) -> Result<MoebiusMatrix<T>, RepresentationError> {
        self.conjugator
            .as_ref()
            .map(|c| c.matrix)
            .ok_or(RepresentationError::NotSolved)
    }

    /// `ρ(h_j)` for each surface generator.
    pub fn surface_images(&self) -> Vec<MoebiusMatrix<T>> {
        self.ambient.evaluate_all(&self.inclusion.surface_generators)
    }

    /// `ρ(τ_* h_j)` for each surface generator.
    pub fn tau_images(&self) -> Vec<MoebiusMatrix<T>> {
        let words: Vec<GroupWord> = (0..self.inclusion.genus_generators())
            .map(|j| self.inclusion.tau_image(j))
            .collect();
        self.ambient.evaluate_all(&words)
    }

    /// `max_j ‖ρ(τ_* h_j) − A ρ(h_j) A⁻¹‖` for the stored conjugator.
    pub fn assumption_residual(&self) -> Result<T, RepresentationError> {
        let a = self.conjugator_matrix()?;
        Ok(self
            .surface_images()
            .iter()
            .zip(self.tau_images())
            .map(|(s, t)| t.distance(&s.conjugated_by(&a)))
            .fold(T::zero(), T::max))
    }
}

/// Finds `A` with `ρ(τ_* h) = A ρ(h) A⁻¹` on the surface generators and
/// certifies `A^m = ±1`.
pub fn solve_assumption<T: Real>(
    spec: &MutationSpec<T>,
    tol: &RepTolerances<T>,
) -> Result<MutationSpec<T>, RepresentationError> {
    spec.ambient.verify(tol.rep_tol, tol.lift)?;
    let source = spec.surface_images();
    let target = spec.tau_images();
    let sol = solve_conjugator(&source, &target, &tol.moebius)?;
    let certificate = finite_order_certificate(&sol.matrix, spec.inclusion.order_m, tol.rep_tol)?;
    let mut out = spec.clone();
    out.conjugator = Some(SolvedConjugator {
        matrix: sol.matrix,
        diagnostics: sol.diagnostics,
        certificate,
    });
    Ok(out)
}

/// The representation of `<S, t | R, t h t⁻¹ τ_*(h)⁻¹>` with `t ↦ A`.
#[allow(non_snake_case)]
pub fn build_rho_X<T: Real>(
    spec: &MutationSpec<T>,
    tol: &RepTolerances<T>,
) -> Result<MatrixRepresentation<T>, RepresentationError> {
    let a = spec.conjugator_matrix()?;
    let pres = build_extended_presentation(spec.ambient.presentation(), &spec.inclusion)?;
    let mut images = spec.ambient.images().to_vec();
    images.push(a);
    let rep = MatrixRepresentation::new(pres, images, tol.moebius.det_tol)?;
    rep.verify(tol.rep_tol, tol.lift)?;
    Ok(rep)
}

/// The representation of the mutant group obtained by composing with the
/// inclusion into the extended group.
///
/// Separating case: the second side is conjugated by `A`. Non-separating
/// case: the stable letter maps to `ρ(v)·A`.
pub fn build_mutant_representation<T: Real>(
    spec: &MutationSpec<T>,
    tol: &RepTolerances<T>,
) -> Result<MatrixRepresentation<T>, RepresentationError> {
    let a = spec.conjugator_matrix()?;
    let splitting = spec.splitting.as_ref().ok_or(RepresentationError::MissingSplitting)?;
    let rep = match splitting {
        Splitting::Separating {
            side1,
            side2,
            side1_embedding,
            side2_embedding,
            phi1,
            phi2,
        } => {
            let pres = build_mutant_amalgam(side1, side2, phi1, phi2, &spec.inclusion.tau_star)?;
            let mut images = spec.ambient.evaluate_all(side1_embedding);
            images.extend(
                spec.ambient
                    .evaluate_all(side2_embedding)
                    .iter()
                    .map(|m| m.conjugated_by(&a)),
            );
            MatrixRepresentation::new(pres, images, tol.moebius.det_tol)?
        }
        Splitting::NonSeparating {
            complement,
            embedding,
            phi1,
            phi2,
            alpha,
            extending_word,
            stable_name,
        } => {
            let alpha_then_tau = spec
                .inclusion
                .tau_star
                .iter()
                .map(|w| w.substitute(alpha))
                .collect::<Result<Vec<_>, _>>()?;
            let pres = build_mutant_hnn(complement, phi1, phi2, &alpha_then_tau, stable_name)?;
            let mut images = spec.ambient.evaluate_all(embedding);
            images.push(spec.ambient.evaluate(extending_word) * a);
            MatrixRepresentation::new(pres, images, tol.moebius.det_tol)?
        }
    };
    rep.verify(tol.rep_tol, tol.lift)?;
    Ok(rep)
}

/// Reidemeister–Schreier rewrite of `t^k · w · t^{-k}` (a kernel element) in
/// the kernel generators of `cover`, as a word indexed like
/// `cover.kernel_generators`.
pub fn rewrite_in_kernel(cover: &CoverData, generator_count: usize, w: &GroupWord, start: u32) -> GroupWord {
    let n = cover.degree;
    let others = generator_count - 1;
    let index = |k: u32, s: usize| -> usize {
        let local = if s < cover.t_index { s } else { s - 1 };
        k as usize * others + local
    };
    let power = n as usize * others;
    let mut coset = start;
    let mut letters = Vec::new();
    for l in w.letters() {
        if l.generator == cover.t_index {
            if l.inverse {
                if coset == 0 {
                    letters.push(Letter::new(power, true));
                }
                coset = (coset + n - 1) % n;
            } else {
                if coset == n - 1 {
                    letters.push(Letter::new(power, false));
                }
                coset = (coset + 1) % n;
            }
        } else {
            letters.push(Letter::new(index(coset, l.generator), l.inverse));
        }
    }
    GroupWord::new(letters)
}

/// Presentation of the kernel on its Schreier generators, with relators the
/// rewrites of every conjugate `t^k r t^{-k}` of every relator.
pub fn cover_presentation(x_pres: &FinitePresentation, cover: &CoverData) -> Result<FinitePresentation, RepresentationError> {
    let names = x_pres.generator_names();
    let mut out: Vec<String> = Vec::new();
    for kg in &cover.kernel_generators {
        let base = match kg.generator {
            Some(s) => format!("{}_{}", names[s], kg.coset),
            None => format!("{}_{}", names[cover.t_index], "pow"),
        };
        let mut name = base;
        while out.contains(&name) {
            name.push('_');
        }
        out.push(name);
    }
    let mut relators = Vec::new();
    for r in x_pres.relators() {
        for k in 0..cover.degree {
            let rw = rewrite_in_kernel(cover, x_pres.generator_count(), r, k);
            if !rw.is_empty() {
                relators.push(rw);
            }
        }
    }
    Ok(FinitePresentation::new(out, relators)?)
}

/// Representation of the cyclic cover: each kernel generator maps to its
/// image under the extended representation. Fails unless `t^{2m} ↦ 1`.
pub fn build_cover_representation<T: Real>(
    spec: &MutationSpec<T>,
    cover: &CoverData,
    tol: &RepTolerances<T>,
) -> Result<MatrixRepresentation<T>, RepresentationError> {
    let rho_x = build_rho_X(spec, tol)?;
    let words = cover.words();
    let images = rho_x.evaluate_all(&words);
    let top = images.last().expect("t power is always a kernel generator");
    let distance = top.distance(&MoebiusMatrix::identity());
    if !(distance <= tol.rep_tol) {
        return Err(RepresentationError::CoverHolonomy {
            degree: cover.degree,
            distance: distance.to_f64().unwrap_or(f64::NAN),
        });
    }
    let pres = cover_presentation(rho_x.presentation(), cover)?;
    let rep = MatrixRepresentation::new(pres, images, tol.moebius.det_tol)?;
    rep.verify(tol.rep_tol, tol.lift)?;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JorgensenResult<T> {
    pub lhs: T,
    pub passes: bool,
}

/// `|tr²g − 4| + |tr[g,h] − 2|`, passing when at least `1 − tol`. A failure
/// shows `⟨g, h⟩` is not both discrete and nonelementary.
pub fn jorgensen_test<T: Real>(g: &MoebiusMatrix<T>, h: &MoebiusMatrix<T>, tol: T) -> JorgensenResult<T> {
    let tg = g.trace();
    let four = crate::scalar::cx(T::lit(4.0), T::zero());
    let two = crate::scalar::cx(T::two(), T::zero());
    let comm = *g * *h * g.inverse() * h.inverse();
    let lhs = (tg * tg - four).norm() + (comm.trace() - two).norm();
    JorgensenResult {
        lhs,
        passes: lhs >= T::one() - tol,
    }
}
