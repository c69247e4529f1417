//! Computational toolkit for mutation of hyperbolic 3-manifold groups.
//!
//! The crate is generic over the real scalar type through [`Real`]; the
//! aliases at the crate root fix `f64` (and a few `f32` variants) for callers
//! that do not need to choose.

pub mod formats;
pub mod limit_set;
pub mod linalg;
pub mod moebius;
pub mod presentation;
pub mod representation;
pub mod scalar;
pub mod volume;

pub use moebius::{
    canonical_sign, classify, finite_order_certificate, fixed_points, fixed_points_tol, moebius_apply,
    solve_conjugator, ConjugatorDiagnostics, ConjugatorSolution, ElementClass, ElementKind,
    FiniteOrderCertificate, MoebiusError, MoebiusMatrix, MoebiusTolerances, SpherePoint,
};
pub use scalar::{Cx, Real};

pub type Moebius = MoebiusMatrix<f64>;
pub type Point = SpherePoint<f64>;
pub type Moebius32 = MoebiusMatrix<f32>;
pub type Point32 = SpherePoint<f32>;

pub use presentation::{
    build_extended_presentation, build_mutant_amalgam, build_mutant_hnn, cover_homomorphism_value,
    format_word, free_reduce, kernel_presentation_generators, parse_word, CoverData, FinitePresentation,
    GroupWord, KernelGenerator, Letter, PresentationError, SurfaceInclusion,
};
pub use representation::{
    build_cover_representation, build_mutant_representation, build_rho_X, cover_presentation, evaluate_word,
    jorgensen_test, solve_assumption, JorgensenResult, LiftMode, MatrixRepresentation, MutationSpec,
    RelatorResidual, RepTolerances, RepresentationError, SolvedConjugator, Splitting,
};
pub use limit_set::{
    build_curve_model, check_precise_invariance_amalgam, check_precise_invariance_hnn, sample_limit_set,
    AmalgamReport, CheckStatus, ConditionReport, CurveModel, HnnReport, LimitSetError, LimitSetSample,
    MaskitOptions, Side, SideAction, SideClassifier, WordSample,
};
pub use volume::{
    bloch_wigner, cover_volume_check, cross_ratio, develop_cycle, product_cycle_volume, solve_gluing_equations,
    verify_mutation_volume, volume_of_decorated_cycle, DecoratedCycle, DecoratedSimplex, IdealTriangulation,
    ShapeSolution, SurfaceCycle, TriangulationError, VolumeError,
};

pub type Cycle = DecoratedCycle<f64>;
