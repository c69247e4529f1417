//! Volumes of representations: Bloch–Wigner sums over decorated cycles, the
//! gluing-equation solver used as an independent check, and the volume
//! identities of a mutation.

mod cycle;
mod develop;
mod dilog;
mod gluing;
mod identities;
mod triangulation;

pub use cycle::{
    cross_ratio, volume_of_decorated_cycle, volume_of_decorated_cycle_tol, CycleVolume, DecoratedCycle,
    DecoratedSimplex,
};
pub use develop::{develop_cycle, develop_cycle_with, DevelopOptions, Developed};
pub use dilog::{bloch_wigner, bloch_wigner_flagged, DilogValue};
pub use gluing::{solve_gluing_equations, solve_gluing_equations_with, NewtonOptions, ShapeSolution};
pub use identities::{
    cover_volume_check, estimate_volume, product_cycle_volume, verify_mutation_volume, CoverVolumeReport,
    MutationVolumeReport, ProductCycleOptions, ProductCycleReport, SurfaceCycle, SurfaceVertex, VolumeEstimate,
};
pub use triangulation::{
    edge_index, edge_shape_kind, Corner, CuspLink, FaceGluing, IdealTriangulation, LinkCrossing, Perm4,
    TriangulationError, EDGES,
};

use crate::presentation::PresentationError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolumeError {
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error("vertices {i} and {j} of the simplex coincide")]
    DegenerateSimplex { i: usize, j: usize },
    #[error("face word of {tet}:{face}: {source}")]
    FaceWord {
        tet: usize,
        face: usize,
        source: PresentationError,
    },
    #[error("peripheral holonomy of cusp {cusp} has no common fixed point (best residual {residual:e})")]
    NoCommonFixedPoint { cusp: usize, residual: f64 },
    #[error("decorations disagree across face {tet}:{face} / {neighbor}:{neighbor_face} (distance {distance:e})")]
    PropagationMismatch {
        tet: usize,
        face: usize,
        neighbor: usize,
        neighbor_face: usize,
        distance: f64,
    },
    #[error("Newton iteration failed after {iterations} steps with residual {residual:e}")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("shapes of tetrahedra {tetrahedra:?} are flat or negatively oriented")]
    FlatOrNegative { tetrahedra: Vec<usize> },
    #[error("gluing equations need every tetrahedron ordered with the same orientation")]
    NotConsistentlyOrdered,
    #[error("circle holonomy is not the identity (distance {distance:e})")]
    HolonomyNotIdentity { distance: f64 },
    #[error("surface triangle {index} is malformed")]
    SurfaceTriangle { index: usize },
    #[error("surface is not closed along edge {a}-{b}")]
    SurfaceNotClosed { a: usize, b: usize },
    #[error("surface cusp vertex {vertex} has no fixed point (residual {residual:e})")]
    SurfaceCusp { vertex: usize, residual: f64 },
    #[error("circle must be cut into at least one step")]
    ZeroCircleSteps,
}
