use thiserror::Error;

/// Errors raised while building geometry, evaluating fields or integrating.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("nonpositive height: point has x3 = {x3}")]
    NonpositivePoint { x3: f64 },

    #[error("nonpositive height: vertex {vertex} has x3 = {x3}")]
    NonpositiveHeight { vertex: usize, x3: f64 },

    #[error("vertex index {index} out of range in face {face}")]
    VertexIndex { face: usize, index: usize },

    #[error("degenerate face {face}: {reason}")]
    DegenerateFace { face: usize, reason: &'static str },

    #[error("face {face} is not planar: vertex deviates by {deviation:e}")]
    NonPlanar { face: usize, deviation: f64 },

    #[error("face {face} is not convex")]
    NonConvex { face: usize },

    #[error("open boundary: edge ({0}, {1}) has {count} adjacent face(s)", edge.0, edge.1)]
    OpenBoundary { edge: (usize, usize), count: usize },

    #[error("inconsistent orientation at {what}")]
    InconsistentOrientation { what: String },

    #[error("degenerate dihedral angle on edge {edge}: sin = {sin:.3e} below {min_sin}")]
    DegenerateAngle { edge: usize, sin: f64, min_sin: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric b + e is not positive definite at ({x1}, {x2}, {x3}): smallest scaled eigenvalue {eigenvalue:e}")]
    NotPositiveDefinite { x1: f64, x2: f64, x3: f64, eigenvalue: f64 },

    #[error("cosine of dihedral angle out of range: {0}")]
    AngleOutOfRange(f64),

    #[error("quadrature did not converge: estimated error {error:e} above tolerance {tolerance:e} ({cells} cells)")]
    QuadratureNonConvergence { error: f64, tolerance: f64, cells: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
