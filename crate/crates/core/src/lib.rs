//! Mass of asymptotically hyperbolic metrics on polyhedra in the upper half-space.
//!
//! The background is `b = x3^-2 δ` on `{x3 > 0}`. A perturbation `e` decaying
//! like `(cosh r)^-τ` gives `g = b + e`; its mass is computed both as a limit
//! of flux integrals and from the mean curvature and dihedral angles of a
//! convex polyhedron.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod error;
pub mod experiments;
pub mod halfspace;
pub mod mass;
pub mod metric;
pub mod quadrature;
pub mod surface;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, OutputSettings, PolyhedronFamily};
pub use halfspace::{BuildOptions, Edge, Face, Plane, Point, Polyhedron, PolyhedronDoc, Vec3};
pub use mass::{MassBreakdown, SphereResolution};
pub use metric::{builtin_family, decay_check, DecayReport, FamilySpec, MetricField, Perturbation, SymTensor2};
pub use quadrature::{Estimate, QuadratureSpec};
