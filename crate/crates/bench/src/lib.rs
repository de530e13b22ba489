//! Shared fixtures for the criterion benches.

use polymass_core::{builtin_family, FamilySpec, MetricField, Point, Polyhedron, QuadratureSpec};

pub fn conformal() -> MetricField {
    builtin_family(&FamilySpec::Conformal { m: 1.0, tau_prime: 3.0 }).expect("valid family")
}

pub fn anisotropic() -> MetricField {
    builtin_family(&FamilySpec::Anisotropic {
        m: 1.0,
        tau_prime: 3.0,
        diag: [1.0, -0.4, 0.7],
    })
    .expect("valid family")
}

pub fn exhaustion(size: f64) -> Polyhedron {
    Polyhedron::exhaustion_box(size).expect("valid box")
}

/// A spread of evaluation points, low and high.
pub fn sample_points() -> Vec<Point> {
    (0..64)
        .map(|k| {
            let t = k as f64 / 63.0;
            Point::new(4.0 * t - 2.0, 1.0 - 2.0 * t * t, 0.05 + 5.0 * t).expect("positive height")
        })
        .collect()
}

pub fn quadrature() -> QuadratureSpec {
    QuadratureSpec::default()
}
