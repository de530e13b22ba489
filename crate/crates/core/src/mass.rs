//! Mass integrand, boundary fluxes and the geometric side of the mass
//! identity.
//!
//! Masses are raw flux values `∫ 𝕌(ν̄) dσ̄` with no normalising constant.
//! With `V = 1/x3` we have `∇̄V = -∂₃`, so `e(∇̄V, ·)_j = -e_3j`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfspace::{cone_radius, cosh_distance, Edge, Face, Point, Polyhedron, Vec3, DEFAULT_MIN_SIN};
use crate::metric::{div_b, sphere_point, trace_b, MetricField};
use crate::quadrature::{
    gauss_legendre_unit, integrate_edge, integrate_face, integrate_segment, Estimate, QuadratureSpec,
};
use crate::surface::{dihedral_deficit, euclidean_conormal, FaceFrame, LocalMetric};

/// `𝕌 = V div_b e - V d(tr_b e) + tr_b e dV - e(∇̄V, ·)` in coordinate components.
pub fn mass_integrand_u(field: &MetricField, p: &Point) -> Vec3 {
    let e = field.e_unchecked(p);
    let de = field.evaluate_de(p);
    let z = p.x3();
    let v = 1.0 / z;
    let tr = trace_b(p, &e);
    let div = div_b(p, &e, &de);
    // d(x3² Σ e_ii)
    let dtr = Vec3::from_fn(|j, _| {
        let s = z * z * de[j].trace_euclidean();
        if j == 2 {
            s + 2.0 * z * e.trace_euclidean()
        } else {
            s
        }
    });
    let dv = Vec3::new(0.0, 0.0, -v * v);
    Vec3::from_fn(|j, _| v * div[j] - v * dtr[j] + tr * dv[j] + e.get(2, j))
}

/// `H - H̄` of `f` at `p`; exactly zero where `e` and `∂e` vanish.
pub fn mean_curvature_deficit(field: &MetricField, f: &Face, frame: &FaceFrame, p: &Point) -> Result<f64> {
    let e = field.evaluate_e(p)?;
    let de = field.evaluate_de(p);
    if e.is_zero() && de.iter().all(|d| d.is_zero()) {
        return Ok(0.0);
    }
    let h = LocalMetric::at(field, p)?.mean_curvature(f.normal(), &frame.tangents());
    Ok(h - f.background_mean_curvature())
}

/// `cosh^{-2τ+1} r`, the integrand of the error bounds.
pub fn bound_density(p: &Point, tau: f64) -> f64 {
    cosh_distance(p).powf(1.0 - 2.0 * tau)
}

/// Quadrature bookkeeping carried with every breakdown.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadDiagnostics {
    pub max_level: usize,
    pub cells: usize,
    /// Summed two-level differences of all integrals that enter the residual.
    pub estimated_error: f64,
    pub converged: bool,
}

impl QuadDiagnostics {
    fn absorb<const N: usize>(&mut self, est: &Estimate<N>, components: &[usize]) {
        self.max_level = self.max_level.max(est.max_level);
        self.cells += est.cells;
        self.estimated_error += components.iter().map(|&k| est.error[k]).sum::<f64>();
        self.converged &= est.converged;
    }
}

/// Both sides of the mass identity on one polyhedron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassBreakdown {
    pub flux_total: f64,
    pub per_face_flux: BTreeMap<usize, f64>,
    /// `-∫ 2V(H - H̄) dσ̄`.
    pub mean_curv_term: Option<f64>,
    /// `2∫ V(α - ᾱ) dλ̄`.
    pub angle_term: Option<f64>,
    /// `∫ cosh^{-2τ+1} r dσ̄` over the boundary.
    pub face_error_bound: Option<f64>,
    /// `∫ cosh^{-2τ+1} r dλ̄` over the edges.
    pub edge_error_bound: Option<f64>,
    /// `flux_total - mean_curv_term - angle_term`.
    pub residual: Option<f64>,
    pub diagnostics: QuadDiagnostics,
}

impl MassBreakdown {
    fn flux_only(per_face: Vec<(usize, Estimate<1>)>) -> Self {
        let mut diag = QuadDiagnostics {
            converged: true,
            ..Default::default()
        };
        let mut per_face_flux = BTreeMap::new();
        let mut total = 0.0;
        for (id, est) in &per_face {
            diag.absorb(est, &[0]);
            per_face_flux.insert(*id, est.value[0]);
            total += est.value[0];
        }
        MassBreakdown {
            flux_total: total,
            per_face_flux,
            mean_curv_term: None,
            angle_term: None,
            face_error_bound: None,
            edge_error_bound: None,
            residual: None,
            diagnostics: diag,
        }
    }

    /// Sum of the two error-bound integrals.
    pub fn total_bound(&self) -> Option<f64> {
        Some(self.face_error_bound? + self.edge_error_bound?)
    }
}

/// `∫_F 𝕌(ν̄) dσ̄`, i.e. `∫ (𝕌·a)/x3 dA`.
pub fn face_flux(field: &MetricField, f: &Face, quad: &QuadratureSpec) -> Result<Estimate<1>> {
    let a = *f.normal();
    integrate_face(f, |p| Ok([mass_integrand_u(field, p).dot(&a) / p.x3()]), quad)?.checked(quad)
}

/// Flux of `𝕌` through the boundary of `poly`.
pub fn polyhedral_mass(field: &MetricField, poly: &Polyhedron, quad: &QuadratureSpec) -> Result<MassBreakdown> {
    let per_face: Vec<(usize, Estimate<1>)> = poly
        .faces
        .par_iter()
        .map(|f| face_flux(field, f, quad).map(|e| (f.id, e)))
        .collect::<Result<_>>()?;
    Ok(MassBreakdown::flux_only(per_face))
}

/// Angular resolution of the sphere oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereResolution {
    /// Total Gauss–Legendre nodes in the polar angle.
    pub polar: usize,
    /// Trapezoid nodes in the azimuth.
    pub azimuthal: usize,
}

impl Default for SphereResolution {
    fn default() -> Self {
        SphereResolution {
            polar: 128,
            azimuthal: 256,
        }
    }
}

impl SphereResolution {
    pub fn doubled(self) -> Self {
        SphereResolution {
            polar: 2 * self.polar,
            azimuthal: 2 * self.azimuthal,
        }
    }
}

const POLAR_PANEL_NODES: usize = 16;

/// Polar panels in `ψ = π - θ`, graded geometrically toward the south pole
/// where `x3 = e^{-r}` and the measure `x3^-2 dA` concentrates.
fn polar_nodes(r: f64, total: usize) -> Vec<(f64, f64)> {
    let per = POLAR_PANEL_NODES.min(total).max(1);
    let panels = (total / per).max(1);
    let first = (0.25 * (-r).exp()).min(PI / 2.0);
    let mut edges = vec![0.0];
    if panels == 1 {
        edges.push(PI);
    } else {
        let q = (PI / first).powf(1.0 / (panels - 1) as f64);
        for k in 0..panels {
            edges.push(first * q.powi(k as i32));
        }
        *edges.last_mut().unwrap() = PI;
    }
    let gl = gauss_legendre_unit(per);
    let mut out = Vec::with_capacity(panels * per);
    for w in edges.windows(2) {
        let h = w[1] - w[0];
        for &(t, wt) in &gl {
            out.push((PI - (w[0] + h * t), wt * h));
        }
    }
    out
}

/// Flux of `𝕌` through the geodesic sphere of radius `r` about `o`.
pub fn sphere_mass(field: &MetricField, r: f64, res: SphereResolution) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("sphere radius must be > 0, got {r}")));
    }
    if res.polar == 0 || res.azimuthal == 0 {
        return Err(Error::InvalidParameter("sphere resolution must be positive".into()));
    }
    let (s, c) = (r.sinh(), r.cosh());
    let center = Vec3::new(0.0, 0.0, c);
    let dphi = 2.0 * PI / res.azimuthal as f64;
    let rows: Vec<f64> = polar_nodes(r, res.polar)
        .into_par_iter()
        .map(|(theta, wt)| {
            let mut row = 0.0;
            for ip in 0..res.azimuthal {
                let phi = dphi * ip as f64;
                let x = sphere_point(r, theta, phi);
                let p = Point::from_vec(x)?;
                let n = (x - center) / s;
                // (𝕌·x3 n) · x3^-2 · s² sinθ
                row += mass_integrand_u(field, &p).dot(&n) / p.x3();
            }
            Ok(row * wt * dphi * s * s * theta.sin())
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum())
}

/// Geometric side of the identity plus the error-bound integrals.
///
/// Each face integrates `[𝕌(ν̄), -2V(H - H̄), cosh^{-2τ+1}r]` on shared nodes;
/// each edge integrates `[2V(α - ᾱ), cosh^{-2τ+1}r]`.
pub fn theorem_rhs(field: &MetricField, poly: &Polyhedron, quad: &QuadratureSpec) -> Result<MassBreakdown> {
    for e in &poly.edges {
        let sin = e.background_dihedral_angle().sin();
        if sin < DEFAULT_MIN_SIN {
            return Err(Error::DegenerateAngle {
                edge: e.id,
                sin,
                min_sin: DEFAULT_MIN_SIN,
            });
        }
    }
    let tau = field.tau();
    let faces: Vec<Estimate<3>> = poly
        .faces
        .par_iter()
        .map(|f| {
            let a = *f.normal();
            let frame = FaceFrame::new(f);
            integrate_face(
                f,
                |p| {
                    let z = p.x3();
                    let u = mass_integrand_u(field, p).dot(&a) / z;
                    let mc = -2.0 * mean_curvature_deficit(field, f, &frame, p)? / (z * z * z);
                    Ok([u, mc, bound_density(p, tau) / (z * z)])
                },
                quad,
            )?
            .checked(quad)
        })
        .collect::<Result<_>>()?;
    let edges: Vec<Estimate<2>> = poly
        .edges
        .par_iter()
        .map(|e| {
            let [p, q] = &e.endpoints;
            integrate_edge(
                p,
                q,
                |x| {
                    let z = x.x3();
                    Ok([
                        2.0 * dihedral_deficit(field, e, x)? / (z * z),
                        bound_density(x, tau) / z,
                    ])
                },
                quad,
            )?
            .checked(quad)
        })
        .collect::<Result<_>>()?;

    let mut diag = QuadDiagnostics {
        converged: true,
        ..Default::default()
    };
    let mut per_face_flux = BTreeMap::new();
    let (mut flux, mut mc, mut fb) = (0.0, 0.0, 0.0);
    for (f, est) in poly.faces.iter().zip(&faces) {
        diag.absorb(est, &[0, 1]);
        per_face_flux.insert(f.id, est.value[0]);
        flux += est.value[0];
        mc += est.value[1];
        fb += est.value[2];
    }
    let (mut angle, mut eb) = (0.0, 0.0);
    for est in &edges {
        diag.absorb(est, &[0]);
        angle += est.value[0];
        eb += est.value[1];
    }
    Ok(MassBreakdown {
        flux_total: flux,
        per_face_flux,
        mean_curv_term: Some(mc),
        angle_term: Some(angle),
        face_error_bound: Some(fb),
        edge_error_bound: Some(eb),
        residual: Some(flux - mc - angle),
        diagnostics: diag,
    })
}

/// `|∫_F 2V(H - H̄) dσ̄ + ∫_F 𝕌(ν̄) dσ̄ + ∫_{∂F} V e(ν̄, n̄) dλ̄|`.
///
/// With `ν̄ = x3 a`, `n̄ = x3 w` and `dλ̄ = dl/x3`, the boundary term is
/// `∫ e(a, w) dl` for the in-plane outward Euclidean conormal `w`.
pub fn face_identity_residual(field: &MetricField, f: &Face, quad: &QuadratureSpec) -> Result<f64> {
    let a = *f.normal();
    let frame = FaceFrame::new(f);
    let interior = integrate_face(
        f,
        |p| {
            let z = p.x3();
            let u = mass_integrand_u(field, p).dot(&a) / z;
            let mc = 2.0 * mean_curvature_deficit(field, f, &frame, p)? / (z * z * z);
            Ok([u + mc])
        },
        quad,
    )?
    .checked(quad)?;
    let mut total = interior.value[0];
    for (u, v) in f.boundary() {
        let w = euclidean_conormal(f, u.coords(), v.coords());
        let est = integrate_edge(u, v, |p| Ok([field.evaluate_e(p)?.apply(&a, &w)]), quad)?.checked(quad)?;
        total += est.value[0];
    }
    Ok(total.abs())
}

/// `∫_F cosh^{-2τ+1} r dσ̄`.
pub fn error_integral_face(f: &Face, tau: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_tau(tau)?;
    let est = integrate_face(f, |p| Ok([bound_density(p, tau) / (p.x3() * p.x3())]), quad)?.checked(quad)?;
    Ok(est.value[0])
}

/// `∫ cosh^{-2τ+1} r dλ̄` summed over the given edges.
pub fn error_integral_edge<'a>(
    edges: impl IntoIterator<Item = &'a Edge>,
    tau: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_tau(tau)?;
    let mut total = 0.0;
    for e in edges {
        total += segment_bound(&e.endpoints[0], &e.endpoints[1], tau, quad)?;
    }
    Ok(total)
}

fn segment_bound(a: &Point, b: &Point, tau: f64, quad: &QuadratureSpec) -> Result<f64> {
    let est = integrate_edge(a, b, |p| Ok([bound_density(p, tau) / p.x3()]), quad)?.checked(quad)?;
    Ok(est.value[0])
}

/// Error-bound integrals over the whole boundary: `(faces, edges)`.
pub fn error_integrals(poly: &Polyhedron, tau: f64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    check_tau(tau)?;
    let faces: Vec<f64> = poly
        .faces
        .par_iter()
        .map(|f| error_integral_face(f, tau, quad))
        .collect::<Result<_>>()?;
    let edges: Vec<f64> = poly
        .edges
        .par_iter()
        .map(|e| error_integral_edge([e], tau, quad))
        .collect::<Result<_>>()?;
    Ok((faces.iter().sum(), edges.iter().sum()))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 1.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "decay rate must exceed 3/2, got {tau}"
        )))
    }
}

/// Error integrals of one cone, with the pieces used by the decay analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeIntegrals {
    pub eps: f64,
    pub rho: f64,
    /// Side edge from a base vertex to the apex.
    pub e1: f64,
    /// Base edge on `{x3 = ε}`.
    pub e2: f64,
    /// Base face.
    pub base: f64,
    /// One side face.
    pub side: f64,
    /// `E₁` restricted to `z ∈ [1/(2ε), 1/ε]`.
    pub e1_top: f64,
    /// `∫ (y² + ρ² cos²(π/n) + ε² + 1)^{-2τ+1} dy` over the base edge.
    pub e2_profile: f64,
}

/// Cone error integrals for `n`, `ε`, `ρ = ε^-s` and decay rate `τ`.
pub fn cone_error_integrals(n: usize, eps: f64, s: f64, tau: f64, quad: &QuadratureSpec) -> Result<ConeIntegrals> {
    check_tau(tau)?;
    let poly = crate::halfspace::cone_polyhedron(n, eps, s)?;
    let apex = n;
    let e1 = poly
        .edges
        .iter()
        .find(|e| e.vertex_ids.contains(&0) && e.vertex_ids.contains(&apex))
        .expect("cone has a side edge at vertex 0");
    let e2 = poly
        .edges
        .iter()
        .find(|e| e.vertex_ids.contains(&0) && e.vertex_ids.contains(&(n - 1)))
        .expect("cone has a base edge at vertex 0");
    let base = &poly.faces[0];
    let side = &poly.faces[1];

    let e1_val = error_integral_edge([e1], tau, quad)?;
    let e2_val = error_integral_edge([e2], tau, quad)?;
    let base_val = error_integral_face(base, tau, quad)?;
    let side_val = error_integral_face(side, tau, quad)?;

    // Top part of E₁, z ∈ [1/(2ε), 1/ε].
    let [p, q] = &e1.endpoints;
    let (lo, hi) = if p.x3() < q.x3() { (p, q) } else { (q, p) };
    let t_mid = (0.5 / eps - lo.x3()) / (hi.x3() - lo.x3());
    let mid = Point::from_vec(lo.coords() + (hi.coords() - lo.coords()) * t_mid)?;
    let e1_top = segment_bound(&mid, hi, tau, quad)?;

    let rho = cone_radius(eps, s);
    let half = rho * (PI / n as f64).sin();
    let c2 = (rho * (PI / n as f64).cos()).powi(2) + eps * eps + 1.0;
    let ya = Point::new(0.0, -half, 1.0)?;
    let yb = Point::new(0.0, half, 1.0)?;
    let focus = Point::new(0.0, 0.0, 1.0)?;
    let prof = integrate_segment(
        &ya,
        &yb,
        |y| Ok([(y.x2() * y.x2() + c2).powf(1.0 - 2.0 * tau)]),
        quad,
        Some(&focus),
    )?
    .checked(quad)?;

    Ok(ConeIntegrals {
        eps,
        rho,
        e1: e1_val,
        e2: e2_val,
        base: base_val,
        side: side_val,
        e1_top,
        e2_profile: prof.value[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfspace::Plane;
    use crate::metric::{builtin_family, FamilySpec, RadialProfile};
    use approx::assert_relative_eq;

    fn conformal(m: f64) -> MetricField {
        builtin_family(&FamilySpec::Conformal { m, tau_prime: 3.0 }).unwrap()
    }

    fn bump() -> MetricField {
        builtin_family(&FamilySpec::Bump {
            center: [0.0, 0.0, 1.0],
            radius: 0.3,
            amplitude: 0.5,
            tau: 3.0,
        })
        .unwrap()
    }

    #[test]
    fn zero_field_integrand_vanishes() {
        let p = Point::new(0.3, -0.2, 0.7).unwrap();
        assert_eq!(mass_integrand_u(&MetricField::zero(), &p), Vec3::zeros());
    }

    #[test]
    fn conformal_integrand_oracle() {
        let prof = RadialProfile::conformal(0.7, 3.0).unwrap();
        let field = MetricField::new(prof).unwrap();
        for &(x, y, z) in &[(0.0, 0.0, 1.0), (0.4, -1.2, 0.3), (2.0, 1.0, 3.5), (-0.1, 0.2, 0.05)] {
            let p = Point::new(x, y, z).unwrap();
            // 𝕌 = -2V dφ + 2φ dV, with dφ by central differences.
            let h = 1e-6 * z;
            let dphi = Vec3::from_fn(|k, _| {
                let mut a = *p.coords();
                let mut b = *p.coords();
                a[k] += h;
                b[k] -= h;
                (prof.phi(&Point::from_vec(a).unwrap()) - prof.phi(&Point::from_vec(b).unwrap())) / (2.0 * h)
            });
            let v = 1.0 / z;
            let dv = Vec3::new(0.0, 0.0, -v * v);
            let expect = -dphi * (2.0 * v) + dv * (2.0 * prof.phi(&p));
            let got = mass_integrand_u(&field, &p);
            assert_relative_eq!(got, expect, max_relative = 1e-7, epsilon = 1e-9 * expect.norm());
        }
    }

    #[test]
    fn integrand_is_linear() {
        let f = conformal(1.0);
        let p = Point::new(0.5, 0.25, 0.8).unwrap();
        let u1 = mass_integrand_u(&f, &p);
        let u2 = mass_integrand_u(&f.scaled(2.0), &p);
        assert_relative_eq!(u2, u1 * 2.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_field_masses() {
        let q = QuadratureSpec::default();
        let b = Polyhedron::exhaustion_box(4.0).unwrap();
        let m = polyhedral_mass(&MetricField::zero(), &b, &q).unwrap();
        assert_eq!(m.flux_total, 0.0);
        let t = theorem_rhs(&MetricField::zero(), &b, &q).unwrap();
        assert_eq!(t.mean_curv_term, Some(0.0));
        assert_eq!(t.angle_term, Some(0.0));
        assert_eq!(t.residual, Some(0.0));
        assert!(
            sphere_mass(&MetricField::zero(), 3.0, SphereResolution::default())
                .unwrap()
                .abs()
                < 1e-10
        );
    }

    #[test]
    fn bump_inside_box_has_no_flux() {
        let q = QuadratureSpec::default();
        let b = Polyhedron::exhaustion_box(4.0).unwrap();
        let m = polyhedral_mass(&bump(), &b, &q).unwrap();
        assert!(m.flux_total.abs() < 1e-12);
        assert!(sphere_mass(&bump(), 2.0, SphereResolution::default()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn flux_total_is_sum_of_faces() {
        let b = Polyhedron::exhaustion_box(4.0).unwrap();
        let m = polyhedral_mass(&conformal(1.0), &b, &QuadratureSpec::default()).unwrap();
        let s: f64 = m.per_face_flux.values().sum();
        assert_relative_eq!(m.flux_total, s, max_relative = 1e-12);
    }

    #[test]
    fn unit_square_flux_self_converges() {
        let b = Polyhedron::axis_box([0.0, 0.0, 1.0], [1.0, 1.0, 2.0]).unwrap();
        let f = &b.faces[0];
        let q = QuadratureSpec::default();
        let coarse = face_flux(&conformal(1.0), f, &q).unwrap().value[0];
        let fine_spec = QuadratureSpec {
            face_order: 12,
            rel_tol: 1e-12,
            ..q
        };
        let fine = face_flux(&conformal(1.0), f, &fine_spec).unwrap().value[0];
        assert_relative_eq!(coarse, fine, max_relative = 1e-8);
    }

    #[test]
    fn conformal_sphere_mass_closed_form() {
        // 𝕌(ν̄) is constant on geodesic spheres for radial profiles, giving
        // 32π m tanh³ r for τ' = 3.
        for r in [1.0f64, 3.0, 5.0] {
            let m = sphere_mass(&conformal(1.0), r, SphereResolution::default()).unwrap();
            assert_relative_eq!(m, 32.0 * PI * r.tanh().powi(3), max_relative = 1e-9);
        }
    }

    #[test]
    fn conformal_angle_term_vanishes() {
        let b = Polyhedron::exhaustion_box(4.0).unwrap();
        let t = theorem_rhs(&conformal(1.0), &b, &QuadratureSpec::default()).unwrap();
        assert!(t.angle_term.unwrap().abs() < 1e-12, "{t:?}");
        assert!(t.mean_curv_term.unwrap().abs() > 1.0);
    }

    #[test]
    fn face_identity_zero_and_quadratic() {
        let q = QuadratureSpec::default();
        let b = Polyhedron::axis_box([-1.0, -1.0, 0.5], [1.0, 1.0, 2.0]).unwrap();
        let f = &b.faces[4];
        assert_eq!(face_identity_residual(&MetricField::zero(), f, &q).unwrap(), 0.0);
        let r1 = face_identity_residual(&conformal(0.1), f, &q).unwrap();
        let r2 = face_identity_residual(&conformal(0.05), f, &q).unwrap();
        let ratio = r1 / r2;
        assert!((3.0..=5.0).contains(&ratio), "{r1} {r2} {ratio}");
    }

    #[test]
    fn tilted_rectangle_measure() {
        // x3 = z0 + t sinβ over x1 ∈ [0,1], t ∈ [0,w]:
        // ∫ x3^-2 dA = (1/z0 - 1/(z0 + w sinβ)) / sinβ.
        let (z0, w, beta) = (0.5f64, 3.0f64, 0.7f64);
        let (sb, cb) = beta.sin_cos();
        let vs = [
            Vec3::new(0.0, 0.0, z0),
            Vec3::new(1.0, 0.0, z0),
            Vec3::new(1.0, w * cb, z0 + w * sb),
            Vec3::new(0.0, w * cb, z0 + w * sb),
        ];
        let n = (vs[1] - vs[0]).cross(&(vs[3] - vs[0])).normalize();
        let face = Face {
            id: 0,
            plane: Plane::new(n, n.dot(&vs[0])).unwrap(),
            vertices: vs.iter().map(|v| Point::from_vec(*v).unwrap()).collect(),
            vertex_ids: vec![0, 1, 2, 3],
        };
        let est = integrate_face(&face, |p| Ok([1.0 / (p.x3() * p.x3())]), &QuadratureSpec::default()).unwrap();
        let exact = (1.0 / z0 - 1.0 / (z0 + w * sb)) / sb;
        assert_relative_eq!(est.value[0], exact, max_relative = 1e-10);
    }

    #[test]
    fn base_face_matches_radial_reference() {
        // Base face of cone(6, 0.1, 2), τ = 2, against
        // C ε^{2τ-3} ∫₀^ρ (s²+1)^{-2τ+1} s ds within a factor 3 with C = 2^{2τ-1}.
        let (eps, s, tau) = (0.1f64, 2.0, 2.0f64);
        let poly = crate::halfspace::cone_polyhedron(6, eps, s).unwrap();
        let q = QuadratureSpec::default();
        let got = error_integral_face(&poly.faces[0], tau, &q).unwrap();
        let rho = cone_radius(eps, s);
        // ∫₀^ρ (s²+1)^{-3} s ds = (1 - (ρ²+1)^{-2}) / 4
        let radial = (1.0 - (rho * rho + 1.0).powi(-2)) / 4.0;
        let reference = 2f64.powf(2.0 * tau - 1.0) * eps.powf(2.0 * tau - 3.0) * 2.0 * PI * radial;
        let r = got / reference;
        assert!((1.0 / 3.0..=3.0).contains(&r), "{got} {reference}");
    }

    #[test]
    fn vertical_edge_bound_closed_form() {
        // On the x3-axis cosh r = (z² + 1)/(2z); with τ = 2,
        // ∫ (2z/(z²+1))³ dz/z = 8 ∫ z²/(z²+1)³ dz.
        let a = Point::new(0.0, 0.0, 0.5).unwrap();
        let b = Point::new(0.0, 0.0, 2.0).unwrap();
        let got = segment_bound(&a, &b, 2.0, &QuadratureSpec::default()).unwrap();
        let anti = |z: f64| (z * (z * z - 1.0) / (z * z + 1.0).powi(2) + z.atan()) / 8.0;
        assert_relative_eq!(got, 8.0 * (anti(2.0) - anti(0.5)), max_relative = 1e-10);
    }
}
