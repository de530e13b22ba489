//! Geometry of planar faces under the perturbed metric `g = b + e`.
//!
//! Faces are flat in coordinates, so with constant Euclidean tangents
//! `t_α` the second fundamental form reduces to
//! `A(t_α, t_β) = -g(ν, ∇_{t_α} t_β) = -a_k Γ^k_ij t_α^i t_β^j / |a|_{g^-1}`,
//! which needs only the Christoffel symbols of `g` at the point.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3};

use crate::error::{Error, Result};
use crate::halfspace::{Edge, Face, Point, Vec3};
use crate::metric::{background_partials, christoffel_bar, Christoffel, MetricField, Partials};

/// Euclidean-orthonormal frame `(t1, t2, a)` adapted to a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub face: usize,
    pub t1: Vec3,
    pub t2: Vec3,
    pub normal: Vec3,
}

impl FaceFrame {
    pub fn new(face: &Face) -> Self {
        let (t1, t2) = face.tangents();
        FaceFrame {
            face: face.id,
            t1,
            t2,
            normal: *face.normal(),
        }
    }

    pub fn tangents(&self) -> [Vec3; 2] {
        [self.t1, self.t2]
    }
}

/// `g`, `g^-1` and the Christoffel symbols of `g` at one point.
#[derive(Debug, Clone)]
pub struct LocalMetric {
    pub x3: f64,
    pub g: Matrix3<f64>,
    pub g_inv: Matrix3<f64>,
    pub christoffel: Christoffel,
}

impl LocalMetric {
    /// Assemble from the field; the Christoffels come from `∂b + ∂e`.
    pub fn at(field: &MetricField, p: &Point) -> Result<Self> {
        let e = field.evaluate_e(p)?;
        let de = field.evaluate_de(p);
        Ok(Self::from_parts(p, &e.to_matrix(), &de))
    }

    /// The background metric `b` alone, with closed-form Christoffels.
    pub fn background(p: &Point) -> Self {
        let z = p.x3();
        LocalMetric {
            x3: z,
            g: Matrix3::identity() / (z * z),
            g_inv: Matrix3::identity() * (z * z),
            christoffel: christoffel_bar(p),
        }
    }

    fn from_parts(p: &Point, e: &Matrix3<f64>, de: &Partials) -> Self {
        let z = p.x3();
        // Invert on Euclidean-scaled components x3² g = I + x3² e.
        let scaled = Matrix3::identity() + e * (z * z);
        let scaled_inv = scaled.try_inverse().expect("positive definite metric is invertible");
        let g = scaled / (z * z);
        let g_inv = scaled_inv * (z * z);
        let db = background_partials(p);
        let dg: [Matrix3<f64>; 3] = std::array::from_fn(|k| (db[k] + de[k]).to_matrix());
        let christoffel = std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut s = 0.0;
                    for l in 0..3 {
                        s += g_inv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                    }
                    0.5 * s
                })
            })
        });
        LocalMetric {
            x3: z,
            g,
            g_inv,
            christoffel,
        }
    }

    pub fn inner(&self, u: &Vec3, v: &Vec3) -> f64 {
        (u.transpose() * self.g * v)[0]
    }

    /// `g^{ij} a_j / sqrt(g^{kl} a_k a_l)` for a covector `a`.
    pub fn unit_normal(&self, a: &Vec3) -> Vec3 {
        let raised = self.g_inv * a;
        raised / a.dot(&raised).sqrt()
    }

    /// `Γ(u, v)^k = Γ^k_ij u^i v^j`.
    pub fn gamma(&self, u: &Vec3, v: &Vec3) -> Vec3 {
        Vec3::from_fn(|k, _| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += self.christoffel[k][i][j] * u[i] * v[j];
                }
            }
            s
        })
    }

    /// Second fundamental form of the plane with covector normal `a`, in the
    /// tangent basis `ts`, with the outward convention `A(Y,Z) = g(∇_Y ν, Z)`.
    pub fn second_fundamental_form(&self, a: &Vec3, ts: &[Vec3; 2]) -> Matrix2<f64> {
        let n = a.dot(&(self.g_inv * a)).sqrt();
        Matrix2::from_fn(|al, be| -a.dot(&self.gamma(&ts[al], &ts[be])) / n)
    }

    /// Induced metric on the plane in the tangent basis `ts`.
    pub fn induced(&self, ts: &[Vec3; 2]) -> Matrix2<f64> {
        Matrix2::from_fn(|al, be| self.inner(&ts[al], &ts[be]))
    }

    /// Mean curvature `h^{αβ} A_αβ`.
    pub fn mean_curvature(&self, a: &Vec3, ts: &[Vec3; 2]) -> f64 {
        let h = self.induced(ts);
        let h_inv = h.try_inverse().expect("induced metric is definite");
        (h_inv * self.second_fundamental_form(a, ts)).trace()
    }
}

/// Outward `g`-unit normal of `f` at `p`.
pub fn g_unit_normal(field: &MetricField, f: &Face, p: &Point) -> Result<Vec3> {
    let e = field.evaluate_e(p)?;
    let z = p.x3();
    let scaled = Matrix3::identity() + e.to_matrix() * (z * z);
    let inv = scaled.try_inverse().ok_or(Error::NotPositiveDefinite {
        x1: p.x1(),
        x2: p.x2(),
        x3: z,
        eigenvalue: 0.0,
    })?;
    let raised = inv * f.normal();
    // g^{-1} a / |a|_{g^-1} with g^-1 = x3² (I + x3² e)^-1
    Ok(raised * (z / f.normal().dot(&raised).sqrt()))
}

/// Second fundamental form of `f` under `g` in the face frame.
pub fn second_fundamental_form_g(field: &MetricField, f: &Face, p: &Point) -> Result<Matrix2<f64>> {
    let fr = FaceFrame::new(f);
    Ok(LocalMetric::at(field, p)?.second_fundamental_form(f.normal(), &fr.tangents()))
}

/// Mean curvature `H` of `f` under `g` at `p`.
pub fn mean_curvature_g(field: &MetricField, f: &Face, p: &Point) -> Result<f64> {
    let fr = FaceFrame::new(f);
    Ok(LocalMetric::at(field, p)?.mean_curvature(f.normal(), &fr.tangents()))
}

/// Tolerance on `|cos α| - 1` before clamping becomes an error.
pub const COS_CLAMP_TOL: f64 = 1e-12;

/// `cos θ = g(ν_A, ν_B)` for Euclidean face normals `a`, `b`.
pub fn normal_cosine(field: &MetricField, a: &Vec3, b: &Vec3, p: &Point) -> Result<f64> {
    let e = field.evaluate_e(p)?;
    let z = p.x3();
    if e.is_zero() {
        return Ok(a.dot(b));
    }
    let scaled = Matrix3::identity() + e.to_matrix() * (z * z);
    let inv = scaled.try_inverse().expect("positive definite metric is invertible");
    let (ia, ib) = (inv * a, inv * b);
    Ok(a.dot(&ib) / (a.dot(&ia) * b.dot(&ib)).sqrt())
}

/// Interior dihedral angle `α = π - arccos g(ν_A, ν_B)` along `edge` at `p`.
pub fn dihedral_angle_g(field: &MetricField, edge: &Edge, p: &Point) -> Result<f64> {
    let c = normal_cosine(field, &edge.normals[0], &edge.normals[1], p)?;
    if c.abs() > 1.0 + COS_CLAMP_TOL {
        return Err(Error::AngleOutOfRange(c));
    }
    Ok(PI - c.clamp(-1.0, 1.0).acos())
}

/// Angle deficit `α - ᾱ` along `edge` at `p`.
pub fn dihedral_deficit(field: &MetricField, edge: &Edge, p: &Point) -> Result<f64> {
    let c = normal_cosine(field, &edge.normals[0], &edge.normals[1], p)?;
    if c.abs() > 1.0 + COS_CLAMP_TOL {
        return Err(Error::AngleOutOfRange(c));
    }
    let cb = edge.normals[0].dot(&edge.normals[1]).clamp(-1.0, 1.0);
    Ok(cb.acos() - c.clamp(-1.0, 1.0).acos())
}

/// Which metric normalises the conormal.
#[derive(Debug, Clone, Copy)]
pub enum MetricChoice<'a> {
    Background,
    Perturbed(&'a MetricField),
}

/// In-plane direction of `f` perpendicular to the segment `[u, v]` and
/// pointing out of `f`. The loop is counterclockwise seen along `a`.
pub fn euclidean_conormal(f: &Face, u: &Vec3, v: &Vec3) -> Vec3 {
    let d = (v - u).normalize();
    let w = d.cross(f.normal());
    if w.dot(&(u - f.centroid())) >= 0.0 {
        w
    } else {
        -w
    }
}

/// Unit conormal to `edge` in `f` at `p`, tangent to `f`, orthogonal to the
/// edge and pointing out of `f`, normalised in the chosen metric.
pub fn edge_conormal(f: &Face, edge: &Edge, metric: MetricChoice<'_>, p: &Point) -> Result<Vec3> {
    let (u, v) = (edge.endpoints[0].coords(), edge.endpoints[1].coords());
    let w = euclidean_conormal(f, u, v);
    match metric {
        MetricChoice::Background => Ok(w * p.x3()),
        MetricChoice::Perturbed(field) => {
            let lm = LocalMetric::at(field, p)?;
            let d = (v - u).normalize();
            let n = w - d * (lm.inner(&w, &d) / lm.inner(&d, &d));
            Ok(n / lm.inner(&n, &n).sqrt())
        }
    }
}

/// Tangent field `X` with `b(X, t) = e(ν̄, t)` for every tangent `t` of `f`.
pub fn x_dual_field(field: &MetricField, f: &Face, p: &Point) -> Result<Vec3> {
    let e = field.evaluate_e(p)?;
    let fr = FaceFrame::new(f);
    let z = p.x3();
    let nu = f.outward_normal_bar(p);
    // In the Euclidean-orthonormal tangents, b restricted to F is x3^-2 I.
    Ok(fr
        .tangents()
        .iter()
        .fold(Vec3::zeros(), |acc, t| acc + t * (z * z * e.apply(&nu, t))))
}
