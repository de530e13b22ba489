//! Background geometry of the upper half-space model `b = (x3)^-2 δ`.
//!
//! Polyhedra here are bounded by pieces of Euclidean planes. Every such face
//! is umbilic for `b`, so the normal, second fundamental form and mean
//! curvature all have closed forms in terms of the Euclidean unit normal `a`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Base point `o = (0, 0, 1)` from which distances are measured.
pub const BASE_POINT: [f64; 3] = [0.0, 0.0, 1.0];

/// Default lower bound on `sin ᾱ` for polyhedra built for the mass formula.
pub const DEFAULT_MIN_SIN: f64 = 0.05;

/// Relative tolerance for coplanarity and orientation checks.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// A point of the open upper half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point(Vec3);

impl Point {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        Self::from_vec(Vec3::new(x1, x2, x3))
    }

    pub fn from_vec(v: Vec3) -> Result<Self> {
        if v.z > 0.0 && v.iter().all(|c| c.is_finite()) {
            Ok(Point(v))
        } else {
            Err(Error::NonpositivePoint { x3: v.z })
        }
    }

    /// Base point `o`.
    pub fn base() -> Self {
        Point(Vec3::from(BASE_POINT))
    }

    #[inline]
    pub fn coords(&self) -> &Vec3 {
        &self.0
    }

    #[inline]
    pub fn x1(&self) -> f64 {
        self.0.x
    }

    #[inline]
    pub fn x2(&self) -> f64 {
        self.0.y
    }

    #[inline]
    pub fn x3(&self) -> f64 {
        self.0.z
    }

    pub fn cosh_distance(&self) -> f64 {
        cosh_distance(self)
    }

    pub fn static_potential(&self) -> f64 {
        static_potential(self)
    }
}

/// `cosh r` where `r` is the hyperbolic distance from `o = (0,0,1)`.
#[inline]
pub fn cosh_distance(p: &Point) -> f64 {
    let x = p.coords();
    0.5 * (x.norm_squared() + 1.0) / x.z
}

/// Static potential `V = 1/x3`.
#[inline]
pub fn static_potential(p: &Point) -> f64 {
    1.0 / p.x3()
}

/// Background metric components `b_ij = x3^-2 δ_ij` as the scalar factor.
#[inline]
pub fn conformal_factor(p: &Point) -> f64 {
    1.0 / (p.x3() * p.x3())
}

/// `b(u, v)` for coordinate vectors at `p`.
#[inline]
pub fn b_inner(p: &Point, u: &Vec3, v: &Vec3) -> f64 {
    u.dot(v) * conformal_factor(p)
}

/// The Euclidean plane `{p : a·p = d}` with unit normal `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0) || !offset.is_finite() {
            return Err(Error::InvalidParameter("plane normal must be nonzero".into()));
        }
        Ok(Plane {
            normal: normal / n,
            offset: offset / n,
        })
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Height at which the plane meets the x3-axis, if it does.
    pub fn axis_height(&self) -> Option<f64> {
        (self.normal.z.abs() > 0.0).then(|| self.offset / self.normal.z)
    }
}

/// A convex planar face with counterclockwise vertex loop seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: usize,
    pub plane: Plane,
    pub vertices: Vec<Point>,
    pub vertex_ids: Vec<usize>,
}

impl Face {
    /// Euclidean outward unit normal `a`.
    #[inline]
    pub fn normal(&self) -> &Vec3 {
        &self.plane.normal
    }

    /// Vertex average, used as the fan root for triangulation.
    pub fn centroid(&self) -> Vec3 {
        let sum = self.vertices.iter().fold(Vec3::zeros(), |acc, v| acc + v.coords());
        sum / self.vertices.len() as f64
    }

    pub fn euclidean_area(&self) -> f64 {
        polygon_area_vector(&self.vertices).norm()
    }

    /// Consecutive vertex pairs of the loop.
    pub fn boundary(&self) -> impl Iterator<Item = (&Point, &Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % n]))
    }

    /// Two Euclidean-orthonormal tangents `(t1, t2)` with `t1 × t2 = a`.
    pub fn tangents(&self) -> (Vec3, Vec3) {
        let a = self.normal();
        let d = self.vertices[1].coords() - self.vertices[0].coords();
        let t1 = (d - a * a.dot(&d)).normalize();
        let t2 = a.cross(&t1);
        (t1, t2)
    }

    /// `ν̄ = x3 a`, the outward `b`-unit normal at `p`.
    pub fn outward_normal_bar(&self, p: &Point) -> Vec3 {
        self.normal() * p.x3()
    }

    /// `∂_ν̄ V = -a³ V`.
    pub fn normal_derivative_v(&self, p: &Point) -> f64 {
        -self.normal().z * static_potential(p)
    }

    /// `Ā(t_α, t_β) = -a³ b(t_α, t_β)` for the supplied tangent basis.
    pub fn background_second_fundamental_form(&self, p: &Point, t1: &Vec3, t2: &Vec3) -> Matrix2<f64> {
        let a3 = self.normal().z;
        let basis = [t1, t2];
        Matrix2::from_fn(|i, j| -a3 * b_inner(p, basis[i], basis[j]))
    }

    /// `H̄ = -2a³`, constant on the face.
    pub fn background_mean_curvature(&self) -> f64 {
        -2.0 * self.normal().z
    }

    /// Point of the face closest to `o`, i.e. the minimiser of `cosh r`.
    ///
    /// `cosh r` is convex on the half-space, so a Newton solve on the plane
    /// followed by a search along the boundary finds the global minimum.
    pub fn closest_point_to_base(&self) -> Point {
        let (t1, t2) = self.tangents();
        let c = self.centroid();
        let to_plane = |u: f64, v: f64| c + t1 * u + t2 * v;

        let mut uv = nalgebra::Vector2::zeros();
        let mut ok = true;
        for _ in 0..100 {
            let p = to_plane(uv.x, uv.y);
            if p.z <= 0.0 {
                ok = false;
                break;
            }
            let (grad, hess) = cosh_grad_hess(&p);
            let jt = nalgebra::Matrix2x3::from_rows(&[t1.transpose(), t2.transpose()]);
            let g2 = jt * grad;
            let h2 = jt * hess * jt.transpose();
            let Some(step) = h2.lu().solve(&g2) else {
                ok = false;
                break;
            };
            // Backtrack to stay inside the half-space and decrease cosh r.
            let f0 = cosh_of(&p);
            let mut t = 1.0;
            let mut next = uv - step * t;
            loop {
                let q = to_plane(next.x, next.y);
                if q.z > 0.0 && cosh_of(&q) <= f0 + 1e-15 * f0.abs() {
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    break;
                }
                next = uv - step * t;
            }
            let moved = (next - uv).norm();
            uv = next;
            if moved <= 1e-14 * (1.0 + uv.norm()) {
                break;
            }
        }
        if ok {
            let p = to_plane(uv.x, uv.y);
            if p.z > 0.0 && self.contains_in_plane(&p) {
                return Point(p);
            }
        }
        self.boundary()
            .map(|(p, q)| closest_on_segment(p.coords(), q.coords()))
            .min_by(|x, y| cosh_of(x).total_cmp(&cosh_of(y)))
            .map(Point)
            .expect("face has vertices")
    }

    /// Whether a point of the face plane lies inside the (convex) loop.
    pub fn contains_in_plane(&self, p: &Vec3) -> bool {
        let a = self.normal();
        let scale = self.scale();
        self.boundary().all(|(u, v)| {
            let d = v.coords() - u.coords();
            d.cross(&(p - u.coords())).dot(a) >= -GEOMETRY_TOL * scale * scale
        })
    }

    /// Largest absolute coordinate of the face, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.vertices
            .iter()
            .flat_map(|v| v.coords().iter().map(|c| c.abs()))
            .fold(1.0, f64::max)
    }
}

fn cosh_of(p: &Vec3) -> f64 {
    0.5 * (p.norm_squared() + 1.0) / p.z
}

/// Gradient and Hessian of `cosh r` in Euclidean coordinates.
fn cosh_grad_hess(p: &Vec3) -> (Vec3, nalgebra::Matrix3<f64>) {
    let z = p.z;
    let s = p.norm_squared() + 1.0;
    let e3 = Vec3::z();
    let grad = p / z - e3 * (0.5 * s / (z * z));
    let hess = nalgebra::Matrix3::identity() / z - (p * e3.transpose() + e3 * p.transpose()) / (z * z)
        + e3 * e3.transpose() * (s / (z * z * z));
    (grad, hess)
}

/// Minimiser of `cosh r` on a segment, in closed form. Along the segment
/// `cosh r` is a quadratic over a linear function, so the stationary points
/// solve a quadratic.
pub fn closest_on_segment(p: &Vec3, q: &Vec3) -> Vec3 {
    let d = q - p;
    let a = d.norm_squared();
    let b = 2.0 * p.dot(&d);
    let c = p.norm_squared() + 1.0;
    // (2at + b)(p3 + t d3) - (at² + bt + c) d3 = 0
    let (qa, qb, qc) = (a * d.z, 2.0 * a * p.z, b * p.z - c * d.z);
    let mut cands = vec![0.0, 1.0];
    if a > 0.0 {
        if qa.abs() <= 1e-14 * qb.abs() {
            cands.push(-qc / qb);
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s = -0.5 * (qb + qb.signum() * disc.sqrt());
                if s != 0.0 {
                    cands.push(s / qa);
                    cands.push(qc / s);
                }
            }
        }
    }
    let t = cands
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .min_by(|x, y| cosh_of(&(p + d * *x)).total_cmp(&cosh_of(&(p + d * *y))))
        .unwrap_or(0.0);
    p + d * t
}

/// An edge shared by two faces. Face `A` traverses it from `endpoints[0]` to
/// `endpoints[1]`, face `B` in the opposite direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub endpoints: [Point; 2],
    pub vertex_ids: [usize; 2],
    pub face_ids: [usize; 2],
    /// Euclidean outward normals of faces `A` and `B`.
    pub normals: [Vec3; 2],
}

impl Edge {
    pub fn direction(&self) -> Vec3 {
        (self.endpoints[1].coords() - self.endpoints[0].coords()).normalize()
    }

    pub fn euclidean_length(&self) -> f64 {
        (self.endpoints[1].coords() - self.endpoints[0].coords()).norm()
    }

    /// Interior dihedral angle `ᾱ = π - arccos(a_A · a_B)`, the same for `b`
    /// and `δ` by conformality.
    pub fn background_dihedral_angle(&self) -> f64 {
        background_dihedral_angle(self)
    }
}

pub fn background_dihedral_angle(e: &Edge) -> f64 {
    let c = e.normals[0].dot(&e.normals[1]).clamp(-1.0, 1.0);
    PI - c.acos()
}

/// A closed convex polyhedron with Euclidean-planar faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub vertices: Vec<Point>,
    pub faces: Vec<Face>,
    pub edges: Vec<Edge>,
}

/// Options for [`Polyhedron::from_indexed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Reject edges with `sin ᾱ < min_sin`. Zero only rejects parallel faces.
    pub min_sin: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            min_sin: DEFAULT_MIN_SIN,
        }
    }
}

/// On-disk polyhedron: shared vertex list and faces as index loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedronDoc {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

impl Polyhedron {
    /// Build from a vertex list and counterclockwise (seen from outside)
    /// index loops, checking every invariant.
    pub fn from_indexed(vertices: &[[f64; 3]], faces: &[Vec<usize>], opts: BuildOptions) -> Result<Self> {
        let points = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| Point::new(v[0], v[1], v[2]).map_err(|_| Error::NonpositiveHeight { vertex: i, x3: v[2] }))
            .collect::<Result<Vec<_>>>()?;

        let scale = points
            .iter()
            .flat_map(|p| p.coords().iter().map(|c| c.abs()))
            .fold(1.0, f64::max);

        let mut built = Vec::with_capacity(faces.len());
        for (fid, lp) in faces.iter().enumerate() {
            if lp.len() < 3 {
                return Err(Error::DegenerateFace {
                    face: fid,
                    reason: "fewer than three vertices",
                });
            }
            let verts = lp
                .iter()
                .map(|&i| points.get(i).copied().ok_or(Error::VertexIndex { face: fid, index: i }))
                .collect::<Result<Vec<_>>>()?;
            built.push(make_face(fid, verts, lp.clone(), scale)?);
        }

        // Directed edge bookkeeping: key (min, max) -> [(face, from, to)].
        let mut uses: BTreeMap<(usize, usize), Vec<(usize, usize, usize)>> = BTreeMap::new();
        for f in &built {
            let n = f.vertex_ids.len();
            for k in 0..n {
                let (i, j) = (f.vertex_ids[k], f.vertex_ids[(k + 1) % n]);
                uses.entry((i.min(j), i.max(j))).or_default().push((f.id, i, j));
            }
        }
        let mut edges = Vec::with_capacity(uses.len());
        for (key, list) in &uses {
            if list.len() != 2 {
                return Err(Error::OpenBoundary {
                    edge: *key,
                    count: list.len(),
                });
            }
            let (fa, i, j) = list[0];
            let (fb, i2, j2) = list[1];
            if (i2, j2) != (j, i) {
                return Err(Error::InconsistentOrientation {
                    what: format!(
                        "edge ({}, {}) traversed in the same direction by faces {fa} and {fb}",
                        key.0, key.1
                    ),
                });
            }
            let eid = edges.len();
            edges.push(Edge {
                id: eid,
                endpoints: [points[i], points[j]],
                vertex_ids: [i, j],
                face_ids: [fa, fb],
                normals: [built[fa].plane.normal, built[fb].plane.normal],
            });
        }

        let center = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords()) / points.len() as f64;
        for f in &built {
            if f.normal().dot(&(f.centroid() - center)) <= 0.0 {
                return Err(Error::InconsistentOrientation {
                    what: format!("face {} (normal points inward)", f.id),
                });
            }
        }

        for e in &edges {
            let c = e.normals[0].dot(&e.normals[1]);
            let sin = (1.0 - c * c).max(0.0).sqrt();
            if sin < opts.min_sin || c.abs() >= 1.0 - 1e-15 {
                return Err(Error::DegenerateAngle {
                    edge: e.id,
                    sin,
                    min_sin: opts.min_sin,
                });
            }
        }

        Ok(Polyhedron {
            vertices: points,
            faces: built,
            edges,
        })
    }

    pub fn from_doc(doc: &PolyhedronDoc, opts: BuildOptions) -> Result<Self> {
        Self::from_indexed(&doc.vertices, &doc.faces, opts)
    }

    pub fn to_doc(&self) -> PolyhedronDoc {
        PolyhedronDoc {
            vertices: self.vertices.iter().map(|p| [p.x1(), p.x2(), p.x3()]).collect(),
            faces: self.faces.iter().map(|f| f.vertex_ids.clone()).collect(),
        }
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn axis_box(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        let v = |i: usize| {
            [
                if i & 1 == 0 { lo[0] } else { hi[0] },
                if i & 2 == 0 { lo[1] } else { hi[1] },
                if i & 4 == 0 { lo[2] } else { hi[2] },
            ]
        };
        let vertices: Vec<[f64; 3]> = (0..8).map(v).collect();
        let faces = vec![
            vec![0, 2, 3, 1], // bottom, a = -e3
            vec![4, 5, 7, 6], // top
            vec![0, 1, 5, 4], // y = lo
            vec![2, 6, 7, 3], // y = hi
            vec![0, 4, 6, 2], // x = lo
            vec![1, 3, 7, 5], // x = hi
        ];
        Self::from_indexed(&vertices, &faces, BuildOptions::default())
    }

    /// The box `[-L, L]² × [1/L, L]`, which exhausts the half-space as `L → ∞`.
    pub fn exhaustion_box(size: f64) -> Result<Self> {
        if !(size > 1.0) {
            return Err(Error::InvalidParameter(format!("box size must exceed 1, got {size}")));
        }
        Self::axis_box([-size, -size, 1.0 / size], [size, size, size])
    }

    pub fn face(&self, id: usize) -> &Face {
        &self.faces[id]
    }

    /// Edges bounding a face, in no particular order.
    pub fn face_edges(&self, face: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.face_ids.contains(&face))
    }
}

/// Build from explicit vertex loops; shared vertices must be bitwise equal.
pub fn build_polyhedron(loops: &[Vec<[f64; 3]>], opts: BuildOptions) -> Result<Polyhedron> {
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces = Vec::with_capacity(loops.len());
    for lp in loops {
        let idx = lp
            .iter()
            .map(|v| match vertices.iter().position(|w| w == v) {
                Some(i) => i,
                None => {
                    vertices.push(*v);
                    vertices.len() - 1
                }
            })
            .collect();
        faces.push(idx);
    }
    Polyhedron::from_indexed(&vertices, &faces, opts)
}

/// Cone over a regular `n`-gon of circumradius `ρ = ε^-s` on the horosphere
/// `{x3 = ε}` with apex `(0, 0, 1/ε)`.
///
/// Base vertices sit at angles `(2k+1)π/n`, so base edge 0 is
/// `{x = ρ cos(π/n)}`. Side faces are nearly flat for small `ε`, so only
/// exactly degenerate angles are rejected here.
pub fn cone_polyhedron(n: usize, eps: f64, s: f64) -> Result<Polyhedron> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("cone needs n >= 3, got {n}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("cone needs 0 < eps < 1, got {eps}")));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("cone needs s > 0, got {s}")));
    }
    let rho = eps.powf(-s);
    let mut vertices: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let phi = (2 * k + 1) as f64 * PI / n as f64;
            [rho * phi.cos(), rho * phi.sin(), eps]
        })
        .collect();
    vertices.push([0.0, 0.0, 1.0 / eps]);
    let apex = n;
    // Base seen from below is clockwise in the (x, y) plane.
    let mut faces = vec![(0..n).rev().collect::<Vec<_>>()];
    for k in 0..n {
        faces.push(vec![k, (k + 1) % n, apex]);
    }
    Polyhedron::from_indexed(&vertices, &faces, BuildOptions { min_sin: 0.0 })
}

/// Circumradius `ρ(ε) = ε^-s` of the cone base.
pub fn cone_radius(eps: f64, s: f64) -> f64 {
    eps.powf(-s)
}

fn polygon_area_vector(vs: &[Point]) -> Vec3 {
    // Newell's method.
    let n = vs.len();
    let mut acc = Vec3::zeros();
    for i in 0..n {
        acc += vs[i].coords().cross(vs[(i + 1) % n].coords());
    }
    acc * 0.5
}

fn make_face(id: usize, vertices: Vec<Point>, vertex_ids: Vec<usize>, scale: f64) -> Result<Face> {
    // Center before Newell to avoid cancellation on far-out faces.
    let c = vertices.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords()) / vertices.len() as f64;
    let n = vertices.len();
    let mut area = Vec3::zeros();
    for i in 0..n {
        let p = vertices[i].coords() - c;
        let q = vertices[(i + 1) % n].coords() - c;
        area += p.cross(&q);
    }
    area *= 0.5;
    let norm = area.norm();
    let extent = vertices.iter().map(|v| (v.coords() - c).norm()).fold(0.0, f64::max);
    if !(norm > GEOMETRY_TOL * extent * extent) || norm == 0.0 {
        return Err(Error::DegenerateFace {
            face: id,
            reason: "zero area",
        });
    }
    let a = area / norm;
    let plane = Plane {
        normal: a,
        offset: a.dot(&c),
    };
    let tol = GEOMETRY_TOL * scale;
    for v in &vertices {
        let dev = plane.signed_distance(v.coords()).abs();
        if dev > tol {
            return Err(Error::NonPlanar {
                face: id,
                deviation: dev,
            });
        }
    }
    for i in 0..n {
        let p = vertices[i].coords();
        let q = vertices[(i + 1) % n].coords();
        let r = vertices[(i + 2) % n].coords();
        let turn = (q - p).cross(&(r - q)).dot(&a);
        if turn <= -tol * extent {
            return Err(Error::NonConvex { face: id });
        }
    }
    Ok(Face {
        id,
        plane,
        vertices,
        vertex_ids,
    })
}
