//! Adaptive Gauss quadrature over convex planar polygons and segments.
//!
//! Every integrand in this crate decays with `cosh r`, so the initial mesh
//! is graded geometrically toward a focus point (the point of the domain
//! closest to `o`). Refinement is then global: the cell with the largest
//! two-level difference, weighted by `(x3_top / x3_min)^γ`, is split next.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfspace::{Face, Point, Vec3};

/// Quadrature configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss points per direction on triangles (exact to degree `2n-1`).
    pub face_order: usize,
    /// Gauss–Legendre points per edge segment.
    pub edge_order: usize,
    /// Maximum adaptive refinement levels below the graded initial mesh.
    pub max_depth: usize,
    pub rel_tol: f64,
    /// Absolute floor added to the relative tolerance.
    pub abs_tol: f64,
    /// Grading exponent `γ` toward small `x3`.
    pub grading: f64,
    /// Initial cells stop shrinking toward the focus at `focus_floor · x3`.
    pub focus_floor: f64,
    /// Hard cap on the number of active cells.
    pub max_cells: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            face_order: 6,
            edge_order: 8,
            max_depth: 8,
            rel_tol: 1e-8,
            abs_tol: 1e-15,
            grading: 2.0,
            focus_floor: 0.25,
            max_cells: 40_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.face_order < 1 || self.edge_order < 1 {
            return Err(Error::InvalidParameter("quadrature orders must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerance must be > 0".into()));
        }
        if !(self.grading >= 0.0) || !(self.focus_floor > 0.0) || self.max_cells == 0 {
            return Err(Error::InvalidParameter("invalid grading parameters".into()));
        }
        Ok(())
    }

    /// Same spec with the relative tolerance replaced.
    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }
}

/// Result of an adaptive integration of an `N`-component integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    /// Sum of two-level differences, per component.
    pub error: [f64; N],
    /// `∫|f|` per component; tolerances are relative to it.
    pub magnitude: [f64; N],
    pub converged: bool,
    pub cells: usize,
    pub max_level: usize,
}

impl<const N: usize> Estimate<N> {
    fn zero() -> Self {
        Estimate {
            value: [0.0; N],
            error: [0.0; N],
            magnitude: [0.0; N],
            converged: true,
            cells: 0,
            max_level: 0,
        }
    }

    /// Error out if the estimate did not meet its tolerance.
    pub fn checked(self, spec: &QuadratureSpec) -> Result<Self> {
        if self.converged {
            return Ok(self);
        }
        let (k, err) = self
            .error
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, e)| (k, *e))
            .unwrap_or((0, 0.0));
        Err(Error::QuadratureNonConvergence {
            error: err,
            tolerance: spec.rel_tol * self.magnitude[k] + spec.abs_tol,
            cells: self.cells,
        })
    }

    /// Accumulate another estimate (fixed order is the caller's job).
    pub fn add(&mut self, other: &Estimate<N>) {
        for k in 0..N {
            self.value[k] += other.value[k];
            self.error[k] += other.error[k];
            self.magnitude[k] += other.magnitude[k];
        }
        self.converged &= other.converged;
        self.cells += other.cells;
        self.max_level = self.max_level.max(other.max_level);
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Estimate<N>>) -> Estimate<N> {
        let mut acc = Estimate::zero();
        for e in items {
            acc.add(e);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Rules.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Value and magnitude of a rule application.
type Pair<const N: usize> = [[f64; N]; 2];

/// Gauss–Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Collapsed-coordinate product rule on the reference triangle
/// `{ξ, η ≥ 0, ξ + η ≤ 1}`: `n + 1` points in the collapsed direction and
/// `n` across, exact for total degree `2n - 1`. Weights sum to `1/2`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub nodes: Vec<(f64, f64, f64)>,
}

impl TriangleRule {
    pub fn new(order: usize) -> Self {
        let outer = gauss_legendre_unit(order + 1);
        let inner = gauss_legendre_unit(order);
        let mut nodes = Vec::with_capacity(outer.len() * inner.len());
        for &(u, wu) in &outer {
            for &(v, wv) in &inner {
                nodes.push((u, (1.0 - u) * v, wu * wv * (1.0 - u)));
            }
        }
        TriangleRule { nodes }
    }

    /// Integrate over the triangle with Euclidean area measure.
    pub fn apply<const N: usize>(&self, tri: &[Vec3; 3], f: &impl Fn(&Point) -> Result<[f64; N]>) -> Result<[f64; N]> {
        Ok(self.apply_with_magnitude(tri, f)?[0])
    }

    /// `[∫f, ∫|f|]` over the triangle.
    fn apply_with_magnitude<const N: usize>(
        &self,
        tri: &[Vec3; 3],
        f: &impl Fn(&Point) -> Result<[f64; N]>,
    ) -> Result<Pair<N>> {
        let d1 = tri[1] - tri[0];
        let d2 = tri[2] - tri[0];
        let jac = d1.cross(&d2).norm();
        let mut acc = [[0.0; N]; 2];
        for &(xi, eta, w) in &self.nodes {
            let p = Point::from_vec(tri[0] + d1 * xi + d2 * eta)?;
            let v = f(&p)?;
            for k in 0..N {
                acc[0][k] += w * jac * v[k];
                acc[1][k] += w * jac * v[k].abs();
            }
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Triangulation.

/// Fan triangulation of a convex polygon from its vertex average.
pub fn triangulate(face: &Face) -> Vec<[Vec3; 3]> {
    triangulate_from(face, &face.centroid())
}

/// Fan triangulation from an interior root.
pub fn triangulate_from(face: &Face, root: &Vec3) -> Vec<[Vec3; 3]> {
    let vs: Vec<Vec3> = face.vertices.iter().map(|p| *p.coords()).collect();
    fan(&vs, root)
}

fn fan(vs: &[Vec3], root: &Vec3) -> Vec<[Vec3; 3]> {
    let n = vs.len();
    (0..n)
        .map(|i| [*root, vs[i], vs[(i + 1) % n]])
        .filter(|t| (t[1] - t[0]).cross(&(t[2] - t[0])).norm() > 0.0)
        .collect()
}

fn tri_area(t: &[Vec3; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()
}

fn split4(t: &[Vec3; 3]) -> [[Vec3; 3]; 4] {
    let m01 = 0.5 * (t[0] + t[1]);
    let m12 = 0.5 * (t[1] + t[2]);
    let m20 = 0.5 * (t[2] + t[0]);
    [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]
}

fn tri_diameter(t: &[Vec3; 3]) -> f64 {
    (t[0] - t[1]).norm().max((t[1] - t[2]).norm()).max((t[2] - t[0]).norm())
}

/// Lower bound on the distance from `q` to the triangle.
fn tri_distance_lb(t: &[Vec3; 3], q: &Vec3) -> f64 {
    let c = (t[0] + t[1] + t[2]) / 3.0;
    let r = t.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
    ((q - c).norm() - r).max(0.0)
}

/// Split triangles geometrically toward `focus` until they are no larger
/// than their distance to it, or below `floor`.
fn grade_toward(tris: Vec<[Vec3; 3]>, focus: &Vec3, floor: f64, max_cells: usize) -> Vec<[Vec3; 3]> {
    let mut out = Vec::new();
    let mut stack = tris;
    stack.reverse();
    while let Some(t) = stack.pop() {
        let d = tri_diameter(&t);
        if d > floor && d > tri_distance_lb(&t, focus) && out.len() + stack.len() < max_cells / 4 {
            let kids = split4(&t);
            for k in kids.into_iter().rev() {
                stack.push(k);
            }
        } else {
            out.push(t);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Adaptive driver shared by faces and edges.

struct Cell<D, const N: usize> {
    level: usize,
    fine: Pair<N>,
    err: [f64; N],
    kids: Vec<(D, Pair<N>)>,
    weight: f64,
}

#[derive(PartialEq)]
struct Prio(f64, usize);

impl Eq for Prio {}

impl PartialOrd for Prio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prio {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Domain-specific pieces of the adaptive loop.
trait Domain: Sized + Clone {
    fn split(&self) -> Vec<Self>;
    fn min_x3(&self) -> f64;
}

impl Domain for [Vec3; 3] {
    fn split(&self) -> Vec<Self> {
        split4(self).to_vec()
    }
    fn min_x3(&self) -> f64 {
        self[0].z.min(self[1].z).min(self[2].z)
    }
}

#[derive(Clone, Copy)]
struct Seg {
    a: Vec3,
    b: Vec3,
}

impl Domain for Seg {
    fn split(&self) -> Vec<Self> {
        let m = 0.5 * (self.a + self.b);
        vec![Seg { a: self.a, b: m }, Seg { a: m, b: self.b }]
    }
    fn min_x3(&self) -> f64 {
        self.a.z.min(self.b.z)
    }
}

fn adaptive<D: Domain, const N: usize>(
    initial: Vec<D>,
    rule: &impl Fn(&D) -> Result<Pair<N>>,
    spec: &QuadratureSpec,
    x3_top: f64,
) -> Result<Estimate<N>> {
    let build = |dom: D, coarse: [f64; N], level: usize| -> Result<Cell<D, N>> {
        let mut kids = Vec::new();
        let mut fine = [[0.0; N]; 2];
        for k in dom.split() {
            let q = rule(&k)?;
            for c in 0..N {
                fine[0][c] += q[0][c];
                fine[1][c] += q[1][c];
            }
            kids.push((k, q));
        }
        let err = std::array::from_fn(|c| (fine[0][c] - coarse[c]).abs());
        let weight = (x3_top / dom.min_x3()).powf(spec.grading);
        Ok(Cell {
            level,
            fine,
            err,
            kids,
            weight,
        })
    };

    let mut cells: Vec<Option<Cell<D, N>>> = Vec::new();
    for d in initial {
        let q = rule(&d)?;
        cells.push(Some(build(d, q[0], 0)?));
    }
    // [value, magnitude, error] summed in cell order.
    let totals = |cells: &[Option<Cell<D, N>>]| {
        let mut t = [[0.0; N]; 3];
        for c in cells.iter().flatten() {
            for k in 0..N {
                t[0][k] += c.fine[0][k];
                t[1][k] += c.fine[1][k];
                t[2][k] += c.err[k];
            }
        }
        t
    };
    let done = |t: &[[f64; N]; 3]| (0..N).all(|k| t[2][k] <= spec.rel_tol * t[1][k] + spec.abs_tol);
    let t0 = totals(&cells);
    let scale: [f64; N] = std::array::from_fn(|k| t0[1][k].max(spec.abs_tol / spec.rel_tol).max(f64::MIN_POSITIVE));
    let prio = |c: &Cell<D, N>| {
        let r = (0..N).map(|k| c.err[k] / scale[k]).fold(0.0, f64::max);
        r * c.weight
    };

    let mut heap = BinaryHeap::new();
    for (i, c) in cells.iter().enumerate() {
        heap.push(Prio(prio(c.as_ref().unwrap()), i));
    }
    let mut t = t0;
    let mut active = cells.len();
    let mut since_resum = 0usize;
    while !done(&t) && active < spec.max_cells {
        let Some(Prio(p, i)) = heap.pop() else { break };
        if p == 0.0 {
            // Everything left has zero two-level difference.
            break;
        }
        if cells[i].as_ref().unwrap().level >= spec.max_depth {
            continue;
        }
        let cell = cells[i].take().unwrap();
        active += cell.kids.len() - 1;
        for k in 0..N {
            t[0][k] -= cell.fine[0][k];
            t[1][k] -= cell.fine[1][k];
            t[2][k] -= cell.err[k];
        }
        for (dom, q) in cell.kids {
            let c = build(dom, q[0], cell.level + 1)?;
            for k in 0..N {
                t[0][k] += c.fine[0][k];
                t[1][k] += c.fine[1][k];
                t[2][k] += c.err[k];
            }
            heap.push(Prio(prio(&c), cells.len()));
            cells.push(Some(c));
        }
        since_resum += 1;
        if since_resum >= 256 {
            t = totals(&cells);
            since_resum = 0;
        }
    }
    let t = totals(&cells);
    let live: Vec<&Cell<D, N>> = cells.iter().flatten().collect();
    Ok(Estimate {
        value: t[0],
        error: t[2],
        magnitude: t[1],
        converged: done(&t),
        cells: live.len(),
        max_level: live.iter().map(|c| c.level).max().unwrap_or(0),
    })
}

// ---------------------------------------------------------------------------
// Public entry points.

/// Integrate over a convex polygon with Euclidean area measure.
///
/// `root` is the fan root (the vertex average when `None`); `focus` is a
/// point of the polygon toward which the initial mesh is graded.
pub fn integrate_polygon<const N: usize>(
    face: &Face,
    f: impl Fn(&Point) -> Result<[f64; N]>,
    spec: &QuadratureSpec,
    root: Option<Vec3>,
    focus: Option<&Point>,
) -> Result<Estimate<N>> {
    spec.validate()?;
    let root = root.unwrap_or_else(|| face.centroid());
    let mut tris = triangulate_from(face, &root);
    if let Some(fp) = focus {
        tris = grade_toward(tris, fp.coords(), spec.focus_floor * fp.x3(), spec.max_cells);
    }
    let rule = TriangleRule::new(spec.face_order);
    let x3_top = face.vertices.iter().map(|v| v.x3()).fold(0.0, f64::max);
    adaptive(tris, &|t: &[Vec3; 3]| rule.apply_with_magnitude(t, &f), spec, x3_top)
}

/// Integrate over a face, graded toward the point of the face nearest `o`.
pub fn integrate_face<const N: usize>(
    face: &Face,
    f: impl Fn(&Point) -> Result<[f64; N]>,
    spec: &QuadratureSpec,
) -> Result<Estimate<N>> {
    let focus = face.closest_point_to_base();
    integrate_polygon(face, f, spec, None, Some(&focus))
}

/// Integrate along the segment `[a, b]` with Euclidean length measure,
/// graded toward `focus` (a point on the segment) when given.
pub fn integrate_segment<const N: usize>(
    a: &Point,
    b: &Point,
    f: impl Fn(&Point) -> Result<[f64; N]>,
    spec: &QuadratureSpec,
    focus: Option<&Point>,
) -> Result<Estimate<N>> {
    spec.validate()?;
    let gl = gauss_legendre_unit(spec.edge_order);
    let rule = |s: &Seg| -> Result<Pair<N>> {
        let d = s.b - s.a;
        let len = d.norm();
        let mut acc = [[0.0; N]; 2];
        for &(t, w) in &gl {
            let v = f(&Point::from_vec(s.a + d * t)?)?;
            for k in 0..N {
                acc[0][k] += w * len * v[k];
                acc[1][k] += w * len * v[k].abs();
            }
        }
        Ok(acc)
    };
    let mut segs = vec![Seg {
        a: *a.coords(),
        b: *b.coords(),
    }];
    if let Some(fp) = focus {
        let floor = spec.focus_floor * fp.x3();
        let mut out = Vec::new();
        while let Some(s) = segs.pop() {
            let len = (s.b - s.a).norm();
            let dist = seg_distance(&s, fp.coords());
            if len > floor && len > dist && out.len() + segs.len() < spec.max_cells / 2 {
                let mut halves = s.split();
                segs.push(halves.pop().unwrap());
                segs.push(halves.pop().unwrap());
            } else {
                out.push(s);
            }
        }
        out.sort_by(|x, y| {
            let key = |s: &Seg| (s.a - a.coords()).norm();
            key(x).total_cmp(&key(y))
        });
        segs = out;
    }
    let x3_top = a.x3().max(b.x3());
    adaptive(segs, &rule, spec, x3_top)
}

fn seg_distance(s: &Seg, q: &Vec3) -> f64 {
    let d = s.b - s.a;
    let t = ((q - s.a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (s.a + d * t - q).norm()
}

/// Integrate along a segment, graded toward its point nearest `o`.
pub fn integrate_edge<const N: usize>(
    a: &Point,
    b: &Point,
    f: impl Fn(&Point) -> Result<[f64; N]>,
    spec: &QuadratureSpec,
) -> Result<Estimate<N>> {
    let focus = Point::from_vec(crate::halfspace::closest_on_segment(a.coords(), b.coords()))?;
    integrate_segment(a, b, f, spec, Some(&focus))
}

/// Area of a polygon's fan triangles (for tests and diagnostics).
pub fn fan_areas(face: &Face, root: &Vec3) -> Vec<f64> {
    triangulate_from(face, root).iter().map(tri_area).collect()
}
