//! The perturbation `e = g - b` and background covariant calculus.
//!
//! Tensors carry lowered indices in the Euclidean coordinate basis. Raising
//! with `b` multiplies by `x3²` per index; that factor is always written out.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfspace::{cosh_distance, Point, Vec3};

/// Symmetric 2-tensor `e_ij`, stored as `(11, 12, 13, 22, 23, 33)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2([f64; 6]);

#[inline]
fn slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => panic!("index out of range"),
    }
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2([0.0; 6]);

    pub fn from_components(c: [f64; 6]) -> Self {
        SymTensor2(c)
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        SymTensor2([d[0], 0.0, 0.0, d[1], 0.0, d[2]])
    }

    pub fn identity_scaled(s: f64) -> Self {
        Self::diagonal([s, s, s])
    }

    /// Symmetric part of a matrix.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let s = |i: usize, j: usize| 0.5 * (m[(i, j)] + m[(j, i)]);
        SymTensor2([m[(0, 0)], s(0, 1), s(0, 2), m[(1, 1)], s(1, 2), m[(2, 2)]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[slot(i, j)]
    }

    pub fn components(&self) -> [f64; 6] {
        self.0
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.get(i, j))
    }

    pub fn trace_euclidean(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    /// `e(u, v)`.
    #[inline]
    pub fn apply(&self, u: &Vec3, v: &Vec3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += u[i] * self.get(i, j) * v[j];
            }
        }
        s
    }

    /// `e(u, ·)` as a covector.
    pub fn contract(&self, u: &Vec3) -> Vec3 {
        self.to_matrix() * u
    }

    /// `ε_ij = x3² e_ij`, the components in a `b`-orthonormal frame.
    pub fn scaled(&self, x3: f64) -> SymTensor2 {
        *self * (x3 * x3)
    }

    /// `|e|_b`, computed as the Frobenius norm of the scaled components.
    pub fn norm_b(&self, x3: f64) -> f64 {
        let s = self.scaled(x3);
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += s.get(i, j).powi(2);
            }
        }
        acc.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2(std::array::from_fn(|k| self.0[k] - rhs.0[k]))
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, s: f64) -> SymTensor2 {
        SymTensor2(self.0.map(|c| c * s))
    }
}

/// Partial derivatives `∂_k e_ij`, indexed by `k`.
pub type Partials = [SymTensor2; 3];

/// Christoffel symbols `Γ^k_ij`, indexed `[k][i][j]`.
pub type Christoffel = [[[f64; 3]; 3]; 3];

/// Background Christoffel symbols of `b = x3^-2 δ`.
pub fn christoffel_bar(p: &Point) -> Christoffel {
    let w = 1.0 / p.x3();
    let mut g = [[[0.0; 3]; 3]; 3];
    g[2][0][0] = w;
    g[2][1][1] = w;
    g[2][2][2] = -w;
    g[0][0][2] = -w;
    g[0][2][0] = -w;
    g[1][1][2] = -w;
    g[1][2][1] = -w;
    g
}

/// Coordinate partials `∂_k b_ij = -2 x3^-3 δ_ij δ_k3`.
pub fn background_partials(p: &Point) -> Partials {
    let d = -2.0 / p.x3().powi(3);
    [SymTensor2::ZERO, SymTensor2::ZERO, SymTensor2::identity_scaled(d)]
}

/// A perturbation `e` of the hyperbolic metric: `g = b + e`.
///
/// Implementations must be pure functions of the point so that quadrature
/// workers can share them.
pub trait Perturbation: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Declared decay rate `τ` in `|e|_b = O(e^{-τ r})`.
    fn tau(&self) -> f64;

    fn value(&self, p: &Point) -> SymTensor2;

    /// Analytic `∂_k e_ij`, if available.
    fn partials(&self, _p: &Point) -> Option<Partials> {
        None
    }
}

/// Shared handle to a perturbation with checked evaluation.
#[derive(Debug, Clone)]
pub struct MetricField {
    inner: Arc<dyn Perturbation>,
}

/// Threshold on the smallest eigenvalue of `x3² g_ij`.
pub const MIN_SCALED_EIGENVALUE: f64 = 1e-10;

impl MetricField {
    pub fn new(p: impl Perturbation + 'static) -> Result<Self> {
        Self::from_arc(Arc::new(p))
    }

    pub fn from_arc(inner: Arc<dyn Perturbation>) -> Result<Self> {
        let tau = inner.tau();
        if !(tau > 1.5) {
            return Err(Error::InvalidParameter(format!(
                "decay rate tau must exceed 3/2, got {tau} for '{}'",
                inner.name()
            )));
        }
        Ok(MetricField { inner })
    }

    pub fn zero() -> Self {
        Self::new(Zero { tau: 3.0 }).expect("valid")
    }

    pub fn name(&self) -> &str {
        self.inner.name()
    }

    pub fn tau(&self) -> f64 {
        self.inner.tau()
    }

    pub fn perturbation(&self) -> &Arc<dyn Perturbation> {
        &self.inner
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.inner.partials(&Point::base()).is_some()
    }

    /// `e` at `p` without the positive-definiteness check.
    #[inline]
    pub fn e_unchecked(&self, p: &Point) -> SymTensor2 {
        self.inner.value(p)
    }

    /// `e` at `p`; errors if `g = b + e` is not positive definite there.
    pub fn evaluate_e(&self, p: &Point) -> Result<SymTensor2> {
        let e = self.inner.value(p);
        check_positive(p, &e)?;
        Ok(e)
    }

    /// `∂_k e_ij`, analytic if supplied, else central differences.
    pub fn evaluate_de(&self, p: &Point) -> Partials {
        match self.inner.partials(p) {
            Some(d) => d,
            None => fd_partials(&*self.inner, p),
        }
    }

    /// `tr_b e = x3² δ^{ij} e_ij`.
    pub fn trace_b_e(&self, p: &Point) -> f64 {
        trace_b(p, &self.inner.value(p))
    }

    /// `(div_b e)_j = b^{ik} ∇̄_i e_kj`.
    pub fn div_b_e(&self, p: &Point) -> Vec3 {
        div_b(p, &self.inner.value(p), &self.evaluate_de(p))
    }

    /// `∇̄_k e_ij`, indexed `[k][i][j]`.
    pub fn nabla_bar_e(&self, p: &Point) -> [[[f64; 3]; 3]; 3] {
        nabla_bar(p, &self.inner.value(p), &self.evaluate_de(p))
    }

    /// The field `m·e`, sharing the same evaluator.
    pub fn scaled(&self, m: f64) -> MetricField {
        MetricField {
            inner: Arc::new(Scaled {
                inner: self.inner.clone(),
                m,
                name: format!("{}*{m}", self.inner.name()),
            }),
        }
    }

    /// The same field with analytic partials hidden, forcing finite differences.
    pub fn without_partials(&self) -> MetricField {
        MetricField {
            inner: Arc::new(FdOnly(self.inner.clone())),
        }
    }
}

fn check_positive(p: &Point, e: &SymTensor2) -> Result<()> {
    if e.is_zero() {
        return Ok(());
    }
    let m = Matrix3::identity() + e.scaled(p.x3()).to_matrix();
    let min = m.symmetric_eigenvalues().min();
    if min > MIN_SCALED_EIGENVALUE {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            x1: p.x1(),
            x2: p.x2(),
            x3: p.x3(),
            eigenvalue: min,
        })
    }
}

/// Central-difference partials with step `1e-5·x3`.
pub fn fd_partials(f: &dyn Perturbation, p: &Point) -> Partials {
    let h = fd_step(p);
    std::array::from_fn(|k| {
        let mut plus = *p.coords();
        let mut minus = *p.coords();
        plus[k] += h;
        minus[k] -= h;
        let ep = f.value(&Point::from_vec(plus).expect("step keeps x3 > 0"));
        let em = f.value(&Point::from_vec(minus).expect("step keeps x3 > 0"));
        (ep - em) * (0.5 / h)
    })
}

/// Finite-difference step at `p`: the local hyperbolic length scale is `x3`.
#[inline]
pub fn fd_step(p: &Point) -> f64 {
    1e-5 * p.x3()
}

pub fn trace_b(p: &Point, e: &SymTensor2) -> f64 {
    p.x3() * p.x3() * e.trace_euclidean()
}

pub fn div_b(p: &Point, e: &SymTensor2, de: &Partials) -> Vec3 {
    let gam = christoffel_bar(p);
    let binv = p.x3() * p.x3();
    Vec3::from_fn(|j, _| {
        let mut s = 0.0;
        for i in 0..3 {
            let mut t = de[i].get(i, j);
            for l in 0..3 {
                t -= gam[l][i][i] * e.get(l, j) + gam[l][i][j] * e.get(i, l);
            }
            s += t;
        }
        binv * s
    })
}

pub fn nabla_bar(p: &Point, e: &SymTensor2, de: &Partials) -> [[[f64; 3]; 3]; 3] {
    let gam = christoffel_bar(p);
    std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut t = de[k].get(i, j);
                for l in 0..3 {
                    t -= gam[l][k][i] * e.get(l, j) + gam[l][k][j] * e.get(i, l);
                }
                t
            })
        })
    })
}

#[derive(Debug)]
struct Scaled {
    inner: Arc<dyn Perturbation>,
    m: f64,
    name: String,
}

impl Perturbation for Scaled {
    fn name(&self) -> &str {
        &self.name
    }
    fn tau(&self) -> f64 {
        self.inner.tau()
    }
    fn value(&self, p: &Point) -> SymTensor2 {
        self.inner.value(p) * self.m
    }
    fn partials(&self, p: &Point) -> Option<Partials> {
        self.inner.partials(p).map(|d| d.map(|t| t * self.m))
    }
}

#[derive(Debug)]
struct FdOnly(Arc<dyn Perturbation>);

impl Perturbation for FdOnly {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn tau(&self) -> f64 {
        self.0.tau()
    }
    fn value(&self, p: &Point) -> SymTensor2 {
        self.0.value(p)
    }
}

// ---------------------------------------------------------------------------
// Built-in families.

/// Gradient of `cosh r` in Euclidean coordinates.
fn grad_cosh(p: &Point) -> Vec3 {
    let x = p.coords();
    let z = x.z;
    Vec3::new(x.x / z, x.y / z, (z * z - x.x * x.x - x.y * x.y - 1.0) / (2.0 * z * z))
}

/// `e = 0`.
#[derive(Debug, Clone, Copy)]
pub struct Zero {
    pub tau: f64,
}

impl Perturbation for Zero {
    fn name(&self) -> &str {
        "zero"
    }
    fn tau(&self) -> f64 {
        self.tau
    }
    fn value(&self, _p: &Point) -> SymTensor2 {
        SymTensor2::ZERO
    }
    fn partials(&self, _p: &Point) -> Option<Partials> {
        Some([SymTensor2::ZERO; 3])
    }
}

/// `e_ij = m cosh^{-τ'} r · x3^-2 D_ij` for a constant diagonal `D`.
///
/// `D = I` is the conformal family `e = φ b`, `φ = m cosh^{-τ'} r`.
#[derive(Debug, Clone, Copy)]
pub struct RadialProfile {
    pub m: f64,
    pub tau_prime: f64,
    pub diag: [f64; 3],
    conformal: bool,
}

impl RadialProfile {
    pub fn conformal(m: f64, tau_prime: f64) -> Result<Self> {
        check_tau_prime(tau_prime)?;
        Ok(RadialProfile {
            m,
            tau_prime,
            diag: [1.0; 3],
            conformal: true,
        })
    }

    pub fn anisotropic(m: f64, tau_prime: f64, diag: [f64; 3]) -> Result<Self> {
        check_tau_prime(tau_prime)?;
        Ok(RadialProfile {
            m,
            tau_prime,
            diag,
            conformal: false,
        })
    }

    /// The conformal factor `φ = m cosh^{-τ'} r`.
    pub fn phi(&self, p: &Point) -> f64 {
        self.m * cosh_distance(p).powf(-self.tau_prime)
    }
}

fn check_tau_prime(tau_prime: f64) -> Result<()> {
    if tau_prime > 1.5 && tau_prime <= 6.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tau' must lie in (3/2, 6], got {tau_prime}"
        )))
    }
}

impl Perturbation for RadialProfile {
    fn name(&self) -> &str {
        if self.conformal {
            "conformal"
        } else {
            "anisotropic"
        }
    }
    fn tau(&self) -> f64 {
        self.tau_prime
    }
    fn value(&self, p: &Point) -> SymTensor2 {
        SymTensor2::diagonal(self.diag) * (self.phi(p) / (p.x3() * p.x3()))
    }
    fn partials(&self, p: &Point) -> Option<Partials> {
        let c = cosh_distance(p);
        let z = p.x3();
        let phi = self.m * c.powf(-self.tau_prime);
        let dphi = grad_cosh(p) * (-self.tau_prime * phi / c);
        // ∂_k (φ z^-2) = ∂_k φ z^-2 - 2 φ z^-3 δ_k3
        let d = SymTensor2::diagonal(self.diag);
        Some(std::array::from_fn(|k| {
            let mut s = dphi[k] / (z * z);
            if k == 2 {
                s -= 2.0 * phi / (z * z * z);
            }
            d * s
        }))
    }
}

/// `e = ψ b` with `ψ = A (1 - |p - c|²/R²)³` inside the Euclidean ball
/// `|p - c| < R` and zero outside; the cutoff is `C²`.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
    pub tau: f64,
}

impl Bump {
    pub fn new(center: [f64; 3], radius: f64, amplitude: f64, tau: f64) -> Result<Self> {
        if !(radius > 0.0) || !(center[2] - radius > 0.0) {
            return Err(Error::InvalidParameter(
                "bump ball must have positive radius and lie in x3 > 0".into(),
            ));
        }
        Ok(Bump {
            center,
            radius,
            amplitude,
            tau,
        })
    }

    fn q(&self, p: &Point) -> (f64, Vec3) {
        let d = p.coords() - Vec3::from(self.center);
        (d.norm_squared() / (self.radius * self.radius), d)
    }

    /// `ψ` at `p`.
    pub fn psi(&self, p: &Point) -> f64 {
        let (q, _) = self.q(p);
        if q >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - q).powi(3)
        }
    }

    /// Whether a point lies in the closed support ball.
    pub fn supports(&self, p: &Vec3) -> bool {
        (p - Vec3::from(self.center)).norm() <= self.radius
    }
}

impl Perturbation for Bump {
    fn name(&self) -> &str {
        "bump"
    }
    fn tau(&self) -> f64 {
        self.tau
    }
    fn value(&self, p: &Point) -> SymTensor2 {
        let psi = self.psi(p);
        if psi == 0.0 {
            return SymTensor2::ZERO;
        }
        SymTensor2::identity_scaled(psi / (p.x3() * p.x3()))
    }
    fn partials(&self, p: &Point) -> Option<Partials> {
        let (q, d) = self.q(p);
        if q >= 1.0 {
            return Some([SymTensor2::ZERO; 3]);
        }
        let z = p.x3();
        let psi = self.amplitude * (1.0 - q).powi(3);
        let dpsi = d * (-6.0 * self.amplitude * (1.0 - q).powi(2) / (self.radius * self.radius));
        Some(std::array::from_fn(|k| {
            let mut s = dpsi[k] / (z * z);
            if k == 2 {
                s -= 2.0 * psi / (z * z * z);
            }
            SymTensor2::identity_scaled(s)
        }))
    }
}

/// Structured selection of a built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Zero {
        #[serde(default = "default_tau")]
        tau: f64,
    },
    Conformal {
        m: f64,
        tau_prime: f64,
    },
    Bump {
        center: [f64; 3],
        radius: f64,
        amplitude: f64,
        #[serde(default = "default_tau")]
        tau: f64,
    },
    Anisotropic {
        m: f64,
        tau_prime: f64,
        diag: [f64; 3],
    },
}

fn default_tau() -> f64 {
    3.0
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Zero { .. } => "zero",
            FamilySpec::Conformal { .. } => "conformal",
            FamilySpec::Bump { .. } => "bump",
            FamilySpec::Anisotropic { .. } => "anisotropic",
        }
    }

    /// Override the amplitude parameter, where the family has one.
    pub fn with_mass_param(mut self, value: f64) -> Self {
        match &mut self {
            FamilySpec::Conformal { m, .. } | FamilySpec::Anisotropic { m, .. } => *m = value,
            FamilySpec::Bump { amplitude, .. } => *amplitude = value,
            FamilySpec::Zero { .. } => {}
        }
        self
    }

    /// Override the decay exponent of the family.
    pub fn with_tau_prime(mut self, value: f64) -> Self {
        match &mut self {
            FamilySpec::Conformal { tau_prime, .. } | FamilySpec::Anisotropic { tau_prime, .. } => *tau_prime = value,
            FamilySpec::Bump { tau, .. } | FamilySpec::Zero { tau } => *tau = value,
        }
        self
    }
}

/// Instantiate a built-in family.
pub fn builtin_family(spec: &FamilySpec) -> Result<MetricField> {
    match *spec {
        FamilySpec::Zero { tau } => MetricField::new(Zero { tau }),
        FamilySpec::Conformal { m, tau_prime } => MetricField::new(RadialProfile::conformal(m, tau_prime)?),
        FamilySpec::Bump {
            center,
            radius,
            amplitude,
            tau,
        } => MetricField::new(Bump::new(center, radius, amplitude, tau)?),
        FamilySpec::Anisotropic { m, tau_prime, diag } => {
            MetricField::new(RadialProfile::anisotropic(m, tau_prime, diag)?)
        }
    }
}

// ---------------------------------------------------------------------------
// Decay verification.

/// Sampled decay of `|e|_b` and `|∇̄e|_b` on geodesic spheres about `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub field: String,
    pub tau: f64,
    pub radii: Vec<f64>,
    /// `sup |e|_b` on each sphere.
    pub sup_norm: Vec<f64>,
    /// `sup |e|_b · e^{τ r}`.
    pub ratio: Vec<f64>,
    pub grad_sup_norm: Vec<f64>,
    pub grad_ratio: Vec<f64>,
    /// `sup |∇̄∇̄e|_b · e^{τ r}`, only when analytic partials exist. Only the
    /// two largest radii enter the pass decision.
    pub hess_ratio: Option<Vec<f64>>,
    pub pass: bool,
}

/// Point on the geodesic sphere of radius `r` about `o` at polar angle
/// `theta` (from +x3) and azimuth `phi`.
pub fn sphere_point(r: f64, theta: f64, phi: f64) -> Vec3 {
    let (c, s) = (r.cosh(), r.sinh());
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(s * st * cp, s * st * sp, c + s * ct)
}

/// Non-increasing within a factor of two between consecutive radii.
fn trend_ok(r: &[f64]) -> bool {
    r.windows(2).all(|w| w[1] <= 2.0 * w[0])
}

/// Sample `|e|_b e^{τr}` and `|∇̄e|_b e^{τr}` on geodesic spheres.
pub fn decay_check(field: &MetricField, radii: &[f64]) -> Result<DecayReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    let tau = field.tau();
    let analytic = field.has_analytic_partials();
    let (nt, np) = (24, 48);
    let mut report = DecayReport {
        field: field.name().to_string(),
        tau,
        radii: radii.to_vec(),
        sup_norm: vec![],
        ratio: vec![],
        grad_sup_norm: vec![],
        grad_ratio: vec![],
        hess_ratio: analytic.then(Vec::new),
        pass: true,
    };
    for &r in radii {
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for it in 0..nt {
            // Include both poles: the south pole is where x3 is smallest.
            let theta = std::f64::consts::PI * it as f64 / (nt - 1) as f64;
            for ip in 0..np {
                let phi = 2.0 * std::f64::consts::PI * ip as f64 / np as f64;
                let p = Point::from_vec(sphere_point(r, theta, phi))?;
                let e = field.evaluate_e(&p)?;
                s0 = s0.max(e.norm_b(p.x3()));
                let ne = field.nabla_bar_e(&p);
                s1 = s1.max(norm3_b(&ne, p.x3()));
                if analytic {
                    s2 = s2.max(hessian_norm_b(field, &p));
                }
                if it == 0 || it == nt - 1 {
                    break;
                }
            }
        }
        let w = (tau * r).exp();
        report.sup_norm.push(s0);
        report.ratio.push(s0 * w);
        report.grad_sup_norm.push(s1);
        report.grad_ratio.push(s1 * w);
        if let Some(h) = report.hess_ratio.as_mut() {
            h.push(s2 * w);
        }
    }
    report.pass = trend_ok(&report.ratio)
        && trend_ok(&report.grad_ratio)
        && report
            .hess_ratio
            .as_deref()
            .is_none_or(|h| h.len() < 2 || trend_ok(&h[h.len() - 2..]));
    Ok(report)
}

fn norm3_b(t: &[[[f64; 3]; 3]; 3], x3: f64) -> f64 {
    let s: f64 = t.iter().flatten().flatten().map(|c| c * c).sum();
    s.sqrt() * x3.powi(3)
}

/// `|∇̄∇̄e|_b`, differentiating the analytic `∇̄e` by central differences.
fn hessian_norm_b(field: &MetricField, p: &Point) -> f64 {
    let h = fd_step(p);
    let t = field.nabla_bar_e(p);
    let dt: [[[[f64; 3]; 3]; 3]; 3] = std::array::from_fn(|l| {
        let mut a = *p.coords();
        let mut b = *p.coords();
        a[l] += h;
        b[l] -= h;
        let ta = field.nabla_bar_e(&Point::from_vec(a).expect("x3 > 0"));
        let tb = field.nabla_bar_e(&Point::from_vec(b).expect("x3 > 0"));
        std::array::from_fn(|k| {
            std::array::from_fn(|i| std::array::from_fn(|j| (ta[k][i][j] - tb[k][i][j]) / (2.0 * h)))
        })
    });
    let gam = christoffel_bar(p);
    let mut acc = 0.0;
    for l in 0..3 {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut v = dt[l][k][i][j];
                    for m in 0..3 {
                        v -= gam[m][l][k] * t[m][i][j] + gam[m][l][i] * t[k][m][j] + gam[m][l][j] * t[k][i][m];
                    }
                    acc += v * v;
                }
            }
        }
    }
    acc.sqrt() * p.x3().powi(4)
}
