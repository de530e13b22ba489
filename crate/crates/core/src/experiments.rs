//! Sweeps that exercise the mass identity, the cone decay estimates and the
//! sphere oracle. Every verdict in a report is recomputable from its rows.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfspace::{cone_polyhedron, Polyhedron};
use crate::mass::{cone_error_integrals, polyhedral_mass, sphere_mass, theorem_rhs, SphereResolution};
use crate::metric::{builtin_family, decay_check, DecayReport, FamilySpec, MetricField};
use crate::quadrature::QuadratureSpec;

/// Polyhedron family and its size schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolyhedronFamily {
    /// Boxes `[-L, L]² × [1/L, L]`.
    Box { sizes: Vec<f64> },
    /// Cones over a regular `n`-gon with `ρ = ε^-s`.
    Cone { n: usize, s: f64, eps: Vec<f64> },
}

impl PolyhedronFamily {
    /// Sweep parameter of each member, in schedule order.
    pub fn schedule(&self) -> &[f64] {
        match self {
            PolyhedronFamily::Box { sizes } => sizes,
            PolyhedronFamily::Cone { eps, .. } => eps,
        }
    }

    pub fn build(&self, param: f64) -> Result<Polyhedron> {
        match self {
            PolyhedronFamily::Box { .. } => Polyhedron::exhaustion_box(param),
            PolyhedronFamily::Cone { n, s, .. } => cone_polyhedron(*n, param, *s),
        }
    }

    fn validate(&self) -> Result<()> {
        let sched = self.schedule();
        if sched.is_empty() {
            return Err(Error::InvalidParameter("polyhedron schedule is empty".into()));
        }
        let ok = match self {
            PolyhedronFamily::Box { sizes } => sizes.iter().all(|l| *l > 1.0) && sizes.windows(2).all(|w| w[1] > w[0]),
            PolyhedronFamily::Cone { eps, .. } => {
                eps.iter().all(|e| *e > 0.0 && *e < 1.0) && eps.windows(2).all(|w| w[1] < w[0])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "box sizes must exceed 1 and increase; cone eps must lie in (0, 1) and decrease".into(),
            ))
        }
    }
}

/// Geodesic-sphere oracle settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereSettings {
    pub radii: Vec<f64>,
    pub polar: usize,
    pub azimuthal: usize,
}

impl Default for SphereSettings {
    fn default() -> Self {
        let res = SphereResolution::default();
        SphereSettings {
            radii: vec![4.0, 5.0, 6.0],
            polar: res.polar,
            azimuthal: res.azimuthal,
        }
    }
}

impl SphereSettings {
    pub fn resolution(&self) -> SphereResolution {
        SphereResolution {
            polar: self.polar,
            azimuthal: self.azimuthal,
        }
    }
}

/// Full configuration of an experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FamilySpec,
    pub polyhedron: PolyhedronFamily,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub sphere: SphereSettings,
    /// Relative tolerance between the last sphere and last polyhedron mass.
    #[serde(default = "default_compare_tol")]
    pub compare_tol: f64,
    #[serde(default = "default_decay_radii")]
    pub decay_radii: Vec<f64>,
    /// Seed for randomised property suites.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSettings,
}

/// Where reports go and whether charts are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: PathBuf::from("out"),
            svg: false,
        }
    }
}

fn default_compare_tol() -> f64 {
    0.02
}

fn default_decay_radii() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0, 5.0]
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.polyhedron.validate()?;
        self.quadrature.validate()?;
        if !(self.compare_tol > 0.0) {
            return Err(Error::InvalidParameter("compare_tol must be > 0".into()));
        }
        if self.sphere.radii.is_empty() || self.sphere.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "sphere radii must be non-empty and increasing".into(),
            ));
        }
        builtin_family(&self.field).map(|_| ())
    }

    pub fn metric(&self) -> Result<MetricField> {
        builtin_family(&self.field)
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

// ---------------------------------------------------------------------------
// Mass identity sweep.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub param: f64,
    pub flux: f64,
    pub mean_curv_term: f64,
    pub angle_term: f64,
    pub residual: f64,
    pub face_bound: f64,
    pub edge_bound: f64,
    pub quad_error: f64,
}

impl TheoremRow {
    /// `|residual| / (face_bound + edge_bound)`.
    pub fn constant(&self) -> f64 {
        let b = self.face_bound + self.edge_bound;
        if b > 0.0 {
            self.residual.abs() / b
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub field: String,
    pub tau: f64,
    pub rows: Vec<TheoremRow>,
    /// `K = 2 · |residual₀| / bound₀`.
    pub k: f64,
    /// Per-row `|residual| / bound`.
    pub k_values: Vec<f64>,
    /// `max / min` of the nonzero per-row constants.
    pub k_spread: f64,
    pub residual_decreasing: bool,
    pub within_bound: bool,
    pub pass: bool,
    /// Rows violating the bound, by index.
    pub failures: Vec<usize>,
}

/// Evaluate both sides of the mass identity over the schedule.
pub fn run_theorem_check(cfg: &ExperimentConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    let field = cfg.metric()?;
    let mut rows = Vec::new();
    for &param in cfg.polyhedron.schedule() {
        let poly = cfg.polyhedron.build(param)?;
        let b = theorem_rhs(&field, &poly, &cfg.quadrature)?;
        rows.push(TheoremRow {
            param,
            flux: b.flux_total,
            mean_curv_term: b.mean_curv_term.unwrap_or(0.0),
            angle_term: b.angle_term.unwrap_or(0.0),
            residual: b.residual.unwrap_or(0.0),
            face_bound: b.face_error_bound.unwrap_or(0.0),
            edge_bound: b.edge_error_bound.unwrap_or(0.0),
            quad_error: b.diagnostics.estimated_error,
        });
    }
    Ok(assess_theorem(field.name(), field.tau(), rows))
}

/// Verdicts of a mass identity sweep, from its rows alone.
pub fn assess_theorem(field: &str, tau: f64, rows: Vec<TheoremRow>) -> TheoremReport {
    let k_values: Vec<f64> = rows.iter().map(TheoremRow::constant).collect();
    let k = 2.0 * k_values.first().copied().unwrap_or(0.0);
    let failures: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.residual.abs() > k * (r.face_bound + r.edge_bound) + r.quad_error)
        .map(|(i, _)| i)
        .collect();
    let nz: Vec<f64> = k_values.iter().copied().filter(|k| *k > 0.0).collect();
    let k_spread = if nz.is_empty() {
        1.0
    } else {
        nz.iter().copied().fold(0.0, f64::max) / nz.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let residuals: Vec<f64> = rows.iter().map(|r| r.residual.abs()).collect();
    let residual_decreasing = strictly_decreasing(&residuals);
    let within_bound = failures.is_empty();
    TheoremReport {
        field: field.to_string(),
        tau,
        pass: residual_decreasing && within_bound && k_spread < 2.0,
        rows,
        k,
        k_values,
        k_spread,
        residual_decreasing,
        within_bound,
        failures,
    }
}

// ---------------------------------------------------------------------------
// Cone decay sweep.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeRow {
    pub eps: f64,
    pub rho: f64,
    pub e1: f64,
    pub e2: f64,
    pub base: f64,
    pub side: f64,
    pub e1_top: f64,
    /// `max{Cερ, 1} ε^{2τ-1}` with the fitted `C`.
    pub e1_top_bound: f64,
    /// `E₂` divided by its transverse profile integral.
    pub e2_prefactor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub n: usize,
    pub s: f64,
    pub tau: f64,
    pub rows: Vec<ConeRow>,
    /// Columns `e1, e2, base, side` strictly decreasing.
    pub decreasing: [bool; 4],
    /// Last value below a quarter of the first, per column.
    pub quartered: [bool; 4],
    /// Least-squares slope of `ln E₂` against `ln ε`.
    pub e2_exponent: f64,
    /// The predicted slope `2τ - 2`.
    pub e2_expected: f64,
    /// Slope of the profile-normalised `E₂`.
    pub e2_prefactor_exponent: f64,
    pub e2_exponent_ok: bool,
    /// Fitted constant of the top-segment bound.
    pub top_constant: f64,
    pub top_bound_ok: bool,
    pub pass: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Error integrals of the cone family along a decreasing `ε` schedule.
pub fn run_cone_sweep(cfg: &ExperimentConfig) -> Result<ConeReport> {
    cfg.validate()?;
    let PolyhedronFamily::Cone { n, s, ref eps } = cfg.polyhedron else {
        return Err(Error::InvalidParameter(
            "cone sweep needs a cone polyhedron family".into(),
        ));
    };
    let tau = cfg.metric()?.tau();
    if s >= 2.0 * tau {
        return Err(Error::InvalidParameter(format!(
            "base radius exponent s = {s} violates rho(eps) = o(eps^(-2 tau)); need s < 2 tau = {}",
            2.0 * tau
        )));
    }
    let mut raw = Vec::new();
    for &e in eps {
        raw.push(cone_error_integrals(n, e, s, tau, &cfg.quadrature)?);
    }
    let rows = raw
        .iter()
        .map(|c| ConeRow {
            eps: c.eps,
            rho: c.rho,
            e1: c.e1,
            e2: c.e2,
            base: c.base,
            side: c.side,
            e1_top: c.e1_top,
            e1_top_bound: 0.0,
            e2_prefactor: c.e2 / c.e2_profile,
        })
        .collect();
    Ok(assess_cone(n, s, tau, rows))
}

/// Verdicts of a cone sweep, from its rows alone; fills `e1_top_bound`.
pub fn assess_cone(n: usize, s: f64, tau: f64, mut rows: Vec<ConeRow>) -> ConeReport {
    let cols: [Vec<f64>; 4] = [
        rows.iter().map(|r| r.e1).collect(),
        rows.iter().map(|r| r.e2).collect(),
        rows.iter().map(|r| r.base).collect(),
        rows.iter().map(|r| r.side).collect(),
    ];
    let decreasing = std::array::from_fn(|k| strictly_decreasing(&cols[k]));
    let quartered = std::array::from_fn(|k| match (cols[k].first(), cols[k].last()) {
        (Some(a), Some(b)) if cols[k].len() > 1 => *b < *a / 4.0,
        _ => false,
    });
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let (e2_exponent, e2_prefactor_exponent) = if rows.len() > 1 {
        (
            log_slope(&eps, &cols[1]),
            log_slope(&eps, &rows.iter().map(|r| r.e2_prefactor).collect::<Vec<_>>()),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let e2_expected = 2.0 * tau - 2.0;
    let e2_exponent_ok = (e2_exponent - e2_expected).abs() <= 0.5;

    let top = |c: f64, r: &ConeRow| (c * r.eps * r.rho).max(1.0) * r.eps.powf(2.0 * tau - 1.0);
    let top_constant = rows
        .first()
        .map(|r| r.e1_top / (r.eps * r.rho * r.eps.powf(2.0 * tau - 1.0)))
        .unwrap_or(0.0);
    for r in rows.iter_mut() {
        r.e1_top_bound = top(top_constant, r);
    }
    let top_bound_ok = rows.iter().all(|r| r.e1_top <= 10.0 * r.e1_top_bound);
    ConeReport {
        n,
        s,
        tau,
        pass: decreasing.iter().all(|b| *b) && quartered.iter().all(|b| *b) && e2_exponent_ok && top_bound_ok,
        rows,
        decreasing,
        quartered,
        e2_exponent,
        e2_expected,
        e2_prefactor_exponent,
        e2_exponent_ok,
        top_constant,
        top_bound_ok,
    }
}

// ---------------------------------------------------------------------------
// Sphere oracle comparison.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereRow {
    pub radius: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRow {
    pub param: f64,
    pub flux: f64,
    pub quad_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub field: String,
    pub spheres: Vec<SphereRow>,
    pub polyhedra: Vec<PolyRow>,
    /// Largest pairwise relative difference among sphere masses.
    pub sphere_spread: f64,
    /// Relative difference between the last polyhedron and last sphere.
    pub final_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Sphere masses and polyhedral masses over their schedules.
pub fn run_mass_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    cfg.validate()?;
    let field = cfg.metric()?;
    let mut spheres = Vec::new();
    for &r in &cfg.sphere.radii {
        spheres.push(SphereRow {
            radius: r,
            mass: sphere_mass(&field, r, cfg.sphere.resolution())?,
        });
    }
    let mut polyhedra = Vec::new();
    for &param in cfg.polyhedron.schedule() {
        let poly = cfg.polyhedron.build(param)?;
        let m = polyhedral_mass(&field, &poly, &cfg.quadrature)?;
        polyhedra.push(PolyRow {
            param,
            flux: m.flux_total,
            quad_error: m.diagnostics.estimated_error,
        });
    }
    Ok(assess_compare(field.name(), cfg.compare_tol, spheres, polyhedra))
}

pub fn assess_compare(field: &str, tolerance: f64, spheres: Vec<SphereRow>, polyhedra: Vec<PolyRow>) -> CompareReport {
    let mut spread: f64 = 0.0;
    for (i, a) in spheres.iter().enumerate() {
        for b in &spheres[i + 1..] {
            spread = spread.max(relative_gap(a.mass, b.mass));
        }
    }
    let final_gap = match (spheres.last(), polyhedra.last()) {
        (Some(s), Some(p)) => relative_gap(s.mass, p.flux),
        _ => f64::INFINITY,
    };
    CompareReport {
        field: field.to_string(),
        sphere_spread: spread,
        final_gap,
        tolerance,
        pass: final_gap <= tolerance,
        spheres,
        polyhedra,
    }
}

/// Decay verification of the configured field.
pub fn run_decay_check(cfg: &ExperimentConfig) -> Result<DecayReport> {
    let field = cfg.metric()?;
    decay_check(&field, &cfg.decay_radii)
}
