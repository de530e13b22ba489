//! CSV, JSON and SVG emission.

use std::fs;
use std::path::{Path, PathBuf};

use polymass_core::experiments::{CompareReport, ConeReport, ConeRow, TheoremReport, TheoremRow};
use polymass_core::{DecayReport, ExperimentConfig};
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, Series};
use crate::CliError;

/// A flat CSV row with a fixed column order.
pub trait Row: Serialize {
    const COLUMNS: &'static [&'static str];
}

impl Row for TheoremRow {
    const COLUMNS: &'static [&'static str] = &[
        "param",
        "flux",
        "mean_curv_term",
        "angle_term",
        "residual",
        "face_bound",
        "edge_bound",
        "quad_error",
    ];
}

impl Row for ConeRow {
    const COLUMNS: &'static [&'static str] = &[
        "eps",
        "rho",
        "e1",
        "e2",
        "base",
        "side",
        "e1_top",
        "e1_top_bound",
        "e2_prefactor",
    ];
}

/// One mass value from a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    /// `sphere` or `polyhedron`.
    pub kind: String,
    /// Sphere radius or polyhedron schedule parameter.
    pub param: f64,
    pub mass: f64,
    pub quad_error: f64,
}

impl Row for MassRow {
    const COLUMNS: &'static [&'static str] = &["kind", "param", "mass", "quad_error"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    pub sup_norm: f64,
    pub ratio: f64,
    pub grad_sup_norm: f64,
    pub grad_ratio: f64,
    /// Empty when the field has no analytic second derivatives.
    pub hess_ratio: Option<f64>,
}

impl Row for DecayRow {
    const COLUMNS: &'static [&'static str] = &[
        "radius",
        "sup_norm",
        "ratio",
        "grad_sup_norm",
        "grad_ratio",
        "hess_ratio",
    ];
}

pub fn mass_rows(r: &CompareReport) -> Vec<MassRow> {
    let spheres = r.spheres.iter().map(|s| MassRow {
        kind: "sphere".into(),
        param: s.radius,
        mass: s.mass,
        quad_error: 0.0,
    });
    let polys = r.polyhedra.iter().map(|p| MassRow {
        kind: "polyhedron".into(),
        param: p.param,
        mass: p.flux,
        quad_error: p.quad_error,
    });
    spheres.chain(polys).collect()
}

pub fn decay_rows(r: &DecayReport) -> Vec<DecayRow> {
    (0..r.radii.len())
        .map(|i| DecayRow {
            radius: r.radii[i],
            sup_norm: r.sup_norm[i],
            ratio: r.ratio[i],
            grad_sup_norm: r.grad_sup_norm[i],
            grad_ratio: r.grad_ratio[i],
            hess_ratio: r.hess_ratio.as_ref().map(|h| h[i]),
        })
        .collect()
}

/// Header line always, then one line per row.
pub fn csv_string<R: Row>(rows: &[R]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(R::COLUMNS).map_err(CliError::Csv)?;
    for r in rows {
        w.serialize(r).map_err(CliError::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// JSON document written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc<R> {
    pub command: String,
    pub config: ExperimentConfig,
    pub report: R,
}

impl<R> ReportDoc<R> {
    pub fn new(command: &str, config: &ExperimentConfig, report: R) -> Self {
        ReportDoc {
            command: command.to_string(),
            config: config.clone(),
            report,
        }
    }
}

/// Files produced by one command.
#[derive(Debug, Default)]
pub struct Written {
    pub paths: Vec<PathBuf>,
}

pub struct Emitter<'a> {
    pub dir: &'a Path,
    pub stem: &'a str,
    pub written: Written,
}

impl<'a> Emitter<'a> {
    pub fn new(dir: &'a Path, stem: &'a str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Emitter {
            dir,
            stem,
            written: Written::default(),
        })
    }

    fn put(&mut self, ext: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(format!("{}.{ext}", self.stem));
        fs::write(&path, body).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        self.written.paths.push(path);
        Ok(())
    }

    pub fn csv<R: Row>(&mut self, rows: &[R]) -> Result<(), CliError> {
        let body = csv_string(rows)?;
        self.put("csv", &body)
    }

    pub fn json<R: Serialize>(&mut self, doc: &ReportDoc<R>) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(doc).map_err(CliError::Json)?;
        body.push('\n');
        self.put("json", &body)
    }

    pub fn svg(&mut self, chart: &Chart) -> Result<(), CliError> {
        self.put("svg", &chart.render())
    }
}

pub fn theorem_chart(r: &TheoremReport) -> Chart {
    let x: Vec<f64> = r.rows.iter().map(|r| r.param).collect();
    Chart {
        title: format!("mass identity residual, {} field", r.field),
        x_label: "box size L".into(),
        y_label: "absolute value".into(),
        series: vec![
            Series::new("|residual|", &x, r.rows.iter().map(|r| r.residual.abs())),
            Series::new(
                "K x bounds",
                &x,
                r.rows.iter().map(|row| r.k * (row.face_bound + row.edge_bound)),
            ),
            Series::new("quadrature error", &x, r.rows.iter().map(|r| r.quad_error)),
        ],
    }
}

pub fn cone_chart(r: &ConeReport) -> Chart {
    let x: Vec<f64> = r.rows.iter().map(|r| r.eps).collect();
    Chart {
        title: format!("cone error integrals, n = {}, s = {}", r.n, r.s),
        x_label: "eps".into(),
        y_label: "integral".into(),
        series: vec![
            Series::new("E1", &x, r.rows.iter().map(|r| r.e1)),
            Series::new("E2", &x, r.rows.iter().map(|r| r.e2)),
            Series::new("base face", &x, r.rows.iter().map(|r| r.base)),
            Series::new("side faces", &x, r.rows.iter().map(|r| r.side)),
        ],
    }
}

pub fn decay_chart(r: &DecayReport) -> Chart {
    let mut series = vec![
        Series::new("|e| e^(tau r)", &r.radii, r.ratio.iter().copied()),
        Series::new("|de| e^(tau r)", &r.radii, r.grad_ratio.iter().copied()),
    ];
    if let Some(h) = &r.hess_ratio {
        series.push(Series::new("|dde| e^(tau r)", &r.radii, h.iter().copied()));
    }
    Chart {
        title: format!("decay of the {} field", r.field),
        x_label: "geodesic radius r".into(),
        y_label: "scaled sup norm".into(),
        series,
    }
}

pub fn compare_chart(r: &CompareReport) -> Chart {
    let rs: Vec<f64> = r.spheres.iter().map(|s| s.radius).collect();
    // ln L tracks the geodesic size of a box.
    let ls: Vec<f64> = r.polyhedra.iter().map(|p| p.param.ln()).collect();
    Chart {
        title: format!("sphere and polyhedral mass, {} field", r.field),
        x_label: "r (spheres), ln L (polyhedra)".into(),
        y_label: "mass".into(),
        series: vec![
            Series::new("spheres", &rs, r.spheres.iter().map(|s| s.mass)),
            Series::new("polyhedra", &ls, r.polyhedra.iter().map(|p| p.flux)),
        ],
    }
}
