//! Loading experiment configurations and applying command-line overrides.

use std::path::{Path, PathBuf};

use polymass_core::experiments::SphereSettings;
use polymass_core::{ExperimentConfig, FamilySpec, OutputSettings, PolyhedronFamily, QuadratureSpec};

use crate::CliError;

/// Which sweep a command runs; selects the built-in default configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    TheoremCheck,
    ConeSweep,
    MassCompare,
    DecayCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TheoremCheck => "theorem-check",
            Command::ConeSweep => "cone-sweep",
            Command::MassCompare => "mass-compare",
            Command::DecayCheck => "decay-check",
        }
    }

    /// Configuration used when no `--config` file is given.
    pub fn default_config(self) -> ExperimentConfig {
        let conformal = |tau_prime| FamilySpec::Conformal { m: 1.0, tau_prime };
        let boxes = PolyhedronFamily::Box {
            sizes: vec![4.0, 8.0, 16.0],
        };
        let (field, polyhedron) = match self {
            Command::ConeSweep => (
                conformal(2.0),
                PolyhedronFamily::Cone {
                    n: 6,
                    s: 3.0,
                    eps: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
                },
            ),
            _ => (conformal(3.0), boxes),
        };
        ExperimentConfig {
            field,
            polyhedron,
            quadrature: QuadratureSpec::default(),
            sphere: SphereSettings::default(),
            compare_tol: 0.02,
            decay_radii: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            seed: 0,
            output: OutputSettings::default(),
        }
    }
}

/// Values given on the command line that replace fields of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tau_prime: Option<f64>,
    pub mass_param: Option<f64>,
    pub schedule: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub svg: bool,
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text).map_err(|e| match e {
        CliError::Parse { message, .. } => CliError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse {
        path: PathBuf::new(),
        message: e.to_string(),
    })
}

/// Apply overrides and validate.
pub fn resolve(mut cfg: ExperimentConfig, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    if let Some(t) = ov.tau_prime {
        cfg.field = cfg.field.with_tau_prime(t);
    }
    if let Some(m) = ov.mass_param {
        cfg.field = cfg.field.with_mass_param(m);
    }
    if let Some(s) = &ov.schedule {
        match &mut cfg.polyhedron {
            PolyhedronFamily::Box { sizes } => *sizes = s.clone(),
            PolyhedronFamily::Cone { eps, .. } => *eps = s.clone(),
        }
    }
    if let Some(d) = &ov.out_dir {
        cfg.output.dir = d.clone();
    }
    cfg.output.svg |= ov.svg;
    if cfg.decay_radii.is_empty() || cfg.decay_radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("decay_radii must be non-empty and increasing".into()));
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for c in [
            Command::TheoremCheck,
            Command::ConeSweep,
            Command::MassCompare,
            Command::DecayCheck,
        ] {
            resolve(c.default_config(), &Overrides::default()).unwrap();
        }
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let cfg = parse(
            r#"
            [field]
            family = "conformal"
            m = 1.0
            tau_prime = 3.0

            [polyhedron]
            family = "box"
            sizes = [4.0, 8.0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.quadrature, QuadratureSpec::default());
        assert_eq!(cfg.compare_tol, 0.02);
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse(
            r#"
            colour = "red"
            [field]
            family = "zero"
            [polyhedron]
            family = "box"
            sizes = [4.0]
            "#,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Parse { .. }));
    }

    #[test]
    fn overrides_replace_schedule_and_field() {
        let ov = Overrides {
            tau_prime: Some(2.5),
            mass_param: Some(-1.0),
            schedule: Some(vec![3.0, 6.0]),
            ..Default::default()
        };
        let cfg = resolve(Command::TheoremCheck.default_config(), &ov).unwrap();
        assert_eq!(
            cfg.field,
            FamilySpec::Conformal {
                m: -1.0,
                tau_prime: 2.5
            }
        );
        assert_eq!(cfg.polyhedron.schedule(), &[3.0, 6.0]);
    }

    #[test]
    fn non_monotone_schedule_is_a_config_error() {
        let ov = Overrides {
            schedule: Some(vec![8.0, 4.0]),
            ..Default::default()
        };
        let err = resolve(Command::TheoremCheck.default_config(), &ov).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }
}
