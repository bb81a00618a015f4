//! `key = value` run files with dotted section prefixes.
//!
//! ```text
//! # reference run
//! params.gamma = 2.0
//! params.delta = 2.0
//! data.c = 1
//! grid.L = auto
//! grid.n_cells = 2000
//! ```

use std::collections::HashSet;
use std::path::Path;

use isogroup_core::{DataKind, MassInjection, Parameters, RunConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("constraint violated: {0}")]
    Validation(String),
}

/// A run configuration together with the CLI-only settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub run: RunConfig,
    /// Doubling resolutions used by the refinement studies.
    pub levels: Vec<usize>,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            levels: vec![200, 400, 800],
        }
    }
}

pub fn parse_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<FileConfig, ConfigError> {
    let mut out = FileConfig::default();
    let mut gamma = out.run.params.gamma();
    let mut delta = out.run.params.delta();
    let mut inject_time = None;
    let mut inject_mass = None;
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Parse { line, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("`{key}` expects a number, found `{value}`")))
        };
        let count = || {
            value.parse::<usize>().map_err(|_| {
                err(format!(
                    "`{key}` expects a non-negative integer, found `{value}`"
                ))
            })
        };
        let run = &mut out.run;
        match key {
            "params.gamma" => gamma = number()?,
            "params.delta" => delta = number()?,
            "data.kind" => {
                run.data = match value {
                    "isolated_mass_group" => DataKind::IsolatedMassGroup,
                    "zero" => DataKind::Zero,
                    _ => {
                        return Err(err(format!(
                            "unknown data kind `{value}` (isolated_mass_group, zero)"
                        )))
                    }
                }
            }
            "data.c" => run.spec.c = number()?,
            "data.k1" => run.spec.k1 = number()?,
            "data.k2" => run.spec.k2 = number()?,
            "grid.L" => {
                run.half_width = if value == "auto" {
                    None
                } else {
                    Some(number()?)
                }
            }
            "grid.n_cells" => run.n_cells = count()?,
            "scheme.cfl" => run.cfl = number()?,
            "scheme.rho_vac" => {
                run.rho_vac = if value == "auto" {
                    None
                } else {
                    Some(number()?)
                }
            }
            "scheme.dt_max" => run.dt_max = number()?,
            "sampling.t_final" => run.t_final = number()?,
            "sampling.n_samples" => run.n_samples = count()?,
            "sampling.tracers" => run.interior_tracers = count()?,
            "sampling.snapshot_stride" => run.snapshot_stride = count()?,
            "predict.t_max" => run.t_max = number()?,
            "fault.inject_time" => inject_time = Some(number()?),
            "fault.inject_mass" => inject_mass = Some(number()?),
            "verify.levels" => {
                out.levels = value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        err(format!(
                            "`{key}` expects a comma-separated list of integers"
                        ))
                    })?
            }
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }

    out.run.params =
        Parameters::new(gamma, delta).map_err(|e| ConfigError::Validation(e.to_string()))?;
    out.run.fault = match (inject_time, inject_mass) {
        (Some(time), Some(amount)) => Some(MassInjection { time, amount }),
        (None, None) => None,
        _ => {
            return Err(ConfigError::Validation(
                "fault.inject_time and fault.inject_mass must be given together".into(),
            ))
        }
    };
    out.run
        .validate()
        .map_err(|e| ConfigError::Validation(e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "params.gamma = 2.0\nparams.delta = 2.0\ndata.c = 1\ndata.k1 = 3\ndata.k2 = 1\n";

    #[test]
    fn minimal_file() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.run.params.gamma(), 2.0);
        assert_eq!(cfg.run.spec.k1, 3.0);
        assert_eq!(cfg.run.half_width, None);
        assert_eq!(cfg.levels, vec![200, 400, 800]);
    }

    #[test]
    fn comments_and_auto_values() {
        let cfg = parse_config_str(
            "# header\n\ngrid.L = auto # sized from t_final\nscheme.rho_vac = 1e-12\n",
        )
        .unwrap();
        assert_eq!(cfg.run.half_width, None);
        assert_eq!(cfg.run.rho_vac, Some(1e-12));
    }

    #[test]
    fn delta_at_one_names_the_constraint() {
        let err = parse_config_str("params.delta = 1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
        assert!(err.to_string().contains("delta > 1"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config_str("params.gamma = 2\nparams.mu = 3\n").unwrap_err();
        match err {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("params.mu"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            parse_config_str("grid.n_cells 20\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config_str("grid.n_cells = -3\n"),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            parse_config_str("data.c = 1\ndata.c = 2\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config_str("verify.levels = 1, x\n"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn spec_constraints_checked() {
        let err = parse_config_str("data.k1 = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
        let err = parse_config_str("grid.L = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
        let err = parse_config_str("fault.inject_time = 0.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
    }

    #[test]
    fn fault_and_levels() {
        let cfg = parse_config_str(
            "fault.inject_time = 0.5\nfault.inject_mass = 1e-3\nverify.levels = 100, 200, 400\n",
        )
        .unwrap();
        assert_eq!(
            cfg.run.fault,
            Some(MassInjection {
                time: 0.5,
                amount: 1e-3
            })
        );
        assert_eq!(cfg.levels, vec![100, 200, 400]);
    }
}
