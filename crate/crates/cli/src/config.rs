//! Experiment configuration: defaults, an optional JSON file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qmeas_core::discrimination::MIN_NOGO_SAMPLES;
use qmeas_core::model::{Amplitudes, MAX_ENV};
use serde::{Deserialize, Serialize};

/// Normalization error accepted silently.
pub const NORM_ACCEPT: f64 = 1e-9;
/// Normalization error repaired with a warning; anything larger is rejected.
pub const NORM_REPAIR: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Contents of a config file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub a1_re: Option<f64>,
    pub a1_im: Option<f64>,
    pub a2_re: Option<f64>,
    pub a2_im: Option<f64>,
    pub gamma: Option<f64>,
    pub c_phase: Option<f64>,
    pub n_env: Option<usize>,
    pub env_overlap: Option<f64>,
    pub n_events: Option<u64>,
    pub rng_seed: Option<u64>,
    pub nogo_samples: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Values given on the command line; they win over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub a1: Option<Complex64>,
    pub a2: Option<Complex64>,
    pub gamma: Option<f64>,
    pub c_phase: Option<f64>,
    pub n_env: Option<usize>,
    pub env_overlap: Option<f64>,
    pub n_events: Option<u64>,
    pub seed: Option<u64>,
    pub nogo_samples: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<OutputFormat>,
}

/// Fully resolved and validated configuration, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub a1_re: f64,
    pub a1_im: f64,
    pub a2_re: f64,
    pub a2_im: f64,
    pub gamma: f64,
    pub c_phase: f64,
    pub n_env: usize,
    pub env_overlap: f64,
    pub n_events: u64,
    pub rng_seed: u64,
    pub nogo_samples: usize,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a1_re: h,
            a1_im: 0.0,
            a2_re: h,
            a2_im: 0.0,
            gamma: 0.0,
            c_phase: 0.0,
            n_env: 5,
            env_overlap: 0.5,
            n_events: 100_000,
            rng_seed: 0,
            nogo_samples: MIN_NOGO_SAMPLES,
            output_path: None,
            output_format: OutputFormat::Json,
        }
    }
}

impl ExperimentConfig {
    /// Layers `file` and `flags` over the defaults and validates the result.
    /// Returns the config and any warnings raised while repairing it.
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<(Self, Vec<String>), ConfigError> {
        let d = Self::default();
        let a1 = flags.a1.unwrap_or_else(|| {
            Complex64::new(file.a1_re.unwrap_or(d.a1_re), file.a1_im.unwrap_or(d.a1_im))
        });
        let a2 = flags.a2.unwrap_or_else(|| {
            Complex64::new(file.a2_re.unwrap_or(d.a2_re), file.a2_im.unwrap_or(d.a2_im))
        });
        let mut cfg = Self {
            a1_re: a1.re,
            a1_im: a1.im,
            a2_re: a2.re,
            a2_im: a2.im,
            gamma: flags.gamma.or(file.gamma).unwrap_or(d.gamma),
            c_phase: flags.c_phase.or(file.c_phase).unwrap_or(d.c_phase),
            n_env: flags.n_env.or(file.n_env).unwrap_or(d.n_env),
            env_overlap: flags.env_overlap.or(file.env_overlap).unwrap_or(d.env_overlap),
            n_events: flags.n_events.or(file.n_events).unwrap_or(d.n_events),
            rng_seed: flags.seed.or(file.rng_seed).unwrap_or(d.rng_seed),
            nogo_samples: flags.nogo_samples.or(file.nogo_samples).unwrap_or(d.nogo_samples),
            output_path: flags.output_path.or(file.output_path),
            output_format: flags.output_format.or(file.output_format).unwrap_or(d.output_format),
        };
        let warnings = cfg.validate()?;
        Ok((cfg, warnings))
    }

    fn validate(&mut self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        for (field, v) in [
            ("a1", self.a1_re),
            ("a1", self.a1_im),
            ("a2", self.a2_re),
            ("a2", self.a2_im),
            ("gamma", self.gamma),
            ("c_phase", self.c_phase),
            ("env_overlap", self.env_overlap),
        ] {
            if !v.is_finite() {
                return Err(invalid(field, format!("{v} is not finite")));
            }
        }
        let norm_sq = self.a1().norm_sqr() + self.a2().norm_sqr();
        let deviation = (norm_sq - 1.0).abs();
        if deviation > NORM_REPAIR {
            return Err(invalid(
                "amplitudes",
                format!("|a1|^2 + |a2|^2 = {norm_sq}, off by more than {NORM_REPAIR:e}"),
            ));
        }
        if deviation > NORM_ACCEPT {
            warnings.push(format!(
                "amplitudes renormalized: |a1|^2 + |a2|^2 was {norm_sq}"
            ));
        }
        let n = norm_sq.sqrt();
        for v in [&mut self.a1_re, &mut self.a1_im, &mut self.a2_re, &mut self.a2_im] {
            *v /= n;
        }
        if self.n_env == 0 || self.n_env > MAX_ENV {
            return Err(invalid("n_env", format!("{} not in 1..={MAX_ENV}", self.n_env)));
        }
        if !(0.0..=1.0).contains(&self.env_overlap) {
            return Err(invalid("env_overlap", format!("{} not in [0, 1]", self.env_overlap)));
        }
        if self.n_events == 0 {
            return Err(invalid("n_events", "must be at least 1"));
        }
        if self.nogo_samples < MIN_NOGO_SAMPLES {
            return Err(invalid(
                "nogo_samples",
                format!("{} is below the minimum {MIN_NOGO_SAMPLES}", self.nogo_samples),
            ));
        }
        Ok(warnings)
    }

    pub fn a1(&self) -> Complex64 {
        Complex64::new(self.a1_re, self.a1_im)
    }

    pub fn a2(&self) -> Complex64 {
        Complex64::new(self.a2_re, self.a2_im)
    }

    pub fn amplitudes(&self) -> Result<Amplitudes, ConfigError> {
        Amplitudes::new(self.a1(), self.a2()).map_err(|e| invalid("amplitudes", e.to_string()))
    }
}

/// Parses `RE` or `RE,IM`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let mut parts = s.split(',');
    let re = parts.next().unwrap_or_default().trim();
    let im = parts.next().map(str::trim);
    if parts.next().is_some() {
        return Err(format!("expected RE[,IM], got {s:?}"));
    }
    let re: f64 = re.parse().map_err(|_| format!("bad real part in {s:?}"))?;
    let im: f64 = match im {
        Some(t) => t.parse().map_err(|_| format!("bad imaginary part in {s:?}"))?,
        None => 0.0,
    };
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_complex_forms() {
        assert_eq!(parse_complex("0.6").unwrap(), Complex64::new(0.6, 0.0));
        assert_eq!(parse_complex("0.6, -0.1").unwrap(), Complex64::new(0.6, -0.1));
        assert!(parse_complex("a").is_err());
        assert!(parse_complex("1,2,3").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = FileConfig {
            rng_seed: Some(3),
            n_env: Some(2),
            ..Default::default()
        };
        let flags = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        let (cfg, w) = ExperimentConfig::resolve(file, flags).unwrap();
        assert_eq!(cfg.rng_seed, 9);
        assert_eq!(cfg.n_env, 2);
        assert!(w.is_empty());
    }

    #[test]
    fn normalization_bands() {
        let with = |a1: f64| Overrides {
            a1: Some(Complex64::new(a1, 0.0)),
            a2: Some(Complex64::new(0.8, 0.0)),
            ..Default::default()
        };
        let (cfg, w) = ExperimentConfig::resolve(FileConfig::default(), with(0.6)).unwrap();
        assert!(w.is_empty());
        assert!((cfg.a1().norm_sqr() + cfg.a2().norm_sqr() - 1.0).abs() < 1e-15);

        let (cfg, w) = ExperimentConfig::resolve(FileConfig::default(), with(0.6 + 1e-7)).unwrap();
        assert_eq!(w.len(), 1);
        assert!((cfg.a1().norm_sqr() + cfg.a2().norm_sqr() - 1.0).abs() < 1e-15);

        assert!(ExperimentConfig::resolve(FileConfig::default(), with(0.61)).is_err());
    }

    #[test]
    fn range_checks() {
        let bad = [
            Overrides { n_env: Some(0), ..Default::default() },
            Overrides { n_env: Some(11), ..Default::default() },
            Overrides { env_overlap: Some(1.5), ..Default::default() },
            Overrides { n_events: Some(0), ..Default::default() },
            Overrides { nogo_samples: Some(9_999), ..Default::default() },
        ];
        for o in bad {
            assert!(ExperimentConfig::resolve(FileConfig::default(), o).is_err());
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"seed": 1}"#).is_err());
        let f: FileConfig = serde_json::from_str(r#"{"rng_seed": 1, "output_format": "csv"}"#).unwrap();
        assert_eq!(f.output_format, Some(OutputFormat::Csv));
    }
}
