//! Experiment configuration: a JSON document of optional fields, CLI
//! overrides, and resolution against per-experiment defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_COMPOSITE_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[serde(alias = "lemma1")]
    VerifyLemma1,
    #[serde(alias = "thm1")]
    VerifyThm1,
    #[serde(alias = "thm2")]
    VerifyThm2,
    #[serde(alias = "thm3")]
    VerifyThm3,
    #[serde(alias = "thm4")]
    VerifyThm4,
    #[serde(alias = "pointer")]
    PointerContrast,
    #[serde(alias = "sweep")]
    CouplingSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::VerifyLemma1,
        ExperimentKind::VerifyThm1,
        ExperimentKind::VerifyThm2,
        ExperimentKind::VerifyThm3,
        ExperimentKind::VerifyThm4,
        ExperimentKind::PointerContrast,
        ExperimentKind::CouplingSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::VerifyLemma1 => "verify_lemma1",
            ExperimentKind::VerifyThm1 => "verify_thm1",
            ExperimentKind::VerifyThm2 => "verify_thm2",
            ExperimentKind::VerifyThm3 => "verify_thm3",
            ExperimentKind::VerifyThm4 => "verify_thm4",
            ExperimentKind::PointerContrast => "pointer_contrast",
            ExperimentKind::CouplingSweep => "coupling_sweep",
        }
    }

    /// Accepts the full name or the short suite name (`lemma1`, `thm2`, `pointer`, `sweep`).
    pub fn parse(s: &str) -> Option<Self> {
        let short = match s {
            "lemma1" => Some(ExperimentKind::VerifyLemma1),
            "thm1" => Some(ExperimentKind::VerifyThm1),
            "thm2" => Some(ExperimentKind::VerifyThm2),
            "thm3" => Some(ExperimentKind::VerifyThm3),
            "thm4" => Some(ExperimentKind::VerifyThm4),
            "pointer" => Some(ExperimentKind::PointerContrast),
            "sweep" => Some(ExperimentKind::CouplingSweep),
            _ => None,
        };
        short.or_else(|| Self::ALL.into_iter().find(|k| k.name() == s))
    }
}

/// One value or a list, as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub lemma: f64,
    pub pointwise: f64,
    pub sigma_factor: f64,
    pub diagonal: f64,
    pub pipeline: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lemma: crate::bounds::LEMMA_TOL,
            pointwise: crate::bounds::POINTWISE_TOL,
            sigma_factor: crate::bounds::SIGMA_FACTOR,
            diagonal: 1e-12,
            pipeline: 1e-10,
        }
    }
}

/// Everything optional; what a config file or the command line may set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<ExperimentKind>,
    pub d_s: Option<OneOrMany<usize>>,
    pub d_b: Option<OneOrMany<usize>>,
    pub d_r: Option<usize>,
    pub coupling_scales: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub n_samples: Option<usize>,
    pub horizon_factor: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub tolerances: Option<Tolerances>,
    pub max_composite_dim: Option<usize>,
    pub write_trajectories: Option<bool>,
    pub output_path: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fields set in `other` win.
    pub fn merged_with(self, other: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            experiment: other.experiment.or(self.experiment),
            d_s: other.d_s.or(self.d_s),
            d_b: other.d_b.or(self.d_b),
            d_r: other.d_r.or(self.d_r),
            coupling_scales: other.coupling_scales.or(self.coupling_scales),
            trials: other.trials.or(self.trials),
            n_samples: other.n_samples.or(self.n_samples),
            horizon_factor: other.horizon_factor.or(self.horizon_factor),
            horizon: other.horizon.or(self.horizon),
            seed: other.seed.or(self.seed),
            tolerances: other.tolerances.or(self.tolerances),
            max_composite_dim: other.max_composite_dim.or(self.max_composite_dim),
            write_trajectories: other.write_trajectories.or(self.write_trajectories),
            output_path: other.output_path.or(self.output_path),
            workers: other.workers.or(self.workers),
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig> {
        let experiment = self
            .experiment
            .ok_or_else(|| Error::ConfigInvalid("no experiment selected".into()))?;
        let d = Defaults::for_kind(experiment);
        let cfg = ExperimentConfig {
            experiment,
            d_s: self.d_s.map_or(d.d_s, OneOrMany::into_vec),
            d_b: self.d_b.map_or(d.d_b, OneOrMany::into_vec),
            d_r: self.d_r.unwrap_or(32),
            coupling_scales: self.coupling_scales.unwrap_or(d.coupling_scales),
            trials: self.trials.unwrap_or(d.trials),
            n_samples: self.n_samples.unwrap_or(crate::dynamics::DEFAULT_SAMPLES),
            horizon_factor: self
                .horizon_factor
                .unwrap_or(crate::dynamics::DEFAULT_HORIZON_FACTOR),
            horizon: self.horizon,
            seed: self.seed.unwrap_or(0),
            tolerances: self.tolerances.unwrap_or_default(),
            max_composite_dim: self.max_composite_dim.unwrap_or(DEFAULT_MAX_COMPOSITE_DIM),
            write_trajectories: self.write_trajectories.unwrap_or(true),
            output_path: self
                .output_path
                .unwrap_or_else(|| PathBuf::from("runs").join(experiment.name())),
            workers: self.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Defaults {
    d_s: Vec<usize>,
    d_b: Vec<usize>,
    coupling_scales: Vec<f64>,
    trials: usize,
}

impl Defaults {
    fn for_kind(kind: ExperimentKind) -> Self {
        let (d_s, d_b, coupling_scales, trials) = match kind {
            ExperimentKind::VerifyLemma1 => ((2..=8).collect(), vec![1], vec![0.0], 500),
            ExperimentKind::VerifyThm1 | ExperimentKind::VerifyThm3 => {
                (vec![2], vec![32], vec![0.05], 100)
            }
            ExperimentKind::VerifyThm2 => (vec![2], vec![32], vec![0.05], 1000),
            ExperimentKind::VerifyThm4 => (vec![2, 3], vec![16, 32, 64], vec![1.0, 0.1, 0.01], 1),
            ExperimentKind::PointerContrast => (vec![2], vec![32], vec![0.01], 1),
            ExperimentKind::CouplingSweep => {
                (vec![2], vec![32], vec![1.0, 0.3, 0.1, 0.03, 0.01], 4)
            }
        };
        Self {
            d_s,
            d_b,
            coupling_scales,
            trials,
        }
    }
}

/// A fully resolved run description. This is what the manifest records and
/// what replay reruns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Subsystem dimensions; for the trace-norm suite, the matrix dimensions
    /// cycled over trials.
    pub d_s: Vec<usize>,
    pub d_b: Vec<usize>,
    pub d_r: usize,
    pub coupling_scales: Vec<f64>,
    /// Trials per case (per dimension pair and scale).
    pub trials: usize,
    pub n_samples: usize,
    pub horizon_factor: f64,
    pub horizon: Option<f64>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub max_composite_dim: usize,
    pub write_trajectories: bool,
    pub output_path: PathBuf,
    /// Worker threads; never affects results.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.d_s.is_empty() || self.d_b.is_empty() {
            return Err(invalid("d_s and d_b must be non-empty"));
        }
        if self.d_s.contains(&0) || self.d_b.contains(&0) {
            return Err(invalid("dimensions must be positive"));
        }
        let max_ds = *self.d_s.iter().max().unwrap();
        let max_db = *self.d_b.iter().max().unwrap();
        let composite = if self.experiment == ExperimentKind::VerifyLemma1 {
            max_ds
        } else {
            max_ds * max_db
        };
        if composite > self.max_composite_dim {
            return Err(invalid(format!(
                "composite dimension {composite} exceeds max_composite_dim {}",
                self.max_composite_dim
            )));
        }
        if self.coupling_scales.is_empty() {
            return Err(invalid("coupling_scales must be non-empty"));
        }
        if self
            .coupling_scales
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return Err(invalid("coupling scales must be nonnegative and finite"));
        }
        if self.n_samples < 2 {
            return Err(invalid("n_samples must be at least 2"));
        }
        if !(self.horizon_factor > 0.0 && self.horizon_factor.is_finite()) {
            return Err(invalid("horizon_factor must be positive"));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("horizon must be positive"));
            }
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        let t = &self.tolerances;
        if [t.lemma, t.pointwise, t.sigma_factor, t.diagonal, t.pipeline]
            .iter()
            .any(|x| !(*x >= 0.0 && x.is_finite()))
        {
            return Err(invalid("tolerances must be nonnegative"));
        }
        match self.experiment {
            ExperimentKind::VerifyThm2 => {
                if self.d_r == 0 || self.d_r > self.d_s[0] * self.d_b[0] {
                    return Err(invalid(format!(
                        "d_r = {} must lie in 1..={}",
                        self.d_r,
                        self.d_s[0] * self.d_b[0]
                    )));
                }
                if self.trials < 2 {
                    return Err(invalid(
                        "the effective-dimension suite needs at least 2 trials",
                    ));
                }
            }
            ExperimentKind::PointerContrast | ExperimentKind::CouplingSweep
                if self.d_s.iter().any(|&d| d < 2) =>
            {
                return Err(invalid("this experiment needs d_s >= 2"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!(
            ExperimentKind::parse("lemma1"),
            Some(ExperimentKind::VerifyLemma1)
        );
        assert_eq!(
            ExperimentKind::parse("thm4"),
            Some(ExperimentKind::VerifyThm4)
        );
        assert_eq!(
            ExperimentKind::parse("pointer"),
            Some(ExperimentKind::PointerContrast)
        );
        assert_eq!(
            ExperimentKind::parse("sweep"),
            Some(ExperimentKind::CouplingSweep)
        );
        assert_eq!(
            ExperimentKind::parse("coupling_sweep"),
            Some(ExperimentKind::CouplingSweep)
        );
        assert_eq!(ExperimentKind::parse("thm9"), None);
    }

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let file =
            ConfigOverrides::from_json(r#"{"experiment":"verify_thm1","trials":7,"d_b":16}"#)
                .unwrap();
        let flags = ConfigOverrides {
            trials: Some(3),
            ..Default::default()
        };
        let cfg = file.merged_with(flags).resolve().unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.d_b, vec![16]);
        assert_eq!(cfg.d_s, vec![2]);
        assert_eq!(cfg.n_samples, 200);
    }

    #[test]
    fn rejects_zero_trials_and_unknown_fields() {
        let zero =
            ConfigOverrides::from_json(r#"{"experiment":"verify_lemma1","trials":0}"#).unwrap();
        assert!(matches!(zero.resolve(), Err(Error::ConfigInvalid(_))));
        assert!(ConfigOverrides::from_json(r#"{"experiment":"verify_lemma1","bogus":1}"#).is_err());
        assert!(ConfigOverrides::from_json("{").is_err());
    }

    #[test]
    fn composite_limit() {
        let big = ConfigOverrides::from_json(r#"{"experiment":"verify_thm4","d_s":64,"d_b":128}"#)
            .unwrap();
        assert!(big.resolve().is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ConfigOverrides {
            experiment: Some(ExperimentKind::CouplingSweep),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
