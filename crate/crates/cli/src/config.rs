//! Experiment configuration: a flat set of optional keys shared by the
//! command line and JSON config files. A flag `--big-m` is the key
//! `big_m`. File values are overridden by flags; unknown keys are errors.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use cbp_core::cbp::{CbpModel, InitialLaw, OffspringLaw};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CBP_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "cbp-output";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PoissonImmigration,
    BernoulliRounding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OffspringKind {
    Poisson,
    Geometric,
    Deterministic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Lemma1,
    Moments,
    Conditional,
    Lindeberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model preset.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,

    /// Drift α.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    /// Offspring mean (bernoulli-rounding preset, diffusion).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,

    /// Offspring family for the bernoulli-rounding preset.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offspring: Option<OffspringKind>,

    /// Law of Z_0: an integer, or `poisson:<mean>`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<String>,

    /// Offspring variance σ² (diffusion, the `lemma1` check).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,

    /// Generations per simulated path.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,

    /// Number of paths.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,

    /// Scaling indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,

    /// Time checkpoints, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,

    /// Horizon T of the scaled paths.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,

    /// Monte Carlo replicates.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,

    /// Lindeberg truncation levels θ, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,

    /// One-step resamples per visited state (condition c).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,

    /// Calibrated KS threshold for the final n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_threshold: Option<f64>,

    /// Diagnostic checks to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<Vec<CheckKind>>,

    /// Generation indices k, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,

    /// Sum lengths l, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<usize>>,

    /// Truncation levels M of the square-sum bound, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_m: Option<Vec<f64>>,

    /// Emit exact-sampler marginal draws.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,

    /// Emit an Euler–Maruyama path.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<bool>,

    /// Diffusion start value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,

    /// Euler–Maruyama step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,

    /// Number of draws.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,

    /// Master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Worker thread cap.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// Output directory [default: $CBP_OUTPUT_DIR, else ./cbp-output].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,

    /// Report formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Vec<Format>>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    fn to_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("config serialises") {
            Value::Object(map) => map,
            _ => unreachable!("config is a struct"),
        }
    }

    /// Keys set in `self` win over those in `base`.
    pub fn over(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut merged = base.to_map();
        merged.extend(self.to_map());
        serde_json::from_value(Value::Object(merged)).expect("merge of valid configs is valid")
    }

    pub fn set_keys(&self) -> Vec<String> {
        self.to_map().keys().cloned().collect()
    }

    /// Rejects keys the running command does not use.
    pub fn restrict_to(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        let extra: Vec<String> = self
            .set_keys()
            .into_iter()
            .filter(|k| !allowed.contains(&k.as_str()) && !COMMON_KEYS.contains(&k.as_str()))
            .collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(format!("`{command}` does not use: {}", extra.join(", "))))
        }
    }

    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn formats(&self) -> Vec<Format> {
        self.format.clone().unwrap_or_else(|| vec![Format::Json, Format::Text, Format::Csv])
    }
}

/// Keys accepted by every command.
pub const COMMON_KEYS: &[&str] = &["seed", "threads", "output_dir", "format"];

/// Keys that describe a CBP model.
pub const MODEL_KEYS: &[&str] = &["preset", "alpha", "m", "offspring", "z0"];

pub fn parse_initial(spec: &str) -> Result<InitialLaw, CliError> {
    let spec = spec.trim();
    if let Some(mean) = spec.strip_prefix("poisson:") {
        let mean: f64 = mean
            .parse()
            .map_err(|_| CliError::Validation(format!("z0: bad Poisson mean `{mean}`")))?;
        return Ok(InitialLaw::poisson(mean)?);
    }
    spec.parse::<u64>()
        .map(InitialLaw::fixed)
        .map_err(|_| CliError::Validation(format!("z0: expected an integer or `poisson:<mean>`, got `{spec}`")))
}

/// Fills model defaults into `cfg` and builds the model. `--preset` is
/// required.
pub fn build_model(cfg: &mut ExperimentConfig) -> Result<CbpModel, CliError> {
    let preset = cfg
        .preset
        .ok_or_else(|| CliError::Usage("a model preset is required (--preset poisson-immigration|bernoulli-rounding)".into()))?;
    let alpha = *cfg.alpha.get_or_insert(1.0);
    let initial = parse_initial(cfg.z0.get_or_insert_with(|| "0".into()))?;
    match preset {
        Preset::PoissonImmigration => {
            if cfg.offspring.is_some_and(|o| o != OffspringKind::Poisson) || cfg.m.is_some_and(|m| m != 1.0) {
                return Err(CliError::Validation(
                    "poisson-immigration fixes Poisson(1) offspring; use bernoulli-rounding for other laws".into(),
                ));
            }
            cfg.offspring = Some(OffspringKind::Poisson);
            cfg.m = Some(1.0);
            Ok(CbpModel::poisson_immigration(alpha, initial)?)
        }
        Preset::BernoulliRounding => {
            let m = *cfg.m.get_or_insert(1.0);
            let offspring = match *cfg.offspring.get_or_insert(OffspringKind::Poisson) {
                OffspringKind::Poisson => OffspringLaw::poisson(m)?,
                OffspringKind::Geometric => OffspringLaw::geometric(m)?,
                OffspringKind::Deterministic => {
                    if m.fract() != 0.0 || m < 1.0 {
                        return Err(CliError::Validation(format!("deterministic offspring needs a positive integer m, got {m}")));
                    }
                    OffspringLaw::deterministic(m as u64)?
                }
            };
            Ok(CbpModel::bernoulli_rounding(alpha, offspring, initial)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"preset": "poisson-immigration", "colour": 1}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let text = r#"{"preset":"bernoulli-rounding","alpha":2.5,"m":2,"offspring":"geometric","n":[10,50],"t":[0.5,1],"check":["lemma1","moments"],"exact":true,"seed":9}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.n, Some(vec![10, 50]));
    }

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig::from_json(r#"{"alpha": 2, "seed": 4}"#).unwrap();
        let flags = ExperimentConfig {
            alpha: Some(3.0),
            ..Default::default()
        };
        let merged = flags.over(&file);
        assert_eq!(merged.alpha, Some(3.0));
        assert_eq!(merged.seed, Some(4));
    }

    #[test]
    fn initial_specs() {
        assert_eq!(parse_initial("5").unwrap().mean(), 5.0);
        assert_eq!(parse_initial("poisson:2.5").unwrap().mean(), 2.5);
        assert!(parse_initial("-1").is_err());
        assert!(parse_initial("poisson:x").is_err());
    }

    #[test]
    fn model_defaults_are_filled() {
        let mut cfg = ExperimentConfig {
            preset: Some(Preset::BernoulliRounding),
            m: Some(2.0),
            ..Default::default()
        };
        let model = build_model(&mut cfg).unwrap();
        assert_eq!(model.offspring().mean(), 2.0);
        assert_eq!(cfg.alpha, Some(1.0));
        assert_eq!(cfg.offspring, Some(OffspringKind::Poisson));
        assert!(build_model(&mut ExperimentConfig::default()).is_err());
    }

    #[test]
    fn restriction() {
        let cfg = ExperimentConfig {
            dt: Some(0.1),
            seed: Some(1),
            ..Default::default()
        };
        assert!(cfg.restrict_to("simulate", MODEL_KEYS).is_err());
        assert!(cfg.restrict_to("diffusion", &["dt"]).is_ok());
    }
}
