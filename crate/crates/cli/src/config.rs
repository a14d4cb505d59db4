//! Run configuration: everything a run needs, echoed verbatim into the
//! report so results stay reproducible from the report alone.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use cgdpd_core::classifier::{ClassifierConfig, HttpConfig, NegationStrategy};
use cgdpd_core::dataset::FieldMap;
use cgdpd_core::oracle::OracleConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Single,
    Cgdpd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BackendChoice {
    Oracle,
    Noisy { u: f64, f: f64, g: f64 },
    Http(HttpSettings),
}

/// HTTP endpoint settings (serializable mirror of the backend config).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpSettings {
    pub endpoint: String,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub token_env: Option<String>,
    pub timeout_secs: u64,
    pub retries: usize,
    pub max_in_flight: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub template_dir: Option<PathBuf>,
}

impl HttpSettings {
    pub fn to_backend_config(&self, classifier_cfg: ClassifierConfig) -> HttpConfig {
        HttpConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            token_env: self.token_env.clone(),
            timeout_secs: self.timeout_secs,
            retries: self.retries,
            max_in_flight: self.max_in_flight,
            template_dir: self.template_dir.clone(),
            classifier_cfg,
        }
    }
}

/// Synthetic dataset request, written `N:FRAC` on the command line
/// (e.g. `500:0.5`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub decisive_fraction: f64,
}

impl FromStr for SyntheticSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, frac) = s
            .split_once(':')
            .ok_or_else(|| format!("expected N:FRAC (e.g. 500:0.5), got `{s}`"))?;
        let n = n
            .parse::<usize>()
            .map_err(|e| format!("bad example count `{n}`: {e}"))?;
        let decisive_fraction = frac
            .parse::<f64>()
            .map_err(|e| format!("bad decisive fraction `{frac}`: {e}"))?;
        if !(0.0..=1.0).contains(&decisive_fraction) {
            return Err(format!(
                "decisive fraction {decisive_fraction} is outside [0, 1]"
            ));
        }
        Ok(Self {
            n,
            decisive_fraction,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub synthetic: Option<SyntheticSpec>,
    pub backend: BackendChoice,
    pub method: Method,
    pub negator: NegationStrategy,
    pub unknown_penalty: f64,
    pub oracle: OracleConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_examples: Option<usize>,
    pub seed: u64,
    pub concurrency: usize,
    pub bootstrap_samples: usize,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline: Option<PathBuf>,
    pub keep_going: bool,
    pub strict: bool,
    pub no_cache: bool,
    pub field_map: FieldMap,
}

impl RunConfig {
    /// A config with the defaults the CLI exposes; callers set the source and
    /// output.
    pub fn new(out: PathBuf) -> Self {
        Self {
            dataset: None,
            synthetic: None,
            backend: BackendChoice::Oracle,
            method: Method::Cgdpd,
            negator: NegationStrategy::FormulaLevel,
            unknown_penalty: 0.5,
            oracle: OracleConfig::default(),
            max_examples: None,
            seed: 42,
            concurrency: 1,
            bootstrap_samples: 10_000,
            out,
            csv: None,
            baseline: None,
            keep_going: false,
            strict: false,
            no_cache: false,
            field_map: FieldMap::default(),
        }
    }

    pub fn classifier_cfg(&self) -> ClassifierConfig {
        ClassifierConfig {
            unknown_penalty: self.unknown_penalty,
            temperature: 0.0,
        }
    }
}
