//! The resolved description of a run, embedded verbatim in every output so
//! any artifact can be reproduced from itself (`ssvdd rerun`).

use serde::{Deserialize, Serialize};
use ssvdd::subspace::{Mode, PsiMode};
use ssvdd::model_selection::Method;
use ssvdd::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum RunConfig {
    Train(TrainConfig),
    Predict(PredictConfig),
    Benchmark(BenchmarkConfig),
    Project(ProjectConfig),
}

/// Hyperparameters as given on the command line. `sigma_scale` is kept
/// unresolved; it re-resolves against the same training rows on rerun.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub mode: Mode,
    pub psi: PsiMode,
    pub d: usize,
    pub c: f64,
    pub beta: f64,
    pub eta: f64,
    pub k_max: usize,
    pub seed: u64,
    pub sigma: Option<f64>,
    pub sigma_scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub input: String,
    pub label: String,
    pub target: Option<String>,
    pub params: ParamsConfig,
    pub standardize: bool,
    pub output: String,
    pub report: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictConfig {
    pub model: String,
    pub input: String,
    pub label: Option<String>,
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Md,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" => Ok(Format::Md),
            other => Err(Error::config(format!("unknown format \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub input: String,
    pub label: String,
    pub target: Option<String>,
    pub methods: Vec<Method>,
    pub c_grid: Option<Vec<f64>>,
    pub beta_exponents: Option<Vec<i32>>,
    pub sigma_exponents: Option<Vec<i32>>,
    pub d_grid: Option<Vec<usize>>,
    pub psi_modes: Option<Vec<PsiMode>>,
    pub eta: f64,
    pub k_max: usize,
    pub folds: usize,
    pub partitions: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub standardize: bool,
    pub sample_std: bool,
    pub dataset_name: Option<String>,
    pub format: Format,
    pub output: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub input: String,
    pub label: String,
    pub target: Option<String>,
    /// Load this model instead of training one.
    pub model: Option<String>,
    /// Training recipe when no model file is given.
    pub params: Option<ParamsConfig>,
    pub standardize: bool,
    pub output: Option<String>,
}

/// Leading comment block for CSV outputs.
pub fn csv_prelude(config: &RunConfig) -> Result<String> {
    Ok(format!("# ssvdd {VERSION}\n# config: {}\n", serde_json::to_string(config)?))
}

/// Leading comment for markdown outputs.
pub fn md_prelude(config: &RunConfig) -> Result<String> {
    Ok(format!("<!-- ssvdd {VERSION} config: {} -->\n", serde_json::to_string(config)?))
}

/// Recovers the embedded config from any output this tool has written:
/// a JSON document's `config` field, a `# config:` CSV comment, or the
/// markdown HTML comment.
pub fn extract_config(text: &str) -> Result<RunConfig> {
    let body = text.trim_start();
    if body.starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(body)?;
        let config = doc.get("config").ok_or_else(|| {
            Error::config("JSON document has no \"config\" field".to_string())
        })?;
        return Ok(serde_json::from_value(config.clone())?);
    }
    for line in body.lines().take(8) {
        if let Some(rest) = line.strip_prefix("# config: ") {
            return Ok(serde_json::from_str(rest)?);
        }
        if let Some(idx) = line.find("config: ") {
            if line.starts_with("<!--") {
                let rest = &line[idx + "config: ".len()..];
                let json = rest.strip_suffix(" -->").unwrap_or(rest);
                return Ok(serde_json::from_str(json)?);
            }
        }
    }
    Err(Error::config("no embedded run config found in file".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig::Predict(PredictConfig {
            model: "m.json".into(),
            input: "q.csv".into(),
            label: None,
            output: None,
        })
    }

    #[test]
    fn config_survives_every_embedding() {
        let config = sample();
        let as_json = format!(
            "{{\n  \"version\": \"{VERSION}\",\n  \"config\": {}\n}}",
            serde_json::to_string(&config).unwrap()
        );
        for text in [
            as_json,
            format!("{}row_id,dist\n", csv_prelude(&config).unwrap()),
            format!("{}| a |\n", md_prelude(&config).unwrap()),
        ] {
            let back = extract_config(&text).unwrap();
            assert_eq!(
                serde_json::to_string(&back).unwrap(),
                serde_json::to_string(&config).unwrap()
            );
        }
    }

    #[test]
    fn missing_config_is_reported() {
        assert!(extract_config("just,a,csv\n1,2,3\n").is_err());
        assert!(extract_config("{\"version\":\"x\"}").is_err());
    }
}
