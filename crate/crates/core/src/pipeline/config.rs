//! YAML pipeline configuration.
//!
//! ```yaml
//! data:
//!     lang: en
//!     name: squad
//!     split: dev-v1.1
//! ranker:
//!     use_cached: False
//!     model:
//!         name: sparta
//!         es_index_name: en-wiki-2016
//! reader:
//!     model_id: squad-context-spanbert
//! param:
//!     n_gpu: 2
//!     score_weight: 0.8
//!     top_k: 10
//! ```
//!
//! Extensions: `ranker.cache_path`, `reader.endpoint`, and the fusion keys
//! `param.reader_score_type`, `param.norm_rank`, `param.norm_reader`,
//! `param.final_k`. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fusion::{FusionParams, NormStrategy, ReaderScoreType};
use crate::reader::{ReaderKind, ReaderSpec, BUILTIN_LEXICAL_ID, DEFAULT_MAX_ANSWERS};
use crate::text::Lang;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub ranker: RankerConfig,
    pub reader: ReaderConfig,
    pub param: ParamConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub lang: Lang,
    pub name: String,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankerConfig {
    pub use_cached: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<String>,
    pub model: RankerModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankerModelConfig {
    pub name: String,
    /// Snapshot id of the index to query.
    pub es_index_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReaderConfig {
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamConfig {
    /// Accepted and recorded; the core runs no models.
    #[serde(default)]
    pub n_gpu: u32,
    pub score_weight: f64,
    pub top_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reader_score_type: Option<ReaderScoreType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_rank: Option<NormStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_reader: Option<NormStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_k: Option<usize>,
}

pub fn load_config(source: &str) -> Result<PipelineConfig, ConfigError> {
    let value: serde_yaml::Value = serde_yaml::from_str(source).map_err(|e| {
        let (line, column) = e.location().map_or((0, 0), |l| (l.line(), l.column()));
        ConfigError::Parse {
            line,
            column,
            message: e.to_string(),
        }
    })?;
    let config: PipelineConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Validation {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.param;
        if !(0.0..=1.0).contains(&p.score_weight) {
            return Err(ConfigError::invalid(
                "param.score_weight",
                format!("must be in [0, 1], got {}", p.score_weight),
            ));
        }
        if p.top_k == 0 {
            return Err(ConfigError::invalid("param.top_k", "must be >= 1"));
        }
        if p.final_k == Some(0) {
            return Err(ConfigError::invalid("param.final_k", "must be >= 1"));
        }
        if self.ranker.use_cached && self.ranker.cache_path.as_deref().is_none_or(str::is_empty) {
            return Err(ConfigError::invalid("ranker.cache_path", "required when use_cached is true"));
        }
        if self.ranker.model.es_index_name.is_empty() {
            return Err(ConfigError::invalid("ranker.model.es_index_name", "must not be empty"));
        }
        if self.reader.model_id.is_empty() {
            return Err(ConfigError::invalid("reader.model_id", "must not be empty"));
        }
        Ok(())
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serialization is infallible")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialization is infallible");
        hex::encode(Sha256::digest(json))
    }

    /// Fusion parameters with defaults applied: probability scores, floor
    /// normalization for ranks, none for the reader, five final answers.
    pub fn fusion_params(&self) -> FusionParams {
        FusionParams {
            alpha: self.param.score_weight,
            reader_score_type: self.param.reader_score_type.unwrap_or(ReaderScoreType::Probability),
            norm_rank: self.param.norm_rank.unwrap_or(NormStrategy::Floor),
            norm_reader: self.param.norm_reader.unwrap_or(NormStrategy::None),
            final_k: self.param.final_k.unwrap_or(5),
        }
    }

    /// Reader selection: an endpoint (from the config or `endpoint_override`)
    /// means a remote reader; without one, only the built-in lexical reader
    /// can run.
    pub fn reader_spec(&self, endpoint_override: Option<&str>) -> Result<ReaderSpec, ConfigError> {
        let endpoint = endpoint_override
            .filter(|e| !e.is_empty())
            .map(str::to_string)
            .or_else(|| self.reader.endpoint.clone());
        match endpoint {
            Some(ep) => Ok(ReaderSpec {
                kind: ReaderKind::Remote,
                model_id: self.reader.model_id.clone(),
                endpoint: Some(ep),
                max_answers_per_passage: DEFAULT_MAX_ANSWERS,
            }),
            None if self.reader.model_id == BUILTIN_LEXICAL_ID => Ok(ReaderSpec::builtin()),
            None => Err(ConfigError::invalid(
                "reader.endpoint",
                format!(
                    "model `{}` is served remotely and needs an endpoint (or use model_id `{BUILTIN_LEXICAL_ID}`)",
                    self.reader.model_id
                ),
            )),
        }
    }
}
