use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attrib::{Method, ShapConfig, DEFAULT_LRP_EPS};
use crate::error::{Error, Result};
use crate::gbt::GbtParams;
use crate::recurrent::{Attention, RecurrentConfig};
use crate::synthgen::{paper_pathways, DecayParams, GenConfig, GenMode, Pathway, SplitCounts};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gbt,
    LstmDot,
    LstmSelf,
    LstmPlain,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Gbt, ModelKind::LstmDot, ModelKind::LstmSelf, ModelKind::LstmPlain];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gbt => "gbt",
            ModelKind::LstmDot => "lstm-dot",
            ModelKind::LstmSelf => "lstm-self",
            ModelKind::LstmPlain => "lstm-plain",
        }
    }

    pub fn attention(self) -> Option<Attention> {
        match self {
            ModelKind::Gbt => None,
            ModelKind::LstmDot => Some(Attention::DotProduct),
            ModelKind::LstmSelf => Some(Attention::SelfAttention),
            ModelKind::LstmPlain => Some(Attention::None),
        }
    }

    /// Whether `method` can explain this model.
    pub fn supports(self, method: Method) -> bool {
        match (self, method) {
            (_, Method::KernelShap) => true,
            (ModelKind::Gbt, _) => false,
            (_, Method::ExactShapley | Method::Lrp) => true,
            (ModelKind::LstmDot, Method::DotAttention) => true,
            (ModelKind::LstmSelf, Method::SelfAttention) => true,
            _ => false,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model `{s}`")))
    }
}

/// One attribution run: a method applied to a trained model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExplainJob {
    pub model: ModelKind,
    pub method: Method,
}

impl ExplainJob {
    pub fn new(model: ModelKind, method: Method) -> Self {
        Self { model, method }
    }

    /// The five method columns of the local-explainability table.
    pub fn table() -> Vec<ExplainJob> {
        vec![
            ExplainJob::new(ModelKind::Gbt, Method::KernelShap),
            ExplainJob::new(ModelKind::LstmDot, Method::KernelShap),
            ExplainJob::new(ModelKind::LstmDot, Method::Lrp),
            ExplainJob::new(ModelKind::LstmDot, Method::DotAttention),
            ExplainJob::new(ModelKind::LstmSelf, Method::SelfAttention),
        ]
    }

    pub fn label(&self) -> String {
        match (self.model, self.method) {
            (ModelKind::Gbt, Method::KernelShap) => "gbt-shap".into(),
            (ModelKind::LstmDot, Method::KernelShap) => "lstm-shap".into(),
            (ModelKind::LstmDot, Method::Lrp) => "lstm-lrp".into(),
            (ModelKind::LstmDot, Method::DotAttention) => "dot-attention".into(),
            (ModelKind::LstmSelf, Method::SelfAttention) => "self-attention".into(),
            (model, method) => format!("{model}-{method}"),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.model.supports(self.method) {
            Ok(())
        } else {
            Err(Error::IncompatibleMethod { method: self.method.to_string(), model: self.model.to_string() })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum DataSource {
    Synthetic {
        mode: GenMode,
        counts: SplitCounts,
        #[serde(default = "paper_pathways")]
        pathways: Vec<Pathway>,
        #[serde(default)]
        decay: DecayParams,
    },
    /// Directory holding `train.jsonl`, `validation.jsonl`, `test.jsonl`.
    Files { dir: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: DataSource,
    pub models: Vec<ModelKind>,
    /// Models trained with per-epoch similarity tracking.
    #[serde(default)]
    pub track: Vec<ModelKind>,
}

/// Recurrent hyperparameters shared by every LSTM variant; the attention
/// mode comes from the model kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmSettings {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub l2_penalty: f64,
}

impl LstmSettings {
    pub fn right_sized() -> Self {
        Self::from_preset(&RecurrentConfig::right_sized(Attention::DotProduct))
    }

    pub fn too_large() -> Self {
        Self::from_preset(&RecurrentConfig::too_large(Attention::DotProduct))
    }

    fn from_preset(c: &RecurrentConfig) -> Self {
        Self {
            embedding_dim: c.embedding_dim,
            hidden_dim: c.hidden_dim,
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            l2_penalty: c.l2_penalty,
        }
    }

    pub fn recurrent_config(&self, attention: Attention, seed: u64) -> RecurrentConfig {
        RecurrentConfig {
            embedding_dim: self.embedding_dim,
            hidden_dim: self.hidden_dim,
            attention,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            l2_penalty: self.l2_penalty,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionSettings {
    pub shap: ShapConfig,
    pub background_size: usize,
    pub lrp_eps: f64,
    pub jobs: Vec<ExplainJob>,
    /// Explain at most this many test observations (the first ones by id).
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSettings {
    /// Validation observations scored at every tracked epoch.
    pub track_subsample: usize,
    pub histogram_bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub datasets: Vec<DatasetSpec>,
    pub gbt: GbtParams,
    pub lstm: LstmSettings,
    pub attribution: AttributionSettings,
    pub evaluation: EvaluationSettings,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Both synthetic datasets at 21k/7k/7k with every model and the five
    /// table methods, explaining 500 test observations per method.
    pub fn paper() -> Self {
        let all = vec![ModelKind::Gbt, ModelKind::LstmDot, ModelKind::LstmSelf];
        let synthetic = |mode| DataSource::Synthetic {
            mode,
            counts: SplitCounts { train: 21_000, validation: 7_000, test: 7_000 },
            pathways: paper_pathways(),
            decay: DecayParams::default(),
        };
        Self {
            version: CONFIG_VERSION,
            seed: 7,
            output_dir: default_output_dir(),
            datasets: vec![
                DatasetSpec {
                    name: "event-driven".into(),
                    source: synthetic(GenMode::EventDriven),
                    models: all.clone(),
                    track: vec![ModelKind::LstmDot],
                },
                DatasetSpec {
                    name: "sequence-driven".into(),
                    source: synthetic(GenMode::SequenceDriven),
                    models: all,
                    track: vec![ModelKind::Gbt, ModelKind::LstmDot],
                },
            ],
            gbt: GbtParams::default(),
            lstm: LstmSettings::right_sized(),
            attribution: AttributionSettings {
                shap: ShapConfig::default(),
                background_size: 300,
                lrp_eps: DEFAULT_LRP_EPS,
                jobs: ExplainJob::table(),
                limit: Some(500),
            },
            evaluation: EvaluationSettings { track_subsample: 128, histogram_bins: 10 },
        }
    }

    /// A scaled-down run of the same pipeline (seconds, not minutes).
    pub fn small() -> Self {
        let mut cfg = Self::paper();
        for ds in &mut cfg.datasets {
            if let DataSource::Synthetic { counts, .. } = &mut ds.source {
                *counts = SplitCounts { train: 1_400, validation: 420, test: 420 };
            }
        }
        cfg.gbt.rounds = 40;
        cfg.lstm.epochs = 4;
        cfg.lstm.learning_rate = 3e-3;
        cfg.attribution.shap.coalition_samples = 512;
        cfg.attribution.background_size = 50;
        cfg.attribution.limit = Some(40);
        cfg.evaluation.track_subsample = 24;
        cfg
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "small" => Ok(Self::small()),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}` (expected paper or small)"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported config version {}", self.version)));
        }
        if self.datasets.is_empty() {
            return Err(Error::InvalidConfig("no datasets configured".into()));
        }
        let mut names = std::collections::HashSet::new();
        for ds in &self.datasets {
            if ds.name.is_empty() || ds.name.contains(['/', '\\']) || ds.name == "report" {
                return Err(Error::InvalidConfig(format!("invalid dataset name `{}`", ds.name)));
            }
            if !names.insert(ds.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate dataset `{}`", ds.name)));
            }
            if let Some(k) = ds.track.iter().find(|k| !ds.models.contains(k)) {
                return Err(Error::InvalidConfig(format!("`{}` tracks untrained model {k}", ds.name)));
            }
            if let DataSource::Synthetic { .. } = ds.source {
                self.gen_config(ds)?.validate()?;
            }
        }
        self.gbt.validate()?;
        self.lstm.recurrent_config(Attention::DotProduct, 0).validate()?;
        for job in &self.attribution.jobs {
            job.check()?;
        }
        if self.attribution.background_size == 0 {
            return Err(Error::InvalidConfig("background_size must be positive".into()));
        }
        if !(self.attribution.lrp_eps > 0.0) {
            return Err(Error::InvalidConfig("lrp_eps must be positive".into()));
        }
        if self.evaluation.track_subsample == 0 || self.evaluation.histogram_bins == 0 {
            return Err(Error::InvalidConfig("evaluation sizes must be positive".into()));
        }
        Ok(())
    }

    /// Generator settings for a synthetic dataset, seeded from the master seed.
    pub fn gen_config(&self, ds: &DatasetSpec) -> Result<GenConfig> {
        match &ds.source {
            DataSource::Synthetic { mode, counts, pathways, decay } => Ok(GenConfig {
                mode: *mode,
                pathways: pathways.clone(),
                decay: *decay,
                counts: *counts,
                max_length: crate::corpus::MAX_EVENTS,
                balance_train: true,
                seed: self.derived_seed(&format!("generate/{}", ds.name)),
            }),
            DataSource::Files { .. } => Err(Error::InvalidConfig(format!("`{}` is not synthetic", ds.name))),
        }
    }

    pub fn derived_seed(&self, label: &str) -> u64 {
        crate::seed::derive_seed(self.seed, label)
    }

    /// SHA-256 of the canonical JSON form, ignoring where outputs go.
    pub fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        Ok(hex::encode(Sha256::digest(serde_json::to_string(&value)?.as_bytes())))
    }
}
