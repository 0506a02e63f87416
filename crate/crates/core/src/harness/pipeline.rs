use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, DatasetSpec, ExperimentConfig, ExplainJob, ModelKind};
use super::manifest::{stage_hash, FileLog, RunManifest, StageRecord, StageStatus};
use super::svg;
use crate::attrib::{
    attention_attribution, exact_shap_for_lstm, lrp_lstm, read_attributions, shap_for_gbt, shap_for_lstm,
    write_attributions, Attribution, BackgroundSet, Method, ShapConfig, UnitSpace,
};
use crate::corpus::{read_dataset, write_dataset_to, Dataset, EventSequence, Split};
use crate::error::{Error, Result};
use crate::evalx::{
    auc, global_importance, local_similarity_sweep, EpochTracker, GlobalImportance, SimilarityMode, TrackMethod,
    TrackedModel, TrainingHistory,
};
use crate::gbt::{information_gain_importance, train_gbt, GbtModel};
use crate::recurrent::{fit, init_model, RecurrentModel};
use crate::synthgen::generate_dataset;

/// Per-invocation switches layered over the experiment config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Rerun stages even when the manifest says they are current.
    pub force: bool,
    /// Overrides the configured number of explained observations.
    pub limit: Option<usize>,
    /// Also render SVG charts in the report.
    pub svg: bool,
    /// Restricts training to these models.
    pub models: Option<Vec<ModelKind>>,
    /// Restricts explanation to these jobs.
    pub jobs: Option<Vec<ExplainJob>>,
    pub quiet: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: ModelKind,
    pub val_auc: f64,
    pub test_auc: f64,
    pub best_auc_epoch: Option<usize>,
    pub best_similarity_epoch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySummary {
    pub method: String,
    pub mode: SimilarityMode,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub included: usize,
    pub excluded: usize,
    pub histogram: Vec<usize>,
}

struct Splits {
    train: Dataset,
    validation: Dataset,
    test: Dataset,
}

enum LoadedModel {
    Gbt(GbtModel),
    Recurrent(RecurrentModel),
}

impl LoadedModel {
    fn tracked(&self) -> &dyn TrackedModel {
        match self {
            LoadedModel::Gbt(m) => m,
            LoadedModel::Recurrent(m) => m,
        }
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(vec![path.to_path_buf()]),
        _ => Error::Io(e),
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn require(paths: &[PathBuf]) -> Result<()> {
    let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.is_file()).cloned().collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(missing))
    }
}

fn category_name(c: crate::corpus::TokenCategory) -> String {
    serde_json::to_value(c).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Orchestrates generate → train → explain → evaluate → report under one
/// output directory, recording every stage in the run manifest.
pub struct Pipeline {
    config: ExperimentConfig,
    options: RunOptions,
    manifest: RunManifest,
    config_hash: String,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, options: RunOptions) -> Result<Self> {
        config.validate()?;
        let manifest = RunManifest::load_or_default(&config.output_dir)?;
        let config_hash = config.hash()?;
        Ok(Self { config, options, manifest, config_hash })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output_dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn log(&self, message: impl AsRef<str>) {
        if !self.options.quiet {
            eprintln!("{}", message.as_ref());
        }
    }

    /// Runs `body` unless the manifest already holds a current record.
    fn stage(&mut self, key: &str, options: &str, body: impl FnOnce(&Self, &mut FileLog) -> Result<()>) -> Result<()> {
        let hash = stage_hash(&self.config_hash, key, options);
        if !self.options.force && self.manifest.is_current(self.out_dir(), key, &hash) {
            self.log(format!("[{key}] up to date, skipped"));
            return Ok(());
        }
        self.log(format!("[{key}] running"));
        let start = Instant::now();
        let mut files = FileLog::new(self.out_dir());
        let result = body(self, &mut files);
        let status = if result.is_ok() { StageStatus::Complete } else { StageStatus::Failed };
        self.manifest.config_hash = self.config_hash.clone();
        self.manifest.versions = BTreeMap::from([
            ("xpb".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("dataset-format".to_string(), crate::corpus::FORMAT_VERSION.to_string()),
            ("gbt-model".to_string(), crate::gbt::MODEL_VERSION.to_string()),
            ("recurrent-model".to_string(), crate::recurrent::MODEL_VERSION.to_string()),
            ("config".to_string(), super::config::CONFIG_VERSION.to_string()),
        ]);
        self.manifest.record(
            key,
            StageRecord { hash, status, seconds: start.elapsed().as_secs_f64(), files: files.into_files() },
        );
        self.manifest.save(self.out_dir())?;
        result
    }

    fn data_path(&self, ds: &DatasetSpec, split: Split) -> PathBuf {
        match &ds.source {
            DataSource::Files { dir } => dir.join(format!("{split}.jsonl")),
            DataSource::Synthetic { .. } => self.out_dir().join(Self::data_rel(ds, split)),
        }
    }

    fn data_rel(ds: &DatasetSpec, split: Split) -> String {
        format!("{}/data/{split}.jsonl", ds.name)
    }

    fn model_rel(ds: &DatasetSpec, kind: ModelKind) -> String {
        format!("{}/models/{kind}.json", ds.name)
    }

    fn attribution_rel(ds: &DatasetSpec, job: &ExplainJob) -> String {
        format!("{}/attributions/{}.csv", ds.name, job.label())
    }

    fn load_splits(&self, ds: &DatasetSpec) -> Result<Splits> {
        let paths: Vec<PathBuf> = Split::ALL.iter().map(|&s| self.data_path(ds, s)).collect();
        require(&paths)?;
        let load = |s: Split| -> Result<Dataset> {
            let mut d = read_dataset(self.data_path(ds, s))?;
            d.split = s;
            Ok(d)
        };
        let splits = Splits { train: load(Split::Train)?, validation: load(Split::Validation)?, test: load(Split::Test)? };
        if splits.train.vocabulary != splits.validation.vocabulary || splits.train.vocabulary != splits.test.vocabulary {
            return Err(Error::Schema(format!("splits of `{}` use different vocabularies", ds.name)));
        }
        Ok(splits)
    }

    fn load_model(&self, ds: &DatasetSpec, kind: ModelKind) -> Result<LoadedModel> {
        let path = self.out_dir().join(Self::model_rel(ds, kind));
        require(std::slice::from_ref(&path))?;
        let text = std::fs::read_to_string(&path)?;
        Ok(match kind {
            ModelKind::Gbt => LoadedModel::Gbt(GbtModel::from_json(&text)?),
            _ => LoadedModel::Recurrent(RecurrentModel::from_json(&text)?),
        })
    }

    fn background(&self, ds: &DatasetSpec, train: &Dataset) -> Result<BackgroundSet> {
        let seed = self.config.derived_seed(&format!("background/{}", ds.name));
        BackgroundSet::sample(train, self.config.attribution.background_size, seed)
    }

    fn shap_config(&self, ds: &DatasetSpec, purpose: &str) -> ShapConfig {
        ShapConfig {
            seed: self.config.derived_seed(&format!("shap/{}/{purpose}", ds.name)),
            ..self.config.attribution.shap.clone()
        }
    }

    pub fn generate(&mut self) -> Result<()> {
        for ds in self.config.datasets.clone() {
            if let DataSource::Files { dir } = &ds.source {
                self.log(format!("[generate/{}] external data in {}", ds.name, dir.display()));
                self.load_splits(&ds)?;
                continue;
            }
            self.stage(&format!("generate/{}", ds.name), "", |p, files| {
                let splits = generate_dataset(&p.config.gen_config(&ds)?)?;
                for (split, d) in [(Split::Train, &splits.train), (Split::Validation, &splits.validation), (Split::Test, &splits.test)] {
                    let mut buf = Vec::new();
                    write_dataset_to(d, &mut buf)?;
                    files.write(Self::data_rel(&ds, split), buf)?;
                    p.log(format!("  {split}: {} records, {:.3} positive", d.len(), d.positive_fraction()));
                }
                Ok(())
            })?;
        }
        Ok(())
    }

    pub fn train(&mut self) -> Result<()> {
        for ds in self.config.datasets.clone() {
            let kinds: Vec<ModelKind> = ds
                .models
                .iter()
                .copied()
                .filter(|k| self.options.models.as_ref().is_none_or(|m| m.contains(k)))
                .collect();
            let mut splits: Option<Splits> = None;
            for kind in kinds {
                let key = format!("train/{}/{kind}", ds.name);
                self.stage(&key, "", |p, files| {
                    if splits.is_none() {
                        splits = Some(p.load_splits(&ds)?);
                    }
                    p.train_one(&ds, kind, splits.as_ref().expect("loaded above"), files)
                })?;
            }
        }
        Ok(())
    }

    fn train_one(&self, ds: &DatasetSpec, kind: ModelKind, s: &Splits, files: &mut FileLog) -> Result<()> {
        let tracked = ds.track.contains(&kind);
        let tracker_seed = self.config.derived_seed(&format!("track/{}/{kind}", ds.name));
        let subsample = self.config.evaluation.track_subsample.min(s.validation.len());
        let (model, history) = match kind.attention() {
            None => {
                let mut tracker = if tracked {
                    let method = TrackMethod::KernelShap {
                        config: self.shap_config(ds, "track"),
                        background: Some(self.background(ds, &s.train)?),
                    };
                    Some(EpochTracker::new(&s.validation, subsample, method, tracker_seed)?)
                } else {
                    None
                };
                let (m, h) = train_gbt(&s.train, &s.validation, &self.config.gbt, tracker.as_mut())?;
                (LoadedModel::Gbt(m), h)
            }
            Some(attention) => {
                let seed = self.config.derived_seed(&format!("lstm/{}/{kind}", ds.name));
                let cfg = self.config.lstm.recurrent_config(attention, seed);
                let mut tracker = if tracked {
                    let method = TrackMethod::Lrp { eps: self.config.attribution.lrp_eps };
                    Some(EpochTracker::new(&s.validation, subsample, method, tracker_seed)?)
                } else {
                    None
                };
                let init = init_model(&cfg, &s.train.vocabulary)?;
                let (m, h) = fit(&init, &s.train, &s.validation, &cfg, tracker.as_mut())?;
                (LoadedModel::Recurrent(m), h)
            }
        };

        let score = |d: &Dataset| -> Result<f64> {
            let model = model.tracked();
            let scores = d
                .records
                .par_iter()
                .map(|r| model.predict_record(r, &d.vocabulary))
                .collect::<Result<Vec<_>>>()?;
            auc(&d.labels(), &scores)
        };
        let metrics = ModelMetrics {
            model: kind,
            val_auc: score(&s.validation)?,
            test_auc: score(&s.test)?,
            best_auc_epoch: history.best_auc_epoch(),
            best_similarity_epoch: history.best_similarity_epoch(),
        };
        let json = match &model {
            LoadedModel::Gbt(m) => m.to_json()?,
            LoadedModel::Recurrent(m) => m.to_json()?,
        };
        files.write(Self::model_rel(ds, kind), json)?;
        let mut csv = Vec::new();
        history.write_csv(&mut csv)?;
        files.write(format!("{}/history/{kind}.csv", ds.name), csv)?;
        files.write(format!("{}/metrics/{kind}.json", ds.name), serde_json::to_string_pretty(&metrics)? + "\n")?;
        self.log(format!(
            "  {kind}: val AUC {:.4}, test AUC {:.4}, best-AUC epoch {:?}, best-similarity epoch {:?}",
            metrics.val_auc, metrics.test_auc, metrics.best_auc_epoch, metrics.best_similarity_epoch
        ));
        Ok(())
    }

    fn jobs_for(&self, ds: &DatasetSpec) -> Vec<ExplainJob> {
        match &self.options.jobs {
            Some(jobs) => jobs.clone(),
            None => self.config.attribution.jobs.iter().copied().filter(|j| ds.models.contains(&j.model)).collect(),
        }
    }

    pub fn explain(&mut self) -> Result<()> {
        let limit = self.options.limit.or(self.config.attribution.limit);
        for ds in self.config.datasets.clone() {
            for job in self.jobs_for(&ds) {
                job.check()?;
                let key = format!("explain/{}/{}", ds.name, job.label());
                self.stage(&key, &format!("limit={limit:?}"), |p, files| p.explain_one(&ds, job, limit, files))?;
            }
        }
        Ok(())
    }

    fn explain_one(&self, ds: &DatasetSpec, job: ExplainJob, limit: Option<usize>, files: &mut FileLog) -> Result<()> {
        let model = self.load_model(ds, job.model)?;
        let splits = self.load_splits(ds)?;
        let test = &splits.test;
        let mut subset: Vec<&EventSequence> = test.records.iter().collect();
        subset.sort_by_key(|r| r.id);
        subset.truncate(limit.unwrap_or(usize::MAX));

        let shap = self.shap_config(ds, &job.label());
        let eps = self.config.attribution.lrp_eps;
        let background = match job.model {
            ModelKind::Gbt => Some(self.background(ds, &splits.train)?),
            _ => None,
        };
        let vocab = &test.vocabulary;
        let explain = |r: &EventSequence| -> Result<Attribution> {
            match (&model, job.method) {
                (LoadedModel::Gbt(m), Method::KernelShap) => {
                    shap_for_gbt(m, r, vocab, background.as_ref().expect("gbt background"), &shap)
                }
                (LoadedModel::Recurrent(m), Method::KernelShap) => shap_for_lstm(m, r, vocab, &shap),
                (LoadedModel::Recurrent(m), Method::ExactShapley) => exact_shap_for_lstm(m, r, vocab),
                (LoadedModel::Recurrent(m), Method::Lrp) => lrp_lstm(m, r, vocab, eps),
                (LoadedModel::Recurrent(m), Method::DotAttention | Method::SelfAttention) => {
                    attention_attribution(m, r, vocab)
                }
                _ => Err(Error::IncompatibleMethod { method: job.method.to_string(), model: job.model.to_string() }),
            }
        };
        let attrs = subset.par_iter().map(|r| explain(r)).collect::<Result<Vec<_>>>()?;

        // Efficiency audit: every Shapley attribution must add up exactly.
        let mut worst: f64 = 0.0;
        for a in &attrs {
            if let (Some(gap), Some(out)) = (a.efficiency_gap(), a.output) {
                let rel = gap.abs() / out.abs().max(1.0);
                if rel > 1e-9 {
                    return Err(Error::CheckFailed(format!(
                        "efficiency violated for observation {} ({}): gap {gap:e}",
                        a.target,
                        job.label()
                    )));
                }
                worst = worst.max(rel);
            }
        }

        let mut buf = Vec::new();
        write_attributions(&mut buf, &job.label(), &attrs, test)?;
        files.write(Self::attribution_rel(ds, &job), buf)?;
        let audit = if matches!(job.method, Method::KernelShap | Method::ExactShapley) {
            format!(", max efficiency gap {worst:.1e}")
        } else {
            String::new()
        };
        self.log(format!("  {}: {} observations{audit}", job.label(), attrs.len()));
        Ok(())
    }

    pub fn evaluate(&mut self) -> Result<()> {
        for ds in self.config.datasets.clone() {
            self.stage(&format!("evaluate/{}", ds.name), "", |p, files| p.evaluate_one(&ds, files))?;
        }
        Ok(())
    }

    fn evaluate_one(&self, ds: &DatasetSpec, files: &mut FileLog) -> Result<()> {
        let jobs = self.jobs_for(ds);
        let paths: Vec<PathBuf> = jobs.iter().map(|j| self.out_dir().join(Self::attribution_rel(ds, j))).collect();
        require(&paths)?;
        if jobs.is_empty() {
            return Err(Error::MissingArtifact(vec![self.out_dir().join(format!("{}/attributions", ds.name))]));
        }
        let test = read_dataset(self.data_path(ds, Split::Test))?;
        let bins = self.config.evaluation.histogram_bins;

        let mut summaries = Vec::new();
        let mut similarity_rows = Vec::new();
        let mut importance: Vec<GlobalImportance> = Vec::new();
        for (job, path) in jobs.iter().zip(&paths) {
            let space = if job.model == ModelKind::Gbt { UnitSpace::Count } else { UnitSpace::Sequence };
            let mode = if space == UnitSpace::Count { SimilarityMode::CountSpace } else { SimilarityMode::SequenceSpace };
            let attrs = read_attributions(std::fs::File::open(path)?, job.method, space)?;
            if attrs.is_empty() {
                return Err(Error::MissingArtifact(vec![path.clone()]));
            }
            let ids: BTreeSet<u64> = attrs.iter().map(|a| a.target).collect();
            let records = test.records.iter().filter(|r| ids.contains(&r.id)).cloned().collect();
            let subset = Dataset::new(test.vocabulary.clone(), records, Split::Test)?;
            let report = local_similarity_sweep(&subset, &attrs, mode)?;

            // Internal consistency: the summary must recompute from its rows.
            let histogram = report.histogram(bins);
            let recomputed = report.rows.iter().map(|r| r.similarity).sum::<f64>() / report.rows.len() as f64;
            let in_range = report.rows.iter().all(|r| (0.0..=1.0).contains(&r.similarity));
            if report.included() > 0
                && (recomputed.to_bits() != report.mean.to_bits()
                    || !in_range
                    || histogram.iter().sum::<usize>() != report.included())
            {
                return Err(Error::CheckFailed(format!("similarity report for {} is inconsistent", job.label())));
            }

            let label = job.label();
            similarity_rows.extend(report.rows.iter().map(|r| {
                vec![label.clone(), r.id.to_string(), r.similarity.to_string(), r.n.to_string()]
            }));
            let mut g = global_importance(&subset, &attrs)?;
            g.method = label.clone();
            importance.push(g);
            self.log(format!(
                "  {label}: mean similarity {:.3} [{:.3}, {:.3}] over {} ({} excluded)",
                report.mean,
                report.min,
                report.max,
                report.included(),
                report.excluded
            ));
            summaries.push(SimilaritySummary {
                method: label,
                mode,
                mean: report.mean,
                min: report.min,
                max: report.max,
                included: report.included(),
                excluded: report.excluded,
                histogram,
            });
        }
        if ds.models.contains(&ModelKind::Gbt) {
            if let Ok(LoadedModel::Gbt(m)) = self.load_model(ds, ModelKind::Gbt) {
                importance.push(GlobalImportance::from_scores(
                    "gbt-info-gain",
                    &test.vocabulary,
                    &information_gain_importance(&m),
                ));
            }
        }

        let base = format!("{}/evaluation", ds.name);
        files.write(
            format!("{base}/local_similarity.csv"),
            csv_bytes(&["method", "id", "similarity", "n"], similarity_rows)?,
        )?;
        let rows = importance.iter().flat_map(|g| {
            g.rows.iter().map(move |r| {
                vec![g.method.clone(), r.token.clone(), category_name(r.category), r.score.to_string(), r.rank.to_string()]
            })
        });
        files.write(
            format!("{base}/global_importance.csv"),
            csv_bytes(&["method", "token", "category", "score", "rank"], rows)?,
        )?;
        files.write(format!("{base}/similarity_summary.json"), serde_json::to_string_pretty(&summaries)? + "\n")?;
        Ok(())
    }

    pub fn report(&mut self) -> Result<()> {
        let options = format!("svg={}", self.options.svg);
        self.stage("report", &options, |p, files| p.report_inner(files))
    }

    fn report_inner(&self, files: &mut FileLog) -> Result<()> {
        let out = self.out_dir();
        let mut needed = Vec::new();
        for ds in &self.config.datasets {
            for kind in &ds.models {
                needed.push(out.join(format!("{}/metrics/{kind}.json", ds.name)));
                needed.push(out.join(format!("{}/history/{kind}.csv", ds.name)));
            }
            needed.push(out.join(format!("{}/evaluation/similarity_summary.json", ds.name)));
            needed.push(out.join(format!("{}/evaluation/global_importance.csv", ds.name)));
        }
        require(&needed)?;

        let (mut auc_rows, mut sim_rows, mut hist_rows, mut curve_rows, mut global_rows) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        // Methods as columns, datasets as rows; cells are "mean [min, max]".
        let columns: Vec<String> = ExplainJob::table().iter().map(ExplainJob::label).collect();
        let mut matrix_rows = Vec::new();
        let f6 = |x: f64| format!("{x:.6}");
        let opt = |e: Option<usize>| e.map(|v| v.to_string()).unwrap_or_default();
        for ds in &self.config.datasets {
            let mut curves = Vec::new();
            for kind in &ds.models {
                let m: ModelMetrics = read_json(&out.join(format!("{}/metrics/{kind}.json", ds.name)))?;
                auc_rows.push(vec![
                    ds.name.clone(),
                    kind.to_string(),
                    f6(m.val_auc),
                    f6(m.test_auc),
                    opt(m.best_auc_epoch),
                    opt(m.best_similarity_epoch),
                ]);
                let history =
                    TrainingHistory::read_csv(std::fs::File::open(out.join(format!("{}/history/{kind}.csv", ds.name)))?)?;
                for r in &history.rows {
                    curve_rows.push(vec![
                        ds.name.clone(),
                        kind.to_string(),
                        r.epoch.to_string(),
                        f6(r.val_auc),
                        r.val_similarity.map(f6).unwrap_or_default(),
                    ]);
                }
                curves.push((format!("{kind} AUC"), history.rows.iter().map(|r| (r.epoch as f64, r.val_auc)).collect()));
                if history.rows.iter().any(|r| r.val_similarity.is_some()) {
                    curves.push((
                        format!("{kind} similarity"),
                        history.rows.iter().map(|r| (r.epoch as f64, r.val_similarity.unwrap_or(f64::NAN))).collect(),
                    ));
                }
            }

            let summaries: Vec<SimilaritySummary> =
                read_json(&out.join(format!("{}/evaluation/similarity_summary.json", ds.name)))?;
            matrix_rows.push(
                std::iter::once(ds.name.clone())
                    .chain(columns.iter().map(|c| {
                        summaries
                            .iter()
                            .find(|s| &s.method == c)
                            .map(|s| format!("{:.3} [{:.3}, {:.3}]", s.mean, s.min, s.max))
                            .unwrap_or_default()
                    }))
                    .collect::<Vec<_>>(),
            );
            for s in &summaries {
                sim_rows.push(vec![
                    ds.name.clone(),
                    s.method.clone(),
                    f6(s.mean),
                    f6(s.min),
                    f6(s.max),
                    s.included.to_string(),
                    s.excluded.to_string(),
                ]);
                let bins = s.histogram.len();
                for (k, count) in s.histogram.iter().enumerate() {
                    hist_rows.push(vec![
                        ds.name.clone(),
                        s.method.clone(),
                        f6(k as f64 / bins as f64),
                        f6((k + 1) as f64 / bins as f64),
                        count.to_string(),
                    ]);
                }
                if self.options.svg {
                    let labels: Vec<String> =
                        (0..bins).map(|k| format!("{:.2}-{:.2}", k as f64 / bins as f64, (k + 1) as f64 / bins as f64)).collect();
                    let values: Vec<f64> = s.histogram.iter().map(|&c| c as f64).collect();
                    let title = format!("{} {}: set similarity", ds.name, s.method);
                    files.write(format!("report/{}_{}_similarity.svg", ds.name, s.method), svg::bar_chart(&title, &labels, &values))?;
                }
            }

            let mut reader = csv::Reader::from_path(out.join(format!("{}/evaluation/global_importance.csv", ds.name)))?;
            let mut by_method: BTreeMap<String, (Vec<String>, Vec<f64>)> = BTreeMap::new();
            for row in reader.records() {
                let row = row?;
                let fields: Vec<String> = row.iter().map(str::to_string).collect();
                if fields.len() != 5 {
                    return Err(Error::Schema("global_importance.csv needs 5 columns".into()));
                }
                let score: f64 =
                    fields[3].parse().map_err(|_| Error::Schema(format!("bad score `{}`", fields[3])))?;
                let entry = by_method.entry(fields[0].clone()).or_default();
                entry.0.push(format!("{} ({})", fields[1], fields[2]));
                entry.1.push(score);
                global_rows.push(
                    std::iter::once(ds.name.clone())
                        .chain(fields[..3].iter().cloned())
                        .chain([f6(score), fields[4].clone()])
                        .collect(),
                );
            }
            if self.options.svg {
                files.write(
                    format!("report/{}_epoch_curves.svg", ds.name),
                    svg::line_chart(&format!("{}: validation AUC and set similarity", ds.name), &curves),
                )?;
                for (method, (labels, values)) in &by_method {
                    let title = format!("{} {method}: global importance", ds.name);
                    files.write(format!("report/{}_{method}_global.svg", ds.name), svg::bar_chart(&title, labels, values))?;
                }
            }
        }

        files.write(
            "report/auc_table.csv",
            csv_bytes(&["dataset", "model", "val_auc", "test_auc", "best_auc_epoch", "best_similarity_epoch"], auc_rows)?,
        )?;
        files.write(
            "report/similarity_table.csv",
            csv_bytes(&["dataset", "method", "mean", "min", "max", "included", "excluded"], sim_rows)?,
        )?;
        let header: Vec<&str> = std::iter::once("dataset").chain(columns.iter().map(String::as_str)).collect();
        files.write("report/similarity_matrix.csv", csv_bytes(&header, matrix_rows)?)?;
        files.write(
            "report/similarity_histograms.csv",
            csv_bytes(&["dataset", "method", "bin_low", "bin_high", "count"], hist_rows)?,
        )?;
        files.write("report/epoch_curve.csv", csv_bytes(&["dataset", "model", "epoch", "auc", "similarity"], curve_rows)?)?;
        files.write(
            "report/global_importance.csv",
            csv_bytes(&["dataset", "method", "token", "category", "score", "rank"], global_rows)?,
        )?;
        self.log(format!("  report written to {}", out.join("report").display()));
        Ok(())
    }

    pub fn all(&mut self) -> Result<()> {
        self.generate()?;
        self.train()?;
        self.explain()?;
        self.evaluate()?;
        self.report()
    }
}
