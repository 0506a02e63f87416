//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line whether or not it fails.
//!
//! The quantitative criteria share one paper-scale pipeline run. Set
//! `XPB_ACCEPTANCE_OUT` to keep its artifacts in a fixed directory (reruns
//! then skip completed stages); otherwise a temporary directory is used.
//! Pass criterion numbers as arguments to run a subset.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xpb::attrib::{
    exact_shapley, kernel_shap, lrp_linear, lrp_relevance, read_attributions, shap_for_gbt, shap_for_lstm,
    BackgroundSet, FnGame, Method, ShapConfig, UnitSpace,
};
use xpb::corpus::{encode_indices, read_dataset, Dataset, EventSequence, TokenCategory};
use xpb::evalx::{auc, TrainingHistory};
use xpb::gbt::GbtModel;
use xpb::harness::{DatasetSpec, ExperimentConfig, ModelKind, Pipeline, RunOptions};
use xpb::recurrent::{gradients, init_model, Attention, RecurrentConfig, RecurrentModel};
use xpb::synthgen::{
    generate_dataset, sample_record, synthetic_vocabulary, token_frequencies, DecayParams, GenConfig,
    GenMode, SplitCounts,
};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// Shared paper-scale run

struct Paper {
    config: ExperimentConfig,
    _tmp: Option<tempfile::TempDir>,
}

static PAPER: OnceLock<Result<Paper, String>> = OnceLock::new();

fn paper() -> Result<&'static Paper, String> {
    PAPER
        .get_or_init(|| {
            let (dir, tmp) = match std::env::var_os("XPB_ACCEPTANCE_OUT") {
                Some(d) => (PathBuf::from(d), None),
                None => {
                    let t = tempfile::tempdir().map_err(|e| e.to_string())?;
                    (t.path().to_path_buf(), Some(t))
                }
            };
            let mut config = ExperimentConfig::paper();
            config.output_dir = dir;
            eprintln!("running the paper-scale pipeline in {} ...", config.output_dir.display());
            let start = std::time::Instant::now();
            let options = RunOptions { quiet: std::env::var_os("XPB_VERBOSE").is_none(), ..Default::default() };
            Pipeline::new(config.clone(), options).and_then(|mut p| p.all()).map_err(|e| e.to_string())?;
            eprintln!("pipeline finished in {:.0} s", start.elapsed().as_secs_f64());
            Ok(Paper { config, _tmp: tmp })
        })
        .as_ref()
        .map_err(Clone::clone)
}

impl Paper {
    fn out(&self) -> &Path {
        &self.config.output_dir
    }

    fn dataset(&self, name: &str) -> &DatasetSpec {
        self.config.datasets.iter().find(|d| d.name == name).expect("preset dataset")
    }

    fn csv(&self, rel: &str) -> Result<Vec<BTreeMap<String, String>>, String> {
        let mut reader = csv::Reader::from_path(self.out().join(rel)).map_err(|e| e.to_string())?;
        reader.deserialize().map(|r| r.map_err(|e| e.to_string())).collect()
    }

    fn metric(&self, ds: &str, model: &str, column: &str) -> Result<f64, String> {
        let rows = self.csv("report/auc_table.csv")?;
        let row = rows
            .iter()
            .find(|r| r["dataset"] == ds && r["model"] == model)
            .ok_or_else(|| format!("no AUC row for {ds}/{model}"))?;
        row[column].parse().map_err(|e| format!("{e}"))
    }

    fn similarity(&self, ds: &str, method: &str) -> Result<f64, String> {
        let rows = self.csv("report/similarity_table.csv")?;
        let row = rows
            .iter()
            .find(|r| r["dataset"] == ds && r["method"] == method)
            .ok_or_else(|| format!("no similarity row for {ds}/{method}"))?;
        row["mean"].parse().map_err(|e| format!("{e}"))
    }

    fn split(&self, ds: &str, split: &str) -> Result<Dataset, String> {
        read_dataset(self.out().join(format!("{ds}/data/{split}.jsonl"))).map_err(|e| e.to_string())
    }

    fn lstm(&self, ds: &str) -> Result<RecurrentModel, String> {
        let text = std::fs::read_to_string(self.out().join(format!("{ds}/models/lstm-dot.json")))
            .map_err(|e| e.to_string())?;
        RecurrentModel::from_json(&text).map_err(|e| e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Quantitative replication

fn c1_event_auc() -> Check {
    let p = paper()?;
    let gbt = p.metric("event-driven", "gbt", "test_auc")?;
    let lstm = p.metric("event-driven", "lstm-dot", "test_auc")?;
    ensure(
        (gbt - 0.8177).abs() <= 0.05 && (lstm - 0.8278).abs() <= 0.05,
        format!("gbt test AUC {gbt:.4} (0.8177 ± 0.05), LSTM test AUC {lstm:.4} (0.8278 ± 0.05)"),
    )
}

fn c2_sequence_auc() -> Check {
    let p = paper()?;
    let gbt_val = p.metric("sequence-driven", "gbt", "val_auc")?;
    let lstm_val = p.metric("sequence-driven", "lstm-dot", "val_auc")?;
    let lstm_test = p.metric("sequence-driven", "lstm-dot", "test_auc")?;
    ensure(
        lstm_val - gbt_val >= 0.02 && lstm_test >= 0.82,
        format!("val gap {:.4} (≥ 0.02; LSTM {lstm_val:.4}, gbt {gbt_val:.4}), LSTM test {lstm_test:.4} (≥ 0.82)", lstm_val - gbt_val),
    )
}

fn c3_event_local() -> Check {
    let p = paper()?;
    let ds = "event-driven";
    let (shap, lrp, gbt) = (p.similarity(ds, "lstm-shap")?, p.similarity(ds, "lstm-lrp")?, p.similarity(ds, "gbt-shap")?);
    let (dot, selfa) = (p.similarity(ds, "dot-attention")?, p.similarity(ds, "self-attention")?);
    ensure(
        shap >= 0.90 && lrp >= 0.90 && (gbt - 0.79).abs() <= 0.10 && dot <= 0.40 && dot < selfa && selfa < shap,
        format!(
            "LSTM-SHAP {shap:.3} (≥ 0.90), LSTM-LRP {lrp:.3} (≥ 0.90), gbt-SHAP {gbt:.3} (0.79 ± 0.10), \
             dot-attention {dot:.3} (≤ 0.40), self-attention {selfa:.3} (between)"
        ),
    )
}

fn c4_sequence_local() -> Check {
    let p = paper()?;
    let ds = "sequence-driven";
    let (shap, lrp, gbt) = (p.similarity(ds, "lstm-shap")?, p.similarity(ds, "lstm-lrp")?, p.similarity(ds, "gbt-shap")?);
    let dot = p.similarity(ds, "dot-attention")?;
    ensure(
        shap >= 0.72 && lrp >= 0.72 && shap > gbt && lrp > gbt && dot <= 0.35,
        format!("LSTM-SHAP {shap:.3}, LSTM-LRP {lrp:.3} (≥ 0.72 and > gbt-SHAP {gbt:.3}), dot-attention {dot:.3} (≤ 0.35)"),
    )
}

fn c5_global_demarcation() -> Check {
    let p = paper()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for ds in ["event-driven", "sequence-driven"] {
        let rows = p.csv(&format!("{ds}/evaluation/global_importance.csv"))?;
        for method in ["lstm-lrp", "lstm-shap"] {
            let ranked: Vec<&BTreeMap<String, String>> = rows.iter().filter(|r| r["method"] == method).collect();
            if ranked.is_empty() {
                return Err(format!("no global importance rows for {ds}/{method}"));
            }
            let score = |r: &BTreeMap<String, String>| r["score"].parse::<f64>().unwrap_or(f64::NAN);
            let rank = |r: &BTreeMap<String, String>| r["rank"].parse::<usize>().unwrap_or(usize::MAX);
            let informative = |r: &BTreeMap<String, String>| r["category"] != "noise";
            let top = ranked.iter().filter(|r| rank(r) <= 30 && informative(r)).count();
            let mean = |want: bool| {
                let s: Vec<f64> = ranked.iter().filter(|r| informative(r) == want).map(|r| score(r)).collect();
                s.iter().sum::<f64>() / s.len() as f64
            };
            let (inf, noise) = (mean(true), mean(false));
            ok &= top >= 28 && noise < 0.5 * inf;
            parts.push(format!("{ds}/{method}: {top}/30 informative in top 30, noise/informative {:.3}", noise / inf));
        }
    }
    ensure(ok, parts.join("; "))
}

/// Independent restatement of the recency rule: exponential decay per
/// category, unhelpers subtract, result clamped to [0.1, 1].
fn oracle_probability(events: &[(TokenCategory, u32)], d: &DecayParams) -> f64 {
    let mut s = 0.0;
    for &(c, g) in events {
        let g = g as f64;
        s += match c {
            TokenCategory::Adverse => (-d.a * g).exp(),
            TokenCategory::Helper => (-d.h * g).exp(),
            TokenCategory::Unhelper => -(-d.u * g).exp(),
            TokenCategory::Noise => 0.0,
        };
    }
    s.clamp(0.1, 1.0)
}

fn categorized(record: &EventSequence, vocab: &xpb::corpus::Vocabulary) -> Vec<(TokenCategory, u32)> {
    record.events.iter().map(|e| (vocab.category_of(&e.token).expect("known token"), e.gap)).collect()
}

fn c6_pathway_means() -> Check {
    let config = GenConfig::paper(GenMode::SequenceDriven, 6);
    let vocab = synthetic_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for pathway in &config.pathways {
        let mut sum = 0.0;
        for i in 0..10_000 {
            let r = sample_record(&mut rng, &config, &vocab, pathway, i).map_err(|e| e.to_string())?;
            sum += oracle_probability(&categorized(&r, &vocab), &config.decay);
        }
        let mean = sum / 10_000.0;
        worst = worst.max((mean - pathway.base_probability).abs());
        parts.push(format!("{} {mean:.3}/{:.2}", pathway.id, pathway.base_probability));
    }
    let d = &config.decay;
    ensure(
        worst <= 0.10,
        format!("max |mean - table| {worst:.3} (≤ 0.10) with a={}, h={}, u={}: {}", d.a, d.h, d.u, parts.join(", ")),
    )
}

fn c7_dual_metric_tracking() -> Check {
    let p = paper()?;
    let read = |dir: &Path| -> Result<TrainingHistory, String> {
        let f = std::fs::File::open(dir.join("sequence-driven/history/gbt.csv")).map_err(|e| e.to_string())?;
        TrainingHistory::read_csv(f).map_err(|e| e.to_string())
    };
    let verdict = |h: &TrainingHistory| -> Option<(usize, usize, f64, f64)> {
        let (a, s) = (h.best_auc_epoch()?, h.best_similarity_epoch()?);
        let sim_at_auc = h.row(a)?.val_similarity?;
        let best_sim = h.row(s)?.val_similarity?;
        Some((a, s, best_sim, sim_at_auc))
    };
    let effect = |v: Option<(usize, usize, f64, f64)>| v.is_some_and(|(a, s, best, at)| a != s && best > at);
    let describe = |v: Option<(usize, usize, f64, f64)>| match v {
        Some((a, s, best, at)) => format!("AUC-best checkpoint {a}, similarity-best {s}, similarity {best:.3} vs {at:.3}"),
        None => "no tracked similarity".into(),
    };

    let primary = verdict(&read(p.out())?);
    if effect(primary) {
        return Ok(format!("seed {}: {}", p.config.seed, describe(primary)));
    }

    // Coincident optima on the main seed: look across five seeds.
    let mut shown = 0;
    let mut parts = vec![format!("seed {}: {}", p.config.seed, describe(primary))];
    for seed in [11u64, 23, 37, 53] {
        let dir = p.out().join(format!("tracking-seed-{seed}"));
        let mut config = p.config.clone();
        config.seed = seed;
        config.output_dir = dir.clone();
        config.datasets.retain(|d| d.name == "sequence-driven");
        config.datasets[0].models = vec![ModelKind::Gbt];
        let options = RunOptions { quiet: true, ..Default::default() };
        Pipeline::new(config, options)
            .and_then(|mut pl| {
                pl.generate()?;
                pl.train()
            })
            .map_err(|e| e.to_string())?;
        let v = verdict(&read(&dir)?);
        shown += usize::from(effect(v));
        parts.push(format!("seed {seed}: {}", describe(v)));
    }
    ensure(shown + usize::from(effect(primary)) >= 3, format!("{} (needs 3 of 5)", parts.join("; ")))
}

// ---------------------------------------------------------------------------
// Property checks

/// Shapley values straight from the weighted-marginal formula.
fn oracle_shapley(m: usize, v: &dyn Fn(&[bool]) -> f64) -> Vec<f64> {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let mut phi = vec![0.0; m];
    for mask in 0u32..(1 << m) {
        let s: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
        let size = s.iter().filter(|&&b| b).count();
        for i in (0..m).filter(|&i| !s[i]) {
            let mut with = s.clone();
            with[i] = true;
            let w = fact(size) * fact(m - size - 1) / fact(m);
            phi[i] += w * (v(&with) - v(&s));
        }
    }
    phi
}

/// Linear terms, pairwise interactions and a saturating threshold.
fn toy_game(m: usize, seed: u64) -> impl Fn(&[bool]) -> f64 + Sync {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let pairs: Vec<(usize, usize, f64)> =
        (0..m).map(|_| (rng.random_range(0..m), rng.random_range(0..m), rng.random_range(-1.0..1.0))).collect();
    move |s: &[bool]| {
        let lin: f64 = (0..m).filter(|&j| s[j]).map(|j| w[j]).sum();
        let inter: f64 = pairs.iter().filter(|(a, b, _)| s[*a] && s[*b]).map(|(_, _, c)| c).sum();
        let present = s.iter().filter(|&&b| b).count() as f64;
        lin + inter + (present - m as f64 / 2.0).max(0.0).sqrt()
    }
}

fn c8_shapley_oracle() -> Check {
    let mut worst_exact: f64 = 0.0;
    for m in 1..=10 {
        for seed in 0..3 {
            let f = toy_game(m, 100 * m as u64 + seed);
            let oracle = oracle_shapley(m, &f);
            let game = FnGame::new(m, &f);
            let enumerated = kernel_shap(&game, &ShapConfig::default()).map_err(|e| e.to_string())?;
            let exact = exact_shapley(&game).map_err(|e| e.to_string())?;
            for j in 0..m {
                worst_exact = worst_exact.max((enumerated.phi[j] - oracle[j]).abs()).max((exact.phi[j] - oracle[j]).abs());
            }
        }
    }
    let f = toy_game(10, 4242);
    let oracle = oracle_shapley(10, &f);
    let cfg = ShapConfig { coalition_samples: 4096, exact_up_to: 0, seed: 9, ..ShapConfig::default() };
    let sampled = kernel_shap(&FnGame::new(10, &f), &cfg).map_err(|e| e.to_string())?;
    let sampled_err = (0..10).map(|j| (sampled.phi[j] - oracle[j]).abs()).fold(0.0, f64::max);

    // Budget well below the coalition count, so sizes really are sampled.
    let f14 = toy_game(14, 77);
    let oracle14 = oracle_shapley(14, &f14);
    let cfg14 = ShapConfig { coalition_samples: 4096, exact_up_to: 0, seed: 9, ..ShapConfig::default() };
    let s14 = kernel_shap(&FnGame::new(14, &f14), &cfg14).map_err(|e| e.to_string())?;
    let err14 = (0..14).map(|j| (s14.phi[j] - oracle14[j]).abs()).fold(0.0, f64::max);
    ensure(
        worst_exact <= 1e-8 && sampled_err < 0.01,
        format!(
            "enumeration/exact vs oracle max error {worst_exact:.1e} (≤ 1e-8, M ≤ 10); sampled M=10 at 4096 \
             coalitions {sampled_err:.1e} (< 0.01); M=14 at 4096 {err14:.1e} (info)"
        ),
    )
}

fn c9_efficiency() -> Check {
    let p = paper()?;
    let mut worst: f64 = 0.0;
    let mut audited = 0;
    for name in ["event-driven", "sequence-driven"] {
        let ds = p.dataset(name);
        let test = p.split(name, "test")?;
        let train = p.split(name, "train")?;
        let bg_seed = p.config.derived_seed(&format!("background/{name}"));
        let background =
            BackgroundSet::sample(&train, p.config.attribution.background_size, bg_seed).map_err(|e| e.to_string())?;
        let gbt = GbtModel::from_json(
            &std::fs::read_to_string(p.out().join(format!("{name}/models/gbt.json"))).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let lstm = p.lstm(name)?;
        for label in ["gbt-shap", "lstm-shap"] {
            let space = if label == "gbt-shap" { UnitSpace::Count } else { UnitSpace::Sequence };
            let file = std::fs::File::open(p.out().join(format!("{}/attributions/{label}.csv", ds.name)))
                .map_err(|e| e.to_string())?;
            let written = read_attributions(file, Method::KernelShap, space).map_err(|e| e.to_string())?;
            let cfg = ShapConfig {
                seed: p.config.derived_seed(&format!("shap/{name}/{label}")),
                ..p.config.attribution.shap.clone()
            };
            // Recompute a slice to recover baseline and output, and confirm
            // the written scores are the ones recomputed.
            for stored in written.iter().take(25) {
                let record = test.record(stored.target).ok_or("attributed id not in test split")?;
                let fresh = if label == "gbt-shap" {
                    shap_for_gbt(&gbt, record, &test.vocabulary, &background, &cfg)
                } else {
                    shap_for_lstm(&lstm, record, &test.vocabulary, &cfg)
                }
                .map_err(|e| e.to_string())?;
                if fresh.scores != stored.scores {
                    return Err(format!("{name}/{label}: observation {} differs from its CSV", stored.target));
                }
                let out = fresh.output.ok_or("missing output")?;
                let gap = fresh.efficiency_gap().ok_or("missing baseline")?;
                worst = worst.max(gap.abs() / out.abs().max(1.0));
                audited += 1;
            }
        }
    }
    ensure(
        worst <= 1e-9,
        format!("pipeline audit passed on every emitted row; {audited} recomputed rows, max |Σφ + base - f(x)| {worst:.1e}"),
    )
}

fn c10_lrp_conservation() -> Check {
    let p = paper()?;
    let eps = p.config.attribution.lrp_eps;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for name in ["event-driven", "sequence-driven"] {
        let model = p.lstm(name)?;
        let val = p.split(name, "validation")?;
        for record in val.records.iter().take(100) {
            let idx = encode_indices(record, &val.vocabulary).map_err(|e| e.to_string())?;
            let (rel, logit) = lrp_relevance(&model, &idx.indices, eps).map_err(|e| e.to_string())?;
            let gap = (rel.iter().sum::<f64>() - logit).abs();
            if gap > 0.05 * logit.abs() + 10.0 * eps {
                violations += 1;
            }
            worst = worst.max(gap / (0.05 * logit.abs() + 10.0 * eps));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let w: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r = lrp_linear(&w, &x, 1e-12).map_err(|e| e.to_string())?;
    let linear_err = (0..12).map(|j| (r[j] - w[j] * x[j]).abs()).fold(0.0, f64::max);
    ensure(
        violations == 0 && linear_err < 1e-9,
        format!(
            "{violations} of 200 validation records outside the bound (worst at {:.0}% of it); linear surrogate error {linear_err:.1e}",
            100.0 * worst
        ),
    )
}

fn c11_gradient_check() -> Check {
    let vocab = synthetic_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let seqs: Vec<Vec<usize>> =
        (0..2).map(|_| (0..rng.random_range(3..7)).map(|_| rng.random_range(1..=vocab.len())).collect()).collect();
    let batch: Vec<(&[usize], u8)> = seqs.iter().enumerate().map(|(i, s)| (s.as_slice(), (i % 2) as u8)).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for attention in [Attention::DotProduct, Attention::SelfAttention] {
        let cfg = RecurrentConfig { embedding_dim: 3, hidden_dim: 4, seed: 5, ..RecurrentConfig::right_sized(attention) };
        let model = init_model(&cfg, &vocab).map_err(|e| e.to_string())?;
        let (_, grad) = gradients(&model, &batch).map_err(|e| e.to_string())?;
        let analytic: Vec<(&str, Vec<f64>)> = grad.blocks().into_iter().map(|b| (b.name, b.values.to_vec())).collect();
        let loss_at = |m: &RecurrentModel| gradients(m, &batch).map(|(l, _)| l).map_err(|e| e.to_string());
        let mut worst: f64 = 0.0;
        let mut checked_blocks = 0;
        for (b, (name, values)) in analytic.iter().enumerate() {
            if values.is_empty() {
                continue;
            }
            checked_blocks += 1;
            for k in 0..values.len() {
                let h = 1e-5;
                let mut plus = model.clone();
                plus.params.blocks_mut()[b].values[k] += h;
                let mut minus = model.clone();
                minus.params.blocks_mut()[b].values[k] -= h;
                let numeric = (loss_at(&plus)? - loss_at(&minus)?) / (2.0 * h);
                let a = values[k];
                if a.abs() < 1e-7 && numeric.abs() < 1e-7 {
                    continue;
                }
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
                if rel > worst {
                    worst = rel;
                }
                if !(rel < 1e-4) {
                    ok = false;
                    parts.push(format!("{attention:?}/{name}[{k}]: {a:e} vs {numeric:e}"));
                }
            }
        }
        parts.push(format!("{attention:?}: {checked_blocks} blocks, max relative error {worst:.1e}"));
    }
    ensure(ok, parts.join("; "))
}

fn c12_auc() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut mismatches = 0;
    let mut not_invariant = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..80);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..12) as f64 / 4.0).collect();
        let mut wins = 0.0;
        let (mut pos, mut neg) = (0.0, 0.0);
        for i in 0..n {
            if labels[i] == 1 {
                pos += 1.0;
            } else {
                neg += 1.0;
            }
            for j in 0..n {
                if labels[i] == 1 && labels[j] == 0 {
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let got = auc(&labels, &scores).map_err(|e| e.to_string())?;
        mismatches += usize::from(got != wins / (pos * neg));
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 1.0).collect();
        not_invariant += usize::from(auc(&labels, &warped).map_err(|e| e.to_string())? != got);
    }
    ensure(
        mismatches == 0 && not_invariant == 0,
        format!("{mismatches}/200 differ from pair counting, {not_invariant}/200 change under a monotone transform"),
    )
}

fn c13_generator() -> Check {
    let d = DecayParams::default();
    let vocab = synthetic_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cats = [TokenCategory::Adverse, TokenCategory::Helper, TokenCategory::Unhelper, TokenCategory::Noise];
    let (mut clamp_bad, mut mono_bad) = (0, 0);
    for _ in 0..2000 {
        let events: Vec<(TokenCategory, u32)> =
            (0..rng.random_range(0..8)).map(|_| (cats[rng.random_range(0..4)], rng.random_range(0..30))).collect();
        let p = d.probability(events.iter().copied());
        clamp_bad += usize::from(!(0.1..=1.0).contains(&p) || (p - oracle_probability(&events, &d)).abs() > 1e-12);
        let extra = (cats[rng.random_range(0..3)], rng.random_range(0..30));
        let mut more = events.clone();
        more.push(extra);
        let q = d.probability(more.iter().copied());
        let ok = match extra.0 {
            TokenCategory::Unhelper => q <= p,
            _ => q >= p,
        };
        mono_bad += usize::from(!ok);
    }
    let (a, u) = (TokenCategory::Adverse, TokenCategory::Unhelper);
    let uaa = d.probability([(u, 2), (a, 1), (a, 0)]);
    let aau = d.probability([(a, 2), (a, 1), (u, 0)]);

    let small = GenConfig {
        counts: SplitCounts { train: 700, validation: 200, test: 200 },
        ..GenConfig::paper(GenMode::SequenceDriven, 13)
    };
    let one = generate_dataset(&small).map_err(|e| e.to_string())?;
    let two = generate_dataset(&small).map_err(|e| e.to_string())?;
    let same = one.train.records == two.train.records && one.test.records == two.test.records;
    let other = generate_dataset(&GenConfig { seed: 14, ..small.clone() }).map_err(|e| e.to_string())?;
    let deterministic = same && other.train.records != one.train.records;

    let mut balance = Vec::new();
    let mut noise_dev: f64 = 0.0;
    let mut informative_max: f64 = 0.0;
    for mode in [GenMode::EventDriven, GenMode::SequenceDriven] {
        let splits = generate_dataset(&GenConfig::paper(mode, 13)).map_err(|e| e.to_string())?;
        balance.push(splits.train.positive_fraction());
        for (token, share) in token_frequencies(&splits.train) {
            if vocab.category_of(&token) == Some(TokenCategory::Noise) {
                noise_dev = noise_dev.max((share - 0.06).abs());
            } else {
                informative_max = informative_max.max(share);
            }
        }
    }
    let balanced = balance.iter().all(|b| (b - 0.5).abs() <= 0.02);
    ensure(
        clamp_bad == 0
            && mono_bad == 0
            && uaa > aau
            && deterministic
            && balanced
            && noise_dev <= 0.015
            && informative_max < 0.01 + 0.015,
        format!(
            "clamp/oracle violations {clamp_bad}, monotonicity violations {mono_bad}, UAA {uaa:.3} > AAU {aau:.3}, \
             deterministic {deterministic}, train balance {:.3}/{:.3}, noise share max deviation {:.2}pp, \
             informative share max {:.2}%",
            balance[0],
            balance[1],
            100.0 * noise_dev,
            100.0 * informative_max
        ),
    )
}

fn c14_determinism() -> Check {
    let base = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let mut config = ExperimentConfig::small();
        config.seed = 14;
        config.output_dir = base.path().join(run);
        let options = RunOptions { quiet: true, svg: true, ..Default::default() };
        Pipeline::new(config, options).and_then(|mut p| p.all()).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(base.path().join(run).join("report")).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            files.insert(path.file_name().unwrap().to_owned(), std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        reports.push(files);
    }
    let csvs: BTreeSet<_> = reports[0].keys().filter(|k| k.to_string_lossy().ends_with(".csv")).collect();
    let identical = reports[0] == reports[1];
    ensure(
        identical && csvs.len() >= 5,
        format!("{} report CSVs, {} files total, byte-identical across two runs: {identical}", csvs.len(), reports[0].len()),
    )
}

fn main() {
    let criteria: [(u8, &str, fn() -> Check); 14] = [
        (1, "event-driven AUC", c1_event_auc),
        (2, "sequence-driven AUC", c2_sequence_auc),
        (3, "event-driven local explainability", c3_event_local),
        (4, "sequence-driven local explainability", c4_sequence_local),
        (5, "global demarcation", c5_global_demarcation),
        (6, "sequence-probability pathway means", c6_pathway_means),
        (7, "dual-metric tracking", c7_dual_metric_tracking),
        (8, "Shapley oracle equivalence", c8_shapley_oracle),
        (9, "Shapley efficiency", c9_efficiency),
        (10, "LRP conservation", c10_lrp_conservation),
        (11, "LSTM gradient check", c11_gradient_check),
        (12, "AUC vs pair counting", c12_auc),
        (13, "generator invariants", c13_generator),
        (14, "end-to-end determinism", c14_determinism),
    ];
    let wanted: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = std::time::Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1}s]");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
