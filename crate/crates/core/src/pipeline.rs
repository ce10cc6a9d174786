//! End-to-end stages behind the command-line tool: corpus preparation,
//! training, prediction, evaluation and the sweeps. Every stage is
//! deterministic for fixed inputs and configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::corpus::{
    corpus_stats, extract_candidates, filter_unknown, format_stats_table, parse_column_file,
    read_candidates, write_candidates, CorpusStats,
};
use crate::error::{Error, Result};
use crate::eval::{
    self, confusion_tsv, curve_tsv, format_report, pr_curve, report_tsv, EvalReport,
};
use crate::featurizer::{Candidate, FeatureSpace};
use crate::io::write_atomic;
use crate::multiclass::{train_ova_traced, OvaModel};
use crate::sparse::SparseVector;
use crate::trainer::TrainConfig;

pub const MODEL_FILE: &str = "model.fmova";
pub const FEATURES_FILE: &str = "features.txt";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_TSV: &str = "report.tsv";
pub const CONFUSION_TSV: &str = "confusion.tsv";

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Output of [`prepare`]: per-split candidate files and statistics, training
/// first.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub splits: Vec<(String, PathBuf, CorpusStats)>,
}

impl Prepared {
    pub fn stats_table(&self) -> String {
        let cols: Vec<(&str, &CorpusStats)> = self
            .splits
            .iter()
            .map(|(n, _, s)| (n.as_str(), s))
            .collect();
        format_stats_table(&cols)
    }
}

/// Parses the training file and each named evaluation file, extracts
/// candidates, drops evaluation candidates already seen in training and
/// writes `<name>.tsv` candidate files into `out_dir`.
pub fn prepare(
    train: &Path,
    eval: &[(&str, &Path)],
    token_column: usize,
    tag_column: usize,
    out_dir: &Path,
) -> Result<Prepared> {
    create_dir(out_dir)?;
    let train_cands = extract_candidates(&parse_column_file(train, token_column, tag_column)?);
    let mut splits = Vec::new();
    let path = out_dir.join("train.tsv");
    write_candidates(&path, &train_cands)?;
    splits.push(("train".to_string(), path, corpus_stats(&train_cands)));
    for (name, src) in eval {
        let cands = extract_candidates(&parse_column_file(src, token_column, tag_column)?);
        let kept = filter_unknown(&cands, &train_cands);
        let path = out_dir.join(format!("{name}.tsv"));
        write_candidates(&path, &kept)?;
        splits.push((name.to_string(), path, corpus_stats(&kept)));
    }
    Ok(Prepared { splits })
}

/// Vectorizes gold-tagged candidates.
pub fn vectorize(
    space: &FeatureSpace,
    candidates: &[Candidate],
) -> Result<Vec<(SparseVector, String)>> {
    candidates
        .iter()
        .map(|c| {
            let tag = c
                .gold
                .clone()
                .ok_or_else(|| Error::Input(format!("candidate '{}' has no tag", c.surface())))?;
            Ok((space.vectorize_candidate(c), tag))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: OvaModel,
    pub space: FeatureSpace,
    pub epoch_losses: Vec<Vec<f64>>,
}

/// Fits the feature space on the training candidates and trains the
/// one-vs-all model.
pub fn train(candidates: &[Candidate], config: &TrainConfig) -> Result<Trained> {
    config.validate()?;
    if candidates.is_empty() {
        return Err(Error::Config("no training candidates".into()));
    }
    let space = FeatureSpace::fit(candidates)?;
    let data = vectorize(&space, candidates)?;
    let t = train_ova_traced(&data, space.len(), config)?;
    Ok(Trained {
        model: t.model,
        space,
        epoch_losses: t.epoch_losses,
    })
}

/// Trains from a candidates file and writes the model and feature space into
/// `out_dir`. Per-epoch mean losses are logged.
pub fn train_to_dir(
    candidates_path: &Path,
    config: &TrainConfig,
    out_dir: &Path,
) -> Result<Trained> {
    config.validate()?;
    let candidates = read_candidates(candidates_path)?;
    let trained = train(&candidates, config)?;
    for epoch in 0..config.epochs {
        let parts: Vec<String> = trained
            .model
            .labels()
            .iter()
            .zip(&trained.epoch_losses)
            .map(|(l, losses)| format!("{l}={:.6}", losses[epoch]))
            .collect();
        log::info!(
            "epoch {:>4} mean {} loss: {}",
            epoch + 1,
            config.loss,
            parts.join(" ")
        );
    }
    create_dir(out_dir)?;
    trained.model.save(&out_dir.join(MODEL_FILE))?;
    trained.space.save(&out_dir.join(FEATURES_FILE))?;
    Ok(trained)
}

/// Trains directly from a multiclass sparse text file (with its `.labels`
/// sidecar). The dimension is one past the largest index seen; only the
/// model file is written.
pub fn train_sparse_to_dir(path: &Path, config: &TrainConfig, out_dir: &Path) -> Result<OvaModel> {
    config.validate()?;
    let data = crate::sparse_text::read_multiclass(path)?;
    let n = data
        .iter()
        .filter_map(|(x, _)| x.max_index())
        .max()
        .map_or(0, |i| i + 1);
    let model = train_ova_traced(&data, n, config)?.model;
    create_dir(out_dir)?;
    model.save(&out_dir.join(MODEL_FILE))?;
    Ok(model)
}

/// Loads a model and its feature space and checks they agree on dimension.
pub fn load_model(model_path: &Path, features_path: &Path) -> Result<(OvaModel, FeatureSpace)> {
    let model = OvaModel::load(model_path)?;
    let space = FeatureSpace::load(features_path)?;
    if model.n() != space.len() {
        return Err(Error::Compatibility(format!(
            "model dimension {} does not match feature space size {}",
            model.n(),
            space.len()
        )));
    }
    Ok((model, space))
}

/// Predicted tag and per-label raw scores for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub scores: Vec<f64>,
}

pub fn predict(
    model: &OvaModel,
    space: &FeatureSpace,
    candidates: &[Candidate],
) -> Result<Vec<Prediction>> {
    candidates
        .iter()
        .map(|c| {
            let scores = model.predict_scores(&space.vectorize_candidate(c))?;
            let label = crate::multiclass::argmax_label(&scores)
                .expect("non-empty")
                .to_string();
            Ok(Prediction {
                label,
                scores: scores.into_iter().map(|(_, s)| s).collect(),
            })
        })
        .collect()
}

/// `gold, predicted, span, score per label` rows.
pub fn predictions_tsv(model: &OvaModel, candidates: &[Candidate], preds: &[Prediction]) -> String {
    let mut s = String::from("gold\tpred\tspan");
    for l in model.labels() {
        s.push('\t');
        s.push_str(l);
    }
    s.push('\n');
    for (c, p) in candidates.iter().zip(preds) {
        s.push_str(&format!(
            "{}\t{}\t{}",
            c.gold.as_deref().unwrap_or(""),
            p.label,
            c.surface()
        ));
        for v in &p.scores {
            s.push_str(&format!("\t{}", crate::io::fmt_f64(*v)));
        }
        s.push('\n');
    }
    s
}

pub fn gold_tags(candidates: &[Candidate]) -> Result<Vec<&str>> {
    candidates
        .iter()
        .map(|c| {
            c.gold
                .as_deref()
                .ok_or_else(|| Error::Input(format!("candidate '{}' has no tag", c.surface())))
        })
        .collect()
}

pub fn evaluate_candidates(
    model: &OvaModel,
    space: &FeatureSpace,
    candidates: &[Candidate],
) -> Result<EvalReport> {
    let gold = gold_tags(candidates)?;
    let preds = predict(model, space, candidates)?;
    let pred: Vec<&str> = preds.iter().map(|p| p.label.as_str()).collect();
    eval::evaluate(&gold, &pred)
}

/// Writes `report.txt`, `report.tsv` and `confusion.tsv` into `out_dir`.
pub fn write_report(report: &EvalReport, out_dir: &Path) -> Result<()> {
    create_dir(out_dir)?;
    write_text(&out_dir.join(REPORT_TXT), &format_report(report))?;
    write_text(&out_dir.join(REPORT_TSV), &report_tsv(report))?;
    write_text(&out_dir.join(CONFUSION_TSV), &confusion_tsv(report))
}

/// Precision-recall curve of each entity label's raw scores, for every
/// label with at least one gold instance.
pub fn pr_curves(
    model: &OvaModel,
    space: &FeatureSpace,
    candidates: &[Candidate],
) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let gold = gold_tags(candidates)?;
    let preds = predict(model, space, candidates)?;
    let mut out = BTreeMap::new();
    for (li, label) in model.labels().iter().enumerate() {
        if label == crate::corpus::NON_ENTITY || !gold.contains(&label.as_str()) {
            continue;
        }
        let scored: Vec<(f64, bool)> = preds
            .iter()
            .zip(&gold)
            .map(|(p, g)| (p.scores[li], *g == label))
            .collect();
        out.insert(label.clone(), pr_curve(&scored)?);
    }
    Ok(out)
}

/// Writes one `pr-<TAG>.tsv` per curve and returns the paths.
pub fn write_pr_curves(
    curves: &BTreeMap<String, Vec<(f64, f64)>>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    curves
        .iter()
        .map(|(tag, curve)| {
            let path = out_dir.join(format!("pr-{tag}.tsv"));
            write_text(&path, &curve_tsv(curve))?;
            Ok(path)
        })
        .collect()
}

/// Dev-set micro F1 for each factor dimension. The feature space is fit on
/// the training candidates only.
pub fn sweep(
    train: &[Candidate],
    dev: &[Candidate],
    k_values: &[usize],
    base: &TrainConfig,
) -> Result<Vec<(usize, f64)>> {
    base.validate()?;
    if train.is_empty() {
        return Err(Error::Config("no training candidates".into()));
    }
    let space = FeatureSpace::fit(train)?;
    let train_data = vectorize(&space, train)?;
    let dev_data = vectorize(&space, dev)?;
    eval::sweep_k(&train_data, &dev_data, space.len(), k_values, base)
}
