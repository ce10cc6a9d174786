//! One-vs-all reduction: one binary factorization machine per tag, with the
//! predicted tag being the argmax of the raw scores.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fm::FmModel;
use crate::io::{write_atomic, Lines};
use crate::sparse::SparseVector;
use crate::trainer::{train_binary_traced, LabeledInstance, TrainConfig};

pub const OVA_HEADER: &str = "FMOVA v1";

#[derive(Debug, Clone, PartialEq)]
pub struct OvaModel {
    labels: Vec<String>,
    models: Vec<FmModel>,
}

impl OvaModel {
    /// `labels` must be non-empty, unique and sorted; all models must share
    /// one feature dimension.
    pub fn new(labels: Vec<String>, models: Vec<FmModel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Input(
                "one-vs-all model needs at least one label".into(),
            ));
        }
        if labels.len() != models.len() {
            return Err(Error::Input(format!(
                "{} labels but {} models",
                labels.len(),
                models.len()
            )));
        }
        if labels.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Input("labels must be unique and sorted".into()));
        }
        if let Some(bad) = labels.iter().find(|l| !valid_tag(l)) {
            return Err(Error::Input(format!("invalid tag name '{bad}'")));
        }
        let n = models[0].n();
        if models.iter().any(|m| m.n() != n) {
            return Err(Error::Input("member models disagree on dimension".into()));
        }
        Ok(Self { labels, models })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn models(&self) -> &[FmModel] {
        &self.models
    }

    pub fn model_for(&self, label: &str) -> Option<&FmModel> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| &self.models[i])
    }

    pub fn n(&self) -> usize {
        self.models[0].n()
    }

    pub fn k(&self) -> usize {
        self.models[0].k()
    }

    /// Raw score of every member model, in label order.
    pub fn predict_scores(&self, x: &SparseVector) -> Result<Vec<(&str, f64)>> {
        self.labels
            .iter()
            .zip(&self.models)
            .map(|(l, m)| Ok((l.as_str(), m.predict_raw(x)?)))
            .collect()
    }

    pub fn predict_label(&self, x: &SparseVector) -> Result<&str> {
        let scores = self.predict_scores(x)?;
        Ok(argmax_label(&scores).expect("model has at least one label"))
    }

    pub fn write_to(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{OVA_HEADER}")?;
        writeln!(out, "{}", self.labels.len())?;
        for (label, model) in self.labels.iter().zip(&self.models) {
            writeln!(out, "{label}")?;
            model.write_to(out)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(lines: &mut Lines<R>) -> Result<Self> {
        let header = lines.expect_line("one-vs-all header")?;
        if header.trim() != OVA_HEADER {
            return Err(lines.error(format!("expected '{OVA_HEADER}', found '{header}'")));
        }
        let count = lines.expect_line("label count")?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| lines.error(format!("bad label count '{count}'")))?;
        let mut labels = Vec::with_capacity(count);
        let mut models = Vec::with_capacity(count);
        for _ in 0..count {
            labels.push(lines.expect_line("tag name")?.trim().to_string());
            models.push(FmModel::read_from(lines)?);
        }
        if lines.next_line()?.is_some_and(|l| !l.trim().is_empty()) {
            return Err(lines.error("trailing content after last model"));
        }
        Self::new(labels, models).map_err(|e| lines.error(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut Lines::open(path)?)
    }
}

fn valid_tag(tag: &str) -> bool {
    !tag.is_empty() && !tag.chars().any(char::is_whitespace)
}

/// Label with the highest score; ties go to the earliest label, which for
/// label-ordered scores is the lexicographically smallest one.
pub fn argmax_label<'a>(scores: &[(&'a str, f64)]) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for &(label, s) in scores {
        match best {
            Some((bl, bs)) if s < bs || (s == bs && label >= bl) => {}
            _ => best = Some((label, s)),
        }
    }
    best.map(|(l, _)| l)
}

/// Stable per-label seed: FNV-1a over the label bytes, folded with the run
/// seed through a splitmix64 finalizer.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h.rotate_left(32);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A trained one-vs-all model and, per label, the mean loss of each epoch.
#[derive(Debug, Clone)]
pub struct TrainedOva {
    pub model: OvaModel,
    pub epoch_losses: Vec<Vec<f64>>,
}

pub fn train_ova(
    data: &[(SparseVector, String)],
    n: usize,
    config: &TrainConfig,
) -> Result<OvaModel> {
    train_ova_traced(data, n, config).map(|t| t.model)
}

/// Trains the per-label binary models in parallel; results are assembled in
/// label order so the output does not depend on scheduling.
pub fn train_ova_traced(
    data: &[(SparseVector, String)],
    n: usize,
    config: &TrainConfig,
) -> Result<TrainedOva> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let labels: Vec<String> = data
        .iter()
        .map(|(_, t)| t.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let trained: Vec<_> = labels
        .par_iter()
        .map(|label| {
            let binary: Vec<LabeledInstance> = data
                .iter()
                .map(|(x, t)| LabeledInstance::new(x.clone(), t == label))
                .collect();
            let cfg = TrainConfig {
                seed: derive_seed(config.seed, label),
                ..config.clone()
            };
            train_binary_traced(&binary, n, &cfg)
        })
        .collect::<Result<_>>()?;
    let (models, epoch_losses) = trained
        .into_iter()
        .map(|t| (t.model, t.epoch_losses))
        .unzip();
    Ok(TrainedOva {
        model: OvaModel::new(labels, models)?,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(idx: &[usize]) -> SparseVector {
        SparseVector::indicators(idx.iter().copied()).unwrap()
    }

    fn bias_model(labels: &[&str], biases: &[f64]) -> OvaModel {
        let models = biases
            .iter()
            .map(|&b| FmModel::from_parts(b, vec![0.0; 2], 1, vec![vec![0.0]; 2]).unwrap())
            .collect();
        OvaModel::new(labels.iter().map(|s| s.to_string()).collect(), models).unwrap()
    }

    #[test]
    fn labels_are_sorted() {
        let data = vec![
            (ind(&[0]), "PER".to_string()),
            (ind(&[1]), "LOC".to_string()),
            (ind(&[2]), "O".to_string()),
        ];
        let cfg = TrainConfig {
            k: 2,
            epochs: 3,
            ..Default::default()
        };
        let m = train_ova(&data, 3, &cfg).unwrap();
        assert_eq!(m.labels(), &["LOC", "O", "PER"]);
        assert_eq!(m.models().len(), 3);
    }

    #[test]
    fn indicator_feature_drives_label() {
        let mut data = Vec::new();
        for i in 0..40 {
            let noise = i % 5;
            if i % 2 == 0 {
                data.push((ind(&[noise, 7]), "PER".to_string()));
            } else {
                data.push((
                    ind(&[noise]),
                    if i % 4 == 1 { "LOC" } else { "O" }.to_string(),
                ));
            }
        }
        let cfg = TrainConfig {
            k: 0,
            epochs: 50,
            ..Default::default()
        };
        let m = train_ova(&data, 8, &cfg).unwrap();
        let per = m.model_for("PER").unwrap();
        for (x, tag) in &data {
            let s = per.predict_raw(x).unwrap();
            assert_eq!(s > 0.0, tag == "PER", "score {s} for {tag}");
        }
    }

    #[test]
    fn single_label_always_predicted() {
        let data: Vec<_> = (0..5).map(|i| (ind(&[i]), "O".to_string())).collect();
        let m = train_ova(
            &data,
            5,
            &TrainConfig {
                epochs: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.labels(), &["O"]);
        for i in 0..5 {
            assert_eq!(m.predict_label(&ind(&[i])).unwrap(), "O");
        }
        assert_eq!(m.predict_label(&SparseVector::empty()).unwrap(), "O");
    }

    #[test]
    fn empty_input_scores_are_biases() {
        let m = bias_model(&["LOC", "O", "PER"], &[0.2, -1.0, 0.9]);
        let scores = m.predict_scores(&SparseVector::empty()).unwrap();
        assert_eq!(scores, vec![("LOC", 0.2), ("O", -1.0), ("PER", 0.9)]);
        assert_eq!(m.predict_label(&SparseVector::empty()).unwrap(), "PER");
    }

    #[test]
    fn ties_go_to_smallest_label() {
        let m = bias_model(&["LOC", "O", "PER"], &[0.5, -3.0, 0.5]);
        assert_eq!(m.predict_label(&SparseVector::empty()).unwrap(), "LOC");
        assert_eq!(argmax_label(&[("PER", 0.5), ("LOC", 0.5)]), Some("LOC"));
        assert_eq!(argmax_label(&[]), None);
    }

    #[test]
    fn empty_data_is_config_error() {
        assert!(matches!(
            train_ova(&[], 3, &TrainConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn seeds_differ_per_label() {
        assert_ne!(derive_seed(1, "PER"), derive_seed(1, "LOC"));
        assert_ne!(derive_seed(1, "PER"), derive_seed(2, "PER"));
        assert_eq!(derive_seed(9, "ORG"), derive_seed(9, "ORG"));
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        let m = FmModel::zeros(2, 1);
        let other = FmModel::zeros(3, 1);
        assert!(OvaModel::new(vec![], vec![]).is_err());
        assert!(OvaModel::new(vec!["B".into(), "A".into()], vec![m.clone(), m.clone()]).is_err());
        assert!(OvaModel::new(vec!["A".into(), "B".into()], vec![m.clone(), other]).is_err());
        assert!(OvaModel::new(vec!["A B".into()], vec![m]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let data = vec![
            (ind(&[0, 1]), "A".to_string()),
            (ind(&[1, 2]), "B".to_string()),
        ];
        let m = train_ova(
            &data,
            3,
            &TrainConfig {
                k: 2,
                epochs: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("FMOVA v1\n2\nA\nFMMODEL v1\n"));
        let back = OvaModel::read_from(&mut Lines::new("mem", text.as_bytes())).unwrap();
        assert_eq!(back, m);
    }
}
