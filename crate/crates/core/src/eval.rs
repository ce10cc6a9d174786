//! Precision, recall and F1 over entity tags, confusion matrices,
//! precision-recall curves and the factor-dimension sweep.
//!
//! Scores are candidate-level. The non-entity tag `O` participates in the
//! confusion matrix but not in the per-tag or micro-averaged scores. Any
//! `0/0` ratio is reported as 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::NON_ENTITY;
use crate::error::{Error, Result};
use crate::multiclass::train_ova;
use crate::sparse::SparseVector;
use crate::trainer::TrainConfig;

/// Raw counts behind one precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.gold)
    }

    /// Harmonic mean of precision and recall, evaluated as
    /// `2 * correct / (predicted + gold)`.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.correct, self.predicted + self.gold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Entity tags (everything but `O`) seen in gold or predictions.
    pub per_tag: BTreeMap<String, Counts>,
    pub micro: Counts,
    /// All tags, sorted; row and column order of `confusion`.
    pub labels: Vec<String>,
    /// `confusion[gold][pred]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn instances(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

pub fn evaluate<G: AsRef<str>, P: AsRef<str>>(gold: &[G], pred: &[P]) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::Input(format!(
            "{} gold tags but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Input("nothing to evaluate".into()));
    }
    let labels: Vec<String> = gold
        .iter()
        .map(AsRef::as_ref)
        .chain(pred.iter().map(AsRef::as_ref))
        .collect::<BTreeSet<&str>>()
        .into_iter()
        .map(String::from)
        .collect();
    let pos = |t: &str| labels.binary_search_by(|l| l.as_str().cmp(t)).unwrap();

    let mut confusion = vec![vec![0; labels.len()]; labels.len()];
    let mut per_tag: BTreeMap<String, Counts> = labels
        .iter()
        .filter(|l| *l != NON_ENTITY)
        .map(|l| (l.clone(), Counts::default()))
        .collect();
    let mut micro = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (g.as_ref(), p.as_ref());
        confusion[pos(g)][pos(p)] += 1;
        if let Some(c) = per_tag.get_mut(g) {
            c.gold += 1;
            micro.gold += 1;
        }
        if let Some(c) = per_tag.get_mut(p) {
            c.predicted += 1;
            micro.predicted += 1;
            if g == p {
                c.correct += 1;
                micro.correct += 1;
            }
        }
    }
    Ok(EvalReport {
        per_tag,
        micro,
        labels,
        confusion,
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Human-readable table of per-tag and micro scores plus the confusion matrix.
pub fn format_report(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>7} {:>7} {:>7}", "tag", "P", "R", "F1");
    let rows = r
        .per_tag
        .iter()
        .map(|(t, c)| (t.as_str(), c))
        .chain([("micro", &r.micro)]);
    for (tag, c) in rows {
        let _ = writeln!(
            s,
            "{tag:<8} {:>7} {:>7} {:>7}",
            pct(c.precision()),
            pct(c.recall()),
            pct(c.f1())
        );
    }
    let _ = writeln!(s, "\nconfusion (rows gold, columns predicted)");
    let _ = write!(s, "{:<8}", "");
    for l in &r.labels {
        let _ = write!(s, " {l:>7}");
    }
    s.push('\n');
    for (l, row) in r.labels.iter().zip(&r.confusion) {
        let _ = write!(s, "{l:<8}");
        for v in row {
            let _ = write!(s, " {v:>7}");
        }
        s.push('\n');
    }
    s
}

/// `tag<TAB>P<TAB>R<TAB>F1` rows in percent, ending with the `micro` row.
pub fn report_tsv(r: &EvalReport) -> String {
    let mut s = String::from("tag\tP\tR\tF1\n");
    let rows = r
        .per_tag
        .iter()
        .map(|(t, c)| (t.as_str(), c))
        .chain([("micro", &r.micro)]);
    for (tag, c) in rows {
        let _ = writeln!(
            s,
            "{tag}\t{}\t{}\t{}",
            pct(c.precision()),
            pct(c.recall()),
            pct(c.f1())
        );
    }
    s
}

/// Confusion matrix as a labeled grid, gold tags down the rows.
pub fn confusion_tsv(r: &EvalReport) -> String {
    let mut s = String::from("gold\\pred");
    for l in &r.labels {
        let _ = write!(s, "\t{l}");
    }
    s.push('\n');
    for (l, row) in r.labels.iter().zip(&r.confusion) {
        s.push_str(l);
        for v in row {
            let _ = write!(s, "\t{v}");
        }
        s.push('\n');
    }
    s
}

/// One `(precision, recall)` point after each prefix of the instances ranked
/// by descending score. Equal scores keep their input order.
pub fn pr_curve(scores: &[(f64, bool)]) -> Result<Vec<(f64, f64)>> {
    let positives = scores.iter().filter(|(_, p)| *p).count();
    if positives == 0 {
        return Err(Error::Input(
            "precision-recall curve needs a positive instance".into(),
        ));
    }
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::Input("NaN score".into()));
    }
    let mut ranked: Vec<&(f64, bool)> = scores.iter().collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut hits = 0;
    Ok(ranked
        .iter()
        .enumerate()
        .map(|(i, (_, p))| {
            if *p {
                hits += 1;
            }
            (ratio(hits, i + 1), ratio(hits, positives))
        })
        .collect())
}

/// `precision<TAB>recall` rows.
pub fn curve_tsv(curve: &[(f64, f64)]) -> String {
    let mut s = String::from("precision\trecall\n");
    for (p, r) in curve {
        let _ = writeln!(s, "{p:.6}\t{r:.6}");
    }
    s
}

/// Trains a one-vs-all model for each `k` (other settings fixed) and returns
/// the micro F1 on `dev`, in the order of `k_values`.
pub fn sweep_k(
    train: &[(SparseVector, String)],
    dev: &[(SparseVector, String)],
    n: usize,
    k_values: &[usize],
    base: &TrainConfig,
) -> Result<Vec<(usize, f64)>> {
    if k_values.is_empty() {
        return Err(Error::Config("no k values to sweep".into()));
    }
    if dev.is_empty() {
        return Err(Error::Input("development set is empty".into()));
    }
    k_values
        .par_iter()
        .map(|&k| {
            let model = train_ova(train, n, &TrainConfig { k, ..base.clone() })?;
            let pred = dev
                .iter()
                .map(|(x, _)| model.predict_label(x).map(String::from))
                .collect::<Result<Vec<_>>>()?;
            let gold: Vec<&str> = dev.iter().map(|(_, t)| t.as_str()).collect();
            Ok((k, evaluate(&gold, &pred)?.micro.f1()))
        })
        .collect()
}

/// `k<TAB>F1` rows with F1 in percent.
pub fn sweep_tsv(points: &[(usize, f64)]) -> String {
    let mut s = String::from("k\tF1\n");
    for (k, f) in points {
        let _ = writeln!(s, "{k}\t{}", pct(*f));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_micro() {
        let r = evaluate(&["PER", "LOC", "O"], &["PER", "O", "LOC"]).unwrap();
        assert_eq!(
            r.micro,
            Counts {
                correct: 1,
                predicted: 2,
                gold: 2
            }
        );
        assert_eq!(r.micro.precision(), 0.5);
        assert_eq!(r.micro.recall(), 0.5);
        assert_eq!(r.micro.f1(), 0.5);
        assert_eq!(
            r.per_tag["LOC"],
            Counts {
                correct: 0,
                predicted: 1,
                gold: 1
            }
        );
        assert_eq!(r.labels, ["LOC", "O", "PER"]);
        assert_eq!(
            r.confusion,
            vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]
        );
    }

    #[test]
    fn perfect_prediction() {
        let g = ["PER", "ORG", "O", "MISC", "PER"];
        let r = evaluate(&g, &g).unwrap();
        for c in r.per_tag.values().chain([&r.micro]) {
            assert_eq!((c.precision(), c.recall(), c.f1()), (1.0, 1.0, 1.0));
        }
        assert!(!r.per_tag.contains_key("O"));
    }

    #[test]
    fn all_o_prediction() {
        let r = evaluate(&["PER", "LOC"], &["O", "O"]).unwrap();
        assert_eq!(r.micro.precision(), 0.0);
        assert_eq!(r.micro.recall(), 0.0);
        assert_eq!(r.micro.f1(), 0.0);
        assert_eq!(r.instances(), 2);
    }

    #[test]
    fn input_errors() {
        assert!(evaluate(&["PER"], &["PER", "O"]).is_err());
        assert!(evaluate::<&str, &str>(&[], &[]).is_err());
    }

    #[test]
    fn pr_curve_cases() {
        assert_eq!(pr_curve(&[(0.3, true)]).unwrap(), vec![(1.0, 1.0)]);
        let c = pr_curve(&[(0.9, true), (0.8, false), (0.7, true)]).unwrap();
        assert_eq!(c, vec![(1.0, 0.5), (0.5, 0.5), (2.0 / 3.0, 1.0)]);
        let perfect = pr_curve(&[(0.1, false), (0.9, true), (0.5, true), (0.2, false)]).unwrap();
        assert_eq!(perfect[1], (1.0, 1.0));
        assert!(pr_curve(&[(0.1, false)]).is_err());
    }

    #[test]
    fn pr_curve_ties_keep_input_order() {
        let c = pr_curve(&[(0.5, false), (0.5, true)]).unwrap();
        assert_eq!(c, vec![(0.0, 0.0), (0.5, 1.0)]);
    }

    #[test]
    fn tsv_layouts() {
        let r = evaluate(&["PER", "LOC", "O"], &["PER", "O", "LOC"]).unwrap();
        assert_eq!(
            report_tsv(&r),
            "tag\tP\tR\tF1\nLOC\t0.00\t0.00\t0.00\nPER\t100.00\t100.00\t100.00\nmicro\t50.00\t50.00\t50.00\n"
        );
        assert_eq!(
            confusion_tsv(&r),
            "gold\\pred\tLOC\tO\tPER\nLOC\t0\t1\t0\nO\t1\t0\t0\nPER\t0\t0\t1\n"
        );
        assert_eq!(sweep_tsv(&[(5, 0.571)]), "k\tF1\n5\t57.10\n");
        assert!(format_report(&r).contains("micro      50.00   50.00   50.00"));
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let cfg = TrainConfig::default();
        assert!(sweep_k(&[], &[], 1, &[], &cfg).is_err());
    }
}
