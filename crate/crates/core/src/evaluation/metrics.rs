use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{LabelSchema, Role};

/// Confusion counts for one binary decision across a set of sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn scores(&self) -> Scores {
        let (precision, precision_undefined) = ratio(self.tp, self.tp + self.fp);
        let (recall, recall_undefined) = ratio(self.tp, self.tp + self.fn_);
        let f1_undefined = precision + recall == 0.0;
        let f1 = if f1_undefined {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores {
            precision,
            recall,
            f1,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    }
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Per-label scores. A zero denominator yields 0 with its flag set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub confusion: Confusion,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

impl LabelMetrics {
    fn new(label: &str, confusion: Confusion) -> Self {
        let s = confusion.scores();
        LabelMetrics {
            label: label.to_string(),
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            support: confusion.tp + confusion.fn_,
            confusion,
            precision_undefined: s.precision_undefined,
            recall_undefined: s.recall_undefined,
            f1_undefined: s.f1_undefined,
        }
    }
}

fn check_aligned<A, B>(predicted: &[A], truth: &[B]) -> Result<()> {
    if predicted.len() != truth.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} reference sentences",
            predicted.len(),
            truth.len()
        )));
    }
    Ok(())
}

pub fn per_label_metrics(
    predicted: &[BTreeSet<String>],
    truth: &[BTreeSet<String>],
    label: &str,
) -> Result<LabelMetrics> {
    check_aligned(predicted, truth)?;
    let mut c = Confusion::default();
    for (p, t) in predicted.iter().zip(truth) {
        c.add(p.contains(label), t.contains(label));
    }
    Ok(LabelMetrics::new(label, c))
}

/// Mean per-label F1 over every label in `labels`, including labels that
/// never occur.
pub fn macro_f1(predicted: &[BTreeSet<String>], truth: &[BTreeSet<String>], labels: &[String]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Contract("macro-F1 over an empty label set".into()));
    }
    let mut sum = 0.0;
    for l in labels {
        sum += per_label_metrics(predicted, truth, l)?.f1;
    }
    Ok(sum / labels.len() as f64)
}

/// Run settings recorded alongside each report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub mps: usize,
    pub seed: u64,
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub role: Role,
    pub labels: Vec<LabelMetrics>,
    pub macro_f1: f64,
    pub sentences: usize,
    pub config: ConfigSnapshot,
}

impl MetricsReport {
    pub fn build(
        role: Role,
        predicted: &[BTreeSet<String>],
        truth: &[BTreeSet<String>],
        labels: &[String],
        config: ConfigSnapshot,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Contract("metrics over an empty label set".into()));
        }
        let rows = labels
            .iter()
            .map(|l| per_label_metrics(predicted, truth, l))
            .collect::<Result<Vec<_>>>()?;
        let macro_f1 = rows.iter().map(|r| r.f1).sum::<f64>() / rows.len() as f64;
        Ok(MetricsReport {
            role,
            labels: rows,
            macro_f1,
            sentences: truth.len(),
            config,
        })
    }

    pub fn get(&self, label: &str) -> Option<&LabelMetrics> {
        self.labels.iter().find(|m| m.label == label)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tprecision\trecall\tf1\tsupport\tflags\n");
        for m in &self.labels {
            let mut flags = Vec::new();
            if m.precision_undefined {
                flags.push("precision-undefined");
            }
            if m.recall_undefined {
                flags.push("recall-undefined");
            }
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\n",
                m.label,
                m.precision,
                m.recall,
                m.f1,
                m.support,
                flags.join(",")
            ));
        }
        out.push_str(&format!("macro\t\t\t{:.4}\t{}\t\n", self.macro_f1, self.sentences));
        out
    }
}

/// F1 for one (component, aspect) pair. A sentence counts as predicted for
/// the pair when both of its labels are predicted by the respective models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub component: String,
    pub aspect: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub confusion: Confusion,
}

pub struct PairInputs<'a> {
    pub predicted_components: &'a [BTreeSet<String>],
    pub predicted_aspects: &'a [BTreeSet<String>],
    pub true_components: &'a [BTreeSet<String>],
    pub true_aspects: &'a [BTreeSet<String>],
}

/// Metrics for every schema pair, component-major.
pub fn pair_metrics(inputs: &PairInputs<'_>, schema: &LabelSchema) -> Result<Vec<PairMetrics>> {
    let n = inputs.true_components.len();
    check_aligned(inputs.predicted_components, inputs.true_components)?;
    check_aligned(inputs.predicted_aspects, inputs.true_aspects)?;
    check_aligned(inputs.true_aspects, inputs.true_components)?;
    let mut out = Vec::with_capacity(schema.pair_count());
    for c in &schema.component_labels {
        for a in &schema.aspect_labels {
            let mut conf = Confusion::default();
            for i in 0..n {
                let p = inputs.predicted_components[i].contains(c) && inputs.predicted_aspects[i].contains(a);
                let t = inputs.true_components[i].contains(c) && inputs.true_aspects[i].contains(a);
                conf.add(p, t);
            }
            let s = conf.scores();
            out.push(PairMetrics {
                component: c.clone(),
                aspect: a.clone(),
                precision: s.precision,
                recall: s.recall,
                f1: s.f1,
                support: conf.tp + conf.fn_,
                confusion: conf,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(v: &[&[&str]]) -> Vec<BTreeSet<String>> {
        v.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn perfect_predictions() {
        let t = sets(&[&["a"], &["b"], &["a", "b"]]);
        let m = per_label_metrics(&t, &t, "a").unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let labels = vec!["a".to_string(), "b".to_string()];
        assert_eq!(macro_f1(&t, &t, &labels).unwrap(), 1.0);
    }

    #[test]
    fn never_predicted_label_is_flagged() {
        let t = sets(&[&["a"], &["b"]]);
        let p = sets(&[&[], &["b"]]);
        let m = per_label_metrics(&p, &t, "a").unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.precision_undefined);
        assert!(!m.recall_undefined);
    }

    #[test]
    fn hand_computed_macro() {
        // label x: tp 2 fp 1 fn 1 -> p 2/3 r 2/3 f1 2/3
        // label y: tp 1 fp 0 fn 1 -> p 1 r 1/2 f1 2/3
        // label z: tp 0 fp 1 fn 0 -> 0
        let t = sets(&[&["x"], &["x", "y"], &["x"], &["y"], &[], &[]]);
        let p = sets(&[&["x"], &["x", "y"], &[], &[], &["x"], &["z"]]);
        let labels: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let expected = (2.0 / 3.0 + 2.0 / 3.0 + 0.0) / 3.0;
        assert!((macro_f1(&p, &t, &labels).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn misaligned_is_contract_error() {
        let t = sets(&[&["a"]]);
        assert!(matches!(per_label_metrics(&[], &t, "a"), Err(Error::Contract(_))));
        assert!(matches!(macro_f1(&t, &t, &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn pair_requires_both_labels() {
        let schema = LabelSchema::new("t", vec!["C".into()], vec!["A".into(), "B".into()]).unwrap();
        let tc = sets(&[&["C"], &["C"]]);
        let ta = sets(&[&["A"], &["B"]]);
        let pc = sets(&[&["C"], &[]]);
        let pa = sets(&[&["A"], &["B"]]);
        let rows = pair_metrics(
            &PairInputs {
                predicted_components: &pc,
                predicted_aspects: &pa,
                true_components: &tc,
                true_aspects: &ta,
            },
            &schema,
        )
        .unwrap();
        assert_eq!(rows[0].f1, 1.0);
        assert_eq!(rows[1].f1, 0.0);
        assert_eq!(rows[1].support, 1);
    }
}
