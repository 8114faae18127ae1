use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::metrics::Confusion;

use super::{ClassifierModel, Fallback};

/// Per-label decision thresholds with calibration metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub values: Vec<f64>,
    pub default: f64,
    pub calibrated: bool,
    pub validation_macro_f1: Option<f64>,
    /// Labels with no positive validation sentence; they keep the default.
    pub missing: Vec<String>,
    /// Labels whose validation scores were all identical; they keep the default.
    pub degenerate: Vec<String>,
}

impl ThresholdSet {
    pub fn uniform(labels: usize, value: f64) -> Result<Self> {
        check_open(value)?;
        Ok(ThresholdSet {
            values: vec![value; labels],
            default: value,
            calibrated: false,
            validation_macro_f1: None,
            missing: Vec::new(),
            degenerate: Vec::new(),
        })
    }

    pub fn validate(&self, labels: usize) -> Result<()> {
        if self.values.len() != labels {
            return Err(Error::Contract(format!(
                "{} thresholds for {labels} labels",
                self.values.len()
            )));
        }
        check_open(self.default)?;
        self.values.iter().try_for_each(|&t| check_open(t))
    }

    pub fn get(&self, label: usize) -> f64 {
        self.values[label]
    }

    /// Returns a copy with one threshold replaced.
    pub fn with(&self, label: usize, value: f64) -> Result<Self> {
        check_open(value)?;
        let mut t = self.clone();
        t.values[label] = value;
        Ok(t)
    }
}

fn check_open(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("threshold {t} is outside (0, 1)")))
    }
}

/// Candidate thresholds 0.05, 0.10, ..., 0.95.
pub fn threshold_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

/// Grid-searches each label's threshold on `validation`, keeping the
/// lowest threshold among those with the best F1. Since macro-F1 is a sum
/// of independent per-label terms, this maximizes validation macro-F1.
pub fn calibrate_thresholds(model: &ClassifierModel, validation: &Dataset) -> Result<ThresholdSet> {
    if validation.is_empty() {
        return Err(Error::Precondition("threshold calibration needs a non-empty validation set".into()));
    }
    let sentences: Vec<_> = validation.iter().map(|s| &s.sentence).collect();
    let scores = model.predict_scores(&sentences)?;
    let labels = model.labels();
    let truth: Vec<Vec<bool>> = validation
        .iter()
        .map(|s| {
            let set = s.labels(model.role());
            labels.iter().map(|l| set.contains(l)).collect()
        })
        .collect();
    calibrate_from_scores(&scores, &truth, labels, model.config().threshold_default, model.config().fallback)
}

/// Calibration on precomputed scores; `truth[i][l]` says whether sentence
/// `i` carries label `l`.
pub fn calibrate_from_scores(
    scores: &[Vec<f32>],
    truth: &[Vec<bool>],
    labels: &[String],
    default: f64,
    fallback: Fallback,
) -> Result<ThresholdSet> {
    if scores.is_empty() {
        return Err(Error::Precondition("threshold calibration needs a non-empty validation set".into()));
    }
    if scores.len() != truth.len() || scores.iter().any(|s| s.len() != labels.len()) {
        return Err(Error::Contract("score and label matrices do not line up".into()));
    }
    let mut set = ThresholdSet::uniform(labels.len(), default)?;
    let grid = threshold_grid();
    for (l, name) in labels.iter().enumerate() {
        if truth.iter().all(|t| !t[l]) {
            set.missing.push(name.clone());
            continue;
        }
        let col: Vec<f32> = scores.iter().map(|s| s[l]).collect();
        if col.iter().all(|&x| x == col[0]) {
            set.degenerate.push(name.clone());
            continue;
        }
        let mut best = (f64::NEG_INFINITY, default);
        for &t in &grid {
            let mut c = Confusion::default();
            for (s, y) in col.iter().zip(truth) {
                c.add(*s as f64 >= t, y[l]);
            }
            let f1 = c.scores().f1;
            if f1 > best.0 {
                best = (f1, t);
            }
        }
        set.values[l] = best.1;
    }
    set.calibrated = true;

    let assigned: Vec<Vec<usize>> = scores.iter().map(|s| super::labels_from_scores(s, &set, fallback)).collect();
    let mut macro_sum = 0.0;
    for l in 0..labels.len() {
        let mut c = Confusion::default();
        for (a, y) in assigned.iter().zip(truth) {
            c.add(a.contains(&l), y[l]);
        }
        macro_sum += c.scores().f1;
    }
    set.validation_macro_f1 = Some(macro_sum / labels.len() as f64);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_nineteen_points() {
        let g = threshold_grid();
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[18], 0.95);
    }

    #[test]
    fn rejects_closed_endpoints() {
        assert!(ThresholdSet::uniform(2, 0.0).is_err());
        assert!(ThresholdSet::uniform(2, 1.0).is_err());
        let t = ThresholdSet::uniform(2, 0.5).unwrap();
        assert!(t.with(1, 1.5).is_err());
        assert_eq!(t.with(1, 0.7).unwrap().values, vec![0.5, 0.7]);
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("L{i}")).collect()
    }

    #[test]
    fn perfect_separation_takes_lowest_grid_point_in_gap() {
        // positives at 0.8, negatives at 0.31: every threshold in (0.31, 0.8] is perfect.
        let scores = vec![vec![0.8], vec![0.8], vec![0.31], vec![0.31]];
        let truth = vec![vec![true], vec![true], vec![false], vec![false]];
        let t = calibrate_from_scores(&scores, &truth, &names(1), 0.5, Fallback::None).unwrap();
        assert_eq!(t.values, vec![0.35]);
        assert_eq!(t.validation_macro_f1, Some(1.0));
    }

    #[test]
    fn constant_scores_are_degenerate() {
        let scores = vec![vec![0.5, 0.5]; 4];
        let truth = vec![vec![true, false], vec![false, true], vec![true, false], vec![false, true]];
        let t = calibrate_from_scores(&scores, &truth, &names(2), 0.5, Fallback::None).unwrap();
        assert_eq!(t.values, vec![0.5, 0.5]);
        assert_eq!(t.degenerate, names(2));
    }

    #[test]
    fn label_without_positives_keeps_default() {
        let scores = vec![vec![0.9, 0.2], vec![0.1, 0.7]];
        let truth = vec![vec![true, false], vec![false, false]];
        let t = calibrate_from_scores(&scores, &truth, &names(2), 0.5, Fallback::None).unwrap();
        assert_eq!(t.missing, vec!["L1".to_string()]);
        assert_eq!(t.values[1], 0.5);
    }

    #[test]
    fn empty_validation_is_rejected() {
        assert!(matches!(
            calibrate_from_scores(&[], &[], &names(1), 0.5, Fallback::None),
            Err(Error::Precondition(_))
        ));
    }
}
