use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::augment::{balance_to_mps, AugmentContext, AugmentationConfig, AugmentationReport};
use crate::classifier::{train, ModelConfig, TrainConfig};
use crate::dataset::{split_dataset, Dataset, PairMatrix, SplitSpec};
use crate::error::{Error, Result};
use crate::schema::{LabelSchema, Role};

use super::metrics::{pair_metrics, ConfigSnapshot, MetricsReport, PairInputs, PairMetrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Strictly increasing; must start with 0.
    pub mps_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub split: SplitSpec,
    pub augment: AugmentationConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mps_values.first() != Some(&0) {
            return Err(Error::Config("sweep MPS values must include 0 as the baseline".into()));
        }
        if self.mps_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sweep MPS values must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("sweep needs at least one seed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub mps: usize,
    pub seed: u64,
    pub train_sentences: usize,
    pub component: MetricsReport,
    pub aspect: MetricsReport,
    pub pairs: Vec<PairMetrics>,
    /// Pairs that were eligible for augmentation in this run.
    pub augmented_pairs: Vec<(String, String)>,
    pub deficient_pairs: Vec<(String, String)>,
    /// Evaluation sentence ids, in order.
    pub evaluation_ids: Vec<String>,
    pub augmentation: Option<AugmentationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mps_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub backend: String,
    pub runs: Vec<SweepRun>,
}

fn truth(ds: &Dataset, role: Role) -> Vec<BTreeSet<String>> {
    ds.iter().map(|s| s.labels(role).clone()).collect()
}

/// For each seed, splits once. Each MPS value then gets its own augmented
/// training partition and a freshly trained pair of classifiers, scored on
/// the evaluation partition. The split is shared by every MPS value of a seed.
pub fn run_mps_sweep(
    dataset: &Dataset,
    schema: &LabelSchema,
    ctx: &AugmentContext<'_>,
    config: &SweepConfig,
) -> Result<SweepResult> {
    config.validate()?;
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        let split = split_dataset(dataset, schema, &SplitSpec { seed, ..config.split })?;
        let eval_sents: Vec<_> = split.evaluation.iter().map(|s| &s.sentence).collect();
        let true_c = truth(&split.evaluation, Role::Component);
        let true_a = truth(&split.evaluation, Role::Aspect);
        for &mps in &config.mps_values {
            let (train_set, report) = if mps == 0 {
                (split.train.clone(), None)
            } else {
                let cfg = AugmentationConfig {
                    mps,
                    seed,
                    ..config.augment.clone()
                };
                let (d, r) = balance_to_mps(&split.train, schema, ctx, &cfg)?;
                for p in r.deficient_pairs() {
                    log::warn!("seed {seed} mps {mps}: pair ({}, {}) stayed at {}", p.component, p.aspect, p.after);
                }
                (d, Some(r))
            };
            let tc = TrainConfig {
                seed,
                ..config.train.clone()
            };
            let snapshot = ConfigSnapshot {
                mps,
                seed,
                backend: config.model.backend.name().to_string(),
            };
            let mut reports = Vec::with_capacity(2);
            let mut predictions = Vec::with_capacity(2);
            for role in [Role::Component, Role::Aspect] {
                let mut model = train(&train_set, schema, role, &config.model, &tc)?;
                model.calibrate(&split.validation)?;
                let pred = model.assign_labels(&eval_sents)?;
                let t = if role == Role::Component { &true_c } else { &true_a };
                reports.push(MetricsReport::build(role, &pred, t, schema.labels(role), snapshot.clone())?);
                predictions.push(pred);
            }
            let pairs = pair_metrics(
                &PairInputs {
                    predicted_components: &predictions[0],
                    predicted_aspects: &predictions[1],
                    true_components: &true_c,
                    true_aspects: &true_a,
                },
                schema,
            )?;
            let (augmented_pairs, deficient_pairs) = match &report {
                Some(r) => (
                    r.pairs.iter().filter(|p| p.eligible).map(|p| (p.component.clone(), p.aspect.clone())).collect(),
                    r.deficient_pairs().map(|p| (p.component.clone(), p.aspect.clone())).collect(),
                ),
                None => (Vec::new(), Vec::new()),
            };
            let aspect = reports.pop().expect("aspect report");
            let component = reports.pop().expect("component report");
            log::info!(
                "seed {seed} mps {mps}: component macro-F1 {:.4}, aspect macro-F1 {:.4}",
                component.macro_f1,
                aspect.macro_f1
            );
            runs.push(SweepRun {
                mps,
                seed,
                train_sentences: train_set.len(),
                component,
                aspect,
                pairs,
                augmented_pairs,
                deficient_pairs,
                evaluation_ids: split.evaluation.iter().map(|s| s.id().to_string()).collect(),
                augmentation: report,
            });
        }
    }
    Ok(SweepResult {
        mps_values: config.mps_values.clone(),
        seeds: config.seeds.clone(),
        backend: config.model.backend.name().to_string(),
        runs,
    })
}

impl SweepResult {
    pub fn runs_for(&self, mps: usize) -> impl Iterator<Item = &SweepRun> {
        self.runs.iter().filter(move |r| r.mps == mps)
    }

    /// Plot-ready series: one row per (MPS, seed, role).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mps,seed,role,macro_f1,train_sentences\n");
        for r in &self.runs {
            for m in [&r.component, &r.aspect] {
                out.push_str(&format!("{},{},{},{:.6},{}\n", r.mps, r.seed, m.role, m.macro_f1, r.train_sentences));
            }
        }
        out
    }

    pub fn pairs_tsv(&self) -> String {
        let mut out = String::from("mps\tseed\tcomponent\taspect\tprecision\trecall\tf1\tsupport\n");
        for r in &self.runs {
            for p in &r.pairs {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                    r.mps, r.seed, p.component, p.aspect, p.precision, p.recall, p.f1, p.support
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairGroup {
    Minor,
    Major,
}

/// Group statistics at one MPS value, averaged over seeds. A group mean is
/// the mean pair F1 over the group's pairs that have evaluation support;
/// `None` means no such pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub mps: usize,
    pub minor: Option<f64>,
    pub major: Option<f64>,
    /// Pairs eligible for augmentation at this MPS value.
    pub augmented: Option<f64>,
    /// The same pairs at MPS 0.
    pub augmented_baseline: Option<f64>,
    pub component_macro_f1: f64,
    pub aspect_macro_f1: f64,
    pub minor_delta: Option<f64>,
    pub major_delta: Option<f64>,
    pub augmented_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub cut: usize,
    pub minor_pairs: Vec<(String, String)>,
    pub major_pairs: Vec<(String, String)>,
    pub rows: Vec<GroupRow>,
}

impl Breakdown {
    pub fn row(&self, mps: usize) -> Option<&GroupRow> {
        self.rows.iter().find(|r| r.mps == mps)
    }

    pub fn to_csv(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        let mut out = String::from(
            "mps,minor_f1,major_f1,augmented_f1,augmented_baseline_f1,component_macro_f1,aspect_macro_f1,minor_delta,major_delta,augmented_delta\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6},{},{},{}\n",
                r.mps,
                f(r.minor),
                f(r.major),
                f(r.augmented),
                f(r.augmented_baseline),
                r.component_macro_f1,
                r.aspect_macro_f1,
                f(r.minor_delta),
                f(r.major_delta),
                f(r.augmented_delta)
            ));
        }
        out
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.into_iter().collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn group_mean(run: &SweepRun, keep: &dyn Fn(&str, &str) -> bool) -> Option<f64> {
    mean(run.pairs.iter().filter(|p| p.support > 0 && keep(&p.component, &p.aspect)).map(|p| p.f1))
}

/// Splits pairs at `cut` sentences in `matrix` (minor: at most `cut`) and
/// reports each group's mean pair F1 per MPS value with its change from MPS 0.
pub fn major_minor_breakdown(result: &SweepResult, matrix: &PairMatrix, cut: usize) -> Result<Breakdown> {
    if cut == 0 {
        return Err(Error::Config("pair-size cut must be at least 1".into()));
    }
    let mut group: BTreeMap<(String, String), PairGroup> = BTreeMap::new();
    for (c, a, n) in matrix.cells() {
        let g = if n <= cut { PairGroup::Minor } else { PairGroup::Major };
        group.insert((c.to_string(), a.to_string()), g);
    }
    let group_ref = &group;
    let in_group = |g: PairGroup| {
        move |c: &str, a: &str| group_ref.get(&(c.to_string(), a.to_string())) == Some(&g)
    };
    let baseline: BTreeMap<u64, &SweepRun> = result.runs_for(0).map(|r| (r.seed, r)).collect();

    let mut rows = Vec::new();
    for &mps in &result.mps_values {
        let runs: Vec<&SweepRun> = result.runs_for(mps).collect();
        let minor = mean(runs.iter().filter_map(|r| group_mean(r, &in_group(PairGroup::Minor))));
        let major = mean(runs.iter().filter_map(|r| group_mean(r, &in_group(PairGroup::Major))));
        let mut aug = Vec::new();
        let mut aug_base = Vec::new();
        for r in &runs {
            let set: BTreeSet<(String, String)> = r.augmented_pairs.iter().cloned().collect();
            let keep = |c: &str, a: &str| set.contains(&(c.to_string(), a.to_string()));
            if let Some(v) = group_mean(r, &keep) {
                aug.push(v);
                if let Some(b) = baseline.get(&r.seed).and_then(|b| group_mean(b, &keep)) {
                    aug_base.push(b);
                }
            }
        }
        let augmented = mean(aug);
        let augmented_baseline = mean(aug_base);
        rows.push(GroupRow {
            mps,
            minor,
            major,
            augmented,
            augmented_baseline,
            component_macro_f1: mean(runs.iter().map(|r| r.component.macro_f1)).unwrap_or(0.0),
            aspect_macro_f1: mean(runs.iter().map(|r| r.aspect.macro_f1)).unwrap_or(0.0),
            minor_delta: None,
            major_delta: None,
            augmented_delta: augmented.zip(augmented_baseline).map(|(a, b)| a - b),
        });
    }
    let base = rows.first().map(|r| (r.minor, r.major));
    if let Some((bmin, bmaj)) = base {
        for r in &mut rows {
            r.minor_delta = r.minor.zip(bmin).map(|(x, b)| x - b);
            r.major_delta = r.major.zip(bmaj).map(|(x, b)| x - b);
        }
    }
    let pick = |g: PairGroup| -> Vec<(String, String)> {
        group.iter().filter(|(_, v)| **v == g).map(|(k, _)| k.clone()).collect()
    };
    Ok(Breakdown {
        cut,
        minor_pairs: pick(PairGroup::Minor),
        major_pairs: pick(PairGroup::Major),
        rows,
    })
}
