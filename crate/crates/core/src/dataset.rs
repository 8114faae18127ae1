//! Labeled sentences, the (component × aspect) pair matrix, and the
//! three-way split.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Pos, Sentence, Token, Tokenizer};
use crate::error::{Error, Result};
use crate::schema::{LabelSchema, Role};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Human,
    Augmented {
        source: String,
    },
}

impl Provenance {
    pub fn is_human(&self) -> bool {
        matches!(self, Provenance::Human)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    pub component_labels: BTreeSet<String>,
    pub aspect_labels: BTreeSet<String>,
    pub provenance: Provenance,
}

impl LabeledSentence {
    pub fn id(&self) -> &str {
        &self.sentence.id
    }

    pub fn labels(&self, role: Role) -> &BTreeSet<String> {
        match role {
            Role::Component => &self.component_labels,
            Role::Aspect => &self.aspect_labels,
        }
    }

    pub fn has_pair(&self, component: &str, aspect: &str) -> bool {
        self.component_labels.contains(component) && self.aspect_labels.contains(aspect)
    }
}

/// On-disk form of a labeled sentence (one JSON object per line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub sentence_id: String,
    pub text: String,
    pub component_labels: Vec<String>,
    pub aspect_labels: Vec<String>,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_id: Option<String>,
    /// Pre-tokenized form, written for generated sentences so reloading does
    /// not depend on re-tokenizing synonym substitutions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<(String, Pos)>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub sentences: Vec<LabeledSentence>,
}

impl Dataset {
    pub fn new(sentences: Vec<LabeledSentence>) -> Self {
        Dataset { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledSentence> {
        self.sentences.iter()
    }

    pub fn from_records(
        records: Vec<LabeledRecord>,
        tokenizer: &dyn Tokenizer,
        schema: &LabelSchema,
    ) -> Result<Dataset> {
        let mut sentences = Vec::with_capacity(records.len());
        for r in records {
            let tokens = match r.tokens {
                Some(toks) => toks.into_iter().map(|(s, p)| Token::new(s, p)).collect(),
                None => tokenizer.tokenize(&r.text)?,
            };
            if tokens.is_empty() {
                return Err(Error::Tokenizer(format!(
                    "sentence `{}` produced no tokens",
                    r.sentence_id
                )));
            }
            let review_id = r.review_id.unwrap_or_else(|| {
                r.sentence_id
                    .split_once('#')
                    .map(|(rid, _)| rid.to_string())
                    .unwrap_or_default()
            });
            sentences.push(LabeledSentence {
                sentence: Sentence {
                    id: r.sentence_id,
                    review_id,
                    surface: r.text,
                    tokens,
                    join: tokenizer.join(),
                },
                component_labels: r.component_labels.into_iter().collect(),
                aspect_labels: r.aspect_labels.into_iter().collect(),
                provenance: r.provenance,
            });
        }
        let ds = Dataset { sentences };
        ds.validate(schema)?;
        Ok(ds)
    }

    pub fn read_jsonl(path: &Path, tokenizer: &dyn Tokenizer, schema: &LabelSchema) -> Result<Dataset> {
        Dataset::from_records(crate::io::read_jsonl(path)?, tokenizer, schema)
    }

    pub fn to_records(&self) -> Vec<LabeledRecord> {
        self.sentences
            .iter()
            .map(|s| LabeledRecord {
                sentence_id: s.sentence.id.clone(),
                text: s.sentence.surface.clone(),
                component_labels: s.component_labels.iter().cloned().collect(),
                aspect_labels: s.aspect_labels.iter().cloned().collect(),
                provenance: s.provenance.clone(),
                review_id: None,
                tokens: (!s.provenance.is_human()).then(|| {
                    s.sentence
                        .tokens
                        .iter()
                        .map(|t| (t.surface.clone(), t.pos))
                        .collect()
                }),
            })
            .collect()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        crate::io::write_jsonl(path, &self.to_records())
    }

    /// Every label must exist in the schema and sentence ids must be unique.
    pub fn validate(&self, schema: &LabelSchema) -> Result<()> {
        let mut ids = BTreeSet::new();
        for s in &self.sentences {
            if !ids.insert(s.id()) {
                return Err(Error::Conflict(format!("duplicate sentence_id `{}`", s.id())));
            }
            for role in [Role::Component, Role::Aspect] {
                for label in s.labels(role) {
                    if !schema.contains(role, label) {
                        return Err(Error::Schema(format!(
                            "sentence `{}` has unknown {role} label `{label}`",
                            s.id()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Indices of the sentences in each (component, aspect) cell, in schema
/// order (component-major). A sentence belongs to every cell of the cross
/// product of its two label sets.
pub fn pair_members(dataset: &Dataset, schema: &LabelSchema) -> Vec<Vec<usize>> {
    let n_aspects = schema.aspect_labels.len();
    let mut members = vec![Vec::new(); schema.pair_count()];
    for (i, s) in dataset.sentences.iter().enumerate() {
        for c in &s.component_labels {
            let Some(ci) = schema.index_of(Role::Component, c) else { continue };
            for a in &s.aspect_labels {
                let Some(ai) = schema.index_of(Role::Aspect, a) else { continue };
                members[ci * n_aspects + ai].push(i);
            }
        }
    }
    members
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMatrix {
    pub components: Vec<String>,
    pub aspects: Vec<String>,
    /// `counts[c][a]`: sentences labeled with both `c` and `a`.
    pub counts: Vec<Vec<usize>>,
    /// Sentences carrying each component label.
    pub row_totals: Vec<usize>,
    /// Sentences carrying each aspect label.
    pub column_totals: Vec<usize>,
}

impl PairMatrix {
    pub fn build(dataset: &Dataset, schema: &LabelSchema) -> Result<PairMatrix> {
        dataset.validate(schema)?;
        let nc = schema.component_labels.len();
        let na = schema.aspect_labels.len();
        let mut counts = vec![vec![0; na]; nc];
        for (p, members) in pair_members(dataset, schema).iter().enumerate() {
            counts[p / na][p % na] = members.len();
        }
        let total = |role: Role| -> Vec<usize> {
            schema
                .labels(role)
                .iter()
                .map(|l| dataset.iter().filter(|s| s.labels(role).contains(l)).count())
                .collect()
        };
        Ok(PairMatrix {
            components: schema.component_labels.clone(),
            aspects: schema.aspect_labels.clone(),
            counts,
            row_totals: total(Role::Component),
            column_totals: total(Role::Aspect),
        })
    }

    /// Matrix from raw cell counts; totals are taken as cell sums (exact when
    /// every sentence carries a single pair).
    pub fn from_cells(schema: &LabelSchema, counts: Vec<Vec<usize>>) -> Result<PairMatrix> {
        let na = schema.aspect_labels.len();
        if counts.len() != schema.component_labels.len() || counts.iter().any(|r| r.len() != na) {
            return Err(Error::Contract("cell grid does not match schema shape".into()));
        }
        let row_totals = counts.iter().map(|r| r.iter().sum()).collect();
        let column_totals = (0..na).map(|a| counts.iter().map(|r| r[a]).sum()).collect();
        Ok(PairMatrix {
            components: schema.component_labels.clone(),
            aspects: schema.aspect_labels.clone(),
            counts,
            row_totals,
            column_totals,
        })
    }

    pub fn get(&self, component: &str, aspect: &str) -> Option<usize> {
        let c = self.components.iter().position(|l| l == component)?;
        let a = self.aspects.iter().position(|l| l == aspect)?;
        Some(self.counts[c][a])
    }

    /// `(component, aspect, count)` for every cell, component-major.
    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, usize)> + '_ {
        self.components.iter().enumerate().flat_map(move |(ci, c)| {
            self.aspects
                .iter()
                .enumerate()
                .map(move |(ai, a)| (c.as_str(), a.as_str(), self.counts[ci][ai]))
        })
    }

    pub fn cell_sum(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("component");
        for a in &self.aspects {
            out.push('\t');
            out.push_str(a);
        }
        out.push_str("\ttotal\n");
        for (ci, c) in self.components.iter().enumerate() {
            out.push_str(c);
            for n in &self.counts[ci] {
                out.push_str(&format!("\t{n}"));
            }
            out.push_str(&format!("\t{}\n", self.row_totals[ci]));
        }
        out.push_str("total");
        for n in &self.column_totals {
            out.push_str(&format!("\t{n}"));
        }
        out.push_str("\t\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub lo: usize,
    pub hi: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairHistogram {
    pub bucket_width: usize,
    pub buckets: Vec<HistogramBucket>,
    pub total_pairs: usize,
    pub pairs_at_most_ten: usize,
}

impl PairHistogram {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lo\thi\tpairs\n");
        for b in &self.buckets {
            out.push_str(&format!("{}\t{}\t{}\n", b.lo, b.hi, b.pairs));
        }
        out.push_str(&format!(
            "\n# pairs\t{}\n# pairs with <= 10 sentences\t{}\n",
            self.total_pairs, self.pairs_at_most_ten
        ));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket_lo,bucket_hi,pairs\n");
        for b in &self.buckets {
            out.push_str(&format!("{},{},{}\n", b.lo, b.hi, b.pairs));
        }
        out
    }
}

/// Histogram of pair sizes with buckets `[k·w, (k+1)·w - 1]` covering `[0, max]`.
pub fn pair_histogram(matrix: &PairMatrix, bucket_width: usize) -> Result<PairHistogram> {
    if bucket_width == 0 {
        return Err(Error::Precondition("bucket width must be >= 1".into()));
    }
    let sizes: Vec<usize> = matrix.cells().map(|(_, _, n)| n).collect();
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<HistogramBucket> = (0..=max / bucket_width)
        .map(|k| HistogramBucket {
            lo: k * bucket_width,
            hi: (k + 1) * bucket_width - 1,
            pairs: 0,
        })
        .collect();
    for &n in &sizes {
        buckets[n / bucket_width].pairs += 1;
    }
    Ok(PairHistogram {
        bucket_width,
        buckets,
        total_pairs: sizes.len(),
        pairs_at_most_ten: sizes.iter().filter(|&&n| n <= 10).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub seed: u64,
    pub eval_per_pair: usize,
    pub eval_pair_min: usize,
    pub validation_size: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 0,
            eval_per_pair: 2,
            eval_pair_min: 5,
            validation_size: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub validation: Dataset,
    pub evaluation: Dataset,
}

/// Draws `eval_per_pair` evaluation sentences from every pair with at least
/// `eval_pair_min` human sentences (pairs visited in schema order, a drawn
/// sentence leaves every pair), then `validation_size` validation sentences
/// from the remaining human sentences. Everything else is training data.
/// Each partition keeps dataset order.
pub fn split_dataset(dataset: &Dataset, schema: &LabelSchema, spec: &SplitSpec) -> Result<DatasetSplit> {
    if spec.eval_per_pair >= spec.eval_pair_min {
        return Err(Error::Config(format!(
            "eval_per_pair ({}) must be smaller than eval_pair_min ({})",
            spec.eval_per_pair, spec.eval_pair_min
        )));
    }
    dataset.validate(schema)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let human: Vec<bool> = dataset.iter().map(|s| s.provenance.is_human()).collect();
    let mut part = vec![Part::Train; dataset.len()];

    for (p, members) in pair_members(dataset, schema).iter().enumerate() {
        let members: Vec<usize> = members.iter().copied().filter(|&i| human[i]).collect();
        if members.len() < spec.eval_pair_min {
            continue;
        }
        let available: Vec<usize> = members
            .into_iter()
            .filter(|&i| part[i] == Part::Train)
            .collect();
        if available.len() < spec.eval_per_pair {
            let na = schema.aspect_labels.len();
            return Err(Error::Split(format!(
                "pair ({}, {}) has {} sentences left for evaluation, needs {}",
                schema.component_labels[p / na],
                schema.aspect_labels[p % na],
                available.len(),
                spec.eval_per_pair
            )));
        }
        for k in sample(&mut rng, available.len(), spec.eval_per_pair) {
            part[available[k]] = Part::Evaluation;
        }
    }

    let remaining: Vec<usize> = (0..dataset.len())
        .filter(|&i| human[i] && part[i] == Part::Train)
        .collect();
    if remaining.len() < spec.validation_size {
        return Err(Error::Split(format!(
            "{} human sentences remain for validation, needs {} (short by {})",
            remaining.len(),
            spec.validation_size,
            spec.validation_size - remaining.len()
        )));
    }
    for k in sample(&mut rng, remaining.len(), spec.validation_size) {
        part[remaining[k]] = Part::Validation;
    }

    let collect = |which: Part| {
        Dataset::new(
            dataset
                .sentences
                .iter()
                .zip(&part)
                .filter(|(_, p)| **p == which)
                .map(|(s, _)| s.clone())
                .collect(),
        )
    };
    Ok(DatasetSplit {
        train: collect(Part::Train),
        validation: collect(Part::Validation),
        evaluation: collect(Part::Evaluation),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Train,
    Validation,
    Evaluation,
}
