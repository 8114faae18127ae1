//! Similar-sentence generation by single-word synonym replacement, validated
//! against the corpus n-gram index, and rebalancing of under-populated pairs
//! up to a minimum pair size.

mod divider;
mod lexicon;

use std::collections::{BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{NGramIndex, Pos, Sentence, Token, BOUNDARY_END, BOUNDARY_START};
use crate::dataset::{pair_members, Dataset, LabeledSentence, Provenance};
use crate::error::{Error, Result};
use crate::schema::LabelSchema;

pub use divider::{CompoundNounDivider, DividerKind, TokenDivider, WordDivider};
pub use lexicon::{FileLexicon, SynonymLexicon, WordNetLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationLevel {
    Trigram,
    Bigram,
    Unigram,
}

impl ValidationLevel {
    pub fn order(self) -> usize {
        match self {
            ValidationLevel::Trigram => 3,
            ValidationLevel::Bigram => 2,
            ValidationLevel::Unigram => 1,
        }
    }

    pub fn from_order(n: usize) -> Result<Self> {
        match n {
            3 => Ok(ValidationLevel::Trigram),
            2 => Ok(ValidationLevel::Bigram),
            1 => Ok(ValidationLevel::Unigram),
            _ => Err(Error::Config(format!("n-gram validation level must be 1, 2 or 3, got {n}"))),
        }
    }

    /// Grams that validate a replacement at `pos` of `words`, in the order
    /// they are tried. Sentence edges use the boundary markers.
    pub fn grams(self, words: &[&str], pos: usize) -> Vec<Vec<String>> {
        let at = |i: isize| -> String {
            if i < 0 {
                BOUNDARY_START.to_string()
            } else if i as usize >= words.len() {
                BOUNDARY_END.to_string()
            } else {
                words[i as usize].to_string()
            }
        };
        let p = pos as isize;
        match self {
            ValidationLevel::Trigram => vec![vec![at(p - 1), at(p), at(p + 1)]],
            ValidationLevel::Bigram => vec![vec![at(p - 1), at(p)], vec![at(p), at(p + 1)]],
            ValidationLevel::Unigram => vec![vec![at(p)]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    /// Minimum pair size; 0 disables augmentation.
    pub mps: usize,
    pub eligibility_min: usize,
    pub seed: u64,
    pub max_attempts_per_pair: usize,
    pub ngram_levels: Vec<ValidationLevel>,
    /// Word units with these tags are never replaced.
    pub exclude_pos: BTreeSet<Pos>,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            mps: 0,
            eligibility_min: 3,
            seed: 0,
            max_attempts_per_pair: 200,
            ngram_levels: vec![
                ValidationLevel::Trigram,
                ValidationLevel::Bigram,
                ValidationLevel::Unigram,
            ],
            exclude_pos: [Pos::Particle, Pos::Symbol].into_iter().collect(),
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eligibility_min == 0 {
            return Err(Error::Config("augment.eligibility_min must be >= 1".into()));
        }
        if self.ngram_levels.is_empty() {
            return Err(Error::Config("augment.ngram_levels must not be empty".into()));
        }
        if self.ngram_levels.windows(2).any(|w| w[0].order() <= w[1].order()) {
            return Err(Error::Config("augment.ngram_levels must be strictly decreasing".into()));
        }
        Ok(())
    }
}

/// Read-only resources shared by every generation attempt.
#[derive(Clone, Copy)]
pub struct AugmentContext<'a> {
    pub lexicon: &'a dyn SynonymLexicon,
    pub index: &'a NGramIndex,
    pub divider: &'a dyn WordDivider,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedSentence {
    pub sentence: Sentence,
    pub source_id: String,
    /// Word-unit position that was replaced.
    pub position: usize,
    pub original: String,
    pub synonym: String,
    pub level: ValidationLevel,
    /// The gram found in the index.
    pub validated_gram: Vec<String>,
    pub component_labels: BTreeSet<String>,
    pub aspect_labels: BTreeSet<String>,
}

impl GeneratedSentence {
    pub fn into_labeled(self) -> LabeledSentence {
        LabeledSentence {
            sentence: self.sentence,
            component_labels: self.component_labels,
            aspect_labels: self.aspect_labels,
            provenance: Provenance::Augmented {
                source: self.source_id,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NoSources,
    NoReplaceableWord,
    NoSynonyms { word: String },
    NotInCorpus { level: ValidationLevel },
    Duplicate,
}

fn replaceable(tok: &Token, exclude: &BTreeSet<Pos>) -> bool {
    !exclude.contains(&tok.pos)
        && tok.surface != BOUNDARY_START
        && tok.surface != BOUNDARY_END
        && tok.surface.chars().any(char::is_alphanumeric)
}

/// One generation attempt: pick a source sentence, a replaceable word unit
/// and one of its synonyms, then check the replacement's `level`-gram
/// against the corpus index. Hard failures (a broken lexicon backend) are
/// errors; ordinary misses come back as a [`Rejection`].
pub fn generate_similar_sentence(
    sources: &[&LabeledSentence],
    ctx: &AugmentContext<'_>,
    level: ValidationLevel,
    exclude_pos: &BTreeSet<Pos>,
    rng: &mut impl Rng,
) -> Result<std::result::Result<GeneratedSentence, Rejection>> {
    let Some(source) = sources.choose(rng) else {
        return Ok(Err(Rejection::NoSources));
    };
    let words = ctx.divider.divide(&source.sentence);
    let candidates: Vec<usize> = (0..words.len())
        .filter(|&i| replaceable(&words[i], exclude_pos))
        .collect();
    let Some(&position) = candidates.choose(rng) else {
        return Ok(Err(Rejection::NoReplaceableWord));
    };
    let original = words[position].surface.clone();
    let synonyms = ctx.lexicon.synonyms(&original)?;
    let Some(synonym) = synonyms.choose(rng).cloned() else {
        return Ok(Err(Rejection::NoSynonyms { word: original }));
    };
    let synonym_index = synonyms.iter().position(|s| *s == synonym).unwrap_or(0);

    let mut new_words = words.clone();
    new_words[position].surface = synonym.clone();
    let surfaces: Vec<&str> = new_words.iter().map(|t| t.surface.as_str()).collect();
    let mut validated = None;
    for gram in level.grams(&surfaces, position) {
        if ctx.index.contains(&gram)? {
            validated = Some(gram);
            break;
        }
    }
    let Some(validated_gram) = validated else {
        return Ok(Err(Rejection::NotInCorpus { level }));
    };

    let join = source.sentence.join;
    Ok(Ok(GeneratedSentence {
        sentence: Sentence {
            id: format!("{}/aug{}.{}", source.sentence.id, position, synonym_index),
            review_id: source.sentence.review_id.clone(),
            surface: join.join(&surfaces),
            tokens: new_words,
            join,
        },
        source_id: source.sentence.id.clone(),
        position,
        original,
        synonym,
        level,
        validated_gram,
        component_labels: source.component_labels.clone(),
        aspect_labels: source.aspect_labels.clone(),
    }))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub trigram: usize,
    pub bigram: usize,
    pub unigram: usize,
}

impl LevelCounts {
    pub fn total(&self) -> usize {
        self.trigram + self.bigram + self.unigram
    }

    pub fn get(&self, level: ValidationLevel) -> usize {
        match level {
            ValidationLevel::Trigram => self.trigram,
            ValidationLevel::Bigram => self.bigram,
            ValidationLevel::Unigram => self.unigram,
        }
    }

    fn bump(&mut self, level: ValidationLevel) {
        match level {
            ValidationLevel::Trigram => self.trigram += 1,
            ValidationLevel::Bigram => self.bigram += 1,
            ValidationLevel::Unigram => self.unigram += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub component: String,
    pub aspect: String,
    pub before: usize,
    pub after: usize,
    pub generated: LevelCounts,
    /// Sentences generated for other pairs that also carry this pair's labels.
    pub spillover: usize,
    pub attempts: usize,
    pub attempts_by_level: LevelCounts,
    pub eligible: bool,
    pub deficient: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub no_sources: usize,
    pub no_replaceable_word: usize,
    pub no_synonyms: usize,
    pub not_in_corpus: usize,
    pub duplicate: usize,
}

impl RejectionCounts {
    fn record(&mut self, r: &Rejection) {
        match r {
            Rejection::NoSources => self.no_sources += 1,
            Rejection::NoReplaceableWord => self.no_replaceable_word += 1,
            Rejection::NoSynonyms { .. } => self.no_synonyms += 1,
            Rejection::NotInCorpus { .. } => self.not_in_corpus += 1,
            Rejection::Duplicate => self.duplicate += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.no_sources + self.no_replaceable_word + self.no_synonyms + self.not_in_corpus + self.duplicate
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationReport {
    pub mps: usize,
    pub seed: u64,
    pub pairs: Vec<PairReport>,
    pub attempts: usize,
    pub accepted: usize,
    pub rejections: RejectionCounts,
    /// Every accepted sentence, in generation order.
    pub generated: Vec<GenerationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    /// Index of the pair being filled, component-major.
    pub pair: usize,
    pub id: String,
    pub source_id: String,
    pub position: usize,
    pub original: String,
    pub synonym: String,
    pub level: ValidationLevel,
    pub validated_gram: Vec<String>,
}

impl AugmentationReport {
    pub fn deficient_pairs(&self) -> impl Iterator<Item = &PairReport> {
        self.pairs.iter().filter(|p| p.deficient)
    }

    pub fn generated_total(&self) -> usize {
        self.pairs.iter().map(|p| p.generated.total()).sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "component\taspect\tbefore\tafter\ttrigram\tbigram\tunigram\tspillover\tattempts\teligible\tdeficient\n",
        );
        for p in &self.pairs {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                p.component,
                p.aspect,
                p.before,
                p.after,
                p.generated.trigram,
                p.generated.bigram,
                p.generated.unigram,
                p.spillover,
                p.attempts,
                p.eligible,
                p.deficient
            ));
        }
        out
    }
}

/// Brings every pair with `eligibility_min <= before < mps` sentences up to
/// `mps` by adding generated sentences. Each level in `ngram_levels` gets up
/// to `max_attempts_per_pair` attempts before falling back to the next one.
/// Pairs are processed in schema order, each with its own RNG seeded from
/// `seed ^ pair_index`. Generated sentences are appended after the input
/// sentences. A pair that cannot reach `mps` is flagged deficient.
pub fn balance_to_mps(
    train: &Dataset,
    schema: &LabelSchema,
    ctx: &AugmentContext<'_>,
    config: &AugmentationConfig,
) -> Result<(Dataset, AugmentationReport)> {
    config.validate()?;
    train.validate(schema)?;
    let na = schema.aspect_labels.len();
    let members = pair_members(train, schema);
    let mut live: Vec<usize> = members.iter().map(Vec::len).collect();
    let mut texts: Vec<HashSet<String>> = members
        .iter()
        .map(|m| m.iter().map(|&i| train.sentences[i].sentence.surface.clone()).collect())
        .collect();
    let mut out = train.sentences.clone();
    let mut report = AugmentationReport {
        mps: config.mps,
        seed: config.seed,
        pairs: Vec::with_capacity(members.len()),
        attempts: 0,
        accepted: 0,
        rejections: RejectionCounts::default(),
        generated: Vec::new(),
    };

    for (p, pair_sources) in members.iter().enumerate() {
        let before = pair_sources.len();
        let eligible = before >= config.eligibility_min && before < config.mps;
        let mut row = PairReport {
            component: schema.component_labels[p / na].clone(),
            aspect: schema.aspect_labels[p % na].clone(),
            before,
            after: before,
            generated: LevelCounts::default(),
            spillover: 0,
            attempts: 0,
            attempts_by_level: LevelCounts::default(),
            eligible,
            deficient: false,
        };
        if eligible {
            let sources: Vec<&LabeledSentence> = pair_sources.iter().map(|&i| &train.sentences[i]).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ p as u64);
            for &level in &config.ngram_levels {
                let mut attempts = 0;
                while live[p] < config.mps && attempts < config.max_attempts_per_pair {
                    attempts += 1;
                    let outcome =
                        generate_similar_sentence(&sources, ctx, level, &config.exclude_pos, &mut rng)?;
                    let generated = match outcome {
                        Ok(g) if texts[p].contains(&g.sentence.surface) => Err(Rejection::Duplicate),
                        other => other,
                    };
                    match generated {
                        Ok(g) => {
                            for q in label_cells(schema, &g.component_labels, &g.aspect_labels) {
                                live[q] += 1;
                                texts[q].insert(g.sentence.surface.clone());
                            }
                            row.generated.bump(level);
                            report.accepted += 1;
                            report.generated.push(GenerationRecord {
                                pair: p,
                                id: g.sentence.id.clone(),
                                source_id: g.source_id.clone(),
                                position: g.position,
                                original: g.original.clone(),
                                synonym: g.synonym.clone(),
                                level,
                                validated_gram: g.validated_gram.clone(),
                            });
                            out.push(g.into_labeled());
                        }
                        Err(r) => report.rejections.record(&r),
                    }
                }
                row.attempts += attempts;
                match level {
                    ValidationLevel::Trigram => row.attempts_by_level.trigram += attempts,
                    ValidationLevel::Bigram => row.attempts_by_level.bigram += attempts,
                    ValidationLevel::Unigram => row.attempts_by_level.unigram += attempts,
                }
            }
            report.attempts += row.attempts;
        }
        report.pairs.push(row);
    }

    for (p, row) in report.pairs.iter_mut().enumerate() {
        row.after = live[p];
        row.spillover = row.after - row.before - row.generated.total();
        row.deficient = row.eligible && row.after < config.mps;
    }
    Ok((Dataset::new(out), report))
}

fn label_cells(
    schema: &LabelSchema,
    components: &BTreeSet<String>,
    aspects: &BTreeSet<String>,
) -> Vec<usize> {
    let na = schema.aspect_labels.len();
    let mut cells = Vec::new();
    for c in components {
        for a in aspects {
            if let (Some(ci), Some(ai)) = (
                schema.index_of(crate::schema::Role::Component, c),
                schema.index_of(crate::schema::Role::Aspect, a),
            ) {
                cells.push(ci * na + ai);
            }
        }
    }
    cells
}

/// Builds the validation index over the same word units the divider produces.
pub fn build_unit_index(sentences: &[Sentence], divider: &dyn WordDivider, n_max: usize) -> Result<NGramIndex> {
    NGramIndex::build(
        sentences.iter().map(|s| {
            divider
                .divide(s)
                .into_iter()
                .map(|t| t.surface)
                .collect::<Vec<_>>()
        }),
        n_max,
    )
}
