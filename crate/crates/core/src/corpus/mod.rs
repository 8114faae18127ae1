//! Review ingestion and tokenization, plus the n-gram index used to
//! validate generated sentences.

mod mecab;
mod ngram;
mod tokenizer;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mecab::{parse_mecab_output, MecabTokenizer};
pub use ngram::{NGramIndex, BOUNDARY_END, BOUNDARY_START};
pub use tokenizer::{LexiconTokenizer, PosLexicon, Segmentation, Tokenizer};

/// Part-of-speech tagset shared by every tokenizer adapter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Particle,
    Auxiliary,
    Symbol,
    Other,
}

impl Pos {
    pub const ALL: [Pos; 8] = [
        Pos::Noun,
        Pos::Verb,
        Pos::Adjective,
        Pos::Adverb,
        Pos::Particle,
        Pos::Auxiliary,
        Pos::Symbol,
        Pos::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Particle => "particle",
            Pos::Auxiliary => "auxiliary",
            Pos::Symbol => "symbol",
            Pos::Other => "other",
        }
    }

    /// Maps a top-level IPAdic / UniDic category name onto the tagset.
    pub fn from_japanese(category: &str) -> Pos {
        match category {
            "名詞" | "代名詞" => Pos::Noun,
            "動詞" => Pos::Verb,
            "形容詞" | "形状詞" | "連体詞" => Pos::Adjective,
            "副詞" => Pos::Adverb,
            "助詞" => Pos::Particle,
            "助動詞" => Pos::Auxiliary,
            "記号" | "補助記号" | "空白" => Pos::Symbol,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_lowercase();
        if let Some(pos) = Pos::ALL.iter().find(|p| p.as_str() == lower) {
            return Ok(*pos);
        }
        match lower.as_str() {
            "adj" => Ok(Pos::Adjective),
            "adv" => Ok(Pos::Adverb),
            "aux" => Ok(Pos::Auxiliary),
            "punct" | "punctuation" => Ok(Pos::Symbol),
            _ => match Pos::from_japanese(s.trim()) {
                Pos::Other if s.trim() != "その他" => {
                    Err(Error::Config(format!("unknown part-of-speech tag `{s}`")))
                }
                pos => Ok(pos),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: Pos,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: Pos) -> Self {
        Token {
            surface: surface.into(),
            pos,
        }
    }

    pub fn is_particle(&self) -> bool {
        self.pos == Pos::Particle
    }
}

/// How an analyzer's token surfaces are joined back into sentence text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenJoin {
    /// No separator (Japanese and other unsegmented scripts).
    #[default]
    Concat,
    /// Single ASCII space.
    Space,
}

impl TokenJoin {
    pub fn separator(self) -> &'static str {
        match self {
            TokenJoin::Concat => "",
            TokenJoin::Space => " ",
        }
    }

    pub fn join<S: AsRef<str>>(self, parts: &[S]) -> String {
        let mut out = String::new();
        for (i, part) in parts.iter().enumerate() {
            if i > 0 {
                out.push_str(self.separator());
            }
            out.push_str(part.as_ref());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    #[serde(default)]
    pub review_id: String,
    pub surface: String,
    pub tokens: Vec<Token>,
    #[serde(default)]
    pub join: TokenJoin,
}

impl Sentence {
    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Token surfaces joined under the analyzer's joining rule.
    pub fn joined(&self) -> String {
        self.join.join(&self.surfaces())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReview {
    pub review_id: String,
    pub product_type: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub reviews: Vec<RawReview>,
}

impl Corpus {
    /// Loads a JSON-lines review dump.
    pub fn ingest(path: &Path) -> Result<Corpus> {
        let records: Vec<RawReview> = crate::io::read_jsonl(path)?;
        Corpus::from_reviews(records)
    }

    pub fn from_reviews(reviews: Vec<RawReview>) -> Result<Corpus> {
        let mut seen = HashSet::new();
        for review in &reviews {
            if !seen.insert(review.review_id.as_str()) {
                return Err(Error::Conflict(format!(
                    "duplicate review_id `{}`",
                    review.review_id
                )));
            }
            if review.text.trim().is_empty() {
                return Err(Error::Precondition(format!(
                    "review `{}` has empty text",
                    review.review_id
                )));
            }
        }
        Ok(Corpus { reviews })
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }
}

/// Splits review text on a configurable set of sentence terminators.
/// Terminators are dropped and runs of them collapse into one boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSplitter {
    pub terminators: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter {
            terminators: ["。", "！", "？", ".", "!", "?"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl SentenceSplitter {
    pub fn new(terminators: Vec<String>) -> Result<Self> {
        if terminators.iter().any(|t| t.is_empty()) {
            return Err(Error::Config("sentence terminators must be non-empty".into()));
        }
        Ok(SentenceSplitter { terminators })
    }

    pub fn split(&self, text: &str) -> Vec<String> {
        let mut segments = Vec::new();
        let mut current = String::new();
        let mut rest = text;
        while let Some(ch) = rest.chars().next() {
            if let Some(term) = self.terminators.iter().find(|t| rest.starts_with(t.as_str())) {
                push_segment(&mut segments, &mut current);
                rest = &rest[term.len()..];
            } else {
                current.push(ch);
                rest = &rest[ch.len_utf8()..];
            }
        }
        push_segment(&mut segments, &mut current);
        segments
    }
}

fn push_segment(segments: &mut Vec<String>, current: &mut String) {
    let trimmed = current.trim();
    if !trimmed.is_empty() {
        segments.push(trimmed.to_string());
    }
    current.clear();
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSegment {
    pub review_id: String,
    pub segment: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct TokenizedCorpus {
    pub sentences: Vec<Sentence>,
    pub skipped: Vec<SkippedSegment>,
    /// Number of terminator-delimited segments seen, including skipped ones.
    pub segments: usize,
}

/// Splits every review into sentences and tokenizes them. A segment the
/// analyzer fails on is skipped and recorded (and logged), never dropped silently.
pub fn split_and_tokenize(
    corpus: &Corpus,
    tokenizer: &dyn Tokenizer,
    splitter: &SentenceSplitter,
) -> TokenizedCorpus {
    let mut out = TokenizedCorpus::default();
    for review in &corpus.reviews {
        for (idx, segment) in splitter.split(&review.text).into_iter().enumerate() {
            out.segments += 1;
            let result = tokenizer.tokenize(&segment).and_then(|tokens| {
                if tokens.is_empty() {
                    Err(Error::Tokenizer("analyzer produced no tokens".into()))
                } else {
                    Ok(tokens)
                }
            });
            match result {
                Ok(tokens) => out.sentences.push(Sentence {
                    id: format!("{}#{}", review.review_id, idx),
                    review_id: review.review_id.clone(),
                    surface: segment,
                    tokens,
                    join: tokenizer.join(),
                }),
                Err(e) => {
                    log::warn!(
                        "skipping sentence {} of review {}: {}",
                        idx,
                        review.review_id,
                        e
                    );
                    out.skipped.push(SkippedSegment {
                        review_id: review.review_id.clone(),
                        segment: idx,
                        text: segment,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    out
}

pub fn build_ngram_index(sentences: &[Sentence], n_max: usize) -> Result<NGramIndex> {
    NGramIndex::build(sentences.iter().map(|s| s.surfaces()), n_max)
}
