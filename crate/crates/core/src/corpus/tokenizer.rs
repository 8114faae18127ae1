use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Pos, Token, TokenJoin};
use crate::error::{Error, Result};

/// A sentence tokenizer producing POS-tagged tokens.
pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &str;

    /// Joining rule that reproduces a sentence surface from its token surfaces.
    fn join(&self) -> TokenJoin;

    fn tokenize(&self, text: &str) -> Result<Vec<Token>>;
}

/// Surface → POS lookup table, loaded from `surface<TAB>pos` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosLexicon {
    entries: HashMap<String, Pos>,
    max_chars: usize,
}

impl PosLexicon {
    pub fn load(path: &Path) -> Result<PosLexicon> {
        let text = crate::io::read_to_string(path)?;
        PosLexicon::parse(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<PosLexicon> {
        let mut lex = PosLexicon::default();
        for (line, fields) in crate::io::tsv_records(text) {
            if fields.len() < 2 || fields[0].is_empty() {
                return Err(Error::parse("<lexicon>", line, "expected surface<TAB>pos"));
            }
            let pos = fields[1]
                .parse()
                .map_err(|e: Error| Error::parse("<lexicon>", line, e.to_string()))?;
            lex.insert(fields[0], pos);
        }
        Ok(lex)
    }

    pub fn insert(&mut self, surface: &str, pos: Pos) {
        self.max_chars = self.max_chars.max(surface.chars().count());
        self.entries.insert(surface.to_string(), pos);
    }

    pub fn get(&self, surface: &str) -> Option<Pos> {
        self.entries.get(surface).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<(S, Pos)> for PosLexicon {
    fn from_iter<I: IntoIterator<Item = (S, Pos)>>(iter: I) -> Self {
        let mut lex = PosLexicon::default();
        for (s, p) in iter {
            lex.insert(s.as_ref(), p);
        }
        lex
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Segmentation {
    /// Split on whitespace; tokens joined with a single space.
    Whitespace,
    /// Greedy longest dictionary match over unsegmented text; unknown
    /// stretches are grouped by script class. Tokens join with no separator.
    LongestMatch,
}

/// Dictionary-backed tokenizer; the lightweight alternative to a full
/// morphological analyzer.
#[derive(Debug, Clone)]
pub struct LexiconTokenizer {
    lexicon: PosLexicon,
    segmentation: Segmentation,
    default_pos: Pos,
}

impl LexiconTokenizer {
    pub fn new(lexicon: PosLexicon, segmentation: Segmentation, default_pos: Pos) -> Self {
        LexiconTokenizer {
            lexicon,
            segmentation,
            default_pos,
        }
    }

    pub fn whitespace(lexicon: PosLexicon) -> Self {
        LexiconTokenizer::new(lexicon, Segmentation::Whitespace, Pos::Noun)
    }

    pub fn longest_match(lexicon: PosLexicon) -> Self {
        LexiconTokenizer::new(lexicon, Segmentation::LongestMatch, Pos::Noun)
    }

    fn tag_unknown(&self, surface: &str) -> Pos {
        if surface.chars().all(|c| !c.is_alphanumeric()) {
            Pos::Symbol
        } else {
            self.default_pos
        }
    }

    fn longest_at(&self, chars: &[char], start: usize) -> Option<(usize, Pos)> {
        let max = self.lexicon.max_chars.min(chars.len() - start);
        (1..=max).rev().find_map(|len| {
            let candidate: String = chars[start..start + len].iter().collect();
            self.lexicon.get(&candidate).map(|pos| (len, pos))
        })
    }

    fn segment(&self, text: &str) -> Vec<Token> {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            if let Some((len, pos)) = self.longest_at(&chars, i) {
                tokens.push(Token::new(chars[i..i + len].iter().collect::<String>(), pos));
                i += len;
                continue;
            }
            let class = Script::of(chars[i]);
            let mut j = i + 1;
            if class != Script::Other {
                while j < chars.len()
                    && Script::of(chars[j]) == class
                    && self.longest_at(&chars, j).is_none()
                {
                    j += 1;
                }
            }
            let surface: String = chars[i..j].iter().collect();
            let pos = self.tag_unknown(&surface);
            tokens.push(Token::new(surface, pos));
            i = j;
        }
        tokens
    }
}

impl Tokenizer for LexiconTokenizer {
    fn name(&self) -> &str {
        match self.segmentation {
            Segmentation::Whitespace => "whitespace",
            Segmentation::LongestMatch => "lexicon",
        }
    }

    fn join(&self) -> TokenJoin {
        match self.segmentation {
            Segmentation::Whitespace => TokenJoin::Space,
            Segmentation::LongestMatch => TokenJoin::Concat,
        }
    }

    fn tokenize(&self, text: &str) -> Result<Vec<Token>> {
        let tokens = match self.segmentation {
            Segmentation::Whitespace => text
                .split_whitespace()
                .map(|w| {
                    let pos = self.lexicon.get(w).unwrap_or_else(|| self.tag_unknown(w));
                    Token::new(w, pos)
                })
                .collect(),
            Segmentation::LongestMatch => self.segment(text),
        };
        Ok(tokens)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Script {
    Hiragana,
    Katakana,
    Kanji,
    Alnum,
    Other,
}

impl Script {
    fn of(c: char) -> Script {
        match c {
            '\u{3041}'..='\u{309F}' => Script::Hiragana,
            '\u{30A0}'..='\u{30FF}' | '\u{31F0}'..='\u{31FF}' | '\u{FF66}'..='\u{FF9F}' => {
                Script::Katakana
            }
            '\u{4E00}'..='\u{9FFF}' | '\u{3400}'..='\u{4DBF}' | '々' => Script::Kanji,
            c if c.is_alphanumeric() => Script::Alnum,
            _ => Script::Other,
        }
    }
}
