use serde::{Deserialize, Serialize};

use crate::corpus::{Pos, Sentence, Token};

/// Splits a sentence into the word units considered for replacement.
pub trait WordDivider: Send + Sync {
    fn divide(&self, sentence: &Sentence) -> Vec<Token>;
}

/// Uses the tokenizer's tokens as word units.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenDivider;

impl WordDivider for TokenDivider {
    fn divide(&self, sentence: &Sentence) -> Vec<Token> {
        sentence.tokens.clone()
    }
}

/// Merges runs of consecutive nouns into one compound term.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompoundNounDivider;

impl WordDivider for CompoundNounDivider {
    fn divide(&self, sentence: &Sentence) -> Vec<Token> {
        let mut out: Vec<Token> = Vec::with_capacity(sentence.tokens.len());
        let mut prev_noun = false;
        for tok in &sentence.tokens {
            let noun = tok.pos == Pos::Noun;
            match out.last_mut() {
                Some(last) if noun && prev_noun => {
                    last.surface = sentence.join.join(&[last.surface.as_str(), tok.surface.as_str()]);
                }
                _ => out.push(tok.clone()),
            }
            prev_noun = noun;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DividerKind {
    #[default]
    Token,
    CompoundNoun,
}

impl DividerKind {
    pub fn divider(self) -> Box<dyn WordDivider> {
        match self {
            DividerKind::Token => Box::new(TokenDivider),
            DividerKind::CompoundNoun => Box::new(CompoundNounDivider),
        }
    }
}
