//! Token-sequence patterns that locate component names and aspect words,
//! and the frequency tables built from their matches.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Pos, Sentence};
use crate::error::{Error, Result};
use crate::schema::Role;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternElement {
    /// Matches one token with exactly this surface.
    Literal(String),
    /// Absorbs 1..=`max_tokens` consecutive tokens whose POS is in `pos`.
    Slot {
        role: Role,
        pos: BTreeSet<Pos>,
        max_tokens: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRule {
    pub name: String,
    elements: Vec<PatternElement>,
}

/// Declarative form of a rule as written in a pattern file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub name: String,
    pub elements: Vec<ElementSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Literal {
        literal: String,
    },
    Slot {
        slot: Role,
        pos: Vec<Pos>,
        max_tokens: usize,
    },
}

impl ElementSpec {
    pub fn literal(s: &str) -> Self {
        ElementSpec::Literal {
            literal: s.to_string(),
        }
    }

    pub fn slot(role: Role, pos: &[Pos], max_tokens: usize) -> Self {
        ElementSpec::Slot {
            slot: role,
            pos: pos.to_vec(),
            max_tokens,
        }
    }
}

#[derive(Debug, Deserialize)]
struct PatternFile {
    #[serde(rename = "rule")]
    rules: Vec<RuleSpec>,
}

impl PatternRule {
    pub fn compile(spec: &RuleSpec) -> Result<PatternRule> {
        let mut components = 0;
        let mut aspects = 0;
        let mut elements = Vec::with_capacity(spec.elements.len());
        for el in &spec.elements {
            match el {
                ElementSpec::Literal { literal } => {
                    if literal.is_empty() {
                        return Err(Error::Schema(format!(
                            "rule `{}` has an empty literal",
                            spec.name
                        )));
                    }
                    elements.push(PatternElement::Literal(literal.clone()));
                }
                ElementSpec::Slot {
                    slot,
                    pos,
                    max_tokens,
                } => {
                    if *max_tokens == 0 || pos.is_empty() {
                        return Err(Error::Schema(format!(
                            "rule `{}`: slots need max_tokens >= 1 and a POS constraint",
                            spec.name
                        )));
                    }
                    match slot {
                        Role::Component => components += 1,
                        Role::Aspect => aspects += 1,
                    }
                    elements.push(PatternElement::Slot {
                        role: *slot,
                        pos: pos.iter().copied().collect(),
                        max_tokens: *max_tokens,
                    });
                }
            }
        }
        if components != 1 || aspects != 1 {
            return Err(Error::Schema(format!(
                "rule `{}` must have exactly one component and one aspect slot (found {components} and {aspects})",
                spec.name
            )));
        }
        Ok(PatternRule {
            name: spec.name.clone(),
            elements,
        })
    }

    pub fn elements(&self) -> &[PatternElement] {
        &self.elements
    }
}

/// `⟨component⟩ の ⟨aspect⟩` and `⟨component⟩ が ⟨aspect⟩` with the default
/// slot constraints (component: up to two nouns; aspect: up to three
/// nouns/adjectives/verbs/auxiliaries, so `パンク し た` stays whole).
pub fn default_rule_specs() -> Vec<RuleSpec> {
    let aspect_pos = [Pos::Noun, Pos::Adjective, Pos::Verb, Pos::Auxiliary];
    ["の", "が"]
        .iter()
        .map(|particle| RuleSpec {
            name: format!("component-{particle}-aspect"),
            elements: vec![
                ElementSpec::slot(Role::Component, &[Pos::Noun], 2),
                ElementSpec::literal(particle),
                ElementSpec::slot(Role::Aspect, &aspect_pos, 3),
            ],
        })
        .collect()
}

pub fn default_rules() -> Vec<PatternRule> {
    default_rule_specs()
        .iter()
        .map(|s| PatternRule::compile(s).expect("built-in rules are valid"))
        .collect()
}

/// Loads rules from a TOML file with one `[[rule]]` table per rule.
pub fn load_rules(path: &Path) -> Result<Vec<PatternRule>> {
    let text = crate::io::read_to_string(path)?;
    let file: PatternFile =
        toml::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    file.rules.iter().map(PatternRule::compile).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub sentence_id: String,
    pub rule: String,
    pub component: String,
    pub aspect: String,
    /// Token range `[start, end)` of the component slot.
    pub component_span: (usize, usize),
    pub aspect_span: (usize, usize),
}

/// A full assignment of the rule's elements starting at one position:
/// the token length taken by each element.
fn assignments(rule: &PatternRule, sentence: &Sentence, start: usize) -> Vec<Vec<usize>> {
    fn go(
        elements: &[PatternElement],
        sentence: &Sentence,
        at: usize,
        lens: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let Some(el) = elements.get(lens.len()) else {
            out.push(lens.clone());
            return;
        };
        let tokens = &sentence.tokens;
        match el {
            PatternElement::Literal(lit) => {
                if tokens.get(at).is_some_and(|t| &t.surface == lit) {
                    lens.push(1);
                    go(elements, sentence, at + 1, lens, out);
                    lens.pop();
                }
            }
            PatternElement::Slot { pos, max_tokens, .. } => {
                let run = tokens[at.min(tokens.len())..]
                    .iter()
                    .take(*max_tokens)
                    .take_while(|t| pos.contains(&t.pos))
                    .count();
                for len in 1..=run {
                    lens.push(len);
                    go(elements, sentence, at + len, lens, out);
                    lens.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(&rule.elements, sentence, start, &mut Vec::new(), &mut out);
    out
}

/// All non-overlapping leftmost-longest matches of `rule` in `sentence`.
/// At each start the match covering the most tokens wins; ties prefer
/// longer earlier slots. Scanning resumes after the chosen match.
pub fn match_sentence(rule: &PatternRule, sentence: &Sentence) -> Vec<PatternMatch> {
    let mut matches = Vec::new();
    let mut start = 0;
    while start < sentence.tokens.len() {
        let best = assignments(rule, sentence, start)
            .into_iter()
            .max_by(|a, b| {
                let (ta, tb): (usize, usize) = (a.iter().sum(), b.iter().sum());
                ta.cmp(&tb).then_with(|| a.cmp(b))
            });
        let Some(lens) = best else {
            start += 1;
            continue;
        };
        let mut at = start;
        let mut component = (0, 0);
        let mut aspect = (0, 0);
        for (el, len) in rule.elements.iter().zip(&lens) {
            if let PatternElement::Slot { role, .. } = el {
                match role {
                    Role::Component => component = (at, at + len),
                    Role::Aspect => aspect = (at, at + len),
                }
            }
            at += len;
        }
        let surface = |(s, e): (usize, usize)| {
            let parts: Vec<&str> = sentence.tokens[s..e].iter().map(|t| t.surface.as_str()).collect();
            sentence.join.join(&parts)
        };
        matches.push(PatternMatch {
            sentence_id: sentence.id.clone(),
            rule: rule.name.clone(),
            component: surface(component),
            aspect: surface(aspect),
            component_span: component,
            aspect_span: aspect,
        });
        start = at;
    }
    matches
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub surface: String,
    pub count: usize,
    /// Surfaces of the other role seen in the same matches, most frequent first.
    pub cooccurring: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTable {
    pub role: Role,
    pub rows: Vec<CandidateRow>,
}

impl CandidateTable {
    fn from_counts(role: Role, counts: BTreeMap<String, (usize, BTreeMap<String, usize>)>) -> Self {
        let mut rows: Vec<CandidateRow> = counts
            .into_iter()
            .map(|(surface, (count, co))| CandidateRow {
                surface,
                count,
                cooccurring: rank(co),
            })
            .collect();
        rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.surface.cmp(&b.surface)));
        CandidateTable { role, rows }
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn get(&self, surface: &str) -> Option<&CandidateRow> {
        self.rows.iter().find(|r| r.surface == surface)
    }

    /// `surface<TAB>count<TAB>other:count,...` with at most `top` co-occurring surfaces.
    pub fn to_tsv(&self, top: usize) -> String {
        let mut out = String::from("surface\tcount\tcooccurring\n");
        for row in &self.rows {
            let co: Vec<String> = row
                .cooccurring
                .iter()
                .take(top)
                .map(|(s, c)| format!("{s}:{c}"))
                .collect();
            out.push_str(&format!("{}\t{}\t{}\n", row.surface, row.count, co.join(",")));
        }
        out
    }
}

fn rank(counts: BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedCandidates {
    pub components: CandidateTable,
    pub aspects: CandidateTable,
    pub matches: Vec<PatternMatch>,
}

/// Applies every rule to every sentence and tallies candidate surfaces,
/// one count per match.
pub fn mine_candidates(sentences: &[Sentence], rules: &[PatternRule]) -> Result<MinedCandidates> {
    if rules.is_empty() {
        return Err(Error::Precondition("mining needs at least one pattern rule".into()));
    }
    let mut components: BTreeMap<String, (usize, BTreeMap<String, usize>)> = BTreeMap::new();
    let mut aspects: BTreeMap<String, (usize, BTreeMap<String, usize>)> = BTreeMap::new();
    let mut all = Vec::new();
    for sentence in sentences {
        for rule in rules {
            for m in match_sentence(rule, sentence) {
                let c = components.entry(m.component.clone()).or_default();
                c.0 += 1;
                *c.1.entry(m.aspect.clone()).or_default() += 1;
                let a = aspects.entry(m.aspect.clone()).or_default();
                a.0 += 1;
                *a.1.entry(m.component.clone()).or_default() += 1;
                all.push(m);
            }
        }
    }
    Ok(MinedCandidates {
        components: CandidateTable::from_counts(Role::Component, components),
        aspects: CandidateTable::from_counts(Role::Aspect, aspects),
        matches: all,
    })
}
