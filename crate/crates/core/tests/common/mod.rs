//! Synthetic corpora shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revmine::augment::FileLexicon;
use revmine::corpus::{build_ngram_index, NGramIndex, Pos, Sentence, Token, TokenJoin};
use revmine::dataset::{Dataset, LabeledSentence, Provenance};
use revmine::schema::LabelSchema;

pub const BIKE_COMPONENTS: [&str; 14] = [
    "Tire", "Valve", "Rim", "Spoke", "Handle", "Brake", "Bell", "Gear", "Pedal", "Crank", "Chain", "Light", "Saddle",
    "Frame",
];
pub const BIKE_ASPECTS: [&str; 7] = [
    "Durability",
    "Functionality",
    "Preference",
    "Installation",
    "Weight",
    "Size",
    "Appearance",
];

pub fn bike_schema() -> LabelSchema {
    LabelSchema::new(
        "road bike",
        BIKE_COMPONENTS.iter().map(|s| s.to_string()).collect(),
        BIKE_ASPECTS.iter().map(|s| s.to_string()).collect(),
    )
    .unwrap()
}

pub fn sentence(id: &str, words: &[(&str, Pos)]) -> Sentence {
    Sentence {
        id: id.to_string(),
        review_id: id.split('#').next().unwrap_or(id).to_string(),
        surface: words.iter().map(|w| w.0).collect::<Vec<_>>().join(" "),
        tokens: words.iter().map(|(w, p)| Token::new(*w, *p)).collect(),
        join: TokenJoin::Space,
    }
}

pub fn labeled(sentence: Sentence, component: &str, aspect: &str) -> LabeledSentence {
    LabeledSentence {
        sentence,
        component_labels: BTreeSet::from([component.to_string()]),
        aspect_labels: BTreeSet::from([aspect.to_string()]),
        provenance: Provenance::Human,
    }
}

/// `⟨component word⟩ no ⟨aspect word⟩ ⟨filler⟩`; fillers are adverbs with no
/// synonyms.
fn clause(id: &str, comp: &str, asp: &str, filler: &str) -> Sentence {
    sentence(
        id,
        &[(comp, Pos::Noun), ("no", Pos::Particle), (asp, Pos::Noun), (filler, Pos::Adverb)],
    )
}

fn fillers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("fill{i}")).collect()
}

/// Four components and three aspects, each named by one keyword, so both
/// label sets are recoverable from single tokens.
pub struct Separable {
    pub schema: LabelSchema,
    pub train: Dataset,
    pub validation: Dataset,
    pub evaluation: Dataset,
}

pub fn separable(per_pair_train: usize, per_pair_val: usize, per_pair_eval: usize, seed: u64) -> Separable {
    let comps = ["Tire", "Brake", "Saddle", "Chain"];
    let asps = ["Durability", "Weight", "Appearance"];
    let comp_kw = ["tirex", "brakex", "saddlex", "chainx"];
    let asp_kw = ["durafail", "weighty", "looksnice"];
    let schema = LabelSchema::new(
        "synthetic",
        comps.iter().map(|s| s.to_string()).collect(),
        asps.iter().map(|s| s.to_string()).collect(),
    )
    .unwrap();
    let pool = fillers(40);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |tag: &str, n: usize| {
        let mut v = Vec::new();
        for (ci, c) in comps.iter().enumerate() {
            for (ai, a) in asps.iter().enumerate() {
                for k in 0..n {
                    let f = pool.choose(&mut rng).unwrap();
                    let id = format!("{tag}-{ci}-{ai}-{k}");
                    v.push(labeled(clause(&id, comp_kw[ci], asp_kw[ai], f), c, a));
                }
            }
        }
        Dataset::new(v)
    };
    Separable {
        train: make("tr", per_pair_train),
        validation: make("va", per_pair_val),
        evaluation: make("ev", per_pair_eval),
        schema,
    }
}

/// Majors: four components x three aspects at 40 sentences per pair.
/// Minors: components seen in a single pair each; most pairs hold five
/// sentences, two hold four and three. Every label is written with one of
/// several interchangeable words, and the lexicon lists each label's words
/// as synonyms. The unlabeled review corpus behind the n-gram index uses
/// every word in every aspect context.
pub struct Imbalanced {
    pub schema: LabelSchema,
    pub dataset: Dataset,
    pub lexicon: FileLexicon,
    pub index: NGramIndex,
    pub minor_pairs: Vec<(String, String)>,
}

pub fn imbalanced(seed: u64) -> Imbalanced {
    let major_c = 4;
    let minor_sizes = [5usize, 5, 5, 5, 5, 5, 4, 3];
    let n_asp = 3;
    let variants = 6;
    let mut comps: Vec<String> = (0..major_c).map(|i| format!("C{i}")).collect();
    comps.extend((0..minor_sizes.len()).map(|i| format!("M{i}")));
    let asps: Vec<String> = (0..n_asp).map(|i| format!("A{i}")).collect();
    let schema = LabelSchema::new("imbalanced", comps.clone(), asps.clone()).unwrap();
    let word = |label: &str, v: usize| format!("{}w{v}", label.to_lowercase());
    let pool = fillers(30);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sentences = Vec::new();
    let mut minor_pairs = Vec::new();
    let push = |rng: &mut ChaCha8Rng, c: &str, a: &str, k: usize, out: &mut Vec<LabeledSentence>| {
        let cw = word(c, rng.random_range(0..variants));
        let aw = word(a, rng.random_range(0..variants));
        let id = format!("r-{c}-{a}-{k}#0");
        out.push(labeled(clause(&id, &cw, &aw, pool.choose(rng).unwrap()), c, a));
    };
    for c in &comps[..major_c] {
        for a in &asps {
            for k in 0..40 {
                push(&mut rng, c, a, k, &mut sentences);
            }
        }
    }
    for (i, &size) in minor_sizes.iter().enumerate() {
        let c = &comps[major_c + i];
        let a = &asps[i % n_asp];
        minor_pairs.push((c.clone(), a.clone()));
        for k in 0..size {
            push(&mut rng, c, a, k, &mut sentences);
        }
    }

    let groups: Vec<Vec<String>> = comps
        .iter()
        .chain(&asps)
        .map(|label| (0..variants).map(|v| word(label, v)).collect())
        .collect();
    let lexicon = FileLexicon::from_groups(&groups);

    let mut corpus: Vec<Sentence> = sentences.iter().map(|s| s.sentence.clone()).collect();
    let mut n = 0;
    for c in &comps {
        for a in &asps {
            for cv in 0..variants {
                for av in 0..variants {
                    n += 1;
                    let f = pool.choose(&mut rng).unwrap();
                    corpus.push(clause(&format!("u{n}"), &word(c, cv), &word(a, av), f));
                }
            }
        }
    }
    let index = build_ngram_index(&corpus, 3).unwrap();
    Imbalanced {
        schema,
        dataset: Dataset::new(sentences),
        lexicon,
        index,
        minor_pairs,
    }
}

/// 500 single-label sentences over the 14 x 7 bike schema: 50 pairs with at
/// least five sentences, the other 48 with zero to four.
pub fn table_v_layout() -> Dataset {
    let schema = bike_schema();
    let mut sizes = Vec::new();
    for i in 0..98 {
        sizes.push(if i < 50 { 5 + i % 6 } else { (i - 50) % 5 });
    }
    let total: usize = sizes.iter().sum();
    sizes[0] += 500 - total;
    let mut v = Vec::new();
    for (p, &n) in sizes.iter().enumerate() {
        let c = &schema.component_labels[p / 7];
        let a = &schema.aspect_labels[p % 7];
        for k in 0..n {
            let id = format!("tv{p}-{k}#0");
            let w1 = format!("{}{k}", c.to_lowercase());
            let w2 = a.to_lowercase();
            v.push(labeled(sentence(&id, &[(&w1, Pos::Noun), ("no", Pos::Particle), (&w2, Pos::Noun)]), c, a));
        }
    }
    Dataset::new(v)
}

/// Component words `cN`, aspect words `aN`, each in groups of three
/// synonyms (30 lexicon entries in total across both roles).
pub struct AugmentFixture {
    pub schema: LabelSchema,
    pub dataset: Dataset,
    pub lexicon: FileLexicon,
    pub index: NGramIndex,
}

pub fn augment_fixture(seed: u64) -> AugmentFixture {
    let comps: Vec<String> = (0..5).map(|i| format!("K{i}")).collect();
    let asps: Vec<String> = (0..5).map(|i| format!("B{i}")).collect();
    let schema = LabelSchema::new("aug", comps.clone(), asps.clone()).unwrap();
    let word = |label: &str, v: usize| format!("{}v{v}", label.to_lowercase());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = fillers(12);
    // 25 pairs; sizes cover ineligible (<3), eligible (3..15) and full pairs.
    let mut sizes: Vec<usize> = (0..25).map(|i| [1, 2, 3, 4, 6, 8, 10, 12, 16, 20][i % 10]).collect();
    let total: usize = sizes.iter().sum();
    sizes[24] += 200 - total;
    let mut v = Vec::new();
    for (p, &n) in sizes.iter().enumerate() {
        let c = &comps[p / 5];
        let a = &asps[p % 5];
        for k in 0..n {
            let id = format!("a{p}-{k}#0");
            let cw = word(c, rng.random_range(0..3));
            let aw = word(a, rng.random_range(0..3));
            v.push(labeled(clause(&id, &cw, &aw, pool.choose(&mut rng).unwrap()), c, a));
        }
    }
    let groups: Vec<Vec<String>> = comps
        .iter()
        .chain(&asps)
        .map(|label| (0..3).map(|i| word(label, i)).collect())
        .collect();
    let lexicon = FileLexicon::from_groups(&groups);
    let mut corpus: Vec<Sentence> = v.iter().map(|s: &LabeledSentence| s.sentence.clone()).collect();
    for (i, c) in comps.iter().enumerate() {
        for vi in 0..3 {
            corpus.push(sentence(&format!("u{i}-{vi}"), &[(&word(c, vi), Pos::Noun), ("ga", Pos::Particle)]));
        }
    }
    let index = build_ngram_index(&corpus, 3).unwrap();
    AugmentFixture {
        schema,
        dataset: Dataset::new(v),
        lexicon,
        index,
    }
}

pub fn random_label_sets(rng: &mut ChaCha8Rng, n: usize, labels: &[String]) -> Vec<BTreeSet<String>> {
    (0..n)
        .map(|_| labels.iter().filter(|_| rng.random_bool(0.4)).cloned().collect())
        .collect()
}
