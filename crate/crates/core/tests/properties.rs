mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use revmine::classifier::{labels_from_scores, train, BackendConfig, ClassifierModel, ModelConfig, Normalization, ThresholdSet, TrainConfig, Fallback};
use revmine::corpus::{NGramIndex, Pos, Sentence, BOUNDARY_END, BOUNDARY_START};
use revmine::dataset::{pair_members, split_dataset, Dataset, SplitSpec};
use revmine::evaluation::{macro_f1, per_label_metrics};
use revmine::pattern::{default_rules, match_sentence, PatternElement, PatternRule};
use revmine::schema::Role;

fn padded(seq: &[String]) -> Vec<String> {
    let mut v = vec![BOUNDARY_START.to_string()];
    v.extend(seq.iter().cloned());
    v.push(BOUNDARY_END.to_string());
    v
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(str::to_string)
}

proptest! {
    #[test]
    fn ngram_membership_matches_linear_scan(
        seqs in prop::collection::vec(prop::collection::vec(word(), 0..6), 0..6),
        query in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", BOUNDARY_START, BOUNDARY_END]).prop_map(str::to_string), 1..=3),
    ) {
        let index = NGramIndex::build(&seqs, 3).unwrap();
        // Empty sentences contribute nothing, not even boundary markers.
        let seqs: Vec<_> = seqs.into_iter().filter(|s| !s.is_empty()).collect();
        let scan = seqs.iter().map(|s| padded(s)).any(|p| p.windows(query.len()).any(|w| w == query.as_slice()));
        prop_assert_eq!(index.contains(&query).unwrap(), scan);
        let count: usize = seqs.iter().map(|s| padded(s)).map(|p| p.windows(query.len()).filter(|w| *w == query.as_slice()).count()).sum();
        prop_assert_eq!(index.count(&query).unwrap().unwrap_or(0) as usize, count);
    }
}

fn token_strategy() -> impl Strategy<Value = (String, Pos)> {
    prop_oneof![
        prop::sample::select(vec!["タイヤ", "ブレーキ", "前", "効き"]).prop_map(|w| (w.to_string(), Pos::Noun)),
        prop::sample::select(vec!["の", "が", "は"]).prop_map(|w| (w.to_string(), Pos::Particle)),
        prop::sample::select(vec!["悪い", "硬い"]).prop_map(|w| (w.to_string(), Pos::Adjective)),
        prop::sample::select(vec!["折れ", "し"]).prop_map(|w| (w.to_string(), Pos::Verb)),
        Just(("た".to_string(), Pos::Auxiliary)),
    ]
}

/// Every way `rule` can match exactly the tokens `[start, end)`.
fn placements(rule: &PatternRule, toks: &[(String, Pos)]) -> Vec<(usize, usize)> {
    fn fits(els: &[PatternElement], toks: &[(String, Pos)], i: usize) -> Vec<usize> {
        let Some((first, rest)) = els.split_first() else { return vec![i] };
        let mut ends = Vec::new();
        match first {
            PatternElement::Literal(l) => {
                if i < toks.len() && &toks[i].0 == l {
                    ends.extend(fits(rest, toks, i + 1));
                }
            }
            PatternElement::Slot { pos, max_tokens, .. } => {
                for len in 1..=*max_tokens {
                    if i + len <= toks.len() && toks[i..i + len].iter().all(|t| pos.contains(&t.1)) {
                        ends.extend(fits(rest, toks, i + len));
                    }
                }
            }
        }
        ends
    }
    let mut out = Vec::new();
    for s in 0..toks.len() {
        for e in fits(rule.elements(), toks, s) {
            out.push((s, e));
        }
    }
    out
}

proptest! {
    #[test]
    fn pattern_matches_are_valid_disjoint_and_maximal(toks in prop::collection::vec(token_strategy(), 0..10)) {
        let words: Vec<(&str, Pos)> = toks.iter().map(|(w, p)| (w.as_str(), *p)).collect();
        let mut s: Sentence = common::sentence("p", &words);
        s.join = revmine::corpus::TokenJoin::Concat;
        for rule in default_rules() {
            let found = match_sentence(&rule, &s);
            let all = placements(&rule, &toks);
            let mut covered = vec![false; toks.len()];
            let mut last_end = 0;
            for m in &found {
                let lo = m.component_span.0.min(m.aspect_span.0);
                let hi = m.component_span.1.max(m.aspect_span.1);
                prop_assert!(all.contains(&(lo, hi)), "{:?} is not a valid placement", (lo, hi));
                prop_assert!(lo >= last_end, "overlapping matches");
                last_end = hi;
                let comp: String = toks[m.component_span.0..m.component_span.1].iter().map(|t| t.0.as_str()).collect();
                let asp: String = toks[m.aspect_span.0..m.aspect_span.1].iter().map(|t| t.0.as_str()).collect();
                prop_assert_eq!(&m.component, &comp);
                prop_assert_eq!(&m.aspect, &asp);
                for c in covered.iter_mut().take(hi).skip(lo) {
                    *c = true;
                }
            }
            for (lo, hi) in &all {
                prop_assert!(covered[*lo..*hi].iter().any(|c| *c), "missed placement {:?}", (lo, hi));
            }
        }
    }
}

fn label_sets(n: usize, k: usize) -> impl Strategy<Value = Vec<BTreeSet<String>>> {
    prop::collection::vec(prop::collection::btree_set(0..k, 0..=k), n)
        .prop_map(|v| v.into_iter().map(|s| s.into_iter().map(|i| format!("L{i}")).collect()).collect())
}

proptest! {
    #[test]
    fn metrics_are_permutation_invariant(
        (pred, truth, perm) in (1usize..30, 1usize..6).prop_flat_map(|(n, k)| {
            (label_sets(n, k), label_sets(n, k), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let labels: Vec<String> = (0..6).map(|i| format!("L{i}")).collect();
        let p2: Vec<_> = perm.iter().map(|&i| pred[i].clone()).collect();
        let t2: Vec<_> = perm.iter().map(|&i| truth[i].clone()).collect();
        prop_assert_eq!(macro_f1(&pred, &truth, &labels).unwrap(), macro_f1(&p2, &t2, &labels).unwrap());
        for l in &labels {
            let a = per_label_metrics(&pred, &truth, l).unwrap();
            let b = per_label_metrics(&p2, &t2, l).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn metrics_stay_in_unit_interval((pred, truth) in (1usize..30, 1usize..6).prop_flat_map(|(n, k)| (label_sets(n, k), label_sets(n, k)))) {
        for i in 0..6 {
            let m = per_label_metrics(&pred, &truth, &format!("L{i}")).unwrap();
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn split_partitions_the_dataset(seed in any::<u64>(), eval_per_pair in 1usize..3, validation in 0usize..20) {
        let ds = common::table_v_layout();
        let schema = common::bike_schema();
        let spec = SplitSpec { seed, eval_per_pair, eval_pair_min: 5, validation_size: validation };
        let split = split_dataset(&ds, &schema, &spec).unwrap();
        prop_assert_eq!(split.train.len() + split.validation.len() + split.evaluation.len(), ds.len());
        prop_assert_eq!(split.validation.len(), validation);
        let ids = |d: &Dataset| d.iter().map(|s| s.id().to_string()).collect::<BTreeSet<_>>();
        let all: BTreeSet<_> = ids(&split.train).into_iter().chain(ids(&split.validation)).chain(ids(&split.evaluation)).collect();
        prop_assert_eq!(all, ids(&ds));
        let full = pair_members(&ds, &schema);
        for (p, m) in pair_members(&split.evaluation, &schema).iter().enumerate() {
            prop_assert_eq!(m.len(), if full[p].len() >= 5 { eval_per_pair } else { 0 });
        }
    }
}

fn models() -> &'static (ClassifierModel, ClassifierModel) {
    static MODELS: OnceLock<(ClassifierModel, ClassifierModel)> = OnceLock::new();
    MODELS.get_or_init(|| {
        let fx = common::separable(5, 1, 1, 21);
        let tc = TrainConfig { epochs: 5, ..TrainConfig::default() };
        let make = |n| ModelConfig {
            backend: BackendConfig::Hashed { dim: 512, bigrams: true },
            normalization: n,
            ..ModelConfig::default()
        };
        (
            train(&fx.train, &fx.schema, Role::Component, &make(Normalization::Independent), &tc).unwrap(),
            train(&fx.train, &fx.schema, Role::Component, &make(Normalization::Simplex), &tc).unwrap(),
        )
    })
}

fn random_sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop_oneof![
            prop::sample::select(vec!["tirex", "brakex", "durafail", "weighty", "fill3", "no"]).prop_map(str::to_string),
            "[a-zぁ-ん]{1,6}",
        ],
        0..8,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn scores_in_unit_interval_and_simplex_sums_to_one(words in random_sentence()) {
        let w: Vec<(&str, Pos)> = words.iter().map(|x| (x.as_str(), Pos::Noun)).collect();
        let s = common::sentence("r", &w);
        let (ind, simp) = models();
        for v in ind.score(&s).unwrap() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let sv = simp.score(&s).unwrap();
        prop_assert!(sv.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((sv.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn raising_a_threshold_never_adds_its_label(
        scores in prop::collection::vec(0.0f32..=1.0, 4),
        base in prop::collection::vec(1usize..20, 4),
        label in 0usize..4,
        lo in 1usize..20,
        hi in 1usize..20,
    ) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let mut t = ThresholdSet::uniform(4, 0.5).unwrap();
        t.values = base.iter().map(|&i| i as f64 / 20.0).collect();
        let low = t.with(label, lo as f64 / 20.0).unwrap();
        let high = t.with(label, hi as f64 / 20.0).unwrap();
        let a = labels_from_scores(&scores, &low, Fallback::None);
        let b = labels_from_scores(&scores, &high, Fallback::None);
        prop_assert!(!b.contains(&label) || a.contains(&label));
    }
}
