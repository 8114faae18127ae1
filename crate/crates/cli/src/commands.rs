use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use revmine::augment::{balance_to_mps, build_unit_index, AugmentContext, AugmentationReport, FileLexicon};
use revmine::classifier::{extract_comments, train, ClassifierModel};
use revmine::corpus::{split_and_tokenize, Corpus, Sentence};
use revmine::dataset::{pair_histogram, split_dataset, Dataset, LabeledRecord, PairMatrix};
use revmine::evaluation::{
    major_minor_breakdown, pair_metrics, run_mps_sweep, ConfigSnapshot, MetricsReport, PairInputs, SweepConfig,
};
use revmine::pattern::{mine_candidates, CandidateTable};
use revmine::schema::{
    apply_curation, compare_to_indicators, curation_template, CurationMap, IndicatorSet, LabelSchema, MatchCounts,
    Role,
};

use crate::config::Loaded;
use crate::run::{Manifest, RunDir};

pub struct Ctx {
    pub loaded: Loaded,
    pub run: RunDir,
}

const ROLES: [Role; 2] = [Role::Component, Role::Aspect];

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl Ctx {
    fn schema(&self, m: &mut Manifest) -> Result<LabelSchema> {
        let p = self.loaded.input("paths.schema", &self.loaded.config.paths.schema)?;
        m.input(&p);
        Ok(LabelSchema::load(&p)?)
    }

    fn sentences(&self, m: &mut Manifest) -> Result<Vec<Sentence>> {
        let p = self.run.require(self.run.sentences(), "ingest")?;
        m.input(&p);
        Ok(revmine::io::read_jsonl(&p)?)
    }

    fn dataset_file(&self, name: &str, m: &mut Manifest, schema: &LabelSchema) -> Result<Dataset> {
        let p = self.run.require(self.run.dataset().join(name), "build-dataset")?;
        m.input(&p);
        Ok(Dataset::read_jsonl(&p, self.loaded.tokenizer()?.as_ref(), schema)?)
    }

    fn model_dir(&self, role: Role) -> PathBuf {
        self.run.models().join(role.as_str())
    }

    fn model(&self, role: Role, m: &mut Manifest) -> Result<ClassifierModel> {
        let dir = self.run.require(self.model_dir(role), "train")?;
        m.input(&dir);
        Ok(ClassifierModel::load(&dir)?)
    }

    pub fn ingest(&self) -> Result<()> {
        let mut m = Manifest::new("ingest", &self.loaded, &self.run);
        let corpus_path = self.loaded.input("paths.corpus", &self.loaded.config.paths.corpus)?;
        m.input(&corpus_path);
        if let Some(d) = &self.loaded.config.tokenizer.dictionary {
            m.input(&self.loaded.resolve(d));
        }
        let corpus = Corpus::ingest(&corpus_path)?;
        let tokenized = split_and_tokenize(&corpus, self.loaded.tokenizer()?.as_ref(), &self.loaded.splitter()?);
        let dir = self.run.candidates();
        self.run.ensure(&dir)?;
        let out = self.run.sentences();
        revmine::io::write_jsonl(&out, &tokenized.sentences)?;
        let mut skipped = String::from("review_id\tsegment\treason\ttext\n");
        for s in &tokenized.skipped {
            skipped.push_str(&format!("{}\t{}\t{}\t{}\n", s.review_id, s.segment, s.reason, s.text));
        }
        let skipped_path = dir.join("skipped.tsv");
        write(&skipped_path, &skipped)?;
        m.output(&out);
        m.output(&skipped_path);
        m.write(&dir)?;
        println!(
            "ingested {} reviews: {} sentences, {} skipped",
            corpus.len(),
            tokenized.sentences.len(),
            tokenized.skipped.len()
        );
        Ok(())
    }

    pub fn mine(&self) -> Result<()> {
        let mut m = Manifest::new("mine", &self.loaded, &self.run);
        let sentences = self.sentences(&mut m)?;
        if let Some(r) = &self.loaded.config.paths.rules {
            m.input(&self.loaded.resolve(r));
        }
        let mined = mine_candidates(&sentences, &self.loaded.rules()?)?;
        let dir = self.run.candidates();
        let top = self.loaded.config.mining.top_cooccurring;
        for table in [&mined.components, &mined.aspects] {
            let stem = table_stem(table.role);
            let tsv = dir.join(format!("{stem}.tsv"));
            let json = dir.join(format!("{stem}.json"));
            write(&tsv, &table.to_tsv(top))?;
            write_json(&json, table)?;
            m.output(&tsv);
            m.output(&json);
        }
        let matches = dir.join("matches.jsonl");
        revmine::io::write_jsonl(&matches, &mined.matches)?;
        m.output(&matches);
        m.write(&dir)?;
        println!(
            "{} matches: {} component candidates, {} aspect candidates",
            mined.matches.len(),
            mined.components.rows.len(),
            mined.aspects.rows.len()
        );
        Ok(())
    }

    fn candidate_tables(&self, m: &mut Manifest) -> Result<Vec<CandidateTable>> {
        ROLES
            .iter()
            .map(|&role| {
                let p = self
                    .run
                    .require(self.run.candidates().join(format!("{}.json", table_stem(role))), "mine")?;
                m.input(&p);
                read_json(&p)
            })
            .collect()
    }

    pub fn curate_template(&self) -> Result<()> {
        let mut m = Manifest::new("curate-template", &self.loaded, &self.run);
        let tables = self.candidate_tables(&mut m)?;
        let dir = self.run.candidates();
        let template = dir.join("curation_template.tsv");
        write(&template, &curation_template(&tables.iter().collect::<Vec<_>>()))?;
        m.output(&template);
        if self.loaded.config.paths.curation.is_some() {
            let schema = self.schema(&mut m)?;
            let cpath = self.loaded.input("paths.curation", &self.loaded.config.paths.curation)?;
            m.input(&cpath);
            let map = CurationMap::load(&cpath)?;
            for table in &tables {
                let report = apply_curation(table, &map, &schema)?;
                let out = dir.join(format!("curation_{}.tsv", table.role));
                write(&out, &report.to_tsv())?;
                m.output(&out);
                println!(
                    "{}: {} mapped, {} improper, {} ignored, {} unresolved",
                    table.role,
                    report.mapped.len(),
                    report.improper.len(),
                    report.ignored.len(),
                    report.unresolved.len()
                );
            }
        }
        m.write(&dir)?;
        println!("wrote {}", template.display());
        Ok(())
    }

    pub fn build_dataset(&self) -> Result<()> {
        let mut m = Manifest::new("build-dataset", &self.loaded, &self.run);
        let schema = self.schema(&mut m)?;
        let ann = self.loaded.input("paths.annotations", &self.loaded.config.paths.annotations)?;
        m.input(&ann);
        let records: Vec<LabeledRecord> = revmine::io::read_jsonl(&ann)?;
        let dataset = Dataset::from_records(records, self.loaded.tokenizer()?.as_ref(), &schema)?;
        let split = split_dataset(&dataset, &schema, &self.loaded.config.split)?;
        let matrix = PairMatrix::build(&dataset, &schema)?;
        let hist = pair_histogram(&matrix, self.loaded.config.dataset.histogram_bucket)?;
        let dir = self.run.dataset();
        self.run.ensure(&dir)?;
        for (name, part) in [
            ("dataset.jsonl", &dataset),
            ("train.jsonl", &split.train),
            ("validation.jsonl", &split.validation),
            ("evaluation.jsonl", &split.evaluation),
        ] {
            let p = dir.join(name);
            part.write_jsonl(&p)?;
            m.output(&p);
        }
        let pairs = dir.join("pairs.tsv");
        write(&pairs, &matrix.to_tsv())?;
        let histogram = dir.join("histogram.csv");
        write(&histogram, &hist.to_csv())?;
        m.output(&pairs);
        m.output(&histogram);
        m.write(&dir)?;
        println!(
            "{} sentences: train {}, validation {}, evaluation {}; {} of {} pairs have 10 or fewer sentences",
            dataset.len(),
            split.train.len(),
            split.validation.len(),
            split.evaluation.len(),
            hist.pairs_at_most_ten,
            hist.total_pairs
        );
        Ok(())
    }

    /// Synonym lexicon plus the n-gram index over the ingested corpus.
    fn augment_resources(&self, m: &mut Manifest, needed: bool) -> Result<AugmentResources> {
        let cfg = &self.loaded.config;
        let lexicon: Box<dyn revmine::augment::SynonymLexicon> = if needed || cfg.paths.lexicon.is_some() {
            let p = self.loaded.input("paths.lexicon", &cfg.paths.lexicon)?;
            m.input(&p);
            self.loaded.lexicon()?
        } else {
            Box::new(FileLexicon::default())
        };
        let divider = cfg.lexicon.divider.divider();
        let sentences = if needed { self.sentences(m)? } else { Vec::new() };
        let index = build_unit_index(&sentences, divider.as_ref(), cfg.lexicon.ngram_order)?;
        Ok(AugmentResources { lexicon, divider, index })
    }

    pub fn augment(&self, mps: Option<usize>) -> Result<()> {
        let mut m = Manifest::new("augment", &self.loaded, &self.run);
        let schema = self.schema(&mut m)?;
        let train_set = self.dataset_file("train.jsonl", &mut m, &schema)?;
        let mut config = self.loaded.config.augment.clone();
        if let Some(v) = mps {
            config.mps = v;
        }
        let res = self.augment_resources(&mut m, config.mps > 0)?;
        let (augmented, report) = balance_to_mps(&train_set, &schema, &res.ctx(), &config)?;
        for p in report.deficient_pairs() {
            log::warn!("pair ({}, {}) stayed at {} below MPS {}", p.component, p.aspect, p.after, config.mps);
        }
        let dir = self.run.augmented();
        self.run.ensure(&dir)?;
        let train_out = dir.join("train.jsonl");
        augmented.write_jsonl(&train_out)?;
        let json = dir.join("report.json");
        write_json(&json, &report)?;
        let tsv = dir.join("report.tsv");
        write(&tsv, &report.to_tsv())?;
        for p in [&train_out, &json, &tsv] {
            m.output(p);
        }
        m.write(&dir)?;
        println!(
            "MPS {}: {} -> {} training sentences, {} generated, {} deficient pairs",
            config.mps,
            train_set.len(),
            augmented.len(),
            report.generated_total(),
            report.deficient_pairs().count()
        );
        Ok(())
    }

    pub fn train(&self, roles: &[Role]) -> Result<()> {
        let mut m = Manifest::new("train", &self.loaded, &self.run);
        let schema = self.schema(&mut m)?;
        let p = self.run.require(self.run.augmented().join("train.jsonl"), "augment")?;
        m.input(&p);
        let data = Dataset::read_jsonl(&p, self.loaded.tokenizer()?.as_ref(), &schema)?;
        if let Some(pre) = self.pretrained() {
            m.input(&pre);
        }
        let cfg = &self.loaded.config;
        self.run.ensure(&self.run.models())?;
        for &role in roles {
            let model = train(&data, &schema, role, &cfg.model, &cfg.train)?;
            let dir = self.model_dir(role);
            model.save(&dir)?;
            m.output(&dir);
            let last = model.log().epoch_losses.last().copied().unwrap_or(f64::NAN);
            println!("{role}: trained on {} sentences, final loss {last:.4}", data.len());
        }
        m.write(&self.run.models())?;
        Ok(())
    }

    fn pretrained(&self) -> Option<PathBuf> {
        match &self.loaded.config.model.backend {
            revmine::classifier::BackendConfig::Transformer(t) => t.pretrained.as_ref().map(|p| self.loaded.resolve(p)),
            _ => None,
        }
    }

    pub fn calibrate(&self, roles: &[Role]) -> Result<()> {
        let mut m = Manifest::new("calibrate", &self.loaded, &self.run);
        let schema = self.schema(&mut m)?;
        let validation = self.dataset_file("validation.jsonl", &mut m, &schema)?;
        let reports = self.run.reports();
        self.run.ensure(&reports)?;
        for &role in roles {
            let mut model = self.model(role, &mut m)?;
            let t = model.calibrate(&validation)?.clone();
            model.save(&self.model_dir(role))?;
            let out = reports.join(format!("thresholds_{role}.json"));
            write_json(&out, &t)?;
            m.output(&out);
            m.output(&self.model_dir(role));
            println!(
                "{role}: calibrated on {} sentences, validation macro-F1 {:.4}",
                validation.len(),
                t.validation_macro_f1.unwrap_or(f64::NAN)
            );
        }
        m.write(&reports)?;
        Ok(())
    }

    pub fn evaluate(&self) -> Result<()> {
        let mut m = Manifest::new("evaluate", &self.loaded, &self.run);
        let schema = self.schema(&mut m)?;
        let evaluation = self.dataset_file("evaluation.jsonl", &mut m, &schema)?;
        let report_path = self.run.require(self.run.augmented().join("report.json"), "augment")?;
        m.input(&report_path);
        let aug: AugmentationReport = read_json(&report_path)?;
        let refs: Vec<&Sentence> = evaluation.iter().map(|s| &s.sentence).collect();
        let reports = self.run.reports();
        self.run.ensure(&reports)?;
        let mut predicted = Vec::new();
        let mut truth = Vec::new();
        for role in ROLES {
            let model = self.model(role, &mut m)?;
            let pred = model.assign_labels(&refs)?;
            let gold: Vec<BTreeSet<String>> = evaluation.iter().map(|s| s.labels(role).clone()).collect();
            let snapshot = ConfigSnapshot {
                mps: aug.mps,
                seed: model.train_config().seed,
                backend: model.config().backend.name().to_string(),
            };
            let report = MetricsReport::build(role, &pred, &gold, schema.labels(role), snapshot)?;
            let json = reports.join(format!("metrics_{role}.json"));
            let tsv = reports.join(format!("metrics_{role}.tsv"));
            write_json(&json, &report)?;
            write(&tsv, &report.to_tsv())?;
            m.output(&json);
            m.output(&tsv);
            println!("{role}: macro-F1 {:.4} on {} sentences", report.macro_f1, report.sentences);
            predicted.push(pred);
            truth.push(gold);
        }
        let pairs = pair_metrics(
            &PairInputs {
                predicted_components: &predicted[0],
                predicted_aspects: &predicted[1],
                true_components: &truth[0],
                true_aspects: &truth[1],
            },
            &schema,
        )?;
        let mut tsv = String::from("component\taspect\tprecision\trecall\tf1\tsupport\n");
        for p in &pairs {
            tsv.push_str(&format!(
                "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                p.component, p.aspect, p.precision, p.recall, p.f1, p.support
            ));
        }
        let pairs_path = reports.join("pairs.tsv");
        write(&pairs_path, &tsv)?;
        let mut pred_tsv = String::from("sentence_id\tcomponents\taspects\ttext\n");
        for (i, s) in evaluation.iter().enumerate() {
            let join = |set: &BTreeSet<String>| set.iter().cloned().collect::<Vec<_>>().join(",");
            pred_tsv.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                s.id(),
                join(&predicted[0][i]),
                join(&predicted[1][i]),
                s.sentence.surface
            ));
        }
        let pred_path = reports.join("predictions.tsv");
        write(&pred_path, &pred_tsv)?;
        m.output(&pairs_path);
        m.output(&pred_path);
        m.write(&reports)?;
        Ok(())
    }

    pub fn sweep(&self, mps: Option<Vec<usize>>, seeds: Option<Vec<u64>>) -> Result<()> {
        let mut m = Manifest::new("sweep", &self.loaded, &self.run);
        let cfg = &self.loaded.config;
        let schema = self.schema(&mut m)?;
        let dataset = self.dataset_file("dataset.jsonl", &mut m, &schema)?;
        let mps_values = mps.unwrap_or_else(|| cfg.evaluation.mps_values.clone());
        let seeds = seeds
            .or_else(|| (!cfg.evaluation.seeds.is_empty()).then(|| cfg.evaluation.seeds.clone()))
            .unwrap_or_else(|| vec![cfg.seed]);
        let needs_augment = mps_values.iter().any(|&v| v > 0);
        let res = self.augment_resources(&mut m, needs_augment)?;
        let sweep = SweepConfig {
            mps_values,
            seeds,
            split: cfg.split,
            augment: cfg.augment.clone(),
            model: cfg.model.clone(),
            train: cfg.train.clone(),
        };
        let result = run_mps_sweep(&dataset, &schema, &res.ctx(), &sweep)?;
        let matrix = PairMatrix::build(&dataset, &schema)?;
        let breakdown = major_minor_breakdown(&result, &matrix, cfg.evaluation.minor_cut)?;
        let reports = self.run.reports();
        self.run.ensure(&reports)?;
        let outputs = [
            ("sweep.json", serde_json::to_string_pretty(&result)? + "\n"),
            ("sweep.csv", result.to_csv()),
            ("sweep_pairs.tsv", result.pairs_tsv()),
            ("breakdown.json", serde_json::to_string_pretty(&breakdown)? + "\n"),
            ("breakdown.csv", breakdown.to_csv()),
        ];
        for (name, text) in outputs {
            let p = reports.join(name);
            write(&p, &text)?;
            m.output(&p);
        }
        m.write(&reports)?;
        for row in &breakdown.rows {
            let group = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
            println!(
                "MPS {:>3}: component {:.4}  aspect {:.4}  minor {}  major {}",
                row.mps,
                row.component_macro_f1,
                row.aspect_macro_f1,
                group(row.minor),
                group(row.major)
            );
        }
        Ok(())
    }

    pub fn extract(&self, component: &str, aspect: &str, reviews: Option<&Path>) -> Result<()> {
        let mut m = Manifest::new("extract", &self.loaded, &self.run);
        let sentences = match reviews {
            Some(p) => {
                if !p.exists() {
                    bail!("review dump {} does not exist", p.display());
                }
                m.input(p);
                let corpus = Corpus::ingest(p)?;
                split_and_tokenize(&corpus, self.loaded.tokenizer()?.as_ref(), &self.loaded.splitter()?).sentences
            }
            None => self.sentences(&mut m)?,
        };
        let comp = self.model(Role::Component, &mut m)?;
        let asp = self.model(Role::Aspect, &mut m)?;
        let hits = extract_comments(&comp, &asp, &sentences, component, aspect)?;
        for s in &hits {
            println!("{}", s.surface);
        }
        log::info!("{} of {} sentences matched ({component}, {aspect})", hits.len(), sentences.len());
        m.write(&self.run.reports())?;
        Ok(())
    }

    pub fn compare_indicators(&self) -> Result<()> {
        let mut m = Manifest::new("compare-indicators", &self.loaded, &self.run);
        let schema = self.schema(&mut m)?;
        let paths = &self.loaded.config.paths;
        let sources = [
            (Role::Component, "paths.component_indicators", &paths.component_indicators),
            (Role::Aspect, "paths.aspect_indicators", &paths.aspect_indicators),
        ];
        if sources.iter().all(|(_, _, p)| p.is_none()) {
            bail!("compare-indicators needs paths.component_indicators or paths.aspect_indicators");
        }
        let reports = self.run.reports();
        self.run.ensure(&reports)?;
        let mut counts = Vec::new();
        let mut comparisons = Vec::new();
        for (role, key, value) in sources {
            if value.is_none() {
                continue;
            }
            let p = self.loaded.input(key, value)?;
            m.input(&p);
            let cmp = compare_to_indicators(&schema, &IndicatorSet::load(&p, role)?);
            let out = reports.join(format!("indicators_{role}.tsv"));
            write(&out, &cmp.to_tsv())?;
            m.output(&out);
            let c = cmp.counts;
            println!(
                "{role}: {} indicators, {}% string, {}% semantic, {}% matched",
                c.total(),
                c.string_percent(),
                c.semantic_percent(),
                c.matched_percent()
            );
            counts.push(c);
            comparisons.push(cmp);
        }
        let combined = MatchCounts::combined(&counts);
        println!(
            "combined: {} of {} matched ({:.1}%)",
            combined.string + combined.semantic,
            combined.total(),
            100.0 * combined.matched_fraction()
        );
        let json = reports.join("indicators.json");
        write_json(&json, &serde_json::json!({ "comparisons": comparisons, "combined": combined }))?;
        m.output(&json);
        m.write(&reports)?;
        Ok(())
    }
}

fn table_stem(role: Role) -> &'static str {
    match role {
        Role::Component => "components",
        Role::Aspect => "aspects",
    }
}

struct AugmentResources {
    lexicon: Box<dyn revmine::augment::SynonymLexicon>,
    divider: Box<dyn revmine::augment::WordDivider>,
    index: revmine::corpus::NGramIndex,
}

impl AugmentResources {
    fn ctx(&self) -> AugmentContext<'_> {
        AugmentContext {
            lexicon: self.lexicon.as_ref(),
            index: &self.index,
            divider: self.divider.as_ref(),
        }
    }
}
