//! Multi-label sentence classifiers. An encoder feeds a linear head with
//! one score per label; per-label thresholds turn scores into a label set.

mod hashed;
mod thresholds;
mod transformer;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Module, Tensor, D};
use candle_nn::{linear, AdamW, Linear, Optimizer, ParamsAdamW, VarBuilder, VarMap};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::schema::{LabelSchema, Role};

pub use hashed::HashedEncoder;
pub use thresholds::{calibrate_from_scores, calibrate_thresholds, threshold_grid, ThresholdSet};
pub use transformer::{load_checkpoint, BertConfig, BertEncoder, WordPiece};

pub const ARTIFACT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";
const WEIGHTS_FILE: &str = "weights.safetensors";
const VOCAB_FILE: &str = "vocab.txt";
const HEAD_PREFIX: &str = "classifier";
const PREDICT_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Element-wise logistic scores.
    #[default]
    Independent,
    /// Softmax over labels; scores sum to 1.
    Simplex,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fallback {
    /// A sentence with no score at or above its threshold gets no labels.
    #[default]
    None,
    /// Such a sentence gets its top-scoring label.
    Argmax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformerConfig {
    /// Directory with `config.json`, `vocab.txt` and `model.safetensors`.
    /// Without it a randomly initialized encoder is built over a vocabulary
    /// taken from the training sentences.
    pub pretrained: Option<PathBuf>,
    pub hidden_size: usize,
    pub layers: usize,
    pub heads: usize,
    pub intermediate_size: usize,
    pub max_len: usize,
    pub lowercase: bool,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig {
            pretrained: None,
            hidden_size: 64,
            layers: 2,
            heads: 4,
            intermediate_size: 128,
            max_len: 64,
            lowercase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Hashed {
        #[serde(default = "default_hash_dim")]
        dim: usize,
        #[serde(default = "default_true")]
        bigrams: bool,
    },
    Transformer(TransformerConfig),
}

fn default_hash_dim() -> usize {
    4096
}

fn default_true() -> bool {
    true
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Hashed {
            dim: default_hash_dim(),
            bigrams: true,
        }
    }
}

impl BackendConfig {
    pub fn name(&self) -> &'static str {
        match self {
            BackendConfig::Hashed { .. } => "hashed",
            BackendConfig::Transformer(_) => "transformer",
        }
    }

    fn default_learning_rate(&self) -> f64 {
        match self {
            BackendConfig::Hashed { .. } => 0.2,
            BackendConfig::Transformer(t) if t.pretrained.is_some() => 5e-5,
            BackendConfig::Transformer(_) => 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub backend: BackendConfig,
    pub normalization: Normalization,
    pub fallback: Fallback,
    pub threshold_default: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            backend: BackendConfig::default(),
            normalization: Normalization::Independent,
            fallback: Fallback::None,
            threshold_default: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Backend-specific default when unset.
    pub learning_rate: Option<f64>,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 16,
            learning_rate: None,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub warnings: Vec<String>,
    pub learning_rate: f64,
    pub sentences: usize,
}

/// Contract shared by the encoder backends.
pub trait EncoderBackend {
    fn dim(&self) -> usize;
    fn trainable(&self) -> bool;
    /// One row per sentence.
    fn encode(&self, sentences: &[&Sentence], device: &Device) -> Result<Tensor>;
}

impl EncoderBackend for HashedEncoder {
    fn dim(&self) -> usize {
        HashedEncoder::dim(self)
    }

    fn trainable(&self) -> bool {
        false
    }

    fn encode(&self, sentences: &[&Sentence], device: &Device) -> Result<Tensor> {
        HashedEncoder::encode(self, sentences, device)
    }
}

impl EncoderBackend for BertEncoder {
    fn dim(&self) -> usize {
        BertEncoder::dim(self)
    }

    fn trainable(&self) -> bool {
        true
    }

    fn encode(&self, sentences: &[&Sentence], device: &Device) -> Result<Tensor> {
        BertEncoder::encode(self, sentences, device)
    }
}

enum Encoder {
    Hashed(HashedEncoder),
    Transformer(Box<BertEncoder>),
}

impl Encoder {
    fn backend(&self) -> &dyn EncoderBackend {
        match self {
            Encoder::Hashed(e) => e,
            Encoder::Transformer(e) => e.as_ref(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    role: Role,
    labels: Vec<String>,
    config: ModelConfig,
    train: TrainConfig,
    thresholds: ThresholdSet,
    log: TrainingLog,
    bert: Option<BertConfig>,
    max_len: Option<usize>,
}

/// A trained classifier for one role. Label order is the schema order at
/// training time.
pub struct ClassifierModel {
    role: Role,
    labels: Vec<String>,
    config: ModelConfig,
    train_config: TrainConfig,
    encoder: Encoder,
    head: Linear,
    varmap: VarMap,
    thresholds: ThresholdSet,
    log: TrainingLog,
    device: Device,
}

impl std::fmt::Debug for ClassifierModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassifierModel")
            .field("role", &self.role)
            .field("labels", &self.labels)
            .field("backend", &self.config.backend.name())
            .finish_non_exhaustive()
    }
}

fn build_encoder(
    config: &ModelConfig,
    vb: &VarBuilder,
    corpus: &[&Sentence],
    saved: Option<(&BertConfig, WordPiece, usize)>,
) -> Result<(Encoder, Option<PathBuf>)> {
    match &config.backend {
        BackendConfig::Hashed { dim, bigrams } => {
            if *dim == 0 {
                return Err(Error::Config("model.backend.dim must be positive".into()));
            }
            Ok((Encoder::Hashed(HashedEncoder::new(*dim, *bigrams)), None))
        }
        BackendConfig::Transformer(t) => {
            let (bert, vocab, max_len, checkpoint) = match (saved, &t.pretrained) {
                (Some((b, v, m)), _) => (b.clone(), v, m, None),
                (None, Some(dir)) => {
                    let bert = BertConfig::load(&dir.join("config.json"))?;
                    let vocab = WordPiece::load(&dir.join(VOCAB_FILE), t.lowercase)?;
                    (bert, vocab, t.max_len, Some(dir.join("model.safetensors")))
                }
                (None, None) => {
                    let vocab = WordPiece::from_sentences(corpus.iter().copied(), t.lowercase)?;
                    let bert = BertConfig {
                        vocab_size: vocab.len(),
                        hidden_size: t.hidden_size,
                        num_hidden_layers: t.layers,
                        num_attention_heads: t.heads,
                        intermediate_size: t.intermediate_size,
                        max_position_embeddings: t.max_len.max(3),
                        type_vocab_size: 2,
                        layer_norm_eps: 1e-12,
                    };
                    (bert, vocab, t.max_len, None)
                }
            };
            let enc = BertEncoder::new(bert, vocab, max_len, vb.clone())?;
            Ok((Encoder::Transformer(Box::new(enc)), checkpoint))
        }
    }
}

/// Overwrites every variable with values drawn from a seeded generator:
/// LayerNorm scales 1, biases 0, everything else N(0, 0.02).
fn seeded_init(varmap: &VarMap, seed: u64) -> Result<()> {
    let data = varmap.data().lock().expect("varmap lock");
    let mut names: Vec<&String> = data.keys().collect();
    names.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f32, 0.02).expect("valid normal");
    for name in names {
        let var = &data[name];
        let shape = var.shape().clone();
        let value = if name.ends_with("LayerNorm.weight") {
            Tensor::ones(shape, DType::F32, &Device::Cpu)?
        } else if name.ends_with("bias") {
            Tensor::zeros(shape, DType::F32, &Device::Cpu)?
        } else {
            let v: Vec<f32> = (0..shape.elem_count()).map(|_| normal.sample(&mut rng)).collect();
            Tensor::from_vec(v, shape, &Device::Cpu)?
        };
        var.set(&value)?;
    }
    Ok(())
}

fn loss_fn(logits: &Tensor, targets: &Tensor, norm: Normalization) -> Result<Tensor> {
    Ok(match norm {
        Normalization::Independent => {
            // max(x, 0) - x*y + log(1 + exp(-|x|))
            let x = logits;
            let pos = x.relu()?;
            let soft = x.abs()?.neg()?.exp()?.affine(1.0, 1.0)?.log()?;
            (pos - (x * targets)?)?.add(&soft)?.mean_all()?
        }
        Normalization::Simplex => {
            let row = targets.sum_keepdim(D::Minus1)?;
            let t = targets.broadcast_div(&row)?;
            let logp = candle_nn::ops::log_softmax(logits, D::Minus1)?;
            (t * logp)?.sum(D::Minus1)?.neg()?.mean_all()?
        }
    })
}

fn multi_hot(sentences: &[&crate::dataset::LabeledSentence], role: Role, labels: &[String]) -> Vec<f32> {
    let mut out = Vec::with_capacity(sentences.len() * labels.len());
    for s in sentences {
        let set = s.labels(role);
        out.extend(labels.iter().map(|l| if set.contains(l) { 1.0 } else { 0.0 }));
    }
    out
}

/// Trains a classifier for `role` on `dataset`. Every sentence must carry at
/// least one label of that role.
pub fn train(
    dataset: &Dataset,
    schema: &LabelSchema,
    role: Role,
    config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<ClassifierModel> {
    if dataset.is_empty() {
        return Err(Error::Precondition("cannot train on an empty dataset".into()));
    }
    if train_config.epochs == 0 || train_config.batch_size == 0 {
        return Err(Error::Config("train.epochs and train.batch_size must be positive".into()));
    }
    dataset.validate(schema)?;
    if let Some(s) = dataset.iter().find(|s| s.labels(role).is_empty()) {
        return Err(Error::Precondition(format!("sentence {} has no {role} label", s.id())));
    }
    let labels: Vec<String> = schema.labels(role).to_vec();
    let mut log = TrainingLog {
        sentences: dataset.len(),
        ..TrainingLog::default()
    };
    for l in &labels {
        if !dataset.iter().any(|s| s.labels(role).contains(l)) {
            let w = format!("{role} label {l} does not occur in the training data");
            log::warn!("{w}");
            log.warnings.push(w);
        }
    }

    let device = Device::Cpu;
    let varmap = VarMap::new();
    let vb = VarBuilder::from_varmap(&varmap, DType::F32, &device);
    let corpus: Vec<&Sentence> = dataset.iter().map(|s| &s.sentence).collect();
    let (encoder, checkpoint) = build_encoder(config, &vb, &corpus, None)?;
    let head = linear(encoder.backend().dim(), labels.len(), vb.pp(HEAD_PREFIX))?;
    seeded_init(&varmap, train_config.seed)?;
    if let Some(path) = checkpoint {
        let missing = load_checkpoint(&varmap, &path, |n| !n.starts_with(HEAD_PREFIX))?;
        if !missing.is_empty() {
            return Err(Error::Model(format!(
                "{} lacks {} encoder parameters, first {}",
                path.display(),
                missing.len(),
                missing[0]
            )));
        }
    }

    let lr = train_config.learning_rate.unwrap_or_else(|| config.backend.default_learning_rate());
    log.learning_rate = lr;
    let vars = if encoder.backend().trainable() {
        varmap.all_vars()
    } else {
        let data = varmap.data().lock().expect("varmap lock");
        let mut names: Vec<&String> = data.keys().filter(|n| n.starts_with(HEAD_PREFIX)).collect();
        names.sort();
        names.into_iter().map(|n| data[n].clone()).collect()
    };
    let mut opt = AdamW::new(
        vars,
        ParamsAdamW {
            lr,
            weight_decay: train_config.weight_decay,
            ..ParamsAdamW::default()
        },
    )?;

    let fixed = match &encoder {
        Encoder::Hashed(e) => Some(e.encode(&corpus, &device)?),
        Encoder::Transformer(_) => None,
    };
    let sentences: Vec<&crate::dataset::LabeledSentence> = dataset.iter().collect();
    let targets = Tensor::from_vec(multi_hot(&sentences, role, &labels), (sentences.len(), labels.len()), &device)?;
    let mut order: Vec<u32> = (0..sentences.len() as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed.wrapping_add(1));
    for epoch in 0..train_config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(train_config.batch_size) {
            let idx = Tensor::from_slice(chunk, chunk.len(), &device)?;
            let x = match &fixed {
                Some(all) => all.index_select(&idx, 0)?,
                None => {
                    let batch: Vec<&Sentence> = chunk.iter().map(|&i| corpus[i as usize]).collect();
                    encoder.backend().encode(&batch, &device)?
                }
            };
            let y = targets.index_select(&idx, 0)?;
            let loss = loss_fn(&head.forward(&x)?, &y, config.normalization)?;
            opt.backward_step(&loss)?;
            total += loss.to_scalar::<f32>()? as f64 * chunk.len() as f64;
        }
        let mean = total / sentences.len() as f64;
        log::info!("{role} epoch {} loss {mean:.6}", epoch + 1);
        log.epoch_losses.push(mean);
    }

    let thresholds = ThresholdSet::uniform(labels.len(), config.threshold_default)?;
    Ok(ClassifierModel {
        role,
        labels,
        config: config.clone(),
        train_config: train_config.clone(),
        encoder,
        head,
        varmap,
        thresholds,
        log,
        device,
    })
}

/// Label indices whose score reaches the threshold, in label order.
pub fn labels_from_scores(scores: &[f32], thresholds: &ThresholdSet, fallback: Fallback) -> Vec<usize> {
    let mut out: Vec<usize> = (0..scores.len())
        .filter(|&i| scores[i] as f64 >= thresholds.get(i))
        .collect();
    if out.is_empty() && fallback == Fallback::Argmax && !scores.is_empty() {
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        out.push(best);
    }
    out
}

impl ClassifierModel {
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn thresholds(&self) -> &ThresholdSet {
        &self.thresholds
    }

    pub fn set_thresholds(&mut self, thresholds: ThresholdSet) -> Result<()> {
        thresholds.validate(self.labels.len())?;
        self.thresholds = thresholds;
        Ok(())
    }

    /// Calibrates on `validation` and installs the result.
    pub fn calibrate(&mut self, validation: &Dataset) -> Result<&ThresholdSet> {
        let t = calibrate_thresholds(self, validation)?;
        self.set_thresholds(t)?;
        Ok(&self.thresholds)
    }

    pub fn encoder_dim(&self) -> usize {
        self.encoder.backend().dim()
    }

    /// One score vector per sentence, in label order.
    pub fn predict_scores(&self, sentences: &[&Sentence]) -> Result<Vec<Vec<f32>>> {
        let mut out = Vec::with_capacity(sentences.len());
        for chunk in sentences.chunks(PREDICT_BATCH) {
            let x = self.encoder.backend().encode(chunk, &self.device)?;
            let logits = self.head.forward(&x)?;
            let scores = match self.config.normalization {
                Normalization::Independent => candle_nn::ops::sigmoid(&logits)?,
                Normalization::Simplex => candle_nn::ops::softmax_last_dim(&logits)?,
            };
            out.extend(scores.to_vec2::<f32>()?);
        }
        Ok(out)
    }

    pub fn score(&self, sentence: &Sentence) -> Result<Vec<f32>> {
        Ok(self.predict_scores(&[sentence])?.remove(0))
    }

    pub fn assign_from_scores(&self, scores: &[f32]) -> BTreeSet<String> {
        labels_from_scores(scores, &self.thresholds, self.config.fallback)
            .into_iter()
            .map(|i| self.labels[i].clone())
            .collect()
    }

    pub fn assign_labels(&self, sentences: &[&Sentence]) -> Result<Vec<BTreeSet<String>>> {
        Ok(self
            .predict_scores(sentences)?
            .iter()
            .map(|s| self.assign_from_scores(s))
            .collect())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (bert, max_len) = match &self.encoder {
            Encoder::Transformer(e) => {
                e.vocab().save(&dir.join(VOCAB_FILE))?;
                (Some(e.config().clone()), Some(e.max_len()))
            }
            Encoder::Hashed(_) => (None, None),
        };
        let manifest = Manifest {
            version: ARTIFACT_VERSION,
            role: self.role,
            labels: self.labels.clone(),
            config: self.config.clone(),
            train: self.train_config.clone(),
            thresholds: self.thresholds.clone(),
            log: self.log.clone(),
            bert,
            max_len,
        };
        crate::io::write_string(&dir.join(MANIFEST_FILE), &serde_json::to_string_pretty(&manifest)?)?;
        self.varmap.save(dir.join(WEIGHTS_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ClassifierModel> {
        let manifest: Manifest = serde_json::from_str(&crate::io::read_to_string(&dir.join(MANIFEST_FILE))?)?;
        if manifest.version != ARTIFACT_VERSION {
            return Err(Error::Model(format!(
                "{}: artifact version {} is not supported",
                dir.display(),
                manifest.version
            )));
        }
        manifest.thresholds.validate(manifest.labels.len())?;
        let device = Device::Cpu;
        let mut varmap = VarMap::new();
        let vb = VarBuilder::from_varmap(&varmap, DType::F32, &device);
        let saved = match (&manifest.config.backend, &manifest.bert) {
            (BackendConfig::Transformer(t), Some(b)) => {
                let vocab = WordPiece::load(&dir.join(VOCAB_FILE), t.lowercase)?;
                Some((b, vocab, manifest.max_len.unwrap_or(t.max_len)))
            }
            (BackendConfig::Transformer(_), None) => {
                return Err(Error::Model(format!("{}: transformer artifact without encoder config", dir.display())))
            }
            _ => None,
        };
        let (encoder, _) = build_encoder(&manifest.config, &vb, &[], saved)?;
        let head = linear(encoder.backend().dim(), manifest.labels.len(), vb.pp(HEAD_PREFIX))?;
        let weights = dir.join(WEIGHTS_FILE);
        varmap
            .load(&weights)
            .map_err(|e| Error::Model(format!("{}: {e}", weights.display())))?;
        Ok(ClassifierModel {
            role: manifest.role,
            labels: manifest.labels,
            config: manifest.config,
            train_config: manifest.train,
            encoder,
            head,
            varmap,
            thresholds: manifest.thresholds,
            log: manifest.log,
            device,
        })
    }
}

/// Sentences assigned both `component` by the component model and `aspect`
/// by the aspect model, in input order.
pub fn extract_comments<'a>(
    component_model: &ClassifierModel,
    aspect_model: &ClassifierModel,
    sentences: &'a [Sentence],
    component: &str,
    aspect: &str,
) -> Result<Vec<&'a Sentence>> {
    if component_model.role() != Role::Component || aspect_model.role() != Role::Aspect {
        return Err(Error::Contract("extraction needs a component model and an aspect model".into()));
    }
    if !component_model.labels().iter().any(|l| l == component) {
        return Err(Error::Schema(format!("unknown component label {component:?}")));
    }
    if !aspect_model.labels().iter().any(|l| l == aspect) {
        return Err(Error::Schema(format!("unknown aspect label {aspect:?}")));
    }
    let refs: Vec<&Sentence> = sentences.iter().collect();
    let comps = component_model.assign_labels(&refs)?;
    let asps = aspect_model.assign_labels(&refs)?;
    Ok(sentences
        .iter()
        .enumerate()
        .filter(|(i, _)| comps[*i].contains(component) && asps[*i].contains(aspect))
        .map(|(_, s)| s)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Pos, Token, TokenJoin};
    use crate::dataset::{LabeledSentence, Provenance};

    fn labeled(id: &str, words: &[&str], comp: &str, asp: &str) -> LabeledSentence {
        LabeledSentence {
            sentence: Sentence {
                id: id.into(),
                review_id: "r".into(),
                surface: words.join(" "),
                tokens: words.iter().map(|w| Token::new(*w, Pos::Noun)).collect(),
                join: TokenJoin::Space,
            },
            component_labels: [comp.to_string()].into(),
            aspect_labels: [asp.to_string()].into(),
            provenance: Provenance::Human,
        }
    }

    fn toy() -> (Dataset, LabelSchema) {
        let schema = LabelSchema::new("t", vec!["Tire".into(), "Bell".into()], vec!["Durability".into(), "Size".into()]).unwrap();
        let mut v = Vec::new();
        for i in 0..8 {
            v.push(labeled(&format!("a{i}"), &["tirex", "durafail", &format!("w{i}")], "Tire", "Durability"));
            v.push(labeled(&format!("b{i}"), &["bellx", "sizebig", &format!("w{i}")], "Bell", "Size"));
        }
        (Dataset::new(v), schema)
    }

    fn small_hashed() -> ModelConfig {
        ModelConfig {
            backend: BackendConfig::Hashed { dim: 256, bigrams: true },
            ..ModelConfig::default()
        }
    }

    #[test]
    fn labels_from_scores_boundaries() {
        let t = ThresholdSet::uniform(3, 0.5).unwrap();
        assert_eq!(labels_from_scores(&[0.9, 0.1, 0.2], &t, Fallback::None), vec![0]);
        assert!(labels_from_scores(&[0.1, 0.1, 0.2], &t, Fallback::None).is_empty());
        assert_eq!(labels_from_scores(&[0.1, 0.3, 0.2], &t, Fallback::Argmax), vec![1]);
        assert_eq!(labels_from_scores(&[0.5, 0.49, 0.2], &t, Fallback::None), vec![0]);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let (_, schema) = toy();
        let err = train(&Dataset::new(vec![]), &schema, Role::Component, &small_hashed(), &TrainConfig::default());
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn learns_keyword_labels() {
        let (ds, schema) = toy();
        let m = train(&ds, &schema, Role::Component, &small_hashed(), &TrainConfig::default()).unwrap();
        let s = labeled("q", &["tirex", "durafail"], "Tire", "Durability");
        let scores = m.score(&s.sentence).unwrap();
        assert!(scores[0] > scores[1]);
        let losses = &m.log().epoch_losses;
        assert!(losses.last().unwrap() < &losses[0]);
    }

    #[test]
    fn simplex_scores_sum_to_one() {
        let (ds, schema) = toy();
        let cfg = ModelConfig {
            normalization: Normalization::Simplex,
            ..small_hashed()
        };
        let m = train(&ds, &schema, Role::Aspect, &cfg, &TrainConfig { epochs: 3, ..TrainConfig::default() }).unwrap();
        for s in ds.iter() {
            let sum: f32 = m.score(&s.sentence).unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn unknown_query_label_is_schema_error() {
        let (ds, schema) = toy();
        let tc = TrainConfig { epochs: 1, ..TrainConfig::default() };
        let c = train(&ds, &schema, Role::Component, &small_hashed(), &tc).unwrap();
        let a = train(&ds, &schema, Role::Aspect, &small_hashed(), &tc).unwrap();
        assert!(matches!(extract_comments(&c, &a, &[], "Nope", "Size"), Err(Error::Schema(_))));
        assert!(extract_comments(&c, &a, &[], "Tire", "Size").unwrap().is_empty());
        assert!(matches!(extract_comments(&a, &c, &[], "Tire", "Size"), Err(Error::Contract(_))));
    }

    #[test]
    fn absent_label_is_warned() {
        let (ds, _) = toy();
        let schema = LabelSchema::new("t", vec!["Tire".into(), "Bell".into(), "Gear".into()], vec!["Durability".into(), "Size".into()]).unwrap();
        let m = train(&ds, &schema, Role::Component, &small_hashed(), &TrainConfig { epochs: 1, ..TrainConfig::default() }).unwrap();
        assert_eq!(m.log().warnings.len(), 1);
        assert!(m.log().warnings[0].contains("Gear"));
    }
}
