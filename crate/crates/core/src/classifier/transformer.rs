//! BERT-style encoder built on candle. Parameter names follow the usual
//! checkpoint layout so `config.json` + `model.safetensors` + `vocab.txt`
//! directories load directly.

use std::collections::HashMap;
use std::path::Path;

use candle_core::{DType, Device, Module, Tensor};
use candle_nn::{embedding, layer_norm, linear, Embedding, LayerNorm, Linear, VarBuilder, VarMap};
use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BertConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
}

fn default_type_vocab() -> usize {
    2
}

fn default_eps() -> f64 {
    1e-12
}

impl BertConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_attention_heads == 0 || self.hidden_size % self.num_attention_heads != 0 {
            return Err(Error::Config(format!(
                "hidden_size {} is not divisible by {} attention heads",
                self.hidden_size, self.num_attention_heads
            )));
        }
        if self.vocab_size == 0 || self.max_position_embeddings < 3 || self.num_hidden_layers == 0 {
            return Err(Error::Config("transformer dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let cfg: BertConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Greedy longest-match-first subword tokenizer over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPiece {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    lowercase: bool,
    max_chars_per_word: usize,
}

impl WordPiece {
    pub fn new(tokens: Vec<String>, lowercase: bool) -> Result<Self> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary entry {t:?}")));
            }
        }
        for special in [PAD, UNK, CLS, SEP] {
            if !ids.contains_key(special) {
                return Err(Error::Config(format!("vocabulary lacks {special}")));
            }
        }
        Ok(WordPiece {
            tokens,
            ids,
            lowercase,
            max_chars_per_word: 100,
        })
    }

    pub fn load(path: &Path, lowercase: bool) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        Self::new(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect(), lowercase)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        crate::io::write_string(path, &out)
    }

    /// Vocabulary holding the special tokens, every word seen in `sentences`,
    /// and each single character as both a word start and a continuation.
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a Sentence>, lowercase: bool) -> Result<Self> {
        let mut words = std::collections::BTreeSet::new();
        let mut chars = std::collections::BTreeSet::new();
        for s in sentences {
            for t in &s.tokens {
                let w = if lowercase { t.surface.to_lowercase() } else { t.surface.clone() };
                chars.extend(w.chars());
                words.insert(w);
            }
        }
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP, MASK].iter().map(|s| s.to_string()).collect();
        let mut seen: std::collections::HashSet<String> = tokens.iter().cloned().collect();
        let extra = words
            .into_iter()
            .chain(chars.iter().map(|c| c.to_string()))
            .chain(chars.iter().map(|c| format!("##{c}")));
        for t in extra {
            if seen.insert(t.clone()) {
                tokens.push(t);
            }
        }
        Self::new(tokens, lowercase)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    fn special(&self, token: &str) -> u32 {
        self.ids[token]
    }

    pub fn tokenize_word(&self, word: &str) -> Vec<u32> {
        let word = if self.lowercase { word.to_lowercase() } else { word.to_string() };
        let chars: Vec<char> = word.chars().collect();
        if chars.is_empty() {
            return Vec::new();
        }
        if chars.len() > self.max_chars_per_word {
            return vec![self.special(UNK)];
        }
        let mut out = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let piece: String = chars[start..end].iter().collect();
                let piece = if start > 0 { format!("##{piece}") } else { piece };
                if let Some(&id) = self.ids.get(&piece) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    out.push(id);
                    start = end;
                }
                None => return vec![self.special(UNK)],
            }
        }
        out
    }

    /// `[CLS] pieces... [SEP]`, truncated to `max_len`.
    pub fn encode(&self, sentence: &Sentence, max_len: usize) -> Vec<u32> {
        let mut ids = vec![self.special(CLS)];
        for t in &sentence.tokens {
            ids.extend(self.tokenize_word(&t.surface));
        }
        ids.truncate(max_len.saturating_sub(1).max(1));
        ids.push(self.special(SEP));
        ids
    }

    pub fn pad_id(&self) -> u32 {
        self.special(PAD)
    }
}

struct Embeddings {
    word: Embedding,
    position: Embedding,
    token_type: Embedding,
    norm: LayerNorm,
}

impl Embeddings {
    fn new(cfg: &BertConfig, vb: VarBuilder) -> Result<Self> {
        Ok(Embeddings {
            word: embedding(cfg.vocab_size, cfg.hidden_size, vb.pp("word_embeddings"))?,
            position: embedding(cfg.max_position_embeddings, cfg.hidden_size, vb.pp("position_embeddings"))?,
            token_type: embedding(cfg.type_vocab_size, cfg.hidden_size, vb.pp("token_type_embeddings"))?,
            norm: layer_norm(cfg.hidden_size, cfg.layer_norm_eps, vb.pp("LayerNorm"))?,
        })
    }

    fn forward(&self, ids: &Tensor) -> Result<Tensor> {
        let (_, len) = ids.dims2()?;
        let positions = Tensor::arange(0u32, len as u32, ids.device())?.unsqueeze(0)?;
        let types = ids.zeros_like()?;
        let x = self
            .word
            .forward(ids)?
            .broadcast_add(&self.position.forward(&positions)?)?
            .broadcast_add(&self.token_type.forward(&types)?)?;
        Ok(self.norm.forward(&x)?)
    }
}

struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    out_norm: LayerNorm,
    heads: usize,
}

impl Layer {
    fn new(cfg: &BertConfig, vb: VarBuilder) -> Result<Self> {
        let h = cfg.hidden_size;
        let att = vb.pp("attention");
        Ok(Layer {
            query: linear(h, h, att.pp("self").pp("query"))?,
            key: linear(h, h, att.pp("self").pp("key"))?,
            value: linear(h, h, att.pp("self").pp("value"))?,
            attn_out: linear(h, h, att.pp("output").pp("dense"))?,
            attn_norm: layer_norm(h, cfg.layer_norm_eps, att.pp("output").pp("LayerNorm"))?,
            intermediate: linear(h, cfg.intermediate_size, vb.pp("intermediate").pp("dense"))?,
            output: linear(cfg.intermediate_size, h, vb.pp("output").pp("dense"))?,
            out_norm: layer_norm(h, cfg.layer_norm_eps, vb.pp("output").pp("LayerNorm"))?,
            heads: cfg.num_attention_heads,
        })
    }

    /// `mask_bias` is (batch, 1, 1, len) with 0 for real tokens and a large
    /// negative value for padding.
    fn forward(&self, x: &Tensor, mask_bias: &Tensor) -> Result<Tensor> {
        let (b, len, h) = x.dims3()?;
        let hd = h / self.heads;
        let split = |t: Tensor| -> Result<Tensor> {
            Ok(t.reshape((b, len, self.heads, hd))?.transpose(1, 2)?.contiguous()?)
        };
        let q = split(self.query.forward(x)?)?;
        let k = split(self.key.forward(x)?)?;
        let v = split(self.value.forward(x)?)?;
        let scores = (q.matmul(&k.t()?)? / (hd as f64).sqrt())?.broadcast_add(mask_bias)?;
        let probs = candle_nn::ops::softmax_last_dim(&scores)?;
        let ctx = probs.matmul(&v)?.transpose(1, 2)?.reshape((b, len, h))?;
        let x = self.attn_norm.forward(&(self.attn_out.forward(&ctx)? + x)?)?;
        let mid = self.intermediate.forward(&x)?.gelu_erf()?;
        Ok(self.out_norm.forward(&(self.output.forward(&mid)? + x)?)?)
    }
}

/// Encoder whose sentence representation is the final hidden state at the
/// `[CLS]` position.
pub struct BertEncoder {
    config: BertConfig,
    vocab: WordPiece,
    embeddings: Embeddings,
    layers: Vec<Layer>,
    max_len: usize,
}

impl BertEncoder {
    /// Parameters are created under `vb`; load or initialize them through
    /// the owning [`VarMap`].
    pub fn new(config: BertConfig, vocab: WordPiece, max_len: usize, vb: VarBuilder) -> Result<Self> {
        config.validate()?;
        if vocab.len() > config.vocab_size {
            return Err(Error::Config(format!(
                "vocabulary has {} entries but the model holds {}",
                vocab.len(),
                config.vocab_size
            )));
        }
        let embeddings = Embeddings::new(&config, vb.pp("embeddings"))?;
        let layers = (0..config.num_hidden_layers)
            .map(|i| Layer::new(&config, vb.pp(format!("encoder.layer.{i}"))))
            .collect::<Result<Vec<_>>>()?;
        let max_len = max_len.min(config.max_position_embeddings);
        Ok(BertEncoder {
            config,
            vocab,
            embeddings,
            layers,
            max_len,
        })
    }

    pub fn config(&self) -> &BertConfig {
        &self.config
    }

    pub fn vocab(&self) -> &WordPiece {
        &self.vocab
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn dim(&self) -> usize {
        self.config.hidden_size
    }

    pub fn encode(&self, sentences: &[&Sentence], device: &Device) -> Result<Tensor> {
        let seqs: Vec<Vec<u32>> = sentences.iter().map(|s| self.vocab.encode(s, self.max_len)).collect();
        let len = seqs.iter().map(Vec::len).max().unwrap_or(2);
        let pad = self.vocab.pad_id();
        let mut ids = Vec::with_capacity(seqs.len() * len);
        let mut bias = Vec::with_capacity(seqs.len() * len);
        for s in &seqs {
            for i in 0..len {
                ids.push(s.get(i).copied().unwrap_or(pad));
                bias.push(if i < s.len() { 0f32 } else { -1e9 });
            }
        }
        let ids = Tensor::from_vec(ids, (seqs.len(), len), device)?;
        let bias = Tensor::from_vec(bias, (seqs.len(), 1, 1, len), device)?;
        let mut x = self.embeddings.forward(&ids)?;
        for layer in &self.layers {
            x = layer.forward(&x, &bias)?;
        }
        Ok(x.narrow(1, 0, 1)?.squeeze(1)?)
    }
}

/// Copies checkpoint tensors into every variable of `varmap` accepted by
/// `select` whose name (optionally under a `bert.` prefix, or with legacy
/// `gamma`/`beta` LayerNorm names) is found. Returns the names that were
/// not found.
pub fn load_checkpoint(varmap: &VarMap, path: &Path, select: impl Fn(&str) -> bool) -> Result<Vec<String>> {
    let tensors = candle_core::safetensors::load(path, &Device::Cpu)
        .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    let data = varmap.data().lock().expect("varmap lock");
    let mut missing = Vec::new();
    let mut names: Vec<&String> = data.keys().filter(|n| select(n)).collect();
    names.sort();
    for name in names {
        let inner = name.as_str();
        let legacy = inner.replace("LayerNorm.weight", "LayerNorm.gamma").replace("LayerNorm.bias", "LayerNorm.beta");
        let found = [inner.to_string(), format!("bert.{inner}"), legacy.clone(), format!("bert.{legacy}")]
            .into_iter()
            .find_map(|k| tensors.get(&k));
        match found {
            Some(t) => {
                let var = &data[name];
                let t = t.to_dtype(DType::F32)?;
                if t.dims() != var.dims() {
                    return Err(Error::Model(format!(
                        "{inner}: checkpoint shape {:?} does not match {:?}",
                        t.dims(),
                        var.dims()
                    )));
                }
                var.set(&t)?;
            }
            None => missing.push(inner.to_string()),
        }
    }
    Ok(missing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Pos, Token, TokenJoin};

    fn sent(words: &[&str]) -> Sentence {
        Sentence {
            id: "s".into(),
            review_id: "r".into(),
            surface: words.join(" "),
            tokens: words.iter().map(|w| Token::new(*w, Pos::Noun)).collect(),
            join: TokenJoin::Space,
        }
    }

    fn vocab(extra: &[&str]) -> WordPiece {
        let mut v: Vec<String> = [PAD, UNK, CLS, SEP, MASK].iter().map(|s| s.to_string()).collect();
        v.extend(extra.iter().map(|s| s.to_string()));
        WordPiece::new(v, true).unwrap()
    }

    #[test]
    fn wordpiece_greedy_longest_match() {
        let v = vocab(&["un", "##aff", "##able", "unaff"]);
        let ids = v.tokenize_word("unaffable");
        assert_eq!(ids, vec![v.id("unaff").unwrap(), v.id("##able").unwrap()]);
        assert_eq!(v.tokenize_word("xyz"), vec![v.id(UNK).unwrap()]);
    }

    #[test]
    fn encode_wraps_and_truncates() {
        let v = vocab(&["a", "b"]);
        let ids = v.encode(&sent(&["a", "b", "a"]), 4);
        assert_eq!(ids.len(), 4);
        assert_eq!(ids[0], v.id(CLS).unwrap());
        assert_eq!(*ids.last().unwrap(), v.id(SEP).unwrap());
    }

    #[test]
    fn corpus_vocab_covers_unseen_words_by_characters() {
        let v = WordPiece::from_sentences([&sent(&["tire", "flat"])], true).unwrap();
        let ids = v.tokenize_word("fire");
        assert!(!ids.contains(&v.id(UNK).unwrap()));
    }

    #[test]
    fn padding_does_not_change_cls_vector() {
        let cfg = BertConfig {
            vocab_size: 16,
            hidden_size: 8,
            num_hidden_layers: 1,
            num_attention_heads: 2,
            intermediate_size: 16,
            max_position_embeddings: 16,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
        };
        let varmap = VarMap::new();
        let vb = VarBuilder::from_varmap(&varmap, DType::F32, &Device::Cpu);
        let enc = BertEncoder::new(cfg, vocab(&["a", "b", "c"]), 16, vb).unwrap();
        let short = sent(&["a"]);
        let long = sent(&["a", "b", "c", "c"]);
        let alone = enc.encode(&[&short], &Device::Cpu).unwrap();
        let batched = enc.encode(&[&short, &long], &Device::Cpu).unwrap();
        let a: Vec<f32> = alone.get(0).unwrap().to_vec1().unwrap();
        let b: Vec<f32> = batched.get(0).unwrap().to_vec1().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-4, "{x} vs {y}");
        }
        assert_eq!(batched.dims(), &[2, 8]);
    }
}
