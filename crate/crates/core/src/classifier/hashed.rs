//! Deterministic bag-of-tokens encoder: unigram and adjacent-pair features
//! are sign-hashed into a fixed number of buckets and L2-normalized.

use candle_core::{Device, Tensor};

use crate::corpus::Sentence;
use crate::error::Result;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(FNV_PRIME);
        }
        for &b in *p {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedEncoder {
    dim: usize,
    bigrams: bool,
}

impl HashedEncoder {
    pub fn new(dim: usize, bigrams: bool) -> Self {
        assert!(dim > 0, "hashed encoder dimension must be positive");
        HashedEncoder { dim, bigrams }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, sentence: &Sentence) -> Vec<f32> {
        let mut v = vec![0f32; self.dim];
        let mut add = |h: u64| {
            let idx = (h % self.dim as u64) as usize;
            v[idx] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        };
        let toks: Vec<String> = sentence.tokens.iter().map(|t| t.surface.to_lowercase()).collect();
        for t in &toks {
            add(fnv1a(&[b"u", t.as_bytes()]));
        }
        if self.bigrams {
            for w in toks.windows(2) {
                add(fnv1a(&[b"b", w[0].as_bytes(), w[1].as_bytes()]));
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    pub fn encode(&self, sentences: &[&Sentence], device: &Device) -> Result<Tensor> {
        let mut data = Vec::with_capacity(sentences.len() * self.dim);
        for s in sentences {
            data.extend(self.features(s));
        }
        Ok(Tensor::from_vec(data, (sentences.len(), self.dim), device)?)
    }
}
