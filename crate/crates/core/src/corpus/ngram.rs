use std::collections::HashMap;

use crate::error::{Error, Result};

/// Marker placed before the first token of every indexed sentence.
pub const BOUNDARY_START: &str = "<start>";
/// Marker placed after the last token of every indexed sentence.
pub const BOUNDARY_END: &str = "<end>";

/// Immutable index of every k-gram (1 ≤ k ≤ `n_max`) of token surfaces in a
/// corpus. Sentences are padded with [`BOUNDARY_START`] / [`BOUNDARY_END`]
/// so edge positions can be validated like interior ones.
#[derive(Debug, Clone)]
pub struct NGramIndex {
    n_max: usize,
    vocab: HashMap<String, u32>,
    grams: HashMap<Box<[u32]>, u32>,
}

impl NGramIndex {
    pub fn build<I, S, T>(sequences: I, n_max: usize) -> Result<NGramIndex>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[T]>,
        T: AsRef<str>,
    {
        if n_max < 3 {
            return Err(Error::Config(format!(
                "n-gram index needs n_max >= 3 for trigram validation, got {n_max}"
            )));
        }
        let mut index = NGramIndex {
            n_max,
            vocab: HashMap::new(),
            grams: HashMap::new(),
        };
        let mut ids = Vec::new();
        for seq in sequences {
            let seq = seq.as_ref();
            if seq.is_empty() {
                continue;
            }
            ids.clear();
            ids.push(index.intern(BOUNDARY_START));
            for tok in seq {
                let id = index.intern(tok.as_ref());
                ids.push(id);
            }
            ids.push(index.intern(BOUNDARY_END));
            for start in 0..ids.len() {
                for len in 1..=n_max.min(ids.len() - start) {
                    *index
                        .grams
                        .entry(ids[start..start + len].into())
                        .or_insert(0) += 1;
                }
            }
        }
        Ok(index)
    }

    fn intern(&mut self, surface: &str) -> u32 {
        if let Some(&id) = self.vocab.get(surface) {
            return id;
        }
        let id = self.vocab.len() as u32;
        self.vocab.insert(surface.to_string(), id);
        id
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of distinct grams stored.
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn contains<S: AsRef<str>>(&self, gram: &[S]) -> Result<bool> {
        Ok(self.count(gram)?.is_some())
    }

    /// Occurrence count of `gram`, or `None` when it never occurs.
    pub fn count<S: AsRef<str>>(&self, gram: &[S]) -> Result<Option<u32>> {
        if gram.is_empty() || gram.len() > self.n_max {
            return Err(Error::Precondition(format!(
                "gram length {} outside 1..={}",
                gram.len(),
                self.n_max
            )));
        }
        let mut key = Vec::with_capacity(gram.len());
        for tok in gram {
            match self.vocab.get(tok.as_ref()) {
                Some(&id) => key.push(id),
                None => return Ok(None),
            }
        }
        Ok(self.grams.get(key.as_slice()).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index_of(sents: &[&str], n: usize) -> NGramIndex {
        let seqs: Vec<Vec<&str>> = sents.iter().map(|s| s.split_whitespace().collect()).collect();
        NGramIndex::build(&seqs, n).unwrap()
    }

    #[test]
    fn enumerates_all_subgrams() {
        let idx = index_of(&["a b c"], 3);
        for gram in [
            vec!["a", "b", "c"],
            vec!["a", "b"],
            vec!["b", "c"],
            vec!["a"],
            vec!["b"],
            vec!["c"],
        ] {
            assert!(idx.contains(&gram).unwrap(), "{gram:?}");
        }
        assert!(!idx.contains(&["c", "a"]).unwrap());
        assert!(idx.contains(&["b", "c", BOUNDARY_END]).unwrap());
        assert!(idx.contains(&[BOUNDARY_START, "a"]).unwrap());
    }

    #[test]
    fn empty_input_gives_empty_index() {
        let empty: Vec<Vec<&str>> = Vec::new();
        assert!(NGramIndex::build(&empty, 3).unwrap().is_empty());
    }

    #[test]
    fn rejects_small_n_max() {
        let empty: Vec<Vec<&str>> = Vec::new();
        assert!(matches!(NGramIndex::build(&empty, 2), Err(Error::Config(_))));
    }

    #[test]
    fn too_long_query_is_precondition_error() {
        let idx = index_of(&["a b c d"], 3);
        assert!(matches!(
            idx.contains(&["a", "b", "c", "d"]),
            Err(Error::Precondition(_))
        ));
        assert!(idx.contains::<&str>(&[]).is_err());
    }

    #[test]
    fn counts_repeated_grams() {
        let idx = index_of(&["a b", "a b a"], 3);
        assert_eq!(idx.count(&["a", "b"]).unwrap(), Some(2));
        assert_eq!(idx.count(&["a"]).unwrap(), Some(3));
    }
}
