use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::Mutex;

use rusqlite::{Connection, OpenFlags};

use crate::error::{Error, Result};

/// Word → synonym lookup. Results are sorted and de-duplicated, never
/// containing the queried word itself.
pub trait SynonymLexicon: Send + Sync {
    fn synonyms(&self, word: &str) -> Result<Vec<String>>;
}

/// In-memory lexicon loaded from `word<TAB>syn1,syn2,...` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl FileLexicon {
    pub fn load(path: &Path) -> Result<FileLexicon> {
        let text = crate::io::read_to_string(path)?;
        FileLexicon::parse(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<FileLexicon> {
        let mut lex = FileLexicon::default();
        for (line, fields) in crate::io::tsv_records(text) {
            if fields.len() < 2 || fields[0].is_empty() {
                return Err(Error::parse("<lexicon>", line, "expected word<TAB>synonyms"));
            }
            for syn in fields[1].split(',').map(str::trim).filter(|s| !s.is_empty()) {
                lex.add(fields[0], syn);
            }
        }
        Ok(lex)
    }

    /// Every member of each group becomes a synonym of every other member.
    pub fn from_groups<S: AsRef<str>>(groups: &[Vec<S>]) -> FileLexicon {
        let mut lex = FileLexicon::default();
        for group in groups {
            for a in group {
                for b in group {
                    lex.add(a.as_ref(), b.as_ref());
                }
            }
        }
        lex
    }

    pub fn add(&mut self, word: &str, synonym: &str) {
        if word != synonym {
            self.entries
                .entry(word.to_string())
                .or_default()
                .insert(synonym.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl SynonymLexicon for FileLexicon {
    fn synonyms(&self, word: &str) -> Result<Vec<String>> {
        Ok(self
            .entries
            .get(word)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default())
    }
}

/// Synonyms from a WordNet SQLite database in the Open Multilingual
/// Wordnet layout (`word`, `sense` tables; e.g. the Japanese WordNet
/// `wnjpn.db`). Two words are synonyms when they share a synset.
pub struct WordNetLexicon {
    conn: Mutex<Connection>,
    lang: String,
    cache: Mutex<HashMap<String, Vec<String>>>,
}

const SYNONYM_QUERY: &str = "
    SELECT DISTINCT w2.lemma
    FROM word w1
    JOIN sense s1 ON s1.wordid = w1.wordid
    JOIN sense s2 ON s2.synset = s1.synset
    JOIN word w2 ON w2.wordid = s2.wordid
    WHERE w1.lemma = ?1 AND w1.lang = ?2 AND w2.lang = ?2 AND w2.lemma <> ?1
    ORDER BY w2.lemma";

impl WordNetLexicon {
    pub fn open(path: &Path, lang: &str) -> Result<WordNetLexicon> {
        let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY)
            .map_err(|e| Error::Lexicon(format!("{}: {e}", path.display())))?;
        Ok(WordNetLexicon::from_connection(conn, lang))
    }

    pub fn from_connection(conn: Connection, lang: &str) -> WordNetLexicon {
        WordNetLexicon {
            conn: Mutex::new(conn),
            lang: lang.to_string(),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl SynonymLexicon for WordNetLexicon {
    fn synonyms(&self, word: &str) -> Result<Vec<String>> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(word) {
            return Ok(hit.clone());
        }
        let conn = self.conn.lock().expect("connection lock");
        let mut stmt = conn.prepare_cached(SYNONYM_QUERY)?;
        let rows = stmt.query_map([word, self.lang.as_str()], |row| row.get::<_, String>(0))?;
        let mut out = Vec::new();
        for lemma in rows {
            // Multi-word lemmas are stored with underscores.
            out.push(lemma?.replace('_', " "));
        }
        out.retain(|s| s != word);
        out.sort();
        out.dedup();
        self.cache
            .lock()
            .expect("cache lock")
            .insert(word.to_string(), out.clone());
        Ok(out)
    }
}
