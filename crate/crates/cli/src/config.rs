use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use revmine::augment::{AugmentationConfig, DividerKind, FileLexicon, SynonymLexicon, WordNetLexicon};
use revmine::classifier::{ModelConfig, TrainConfig};
use revmine::corpus::{LexiconTokenizer, MecabTokenizer, PosLexicon, SentenceSplitter, Tokenizer};
use revmine::dataset::SplitSpec;
use revmine::pattern::{default_rules, load_rules, PatternRule};

/// The single configuration document. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Overrides the seed of every seeded block.
    pub seed: u64,
    pub run_dir: PathBuf,
    pub paths: Paths,
    pub tokenizer: TokenizerConfig,
    pub lexicon: LexiconConfig,
    pub mining: MiningConfig,
    pub dataset: DatasetConfig,
    pub split: SplitSpec,
    pub augment: AugmentationConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            run_dir: PathBuf::from("run"),
            paths: Paths::default(),
            tokenizer: TokenizerConfig::default(),
            lexicon: LexiconConfig::default(),
            mining: MiningConfig::default(),
            dataset: DatasetConfig::default(),
            split: SplitSpec::default(),
            augment: AugmentationConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// JSON-lines review dump.
    pub corpus: Option<PathBuf>,
    /// TOML label schema.
    pub schema: Option<PathBuf>,
    /// Edited curation file (`surface role disposition target`).
    pub curation: Option<PathBuf>,
    /// JSON-lines labeled sentences.
    pub annotations: Option<PathBuf>,
    /// Synonym source: a TSV lexicon or a WordNet SQLite database.
    pub lexicon: Option<PathBuf>,
    /// Pattern rules in TOML; the built-in rules are used when unset.
    pub rules: Option<PathBuf>,
    pub component_indicators: Option<PathBuf>,
    pub aspect_indicators: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerName {
    #[default]
    Whitespace,
    Lexicon,
    Mecab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub name: TokenizerName,
    /// `surface<TAB>pos` dictionary; required by `lexicon`, optional for `whitespace`.
    pub dictionary: Option<PathBuf>,
    pub executable: PathBuf,
    pub dicdir: Option<PathBuf>,
    pub userdic: Option<PathBuf>,
    pub terminators: Option<Vec<String>>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            name: TokenizerName::Whitespace,
            dictionary: None,
            executable: PathBuf::from("mecab"),
            dicdir: None,
            userdic: None,
            terminators: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconKind {
    #[default]
    File,
    Wordnet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconConfig {
    pub kind: LexiconKind,
    /// WordNet language code.
    pub lang: String,
    pub divider: DividerKind,
    /// Longest n-gram kept in the validation index.
    pub ngram_order: usize,
}

impl Default for LexiconConfig {
    fn default() -> Self {
        LexiconConfig {
            kind: LexiconKind::File,
            lang: "jpn".into(),
            divider: DividerKind::Token,
            ngram_order: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// Co-occurring surfaces listed per candidate row.
    pub top_cooccurring: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig { top_cooccurring: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub histogram_bucket: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig { histogram_bucket: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub mps_values: Vec<usize>,
    /// Sweep seeds; the global seed alone when empty.
    pub seeds: Vec<u64>,
    pub minor_cut: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            mps_values: vec![0, 5, 10, 15, 20],
            seeds: Vec::new(),
            minor_cut: 10,
        }
    }
}

/// A parsed config plus the directory its relative paths hang off.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Loaded> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base })
    }

    /// Applies command-line overrides and pushes the global seed into every seeded block.
    pub fn finish(mut self, seed: Option<u64>, run_dir: Option<PathBuf>) -> Result<Loaded> {
        if let Some(s) = seed {
            self.config.seed = s;
        }
        if let Some(r) = run_dir {
            self.config.run_dir = r;
        }
        let s = self.config.seed;
        self.config.split.seed = s;
        self.config.augment.seed = s;
        self.config.train.seed = s;
        self.config.augment.validate()?;
        if self.config.dataset.histogram_bucket == 0 {
            bail!("dataset.histogram_bucket must be >= 1");
        }
        Ok(self)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.resolve(&self.config.run_dir)
    }

    /// A configured input path that must exist.
    pub fn input(&self, key: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        let Some(p) = value else {
            bail!("config key `{key}` is required for this command");
        };
        let full = self.resolve(p);
        if !full.exists() {
            bail!("`{key}` points to {}, which does not exist", full.display());
        }
        Ok(full)
    }

    pub fn tokenizer(&self) -> Result<Box<dyn Tokenizer>> {
        let t = &self.config.tokenizer;
        let dictionary = || -> Result<PosLexicon> {
            match &t.dictionary {
                Some(_) => Ok(PosLexicon::load(&self.input("tokenizer.dictionary", &t.dictionary)?)?),
                None => Ok(PosLexicon::default()),
            }
        };
        Ok(match t.name {
            TokenizerName::Whitespace => Box::new(LexiconTokenizer::whitespace(dictionary()?)),
            TokenizerName::Lexicon => {
                self.input("tokenizer.dictionary", &t.dictionary)?;
                Box::new(LexiconTokenizer::longest_match(dictionary()?))
            }
            TokenizerName::Mecab => Box::new(MecabTokenizer {
                executable: t.executable.clone(),
                dicdir: t.dicdir.as_ref().map(|p| self.resolve(p)),
                userdic: t.userdic.as_ref().map(|p| self.resolve(p)),
            }),
        })
    }

    pub fn splitter(&self) -> Result<SentenceSplitter> {
        Ok(match &self.config.tokenizer.terminators {
            Some(t) => SentenceSplitter::new(t.clone())?,
            None => SentenceSplitter::default(),
        })
    }

    pub fn rules(&self) -> Result<Vec<PatternRule>> {
        match &self.config.paths.rules {
            Some(_) => Ok(load_rules(&self.input("paths.rules", &self.config.paths.rules)?)?),
            None => Ok(default_rules()),
        }
    }

    pub fn lexicon(&self) -> Result<Box<dyn SynonymLexicon>> {
        let path = self.input("paths.lexicon", &self.config.paths.lexicon)?;
        Ok(match self.config.lexicon.kind {
            LexiconKind::File => Box::new(FileLexicon::load(&path)?),
            LexiconKind::Wordnet => Box::new(WordNetLexicon::open(&path, &self.config.lexicon.lang)?),
        })
    }
}
