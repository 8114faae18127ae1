use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Loaded;

pub const MANIFEST_VERSION: u32 = 1;

/// A pipeline step whose output is missing.
#[derive(Debug)]
pub struct MissingStep {
    pub step: &'static str,
    pub artifact: PathBuf,
}

impl fmt::Display for MissingStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "missing {} (produced by `{}`); run `revmine {}` first",
            self.artifact.display(),
            self.step,
            self.step
        )
    }
}

impl std::error::Error for MissingStep {}

/// Fixed layout under the run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: PathBuf) -> RunDir {
        RunDir { root }
    }

    pub fn candidates(&self) -> PathBuf {
        self.root.join("candidates")
    }
    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset")
    }
    pub fn augmented(&self) -> PathBuf {
        self.root.join("augmented")
    }
    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }
    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn sentences(&self) -> PathBuf {
        self.candidates().join("sentences.jsonl")
    }

    pub fn require(&self, path: PathBuf, step: &'static str) -> Result<PathBuf> {
        if path.exists() {
            Ok(path)
        } else {
            Err(MissingStep { step, artifact: path }.into())
        }
    }

    pub fn ensure(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
    }

    fn relative(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).display().to_string()
    }
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct ManifestFile<'a> {
    version: u32,
    command: &'a str,
    tool_version: &'a str,
    config_sha256: String,
    seed: u64,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

/// Collects inputs and outputs of one subcommand and writes
/// `<dir>/<command>.manifest.json` when finished.
pub struct Manifest<'a> {
    command: &'a str,
    loaded: &'a Loaded,
    run: &'a RunDir,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, loaded: &'a Loaded, run: &'a RunDir) -> Self {
        Manifest {
            command,
            loaded,
            run,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn write(self, dir: &Path) -> Result<PathBuf> {
        let config_json = config_digest_input(&self.loaded)?;
        let digest = |paths: &[PathBuf], rel: &dyn Fn(&Path) -> String| -> Result<Vec<FileDigest>> {
            let mut out = Vec::new();
            for p in paths {
                for f in files_under(p)? {
                    out.push(FileDigest {
                        path: rel(&f),
                        sha256: sha256_file(&f)?,
                    });
                }
            }
            Ok(out)
        };
        let base = &self.loaded.base;
        let input_rel = |p: &Path| {
            if p.starts_with(&self.run.root) {
                self.run.relative(p)
            } else {
                p.strip_prefix(base).unwrap_or(p).display().to_string()
            }
        };
        let output_rel = |p: &Path| self.run.relative(p);
        let manifest = ManifestFile {
            version: MANIFEST_VERSION,
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION"),
            config_sha256: hex(&Sha256::digest(&config_json)),
            seed: self.loaded.config.seed,
            inputs: digest(&self.inputs, &input_rel)?,
            outputs: digest(&self.outputs, &output_rel)?,
        };
        self.run.ensure(dir)?;
        let path = dir.join(format!("{}.manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// The effective config minus the run directory, which only says where outputs go.
fn config_digest_input(loaded: &Loaded) -> Result<Vec<u8>> {
    let mut config = loaded.config.clone();
    config.run_dir = PathBuf::new();
    Ok(serde_json::to_vec(&config)?)
}

/// Regular files at or below `p`, in sorted order.
fn files_under(p: &Path) -> Result<Vec<PathBuf>> {
    if !p.is_dir() {
        return Ok(vec![p.to_path_buf()]);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(p)
        .with_context(|| format!("listing {}", p.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    let mut out = Vec::new();
    for e in entries {
        out.extend(files_under(&e)?);
    }
    Ok(out)
}

pub fn sha256_file(p: &Path) -> Result<String> {
    let mut f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn missing_step_names_the_command() {
        let run = RunDir::new(PathBuf::from("/nonexistent/run"));
        let err = run.require(run.sentences(), "ingest").unwrap_err();
        let missing = err.downcast_ref::<MissingStep>().unwrap();
        assert_eq!(missing.step, "ingest");
        assert!(err.to_string().contains("revmine ingest"));
    }
}
