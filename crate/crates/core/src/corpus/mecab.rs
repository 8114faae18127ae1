//! Adapter for an external MeCab executable.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use super::{Pos, Token, TokenJoin, Tokenizer};
use crate::error::{Error, Result};

/// Runs `mecab` once per sentence. Executable and dictionary locations come
/// from configuration only.
#[derive(Debug, Clone)]
pub struct MecabTokenizer {
    pub executable: PathBuf,
    pub dicdir: Option<PathBuf>,
    pub userdic: Option<PathBuf>,
}

impl MecabTokenizer {
    pub fn new(executable: impl Into<PathBuf>) -> Self {
        MecabTokenizer {
            executable: executable.into(),
            dicdir: None,
            userdic: None,
        }
    }
}

impl Tokenizer for MecabTokenizer {
    fn name(&self) -> &str {
        "mecab"
    }

    fn join(&self) -> TokenJoin {
        TokenJoin::Concat
    }

    fn tokenize(&self, text: &str) -> Result<Vec<Token>> {
        let mut cmd = Command::new(&self.executable);
        if let Some(d) = &self.dicdir {
            cmd.arg("-d").arg(d);
        }
        if let Some(u) = &self.userdic {
            cmd.arg("-u").arg(u);
        }
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Tokenizer(format!("cannot start {}: {e}", self.executable.display())))?;
        {
            let stdin = child.stdin.as_mut().expect("stdin is piped");
            // MeCab reads one sentence per line.
            let line = text.replace(['\n', '\r'], " ");
            stdin
                .write_all(line.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"))
                .map_err(|e| Error::Tokenizer(e.to_string()))?;
        }
        let output = child
            .wait_with_output()
            .map_err(|e| Error::Tokenizer(e.to_string()))?;
        if !output.status.success() {
            return Err(Error::Tokenizer(format!(
                "mecab exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8(output.stdout)
            .map_err(|_| Error::Tokenizer("mecab produced non-UTF-8 output".into()))?;
        parse_mecab_output(&stdout)
    }
}

/// Parses MeCab's default output format (`surface<TAB>pos,subpos,...`, then `EOS`).
pub fn parse_mecab_output(output: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    for line in output.lines() {
        if line == "EOS" {
            break;
        }
        if line.is_empty() {
            continue;
        }
        let (surface, features) = line
            .split_once('\t')
            .ok_or_else(|| Error::Tokenizer(format!("malformed mecab line `{line}`")))?;
        let category = features.split(',').next().unwrap_or("");
        tokens.push(Token::new(surface, Pos::from_japanese(category)));
    }
    Ok(tokens)
}
