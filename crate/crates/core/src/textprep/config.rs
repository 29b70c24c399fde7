use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StemMode {
    None,
    SuffixStemmer,
}

/// Which end of a sequence receives padding or loses tokens on truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub stem: StemMode,
    pub max_len: usize,
    pub padding: Side,
    pub truncation: Side,
}

impl PreprocessConfig {
    pub fn new(max_len: usize) -> Result<Self> {
        let cfg = PreprocessConfig {
            max_len,
            ..PreprocessConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stem(mut self, stem: StemMode) -> Self {
        self.stem = stem;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        Ok(())
    }

    /// Tokenize and, if configured, stem.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let toks = super::tokenize(text, self);
        match self.stem {
            StemMode::None => toks,
            StemMode::SuffixStemmer => toks.into_iter().map(|t| super::stem(&t)).collect(),
        }
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lowercase: true,
            strip_punctuation: true,
            stem: StemMode::None,
            max_len: 100,
            padding: Side::Pre,
            truncation: Side::Pre,
        }
    }
}
