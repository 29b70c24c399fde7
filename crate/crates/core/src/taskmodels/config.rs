use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::CellKind;
use crate::textprep::{PreprocessConfig, Side, StemMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Sentiment,
    Emotion,
    Intent,
    Ner,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Sentiment, Task::Emotion, Task::Intent, Task::Ner];

    pub fn name(self) -> &'static str {
        match self {
            Task::Sentiment => "sentiment",
            Task::Emotion => "emotion",
            Task::Intent => "intent",
            Task::Ner => "ner",
        }
    }

    pub fn legal_archs(self) -> &'static [Arch] {
        match self {
            Task::Sentiment => &[Arch::Snn, Arch::Lstm, Arch::Gru],
            _ => &[Arch::Bilstm, Arch::Bigru],
        }
    }

    pub fn default_arch(self) -> Arch {
        match self {
            Task::Sentiment => Arch::Lstm,
            _ => Arch::Bilstm,
        }
    }

    pub fn is_sequence_labeling(self) -> bool {
        self == Task::Ner
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown task `{s}` (expected sentiment, emotion, intent or ner)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Snn,
    Lstm,
    Gru,
    Bilstm,
    Bigru,
}

impl Arch {
    pub const ALL: [Arch; 5] = [Arch::Snn, Arch::Lstm, Arch::Gru, Arch::Bilstm, Arch::Bigru];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Snn => "snn",
            Arch::Lstm => "lstm",
            Arch::Gru => "gru",
            Arch::Bilstm => "bilstm",
            Arch::Bigru => "bigru",
        }
    }

    pub fn cell(self) -> Option<CellKind> {
        match self {
            Arch::Snn => None,
            Arch::Lstm | Arch::Bilstm => Some(CellKind::Lstm),
            Arch::Gru | Arch::Bigru => Some(CellKind::Gru),
        }
    }

    pub fn is_bidirectional(self) -> bool {
        matches!(self, Arch::Bilstm | Arch::Bigru)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown architecture `{s}` (expected snn, lstm, gru, bilstm or bigru)"
                ))
            })
    }
}

/// Hyperparameters and preprocessing for one task model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub task: Task,
    pub arch: Arch,
    pub batch_size: usize,
    pub epochs: usize,
    /// Fraction of the training pool held out for per-epoch validation.
    pub validation_fraction: f64,
    /// Fraction split off first as a test set (sentiment only by default).
    pub test_fraction: Option<f64>,
    /// `None` resolves to the longest training sequence.
    pub max_len: Option<usize>,
    pub vocab_cap: Option<usize>,
    pub embed_dim: usize,
    pub units: usize,
    /// Width of the relu layer before the output, if any.
    pub hidden_units: Option<usize>,
    pub spatial_dropout: f64,
    pub use_glove: bool,
    pub learning_rate: f64,
    pub lowercase: bool,
    pub stem: StemMode,
    pub seed: u64,
}

impl TaskConfig {
    pub fn for_task(task: Task) -> Self {
        Self::with_arch(task, task.default_arch())
    }

    pub fn with_arch(task: Task, arch: Arch) -> Self {
        let base = TaskConfig {
            task,
            arch,
            batch_size: 32,
            epochs: 100,
            validation_fraction: 0.2,
            test_fraction: None,
            max_len: None,
            vocab_cap: None,
            embed_dim: 100,
            units: 128,
            hidden_units: Some(64),
            spatial_dropout: 0.0,
            use_glove: false,
            learning_rate: 0.001,
            lowercase: true,
            stem: StemMode::SuffixStemmer,
            seed: 42,
        };
        match task {
            Task::Sentiment => TaskConfig {
                batch_size: 128,
                epochs: 20,
                test_fraction: Some(0.25),
                max_len: Some(200),
                vocab_cap: Some(20000),
                hidden_units: (arch == Arch::Snn).then_some(64),
                use_glove: true,
                stem: StemMode::None,
                ..base
            },
            Task::Emotion => TaskConfig {
                max_len: Some(80),
                ..base
            },
            Task::Intent => TaskConfig {
                max_len: Some(40),
                ..base
            },
            Task::Ner => TaskConfig {
                epochs: 3,
                validation_fraction: 0.1,
                embed_dim: 50,
                units: 100,
                hidden_units: None,
                spatial_dropout: 0.1,
                lowercase: false,
                stem: StemMode::None,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.task.legal_archs().contains(&self.arch) {
            let legal: Vec<&str> = self.task.legal_archs().iter().map(|a| a.name()).collect();
            return Err(Error::Config(format!(
                "architecture {} is not available for {} (expected one of {})",
                self.arch,
                self.task,
                legal.join(", ")
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.embed_dim == 0 || self.units == 0 || self.hidden_units == Some(0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.max_len == Some(0) {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        if self.vocab_cap.is_some_and(|c| c < 3) {
            return Err(Error::Config(
                "vocab_cap must leave room for at least one word".into(),
            ));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if let Some(t) = self.test_fraction {
            if !(0.0 < t && t < 1.0) {
                return Err(Error::Config(format!("test_fraction {t} outside (0, 1)")));
            }
        }
        if !(0.0..1.0).contains(&self.spatial_dropout) {
            return Err(Error::Config(format!(
                "spatial_dropout {} outside [0, 1)",
                self.spatial_dropout
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Preprocessing for this task; `max_len` must already be resolved.
    pub fn preprocess(&self) -> Result<PreprocessConfig> {
        let max_len = self.max_len.ok_or_else(|| {
            Error::Config("max_len has not been resolved from the training data".into())
        })?;
        let cfg = self.preprocess_with(max_len);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same preprocessing without a length limit.
    pub(crate) fn tokenizer(&self) -> PreprocessConfig {
        self.preprocess_with(usize::MAX)
    }

    fn preprocess_with(&self, max_len: usize) -> PreprocessConfig {
        let (padding, truncation) = if self.task.is_sequence_labeling() {
            (Side::Post, Side::Post)
        } else {
            (Side::Pre, Side::Pre)
        };
        PreprocessConfig {
            lowercase: self.lowercase,
            strip_punctuation: true,
            stem: self.stem,
            max_len,
            padding,
            truncation,
        }
    }
}
