use serde::{Deserialize, Serialize};

use super::config::{Task, TaskConfig};
use super::network::Target;
use crate::corpora::{split, tag_inventory, ClassificationCorpus, SplitSpec, TaggedCorpus};
use crate::error::{Error, Result};
use crate::textprep::{PreprocessConfig, Side, Vocabulary};

/// One encoded training example; `ids` are the kept tokens, unpadded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub ids: Vec<usize>,
    pub target: Target,
}

/// Everything needed to train one task: resolved config, fitted
/// vocabulary, label names and the encoded partitions.
#[derive(Debug, Clone)]
pub struct PreparedTask {
    pub config: TaskConfig,
    pub preprocess: PreprocessConfig,
    pub vocab: Vocabulary,
    pub label_names: Vec<String>,
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
    pub test: Vec<Example>,
    /// Training token lists, kept for pretrained-vector coverage reports.
    pub train_tokens: Vec<Vec<String>>,
}

/// Tokens that survive truncation to `cfg.max_len`.
pub fn kept_window<'a, T>(tokens: &'a [T], cfg: &PreprocessConfig) -> &'a [T] {
    if tokens.len() <= cfg.max_len {
        return tokens;
    }
    match cfg.truncation {
        Side::Pre => &tokens[tokens.len() - cfg.max_len..],
        Side::Post => &tokens[..cfg.max_len],
    }
}

/// Tokenize, truncate and map to ids. Returns the kept tokens and ids.
pub fn encode_text(
    text: &str,
    vocab: &Vocabulary,
    cfg: &PreprocessConfig,
) -> (Vec<String>, Vec<usize>) {
    let tokens = cfg.tokens(text);
    let kept = kept_window(&tokens, cfg).to_vec();
    let ids = vocab.encode(&kept);
    (kept, ids)
}

/// Re-tokenize a pre-split tagged sentence with `cfg`. A source token that
/// breaks into several pieces tags the extra pieces `I-<class>`; tokens
/// that vanish (pure punctuation) are dropped with their tag.
pub fn retokenize(
    tokens: &[String],
    tags: &[String],
    cfg: &PreprocessConfig,
) -> (Vec<String>, Vec<String>) {
    let mut out_tokens = Vec::with_capacity(tokens.len());
    let mut out_tags = Vec::with_capacity(tags.len());
    for (tok, tag) in tokens.iter().zip(tags) {
        let pieces = cfg.tokens(tok);
        for (k, piece) in pieces.into_iter().enumerate() {
            let t = match (k, tag.strip_prefix("B-")) {
                (0, _) | (_, None) => tag.clone(),
                (_, Some(class)) => format!("I-{class}"),
            };
            out_tokens.push(piece);
            out_tags.push(t);
        }
    }
    (out_tokens, out_tags)
}

fn split_fraction(fraction: f64) -> f64 {
    1.0 - fraction
}

/// Split, fit the vocabulary on the training part and encode every
/// partition of a classification corpus.
pub fn prepare_classification(
    corpus: &ClassificationCorpus,
    cfg: &TaskConfig,
) -> Result<PreparedTask> {
    cfg.validate()?;
    if cfg.task == Task::Ner {
        return Err(Error::Config("ner needs a tagged corpus".into()));
    }
    if cfg.task == Task::Sentiment && corpus.label_names.len() != 2 {
        return Err(Error::Config(format!(
            "sentiment needs exactly two labels, corpus has {}",
            corpus.label_names.len()
        )));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyInput("classification corpus"));
    }
    let (pool, test) = match cfg.test_fraction {
        Some(f) => {
            let (a, b) = split(corpus, &SplitSpec::new(split_fraction(f), cfg.seed)?)?;
            (a, Some(b))
        }
        None => (corpus.clone(), None),
    };
    let (train, validation) = split(
        &pool,
        &SplitSpec::new(split_fraction(cfg.validation_fraction), cfg.seed)?,
    )?;

    let probe = cfg.tokenizer();
    let train_tokens: Vec<Vec<String>> = train.texts.iter().map(|t| probe.tokens(t)).collect();
    let mut config = cfg.clone();
    if config.max_len.is_none() {
        config.max_len = Some(train_tokens.iter().map(Vec::len).max().unwrap_or(1).max(1));
    }
    let preprocess = config.preprocess()?;
    let vocab = Vocabulary::fit(&train_tokens, config.vocab_cap)?;

    let encode = |c: &ClassificationCorpus| -> Vec<Example> {
        c.texts
            .iter()
            .zip(&c.labels)
            .map(|(text, &label)| Example {
                ids: encode_text(text, &vocab, &preprocess).1,
                target: Target::Class(label),
            })
            .collect()
    };
    Ok(PreparedTask {
        train: encode(&train),
        validation: encode(&validation),
        test: test.as_ref().map(encode).unwrap_or_default(),
        label_names: corpus.label_names.clone(),
        config,
        preprocess,
        vocab,
        train_tokens,
    })
}

/// Re-tokenize, split, resolve `max_len` to the longest training sentence
/// when unset, fit the vocabulary and encode a tagged corpus.
pub fn prepare_tagged(corpus: &TaggedCorpus, cfg: &TaskConfig) -> Result<PreparedTask> {
    cfg.validate()?;
    if cfg.task != Task::Ner {
        return Err(Error::Config(format!(
            "{} needs a classification corpus",
            cfg.task
        )));
    }
    let probe = cfg.tokenizer();
    let mut sentences = Vec::with_capacity(corpus.len());
    let mut tag_sequences = Vec::with_capacity(corpus.len());
    for (s, t) in corpus.sentences.iter().zip(&corpus.tag_sequences) {
        let (toks, tags) = retokenize(s, t, &probe);
        if !toks.is_empty() {
            sentences.push(toks);
            tag_sequences.push(tags);
        }
    }
    let retokenized = TaggedCorpus::new(sentences, tag_sequences)?;
    if retokenized.is_empty() {
        return Err(Error::EmptyInput("tagged corpus"));
    }
    let tag_names = tag_inventory(&retokenized.tag_sequences);
    let (train, validation) = split(
        &retokenized,
        &SplitSpec::new(split_fraction(cfg.validation_fraction), cfg.seed)?,
    )?;

    let mut config = cfg.clone();
    if config.max_len.is_none() {
        config.max_len = Some(
            train
                .sentences
                .iter()
                .map(Vec::len)
                .max()
                .unwrap_or(1)
                .max(1),
        );
    }
    let preprocess = config.preprocess()?;
    let vocab = Vocabulary::fit(&train.sentences, config.vocab_cap)?;

    let encode = |c: &TaggedCorpus| -> Vec<Example> {
        c.sentences
            .iter()
            .zip(&c.tag_sequences)
            .map(|(toks, tags)| {
                let toks = kept_window(toks, &preprocess);
                let tags = kept_window(tags, &preprocess);
                Example {
                    ids: vocab.encode(toks),
                    target: Target::Tags(
                        tags.iter()
                            .map(|t| {
                                tag_names
                                    .iter()
                                    .position(|n| n == t)
                                    .expect("inventory covers corpus")
                            })
                            .collect(),
                    ),
                }
            })
            .collect()
    };
    Ok(PreparedTask {
        train: encode(&train),
        validation: encode(&validation),
        test: Vec::new(),
        train_tokens: train.sentences.clone(),
        label_names: tag_names,
        config,
        preprocess,
        vocab,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpora::DatasetId;
    use crate::taskmodels::config::Arch;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn window_respects_truncation_side() {
        let mut cfg = PreprocessConfig::new(2).unwrap();
        assert_eq!(kept_window(&[1, 2, 3], &cfg), &[2, 3]);
        cfg.truncation = Side::Post;
        assert_eq!(kept_window(&[1, 2, 3], &cfg), &[1, 2]);
        assert_eq!(kept_window(&[1], &cfg), &[1]);
    }

    #[test]
    fn retokenize_splits_and_drops() {
        let cfg = PreprocessConfig {
            lowercase: false,
            ..PreprocessConfig::default()
        };
        let (t, g) = retokenize(
            &strings(&["New-York", "rally", ".", "U.S."]),
            &strings(&["B-geo", "O", "O", "B-org"]),
            &cfg,
        );
        assert_eq!(t, strings(&["New", "York", "rally", "U", "S"]));
        assert_eq!(g, strings(&["B-geo", "I-geo", "O", "B-org", "I-org"]));
    }

    #[test]
    fn classification_partitions() {
        let texts: Vec<String> = (0..40)
            .map(|i| format!("word{} common text", i % 7))
            .collect();
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let corpus = ClassificationCorpus::new(
            texts,
            labels,
            strings(&["negative", "positive"]),
            DatasetId::Custom,
        )
        .unwrap();
        let cfg = TaskConfig::with_arch(Task::Sentiment, Arch::Snn);
        let p = prepare_classification(&corpus, &cfg).unwrap();
        assert_eq!(p.test.len(), 10);
        assert_eq!(p.train.len() + p.validation.len(), 30);
        assert_eq!(p.validation.len(), 6);
        assert!(p.train.iter().all(|e| e.ids.len() == 3));
    }

    #[test]
    fn ner_resolves_max_len() {
        let sentences = vec![
            strings(&["George", "went", "to", "London"]),
            strings(&["Paris", "is", "big"]),
            strings(&["Sunday", "morning"]),
            strings(&["Bob", "left"]),
        ];
        let tags = vec![
            strings(&["B-per", "O", "O", "B-geo"]),
            strings(&["B-geo", "O", "O"]),
            strings(&["B-tim", "I-tim"]),
            strings(&["B-per", "O"]),
        ];
        let corpus = TaggedCorpus::new(sentences, tags).unwrap();
        let cfg = TaskConfig {
            validation_fraction: 0.25,
            ..TaskConfig::for_task(Task::Ner)
        };
        let p = prepare_tagged(&corpus, &cfg).unwrap();
        let longest = p.train.iter().map(|e| e.ids.len()).max().unwrap();
        assert_eq!(p.config.max_len, Some(longest));
        assert_eq!(p.label_names[0], "O");
        assert!(p.vocab.get("George").is_some() || p.vocab.get("Paris").is_some());
    }

    #[test]
    fn wrong_corpus_kind() {
        let corpus = TaggedCorpus::new(vec![strings(&["a"])], vec![strings(&["O"])]).unwrap();
        assert!(prepare_tagged(&corpus, &TaskConfig::for_task(Task::Emotion)).is_err());
    }
}
