use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Task, TaskConfig};
use super::data::{encode_text, kept_window, Example};
use super::network::{argmax, Network, Target};
use super::train::{evaluate, Evaluation};
use crate::corpora::{ClassificationCorpus, TaggedCorpus};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::textprep::{PreprocessConfig, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;

/// A trained task model with everything needed to run it on raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: TaskConfig,
    pub preprocess: PreprocessConfig,
    pub vocab: Vocabulary,
    pub label_names: Vec<String>,
    pub network: Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentPrediction {
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionPrediction {
    pub label: String,
    /// Class-ordered `(emotion, probability)` pairs; a JSON object on the
    /// wire, keys in class order.
    #[serde(with = "ordered_map")]
    pub scores: Vec<(String, f64)>,
}

mod ordered_map {
    use std::fmt;

    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(pairs: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(pairs.len()))?;
        for (k, v) in pairs {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }

    struct PairsVisitor;

    impl<'de> Visitor<'de> for PairsVisitor {
        type Value = Vec<(String, f64)>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map of label to probability")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some(entry) = access.next_entry()? {
                out.push(entry);
            }
            Ok(out)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, f64)>, D::Error> {
        d.deserialize_map(PairsVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentScore {
    pub name: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: String,
    pub tag: String,
}

impl ModelBundle {
    pub fn new(
        config: TaskConfig,
        preprocess: PreprocessConfig,
        vocab: Vocabulary,
        label_names: Vec<String>,
        network: Network,
    ) -> Result<Self> {
        config.validate()?;
        preprocess.validate()?;
        if label_names.is_empty() {
            return Err(Error::Validation("bundle has no label names".into()));
        }
        if network.embedding.vocab_size() != vocab.table_size() {
            return Err(Error::Validation(format!(
                "embedding has {} rows but the vocabulary needs {}",
                network.embedding.vocab_size(),
                vocab.table_size()
            )));
        }
        if network.num_labels() != label_names.len() {
            return Err(Error::Validation(format!(
                "network head scores {} labels, bundle names {}",
                network.num_labels(),
                label_names.len()
            )));
        }
        if network.sequence_output != config.task.is_sequence_labeling() {
            return Err(Error::Validation(format!(
                "network head does not fit task {}",
                config.task
            )));
        }
        Ok(ModelBundle {
            config,
            preprocess,
            vocab,
            label_names,
            network,
        })
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    /// Same bundle with every weight rounded through `f32`, the form that
    /// is persisted and served.
    pub fn to_f32_precision(&self) -> ModelBundle {
        ModelBundle {
            network: self.network.to_f32_precision(),
            ..self.clone()
        }
    }

    /// Short hex digest of task, labels, vocabulary and `f32` weights.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.config.task.name());
        h.update(self.config.arch.name());
        for l in &self.label_names {
            h.update(l.as_bytes());
            h.update([0]);
        }
        for w in self.vocab.words() {
            h.update(w.as_bytes());
            h.update([0]);
        }
        for (name, t) in self.network.named_tensors() {
            h.update(name.as_bytes());
            for &v in t.data() {
                h.update((v as f32).to_le_bytes());
            }
        }
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn expect_task(&self, want: Task) -> Result<()> {
        if self.task() != want {
            return Err(Error::Usage(format!(
                "this is a {} bundle, not {want}",
                self.task()
            )));
        }
        Ok(())
    }

    fn class_probabilities(&self, text: &str) -> Result<Vec<f64>> {
        let (_, ids) = encode_text(text, &self.vocab, &self.preprocess);
        Ok(self.network.predict_ids(&ids)?.into_data())
    }

    /// Positive iff the sigmoid score is at least 0.5.
    pub fn predict_sentiment(&self, text: &str) -> Result<SentimentPrediction> {
        self.expect_task(Task::Sentiment)?;
        let score = self.class_probabilities(text)?[0];
        Ok(SentimentPrediction {
            label: self.label_names[sentiment_class(score)].clone(),
            score,
        })
    }

    pub fn predict_emotion(&self, text: &str) -> Result<EmotionPrediction> {
        self.expect_task(Task::Emotion)?;
        let probs = self.class_probabilities(text)?;
        Ok(EmotionPrediction {
            label: self.label_names[argmax(&probs)].clone(),
            scores: self.label_names.iter().cloned().zip(probs).collect(),
        })
    }

    /// Top `k` intents by descending probability.
    pub fn get_intent(&self, text: &str, k: usize) -> Result<Vec<IntentScore>> {
        self.expect_task(Task::Intent)?;
        if k == 0 || k > self.label_names.len() {
            return Err(Error::Usage(format!(
                "k must be in 1..={}, got {k}",
                self.label_names.len()
            )));
        }
        let probs = self.class_probabilities(text)?;
        let mut ranked: Vec<usize> = (0..probs.len()).collect();
        ranked.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        Ok(ranked
            .into_iter()
            .take(k)
            .map(|i| IntentScore {
                name: self.label_names[i].clone(),
                p: probs[i],
            })
            .collect())
    }

    /// One tag per kept token, `O` included.
    pub fn tag_entities(&self, text: &str) -> Result<Vec<TaggedToken>> {
        self.expect_task(Task::Ner)?;
        let (tokens, ids) = encode_text(text, &self.vocab, &self.preprocess);
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let probs = self.network.predict_ids(&ids)?;
        Ok(tokens
            .into_iter()
            .enumerate()
            .map(|(r, token)| TaggedToken {
                token,
                tag: self.label_names[argmax(probs.row(r))].clone(),
            })
            .collect())
    }

    fn check_labels(&self, names: &[String]) -> Result<()> {
        if names != self.label_names.as_slice() {
            return Err(Error::Config(format!(
                "label space mismatch: bundle has {} labels {:?}, data has {} labels {:?}",
                self.label_names.len(),
                preview(&self.label_names),
                names.len(),
                preview(names)
            )));
        }
        Ok(())
    }

    /// Encode `corpus` with this bundle's preprocessing and evaluate.
    pub fn evaluate_classification(
        &self,
        corpus: &ClassificationCorpus,
        exec: Execution,
    ) -> Result<Evaluation> {
        if self.task().is_sequence_labeling() {
            return Err(Error::Config(
                "a tagging bundle needs a tagged corpus".into(),
            ));
        }
        self.check_labels(&corpus.label_names)?;
        let examples: Vec<Example> = corpus
            .texts
            .iter()
            .zip(&corpus.labels)
            .map(|(t, &l)| Example {
                ids: encode_text(t, &self.vocab, &self.preprocess).1,
                target: Target::Class(l),
            })
            .collect();
        evaluate(&self.network, &examples, exec)
    }

    /// Re-tokenize and evaluate a tagged corpus. Every corpus tag must be in
    /// the bundle's inventory.
    pub fn evaluate_tagged(&self, corpus: &TaggedCorpus, exec: Execution) -> Result<Evaluation> {
        if !self.task().is_sequence_labeling() {
            return Err(Error::Config(
                "a classification bundle needs a classification corpus".into(),
            ));
        }
        let tokenizer = self.config.tokenizer();
        let mut examples = Vec::with_capacity(corpus.len());
        for (s, t) in corpus.sentences.iter().zip(&corpus.tag_sequences) {
            let (toks, tags) = super::data::retokenize(s, t, &tokenizer);
            if toks.is_empty() {
                continue;
            }
            let toks = kept_window(&toks, &self.preprocess);
            let tags = kept_window(&tags, &self.preprocess);
            let ids = tags
                .iter()
                .map(|tag| {
                    self.label_names
                        .iter()
                        .position(|n| n == tag)
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "label space mismatch: tag `{tag}` is unknown to the bundle"
                            ))
                        })
                })
                .collect::<Result<Vec<usize>>>()?;
            examples.push(Example {
                ids: self.vocab.encode(toks),
                target: Target::Tags(ids),
            });
        }
        evaluate(&self.network, &examples, exec)
    }
}

/// `1` (positive) when `score >= 0.5`.
pub fn sentiment_class(score: f64) -> usize {
    usize::from(score >= 0.5)
}

fn preview(names: &[String]) -> Vec<&str> {
    names.iter().take(5).map(String::as_str).collect()
}
