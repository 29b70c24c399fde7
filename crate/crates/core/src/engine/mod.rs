//! Joint four-head inference and bundle persistence.

mod persist;

pub use persist::{
    load_bundle, save_bundle, BundleManifest, LayerEntry, MANIFEST_FILE, SUPPORTED_VERSIONS,
    WEIGHTS_FILE,
};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskmodels::{
    EmotionPrediction, IntentScore, ModelBundle, SentimentPrediction, TaggedToken, Task,
};

pub const TOP_INTENTS: usize = 3;

/// Everything the four heads say about one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub text: String,
    pub sentiment: SentimentPrediction,
    pub emotion: EmotionPrediction,
    /// Up to three intents, most probable first.
    pub intent: Vec<IntentScore>,
    /// Named entities only, in input order.
    pub entities: Vec<TaggedToken>,
    /// Bundle fingerprint per task name.
    pub model_versions: BTreeMap<String, String>,
}

/// Four loaded bundles, one per task. Immutable once built.
#[derive(Debug, Clone)]
pub struct Engine {
    bundles: BTreeMap<Task, ModelBundle>,
    versions: BTreeMap<String, String>,
}

impl Engine {
    /// Requires exactly one bundle per task.
    pub fn new(bundles: impl IntoIterator<Item = ModelBundle>) -> Result<Engine> {
        let mut map = BTreeMap::new();
        for b in bundles {
            let task = b.task();
            if map.insert(task, b).is_some() {
                return Err(Error::Config(format!("two bundles for task {task}")));
            }
        }
        let missing: Vec<String> = Task::ALL
            .iter()
            .filter(|t| !map.contains_key(t))
            .map(|t| t.name().to_owned())
            .collect();
        if !missing.is_empty() {
            return Err(Error::NotReady { missing });
        }
        let versions = map
            .iter()
            .map(|(t, b)| (t.name().to_owned(), b.fingerprint()))
            .collect();
        Ok(Engine {
            bundles: map,
            versions,
        })
    }

    /// Load `<dir>/<task>/` for every task.
    pub fn load(dir: impl AsRef<Path>) -> Result<Engine> {
        let dir = dir.as_ref();
        let missing: Vec<String> = Task::ALL
            .iter()
            .filter(|t| !dir.join(t.name()).join(MANIFEST_FILE).is_file())
            .map(|t| t.name().to_owned())
            .collect();
        if !missing.is_empty() {
            return Err(Error::NotReady { missing });
        }
        let bundles = Task::ALL
            .iter()
            .map(|t| load_bundle(dir.join(t.name())))
            .collect::<Result<Vec<_>>>()?;
        Engine::new(bundles)
    }

    pub fn bundle(&self, task: Task) -> &ModelBundle {
        &self.bundles[&task]
    }

    pub fn model_versions(&self) -> &BTreeMap<String, String> {
        &self.versions
    }

    /// Label inventory per task name.
    pub fn labels(&self) -> BTreeMap<String, Vec<String>> {
        self.bundles
            .iter()
            .map(|(t, b)| (t.name().to_owned(), b.label_names.clone()))
            .collect()
    }

    pub fn analyze(&self, text: &str) -> Result<AnalysisRecord> {
        if text.trim().is_empty() {
            return Err(Error::Validation("text is empty".into()));
        }
        let intents = self.bundle(Task::Intent);
        let k = TOP_INTENTS.min(intents.label_names.len());
        let entities = self
            .bundle(Task::Ner)
            .tag_entities(text)?
            .into_iter()
            .filter(|t| t.tag != "O")
            .collect();
        Ok(AnalysisRecord {
            text: text.to_owned(),
            sentiment: self.bundle(Task::Sentiment).predict_sentiment(text)?,
            emotion: self.bundle(Task::Emotion).predict_emotion(text)?,
            intent: intents.get_intent(text, k)?,
            entities,
            model_versions: self.versions.clone(),
        })
    }
}
