//! Per-task networks: configuration, data preparation, training,
//! evaluation and the four prediction heads.

mod bundle;
mod config;
mod data;
mod network;
mod train;

use std::path::Path;

pub use bundle::{
    sentiment_class, EmotionPrediction, IntentScore, ModelBundle, SentimentPrediction, TaggedToken,
    FORMAT_VERSION,
};
pub use config::{Arch, Task, TaskConfig};
pub use data::{
    encode_text, kept_window, prepare_classification, prepare_tagged, retokenize, Example,
    PreparedTask,
};
pub use network::{
    argmax, build_model, Encoder, Gradients, Network, Tally, Target, EMBEDDING_INIT_SCALE,
};
pub use train::{
    batch_gradients, evaluate, train, train_with_control, train_with_progress, EpochRecord,
    Evaluation, TrainOutcome, TrainingHistory, CHUNK,
};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::textprep::load_glove;

/// Result of [`fit`]: the best checkpoint as a bundle plus the run record.
#[derive(Debug, Clone)]
pub struct TrainedTask {
    pub bundle: ModelBundle,
    pub outcome: TrainOutcome,
    /// Held-out test evaluation of the best checkpoint, when a test split exists.
    pub test: Option<Evaluation>,
    /// Fraction of vocabulary words found in the pretrained vector file.
    pub glove_coverage: Option<f64>,
}

/// Build, train and package a prepared task.
pub fn fit(
    prepared: &PreparedTask,
    glove: Option<&Path>,
    exec: Execution,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainedTask> {
    let cfg = &prepared.config;
    let (table, coverage) = match (cfg.use_glove, glove) {
        (true, Some(path)) => {
            let loaded = load_glove(path, &prepared.vocab, cfg.embed_dim, cfg.seed)?;
            (Some(loaded.table), Some(loaded.coverage))
        }
        (true, None) => {
            return Err(Error::Config(
                "this configuration uses pretrained word vectors; supply a vector file or disable use_glove".into(),
            ))
        }
        (false, _) => (None, None),
    };
    let network = build_model(
        cfg,
        prepared.vocab.table_size(),
        prepared.label_names.len(),
        table,
    )?;
    let outcome = train_with_progress(
        network,
        &prepared.train,
        &prepared.validation,
        cfg,
        exec,
        on_epoch,
    )?;
    let bundle = ModelBundle::new(
        cfg.clone(),
        prepared.preprocess.clone(),
        prepared.vocab.clone(),
        prepared.label_names.clone(),
        outcome.best.clone(),
    )?;
    let test = if prepared.test.is_empty() {
        None
    } else {
        Some(evaluate(&bundle.network, &prepared.test, exec)?)
    };
    Ok(TrainedTask {
        bundle,
        outcome,
        test,
        glove_coverage: coverage,
    })
}
