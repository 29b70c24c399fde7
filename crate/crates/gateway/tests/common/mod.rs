#![allow(dead_code)]

use nlu_core::engine::Engine;
use nlu_core::synthetic;
use nlu_core::taskmodels::{
    fit, prepare_classification, prepare_tagged, PreparedTask, Task, TaskConfig, TrainedTask,
};
use nlu_core::Execution;

/// Default configuration for `task`, with GloVe off (no vector file here)
/// and a short run.
pub fn config(task: Task, epochs: usize) -> TaskConfig {
    TaskConfig {
        use_glove: false,
        epochs,
        ..TaskConfig::for_task(task)
    }
}

/// Large enough that sentiment's 128 batch fits its training split.
pub fn synthetic_prepared(task: Task, cfg: &TaskConfig) -> PreparedTask {
    let prepared = match task {
        Task::Sentiment => prepare_classification(&synthetic::sentiment_corpus(400, 1), cfg),
        Task::Emotion => prepare_classification(&synthetic::emotion_corpus(140, 2), cfg),
        Task::Intent => prepare_classification(&synthetic::intent_corpus(100, 3), cfg),
        Task::Ner => prepare_tagged(&synthetic::ner_corpus(120, 4), cfg),
    };
    prepared.expect("synthetic corpus prepares")
}

pub fn train_synthetic(task: Task, epochs: usize) -> TrainedTask {
    let cfg = config(task, epochs);
    fit(
        &synthetic_prepared(task, &cfg),
        None,
        Execution::default(),
        |_| {},
    )
    .expect("synthetic training")
}

/// Enough epochs for each head to learn its synthetic cue words.
pub fn fixture_epochs(task: Task) -> usize {
    match task {
        Task::Sentiment => 20,
        _ => 15,
    }
}

/// Four bundles trained on the synthetic corpora.
pub fn synthetic_engine() -> Engine {
    Engine::new(
        Task::ALL
            .iter()
            .map(|&t| train_synthetic(t, fixture_epochs(t)).bundle),
    )
    .expect("four bundles")
}
